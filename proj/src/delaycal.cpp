#include "uwb/delaycal.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "uwb/errors.hpp"

namespace uwb::delaycal {

double DelaySolution::delay(int tag_id) const {
  auto it = delays_ns.find(tag_id);
  if (it == delays_ns.end())
    raise(ErrorCode::config_error,
          "no delay solution for tag " + std::to_string(tag_id));
  return it->second;
}

DelayProblem build_problem(const sim::Dataset& dataset) {
  DelayProblem p;
  std::unordered_map<int, int> dense;
  std::map<std::pair<int, int>, int> pair_index;

  for (const auto& tx : dataset.transactions) {
    if (!tx.has_truth())
      raise(ErrorCode::missing_truth,
            "transaction without truth range (t=" +
                std::to_string(tx.timestamp_s) + ")");
    for (int id : {tx.initiator_id, tx.responder_id}) {
      if (dense.emplace(id, static_cast<int>(p.tag_ids.size())).second)
        p.tag_ids.push_back(id);
    }
    DelayProblem::Record rec;
    rec.i = dense[tx.initiator_id];
    rec.j = dense[tx.responder_id];
    rec.K = tx.intervals.clock_ratio();
    const double t_f = tx.truth_range_m / sim::kSpeedOfLight;
    rec.c0_ns =
        0.5 * (tx.intervals.dt41 - rec.K * tx.intervals.dt32) - t_f;
    const std::pair<int, int> key{tx.initiator_id, tx.responder_id};
    auto [it, inserted] =
        pair_index.emplace(key, static_cast<int>(p.pairs.size()));
    if (inserted) p.pairs.push_back(key);
    rec.pair_index = it->second;
    p.records.push_back(rec);
  }

  if (p.tag_ids.size() < 3)
    raise(ErrorCode::insufficient_tags,
          "antenna-delay calibration needs >= 3 distinct tags, got " +
              std::to_string(p.tag_ids.size()));
  return p;
}

namespace {

double record_residual(const DelayProblem::Record& r,
                       std::span<const double> d) {
  return 0.5 * (d[static_cast<std::size_t>(r.i)] +
                r.K * d[static_cast<std::size_t>(r.j)]) +
         r.c0_ns;
}

// Weighted normal equations solve; w == nullptr means unit weights.
Eigen::VectorXd weighted_solve(const DelayProblem& p,
                               const std::vector<double>* w) {
  const auto n = static_cast<Eigen::Index>(p.tag_count());
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd atb = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < p.records.size(); ++k) {
    const auto& r = p.records[k];
    const double wk = w ? (*w)[k] : 1.0;
    const double ai = 0.5;
    const double aj = 0.5 * r.K;
    ata(r.i, r.i) += wk * ai * ai;
    ata(r.j, r.j) += wk * aj * aj;
    ata(r.i, r.j) += wk * ai * aj;
    ata(r.j, r.i) += wk * ai * aj;
    atb(r.i) -= wk * ai * r.c0_ns;
    atb(r.j) -= wk * aj * r.c0_ns;
  }
  return ata.ldlt().solve(atb);
}

double design_condition(const DelayProblem& p) {
  const auto n = static_cast<Eigen::Index>(p.tag_count());
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(n, n);
  for (const auto& r : p.records) {
    const double ai = 0.5;
    const double aj = 0.5 * r.K;
    ata(r.i, r.i) += ai * ai;
    ata(r.j, r.j) += aj * aj;
    ata(r.i, r.j) += ai * aj;
    ata(r.j, r.i) += ai * aj;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ata);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(hi / lo);  // cond of the design matrix, not its Gram
}

std::vector<PairResidualStats> pair_stats(const DelayProblem& p,
                                          std::span<const double> d,
                                          double bin_ns) {
  std::vector<PairResidualStats> stats(p.pairs.size());
  std::vector<std::map<long long, std::size_t>> hist(p.pairs.size());
  std::vector<double> sum(p.pairs.size(), 0.0), sq(p.pairs.size(), 0.0);
  for (const auto& r : p.records) {
    const double e = record_residual(r, d);
    auto& s = stats[static_cast<std::size_t>(r.pair_index)];
    ++s.count;
    sum[static_cast<std::size_t>(r.pair_index)] += e;
    sq[static_cast<std::size_t>(r.pair_index)] += e * e;
    const auto bin = static_cast<long long>(std::llround(e / bin_ns));
    ++hist[static_cast<std::size_t>(r.pair_index)][bin];
  }
  for (std::size_t q = 0; q < stats.size(); ++q) {
    auto& s = stats[q];
    s.initiator_id = p.pairs[q].first;
    s.responder_id = p.pairs[q].second;
    if (s.count == 0) continue;
    s.mean_ns = sum[q] / static_cast<double>(s.count);
    const double var =
        std::max(0.0, sq[q] / static_cast<double>(s.count) - s.mean_ns * s.mean_ns);
    s.std_ns = std::sqrt(var);
    long long best_bin = 0;
    std::size_t best_count = 0;
    for (const auto& [bin, cnt] : hist[q]) {
      if (cnt > best_count) {
        best_count = cnt;
        best_bin = bin;
      }
    }
    s.mode_bin_center_ns = static_cast<double>(best_bin) * bin_ns;
  }
  return stats;
}

}  // namespace

double total_cost(const DelayProblem& problem, std::span<const double> delays,
                  LossKind loss) {
  double cost = 0.0;
  for (const auto& r : problem.records) {
    const double e = record_residual(r, delays);
    cost += (loss == LossKind::l2) ? 0.5 * e * e : std::log(0.5 * e * e + 1.0);
  }
  return cost;
}

DelaySolution solve(const DelayProblem& problem, const SolveOptions& opts) {
  if (problem.records.empty())
    raise(ErrorCode::empty_dataset, "delay solve: no records");

  const double cond = design_condition(problem);
  if (!(cond <= opts.condition_limit))
    raise(ErrorCode::rank_deficient,
          "delay problem condition number " + std::to_string(cond) +
              " exceeds limit (near-bipartite ranging graph?)");

  const std::size_t n = problem.tag_count();
  Eigen::VectorXd d = weighted_solve(problem, nullptr);  // L2 seed

  DelaySolution sol;
  sol.loss = opts.loss;
  sol.condition_number = cond;

  if (opts.loss == LossKind::cauchy) {
    std::vector<double> w(problem.records.size(), 1.0);
    std::vector<double> cur(d.data(), d.data() + n);
    double cur_cost = total_cost(problem, cur, LossKind::cauchy);
    sol.iteration_costs.push_back(cur_cost);
    bool converged = false;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
      for (std::size_t k = 0; k < problem.records.size(); ++k) {
        const double e = record_residual(problem.records[k], cur);
        w[k] = 1.0 / (0.5 * e * e + 1.0);
      }
      const Eigen::VectorXd prop = weighted_solve(problem, &w);
      // IRLS on a concave-in-e^2 loss is majorize-minimize, so the step
      // should already descend; backtrack toward the current iterate if
      // rounding says otherwise.
      Eigen::VectorXd cur_v =
          Eigen::Map<const Eigen::VectorXd>(cur.data(), static_cast<Eigen::Index>(n));
      Eigen::VectorXd step = prop - cur_v;
      double alpha = 1.0;
      std::vector<double> cand(n);
      double cand_cost = 0.0;
      bool descended = false;
      for (int bt = 0; bt < 30; ++bt) {
        Eigen::VectorXd c = cur_v + alpha * step;
        std::copy(c.data(), c.data() + n, cand.begin());
        cand_cost = total_cost(problem, cand, LossKind::cauchy);
        if (cand_cost <= cur_cost + 1e-12 * std::abs(cur_cost)) {
          descended = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!descended) {  // stuck at a stationary point up to rounding
        converged = true;
        ++it;
        break;
      }
      double max_change = 0.0;
      for (std::size_t q = 0; q < n; ++q)
        max_change = std::max(max_change, std::abs(cand[q] - cur[q]));
      cur = cand;
      cur_cost = std::min(cur_cost, cand_cost);
      sol.iteration_costs.push_back(cur_cost);
      if (max_change < opts.tol_ns) {
        converged = true;
        ++it;
        break;
      }
    }
    sol.iterations = it;
    sol.converged = converged;  // best iterate returned either way
    d = Eigen::Map<const Eigen::VectorXd>(cur.data(), static_cast<Eigen::Index>(n));
    sol.final_cost = cur_cost;
  } else {
    sol.iterations = 1;
    sol.converged = true;
    std::vector<double> dv(d.data(), d.data() + n);
    sol.final_cost = total_cost(problem, dv, LossKind::l2);
  }

  std::vector<double> dv(d.data(), d.data() + n);
  for (std::size_t q = 0; q < n; ++q) sol.delays_ns[problem.tag_ids[q]] = dv[q];
  sol.pair_stats = pair_stats(problem, dv, opts.histogram_bin_ns);
  return sol;
}

double calibrate_new_tag(double d_i_ns, std::span<const NewTagSample> samples) {
  if (samples.empty())
    raise(ErrorCode::empty_dataset, "calibrate_new_tag: no samples");
  std::vector<double> est;
  est.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.K <= 0.0)
      raise(ErrorCode::degenerate_interval, "calibrate_new_tag: K <= 0");
    est.push_back((2.0 * s.truth_tof_ns - s.dt41_ns - d_i_ns) / s.K +
                  s.dt32_ns);
  }
  const auto mid = est.begin() + static_cast<std::ptrdiff_t>(est.size() / 2);
  std::nth_element(est.begin(), mid, est.end());
  if (est.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(est.begin(), mid);
  return 0.5 * (lo + hi);
}

std::vector<NewTagSample> new_tag_samples(const sim::Dataset& dataset,
                                          int calibrated_id, int new_id) {
  std::vector<NewTagSample> out;
  for (const auto& tx : dataset.transactions) {
    if (tx.initiator_id != calibrated_id || tx.responder_id != new_id)
      continue;
    if (!tx.has_truth())
      raise(ErrorCode::missing_truth, "new-tag sample without truth");
    NewTagSample s;
    s.dt41_ns = tx.intervals.dt41;
    s.dt32_ns = tx.intervals.dt32;
    s.K = tx.intervals.clock_ratio();
    s.truth_tof_ns = tx.truth_range_m / sim::kSpeedOfLight;
    out.push_back(s);
  }
  return out;
}

Eigen::Vector3d TruthTrack::at(double t) const {
  if (t_s.size() < 2 || t < t_s.front() || t > t_s.back())
    raise(ErrorCode::missing_truth,
          "truth track does not cover t=" + std::to_string(t));
  const auto it = std::lower_bound(t_s.begin(), t_s.end(), t);
  if (it == t_s.begin()) return position_m.front();
  const auto hi = static_cast<std::size_t>(it - t_s.begin());
  const std::size_t lo = hi - 1;
  const double u = (t - t_s[lo]) / (t_s[hi] - t_s[lo]);
  return (1.0 - u) * position_m[lo] + u * position_m[hi];
}

void fill_truth_from_tracks(sim::Dataset& dataset,
                            const std::map<int, TruthTrack>& tracks) {
  for (auto& tx : dataset.transactions) {
    const auto a = tracks.find(tx.initiator_id);
    const auto b = tracks.find(tx.responder_id);
    if (a == tracks.end() || b == tracks.end())
      raise(ErrorCode::missing_truth,
            "no truth track for pair " + std::to_string(tx.initiator_id) +
                "->" + std::to_string(tx.responder_id));
    const double r =
        (a->second.at(tx.timestamp_s) - b->second.at(tx.timestamp_s)).norm();
    tx.truth_range_m = r;
    tx.truth_tof_ns = r / sim::kSpeedOfLight;
  }
}

}  // namespace uwb::delaycal
