#pragma once

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "uwb/sim.hpp"

namespace uwb::delaycal {

enum class LossKind { l2, cauchy };

/// Linearized antenna-delay problem. Each record is one transaction's
/// residual e(d) = (d_i + K d_j)/2 + c0 with c0 = (dt41 - K dt32)/2 - t_f,
/// everything in ns.
struct DelayProblem {
  struct Record {
    int i = 0;             ///< dense initiator index
    int j = 0;             ///< dense responder index
    double K = 1.0;        ///< measured clock-rate ratio dt64/dt53
    double c0_ns = 0.0;
    int pair_index = 0;
  };

  std::vector<Record> records;
  std::vector<int> tag_ids;                  ///< dense index -> tag id
  std::vector<std::pair<int, int>> pairs;    ///< ordered (initiator, responder)

  std::size_t tag_count() const { return tag_ids.size(); }
};

struct PairResidualStats {
  int initiator_id = 0;
  int responder_id = 0;
  std::size_t count = 0;
  double mean_ns = 0.0;
  double std_ns = 0.0;
  double mode_bin_center_ns = 0.0;  ///< centered histogram, bin_width wide
};

struct DelaySolution {
  std::map<int, double> delays_ns;  ///< tag id -> estimated aggregate delay
  LossKind loss = LossKind::l2;
  int iterations = 0;
  double final_cost = 0.0;
  double condition_number = 1.0;
  bool converged = true;
  std::vector<double> iteration_costs;  ///< Cauchy cost per accepted iterate
  std::vector<PairResidualStats> pair_stats;

  double delay(int tag_id) const;
};

struct SolveOptions {
  LossKind loss = LossKind::cauchy;
  int max_iterations = 100;
  double tol_ns = 1e-4;           ///< convergence: max delay change
  double condition_limit = 1e8;
  double histogram_bin_ns = 0.05; ///< pair-stat mode bins
};

/// Builds the least-squares problem from a dataset carrying truth ranges.
/// Throws InsufficientTags below 3 distinct tags and MissingTruth when a
/// transaction lacks its truth range.
DelayProblem build_problem(const sim::Dataset& dataset);

/// Cauchy loss g(e) = log(e^2/2 + 1) summed over records; L2 is e^2/2.
double total_cost(const DelayProblem& problem, std::span<const double> delays,
                  LossKind loss);

/// L2: closed-form normal equations. Cauchy: IRLS with weights
/// 1/(e^2/2 + 1) seeded from the L2 solution; cost is non-increasing across
/// accepted iterations (backtracking safeguard).
DelaySolution solve(const DelayProblem& problem, const SolveOptions& opts);

/// One initiator->new-tag transaction reduced to the quantities the
/// bootstrap formula needs.
struct NewTagSample {
  double dt41_ns = 0.0;
  double dt32_ns = 0.0;
  double K = 1.0;
  double truth_tof_ns = 0.0;
};

/// Estimates a new tag's delay from exchanges initiated by a calibrated tag:
/// per-sample (2 t_f - dt41 - d_i)/K + dt32, aggregated by median.
double calibrate_new_tag(double d_i_ns, std::span<const NewTagSample> samples);

/// Convenience: extracts the bootstrap samples for (calibrated -> new) from
/// a dataset with truth ranges.
std::vector<NewTagSample> new_tag_samples(const sim::Dataset& dataset,
                                          int calibrated_id, int new_id);

/// Piecewise-linear truth track for imported logs: per-tag timestamped
/// world positions; ranges are interpolated per transaction.
struct TruthTrack {
  std::vector<double> t_s;
  std::vector<Eigen::Vector3d> position_m;

  Eigen::Vector3d at(double t) const;  ///< MissingTruth outside the span
};

/// Fills truth_range_m (and truth_tof_ns) of every transaction from the
/// tracks of both involved tags.
void fill_truth_from_tracks(sim::Dataset& dataset,
                            const std::map<int, TruthTrack>& tracks);

}  // namespace uwb::delaycal
