#include "uwb/spline.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>

#include "uwb/errors.hpp"

namespace uwb {

namespace {

constexpr int kDegree = 3;

// Cox-de Boor: fills the four nonzero cubic basis values at x and returns
// the index of the first one. x must already lie inside [knots[3], back].
int basis_at(const std::vector<double>& knots, double x,
             std::array<double, 4>& vals) {
  const int n_knots = static_cast<int>(knots.size());
  int span = kDegree;
  const int hi_span = n_knots - kDegree - 2;
  while (span < hi_span && x >= knots[static_cast<std::size_t>(span + 1)])
    ++span;

  std::array<double, 4> left{}, right{};
  vals[0] = 1.0;
  for (int j = 1; j <= kDegree; ++j) {
    left[static_cast<std::size_t>(j)] =
        x - knots[static_cast<std::size_t>(span + 1 - j)];
    right[static_cast<std::size_t>(j)] =
        knots[static_cast<std::size_t>(span + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[static_cast<std::size_t>(r + 1)] +
                           left[static_cast<std::size_t>(j - r)];
      const double temp = (denom != 0.0) ? vals[static_cast<std::size_t>(r)] / denom : 0.0;
      vals[static_cast<std::size_t>(r)] =
          saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    vals[static_cast<std::size_t>(j)] = saved;
  }
  return span - kDegree;
}

std::vector<double> make_knots(std::vector<double> sorted_x, int interior) {
  const double lo = sorted_x.front();
  const double hi = sorted_x.back();
  std::vector<double> inner;
  const std::size_t n = sorted_x.size();
  for (int i = 1; i <= interior; ++i) {
    const double q = static_cast<double>(i) / (interior + 1);
    const auto idx = static_cast<std::size_t>(
        std::llround(q * static_cast<double>(n - 1)));
    const double v = sorted_x[idx];
    if (v > lo && v < hi && (inner.empty() || v > inner.back() * (1.0 + 1e-12) + 1e-300))
      inner.push_back(v);
  }
  std::vector<double> knots;
  knots.insert(knots.end(), 4, lo);
  knots.insert(knots.end(), inner.begin(), inner.end());
  knots.insert(knots.end(), 4, hi);
  return knots;
}

}  // namespace

double SplineModel::eval(double x) const {
  if (empty()) return 0.0;
  const double lo = knots.front();
  const double hi = knots.back();
  x = std::clamp(x, lo, hi);
  std::array<double, 4> vals{};
  const int first = basis_at(knots, x, vals);
  double y = 0.0;
  for (int k = 0; k < 4; ++k) {
    const auto idx = static_cast<std::size_t>(first + k);
    if (idx < coefs.size()) y += vals[static_cast<std::size_t>(k)] * coefs[idx];
  }
  return y;
}

SplineModel fit_penalized_spline(std::span<const double> x,
                                 std::span<const double> y,
                                 const PenalizedFitConfig& cfg) {
  if (x.size() != y.size() || x.size() < 8)
    raise(ErrorCode::insufficient_data, "penalized spline: too few samples");

  std::vector<double> sorted_x(x.begin(), x.end());
  std::sort(sorted_x.begin(), sorted_x.end());
  if (!(sorted_x.back() > sorted_x.front()))
    raise(ErrorCode::degenerate_domain, "penalized spline: zero x spread");

  SplineModel model;
  model.knots = make_knots(std::move(sorted_x), cfg.quantile_knots);
  const auto n_basis = static_cast<Eigen::Index>(model.knots.size() - 4);

  // Per-sample compact basis rows.
  struct Row {
    int first;
    std::array<double, 4> vals;
  };
  std::vector<Row> rows(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xv =
        std::clamp(x[i], model.knots.front(), model.knots.back());
    rows[i].first = basis_at(model.knots, xv, rows[i].vals);
  }

  // Second-difference penalty on coefficients.
  Eigen::MatrixXd pen = Eigen::MatrixXd::Zero(n_basis, n_basis);
  for (Eigen::Index i = 0; i + 2 < n_basis; ++i) {
    const double d[3] = {1.0, -2.0, 1.0};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) pen(i + a, i + b) += d[a] * d[b];
  }

  const int folds = std::max(2, cfg.cv_folds);
  std::vector<Eigen::MatrixXd> gram_fold(
      static_cast<std::size_t>(folds), Eigen::MatrixXd::Zero(n_basis, n_basis));
  std::vector<Eigen::VectorXd> rhs_fold(static_cast<std::size_t>(folds),
                                        Eigen::VectorXd::Zero(n_basis));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto f = static_cast<std::size_t>(i % static_cast<std::size_t>(folds));
    const auto& r = rows[i];
    for (int a = 0; a < 4; ++a) {
      const auto ia = static_cast<Eigen::Index>(r.first + a);
      rhs_fold[f](ia) += r.vals[static_cast<std::size_t>(a)] * y[i];
      for (int b = 0; b < 4; ++b)
        gram_fold[f](ia, static_cast<Eigen::Index>(r.first + b)) +=
            r.vals[static_cast<std::size_t>(a)] * r.vals[static_cast<std::size_t>(b)];
    }
  }
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n_basis, n_basis);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_basis);
  for (int f = 0; f < folds; ++f) {
    gram += gram_fold[static_cast<std::size_t>(f)];
    rhs += rhs_fold[static_cast<std::size_t>(f)];
  }

  std::vector<double> grid = cfg.lambda_grid;
  if (grid.empty())
    for (double e = -4.0; e <= 4.0 + 1e-9; e += 0.5)
      grid.push_back(std::pow(10.0, e));

  const double ridge = 1e-10 * (gram.trace() / static_cast<double>(n_basis) + 1.0);
  const Eigen::MatrixXd reg =
      ridge * Eigen::MatrixXd::Identity(n_basis, n_basis);

  auto solve_for = [&](const Eigen::MatrixXd& g, const Eigen::VectorXd& b,
                       double lambda) {
    return Eigen::VectorXd(
        (g + lambda * pen + reg).ldlt().solve(b));
  };

  double best_lambda = grid.front();
  double best_score = std::numeric_limits<double>::infinity();
  for (const double lambda : grid) {
    double score = 0.0;
    for (int f = 0; f < folds; ++f) {
      const Eigen::VectorXd c =
          solve_for(gram - gram_fold[static_cast<std::size_t>(f)],
                    rhs - rhs_fold[static_cast<std::size_t>(f)], lambda);
      for (std::size_t i = static_cast<std::size_t>(f); i < rows.size();
           i += static_cast<std::size_t>(folds)) {
        const auto& r = rows[i];
        double pred = 0.0;
        for (int a = 0; a < 4; ++a)
          pred += r.vals[static_cast<std::size_t>(a)] *
                  c(static_cast<Eigen::Index>(r.first + a));
        const double e = y[i] - pred;
        score += e * e;
      }
    }
    if (score < best_score) {
      best_score = score;
      best_lambda = lambda;
    }
  }

  const Eigen::VectorXd c = solve_for(gram, rhs, best_lambda);
  model.coefs.assign(c.data(), c.data() + n_basis);
  return model;
}

}  // namespace uwb
