#include "blindid/solver.hpp"

#include "blindid/error.hpp"
#include "blindid/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace blindid {

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

void SolverOptions::validate() const {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw DomainError("solver eta must be finite and >= 0");
  if (!(feas_tol > 0.0) || !(obj_tol > 0.0)) throw DomainError("solver tolerances must be > 0");
  if (max_iters < 1) throw DomainError("max_iters must be >= 1");
  if (!(lambda_a >= 0.0)) throw DomainError("lambda_a must be >= 0");
  if (!(rho > 0.0)) throw DomainError("rho must be > 0");
  if (rebalance_every < 1 || !(rebalance_ratio > 1.0)) throw DomainError("invalid penalty rebalancing settings");
}

namespace {

struct AdmmOutcome {
  Eigen::VectorXd y;
  int iterations = 0;
  bool converged = false;
};

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, const Eigen::VectorXd& kappa) {
  return (v.array().abs() - kappa.array()).max(0.0) * v.array().sign();
}

// ADMM on  min sum w_i |y_i| + indicator_C(x)  s.t. x = y, where `project`
// maps a point onto the closed convex set C. Returns the soft-thresholded
// iterate y, which carries exact zeros; dist(y, C) <= ||x - y||.
template <class Project>
AdmmOutcome admm_weighted_l1(Index dim, const Eigen::VectorXd& weights, const Project& project,
                             const SolverOptions& opts, double eps_primal) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd x(dim), y_old(dim);
  double rho = opts.rho;

  Eigen::VectorXd best = y;
  double best_score = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= opts.max_iters; ++it) {
    x = project(y - w);
    y_old = y;
    y = soft_threshold(x + w, weights / rho);
    w += x - y;

    const double primal = (x - y).norm();
    const double dual = rho * (y - y_old).norm();
    if (primal <= eps_primal && dual <= opts.obj_tol) return {y, it, true};

    const double score = std::max(primal / eps_primal, dual / opts.obj_tol);
    if (score < best_score) {
      best_score = score;
      best = y;
    }
    if (it % opts.rebalance_every == 0) {
      if (primal > opts.rebalance_ratio * dual) {
        rho *= 2.0;
        w *= 0.5;
      } else if (dual > opts.rebalance_ratio * primal) {
        rho *= 0.5;
        w *= 2.0;
      }
    }
  }
  return {best, opts.max_iters, false};
}

// Projection onto {x : ||M x - b||_2 <= eta} from a thin SVD of M. Along the
// right singular directions the set is an ellipsoid; the orthogonal
// complement (null space of M) is left untouched.
class ResidualBallProjection {
 public:
  ResidualBallProjection(const Eigen::MatrixXd& m, const Eigen::VectorXd& b, double eta, double feas_tol) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const double tol = linalg::rank_tolerance(m.rows(), m.cols(), s.size() ? s(0) : 0.0);
    const Index k = (s.array() > tol).count();
    v_ = svd.matrixV().leftCols(k);
    sigma_ = s.head(k);
    const Eigen::MatrixXd u = svd.matrixU().leftCols(k);
    bt_ = u.transpose() * b;
    min_residual_ = (b - u * bt_).norm();
    const double slack = eta * eta - min_residual_ * min_residual_;
    feasible_ = min_residual_ <= eta + feas_tol;
    radius_ = slack > 0.0 ? std::sqrt(slack) : 0.0;
    ls_solution_ = v_ * (bt_.array() / sigma_.array()).matrix();
  }

  bool feasible() const { return feasible_; }
  double min_residual() const { return min_residual_; }
  const Eigen::VectorXd& least_squares() const { return ls_solution_; }

  Eigen::VectorXd operator()(const Eigen::VectorXd& p) const {
    const Eigen::VectorXd c = v_.transpose() * p;
    const Eigen::ArrayXd r0 = sigma_.array() * c.array() - bt_.array();
    if (r0.matrix().norm() <= radius_) return p;
    Eigen::VectorXd c_new;
    if (radius_ == 0.0) {
      c_new = bt_.array() / sigma_.array();
    } else {
      const double lambda = secular_root(r0);
      const Eigen::ArrayXd s2 = sigma_.array().square();
      c_new = (c.array() + lambda * sigma_.array() * bt_.array()) / (1.0 + lambda * s2);
    }
    return p + v_ * (c_new - c);
  }

 private:
  // Solves sum r0_i^2 / (1 + lambda s_i^2)^2 = radius^2 for lambda > 0.
  double secular_root(const Eigen::ArrayXd& r0) const {
    const Eigen::ArrayXd s2 = sigma_.array().square();
    const double target = radius_ * radius_;
    auto phi = [&](double lambda) { return (r0.square() / (1.0 + lambda * s2).square()).sum(); };
    double lo = 0.0;
    double hi = 1.0 / s2.maxCoeff();
    while (phi(hi) > target) hi *= 2.0;
    double lambda = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      const double f = phi(lambda);
      if (f > target) lo = lambda;
      else hi = lambda;
      if (std::abs(f - target) <= 1e-15 * target || hi - lo <= 1e-16 * hi) break;
      // Newton step on 1/sqrt(phi) - 1/radius, which is close to linear.
      const double dphi = (-2.0 * r0.square() * s2 / (1.0 + lambda * s2).cube()).sum();
      const double g = 1.0 / std::sqrt(f) - 1.0 / radius_;
      const double dg = -0.5 * dphi / (f * std::sqrt(f));
      double next = dg != 0.0 ? lambda - g / dg : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      lambda = next;
    }
    return lambda;
  }

  Eigen::MatrixXd v_;
  Eigen::VectorXd sigma_;
  Eigen::VectorXd bt_;
  Eigen::VectorXd ls_solution_;
  double min_residual_ = 0.0;
  double radius_ = 0.0;
  bool feasible_ = true;
};

// Projection onto {u : ||P (u - z)||_2 <= eta}: the range(Psi_a) component of
// u - z is free, the complementary component is pulled into the eta ball.
struct ProjectedResidualBall {
  const ComplementProjector& projector;
  const Eigen::VectorXd& z;
  double eta;

  Eigen::VectorXd operator()(const Eigen::VectorXd& p) const {
    const Eigen::VectorXd v = p - z;
    const Eigen::VectorXd in_range = projector.apply_range(v);
    Eigen::VectorXd perp = v - in_range;
    const double norm = perp.norm();
    if (norm > eta) perp *= eta / norm;
    return z + in_range + perp;
  }
};

// Re-solve on the support of `u`: least squares for eta = 0, and for eta > 0
// the minimizer of sign(u)^T u_S over the feasible ellipsoid restricted to S.
// Returns an empty vector when no acceptable candidate exists.
Eigen::VectorXd polish_support(const ComplementProjector& p, const Eigen::VectorXd& z, const Eigen::VectorXd& u,
                               const SolverOptions& opts) {
  std::vector<Index> support;
  for (Index i = 0; i < u.size(); ++i)
    if (u(i) != 0.0) support.push_back(i);
  const auto s = static_cast<Index>(support.size());
  if (s == 0 || s > p.size() - p.range_rank()) return {};

  Eigen::MatrixXd b(p.size(), s);
  for (Index c = 0; c < s; ++c) b.col(c) = p.column(support[c]);
  const Eigen::VectorXd pz = p.apply(z);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(b);
  if (qr.rank() < s) return {};
  Eigen::VectorXd coef = qr.solve(pz);
  const double ls_residual = (pz - b * coef).norm();
  if (ls_residual > opts.eta + opts.feas_tol) return {};

  if (opts.eta > 0.0 && ls_residual < opts.eta) {
    Eigen::VectorXd sign(s);
    for (Index c = 0; c < s; ++c) sign(c) = u(support[c]) > 0.0 ? 1.0 : -1.0;
    const Eigen::MatrixXd gram = b.transpose() * b;
    const Eigen::VectorXd h = gram.ldlt().solve(sign);
    const double curvature = sign.dot(h);
    if (!(curvature > 0.0)) return {};
    const double slack = std::sqrt(opts.eta * opts.eta - ls_residual * ls_residual);
    coef -= (slack / std::sqrt(curvature)) * h;
  }

  Eigen::VectorXd candidate = Eigen::VectorXd::Zero(u.size());
  for (Index c = 0; c < s; ++c) candidate(support[c]) = coef(c);
  if ((pz - b * coef).norm() > opts.eta + opts.feas_tol) return {};
  if (candidate.lpNorm<1>() > u.lpNorm<1>() + opts.obj_tol) return {};
  return candidate;
}

Eigen::MatrixXd block_rows_cols(const Eigen::MatrixXd& m, const Block& blk) {
  Eigen::MatrixXd out(static_cast<Index>(blk.rows.size()), static_cast<Index>(blk.cols.size()));
  for (std::size_t r = 0; r < blk.rows.size(); ++r)
    for (std::size_t c = 0; c < blk.cols.size(); ++c) out(static_cast<Index>(r), static_cast<Index>(c)) = m(blk.rows[r], blk.cols[c]);
  return out;
}

}  // namespace

Eigen::VectorXd recover_dense_part(const Eigen::MatrixXd& psi_a, const Eigen::VectorXd& z, const Eigen::VectorXd& u) {
  if (z.size() != psi_a.rows() || u.size() != psi_a.rows()) throw ShapeError("recover_dense_part: length mismatch");
  const RankInfo info = column_rank(psi_a);
  if (!info.full_column_rank()) {
    throw IdentifiabilityError("Psi_a is rank deficient (rank " + std::to_string(info.rank) + " of " +
                               std::to_string(info.cols) + "); the dynamics are not uniquely determined");
  }
  const Eigen::VectorXd rhs = z - u;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(psi_a.cols());
  for (const auto& blk : block_decomposition(psi_a)) {
    if (blk.rows.empty()) continue;
    Eigen::VectorXd local(static_cast<Index>(blk.rows.size()));
    for (std::size_t r = 0; r < blk.rows.size(); ++r) local(static_cast<Index>(r)) = rhs(blk.rows[r]);
    const Eigen::VectorXd coef = block_rows_cols(psi_a, blk).colPivHouseholderQr().solve(local);
    for (std::size_t c = 0; c < blk.cols.size(); ++c) a(blk.cols[c]) = coef(static_cast<Index>(c));
  }
  return a;
}

BpdnResult solve_bpdn(const Eigen::MatrixXd& m, const Eigen::VectorXd& b, const SolverOptions& opts,
                      const Eigen::VectorXd& weights) {
  opts.validate();
  if (b.size() != m.rows()) throw ShapeError("solve_bpdn: b length differs from the row count of M");
  Eigen::VectorXd w = weights.size() == 0 ? Eigen::VectorXd::Ones(m.cols()) : weights;
  if (w.size() != m.cols()) throw ShapeError("solve_bpdn: weight vector length differs from the column count");
  if ((w.array() < 0.0).any()) throw DomainError("solve_bpdn: weights must be >= 0");

  BpdnResult result;
  const auto finish = [&](Eigen::VectorXd x) {
    result.x = std::move(x);
    result.residual_norm = (b - m * result.x).norm();
    result.objective = (w.array() * result.x.array().abs()).sum();
  };

  if (b.norm() <= opts.eta) {
    finish(Eigen::VectorXd::Zero(m.cols()));
    return result;
  }
  const ResidualBallProjection project(m, b, opts.eta, opts.feas_tol);
  if (!project.feasible()) {
    result.status = SolveStatus::infeasible;
    finish(project.least_squares());
    return result;
  }
  const double eps_primal = opts.feas_tol / std::max(1.0, linalg::spectral_norm(m));
  const AdmmOutcome run = admm_weighted_l1(m.cols(), w, project, opts, eps_primal);
  result.iterations = run.iterations;
  result.status = run.converged ? SolveStatus::optimal : SolveStatus::max_iters;
  finish(run.y);
  return result;
}

Solution solve_blind_id(const SensingSystem& sys, const SolverOptions& opts) {
  opts.validate();
  sys.validate();
  const Index m = sys.rows();
  const Index r = sys.psi_a.cols();
  Solution sol;

  if (opts.sparsify_a) {
    Eigen::MatrixXd joint(m, m + r);
    joint << Eigen::MatrixXd::Identity(m, m), sys.psi_a;
    Eigen::VectorXd weights(m + r);
    weights << Eigen::VectorXd::Ones(m), Eigen::VectorXd::Constant(r, opts.lambda_a);
    const BpdnResult res = solve_bpdn(joint, sys.z, opts, weights);
    sol.u_star = res.x.head(m);
    sol.a_star = res.x.tail(r);
    sol.residual_norm = res.residual_norm;
    sol.objective = res.objective;
    sol.status = res.status;
    sol.iterations = res.iterations;
    return sol;
  }

  const ComplementProjector projector = complement_projector(sys);
  const Eigen::VectorXd pz = projector.apply(sys.z);
  if (pz.norm() <= opts.eta) {
    sol.u_star = Eigen::VectorXd::Zero(m);
  } else {
    const ProjectedResidualBall project{projector, sys.z, opts.eta};
    const AdmmOutcome run = admm_weighted_l1(m, Eigen::VectorXd::Ones(m), project, opts, opts.feas_tol);
    sol.u_star = run.y;
    sol.iterations = run.iterations;
    sol.status = run.converged ? SolveStatus::optimal : SolveStatus::max_iters;
    if (opts.polish) {
      Eigen::VectorXd polished = polish_support(projector, sys.z, sol.u_star, opts);
      if (polished.size() != 0) {
        sol.u_star = std::move(polished);
        sol.polished = true;
      }
    }
  }
  sol.a_star = recover_dense_part(sys.psi_a, sys.z, sol.u_star);
  sol.residual_norm = (sys.z - sol.u_star - sys.psi_a * sol.a_star).norm();
  sol.objective = sol.u_star.lpNorm<1>();
  return sol;
}

L0Result solve_l0_oracle(const Eigen::MatrixXd& m, const Eigen::VectorXd& b, double eta, Index s_max,
                         const L0Options& opts) {
  if (b.size() != m.rows()) throw ShapeError("solve_l0_oracle: b length differs from the row count of M");
  if (!(eta >= 0.0)) throw DomainError("solve_l0_oracle: eta must be >= 0");
  if (s_max < 0) throw DomainError("solve_l0_oracle: s_max must be >= 0");

  std::vector<bool> is_dense(static_cast<std::size_t>(m.cols()), false);
  for (Index c : opts.dense_columns) {
    if (c < 0 || c >= m.cols()) throw ShapeError("solve_l0_oracle: dense column out of range");
    is_dense[c] = true;
  }
  std::vector<Index> sparse_cols;
  for (Index c = 0; c < m.cols(); ++c)
    if (!is_dense[c]) sparse_cols.push_back(c);
  const auto n_sparse = static_cast<Index>(sparse_cols.size());
  const Index max_size = std::min(s_max, n_sparse);

  const std::uint64_t needed = linalg::binomial_prefix_sum(static_cast<std::uint64_t>(n_sparse), static_cast<std::uint64_t>(max_size));
  if (needed > opts.budget) {
    throw BudgetError("l0 oracle needs " + std::to_string(needed) + " subset evaluations, budget is " +
                      std::to_string(opts.budget));
  }
  const double tol = opts.tolerance < 0.0 ? 1e-9 * (1.0 + b.norm()) : opts.tolerance;

  L0Result result;
  std::vector<Index> cols(opts.dense_columns.begin(), opts.dense_columns.end());
  const std::size_t dense_count = cols.size();
  for (Index size = 0; size <= max_size; ++size) {
    int feasible = 0;
    double best_residual = std::numeric_limits<double>::infinity();
    linalg::for_each_combination(n_sparse, size, [&](std::span<const Index> pick) {
      cols.resize(dense_count);
      for (Index p : pick) cols.push_back(sparse_cols[p]);
      Eigen::VectorXd coef;
      double residual = b.norm();
      if (!cols.empty()) {
        const Eigen::MatrixXd sub = linalg::select_columns(m, cols);
        coef = sub.colPivHouseholderQr().solve(b);
        residual = (b - sub * coef).norm();
      }
      if (residual <= eta + tol) {
        ++feasible;
        if (residual < best_residual) {
          best_residual = residual;
          result.x = Eigen::VectorXd::Zero(m.cols());
          for (std::size_t c = 0; c < cols.size(); ++c) result.x(cols[c]) = coef(static_cast<Index>(c));
          result.support.clear();
          for (Index p : pick) result.support.push_back(sparse_cols[p]);
          result.residual_norm = residual;
        }
      }
      return true;
    });
    if (feasible > 0) {
      result.found = true;
      result.unique = feasible == 1;
      return result;
    }
  }
  result.x = Eigen::VectorXd::Zero(m.cols());
  return result;
}

}  // namespace blindid
