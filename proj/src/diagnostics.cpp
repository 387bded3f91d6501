#include "blindid/diagnostics.hpp"

#include "blindid/error.hpp"
#include "blindid/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace blindid {

double mutual_coherence(const Eigen::MatrixXd& m) {
  if (m.cols() < 2) throw DomainError("mutual coherence needs at least two columns");
  const Eigen::VectorXd norms = m.colwise().norm();
  if ((norms.array() == 0.0).any()) throw DomainError("mutual coherence undefined for a zero column");
  const Eigen::MatrixXd unit = m * norms.cwiseInverse().asDiagonal();
  Eigen::MatrixXd gram = (unit.transpose() * unit).cwiseAbs();
  gram.diagonal().setZero();
  return std::clamp(gram.maxCoeff(), 0.0, 1.0);
}

double mcc_bound(double mu) {
  if (!(mu >= 0.0 && mu <= 1.0)) throw DomainError("mutual coherence must lie in [0, 1]");
  if (mu == 0.0) return std::numeric_limits<double>::infinity();
  return 0.5 * (1.0 + 1.0 / mu);
}

SparkResult spark_bruteforce(const Eigen::MatrixXd& m, std::uint64_t budget) {
  const Index d = m.cols();
  if (d == 0) return {1, true};
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const double sigma_max = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  const double tol = linalg::rank_tolerance(m.rows(), m.cols(), sigma_max);
  const Index rank = (svd.singularValues().array() > tol).count();

  std::uint64_t used = 0;
  for (Index size = 1; size <= rank; ++size) {
    bool dependent = false;
    bool exhausted = false;
    linalg::for_each_combination(d, size, [&](std::span<const Index> pick) {
      if (used++ >= budget) {
        exhausted = true;
        return false;
      }
      if (linalg::numerical_rank(linalg::select_columns(m, pick), tol) < size) {
        dependent = true;
        return false;
      }
      return true;
    });
    if (dependent) return {size, true};
    if (exhausted) return {size, false};
  }
  // Any rank + 1 columns are dependent.
  return {rank + 1, true};
}

RipResult rip_constant_bruteforce(const Eigen::MatrixXd& m, Index s, std::uint64_t budget) {
  if (s < 0 || s > m.cols()) throw DomainError("RIP order must lie in [0, ncols]");
  RipResult result;
  if (s > 0) {
    const std::uint64_t needed = linalg::binomial(static_cast<std::uint64_t>(m.cols()), static_cast<std::uint64_t>(s));
    if (needed > budget) {
      throw BudgetError("RIP enumeration needs " + std::to_string(needed) + " subsets, budget is " + std::to_string(budget));
    }
    linalg::for_each_combination(m.cols(), s, [&](std::span<const Index> pick) {
      const Eigen::MatrixXd sub = linalg::select_columns(m, pick);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sub.transpose() * sub, Eigen::EigenvaluesOnly);
      const auto& ev = eig.eigenvalues();
      const double delta = std::max(ev.maxCoeff() - 1.0, 1.0 - ev.minCoeff());
      if (delta > result.delta || result.worst_support.empty()) {
        result.delta = std::max(delta, 0.0);
        result.worst_support.assign(pick.begin(), pick.end());
      }
      return true;
    });
  }
  result.below_sqrt2_minus_1 = result.delta < std::sqrt(2.0) - 1.0;
  return result;
}

namespace {

double top_s_ratio(const Eigen::VectorXd& x, Index s) {
  std::vector<double> mags(static_cast<std::size_t>(x.size()));
  for (Index i = 0; i < x.size(); ++i) mags[i] = std::abs(x(i));
  const double total = std::accumulate(mags.begin(), mags.end(), 0.0);
  if (total == 0.0) return 0.0;
  const auto take = static_cast<std::size_t>(std::min<Index>(s, x.size()));
  std::partial_sort(mags.begin(), mags.begin() + take, mags.end(), std::greater<>());
  return std::accumulate(mags.begin(), mags.begin() + take, 0.0) / total;
}

}  // namespace

namespace {

// NSP ratio over span(basis); the columns must be linearly independent.
NspResult nsp_over_span(const Eigen::MatrixXd& basis, Index s, std::uint64_t budget) {
  if (s < 0) throw DomainError("NSP order must be >= 0");
  const Index d = basis.cols();
  NspResult result;
  if (d == 0 || s == 0) return result;

  const std::uint64_t needed = linalg::binomial(static_cast<std::uint64_t>(basis.rows()), static_cast<std::uint64_t>(d - 1));
  if (needed > budget) {
    throw BudgetError("NSP vertex enumeration needs " + std::to_string(needed) + " subsets, budget is " +
                      std::to_string(budget));
  }
  linalg::for_each_combination(basis.rows(), d - 1, [&](std::span<const Index> pick) {
    Eigen::VectorXd direction;
    if (d == 1) {
      direction = Eigen::VectorXd::Ones(1);
    } else {
      Eigen::MatrixXd rows(d - 1, d);
      for (Index r = 0; r < d - 1; ++r) rows.row(r) = basis.row(pick[r]);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows, Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      const double tol = linalg::rank_tolerance(rows.rows(), rows.cols(), sv(0));
      if ((sv.array() > tol).count() < d - 1) return true;  // not a vertex direction
      direction = svd.matrixV().col(d - 1);
    }
    const Eigen::VectorXd x = basis * direction;
    const double ratio = top_s_ratio(x, s);
    if (ratio > result.max_ratio) {
      result.max_ratio = ratio;
      result.witness = x / x.lpNorm<1>();
    }
    return true;
  });
  // Strict inequality; ties at exactly 1/2 fail.
  result.holds = result.max_ratio < 0.5 - 1e-12;
  if (result.holds) result.witness.reset();
  return result;
}

}  // namespace

NspResult nsp_check(const Eigen::MatrixXd& m, Index s, std::uint64_t budget) {
  if (s < 0) throw DomainError("NSP order must be >= 0");
  return nsp_over_span(linalg::null_space(m), s, budget);
}

PartialRipResult partial_rip_constant(const SensingSystem& sys, Index s_minus_r, std::uint64_t budget) {
  const Eigen::MatrixXd p = complement_projector(sys).matrix();
  PartialRipResult result;
  result.per_column = (p.colwise().squaredNorm().array() - 1.0).abs().transpose();
  result.delta = rip_constant_bruteforce(p, s_minus_r, budget).delta;
  return result;
}

NspResult partial_nsp_check(const SensingSystem& sys, Index s_minus_r, std::uint64_t budget) {
  // null(P) = range(Psi_a). Taking the basis from Psi_a directly avoids a
  // rank decision on the rounded entries of P.
  complement_projector(sys);  // rank check
  if (sys.psi_a.cols() == 0) return nsp_over_span(Eigen::MatrixXd(sys.psi_a.rows(), 0), s_minus_r, budget);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(sys.psi_a);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(sys.psi_a.rows(), sys.psi_a.cols());
  return nsp_over_span(q, s_minus_r, budget);
}

StabilityBounds stability_bounds(const StabilityInputs& in) {
  for (double v : {in.beta1, in.beta2, in.eta, in.sigma_s, in.c1, in.c2}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("stability inputs must be finite and >= 0");
  }
  if (in.r < 0 || in.s < in.r) throw DomainError("stability inputs need 0 <= r <= s");
  double tail = 0.0;
  if (in.s == in.r) {
    if (in.sigma_s > 0.0) throw DomainError("s = r leaves no sparse part, yet the approximation error is nonzero");
  } else {
    tail = in.beta2 * in.sigma_s / std::sqrt(static_cast<double>(in.s - in.r));
  }
  StabilityBounds out;
  out.bound_u = in.beta1 * in.eta + tail;
  out.bound_a = in.c2 * (2.0 * in.eta + in.c1 * out.bound_u);
  return out;
}

std::pair<double, double> stability_constants(const SensingSystem& sys) {
  const RankInfo info = column_rank(sys.psi_a);
  if (!info.full_column_rank()) throw IdentifiabilityError("pinv(Psi_a) norm needs full column rank");
  return {1.0, info.rank == 0 ? 0.0 : 1.0 / info.sigma_min};
}

double best_k_term_error(const Eigen::VectorXd& x, Index k) {
  if (k < 0) throw DomainError("k must be >= 0");
  std::vector<double> mags(static_cast<std::size_t>(x.size()));
  for (Index i = 0; i < x.size(); ++i) mags[i] = std::abs(x(i));
  std::sort(mags.begin(), mags.end(), std::greater<>());
  const auto skip = static_cast<std::size_t>(std::min<Index>(k, x.size()));
  return std::accumulate(mags.begin() + skip, mags.end(), 0.0);
}

std::vector<ConditionResult> check_rank_conditions(const Dataset& ds, Mode mode) {
  ds.validate();
  const Dims& d = ds.dims;
  std::vector<ConditionResult> out;
  if (mode == Mode::ltv) {
    out.push_back({"experiments >= states", -1, d.q, d.n, d.q >= d.n,
                   d.q >= d.n ? "" : "q < n: fewer experiments than states"});
    for (Index k = 0; k < d.k_f; ++k) {
      const Index rank = linalg::numerical_rank(ds.step_matrix(k));
      out.push_back({"rank Z_" + std::to_string(k), k, rank, d.n, rank == d.n,
                     rank == d.n ? "" : "Z_" + std::to_string(k) + " has rank " + std::to_string(rank) + " < n"});
    }
  } else {
    const Index columns = d.k_f * d.q;
    out.push_back({"steps * experiments >= states", -1, columns, d.n, columns >= d.n,
                   columns >= d.n ? "" : "k_f * q < n: too few snapshots"});
    Eigen::MatrixXd stacked(d.n, columns);
    for (Index k = 0; k < d.k_f; ++k) stacked.middleCols(k * d.q, d.q) = ds.step_matrix(k);
    const Index rank = linalg::numerical_rank(stacked);
    out.push_back({"rank [Z_0 ... Z_kf-1]", -1, rank, d.n, rank == d.n,
                   rank == d.n ? "" : "stacked state matrix has rank " + std::to_string(rank) + " < n"});
  }
  return out;
}

bool all_pass(const std::vector<ConditionResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
}

std::vector<std::string> DiagnosticsReport::failures() const {
  std::vector<std::string> out;
  if (rho_u > 0.5) out.push_back("rho_u > 1/2");
  if (!psi_a_full_rank) out.push_back("Psi_a rank deficient");
  for (const auto& c : rank_conditions)
    if (!c.pass) out.push_back(c.reason.empty() ? c.name : c.reason);
  return out;
}

namespace {

// Coherence of [I | Psi_a] without forming the joint matrix.
std::optional<double> coherence_with_identity(const Eigen::MatrixXd& psi_a) {
  if (psi_a.rows() + psi_a.cols() < 2) return std::nullopt;
  if (psi_a.cols() == 0) return 0.0;
  const Eigen::VectorXd norms = psi_a.colwise().norm();
  if ((norms.array() == 0.0).any()) return std::nullopt;
  const Eigen::MatrixXd unit = psi_a * norms.cwiseInverse().asDiagonal();
  double mu = unit.cwiseAbs().maxCoeff();  // identity column against a Psi_a column
  if (psi_a.cols() > 1) {
    Eigen::MatrixXd gram = (unit.transpose() * unit).cwiseAbs();
    gram.diagonal().setZero();
    mu = std::max(mu, gram.maxCoeff());
  }
  return std::clamp(mu, 0.0, 1.0);
}

}  // namespace

DiagnosticsReport theorem1_check(const Dataset& ds, Index u_sparsity, Mode mode, const DiagnosticsOptions& opts) {
  ds.validate();
  const Dims& d = ds.dims;
  if (u_sparsity < 0 || u_sparsity > d.measurements()) throw DomainError("input sparsity out of range");
  DiagnosticsReport report;
  report.mode = mode;
  report.sparsity = u_sparsity;
  report.rho_u = static_cast<double>(u_sparsity) / static_cast<double>(d.measurements());

  const SensingSystem sys = assemble(ds, mode);
  const RankInfo info = column_rank(sys.psi_a);
  report.psi_a_rank = info.rank;
  report.psi_a_cols = info.cols;
  report.psi_a_full_rank = info.full_column_rank();
  report.rank_conditions = check_rank_conditions(ds, mode);

  if (opts.coherence) {
    report.mu = coherence_with_identity(sys.psi_a);
    if (report.mu) report.mcc_bound = mcc_bound(*report.mu);
  }
  if (opts.spark_budget > 0) {
    Eigen::MatrixXd joint(sys.rows(), sys.rows() + sys.psi_a.cols());
    joint << Eigen::MatrixXd::Identity(sys.rows(), sys.rows()), sys.psi_a;
    report.spark = spark_bruteforce(joint, opts.spark_budget);
  }
  report.theorem1_pass = report.rho_u <= 0.5 && report.psi_a_full_rank;
  return report;
}

}  // namespace blindid
