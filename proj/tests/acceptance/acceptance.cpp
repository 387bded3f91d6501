// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Pass a criterion number to run only that one.

#include "blindid/diagnostics.hpp"
#include "blindid/error.hpp"
#include "blindid/experiments.hpp"
#include "blindid/rng.hpp"
#include "blindid/sensing.hpp"
#include "blindid/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace blindid;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::MatrixXd gaussian(Rng& rng, Index rows, Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

// Average ranks, ties share the mean rank.
std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// ---- criterion 1 ----------------------------------------------------------

// The l0 problem splits over the blocks of Psi_a when eta = 0, so the
// sparsest (u, a) is checked block by block with the exhaustive oracle.
bool truth_is_unique_sparsest(const SensingSystem& sys, const Eigen::VectorXd& u) {
  for (const Block& b : block_decomposition(sys.psi_a)) {
    const Index r = static_cast<Index>(b.rows.size()), c = static_cast<Index>(b.cols.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(r, r + c);
    Eigen::VectorXd rhs(r);
    std::vector<Index> truth;
    for (Index i = 0; i < r; ++i) {
      m(i, i) = 1.0;
      for (Index l = 0; l < c; ++l) m(i, r + l) = sys.psi_a(b.rows[i], b.cols[l]);
      rhs(i) = sys.z(b.rows[i]);
      if (u(b.rows[i]) != 0.0) truth.push_back(i);
    }
    L0Options opts;
    for (Index l = 0; l < c; ++l) opts.dense_columns.push_back(r + l);
    const L0Result res = solve_l0_oracle(m, rhs, 0.0, static_cast<Index>(truth.size()), opts);
    if (!res.found || !res.unique || res.support != truth) return false;
  }
  return true;
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  const std::vector<std::pair<Index, Index>> shapes{{2, 1}, {2, 2}, {3, 1}, {3, 2}};
  int accepted = 0, recovered = 0, attempts = 0, cheaper = 0;
  double worst = 0.0;
  std::ostringstream other;
  while (accepted < 100 && attempts < 200000) {
    ++attempts;
    const auto [n, k_f] = shapes[static_cast<std::size_t>(accepted) % shapes.size()];
    const Dims dims{n, k_f, 2 * n, Mode::ltv};
    const Index len = dims.measurements();
    LtvModel model{dims, {}};
    for (Index k = 0; k < k_f; ++k) model.a_mats.push_back(gaussian(rng, n, n));
    const Index s = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(len / 2)));
    const auto perm = rng.permutation(static_cast<int>(len));
    Eigen::VectorXd u = Eigen::VectorXd::Zero(len);
    for (Index i = 0; i < s; ++i) u(perm[static_cast<std::size_t>(i)]) = rng.normal();
    const Dataset ds = simulate_dataset(model, InputPlan::from_vector(dims, u), {}, gaussian(rng, n, dims.q));
    const SensingSystem sys = assemble(ds, Mode::ltv);
    if (!column_rank(sys.psi_a).full_column_rank()) continue;
    if (!truth_is_unique_sparsest(sys, u)) continue;
    ++accepted;
    SolverOptions opts;
    opts.eta = 0.0;
    const Solution sol = solve_blind_id(sys, opts);
    const double err = std::max(max_abs(sol.u_star - u), max_abs(sol.a_star - model.vectorize()));
    worst = std::max(worst, err);
    if (err <= 1e-6) {
      ++recovered;
    } else if (sol.residual_norm <= 1e-6 && sol.objective < u.lpNorm<1>() - 1e-9) {
      ++cheaper;  // feasible point with smaller l1 norm than the truth
    } else {
      other << " [n=" << n << " k_f=" << k_f << " " << to_string(sol.status) << " l1 " << fmt(sol.objective)
            << " vs truth " << fmt(u.lpNorm<1>()) << "]";
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << recovered << "/" << accepted << " instances recovered to 1e-6 (worst max-abs error " << fmt(worst) << ", "
     << attempts << " draws); " << cheaper << " misses have a feasible point of smaller l1 norm than the truth;"
     << other.str() << " " << fmt(secs) << " s";
  return {accepted == 100 && recovered == 100 && secs <= 120.0, os.str()};
}

// ---- criterion 2 ----------------------------------------------------------

Outcome criterion2() {
  const auto t0 = Clock::now();
  SyntheticConfig cfg;
  cfg.dims = {10, 4, 5, Mode::ltv};
  cfg.trials = 25;
  cfg.seed = 1;
  const auto cells = sweep(cfg, {{5, 8, 10, 15, 20, 25, 30}, {0.0}}, Mode::ltv);
  bool ok = true;
  const Index n_states = cfg.dims.n;
  std::ostringstream os;
  for (const SweepCell& c : cells) {
    if (!c.summary) {
      ok = false;
      os << "q=" << c.q << " failed; ";
      continue;
    }
    const MetricsSummary& s = *c.summary;
    int missed = 0, cheaper = 0;
    for (const TrialRecord& r : s.trials) {
      if (max_abs(r.u_hat - r.u_true) <= 1e-6) continue;
      ++missed;
      if (!r.solver_failed && r.u_hat.lpNorm<1>() < r.u_true.lpNorm<1>() - 1e-9) ++cheaper;
    }
    os << "q=" << c.q << " mape " << fmt(s.mape_card) << " armse_nz " << fmt(s.armse_nz);
    if (c.q >= n_states) os << " (" << missed << " trials missed, " << cheaper << " with smaller l1 norm than the truth)";
    os << "; ";
    if (c.q >= 25) ok = ok && s.mape_card <= 0.01 && s.armse_nz <= 1e-3;
    if (c.q <= 8) ok = ok && s.mape_card >= 0.05;
  }
  const double secs = seconds_since(t0);
  os << fmt(secs) << " s";
  return {ok && secs <= 900.0, os.str()};
}

// ---- criteria 3 and 4 share one noise sweep -------------------------------

std::vector<SweepCell> noise_cells;

const std::vector<SweepCell>& noise_sweep() {
  if (noise_cells.empty()) {
    SyntheticConfig cfg;
    cfg.dims = {10, 4, 30, Mode::ltv};
    cfg.trials = 50;
    cfg.seed = 2;
    noise_cells = sweep(cfg, {{30}, {0.01, 0.03, 0.05, 0.07, 0.09, 0.11, 0.13, 0.15}}, Mode::ltv);
  }
  return noise_cells;
}

const MetricsSummary* cell_at(double alpha_w) {
  for (const auto& c : noise_sweep())
    if (std::abs(c.alpha_w - alpha_w) < 1e-12 && c.summary) return &*c.summary;
  return nullptr;
}

Outcome criterion3() {
  const auto t0 = Clock::now();
  const auto& cells = noise_sweep();
  std::vector<double> w, mape, nz, a;
  for (const auto& c : cells) {
    if (!c.summary) return {false, "cell alpha_w=" + fmt(c.alpha_w) + " failed: " + c.error};
    w.push_back(c.alpha_w);
    mape.push_back(c.summary->mape_card);
    nz.push_back(c.summary->armse_nz);
    a.push_back(c.summary->armse_a);
  }
  const double m1 = cell_at(0.01)->mape_card, m15 = cell_at(0.15)->mape_card;
  const double r_nz = spearman(w, nz), r_a = spearman(w, a);
  const bool ok = m1 >= 0.02 && m1 <= 0.09 && m15 >= 0.03 && m15 <= 0.11 && m15 >= m1 && r_nz >= 0.9 && r_a >= 0.9;
  std::ostringstream os;
  os << "mape(0.01) " << fmt(m1) << ", mape(0.15) " << fmt(m15) << ", spearman armse_nz " << fmt(r_nz)
     << ", armse_a " << fmt(r_a) << "; mape by alpha_w:";
  for (std::size_t i = 0; i < w.size(); ++i) os << " " << fmt(mape[i]);
  os << "; " << fmt(seconds_since(t0)) << " s";
  return {ok, os.str()};
}

Outcome criterion4() {
  const MetricsSummary* s = cell_at(0.05);
  if (!s) return {false, "alpha_w=0.05 cell missing"};
  const double ratio = s->armse_a / s->armse_nz;
  const double ratio_pn = s->armse_a / s->armse_nz_per_nonzero;
  std::ostringstream os;
  os << "armse_a / armse_nz = " << fmt(s->armse_a) << " / " << fmt(s->armse_nz) << " = " << fmt(ratio)
     << " (per-nonzero normalization: " << fmt(ratio_pn) << ")";
  return {ratio >= 2.0 && ratio <= 10.0, os.str()};
}

// ---- criterion 5 ----------------------------------------------------------

Outcome criterion5() {
  Rng rng(5);
  int agree = 0, full = 0, deficient = 0;
  for (int t = 0; t < 200; ++t) {
    const Index n = 2 + static_cast<Index>(rng.below(5));
    const Index k_f = 1 + static_cast<Index>(rng.below(3));
    const Index q = std::max<Index>(1, n - 2 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n + 3))));
    const Mode mode = t % 4 == 3 ? Mode::lti : Mode::ltv;
    Dataset ds{{n, k_f, q, mode}, gaussian(rng, n, q * (k_f + 1)), 0.0};
    if (t % 3 == 0) {
      // Squash one step's snapshots into a random hyperplane.
      const Index k = static_cast<Index>(rng.below(static_cast<std::uint64_t>(k_f)));
      Eigen::VectorXd normal = gaussian(rng, n, 1);
      normal.normalize();
      for (Index j = 0; j < q; ++j) {
        auto col = ds.states.col(ds.column(j, k));
        col -= normal * normal.dot(col);
        if (mode == Mode::lti) {
          for (Index kk = 0; kk < k_f; ++kk) {
            auto other = ds.states.col(ds.column(j, kk));
            other -= normal * normal.dot(other);
          }
        }
      }
    }
    const bool rank_verdict = all_pass(check_rank_conditions(ds, mode));
    const bool psi_full = column_rank(assemble(ds, mode).psi_a).full_column_rank();
    (psi_full ? full : deficient) += 1;
    if (rank_verdict == psi_full) ++agree;
  }
  std::ostringstream os;
  os << agree << "/200 agree (" << full << " full rank, " << deficient << " deficient)";
  return {agree == 200 && full > 0 && deficient > 0, os.str()};
}

// ---- criterion 6 ----------------------------------------------------------

Outcome criterion6() {
  std::vector<std::string> failed;
  auto check = [&](bool ok, const std::string& name) {
    if (!ok) failed.push_back(name);
  };
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-9; };

  check(near(mutual_coherence(Eigen::MatrixXd::Identity(3, 3)), 0.0), "coherence identity");
  Eigen::MatrixXd dup(2, 3);
  dup << 1, 2, 1, 0, 1, 0;
  check(near(mutual_coherence(dup), 1.0), "coherence duplicate");
  Eigen::MatrixXd m45(2, 2);
  m45 << 1, 1 / std::sqrt(2.0), 0, 1 / std::sqrt(2.0);
  check(near(mutual_coherence(m45), 1 / std::sqrt(2.0)), "coherence 1/sqrt2");
  check(near(mcc_bound(0.5), 1.5) && near(mcc_bound(1.0), 1.0) && std::isinf(mcc_bound(0.0)), "mcc bound");

  const SparkResult si = spark_bruteforce(Eigen::MatrixXd::Identity(3, 3));
  check(si.value == 4 && si.exact, "spark identity");
  const SparkResult sd = spark_bruteforce(dup);
  check(sd.value == 2 && sd.exact, "spark duplicate");
  Rng rng(6);
  const SparkResult sg = spark_bruteforce(gaussian(rng, 3, 4));
  check(sg.value == 4 && sg.exact, "spark generic 3x4");

  Eigen::MatrixXd orth = Eigen::MatrixXd::Identity(4, 3);
  check(near(rip_constant_bruteforce(orth, 2).delta, 0.0), "rip orthonormal");
  const double rho = 0.3;
  Eigen::MatrixXd pair(2, 2);
  pair << 1, rho, 0, std::sqrt(1 - rho * rho);
  check(near(rip_constant_bruteforce(pair, 2).delta, rho), "rip pair");
  check(near(rip_constant_bruteforce(2.0 * Eigen::MatrixXd::Identity(2, 2), 1).delta, 3.0), "rip 2I");

  check(nsp_check(Eigen::MatrixXd::Identity(3, 3), 1).holds, "nsp identity");
  const NspResult n11 = nsp_check(Eigen::RowVector2d(1, 1), 1);
  check(!n11.holds && n11.witness.has_value() && near(n11.max_ratio, 0.5), "nsp [1 1]");
  const NspResult n12 = nsp_check(Eigen::RowVector2d(1, 2), 1);
  check(!n12.holds && near(n12.max_ratio, 2.0 / 3.0), "nsp [1 2]");

  int ordered = 0;
  for (int t = 0; t < 50; ++t) {
    const Eigen::MatrixXd m = gaussian(rng, 4, 8);
    const SparkResult s = spark_bruteforce(m, 1'000'000);
    if (s.exact && mcc_bound(mutual_coherence(m)) <= 0.5 * static_cast<double>(s.value) + 1e-12) ++ordered;
  }
  check(ordered == 50, "mcc ordering");

  std::ostringstream os;
  os << "hand examples " << (failed.empty() ? "all match" : "failing:");
  for (const auto& f : failed) os << " [" << f << "]";
  os << "; ordering holds on " << ordered << "/50 random 4x8";
  return {failed.empty(), os.str()};
}

// ---- criterion 7 ----------------------------------------------------------

Outcome criterion7() {
  std::vector<std::string> failed;
  auto check = [&](bool ok, const std::string& name) {
    if (!ok) failed.push_back(name);
  };
  Rng rng(7);

  // projector
  for (Mode mode : {Mode::ltv, Mode::lti}) {
    const Dims d{4, 3, 6, mode};
    const Dataset ds{d, gaussian(rng, 4, 6 * 4), 0.0};
    const SensingSystem sys = assemble(ds, mode);
    const Eigen::MatrixXd p = complement_projector(sys).matrix();
    check((p * p - p).cwiseAbs().maxCoeff() <= 1e-10, "projector idempotent");
    check((p - p.transpose()).cwiseAbs().maxCoeff() <= 1e-10, "projector symmetric");
    check((p * sys.psi_a).cwiseAbs().maxCoeff() <= 1e-10, "projector annihilates psi_a");
  }

  // solver feasibility and eta monotonicity on a noisy full-size trial
  SyntheticConfig cfg;
  cfg.dims = {10, 4, 30, Mode::ltv};
  cfg.alpha_w = 0.05;
  const SyntheticTrial trial = generate_synthetic(cfg, 0);
  const SensingSystem sys = assemble(trial.dataset, Mode::ltv);
  double previous = std::numeric_limits<double>::infinity();
  for (double scale : {0.5, 1.0, 1.5, 2.0}) {
    SolverOptions opts;
    opts.eta = scale * trial.dataset.eta;
    const Solution sol = solve_blind_id(sys, opts);
    const double resid = (sys.z - sol.u_star - sys.psi_a * sol.a_star).norm();
    check(sol.status == SolveStatus::optimal, "solver converged");
    check(resid <= opts.eta * (1 + 1e-6) + 1e-9, "solver feasible");
    check(sol.objective <= previous * (1 + 1e-6) + 1e-9, "objective nonincreasing in eta");
    previous = sol.objective;
  }

  // stacking round trip
  const Eigen::VectorXd u = trial.inputs.to_vector();
  check(InputPlan::from_vector(cfg.dims, u).to_vector() == u, "input round trip");
  check(LtvModel::from_vector(cfg.dims, trial.a_true).vectorize() == trial.a_true, "dynamics round trip");
  const Eigen::VectorXd w = stack_measurements(trial.dataset) - u - sys.psi_a * trial.a_true;
  check(std::abs(w.norm() - trial.dataset.eta) <= 1e-9, "sensing equation");

  // determinism under parallelism
  SyntheticConfig mc;
  mc.dims = {5, 2, 8, Mode::ltv};
  mc.trials = 8;
  mc.alpha_w = 0.02;
  MonteCarloOptions one, four;
  one.threads = 1;
  four.threads = 4;
  const MetricsSummary a = run_monte_carlo(mc, Mode::ltv, one), b = run_monte_carlo(mc, Mode::ltv, four);
  bool same = a.mape_card == b.mape_card && a.armse_nz == b.armse_nz && a.armse_a == b.armse_a;
  for (std::size_t t = 0; t < a.trials.size(); ++t) same = same && a.trials[t].u_hat == b.trials[t].u_hat;
  check(same, "monte carlo thread independence");

  std::ostringstream os;
  os << (failed.empty() ? "all properties hold" : "failing:");
  for (const auto& f : failed) os << " [" << f << "]";
  return {failed.empty(), os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 oracle equivalence", criterion1},       {"2 noiseless q trend", criterion2},
      {"3 noise trend", criterion3},              {"4 error ratio", criterion4},
      {"5 rank condition soundness", criterion5}, {"6 certificate suite", criterion6},
      {"7 property suite", criterion7},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && !only.count(static_cast<int>(i + 1))) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
