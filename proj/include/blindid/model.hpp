#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

namespace blindid {

using Index = Eigen::Index;

enum class Mode { ltv, lti };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

/// Problem dimensions: `n` states, `k_f` transitions, `q` experiments.
struct Dims {
  Index n = 1;
  Index k_f = 1;
  Index q = 1;
  Mode mode = Mode::ltv;

  void validate() const;

  /// Length of the stacked measurement / input / noise vectors.
  Index measurements() const { return n * k_f * q; }
  /// Length of the dynamics vector `a` (n^2 k_f for LTV, n^2 for LTI).
  Index dynamics() const { return mode == Mode::lti ? n * n : n * n * k_f; }

  friend bool operator==(const Dims&, const Dims&) = default;
};

// Flat index conventions, shared by every module.
//
// Stacked vectors z, u, w are vec() of the (n k_f) x q matrices whose block
// rows are Z_1..Z_kf (resp. U_0..U_{kf-1}), taken column by column. Entry i of
// the state after transition k in experiment j therefore lives at
//
//     j * n * k_f + k * n + i        (j < q, k < k_f, i < n, all 0-based)
//
// The dynamics vector a stores each A[k] row by row, so that the row of Psi_a
// for (j, k, i) is the i-th row of I_n (x) z^(j)[k]^T:
//
//     LTV: k * n * n + i * n + l     LTI: i * n + l
//
// where A[k](i, l) is the coefficient of state l in the update of state i.
inline Index stacked_index(const Dims& d, Index experiment, Index step, Index state) {
  return experiment * d.n * d.k_f + step * d.n + state;
}

inline Index dynamics_index(const Dims& d, Index step, Index row, Index col) {
  const Index block = d.mode == Mode::lti ? 0 : step;
  return block * d.n * d.n + row * d.n + col;
}

/// A[0..k_f-1]; LTI models hold a single matrix used at every step.
struct LtvModel {
  Dims dims;
  std::vector<Eigen::MatrixXd> a_mats;

  void validate() const;
  const Eigen::MatrixXd& at(Index step) const;
  /// Dynamics vector in the layout documented above.
  Eigen::VectorXd vectorize() const;
  static LtvModel from_vector(const Dims& dims, const Eigen::VectorXd& a);
};

/// Measured states. Column `j * (k_f + 1) + k` of `states` is z^(j)[k].
struct Dataset {
  Dims dims;
  Eigen::MatrixXd states;
  double eta = 0.0;

  void validate() const;
  Index column(Index experiment, Index step) const { return experiment * (dims.k_f + 1) + step; }
  auto snapshot(Index experiment, Index step) const { return states.col(column(experiment, step)); }
  /// Z_k = [z^(1)[k] ... z^(q)[k]], n x q.
  Eigen::MatrixXd step_matrix(Index step) const;
  /// z^(j)[0] for every experiment, n x q.
  Eigen::MatrixXd initial_states() const { return step_matrix(0); }
};

struct InputKey {
  Index experiment = 0;
  Index step = 0;
  Index state = 0;
  friend auto operator<=>(const InputKey&, const InputKey&) = default;
};

/// Sparse unknown inputs u^(j)[k]_i.
struct InputPlan {
  Dims dims;
  std::map<InputKey, double> entries;

  void validate() const;
  Index sparsity() const { return static_cast<Index>(entries.size()); }
  Eigen::VectorXd to_vector() const;
  static InputPlan from_vector(const Dims& dims, const Eigen::VectorXd& u, double threshold = 0.0);
};

/// A z + u + w.
Eigen::VectorXd simulate_step(const Eigen::MatrixXd& a_k, const Eigen::VectorXd& z_k,
                              const Eigen::VectorXd& u_k, const Eigen::VectorXd& w_k);

/// Forward-simulates every experiment from `z0` (n x q). `noise` is the
/// stacked noise vector w (length n k_f q) or empty for noiseless data.
/// The returned eta is the realized ||w||_2.
Dataset simulate_dataset(const LtvModel& model, const InputPlan& inputs,
                         const Eigen::VectorXd& noise, const Eigen::MatrixXd& z0);

/// vec of [Z_1; ...; Z_kf]. Initial states are regressors only and never
/// appear here.
Eigen::VectorXd stack_measurements(const Dataset& ds);

}  // namespace blindid
