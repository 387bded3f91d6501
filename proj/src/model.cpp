#include "blindid/model.hpp"

#include "blindid/error.hpp"

#include <cmath>
#include <string>

namespace blindid {

std::string_view to_string(Mode mode) { return mode == Mode::lti ? "lti" : "ltv"; }

Mode parse_mode(std::string_view text) {
  if (text == "ltv") return Mode::ltv;
  if (text == "lti") return Mode::lti;
  throw ConfigError("unknown mode '" + std::string(text) + "' (expected ltv or lti)");
}

void Dims::validate() const {
  if (n < 1 || k_f < 1 || q < 1) {
    throw ShapeError("dimensions must satisfy n >= 1, k_f >= 1, q >= 1 (got n=" + std::to_string(n) +
                     ", k_f=" + std::to_string(k_f) + ", q=" + std::to_string(q) + ")");
  }
}

void LtvModel::validate() const {
  dims.validate();
  const std::size_t expected = dims.mode == Mode::lti ? 1 : static_cast<std::size_t>(dims.k_f);
  if (a_mats.size() != expected) {
    throw ShapeError("model holds " + std::to_string(a_mats.size()) + " matrices, expected " +
                     std::to_string(expected));
  }
  for (const auto& a : a_mats) {
    if (a.rows() != dims.n || a.cols() != dims.n) throw ShapeError("dynamics matrix is not n x n");
    if (!a.allFinite()) throw DomainError("dynamics matrix has non-finite entries");
  }
}

const Eigen::MatrixXd& LtvModel::at(Index step) const {
  return dims.mode == Mode::lti ? a_mats.front() : a_mats.at(static_cast<std::size_t>(step));
}

Eigen::VectorXd LtvModel::vectorize() const {
  Eigen::VectorXd a(dims.dynamics());
  const Index blocks = dims.mode == Mode::lti ? 1 : dims.k_f;
  for (Index k = 0; k < blocks; ++k) {
    const auto& m = at(k);
    for (Index i = 0; i < dims.n; ++i)
      for (Index l = 0; l < dims.n; ++l) a(dynamics_index(dims, k, i, l)) = m(i, l);
  }
  return a;
}

LtvModel LtvModel::from_vector(const Dims& dims, const Eigen::VectorXd& a) {
  if (a.size() != dims.dynamics()) throw ShapeError("dynamics vector has the wrong length");
  LtvModel model{dims, {}};
  const Index blocks = dims.mode == Mode::lti ? 1 : dims.k_f;
  for (Index k = 0; k < blocks; ++k) {
    Eigen::MatrixXd m(dims.n, dims.n);
    for (Index i = 0; i < dims.n; ++i)
      for (Index l = 0; l < dims.n; ++l) m(i, l) = a(dynamics_index(dims, k, i, l));
    model.a_mats.push_back(std::move(m));
  }
  return model;
}

void Dataset::validate() const {
  dims.validate();
  if (states.rows() != dims.n || states.cols() != dims.q * (dims.k_f + 1)) {
    throw ShapeError("dataset must hold q*(k_f+1) snapshots of length n");
  }
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw DomainError("noise bound eta must be finite and >= 0");
}

Eigen::MatrixXd Dataset::step_matrix(Index step) const {
  Eigen::MatrixXd z(dims.n, dims.q);
  for (Index j = 0; j < dims.q; ++j) z.col(j) = snapshot(j, step);
  return z;
}

void InputPlan::validate() const {
  dims.validate();
  for (const auto& [key, value] : entries) {
    if (key.experiment < 0 || key.experiment >= dims.q || key.step < 0 || key.step >= dims.k_f ||
        key.state < 0 || key.state >= dims.n) {
      throw ShapeError("input index out of range");
    }
    if (!std::isfinite(value)) throw DomainError("input value is not finite");
  }
}

Eigen::VectorXd InputPlan::to_vector() const {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(dims.measurements());
  for (const auto& [key, value] : entries) u(stacked_index(dims, key.experiment, key.step, key.state)) = value;
  return u;
}

InputPlan InputPlan::from_vector(const Dims& dims, const Eigen::VectorXd& u, double threshold) {
  if (u.size() != dims.measurements()) throw ShapeError("input vector has the wrong length");
  InputPlan plan{dims, {}};
  for (Index j = 0; j < dims.q; ++j)
    for (Index k = 0; k < dims.k_f; ++k)
      for (Index i = 0; i < dims.n; ++i) {
        const double v = u(stacked_index(dims, j, k, i));
        if (v != 0.0 && std::abs(v) > threshold) plan.entries[{j, k, i}] = v;
      }
  return plan;
}

Eigen::VectorXd simulate_step(const Eigen::MatrixXd& a_k, const Eigen::VectorXd& z_k,
                              const Eigen::VectorXd& u_k, const Eigen::VectorXd& w_k) {
  const Index n = z_k.size();
  if (a_k.rows() != n || a_k.cols() != n || u_k.size() != n || w_k.size() != n) {
    throw ShapeError("simulate_step: arguments must all have dimension n");
  }
  return a_k * z_k + u_k + w_k;
}

Dataset simulate_dataset(const LtvModel& model, const InputPlan& inputs,
                         const Eigen::VectorXd& noise, const Eigen::MatrixXd& z0) {
  model.validate();
  const Dims& d = model.dims;
  if (inputs.dims.n != d.n || inputs.dims.k_f != d.k_f || inputs.dims.q != d.q) {
    throw ShapeError("input plan dimensions differ from the model");
  }
  inputs.validate();
  if (z0.rows() != d.n || z0.cols() != d.q) throw ShapeError("initial states must be n x q");
  if (!z0.allFinite()) throw DomainError("initial states must be finite");
  const bool noisy = noise.size() != 0;
  if (noisy && noise.size() != d.measurements()) throw ShapeError("noise vector must have length n*k_f*q");
  if (noisy && !noise.allFinite()) throw DomainError("noise must be finite");

  const Eigen::VectorXd u = inputs.to_vector();
  Dataset ds{d, Eigen::MatrixXd(d.n, d.q * (d.k_f + 1)), noisy ? noise.norm() : 0.0};
  for (Index j = 0; j < d.q; ++j) {
    ds.states.col(ds.column(j, 0)) = z0.col(j);
    for (Index k = 0; k < d.k_f; ++k) {
      const Index base = stacked_index(d, j, k, 0);
      Eigen::VectorXd next = model.at(k) * ds.states.col(ds.column(j, k)) + u.segment(base, d.n);
      if (noisy) next += noise.segment(base, d.n);
      ds.states.col(ds.column(j, k + 1)) = next;
    }
  }
  if (!ds.states.allFinite()) throw OverflowError("simulation produced non-finite states");
  return ds;
}

Eigen::VectorXd stack_measurements(const Dataset& ds) {
  ds.validate();
  const Dims& d = ds.dims;
  Eigen::VectorXd z(d.measurements());
  for (Index j = 0; j < d.q; ++j)
    for (Index k = 0; k < d.k_f; ++k) z.segment(stacked_index(d, j, k, 0), d.n) = ds.snapshot(j, k + 1);
  return z;
}

}  // namespace blindid
