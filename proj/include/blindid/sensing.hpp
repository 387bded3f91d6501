#pragma once

#include "blindid/model.hpp"

#include <Eigen/Dense>

#include <vector>

namespace blindid {

/// z = Psi_u u + Psi_a a + w with Psi_u = I (never materialized).
struct SensingSystem {
  Dims dims;
  Eigen::MatrixXd psi_a;
  Eigen::VectorXd z;
  double eta = 0.0;

  void validate() const;
  Index rows() const { return psi_a.rows(); }
};

SensingSystem assemble_psi_a_ltv(const Dataset& ds);
SensingSystem assemble_psi_a_lti(const Dataset& ds);
SensingSystem assemble(const Dataset& ds, Mode mode);

/// Rows and columns of one connected component of the nonzero pattern of a
/// matrix. Components share no rows and no columns, so the matrix is block
/// diagonal up to permutation. For LTV Psi_a there is one component per
/// (step, state) pair with Z_k^T as its block; for LTI one per state.
struct Block {
  std::vector<Index> rows;
  std::vector<Index> cols;
};

std::vector<Block> block_decomposition(const Eigen::MatrixXd& m);

/// Per-block singular values, combined under the global rank threshold.
struct RankInfo {
  Index rank = 0;
  Index cols = 0;
  double sigma_max = 0.0;
  double sigma_min = 0.0;  // smallest singular value counted in the rank
  bool full_column_rank() const { return rank == cols; }
};

RankInfo column_rank(const Eigen::MatrixXd& m);

/// Orthogonal projector P = I - Psi_a (Psi_a^T Psi_a)^{-1} Psi_a^T onto
/// range(Psi_a)^perp, held as one orthonormal range basis per block.
class ComplementProjector {
 public:
  ComplementProjector() = default;

  Index size() const { return size_; }
  /// Dimension of range(Psi_a).
  Index range_rank() const { return rank_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  /// (I - P) x, the component of x inside range(Psi_a).
  Eigen::VectorXd apply_range(const Eigen::VectorXd& x) const;
  /// Column i of P.
  Eigen::VectorXd column(Index i) const;
  /// Dense P.
  Eigen::MatrixXd matrix() const;

 private:
  friend ComplementProjector complement_projector(const SensingSystem& sys);

  struct Part {
    std::vector<Index> rows;
    Eigen::MatrixXd basis;  // |rows| x rank, orthonormal columns
  };

  Index size_ = 0;
  Index rank_ = 0;
  std::vector<Part> parts_;
  std::vector<Index> part_of_row_;  // -1 for rows no column touches
};

/// Throws IdentifiabilityError when Psi_a is rank deficient.
ComplementProjector complement_projector(const SensingSystem& sys);

}  // namespace blindid
