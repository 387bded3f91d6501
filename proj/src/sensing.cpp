#include "blindid/sensing.hpp"

#include "blindid/error.hpp"
#include "blindid/linalg.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

namespace blindid {

void SensingSystem::validate() const {
  dims.validate();
  const Index m = dims.measurements();
  if (psi_a.rows() != m) throw ShapeError("Psi_a must have n*k_f*q rows");
  if (psi_a.cols() != dims.dynamics()) throw ShapeError("Psi_a column count does not match the model mode");
  if (z.size() != m) throw ShapeError("measurement vector length differs from Psi_a rows");
  if (!(eta >= 0.0)) throw DomainError("eta must be >= 0");
}

namespace {

SensingSystem assemble_impl(const Dataset& ds, Mode mode) {
  ds.validate();
  Dims d = ds.dims;
  d.mode = mode;
  SensingSystem sys{d, Eigen::MatrixXd::Zero(d.measurements(), d.dynamics()), stack_measurements(ds), ds.eta};
  for (Index j = 0; j < d.q; ++j) {
    for (Index k = 0; k < d.k_f; ++k) {
      const auto regressor = ds.snapshot(j, k);
      for (Index i = 0; i < d.n; ++i) {
        sys.psi_a.block(stacked_index(d, j, k, i), dynamics_index(d, k, i, 0), 1, d.n) = regressor.transpose();
      }
    }
  }
  return sys;
}

struct DisjointSet {
  std::vector<Index> parent;
  explicit DisjointSet(Index n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), Index{0}); }
  Index find(Index x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void join(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

std::string rank_message(Index rank, Index cols) {
  return "Psi_a is rank deficient (numerical rank " + std::to_string(rank) + " of " + std::to_string(cols) +
         " columns): the state matrices Z_k are not full row rank, so the dynamics cannot be separated "
         "from the inputs; collect at least n linearly independent experiments per step";
}

}  // namespace

SensingSystem assemble_psi_a_ltv(const Dataset& ds) { return assemble_impl(ds, Mode::ltv); }
SensingSystem assemble_psi_a_lti(const Dataset& ds) { return assemble_impl(ds, Mode::lti); }
SensingSystem assemble(const Dataset& ds, Mode mode) { return assemble_impl(ds, mode); }

std::vector<Block> block_decomposition(const Eigen::MatrixXd& m) {
  DisjointSet sets(m.cols());
  std::vector<Index> first_col(static_cast<std::size_t>(m.rows()), -1);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (m(r, c) == 0.0) continue;
      if (first_col[r] < 0) first_col[r] = c;
      else sets.join(first_col[r], c);
    }
  }
  std::vector<Index> block_of_root(static_cast<std::size_t>(m.cols()), -1);
  std::vector<Block> blocks;
  for (Index c = 0; c < m.cols(); ++c) {
    const Index root = sets.find(c);
    if (block_of_root[root] < 0) {
      block_of_root[root] = static_cast<Index>(blocks.size());
      blocks.emplace_back();
    }
    blocks[block_of_root[root]].cols.push_back(c);
  }
  for (Index r = 0; r < m.rows(); ++r) {
    if (first_col[r] >= 0) blocks[block_of_root[sets.find(first_col[r])]].rows.push_back(r);
  }
  return blocks;
}

namespace {

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, const Block& b) {
  Eigen::MatrixXd out(static_cast<Index>(b.rows.size()), static_cast<Index>(b.cols.size()));
  for (std::size_t r = 0; r < b.rows.size(); ++r)
    for (std::size_t c = 0; c < b.cols.size(); ++c) out(static_cast<Index>(r), static_cast<Index>(c)) = m(b.rows[r], b.cols[c]);
  return out;
}

}  // namespace

RankInfo column_rank(const Eigen::MatrixXd& m) {
  RankInfo info;
  info.cols = m.cols();
  std::vector<double> sv;
  for (const auto& b : block_decomposition(m)) {
    if (b.rows.empty()) continue;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(submatrix(m, b));
    for (Index i = 0; i < svd.singularValues().size(); ++i) sv.push_back(svd.singularValues()(i));
  }
  if (sv.empty()) return info;
  info.sigma_max = *std::max_element(sv.begin(), sv.end());
  const double tol = linalg::rank_tolerance(m.rows(), m.cols(), info.sigma_max);
  info.sigma_min = std::numeric_limits<double>::infinity();
  for (double s : sv) {
    if (s > tol) {
      ++info.rank;
      info.sigma_min = std::min(info.sigma_min, s);
    }
  }
  if (info.rank == 0) info.sigma_min = 0.0;
  return info;
}

ComplementProjector complement_projector(const SensingSystem& sys) {
  const Eigen::MatrixXd& psi = sys.psi_a;
  const RankInfo info = column_rank(psi);
  if (!info.full_column_rank()) throw IdentifiabilityError(rank_message(info.rank, info.cols));

  ComplementProjector p;
  p.size_ = psi.rows();
  p.rank_ = info.rank;
  p.part_of_row_.assign(static_cast<std::size_t>(psi.rows()), -1);
  for (auto& b : block_decomposition(psi)) {
    if (b.rows.empty()) continue;
    const Eigen::MatrixXd sub = submatrix(psi, b);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(sub);
    Eigen::MatrixXd basis = qr.householderQ() * Eigen::MatrixXd::Identity(sub.rows(), sub.cols());
    const auto idx = static_cast<Index>(p.parts_.size());
    for (Index r : b.rows) p.part_of_row_[r] = idx;
    p.parts_.push_back({std::move(b.rows), std::move(basis)});
  }
  return p;
}

Eigen::VectorXd ComplementProjector::apply_range(const Eigen::VectorXd& x) const {
  if (x.size() != size_) throw ShapeError("projector applied to a vector of the wrong length");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size_);
  Eigen::VectorXd local;
  for (const auto& part : parts_) {
    local.resize(static_cast<Index>(part.rows.size()));
    for (std::size_t r = 0; r < part.rows.size(); ++r) local(static_cast<Index>(r)) = x(part.rows[r]);
    local = part.basis * (part.basis.transpose() * local);
    for (std::size_t r = 0; r < part.rows.size(); ++r) out(part.rows[r]) = local(static_cast<Index>(r));
  }
  return out;
}

Eigen::VectorXd ComplementProjector::apply(const Eigen::VectorXd& x) const { return x - apply_range(x); }

Eigen::VectorXd ComplementProjector::column(Index i) const {
  Eigen::VectorXd col = Eigen::VectorXd::Zero(size_);
  col(i) = 1.0;
  const Index part_idx = part_of_row_.at(static_cast<std::size_t>(i));
  if (part_idx < 0) return col;
  const auto& part = parts_[part_idx];
  const auto pos = std::find(part.rows.begin(), part.rows.end(), i) - part.rows.begin();
  const Eigen::VectorXd v = part.basis * part.basis.row(pos).transpose();
  for (std::size_t r = 0; r < part.rows.size(); ++r) col(part.rows[r]) -= v(static_cast<Index>(r));
  return col;
}

Eigen::MatrixXd ComplementProjector::matrix() const {
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(size_, size_);
  for (const auto& part : parts_) {
    const Eigen::MatrixXd local = part.basis * part.basis.transpose();
    for (std::size_t r = 0; r < part.rows.size(); ++r)
      for (std::size_t c = 0; c < part.rows.size(); ++c)
        p(part.rows[r], part.rows[c]) -= local(static_cast<Index>(r), static_cast<Index>(c));
  }
  return p;
}

}  // namespace blindid
