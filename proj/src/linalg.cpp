#include "blindid/linalg.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

namespace blindid::linalg {

double rank_tolerance(Index rows, Index cols, double sigma_max) {
  return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * sigma_max;
}

Index numerical_rank(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  const double tol = rank_tolerance(m.rows(), m.cols(), s(0));
  return (s.array() > tol).count();
}

Index numerical_rank(const Eigen::MatrixXd& m, double tolerance) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  return (svd.singularValues().array() > tolerance).count();
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

Eigen::MatrixXd null_space(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return Eigen::MatrixXd::Identity(m.cols(), m.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double tol = rank_tolerance(m.rows(), m.cols(), s.size() ? s(0) : 0.0);
  const Index rank = (s.array() > tol).count();
  return svd.matrixV().rightCols(m.cols() - rank);
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // result * (n - k + i) / i stays integral at every step.
    const std::uint64_t num = n - k + i;
    const std::uint64_t g = std::gcd(result, i);
    const std::uint64_t r = result / g;
    const std::uint64_t f = num / (i / g);
    if (r != 0 && f > kMax / r) return kMax;
    result = r * f;
  }
  return result;
}

std::uint64_t binomial_prefix_sum(std::uint64_t n, std::uint64_t k) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = 0;
  for (std::uint64_t s = 0; s <= std::min(k, n); ++s) {
    const std::uint64_t b = binomial(n, s);
    if (b > kMax - total) return kMax;
    total += b;
  }
  return total;
}

bool for_each_combination(Index n, Index k, const std::function<bool(std::span<const Index>)>& visit) {
  if (k < 0 || k > n) return true;
  std::vector<Index> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), Index{0});
  while (true) {
    if (!visit(idx)) return false;
    Index pos = k - 1;
    while (pos >= 0 && idx[pos] == n - k + pos) --pos;
    if (pos < 0) return true;
    ++idx[pos];
    for (Index p = pos + 1; p < k; ++p) idx[p] = idx[p - 1] + 1;
  }
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, std::span<const Index> idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) out.col(static_cast<Index>(c)) = m.col(idx[c]);
  return out;
}

}  // namespace blindid::linalg
