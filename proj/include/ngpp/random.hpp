#ifndef NGPP_RANDOM_HPP
#define NGPP_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

#include "ngpp/numcore.hpp"

namespace ngpp {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a master seed and a path of
/// counters (replicate, column, ...). The derivation is order-sensitive in
/// the path but independent of any scheduling.
inline std::uint64_t stream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t c : path) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  return Rng(stream_seed(seed, path));
}

inline Matrix standard_normal(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  // Column-major fill keeps each column a contiguous run of the stream.
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

inline Vector random_unit_vector(Index p, Rng& rng) {
  Vector v = standard_normal(p, 1, rng);
  while (v.norm() == 0.0) v = standard_normal(p, 1, rng);
  return v / v.norm();
}

/// Haar-distributed orthogonal matrix.
inline Matrix random_orthogonal(Index p, Rng& rng) {
  const Matrix g = standard_normal(p, p, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < p; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

}  // namespace ngpp

#endif  // NGPP_RANDOM_HPP
