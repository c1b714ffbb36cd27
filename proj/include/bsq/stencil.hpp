#pragma once

// Finite-difference kernels on dense (σ rows) x (β columns) blocks.
// σ: 4th-order centred, one-sided 4th-order in the two rows at each end.
// β: 4th-order centred with two ghost columns per end from the reflection
// symmetry (midpoint nodes mirror onto each other exactly).

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>

#include "bsq/field.hpp"

namespace bsq::stencil {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Derived>
Mat<typename Derived::Scalar> d1_sigma(const Eigen::MatrixBase<Derived>& f, double h) {
  using S = typename Derived::Scalar;
  const Eigen::Index n = f.rows();
  Mat<S> out(n, f.cols());
  const S c = S(1) / S(12 * h);
  out.middleRows(2, n - 4) =
      c * (f.topRows(n - 4) - 8 * f.middleRows(1, n - 4) + 8 * f.middleRows(3, n - 4) -
           f.bottomRows(n - 4));
  out.row(0) = c * (-25 * f.row(0) + 48 * f.row(1) - 36 * f.row(2) + 16 * f.row(3) - 3 * f.row(4));
  out.row(1) = c * (-3 * f.row(0) - 10 * f.row(1) + 18 * f.row(2) - 6 * f.row(3) + f.row(4));
  out.row(n - 1) = -c * (-25 * f.row(n - 1) + 48 * f.row(n - 2) - 36 * f.row(n - 3) +
                         16 * f.row(n - 4) - 3 * f.row(n - 5));
  out.row(n - 2) = -c * (-3 * f.row(n - 1) - 10 * f.row(n - 2) + 18 * f.row(n - 3) -
                         6 * f.row(n - 4) + f.row(n - 5));
  return out;
}

template <class Derived>
Mat<typename Derived::Scalar> d2_sigma(const Eigen::MatrixBase<Derived>& f, double h) {
  using S = typename Derived::Scalar;
  const Eigen::Index n = f.rows();
  Mat<S> out(n, f.cols());
  const S c = S(1) / S(12 * h * h);
  out.middleRows(2, n - 4) =
      c * (-f.topRows(n - 4) + 16 * f.middleRows(1, n - 4) - 30 * f.middleRows(2, n - 4) +
           16 * f.middleRows(3, n - 4) - f.bottomRows(n - 4));
  out.row(0) = c * (35 * f.row(0) - 104 * f.row(1) + 114 * f.row(2) - 56 * f.row(3) + 11 * f.row(4));
  out.row(1) = c * (11 * f.row(0) - 20 * f.row(1) + 6 * f.row(2) + 4 * f.row(3) - f.row(4));
  out.row(n - 1) = c * (35 * f.row(n - 1) - 104 * f.row(n - 2) + 114 * f.row(n - 3) -
                        56 * f.row(n - 4) + 11 * f.row(n - 5));
  out.row(n - 2) = c * (11 * f.row(n - 1) - 20 * f.row(n - 2) + 6 * f.row(n - 3) +
                        4 * f.row(n - 4) - f.row(n - 5));
  return out;
}

// Pads two ghost columns on each side.
template <class Derived>
Mat<typename Derived::Scalar> pad_beta(const Eigen::MatrixBase<Derived>& f, Parity p) {
  if (!has_parity(p)) throw std::invalid_argument("β stencil on a field without parity");
  using S = typename Derived::Scalar;
  const Eigen::Index m = f.cols();
  Mat<S> g(f.rows(), m + 4);
  g.middleCols(2, m) = f;
  const S lo = S(int(p.lo)), hi = S(int(p.hi));
  g.col(1) = lo * f.col(0);
  g.col(0) = lo * f.col(1);
  g.col(m + 2) = hi * f.col(m - 1);
  g.col(m + 3) = hi * f.col(m - 2);
  return g;
}

template <class Derived>
Mat<typename Derived::Scalar> d1_beta(const Eigen::MatrixBase<Derived>& f, double h, Parity p) {
  using S = typename Derived::Scalar;
  const Eigen::Index m = f.cols();
  Mat<S> g = pad_beta(f, p);
  const S c = S(1) / S(12 * h);
  return c * (g.leftCols(m) - 8 * g.middleCols(1, m) + 8 * g.middleCols(3, m) - g.rightCols(m));
}

template <class Derived>
Mat<typename Derived::Scalar> d2_beta(const Eigen::MatrixBase<Derived>& f, double h, Parity p) {
  using S = typename Derived::Scalar;
  const Eigen::Index m = f.cols();
  Mat<S> g = pad_beta(f, p);
  const S c = S(1) / S(12 * h * h);
  return c * (-g.leftCols(m) + 16 * g.middleCols(1, m) - 30 * g.middleCols(2, m) +
              16 * g.middleCols(3, m) - g.rightCols(m));
}

// Third-order upwind-biased first derivative for the transport term
// vel * ∂f; the stencil leans against the direction of vel.
template <class Derived, class DerivedV>
Mat<typename Derived::Scalar> upwind_beta(const Eigen::MatrixBase<Derived>& f,
                                          const Eigen::MatrixBase<DerivedV>& vel, double h,
                                          Parity p) {
  using S = typename Derived::Scalar;
  const Eigen::Index n = f.rows(), m = f.cols();
  Mat<S> g = pad_beta(f, p);
  Mat<S> out(n, m);
  const S c = S(1) / S(6 * h);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Index k = j + 2;
    for (Eigen::Index i = 0; i < n; ++i) {
      out(i, j) = vel(i, j) >= 0
                      ? c * (g(i, k - 2) - 6 * g(i, k - 1) + 3 * g(i, k) + 2 * g(i, k + 1))
                      : c * (-2 * g(i, k - 1) - 3 * g(i, k) + 6 * g(i, k + 1) - g(i, k + 2));
    }
  }
  return out;
}

template <class Derived, class DerivedV>
Mat<typename Derived::Scalar> upwind_sigma(const Eigen::MatrixBase<Derived>& f,
                                           const Eigen::MatrixBase<DerivedV>& vel, double h) {
  using S = typename Derived::Scalar;
  const Eigen::Index n = f.rows(), m = f.cols();
  Mat<S> out = d1_sigma(f, h);
  const S c = S(1) / S(6 * h);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 2; i < n - 2; ++i)
      out(i, j) = vel(i, j) >= 0
                      ? c * (f(i - 2, j) - 6 * f(i - 1, j) + 3 * f(i, j) + 2 * f(i + 1, j))
                      : c * (-2 * f(i - 1, j) - 3 * f(i, j) + 6 * f(i + 1, j) - f(i + 2, j));
  return out;
}


// Limited (Koren) upwind derivative in σ: κ = 1/3 where smooth, TVD near
// steep fronts. Used for the ȳ-frame fields, whose far tails are weighted
// by large powers of ρ̄ and must not ring. Zero-gradient ghosts at the ends.
template <class Derived, class DerivedV>
Mat<typename Derived::Scalar> limited_sigma(const Eigen::MatrixBase<Derived>& f,
                                            const Eigen::MatrixBase<DerivedV>& vel, double h) {
  using S = typename Derived::Scalar;
  const Eigen::Index n = f.rows(), m = f.cols();
  Mat<S> out(n, m);
  auto at = [&](Eigen::Index i, Eigen::Index j) { return f(std::clamp<Eigen::Index>(i, 0, n - 1), j); };
  auto psi = [](S r) { return std::max(S(0), std::min({S(2) * r, (S(1) + S(2) * r) / S(3), S(2)})); };
  // face value between i and i+d, upwind side i, d = ±1
  auto face = [&](Eigen::Index i, Eigen::Index j, int d) {
    const S dm = at(i, j) - at(i - d, j), dp = at(i + d, j) - at(i, j);
    if (dm == S(0)) return at(i, j);
    return at(i, j) + S(0.5) * psi(dp / dm) * dm;
  };
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      out(i, j) = vel(i, j) >= 0 ? (face(i, j, 1) - face(i - 1, j, 1)) / h
                                 : (face(i + 1, j, -1) - face(i, j, -1)) / h;
  return out;
}

}  // namespace bsq::stencil
