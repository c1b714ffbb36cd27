#include "bsq/elliptic.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "bsq/calculus.hpp"
#include "bsq/stencil.hpp"

namespace bsq {

namespace {

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd t = m.transpose();
  return Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
}

Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, Eigen::Index ns, Eigen::Index nb) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), nb, ns).transpose();
}

}  // namespace

EllipticOperator::EllipticOperator(const Grid& g, double alpha, double tol)
    : g_(&g), alpha_(alpha), tol_(tol) {
  const int ns = g.ns, nb = g.nb;
  const double a2 = alpha * alpha / (g.hs * g.hs), a1 = 5.0 * alpha / (2.0 * g.hs);
  const double ib2 = 1.0 / (g.hb * g.hb), ib1 = 1.0 / (2.0 * g.hb);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(std::size_t(ns) * nb * 5);
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < nb; ++j) {
      const int r = i * nb + j;
      double cm = -a2 + a1, cp = -a2 - a1, c0 = 2.0 * a2;
      if (i == 0) cp += cm;  // even ghost at σ_min
      const double tb = g.tanb[j], sec2 = 1.0 / (g.cosb[j] * g.cosb[j]);
      double bm = -ib2 - tb * ib1, bp = -ib2 + tb * ib1, b0 = 2.0 * ib2 + sec2 - 6.0;
      if (j == 0) b0 -= bm;       // odd ghost
      if (j == nb - 1) b0 -= bp;  // odd ghost
      t.emplace_back(r, r, c0 + b0);
      if (i > 0) t.emplace_back(r, r - nb, cm);
      if (i < ns - 1) t.emplace_back(r, r + nb, cp);
      if (j > 0) t.emplace_back(r, r - 1, bm);
      if (j < nb - 1) t.emplace_back(r, r + 1, bp);
    }
  }
  A_.resize(ns * nb, ns * nb);
  A_.setFromTriplets(t.begin(), t.end());
  A_.makeCompressed();
  lu_ = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>>();
  lu_->analyzePattern(A_);
  lu_->factorize(A_);
  if (lu_->info() != Eigen::Success)
    throw std::runtime_error("elliptic factorization failed: " + lu_->lastErrorMessage());
}

Field EllipticOperator::apply(const Field& phi) const {
  Eigen::VectorXd y = A_ * flatten(phi.data);
  return Field(unflatten(y, g_->ns, g_->nb), phi.frame, phi.parity);
}

Field EllipticOperator::solve(const Field& src) const {
  if (src.rows() != g_->ns || src.cols() != g_->nb)
    throw std::invalid_argument("solve_phi: grid mismatch");
  Eigen::VectorXd b = flatten(src.data);
  const double bn = b.lpNorm<Eigen::Infinity>();
  if (bn == 0.0) {
    last_residual_ = 0.0;
    return Field::zeros(g_->ns, g_->nb, src.frame, kOdd);
  }
  Eigen::VectorXd x = lu_->solve(b);
  Eigen::VectorXd r = b - A_ * x;
  last_residual_ = r.lpNorm<Eigen::Infinity>() / bn;
  if (last_residual_ > tol_) {  // one refinement sweep
    x += lu_->solve(r);
    r = b - A_ * x;
    last_residual_ = r.lpNorm<Eigen::Infinity>() / bn;
  }
  if (!x.allFinite()) throw std::runtime_error("solve_phi: non-finite solution");
  return Field(unflatten(x, g_->ns, g_->nb), src.frame, kOdd);
}

Field solve_phi(const EllipticOperator& op, const Field& src) { return op.solve(src); }

Decomposition decompose_solve(const EllipticOperator& op, const Field& src) {
  require_frame(src, Frame::Y, "decompose_solve");
  const Grid& g = op.grid();
  const double a = op.alpha();
  Decomposition d;
  Eigen::VectorXd m = radial_moment(src, g);
  d.s_of_y = tail_integral(m, g.hs);
  Eigen::VectorXd dm = stencil::d1_sigma(Eigen::MatrixXd(m), g.hs).col(0);
  d.phi_sing = Field((d.s_of_y / (4.0 * a)) * g.sin2b.transpose(), Frame::Y, kOdd);
  // operator on the singular part, continuous form: sin(2β) is annihilated
  // by the angular part, the radial part uses s' = -m.
  Eigen::VectorXd radial = 0.25 * a * dm + 1.25 * m;
  Field rem(src.data - radial * g.sin2b.transpose(), Frame::Y, kOdd);
  d.phi_bar = op.solve(rem);
  d.phi = Field(d.phi_sing.data + d.phi_bar.data, Frame::Y, kOdd);
  return d;
}

VelocityPack velocity_pack(const Field& phi, const Grid& g, double alpha) {
  const auto& f = phi.data;
  const Parity p = phi.parity;
  Eigen::MatrixXd ps = stencil::d1_sigma(f, g.hs);
  Eigen::MatrixXd aD = alpha * ps;
  Eigen::MatrixXd aD2 = alpha * alpha * stencil::d2_sigma(f, g.hs);
  Eigen::MatrixXd pb = stencil::d1_beta(f, g.hb, p);
  Eigen::MatrixXd pbb = stencil::d2_beta(f, g.hb, p);
  Eigen::MatrixXd aDb = alpha * stencil::d1_beta(ps, g.hb, p);

  auto B = [](const Eigen::VectorXd& v) { return v.asDiagonal(); };
  const Eigen::VectorXd& sn = g.sinb;
  const Eigen::VectorXd& cs = g.cosb;
  const Eigen::VectorXd& tn = g.tanb;
  const Eigen::VectorXd sc = sn.cwiseProduct(cs);
  const Eigen::VectorXd s2 = sn.cwiseAbs2(), c2 = cs.cwiseAbs2();
  const Eigen::VectorXd& sin2 = g.sin2b;
  const Eigen::VectorXd& cos2 = g.cos2b;
  const Eigen::VectorXd secb = cs.cwiseInverse();
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(g.nb);

  VelocityPack v;
  const Frame fr = phi.frame;
  const Parity podd = p, peven = flip(p);
  v.U = Field(-3.0 * f - aD, fr, podd);
  v.V = Field(pb - f * B(tn), fr, peven);
  v.Rcal = Field((2.0 * f + aD) * B(sn.cwiseProduct(secb)) + pb, fr, peven);
  v.Lam1 = Field(aD2 * B(sc) + aDb * B(cos2) - pbb * B(sc) + aD * B(sin2) + pb * B(cos2), fr, peven);
  v.Lam2 = Field(-aD2 * B(c2) + aDb * B(sin2) - pbb * B(s2) - aD * B(2.0 * (one + c2)) +
                     pb * B(tn + sin2) + f * B(tn.cwiseAbs2() - 3.0 * one),
                 fr, podd);
  v.Lam3 = Field(aD2 * B(s2) + aDb * B(sin2) + pbb * B(c2) + aD * B(one + 2.0 * s2) + pb * B(sin2) +
                     2.0 * f,
                 fr, podd);
  v.Lam4 = Field(-aD2 * B(sc) - aDb * B(cos2) + pbb * B(sc) - aD * B(tn + sin2) - pb * B(2.0 * c2) -
                     f * B(2.0 * tn),
                 fr, peven);
  return v;
}

VelocityPack zero_pack(const Grid& g, Frame f) {
  auto z = [&](Parity p) { return Field::zeros(g.ns, g.nb, f, p); };
  return {z(kOdd), z(kEven), z(kEven), z(kEven), z(kOdd), z(kOdd), z(kEven)};
}

VelocityPack operator+(const VelocityPack& a, const VelocityPack& b) {
  auto add = [](const Field& x, const Field& y) { return Field(x.data + y.data, x.frame, x.parity); };
  return {add(a.U, b.U),       add(a.V, b.V),       add(a.Rcal, b.Rcal), add(a.Lam1, b.Lam1),
          add(a.Lam2, b.Lam2), add(a.Lam3, b.Lam3), add(a.Lam4, b.Lam4)};
}

VelocityPack shift_pack(const VelocityPack& v, const Grid& g, double shift) {
  auto s = [&](const Field& f) {
    Field r = shift_sigma(f, g, shift, Outside::Clamp);
    r.frame = Frame::YBAR;
    return r;
  };
  return {s(v.U), s(v.V), s(v.Rcal), s(v.Lam1), s(v.Lam2), s(v.Lam3), s(v.Lam4)};
}

double max_abs_tan_phi(const Field& phi, const Grid& g) {
  return (phi.data * g.tanb.asDiagonal()).cwiseAbs().maxCoeff();
}

PhysicalVelocity physical_velocity(const Field& phi, double lambda, double mu, const Grid& g,
                                   const Params& p) {
  const double a = p.alpha;
  PhysicalVelocity out;
  out.log_rho = ((1.0 + p.delta) * std::log(lambda) - std::log(mu) + g.sigma.array()) / a;
  Eigen::MatrixXd f = phi.data / lambda;
  Eigen::MatrixXd aD = a * stencil::d1_sigma(f, g.hs);
  Eigen::MatrixXd pb = stencil::d1_beta(f, g.hb, phi.parity);
  Eigen::VectorXd rho = out.log_rho.array().exp();
  auto B = [](const Eigen::VectorXd& v) { return v.asDiagonal(); };
  Eigen::MatrixXd ur = (2.0 * f + aD) * B(g.sinb) + pb * B(g.cosb);
  Eigen::MatrixXd u3 = -f * B(g.cosb.cwiseInverse() + 2.0 * g.cosb) - aD * B(g.cosb) + pb * B(g.sinb);
  out.u_r = Field(rho.asDiagonal() * ur, phi.frame, phi.parity * kSinb);
  out.u_3 = Field(rho.asDiagonal() * u3, phi.frame, phi.parity * kCosb);
  return out;
}

}  // namespace bsq
