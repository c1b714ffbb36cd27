#include "bsq/profile.hpp"

#include <cmath>

#include "bsq/calculus.hpp"
#include "bsq/elliptic.hpp"

namespace bsq {

ProfilePack build_profile(const Params& p, const Grid& g) {
  ProfilePack pk;
  const double a = p.alpha;
  pk.alpha = a;
  Eigen::VectorXd base = g.sinb.cwiseProduct(g.cosb.cwiseAbs2());
  pk.gamma_beta = base.array().pow(a / 3.0);
  pk.k_beta = 3.0 * base;
  pk.c = pk.k_beta.cwiseProduct(pk.gamma_beta).dot(g.qb(WeightKind::Sin2Beta, 0.0));

  Eigen::VectorXd y = g.y();
  Eigen::VectorXd radial = (4.0 * a) * y.array() / (1.0 + y.array()).square();
  Eigen::MatrixXd fs = radial * (pk.gamma_beta / pk.c).transpose();
  // Γ'/Γ = (α/3)(cot β - 2 tan β), (y∂_y)[y/(1+y)²] / [y/(1+y)²] = (1-y)/(1+y)
  Eigen::VectorXd lb = (a / 3.0) * (g.cosb.cwiseQuotient(g.sinb) - 2.0 * g.tanb);
  Eigen::VectorXd ls = (1.0 - y.array()) / (1.0 + y.array());
  pk.f_star = Field(fs, Frame::Y, kOdd);
  pk.f_star_dbeta = Field(fs * lb.asDiagonal(), Frame::Y, kEven);
  pk.f_star_dsigma = Field(ls.asDiagonal() * fs, Frame::Y, kOdd);
  return pk;
}

Field profile_operator(const Field& w, const Field& w_beta, const Field& w_sigma,
                       const VelocityPack& v, const Params& p) {
  Eigen::MatrixXd r = w.data + (1.0 + p.delta) * w_sigma.data +
                      v.U.data.cwiseProduct(w_beta.data) +
                      p.alpha * v.V.data.cwiseProduct(w_sigma.data) - v.Rcal.data.cwiseProduct(w.data);
  return Field(std::move(r), w.frame, w.parity);
}

ProfileResidual f_star_residual(const ProfilePack& pk, const VelocityPack& v, const Grid& g,
                                const Params& p) {
  ProfileResidual out;
  out.r = profile_operator(pk.f_star, pk.f_star_dbeta, pk.f_star_dsigma, v, p);
  out.hk1 = hk_norm(out.r, g, p, 1);
  double fn = hk_norm(pk.f_star, g, p, 1);
  out.rel = fn > 0 ? out.hk1 / fn : 0.0;
  return out;
}

}  // namespace bsq
