#pragma once

#include <Eigen/Dense>

#include "bsq/field.hpp"
#include "bsq/grid.hpp"
#include "bsq/params.hpp"

namespace bsq {

struct ProfilePack {
  double alpha = 0;
  Eigen::VectorXd gamma_beta;  // Γ(β) = (sin β cos²β)^{α/3}
  Eigen::VectorXd k_beta;      // K(β) = 3 sin β cos²β
  double c = 0;                // ∫_0^{π/2} K Γ dβ
  Field f_star;                // (Γ/c) 4αy/(1+y)²
  Field f_star_dbeta;          // ∂_β F*, analytic
  Field f_star_dsigma;         // y ∂_y F*, analytic

  double l12_fstar(double y) const { return 4.0 * alpha / (1.0 + y); }
};

ProfilePack build_profile(const Params& p, const Grid& g);

struct VelocityPack;

// F + (1+δ) y F_y + U ∂_β F + V α y F_y - ℛ F for F = F*, with the velocity
// pack of Φ_{F*}. Returns the field and its ℋ¹ norms.
struct ProfileResidual {
  Field r;
  double hk1 = 0;
  double rel = 0;  // |r|_{ℋ¹} / |F*|_{ℋ¹}
};

ProfileResidual f_star_residual(const ProfilePack& pack, const VelocityPack& vel, const Grid& g,
                                const Params& p);

// W + (1+δ) y W_y + U ∂_β W + V α y W_y - ℛ W from precomputed derivatives.
Field profile_operator(const Field& w, const Field& w_beta, const Field& w_sigma,
                       const VelocityPack& vel, const Params& p);

}  // namespace bsq
