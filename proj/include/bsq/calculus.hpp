#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "bsq/field.hpp"
#include "bsq/grid.hpp"
#include "bsq/params.hpp"

namespace bsq {

enum class Deriv { D_SIGMA, PARTIAL_BETA, D_BETA, D_RHOBAR };

Field apply_derivative(const Field& f, Deriv op, const Grid& g, double alpha);

// shorthand for the individual operators
Field d_sigma(const Field& f, const Grid& g);
Field d_sigma2(const Field& f, const Grid& g);
Field d_beta(const Field& f, const Grid& g);   // ∂_β
Field d_beta2(const Field& f, const Grid& g);  // ∂_ββ
Field D_beta(const Field& f, const Grid& g);   // sin(2β) ∂_β

// pointwise products with β-only or σ-only factors
Field times_beta(const Field& f, const Eigen::VectorXd& w, Parity wp);
Field times_sigma(const Field& f, const Eigen::VectorXd& w);

// α² D² f + α D f + (1/cos β) ∂_β(cos β ∂_β f), D = ∂_σ
Field laplace_tilde(const Field& f, const Grid& g, double alpha);

// Pairwise summation; fixed order for reproducibility.
double pairwise_sum(const double* x, std::size_t n);

// m(σ_i) = ∫ f(σ_i, β) K(β) dβ
Eigen::VectorXd radial_moment(const Field& f, const Grid& g);
// Cumulative ∫_{σ}^{σ_max} m dσ at every node, 4th-order.
Eigen::VectorXd tail_integral(const Eigen::VectorXd& m, double h);
// ∫_{σ_0}^{σ_max} m dσ for arbitrary σ_0 in range.
double tail_integral_at(const Eigen::VectorXd& m, const Grid& g, double sigma0);

double l12(const Field& f, const Grid& g, double y0);
Eigen::VectorXd l12_profile(const Field& f, const Grid& g);

// Σ_i exp(lw_i) Σ_j q_j a_ij b_ij with trapezoid weights in σ folded in;
// the radial log-weight keeps ρ̄-powers finite at any α.
double weighted_inner(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::VectorXd& lw,
                      const Eigen::VectorXd& qb, const Grid& g);

double hk_inner(const Field& f, const Field& h, const Grid& g, const Params& p, int k);
double hk_norm(const Field& f, const Grid& g, const Params& p, int k);
// Mass fraction of |f|²_{ℋᵏ} within ln 10 of either σ end.
double hk_tail_fraction(const Field& f, const Grid& g, const Params& p, int k, double total = -1);

enum class WNorm { W1, W2, W3 };

// ⟨ρ̄^{pf} f, ρ̄^{pg} h⟩ in 𝒲_which^k. The powers let callers weight fields by
// ρ̄^{-1}, ρ̄^{-2} without forming those (possibly overflowing) factors.
double w_inner(const Field& f, const Field& h, WNorm which, int k, const Grid& g, double alpha,
               double eta, double pf = 0.0, double pg = 0.0);
double w_norm(const Field& f, WNorm which, int k, const Grid& g, double alpha, double eta,
              double pf = 0.0);

struct NormReport {
  double hk = 0, w1 = 0, w2 = 0, w3 = 0;
  double X = 0, Y = 0, E = 0;
  double tail = 0;
  int k = 0;
};

NormReport energy_xye(const Field& eps, const Field& xi, const Field& phi, int k, double c_embed,
                      const Grid& g, const Params& p);

}  // namespace bsq
