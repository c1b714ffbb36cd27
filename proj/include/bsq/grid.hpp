#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <utility>

#include "bsq/field.hpp"
#include "bsq/params.hpp"

namespace bsq {

enum class WeightKind { Sin2Beta, CosBeta };

// Product-integration weights q_j with Σ q_j g(β_j) ≈ ∫_0^{π/2} g(β) w(β) dβ,
// w = sin^p(2β) or cos^p(β), p > -1. g is replaced by its local cubic
// interpolant and each cell is integrated against w exactly (up to
// round-off), so endpoint singularities of w cost nothing in accuracy.
Eigen::VectorXd product_weights(int n_beta, WeightKind kind, double p);

struct Grid {
  int ns = 0, nb = 0;
  double smin = 0, smax = 0;
  double hs = 0, hb = 0;

  Eigen::VectorXd sigma;  // σ_i, endpoint inclusive
  Eigen::VectorXd beta;   // β_j = (j + 1/2) h_β
  Eigen::VectorXd sin2b, cos2b, sinb, cosb, tanb;
  Eigen::VectorXd wsig;   // trapezoid weights in σ

  Eigen::VectorXd y() const { return sigma.array().exp(); }

  // cached for the exponents used by the norms; others computed on demand
  Eigen::VectorXd qb(WeightKind kind, double p) const;

  std::map<std::pair<int, double>, Eigen::VectorXd> qcache;
};

Grid build_grid(const Params& p);
Grid build_grid(int n_sigma, int n_beta, double sigma_min, double sigma_max, double eta = 0.99,
                double gamma = 1.0 + 0.1 / 10.0);

inline double ybar_of(double y, double l2) { return l2 * y; }
inline double rhobar_of(double ybar, double alpha) { return std::pow(ybar, 1.0 / alpha); }
inline double sigma_of_rhobar(double rhobar, double alpha, double l2) {
  return alpha * std::log(rhobar) - std::log(l2);
}

// Returns f evaluated at σ + shift by 4-point Lagrange interpolation along
// rows. Outside the grid either zero padding or clamping to the edge row.
enum class Outside { Zero, Clamp };
Field shift_sigma(const Field& f, const Grid& g, double shift, Outside mode);

}  // namespace bsq
