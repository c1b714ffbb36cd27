#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <memory>

#include "bsq/field.hpp"
#include "bsq/grid.hpp"
#include "bsq/params.hpp"

namespace bsq {

// -α²y²∂_yy - α(5+α)y∂_y - ∂_ββ + ∂_β(tan β ·) - 6 on the log grid, i.e.
// -α²∂_σσ - 5α∂_σ - ∂_ββ + tan β ∂_β + sec²β - 6, second-order centred.
// β ends: odd reflection (Φ = 0 on the faces). σ_max: Φ = 0 on the ghost.
// σ_min: even reflection (∂_σΦ = 0), see README.
class EllipticOperator {
 public:
  // a refinement sweep runs only when the first residual exceeds tol
  EllipticOperator(const Grid& g, double alpha, double tol = 1e-10);

  Field apply(const Field& phi) const;
  Field solve(const Field& src) const;

  // ‖A x - b‖∞ / ‖b‖∞ of the most recent solve
  double last_residual() const { return last_residual_; }
  double alpha() const { return alpha_; }
  const Grid& grid() const { return *g_; }

 private:
  const Grid* g_;
  double alpha_;
  double tol_;
  Eigen::SparseMatrix<double> A_;
  std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>> lu_;
  mutable double last_residual_ = 0;
};

Field solve_phi(const EllipticOperator& op, const Field& src);

struct Decomposition {
  Eigen::VectorXd s_of_y;  // L₁₂(src)(y_i)
  Field phi_sing;          // (1/4α) sin(2β) s(y)
  Field phi_bar;
  Field phi;               // phi_sing + phi_bar
};

Decomposition decompose_solve(const EllipticOperator& op, const Field& src);

struct VelocityPack {
  Field U, V, Rcal, Lam1, Lam2, Lam3, Lam4;
};

VelocityPack velocity_pack(const Field& phi, const Grid& g, double alpha);
VelocityPack zero_pack(const Grid& g, Frame f);
VelocityPack operator+(const VelocityPack& a, const VelocityPack& b);
VelocityPack shift_pack(const VelocityPack& v, const Grid& g, double shift);
double max_abs_tan_phi(const Field& phi, const Grid& g);

struct PhysicalVelocity {
  Field u_r, u_3;
  Eigen::VectorXd log_rho;
};

PhysicalVelocity physical_velocity(const Field& phi, double lambda, double mu, const Grid& g,
                                   const Params& p);

}  // namespace bsq
