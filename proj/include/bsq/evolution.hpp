#pragma once

#include <Eigen/SparseCore>
#include <memory>

#include "bsq/calculus.hpp"
#include "bsq/elliptic.hpp"
#include "bsq/field.hpp"
#include "bsq/grid.hpp"
#include "bsq/params.hpp"
#include "bsq/profile.hpp"

namespace bsq {

struct ModulationState {
  double s = 0;
  double log_lambda = 0;
  double log_mu = 0;
  double int_lam = 0;  // ∫_0^s (λ_s/λ + 1)
  double t_phys = 0;   // ∫_0^s λ

  double lambda() const { return std::exp(log_lambda); }
  double mu() const { return std::exp(log_mu); }
  double l1() const { return std::exp(-s); }
  double log_l2(const Params& p) const;
  double l2(const Params& p) const { return std::exp(log_l2(p)); }
};

ModulationState initial_modulation(const Params& p);

struct Rates {
  double lam_rate = 0;  // λ_s/λ + 1
  double mu_rate = 0;   // μ_s/μ
  double l1_rate = -1;  // l₁'/l₁
  double l2_rate = 0;   // l₂'/l₂
  double log_prefactor = 0;    // ln[(μ l₂ / λ^{1+δ})^{2/α} λ]
  double prefactor_ratio = 0;  // prefactor / l₂(0)^{2/α}
};

Rates modulation_coeffs(const ModulationState& m, double lam_rate, const Params& p);

// Heun-consistent modulation update with a constant rate over the step.
ModulationState advance_modulation(const ModulationState& m, double lam_rate, double dt,
                                   const Params& p);

struct SimState {
  ModulationState mod;
  Field eps;      // y-frame, odd/odd
  Field xi, phi;  // ȳ-frame, odd/odd and even/even
  Field phi_eps;  // stream function of eps
  double lam_rate = 0;  // per-step norms live in the run CSV, not here
};

struct StepOptions {
  bool forcing = true;             // keep the F* residual as a drive
  bool freeze_velocity = false;    // no transport/stretching, eps frozen
  bool freeze_modulation = false;  // λ_s/λ + 1 ≡ 0
  bool coupling = true;            // l₁ ξ(l₂ y) in the eps equation
};

struct Rhs {
  Field d_eps, d_xi, d_phi;
  double lam_rate = 0;
  double cfl = 0;
};

// Backward-Euler solves of (I - c ρ̄^{-2}(Δ̃ - s sec²β)) x = b, c = e^{log_coef}.
// The β part is diagonalised once; each solve is one tridiagonal system in σ per mode.
class DiffusionSolver {
 public:
  DiffusionSolver(const Grid& g, double alpha, Parity parity, bool with_sec2, double tol);
  Field solve(const Field& b, double log_coef) const;
  // largest relative residual seen, before any refinement sweep
  double worst_residual() const { return worst_; }

 private:
  Eigen::MatrixXd modal_solve(const Eigen::MatrixXd& rhs, const Eigen::VectorXd& th,
                              const Eigen::VectorXd& ta) const;

  const Grid* g_;
  double alpha_;
  double tol_;
  Eigen::SparseMatrix<double> L_;  // full operator, for the residual
  double c0_ = 0, cm_ = 0, cp_ = 0;   // σ stencil
  Eigen::MatrixXd P_, Pinv_;          // right eigenvectors of the β part and their inverse
  Eigen::VectorXd lam_;
  mutable double worst_ = 0;
};

struct Diagnostics {
  double s, t_phys, lambda, mu, l1, l2, lam_rate;
  double hk, X, Y, E;
  double l12_drift, compat, prefactor_ratio;
  double eps_h0;
};

struct PhysicalFields {
  Field omega, theta_r, theta_3;
  Eigen::VectorXd log_R;      // for the y-frame rows
  Eigen::VectorXd log_R_bar;  // for the ȳ-frame rows
  double t_phys = 0;
};

class Evolver {
 public:
  explicit Evolver(const Params& p, StepOptions opt = {});
  Evolver(const Evolver&) = delete;
  Evolver& operator=(const Evolver&) = delete;

  const Params& params() const { return p_; }
  const Grid& grid() const { return g_; }
  const ProfilePack& profile() const { return pk_; }
  const EllipticOperator& elliptic() const { return *op_; }
  const Field& phi_fstar() const { return phi_f_; }
  const VelocityPack& pack_fstar() const { return pack_f_; }
  const Field& forcing() const { return forcing_; }
  StepOptions& options() { return opt_; }
  const StepOptions& options() const { return opt_; }

  // θ₀ = ρ̄^{m} g (ȳ-frame); ξ₀ = ∂_r θ₀, φ₀ = ∂_3 θ₀ as profiles.
  SimState init_from_theta(const Field& g, double m, const Field& eps0) const;
  // Seeded small data per params.init, scaled to ℰ(0) = 0.9 δ₀ α³.
  SimState initial_state() const;

  Field stream(const Field& eps) const;
  Rhs rhs_all(const SimState& st) const;
  SimState imex_step(const SimState& st, double dt);
  Field project(const Field& eps) const;

  double compatibility_residual(const Field& xi, const Field& phi) const;
  Diagnostics diagnostics(const SimState& st) const;
  PhysicalFields reconstruct_physical(const SimState& st) const;

 private:
  Params p_;
  StepOptions opt_;
  Grid g_;
  ProfilePack pk_;
  std::unique_ptr<EllipticOperator> op_;
  Field phi_f_;
  VelocityPack pack_f_;
  Field forcing_;
  double l12_fstar_ = 0;
  std::unique_ptr<DiffusionSolver> diff_xi_, diff_phi_;
};

// ξ, φ from θ = ρ̄^{m} g via ∂_r, ∂_3 in (ρ̄, β).
void gradient_profiles(const Field& g, double m, const Grid& grid, double alpha, Field& xi,
                       Field& phi);

}  // namespace bsq
