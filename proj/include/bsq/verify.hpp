#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bsq/elliptic.hpp"
#include "bsq/evolution.hpp"
#include "bsq/field.hpp"
#include "bsq/grid.hpp"
#include "bsq/params.hpp"
#include "bsq/profile.hpp"
#include "json.hpp"

namespace bsq {

struct CheckReport {
  std::string name;
  bool pass = true;
  double measured_ratio = 0;  // worst LHS/RHS, or an empirical constant
  int samples = 0;
  std::string worst;          // description of the worst sample
  nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json to_json(const CheckReport& r);

// f = sin(2β) P(β) with random cubic P; ∫f²/sin^{η+2} vs ∫(f')²/sin^η / (1+η)².
CheckReport check_hardy_eta(int n_samples, std::uint64_t seed, int n_beta = 512);
// random smooth f without boundary vanishing, cos-weighted Hardy.
CheckReport check_hardy_cos(int n_samples, std::uint64_t seed, int n_beta = 512);

// sup|f|² against ∫(f² + (D_ρ̄ f)²) dρ̄/ρ̄ for radial samples, at n and 2n nodes;
// plus the ℋ² embedding ratio √α max|g| / |g|_{ℋ²} on 2D samples.
CheckReport check_linf(int n_samples, std::uint64_t seed, const Params& p, int n = 128);

// the three forms ⟨ρ̄⁻²(Δ̃ - sec²β)ξ, ξ⟩_{𝒲₁,𝒲₂}, ⟨ρ̄⁻²Δ̃φ, φ⟩_{𝒲₃}
struct CoercivityForms {
  double f1 = 0, f2 = 0, f3 = 0;  // form values
  double b1 = 0, b2 = 0, b3 = 0;  // matching |ρ̄⁻¹∂_β·|² + |ρ̄⁻¹D_ρ̄·|² brackets
};
CoercivityForms laplace_forms(const Field& xi, const Field& phi, int k, const Grid& g, double alpha,
                              double eta);
// grid used for the coercivity samples, σ ∈ ±30α so ln ρ̄ spans ±30
Grid coercivity_grid(int n, const Params& p);
CheckReport check_laplace_coercivity(int n_samples, std::uint64_t seed, int k, int n,
                                     const Params& p);

// Linearised operator about F*, term by term.
Field assemble_mf(const Field& eps, const ProfilePack& pk, const VelocityPack& pack_f,
                  const EllipticOperator& op, const Params& p);
// min ⟨𝓜_F ε, ε⟩_{ℋᵏ}/|ε|²_{ℋᵏ} over projected samples; measured, never asserted
CheckReport mf_coercivity_sample(int n_samples, std::uint64_t seed, const Params& p);

// seeded admissible fields
Field random_eps(const Grid& g, std::uint64_t seed);
Field random_xi(const Grid& g, double alpha, std::uint64_t seed);
Field random_phi(const Grid& g, double alpha, std::uint64_t seed);

struct LedgerRow {
  double s = 0, E = 0, X = 0, Y = 0, lam_rate = 0, mu_rate = 0;
};

struct LedgerReport {
  int rows = 0;
  std::vector<double> dE, dX;   // centred differences, one per interior row
  double kappa_E = 0;           // fitted decay of ℰ; 0 when ℰ is not decreasing
  double kappa_X = 0;
  bool E_decreasing = false, X_decreasing = false;
  double modulation_integral = 0;  // ∫ |μ_s/μ| + |λ_s/λ + 1| ds
  double max_E = 0, max_X = 0;
};

LedgerReport energy_ledger(const std::vector<LedgerRow>& history);
nlohmann::json to_json(const LedgerReport& r);

// dX/ds split by term for the current state: scaling, transport, diffusion.
struct XBudget {
  double scaling = 0, transport = 0, diffusion = 0;
};
XBudget x_budget(const Evolver& ev, const SimState& st);

// relative F* residual and sup|U - U_lead| across α = 0.2, 0.1, 0.05; both must shrink
std::pair<CheckReport, CheckReport> profile_trends(const Params& p);

// full battery for `verify`
nlohmann::json run_battery(const Params& p, std::uint64_t seed, bool& all_pass);

}  // namespace bsq
