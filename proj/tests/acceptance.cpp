// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
// `acceptance 3 7` runs a subset.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bsq/calculus.hpp"
#include "bsq/elliptic.hpp"
#include "bsq/evolution.hpp"
#include "bsq/io.hpp"
#include "bsq/profile.hpp"
#include "bsq/verify.hpp"
#include "manufactured.hpp"

using namespace bsq;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20240601;

// pinned tolerances
constexpr double kHardySlack = 1e-8;
constexpr double kHardySeconds = 10.0;
constexpr double kL12Rel = 1e-8;
constexpr double kMmsLo = 3.5, kMmsHi = 4.5;
constexpr double kSolveSeconds = 10.0;
constexpr double kDecompFactor = 2.0;
constexpr double kRateSpread = 0.20;
constexpr double kLambdaRel = 1e-10;
constexpr double kTphysAbs = 1e-6;
constexpr double kConstraint = 1e-12;
constexpr double kSmallData = 1e-2;  // ℰ(0) ≤ kSmallData α³
constexpr double kRunSeconds = 300.0;

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

Params defaults() {
  Params p;
  finalize(p);
  return p;
}

fs::path workdir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("bsq_acceptance_" + name);
  fs::remove_all(d);
  return d;
}

Verdict hardy(bool eta) {
  const auto t0 = Clock::now();
  CheckReport r = eta ? check_hardy_eta(50, kSeed, 512) : check_hardy_cos(50, kSeed + 1, 512);
  const double t = since(t0);
  // measured_ratio is the worst LHS/RHS
  const bool ok = r.samples == 50 && r.measured_ratio <= 1 + kHardySlack && t < kHardySeconds;
  return {ok, fmt("50 samples, worst LHS/RHS %.6f, %.2f s", r.measured_ratio, t)};
}

Verdict l12_closed_forms() {
  double worst = 0, worst_raw = 0;
  for (double a : {0.05, 0.1, 0.2}) {
    double v[2][4];
    const int ns[2] = {512, 1024};
    const double ys[4] = {0.0, 0.5, 1.0, 2.0};
    for (int r = 0; r < 2; ++r) {
      Params p = with_resolution(with_alpha(defaults(), a), 128);
      p.n_sigma = ns[r];
      Grid g = build_grid(p);
      ProfilePack pk = build_profile(p, g);
      for (int k = 0; k < 4; ++k) v[r][k] = l12(pk.f_star, g, ys[k]);
    }
    for (int k = 0; k < 4; ++k) {
      const double exact = 4 * a / (1 + ys[k]);
      // fourth-order rule in σ
      const double rich = (16 * v[1][k] - v[0][k]) / 15;
      worst = std::max(worst, std::abs(rich / exact - 1));
      worst_raw = std::max(worst_raw, std::abs(v[1][k] / exact - 1));
    }
  }
  return {worst <= kL12Rel,
          fmt("worst relative error %.2e after Richardson (%.2e at n_sigma=1024)", worst, worst_raw)};
}

Verdict manufactured() {
  double r1 = 0, r2 = 0;
  const double e1 = testing::manufactured_error(128, 0.1, &r1);
  const auto t0 = Clock::now();
  const double e2 = testing::manufactured_error(256, 0.1, &r2);
  const double t = since(t0);
  const double tol = defaults().tol_linear;
  const double ratio = e1 / e2;
  const bool ok = ratio >= kMmsLo && ratio <= kMmsHi && r1 <= tol && r2 <= tol && t < kSolveSeconds;
  return {ok, fmt("sup errors %.3e / %.3e, ratio %.3f, residuals %.1e %.1e, 256^2 setup+solve %.2f s", e1,
                  e2, ratio, r1, r2, t)};
}

Verdict decomposition() {
  bool ok = true;
  std::string d;
  for (double a : {0.05, 0.1}) {
    Params p = with_resolution(with_alpha(defaults(), a), 128);
    Grid g = build_grid(p);
    EllipticOperator op(g, a);
    ProfilePack pk = build_profile(p, g);
    const double diff =
        (op.solve(pk.f_star).data - decompose_solve(op, pk.f_star).phi.data).cwiseAbs().maxCoeff();
    const double em = testing::manufactured_error(128, a);
    ok = ok && diff <= kDecompFactor * em;
    d += fmt("alpha=%.2f: |direct-split| %.3e vs manufactured %.3e; ", a, diff, em);
  }
  return {ok, d + "128^2"};
}

Verdict coercivity() {
  Params p = defaults();
  bool ok = true;
  double cmin = 1e300;
  std::string d;
  for (int k : {0, 1}) {
    bool verdict[2];
    for (int i = 0; i < 2; ++i) {
      CheckReport r = check_laplace_coercivity(20, kSeed + 3, k, i == 0 ? 128 : 256, p);
      verdict[i] = r.pass;
      cmin = std::min(cmin, r.measured_ratio);
      d += fmt("k=%d n=%d C=%.4g %s; ", k, i == 0 ? 128 : 256, r.measured_ratio, r.pass ? "neg" : "NOT neg");
    }
    ok = ok && verdict[0] && verdict[1];
  }
  return {ok, d + fmt("C_min %.4g", cmin)};
}

// X along a frozen run; returns false at the first non-decrease
bool frozen_run(double dt, double s_end, std::vector<LedgerRow>& rows) {
  Params p = with_resolution(defaults(), 64);
  StepOptions opt;
  opt.freeze_velocity = true;
  opt.freeze_modulation = true;
  Evolver ev(p, opt);
  SimState st = ev.initial_state();
  Diagnostics d = ev.diagnostics(st);
  rows.push_back({d.s, d.E, d.X, d.Y, d.lam_rate, 0});
  bool mono = true;
  const int n = int(std::llround(s_end / dt));
  for (int i = 1; i <= n; ++i) {
    st = ev.imex_step(st, dt);
    d = ev.diagnostics(st);
    mono = mono && d.X < rows.back().X;
    rows.push_back({d.s, d.E, d.X, d.Y, d.lam_rate, 0});
  }
  return mono;
}

Verdict diffusion_decay() {
  const double dt = defaults().dt;
  std::vector<LedgerRow> a, b;
  const bool m1 = frozen_run(dt, 5.0, a);
  const bool m2 = frozen_run(dt / 2, 5.0, b);
  const LedgerReport la = energy_ledger(a), lb = energy_ledger(b);
  const double spread = std::abs(la.kappa_X - lb.kappa_X) / std::max(la.kappa_X, lb.kappa_X);
  const bool ok = m1 && m2 && la.kappa_X > 0 && lb.kappa_X > 0 && spread <= kRateSpread;
  return {ok, fmt("X decreasing every step: %s/%s; fitted rate %.8g (dt) %.8g (dt/2), spread %.2e; 64^2",
                  m1 ? "yes" : "no", m2 ? "yes" : "no", la.kappa_X, lb.kappa_X, spread)};
}

Verdict trivial_modulation() {
  Params p = with_resolution(defaults(), 16);
  p.init = "zero";
  StepOptions opt;
  opt.forcing = false;
  Evolver ev(p, opt);
  SimState st = ev.initial_state();
  double worst = 0;
  const int n10 = int(std::llround(10.0 / p.dt)), n_end = int(std::llround(16.0 / p.dt));
  for (int i = 1; i <= n_end; ++i) {
    st = ev.imex_step(st, p.dt);
    if (i <= n10)
      worst = std::max(worst, std::abs(st.mod.lambda() / (p.lambda_0 * std::exp(-i * p.dt)) - 1));
  }
  const double gap = std::abs(st.mod.t_phys - p.lambda_0);
  return {worst <= kLambdaRel && gap <= kTphysAbs,
          fmt("max relative lambda error on [0,10] %.2e; |t_phys - lambda_0| at s=16 %.2e", worst, gap)};
}

Verdict constraint_run() {
  Params p = defaults();  // α = 0.1, 128², s_end = 10
  StepOptions opt;
  opt.forcing = p.forcing;
  RunResult r = run_simulation(p, opt, workdir("full"), to_config_text(p));
  const double e0 = r.rows.front().E, bound = kSmallData * std::pow(p.alpha, 3);
  const bool ok = e0 <= bound && r.max_constraint_ratio <= kConstraint && r.s_final >= 10.0 - 1e-9 &&
                  r.wall_seconds < kRunSeconds;
  return {ok, fmt("E(0) %.3e (bound %.1e); max |L12(eps)(0)|/(1+|eps|_H0) %.2e over %d steps; s=%.3f in %.1f s",
                  e0, bound, r.max_constraint_ratio, r.steps, r.s_final, r.wall_seconds)};
}

Verdict trend(bool residual) {
  static std::pair<CheckReport, CheckReport> t = profile_trends(defaults());
  const CheckReport& r = residual ? t.first : t.second;
  std::vector<double> v = r.extra["values"];
  return {r.pass, fmt("alpha 0.2/0.1/0.05: %.4e %.4e %.4e", v[0], v[1], v[2])};
}

Verdict determinism() {
  Params p = with_resolution(defaults(), 64);
  p.s_end = 1.0;
  p.seed = kSeed;
  StepOptions opt;
  auto slurp = [](const fs::path& f) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const fs::path a = workdir("det_a"), b = workdir("det_b");
  run_simulation(p, opt, a, to_config_text(p));
  run_simulation(p, opt, b, to_config_text(p));
  const std::string ca = slurp(a / "run.csv"), cb = slurp(b / "run.csv");
  return {!ca.empty() && ca == cb, fmt("%zu bytes, %s; 64^2, s_end=1", ca.size(), ca == cb ? "identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> crit = {
      {"hardy_eta", [] { return hardy(true); }},
      {"hardy_cos", [] { return hardy(false); }},
      {"l12_closed_forms", l12_closed_forms},
      {"elliptic_manufactured", manufactured},
      {"decomposition_consistency", decomposition},
      {"laplace_coercivity", coercivity},
      {"frozen_diffusion_decay", diffusion_decay},
      {"trivial_modulation", trivial_modulation},
      {"constraint_preservation", constraint_run},
      {"fstar_residual_trend", [] { return trend(true); }},
      {"leading_order_velocity", [] { return trend(false); }},
      {"determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < crit.size(); ++i) {
    const int id = int(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Verdict v;
    try {
      v = crit[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %2d %s: %s\n", v.pass ? "PASS" : "FAIL", id, crit[i].first, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
