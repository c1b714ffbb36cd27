// bsq: verify | profile | solve | run | report

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "bsq/calculus.hpp"
#include "bsq/elliptic.hpp"
#include "bsq/evolution.hpp"
#include "bsq/io.hpp"
#include "bsq/profile.hpp"
#include "bsq/verify.hpp"

namespace fs = std::filesystem;
using namespace bsq;

namespace {

struct Common {
  std::string config;
  std::string out_dir = "out";
  std::int64_t seed = -1;
  double alpha = 0;
  int resolution = 0;
};

struct AssertionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Params load(const Common& c, std::string* text) {
  Params p;
  if (!c.config.empty()) p = load_config(c.config);
  finalize(p);
  if (c.alpha > 0) p = with_alpha(p, c.alpha);
  if (c.resolution > 0) p = with_resolution(p, c.resolution);
  if (c.seed >= 0) p.seed = std::uint64_t(c.seed);
  validate(p);
  if (text) *text = to_config_text(p);
  return p;
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p);
  out << j.dump(2) << "\n";
}

int cmd_verify(const Common& c) {
  Params p = load(c, nullptr);
  bool ok = false;
  nlohmann::json rep = run_battery(p, p.seed, ok);
  write_json(fs::path(c.out_dir) / "verify.json", rep);
  for (const auto& chk : rep["checks"])
    std::printf("%-36s %s  %.6g\n", chk["name"].get<std::string>().c_str(),
                chk["pass"].get<bool>() ? "PASS" : "FAIL", chk["measured_ratio"].get<double>());
  for (const auto& m : rep["measured"])
    std::printf("%-36s measured  %.6g\n", m["name"].get<std::string>().c_str(),
                m["measured_ratio"].get<double>());
  if (!ok) throw AssertionFailure("verify: at least one check failed");
  return 0;
}

int cmd_profile(const Common& c) {
  Params p = load(c, nullptr);
  Grid g = build_grid(p);
  ProfilePack pk = build_profile(p, g);
  EllipticOperator op(g, p.alpha, p.tol_linear);
  VelocityPack v = velocity_pack(decompose_solve(op, pk.f_star).phi, g, p.alpha);
  ProfileResidual r = f_star_residual(pk, v, g, p);
  const fs::path dir = fs::path(c.out_dir) / "profile";
  fs::create_directories(dir);
  write_snapshot(dir / "f_star", pk.f_star, g, 0.0, "f_star");
  write_snapshot(dir / "residual", r.r, g, 0.0, "residual");
  Field gam(pk.gamma_beta.transpose(), Frame::Y, kNone), kb(pk.k_beta.transpose(), Frame::Y, kNone);
  write_snapshot(dir / "gamma_beta", gam, g, 0.0, "gamma_beta");
  write_snapshot(dir / "k_beta", kb, g, 0.0, "k_beta");
  nlohmann::json l12s = nlohmann::json::array();
  for (double y : {0.0, 0.5, 1.0, 2.0})
    l12s.push_back({{"y", y}, {"numeric", l12(pk.f_star, g, y)}, {"closed_form", pk.l12_fstar(y)}});
  nlohmann::json rep = {{"alpha", p.alpha},      {"c", pk.c},          {"l12", l12s},
                        {"residual_h1", r.hk1}, {"relative_residual", r.rel}};
  write_json(dir / "profile.json", rep);
  std::printf("alpha %.6g  c %.15g  |r|_H1/|F*|_H1 %.6g\n", p.alpha, pk.c, r.rel);
  return 0;
}

int cmd_solve(const Common& c, const std::string& source) {
  Params p = load(c, nullptr);
  Grid g = build_grid(p);
  Field src;
  if (source.empty()) {
    src = build_profile(p, g).f_star;
  } else {
    src = read_snapshot(source);
    if (src.rows() != g.ns || src.cols() != g.nb) throw ConfigError("source snapshot does not match the grid");
  }
  EllipticOperator op(g, p.alpha, p.tol_linear);
  Field direct = op.solve(src);
  const double res = op.last_residual();
  Decomposition d = decompose_solve(op, src);
  const double diff = (direct.data - d.phi.data).cwiseAbs().maxCoeff();
  VelocityPack v = velocity_pack(d.phi, g, p.alpha);
  const fs::path dir = fs::path(c.out_dir) / "solve";
  fs::create_directories(dir);
  write_snapshot(dir / "phi", d.phi, g, 0.0, "phi");
  write_snapshot(dir / "phi_direct", direct, g, 0.0, "phi_direct");
  const std::pair<const char*, const Field*> pack[] = {{"U", &v.U},       {"V", &v.V},
                                                       {"Rcal", &v.Rcal}, {"Lam1", &v.Lam1},
                                                       {"Lam2", &v.Lam2}, {"Lam3", &v.Lam3},
                                                       {"Lam4", &v.Lam4}};
  for (auto [n, f] : pack) write_snapshot(dir / n, *f, g, 0.0, n);
  write_json(dir / "solve.json", {{"relative_residual", res},
                                  {"direct_vs_decomposed_sup", diff},
                                  {"max_abs_tan_phi", max_abs_tan_phi(d.phi, g)}});
  std::printf("residual %.3g  direct-vs-split %.3g\n", res, diff);
  if (!(res <= p.tol_linear)) throw AssertionFailure("solve: residual above tol_linear");
  return 0;
}

int cmd_run(const Common& c) {
  std::string text;
  Params p = load(c, &text);
  StepOptions opt;
  opt.forcing = p.forcing;
  RunResult r = run_simulation(p, opt, c.out_dir, text);
  std::printf("steps %d  s %.6g  wall %.1fs  max |L12(eps)(0)|/(1+|eps|_H0) %.3g  dropped %zu\n",
              r.steps, r.s_final, r.wall_seconds, r.max_constraint_ratio, r.snapshots_dropped);
  if (r.max_constraint_ratio > 1e-12) throw AssertionFailure("run: constraint drift");
  return 0;
}

int cmd_report(const Common& c, const std::string& run_dir) {
  const fs::path dir = run_dir.empty() ? fs::path(c.out_dir) : fs::path(run_dir);
  std::vector<LedgerRow> rows = read_run_csv(dir);
  if (rows.size() < 3) throw ConfigError("run.csv has fewer than 3 rows");
  LedgerReport led = energy_ledger(rows);
  nlohmann::json j = to_json(led);
  j["manifest_mismatch"] = check_manifest(dir);
  // per-term dX/ds rows logged by the run
  if (std::ifstream b(dir / "budget.csv"); b) {
    std::string line;
    std::getline(b, line);
    nlohmann::json terms = nlohmann::json::array();
    while (std::getline(b, line)) {
      double s, a, t, d;
      if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &s, &a, &t, &d) == 4)
        terms.push_back({{"s", s}, {"scaling", a}, {"transport", t}, {"diffusion", d}});
    }
    j["x_budget"] = terms;
  }
  write_json(dir / "ledger.json", j);
  std::printf("rows %d  kappa_E %.6g  kappa_X %.6g  modulation integral %.6g\n", led.rows,
              led.kappa_E, led.kappa_X, led.modulation_integral);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rescaled Boussinesq laboratory"};
  app.require_subcommand(1);
  Common c;
  app.add_option("--config", c.config, "configuration file");
  app.add_option("--out-dir", c.out_dir, "output directory");
  app.add_option("--seed", c.seed, "random seed");
  app.add_option("--alpha", c.alpha, "override alpha");
  app.add_option("--resolution", c.resolution, "n_beta = n_sigma");
  std::string source, run_dir;
  auto* verify = app.add_subcommand("verify", "property battery, JSON report");
  auto* profile = app.add_subcommand("profile", "F* pack and residual");
  auto* solve = app.add_subcommand("solve", "elliptic solve round trip");
  solve->add_option("--source", source, "source snapshot base path (default F*)");
  auto* run = app.add_subcommand("run", "full simulation");
  auto* report = app.add_subcommand("report", "energy ledger of a run directory");
  report->add_option("--run-dir", run_dir, "run directory (default --out-dir)");
  app.fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    if (*verify) return cmd_verify(c);
    if (*profile) return cmd_profile(c);
    if (*solve) return cmd_solve(c, source);
    if (*run) return cmd_run(c);
    if (*report) return cmd_report(c, run_dir);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const AssertionFailure& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
