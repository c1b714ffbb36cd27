#include "bsq/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "bsq/calculus.hpp"
#include "bsq/stencil.hpp"

namespace bsq {

nlohmann::json to_json(const CheckReport& r) {
  return {{"name", r.name},     {"pass", r.pass},   {"measured_ratio", r.measured_ratio},
          {"samples", r.samples}, {"worst", r.worst}, {"extra", r.extra}};
}

namespace {

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t s) : gen(s) {}
  double u(double a, double b) { return std::uniform_real_distribution<double>(a, b)(gen); }
};

std::string describe(const std::vector<double>& c) {
  std::ostringstream os;
  os << "coeffs [";
  for (std::size_t i = 0; i < c.size(); ++i) os << (i ? ", " : "") << c[i];
  os << "]";
  return os.str();
}

}  // namespace

CheckReport check_hardy_eta(int n_samples, std::uint64_t seed, int n_beta) {
  const double eta = 0.99;
  CheckReport rep;
  rep.name = "hardy_eta";
  const Eigen::VectorXd q = product_weights(n_beta, WeightKind::Sin2Beta, -eta);
  const double h = M_PI / 2.0 / n_beta;
  Rng rng(seed);
  double worst = -1.0;
  for (int s = 0; s < n_samples; ++s) {
    std::vector<double> c(4);
    if (s == 0) c = {1, 0, 0, 0};                         // f = sin 2β
    else if (s == 1) c = {0, M_PI / 2 * M_PI / 2, -M_PI / 2 * M_PI / 2, 0};  // β(π/2-β)
    else for (auto& v : c) v = rng.u(-1, 1);
    double lhs = 0, rhs = 0;
    for (int j = 0; j < n_beta; ++j) {
      const double b = (j + 0.5) * h, x = b / (M_PI / 2);
      const double P = c[0] + x * (c[1] + x * (c[2] + x * c[3]));
      const double dP = (c[1] + x * (2 * c[2] + 3 * x * c[3])) / (M_PI / 2);
      const double df = 2 * std::cos(2 * b) * P + std::sin(2 * b) * dP;
      lhs += q[j] * P * P;  // f²/sin^{η+2} = P² sin^{-η}
      rhs += q[j] * df * df;
    }
    rhs /= (1 + eta) * (1 + eta);
    const double ratio = lhs / rhs;
    if (!(lhs <= rhs * (1 + 1e-8))) rep.pass = false;
    if (ratio > worst) {
      worst = ratio;
      rep.worst = "sample " + std::to_string(s) + " " + describe(c);
    }
  }
  rep.samples = n_samples;
  rep.measured_ratio = worst;
  rep.extra["ratio_times_constant"] = worst * (1 + eta) * (1 + eta);
  return rep;
}

CheckReport check_hardy_cos(int n_samples, std::uint64_t seed, int n_beta) {
  const double eta = 0.99;
  CheckReport rep;
  rep.name = "hardy_cos";
  const Eigen::VectorXd q0 = product_weights(n_beta, WeightKind::CosBeta, -eta);
  const Eigen::VectorXd q2 = product_weights(n_beta, WeightKind::CosBeta, 2.0 - eta);
  const double h = M_PI / 2.0 / n_beta;
  const double a = 4.0 / ((1 - eta) * (1 - eta)), b = 2.0 / (1 - eta) + 1.0;
  Rng rng(seed);
  double worst = -1.0;
  for (int s = 0; s < n_samples; ++s) {
    // f = c0 + c1 x + c2 x² + c3 cos β
    std::vector<double> c(4);
    if (s == 0) c = {1, 0, 0, 0};
    else if (s == 1) c = {0, 0, 0, 1};
    else for (auto& v : c) v = rng.u(-1, 1);
    double lhs = 0, r1 = 0, r2 = 0;
    for (int j = 0; j < n_beta; ++j) {
      const double be = (j + 0.5) * h, x = be / (M_PI / 2);
      const double f = c[0] + x * (c[1] + x * c[2]) + c[3] * std::cos(be);
      const double df = (c[1] + 2 * x * c[2]) / (M_PI / 2) - c[3] * std::sin(be);
      lhs += q0[j] * f * f;
      r1 += q2[j] * df * df;
      r2 += q2[j] * f * f;
    }
    const double rhs = a * r1 + b * r2;
    if (!(lhs <= rhs * (1 + 1e-8))) rep.pass = false;
    if (lhs / rhs > worst) {
      worst = lhs / rhs;
      rep.worst = "sample " + std::to_string(s) + " " + describe(c);
    }
  }
  rep.samples = n_samples;
  rep.measured_ratio = worst;
  return rep;
}

namespace {

// sup f² / ∫(f² + (∂_u f)²) du on u ∈ [-12, 12], u = ln ρ̄
double linf_ratio(const std::vector<double>& c, int n) {
  const double L = 12.0, h = 2 * L / (n - 1);
  Eigen::MatrixXd f(n, 1);
  for (int i = 0; i < n; ++i) {
    const double u = -L + i * h, z = (u - c[0]) / c[1];
    f(i, 0) = (1 + c[2] * z + c[3] * z * z) * std::exp(-0.5 * z * z);
  }
  Eigen::MatrixXd df = stencil::d1_sigma(f, h);
  Eigen::Index im;
  double sup = f.col(0).cwiseAbs().maxCoeff(&im);
  if (im > 0 && im < n - 1) {
    // parabola through the peak and its neighbours
    const double a = std::abs(f(im - 1, 0)), b = sup, c = std::abs(f(im + 1, 0));
    const double den = a - 2 * b + c;
    if (den < 0) sup = b - 0.125 * (c - a) * (c - a) / den;
  }
  double I = 0;
  for (int i = 0; i < n; ++i) {
    double w = (i == 0 || i == n - 1) ? 0.5 * h : h;
    I += w * (f(i, 0) * f(i, 0) + df(i, 0) * df(i, 0));
  }
  return sup * sup / I;
}

}  // namespace

CheckReport check_linf(int n_samples, std::uint64_t seed, const Params& p, int n) {
  CheckReport rep;
  rep.name = "linf";
  Rng rng(seed);
  double c_n = 0, c_2n = 0;
  for (int s = 0; s < n_samples; ++s) {
    std::vector<double> c = {rng.u(-3, 3), rng.u(1, 3), rng.u(-0.5, 0.5), rng.u(-0.3, 0.3)};
    if (s == 0) c = {0, std::sqrt(0.5), 0, 0};  // e^{-u²}
    const double r1 = linf_ratio(c, n), r2 = linf_ratio(c, 2 * n);
    if (r1 > c_n) {
      c_n = r1;
      rep.worst = "sample " + std::to_string(s) + " " + describe(c);
    }
    c_2n = std::max(c_2n, r2);
  }
  const double change = std::abs(c_n - c_2n) / c_2n;
  rep.measured_ratio = c_2n;
  rep.extra["C_n"] = c_n;
  rep.extra["C_2n"] = c_2n;
  rep.extra["refinement_change"] = change;

  // ℋ² embedding on the run grid
  Params q = with_resolution(p, n);
  Grid g = build_grid(q);
  double emb = 0;
  for (int s = 0; s < n_samples; ++s) {
    Field f = random_eps(g, seed + 1000 + s);
    const double r = std::sqrt(p.alpha) * f.data.cwiseAbs().maxCoeff() / hk_norm(f, g, q, 2);
    if (!std::isfinite(r)) rep.pass = false;
    emb = std::max(emb, r);
  }
  rep.extra["embedding_sqrt_alpha_ratio"] = emb;
  rep.samples = n_samples;
  rep.pass = rep.pass && std::isfinite(c_n) && c_n > 0 && change < 0.01;
  return rep;
}

Field random_eps(const Grid& g, std::uint64_t seed) {
  Rng rng(seed);
  const double c0 = rng.u(-1.5, 1.5), w = rng.u(0.7, 1.5), c1 = rng.u(-0.5, 0.5);
  const double a = rng.u(-0.4, 0.4), b = rng.u(-0.4, 0.4);
  Eigen::ArrayXd z = (g.sigma.array() - c0) / w;
  Eigen::VectorXd r = (1 + c1 * z) * (-0.5 * z * z).exp();
  Eigen::VectorXd ang = g.sin2b.array() * (1 + a * g.cos2b.array() +
                                           b * (2 * g.cos2b.array().square() - 1));
  return Field(r * ang.transpose(), Frame::Y, kOdd);
}

namespace {

// radial profile smooth in u = σ/α = ln ρ̄
Eigen::VectorXd random_radial(const Grid& g, double alpha, Rng& rng) {
  const double c0 = rng.u(-2, 2), w = rng.u(1.5, 3), c1 = rng.u(-0.3, 0.3), c2 = rng.u(-0.1, 0.1);
  Eigen::ArrayXd z = (g.sigma.array() / alpha - c0) / w;
  return (1 + c1 * z + c2 * z * z) * (-0.5 * z * z).exp();
}

}  // namespace

Field random_xi(const Grid& g, double alpha, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd r = random_radial(g, alpha, rng);
  const double a = rng.u(-0.4, 0.4), b = rng.u(-0.4, 0.4);
  Eigen::VectorXd ang = g.sin2b.array() * (1 + a * g.cos2b.array() +
                                           b * (2 * g.cos2b.array().square() - 1));
  return Field(r * ang.transpose(), Frame::YBAR, kOdd);
}

Field random_phi(const Grid& g, double alpha, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd r = random_radial(g, alpha, rng);
  const double a = rng.u(-0.4, 0.4), b = rng.u(-0.4, 0.4);
  Eigen::VectorXd ang = 1 + a * g.cos2b.array() + b * (2 * g.cos2b.array().square() - 1);
  return Field(r * ang.transpose(), Frame::YBAR, kEven);
}

Grid coercivity_grid(int n, const Params& p) {
  return build_grid(n, n, -30 * p.alpha, 30 * p.alpha, p.eta, p.gamma);
}

CoercivityForms laplace_forms(const Field& xi, const Field& phi, int k, const Grid& g, double alpha,
                              double eta) {
  CoercivityForms out;
  auto sq = [](double v) { return v * v; };
  auto drho = [&](const Field& f) {
    Field r = d_sigma(f, g);
    r.data *= alpha;
    return r;
  };
  Field lx = laplace_tilde(xi, g, alpha);
  lx.data -= xi.data * g.cosb.cwiseAbs2().cwiseInverse().asDiagonal();
  out.f1 = w_inner(lx, xi, WNorm::W1, k, g, alpha, eta, -2.0, 0.0);
  out.f2 = w_inner(lx, xi, WNorm::W2, k, g, alpha, eta, -2.0, 0.0);
  Field xb = d_beta(xi, g), xs = drho(xi);
  out.b1 = sq(w_norm(xb, WNorm::W1, k, g, alpha, eta, -1.0)) +
           sq(w_norm(xs, WNorm::W1, k, g, alpha, eta, -1.0));
  out.b2 = sq(w_norm(xb, WNorm::W2, k, g, alpha, eta, -1.0)) +
           sq(w_norm(xs, WNorm::W2, k, g, alpha, eta, -1.0));
  Field lp = laplace_tilde(phi, g, alpha);
  out.f3 = w_inner(lp, phi, WNorm::W3, k, g, alpha, eta, -2.0, 0.0);
  Field pb = d_beta(phi, g), ps = drho(phi);
  out.b3 = sq(w_norm(pb, WNorm::W3, k, g, alpha, eta, -1.0)) +
           sq(w_norm(ps, WNorm::W3, k, g, alpha, eta, -1.0));
  return out;
}

CheckReport check_laplace_coercivity(int n_samples, std::uint64_t seed, int k, int n,
                                     const Params& p) {
  CheckReport rep;
  rep.name = "laplace_coercivity_k" + std::to_string(k) + "_n" + std::to_string(n);
  Grid g = coercivity_grid(n, p);
  double cmin = std::numeric_limits<double>::infinity();
  double fmax[3] = {-1e300, -1e300, -1e300};
  for (int s = 0; s < n_samples; ++s) {
    Field xi = random_xi(g, p.alpha, seed + 2 * s);
    Field phi = random_phi(g, p.alpha, seed + 2 * s + 1);
    CoercivityForms f = laplace_forms(xi, phi, k, g, p.alpha, p.eta);
    const double v[3] = {f.f1, f.f2, f.f3}, b[3] = {f.b1, f.b2, f.b3};
    for (int t = 0; t < 3; ++t) {
      // forms are compared after normalising by the bracket
      fmax[t] = std::max(fmax[t], v[t] / b[t]);
      if (!(v[t] < 0)) {
        rep.pass = false;
        rep.worst = "sample " + std::to_string(s) + " form " + std::to_string(t + 1);
      }
      if (-v[t] / b[t] < cmin) {
        cmin = -v[t] / b[t];
        if (rep.pass) rep.worst = "sample " + std::to_string(s) + " form " + std::to_string(t + 1);
      }
    }
  }
  rep.samples = n_samples;
  rep.measured_ratio = cmin;
  rep.extra["max_normalised_form"] = {fmax[0], fmax[1], fmax[2]};
  rep.pass = rep.pass && cmin > 0;
  return rep;
}

Field assemble_mf(const Field& eps, const ProfilePack& pk, const VelocityPack& pf,
                  const EllipticOperator& op, const Params& p) {
  const Grid& g = op.grid();
  const double a = p.alpha;
  Field phi_e = decompose_solve(op, eps).phi;
  VelocityPack pe = velocity_pack(phi_e, g, a);
  Eigen::MatrixXd es = stencil::d1_sigma(eps.data, g.hs);
  Eigen::MatrixXd eb = stencil::d1_beta(eps.data, g.hb, eps.parity);
  const auto& F = pk.f_star.data;
  Eigen::MatrixXd m = eps.data + (1 + p.delta) * es + pf.U.data.cwiseProduct(eb) +
                      a * pf.V.data.cwiseProduct(es) + pe.U.data.cwiseProduct(pk.f_star_dbeta.data) +
                      a * pe.V.data.cwiseProduct(pk.f_star_dsigma.data) -
                      pf.Rcal.data.cwiseProduct(eps.data) - pe.Rcal.data.cwiseProduct(F);
  return Field(std::move(m), Frame::Y, eps.parity);
}

CheckReport mf_coercivity_sample(int n_samples, std::uint64_t seed, const Params& p) {
  CheckReport rep;
  rep.name = "mf_coercivity_alpha_" + std::to_string(p.alpha);
  Grid g = build_grid(p);
  ProfilePack pk = build_profile(p, g);
  EllipticOperator op(g, p.alpha, p.tol_linear);
  VelocityPack pf = velocity_pack(decompose_solve(op, pk.f_star).phi, g, p.alpha);
  const double lf = l12(pk.f_star, g, 0.0);
  double rmin = std::numeric_limits<double>::infinity();
  std::vector<double> ratios;
  for (int s = 0; s < n_samples; ++s) {
    Field e = random_eps(g, seed + s);
    e.data -= (l12(e, g, 0.0) / lf) * pk.f_star.data;
    Field m = assemble_mf(e, pk, pf, op, p);
    const double r = hk_inner(m, e, g, p, p.k) / hk_inner(e, e, g, p, p.k);
    ratios.push_back(r);
    if (r < rmin) {
      rmin = r;
      rep.worst = "sample " + std::to_string(s);
    }
  }
  rep.samples = n_samples;
  rep.measured_ratio = rmin;
  rep.extra["ratios"] = ratios;
  rep.extra["positive"] = rmin > 0;
  rep.pass = true;  // measured, not asserted
  return rep;
}

LedgerReport energy_ledger(const std::vector<LedgerRow>& h) {
  if (h.size() < 3) throw std::invalid_argument("energy_ledger: need at least 3 history rows");
  LedgerReport r;
  r.rows = int(h.size());
  const std::size_t n = h.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double ds = h[i + 1].s - h[i - 1].s;
    r.dE.push_back(ds > 0 ? (h[i + 1].E - h[i - 1].E) / ds : 0.0);
    r.dX.push_back(ds > 0 ? (h[i + 1].X - h[i - 1].X) / ds : 0.0);
  }
  auto fit = [&](auto get, bool& decreasing) {
    decreasing = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(get(h[i]) > 0)) {
        decreasing = false;
        return 0.0;
      }
      if (i > 0 && !(get(h[i]) < get(h[i - 1]))) decreasing = false;
    }
    if (!decreasing) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& row : h) {
      const double x = row.s, y = std::log(get(row));
      sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double den = n * sxx - sx * sx;
    return den > 0 ? -(n * sxy - sx * sy) / den : 0.0;
  };
  r.kappa_E = fit([](const LedgerRow& x) { return x.E; }, r.E_decreasing);
  r.kappa_X = fit([](const LedgerRow& x) { return x.X; }, r.X_decreasing);
  for (std::size_t i = 1; i < n; ++i) {
    auto v = [](const LedgerRow& x) { return std::abs(x.mu_rate) + std::abs(x.lam_rate); };
    r.modulation_integral += 0.5 * (h[i].s - h[i - 1].s) * (v(h[i]) + v(h[i - 1]));
  }
  for (const auto& row : h) {
    r.max_E = std::max(r.max_E, row.E);
    r.max_X = std::max(r.max_X, row.X);
  }
  return r;
}

nlohmann::json to_json(const LedgerReport& r) {
  return {{"rows", r.rows},
          {"dE_ds", r.dE},
          {"dX_ds", r.dX},
          {"kappa_E", r.kappa_E},
          {"kappa_X", r.kappa_X},
          {"E_decreasing", r.E_decreasing},
          {"X_decreasing", r.X_decreasing},
          {"modulation_integral", r.modulation_integral},
          {"max_E", r.max_E},
          {"max_X", r.max_X}};
}

XBudget x_budget(const Evolver& ev, const SimState& st) {
  const Params& p = ev.params();
  const Grid& g = ev.grid();
  const double a = p.alpha, d = p.delta;
  const int k = p.k;
  XBudget b;
  const ModulationState& m = st.mod;
  const Rates r = modulation_coeffs(m, st.lam_rate, p);
  const double c0 = r.mu_rate - st.lam_rate * (1 + d) + (1 + d + r.l2_rate);
  const double damp = 2 * st.lam_rate - (2 + r.l1_rate);
  auto pair = [&](const Eigen::MatrixXd& tx, const Eigen::MatrixXd& tp, double pf) {
    Field fx(tx, Frame::YBAR, st.xi.parity), fp(tp, Frame::YBAR, st.phi.parity);
    return 2 * (w_inner(fx, st.xi, WNorm::W1, k, g, a, p.eta, pf, 0) +
                w_inner(fx, st.xi, WNorm::W2, k, g, a, p.eta, pf, 0) +
                w_inner(fp, st.phi, WNorm::W3, k, g, a, p.eta, pf, 0));
  };
  Eigen::MatrixXd xs = stencil::d1_sigma(st.xi.data, g.hs), ps = stencil::d1_sigma(st.phi.data, g.hs);
  b.scaling = pair(-c0 * xs + damp * st.xi.data, -c0 * ps + damp * st.phi.data, 0);

  const bool frozen = ev.options().freeze_velocity;
  if (!frozen) {
    VelocityPack pk = ev.pack_fstar() + velocity_pack(st.phi_eps, g, a);
    VelocityPack pb = shift_pack(pk, g, -m.log_l2(p));
    Eigen::MatrixXd xb = stencil::d1_beta(st.xi.data, g.hb, st.xi.parity);
    Eigen::MatrixXd pbt = stencil::d1_beta(st.phi.data, g.hb, st.phi.parity);
    Eigen::MatrixXd tx = -a * pb.V.data.cwiseProduct(xs) - pb.U.data.cwiseProduct(xb) -
                         pb.Lam1.data.cwiseProduct(st.xi.data) - pb.Lam2.data.cwiseProduct(st.phi.data);
    Eigen::MatrixXd tp = -a * pb.V.data.cwiseProduct(ps) - pb.U.data.cwiseProduct(pbt) -
                         pb.Lam3.data.cwiseProduct(st.xi.data) - pb.Lam4.data.cwiseProduct(st.phi.data);
    b.transport = pair(tx, tp, 0);
  }
  Field lx = laplace_tilde(st.xi, g, a);
  lx.data -= st.xi.data * g.cosb.cwiseAbs2().cwiseInverse().asDiagonal();
  Field lp = laplace_tilde(st.phi, g, a);
  b.diffusion = std::exp(r.log_prefactor) * pair(lx.data, lp.data, -2.0);
  return b;
}

std::pair<CheckReport, CheckReport> profile_trends(const Params& p) {
  CheckReport res, vel;
  res.name = "fstar_residual_trend";
  vel.name = "leading_order_velocity_trend";
  std::vector<double> rv, uv;
  for (double al : {0.2, 0.1, 0.05}) {
    Params q = with_alpha(p, al);
    Grid g = build_grid(q);
    ProfilePack pk = build_profile(q, g);
    EllipticOperator op(g, al, q.tol_linear);
    VelocityPack v = velocity_pack(decompose_solve(op, pk.f_star).phi, g, al);
    rv.push_back(f_star_residual(pk, v, g, q).rel);
    Eigen::MatrixXd lead = -3.0 * (1.0 + g.y().array()).inverse().matrix() * g.sin2b.transpose();
    uv.push_back((v.U.data - lead).cwiseAbs().maxCoeff());
  }
  res.pass = rv[1] < rv[0] && rv[2] < rv[1];
  vel.pass = uv[1] < uv[0] && uv[2] < uv[1];
  res.samples = vel.samples = 3;
  res.measured_ratio = rv[2];
  vel.measured_ratio = uv[2];
  res.extra["alpha"] = vel.extra["alpha"] = {0.2, 0.1, 0.05};
  res.extra["values"] = rv;
  vel.extra["values"] = uv;
  return {res, vel};
}

nlohmann::json run_battery(const Params& p, std::uint64_t seed, bool& all_pass) {
  nlohmann::json out;
  std::vector<CheckReport> hard;
  hard.push_back(check_hardy_eta(50, seed));
  hard.push_back(check_hardy_cos(50, seed + 1));
  hard.push_back(check_linf(50, seed + 2, p));
  for (int k : {0, 1})
    for (int n : {128, 256}) hard.push_back(check_laplace_coercivity(20, seed + 3, k, n, p));

  auto [res, vel] = profile_trends(p);
  hard.push_back(res);
  hard.push_back(vel);

  all_pass = true;
  for (const auto& r : hard) {
    out["checks"].push_back(to_json(r));
    all_pass = all_pass && r.pass;
  }
  for (double al : {0.2, 0.1, 0.05})
    out["measured"].push_back(to_json(mf_coercivity_sample(20, seed + 7, with_alpha(p, al))));
  out["all_pass"] = all_pass;
  out["seed"] = seed;
  return out;
}

}  // namespace bsq
