#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "bsq/calculus.hpp"
#include "bsq/stencil.hpp"
#include "bsq/verify.hpp"

using namespace bsq;

namespace {
Params base(int n) {
  Params p;
  finalize(p);
  return with_resolution(p, n);
}

Field sample(const Grid& g, double (*fn)(double, double), Frame fr, Parity p) {
  Eigen::MatrixXd m(g.ns, g.nb);
  for (int i = 0; i < g.ns; ++i)
    for (int j = 0; j < g.nb; ++j) m(i, j) = fn(g.sigma[i], g.beta[j]);
  return Field(m, fr, p);
}
}  // namespace

TEST_CASE("hardy inequalities on random samples") {
  CheckReport a = check_hardy_eta(20, 11);
  CheckReport b = check_hardy_cos(20, 12);
  CHECK(a.pass);
  CHECK(b.pass);
  CHECK(a.samples == 20);
  CHECK(a.measured_ratio <= 1.0);
  CHECK(a.measured_ratio > 0.0);
  CHECK(b.measured_ratio <= 1.0);
}

TEST_CASE("laplace forms are negative on simple profiles") {
  Params p = base(64);
  Grid g = coercivity_grid(128, p);
  Field xi = sample(g, [](double s, double b) { return std::exp(-s * s) * std::sin(2 * b); }, Frame::YBAR, kOdd);
  Field phi = sample(g, [](double s, double b) { return std::exp(-s * s) * std::cos(b); }, Frame::YBAR, kEven);
  for (int k : {0, 1}) {
    CoercivityForms f = laplace_forms(xi, phi, k, g, p.alpha, p.eta);
    CHECK(f.f1 < 0);
    CHECK(f.f2 < 0);
    CHECK(f.f3 < 0);
    CHECK(f.b1 > 0);
    CHECK(f.b3 > 0);
  }
  // the forms are quadratic
  Field x2(2 * xi.data, Frame::YBAR, kOdd), p2(2 * phi.data, Frame::YBAR, kEven);
  CoercivityForms f = laplace_forms(xi, phi, 0, g, p.alpha, p.eta);
  CoercivityForms h = laplace_forms(x2, p2, 0, g, p.alpha, p.eta);
  CHECK(h.f1 == doctest::Approx(4 * f.f1).epsilon(1e-12));
  CHECK(h.f3 == doctest::Approx(4 * f.f3).epsilon(1e-12));
}

TEST_CASE("random generators are seeded and admissible") {
  Params p = base(64);
  Grid g = build_grid(p);
  Field a = random_eps(g, 9), b = random_eps(g, 9), c = random_eps(g, 10);
  CHECK((a.data - b.data).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.data - c.data).cwiseAbs().maxCoeff() > 0.0);
  CHECK(a.parity == kOdd);
  CHECK(random_xi(g, p.alpha, 1).parity == kOdd);
  CHECK(random_phi(g, p.alpha, 1).parity == kEven);
}

TEST_CASE("energy ledger") {
  CHECK_THROWS_AS(energy_ledger({LedgerRow{}, LedgerRow{}}), std::invalid_argument);
  std::vector<LedgerRow> zero(5);
  for (int i = 0; i < 5; ++i) zero[i].s = 0.1 * i;
  LedgerReport z = energy_ledger(zero);
  CHECK(z.kappa_E == 0.0);
  CHECK_FALSE(z.E_decreasing);
  CHECK(z.dE.size() == 3);

  std::vector<LedgerRow> dec(20);
  for (int i = 0; i < 20; ++i) {
    dec[i].s = 0.1 * i;
    dec[i].E = 3 * std::exp(-0.7 * dec[i].s);
    dec[i].X = std::exp(-0.2 * dec[i].s);
    dec[i].lam_rate = 0.1;  // stored as λ_s/λ + 1
    dec[i].mu_rate = -0.3;
  }
  LedgerReport d = energy_ledger(dec);
  CHECK(d.E_decreasing);
  CHECK(d.X_decreasing);
  CHECK(d.kappa_E == doctest::Approx(0.7).epsilon(1e-10));
  CHECK(d.kappa_X == doctest::Approx(0.2).epsilon(1e-10));
  CHECK(d.modulation_integral == doctest::Approx(0.4 * 1.9).epsilon(1e-12));
}

TEST_CASE("linearised operator") {
  Params p = base(64);
  Grid g = build_grid(p);
  ProfilePack pk = build_profile(p, g);
  EllipticOperator op(g, p.alpha);
  VelocityPack pf = velocity_pack(decompose_solve(op, pk.f_star).phi, g, p.alpha);
  Field e1 = random_eps(g, 1), e2 = random_eps(g, 2);
  Field s(e1.data + 2.5 * e2.data, Frame::Y, kOdd);
  Field m1 = assemble_mf(e1, pk, pf, op, p), m2 = assemble_mf(e2, pk, pf, op, p);
  Field ms = assemble_mf(s, pk, pf, op, p);
  const double scale = m1.data.cwiseAbs().maxCoeff() + m2.data.cwiseAbs().maxCoeff();
  CHECK((ms.data - m1.data - 2.5 * m2.data).cwiseAbs().maxCoeff() <= 1e-12 * scale);

  // T(F* + hε) - T(F*) - h 𝓜ε is exactly quadratic in h
  const Field t0 = profile_operator(pk.f_star, pk.f_star_dbeta, pk.f_star_dsigma, pf, p);
  const Eigen::MatrixXd eb = stencil::d1_beta(e1.data, g.hb, kOdd);
  const Eigen::MatrixXd es = stencil::d1_sigma(e1.data, g.hs);
  VelocityPack pe = velocity_pack(decompose_solve(op, e1).phi, g, p.alpha);
  auto defect = [&](double h) {
    VelocityPack ph = pe;
    for (Field* f : {&ph.U, &ph.V, &ph.Rcal, &ph.Lam1, &ph.Lam2, &ph.Lam3, &ph.Lam4}) f->data *= h;
    Field w(pk.f_star.data + h * e1.data, Frame::Y, kOdd);
    Field wb(pk.f_star_dbeta.data + h * eb, Frame::Y, flip(kOdd));
    Field ws(pk.f_star_dsigma.data + h * es, Frame::Y, kOdd);
    Field t = profile_operator(w, wb, ws, pf + ph, p);
    return (t.data - t0.data - h * m1.data).cwiseAbs().maxCoeff();
  };
  const double d1 = defect(1e-2), d2 = defect(5e-3);
  MESSAGE("linearisation defect " << d1 << " -> " << d2);
  CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(1e-3));
}

TEST_CASE("mf sampling is reported, not asserted") {
  Params p = base(32);
  CheckReport r = mf_coercivity_sample(3, 4, p);
  CHECK(r.pass);
  CHECK(r.samples == 3);
  CHECK(std::isfinite(r.measured_ratio));
  CHECK(to_json(r).contains("name"));
}
