#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "bsq/calculus.hpp"
#include "bsq/elliptic.hpp"
#include "bsq/grid.hpp"
#include "bsq/profile.hpp"

using namespace bsq;

namespace {
Params with(double alpha, int n) {
  Params p;
  finalize(p);
  return with_resolution(with_alpha(p, alpha), n);
}
}  // namespace

TEST_CASE("angular factors") {
  Params p = with(0.1, 64);
  Grid g = build_grid(p);
  ProfilePack pk = build_profile(p, g);
  for (int j = 0; j < g.nb; ++j) {
    const double s = std::sin(g.beta[j]), c = std::cos(g.beta[j]);
    CHECK(pk.k_beta[j] == doctest::Approx(3 * s * c * c).epsilon(1e-14));
    CHECK(pk.gamma_beta[j] > 0);
    CHECK(pk.gamma_beta[j] <= 1);
  }
  // K vanishes at both ends: the end nodes sit h/2 from them
  CHECK(pk.k_beta[0] < 3 * g.hb);
  CHECK(pk.k_beta[g.nb - 1] < 3 * g.hb * g.hb);
  CHECK(pk.c > 0);
  CHECK(pk.f_star.data.minCoeff() >= 0);
}

TEST_CASE("c and Gamma in the small alpha limit") {
  Params p = with(1e-6, 128);
  Grid g = build_grid(p);
  ProfilePack pk = build_profile(p, g);
  CHECK(pk.c == doctest::Approx(1.0).epsilon(1e-5));
  CHECK((pk.gamma_beta.array() - 1.0).abs().maxCoeff() < 1e-4);
  // Γ → 1 monotonically as α shrinks
  double prev = 0;
  for (double a : {0.2, 0.1, 0.05, 0.01}) {
    ProfilePack q = build_profile(with(a, 64), build_grid(with(a, 64)));
    CHECK(q.gamma_beta.minCoeff() > prev);
    prev = q.gamma_beta.minCoeff();
  }
}

TEST_CASE("F* peaks at y = 1") {
  Params p = with(0.1, 64);
  p.n_sigma = 129;
  Grid g = build_grid(p);
  REQUIRE(std::abs(g.sigma[64]) < 1e-14);
  ProfilePack pk = build_profile(p, g);
  for (int j = 0; j < g.nb; ++j) {
    Eigen::Index imax;
    pk.f_star.data.col(j).maxCoeff(&imax);
    CHECK(imax == 64);
  }
  // tails are small at the truncation ends
  CHECK(pk.f_star.data.row(0).maxCoeff() < 1e-8);
  CHECK(pk.f_star.data.row(g.ns - 1).maxCoeff() < 1e-8);
}

TEST_CASE("l12 of F* matches 4 alpha / (1+y)") {
  Params p = with(0.1, 128);
  p.n_sigma = 512;
  Grid g = build_grid(p);
  ProfilePack pk = build_profile(p, g);
  for (double y : {0.0, 0.5, 1.0, 2.0})
    CHECK(l12(pk.f_star, g, y) == doctest::Approx(pk.l12_fstar(y)).epsilon(1e-6));
}

TEST_CASE("residual of the zero profile is zero") {
  Params p = with(0.1, 32);
  Grid g = build_grid(p);
  ProfilePack pk = build_profile(p, g);
  pk.f_star.data.setZero();
  pk.f_star_dbeta.data.setZero();
  pk.f_star_dsigma.data.setZero();
  EllipticOperator op(g, p.alpha);
  VelocityPack v = velocity_pack(decompose_solve(op, pk.f_star).phi, g, p.alpha);
  ProfileResidual r = f_star_residual(pk, v, g, p);
  CHECK(r.r.data.cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.rel == 0.0);
}

TEST_CASE("analytic derivatives of F* agree with the stencils") {
  Params p = with(0.1, 128);
  Grid g = build_grid(p);
  ProfilePack pk = build_profile(p, g);
  Field ds = d_sigma(pk.f_star, g);
  CHECK((ds.data - pk.f_star_dsigma.data).cwiseAbs().maxCoeff() < 1e-3 * pk.f_star.data.maxCoeff());
  // interior β columns only: Γ' is singular at the ends
  Field db = d_beta(pk.f_star, g);
  const int m = g.nb;
  CHECK((db.data.middleCols(8, m - 16) - pk.f_star_dbeta.data.middleCols(8, m - 16)).cwiseAbs().maxCoeff() <
        1e-4 * pk.f_star.data.maxCoeff());
}
