#include "bsq/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "bsq/stencil.hpp"

#include <lapacke.h>
#include <Eigen/Eigenvalues>

namespace bsq {

double ModulationState::log_l2(const Params& p) const {
  return std::log(p.l2_0) - (1.0 + p.delta) * s + 0.5 * p.alpha * s -
         (1.0 + 0.5 * p.alpha) * int_lam;
}

ModulationState initial_modulation(const Params& p) {
  ModulationState m;
  m.log_lambda = std::log(p.lambda_0);
  // μ = (e^s λ)^{2+δ}
  m.log_mu = (2.0 + p.delta) * m.log_lambda;
  return m;
}

Rates modulation_coeffs(const ModulationState& m, double lam_rate, const Params& p) {
  Rates r;
  r.lam_rate = lam_rate;
  r.mu_rate = (2.0 + p.delta) * lam_rate;
  r.l1_rate = -1.0;
  r.l2_rate = -(1.0 + p.delta) + 0.5 * p.alpha - (1.0 + 0.5 * p.alpha) * lam_rate;
  const double a = p.alpha;
  r.log_prefactor =
      (2.0 / a) * (m.log_mu + m.log_l2(p) - (1.0 + p.delta) * m.log_lambda) + m.log_lambda;
  if (!std::isfinite(r.log_prefactor)) throw std::overflow_error("diffusion prefactor exponent");
  r.prefactor_ratio = std::exp(r.log_prefactor - (2.0 / a) * std::log(p.l2_0));
  return r;
}

ModulationState advance_modulation(const ModulationState& m, double lam_rate, double dt,
                                   const Params& p) {
  ModulationState n = m;
  const double a = lam_rate - 1.0;  // λ_s/λ
  n.log_lambda += dt * a;
  n.log_mu += dt * (2.0 + p.delta) * lam_rate;
  n.int_lam += dt * lam_rate;
  const double x = a * dt;
  const double phi1 = x == 0.0 ? 1.0 : std::expm1(x) / x;
  n.t_phys += m.lambda() * dt * phi1;
  n.s += dt;
  return n;
}

namespace {

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::VectorXd flat(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd t = m.transpose();
  return Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
}

Eigen::MatrixXd unflat(const Eigen::VectorXd& v, Eigen::Index ns, Eigen::Index nb) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), nb, ns).transpose();
}

// x ρ̄^{q} computed as exp(ln|x| + qσ/α) so ρ̄ itself never overflows
Eigen::MatrixXd scale_rho(const Eigen::MatrixXd& x, const Grid& g, double alpha, double q) {
  if (q == 0.0) return x;
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double v = x(i, j);
      out(i, j) = v == 0.0 ? 0.0 : std::copysign(std::exp(std::log(std::abs(v)) + q * g.sigma[i] / alpha), v);
    }
  return out;
}

}  // namespace

DiffusionSolver::DiffusionSolver(const Grid& g, double alpha, Parity parity, bool with_sec2,
                                 double tol)
    : g_(&g), alpha_(alpha), tol_(tol) {
  const int ns = g.ns, nb = g.nb;
  const double a2 = alpha * alpha / (g.hs * g.hs), a1 = alpha / (2.0 * g.hs);
  const double ib2 = 1.0 / (g.hb * g.hb), ib1 = 1.0 / (2.0 * g.hb);
  c0_ = -2.0 * a2, cm_ = a2 - a1, cp_ = a2 + a1;
  Eigen::VectorXd b0(nb), bm(nb), bp(nb);
  for (int j = 0; j < nb; ++j) {
    const double tb = g.tanb[j];
    bm[j] = ib2 + tb * ib1, bp[j] = ib2 - tb * ib1, b0[j] = -2.0 * ib2;
    if (with_sec2) b0[j] -= 1.0 / (g.cosb[j] * g.cosb[j]);
  }
  b0[0] += int(parity.lo) * bm[0];
  b0[nb - 1] += int(parity.hi) * bp[nb - 1];

  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nb; ++j) {
      const int r = i * nb + j;
      t.emplace_back(r, r, c0_ + b0[j]);
      if (i > 0) t.emplace_back(r, r - nb, cm_);
      if (i < ns - 1) t.emplace_back(r, r + nb, cp_);
      if (j > 0) t.emplace_back(r, r - 1, bm[j]);
      if (j < nb - 1) t.emplace_back(r, r + 1, bp[j]);
    }
  L_.resize(ns * nb, ns * nb);
  L_.setFromTriplets(t.begin(), t.end());
  L_.makeCompressed();

  // B = D⁻¹ S D with S symmetric; off-diagonal products bp_j bm_{j+1} are positive
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::VectorXd d(nb);
  d[0] = 1.0;
  for (int j = 0; j < nb; ++j) S(j, j) = b0[j];
  for (int j = 0; j + 1 < nb; ++j) {
    const double pr = bp[j] * bm[j + 1];
    if (!(pr > 0)) throw std::runtime_error("diffusion: beta stencil is not symmetrisable");
    S(j, j + 1) = S(j + 1, j) = std::sqrt(pr);
    d[j + 1] = d[j] * std::sqrt(bp[j] / bm[j + 1]);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw std::runtime_error("diffusion: eigensolver failed");
  lam_ = es.eigenvalues();
  P_ = d.cwiseInverse().asDiagonal() * es.eigenvectors();
  Pinv_ = es.eigenvectors().transpose() * d.asDiagonal();
}

Eigen::MatrixXd DiffusionSolver::modal_solve(const Eigen::MatrixXd& rhs, const Eigen::VectorXd& th,
                                             const Eigen::VectorXd& ta) const {
  const int ns = g_->ns, nb = g_->nb;
  // rhs = C Pᵀ, x = Z Pᵀ; column k of Z solves a tridiagonal system in σ
  Eigen::MatrixXd c = rhs * Pinv_.transpose();
  std::vector<double> dl(ns), dd(ns), du(ns);
  for (int k = 0; k < nb; ++k) {
    for (int i = 0; i < ns; ++i) {
      dd[i] = th[i] - ta[i] * (c0_ + lam_[k]);
      if (i + 1 < ns) {
        du[i] = -ta[i] * cp_;
        dl[i] = -ta[i + 1] * cm_;
      }
    }
    const lapack_int info =
        LAPACKE_dgtsv(LAPACK_COL_MAJOR, ns, 1, dl.data(), dd.data(), du.data(), c.col(k).data(), ns);
    if (info != 0) throw std::runtime_error("diffusion: singular modal system");
  }
  return c * P_.transpose();
}

Field DiffusionSolver::solve(const Field& b, double lc) const {
  if (b.data.isZero(0.0)) return b;
  const int ns = g_->ns, nb = g_->nb;
  // rows scaled by 1/(1 + c ρ̄^{-2}) so every coefficient stays bounded
  Eigen::VectorXd th(ns), ta(ns);
  for (int i = 0; i < ns; ++i) {
    const double lk = lc - 2.0 * g_->sigma[i] / alpha_;
    th[i] = logistic(-lk);
    ta[i] = logistic(lk);
  }
  Eigen::MatrixXd rhs = th.asDiagonal() * b.data;
  const double bn = rhs.cwiseAbs().maxCoeff();
  Eigen::MatrixXd x = modal_solve(rhs, th, ta);
  auto residual = [&](const Eigen::MatrixXd& v) {
    Eigen::VectorXd lv = L_ * flat(v);
    Eigen::MatrixXd r = rhs - th.asDiagonal() * v + ta.asDiagonal() * unflat(lv, ns, nb);
    return r;
  };
  Eigen::MatrixXd r = residual(x);
  const double rel = r.cwiseAbs().maxCoeff() / bn;
  worst_ = std::max(worst_, rel);
  if (rel > tol_) {
    x += modal_solve(r, th, ta);
    if (!(residual(x).cwiseAbs().maxCoeff() <= tol_ * bn))
      throw std::runtime_error("diffusion solve did not reach tolerance");
  }
  return Field(std::move(x), b.frame, b.parity);
}

void gradient_profiles(const Field& th, double m, const Grid& g, double alpha, Field& xi,
                       Field& phi) {
  // ∂_r = (1/ρ̄)(cos β D - sin β ∂_β), ∂_3 = (1/ρ̄)(sin β D + cos β ∂_β), D = ρ̄∂_ρ̄;
  // on ρ̄^m g, D acts as (α∂_σ + m).
  Eigen::MatrixXd D = alpha * stencil::d1_sigma(th.data, g.hs) + m * th.data;
  Eigen::MatrixXd B = stencil::d1_beta(th.data, g.hb, th.parity);
  Eigen::MatrixXd x = D * g.cosb.asDiagonal() - B * g.sinb.asDiagonal();
  Eigen::MatrixXd y = D * g.sinb.asDiagonal() + B * g.cosb.asDiagonal();
  xi = Field(scale_rho(x, g, alpha, m - 1.0), Frame::YBAR, th.parity * kCosb);
  phi = Field(scale_rho(y, g, alpha, m - 1.0), Frame::YBAR, th.parity * kSinb);
}

Evolver::Evolver(const Params& p, StepOptions opt) : p_(p), opt_(opt) {
  validate(p_);
  g_ = build_grid(p_);
  pk_ = build_profile(p_, g_);
  op_ = std::make_unique<EllipticOperator>(g_, p_.alpha, p_.tol_linear);
  phi_f_ = decompose_solve(*op_, pk_.f_star).phi;
  pack_f_ = velocity_pack(phi_f_, g_, p_.alpha);
  forcing_ = profile_operator(pk_.f_star, pk_.f_star_dbeta, pk_.f_star_dsigma, pack_f_, p_);
  l12_fstar_ = l12(pk_.f_star, g_, 0.0);
  diff_xi_ = std::make_unique<DiffusionSolver>(g_, p_.alpha, kOdd, true, p_.tol_linear);
  diff_phi_ = std::make_unique<DiffusionSolver>(g_, p_.alpha, kEven, false, p_.tol_linear);
}

Field Evolver::stream(const Field& eps) const { return decompose_solve(*op_, eps).phi; }

Field Evolver::project(const Field& eps) const {
  const double c = l12(eps, g_, 0.0);
  if (c == 0.0) return eps;
  Field out = eps;
  out.data -= (c / l12_fstar_) * pk_.f_star.data;
  return out;
}

SimState Evolver::init_from_theta(const Field& th, double m, const Field& eps0) const {
  require_frame(th, Frame::YBAR, "init_from_theta");
  require_frame(eps0, Frame::Y, "init_from_theta");
  if (!(th.parity == kOddEven)) throw std::invalid_argument("init_from_theta: θ must be odd/even");
  if (!(eps0.parity == kOdd)) throw std::invalid_argument("init_from_theta: ε must be odd/odd");
  SimState st;
  st.mod = initial_modulation(p_);
  gradient_profiles(th, m, g_, p_.alpha, st.xi, st.phi);
  const double drift = std::abs(l12(eps0, g_, 0.0));
  st.eps = drift > p_.tol_quad * (1.0 + hk_norm(eps0, g_, p_, 0)) ? project(eps0) : eps0;
  st.phi_eps = stream(st.eps);
  return st;
}

SimState Evolver::initial_state() const {
  const int ns = g_.ns, nb = g_.nb;
  Field z = Field::zeros(ns, nb, Frame::Y, kOdd);
  Field th = Field::zeros(ns, nb, Frame::YBAR, kOddEven);
  if (p_.init == "zero") return init_from_theta(th, 1.0, z);

  std::mt19937_64 rng(p_.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double c1 = u(rng), c2 = u(rng), c3 = u(rng), d1 = u(rng), d2 = u(rng);
  const Eigen::ArrayXd s = g_.sigma.array();
  Eigen::VectorXd r1 = (1.0 + c1 * s + 0.5 * c2 * s * s) * (-s * s).exp();
  Eigen::VectorXd r2 = (-(s - 1.0) * (s - 1.0)).exp();
  Eigen::VectorXd b1 = g_.sin2b.cwiseProduct(Eigen::VectorXd::Ones(nb) + 0.5 * c3 * g_.cos2b);
  Field e1(r1 * b1.transpose(), Frame::Y, kOdd);
  Field e2(r2 * g_.sin2b.transpose(), Frame::Y, kOdd);
  Field eps0(e1.data - (l12(e1, g_, 0.0) / l12(e2, g_, 0.0)) * e2.data, Frame::Y, kOdd);

  Eigen::VectorXd rt = (1.0 + d1 * s) * (-s * s).exp();
  Eigen::VectorXd bt = g_.sinb.cwiseProduct(Eigen::VectorXd::Ones(nb) + 0.5 * d2 * g_.cos2b);
  th.data = rt * bt.transpose();

  Field xi, phi;
  gradient_profiles(th, 1.0, g_, p_.alpha, xi, phi);
  NormReport n1 = energy_xye(eps0, xi, phi, p_.k, p_.c_embed, g_, p_);
  const double budget = 0.45 * p_.delta0 * std::pow(p_.alpha, 3);
  const double ae = std::sqrt(budget) / n1.hk;
  const double at = std::sqrt(budget / (p_.c_embed * std::pow(p_.alpha, -2.0 * p_.k + 1.0) * n1.X));
  eps0.data *= ae;
  th.data *= at;
  return init_from_theta(th, 1.0, eps0);
}

Rhs Evolver::rhs_all(const SimState& st) const {
  const Grid& g = g_;
  const double a = p_.alpha, d = p_.delta;
  Rhs out;
  const ModulationState& mod = st.mod;
  const double log_l2 = mod.log_l2(p_);

  VelocityPack pack;
  if (opt_.freeze_velocity) {
    pack = zero_pack(g, Frame::Y);
    out.d_eps = Field::zeros(g.ns, g.nb, Frame::Y, kOdd);
    out.lam_rate = 0.0;
  } else {
    pack = pack_f_ + velocity_pack(st.phi_eps, g, a);
    const Field& e = st.eps;
    // W = F* + ε; F* derivatives are analytic, ε derivatives upwinded where transported
    Eigen::MatrixXd W = pk_.f_star.data + e.data;
    Eigen::MatrixXd cs = (1.0 + d) * Eigen::MatrixXd::Ones(g.ns, g.nb) + a * pack.V.data;
    Eigen::MatrixXd eb = stencil::upwind_beta(e.data, pack.U.data, g.hb, e.parity);
    Eigen::MatrixXd es = stencil::upwind_sigma(e.data, cs, g.hs);
    Eigen::MatrixXd esc = stencil::d1_sigma(e.data, g.hs);
    Eigen::MatrixXd Wb = pk_.f_star_dbeta.data + eb;
    Eigen::MatrixXd Ws = pk_.f_star_dsigma.data + es;
    // same expression as the cached forcing, so ε = 0 cancels it bit for bit
    Eigen::MatrixXd T = profile_operator(Field(W, Frame::Y, kOdd), Field(Wb, Frame::Y, kOdd),
                                         Field(Ws, Frame::Y, kOdd), pack, p_)
                            .data;
    Eigen::MatrixXd A = opt_.forcing ? Eigen::MatrixXd(-T) : Eigen::MatrixXd(forcing_.data - T);
    if (opt_.coupling && st.xi.data.any()) {
      Field c = shift_sigma(st.xi, g, log_l2, Outside::Zero);
      A += mod.l1() * c.data;
    }
    // rescaling: lam_rate (W + (1+δ) W_σ) - μ_s/μ W_σ with μ_s/μ = (2+δ) lam_rate
    Eigen::MatrixXd B = W - (pk_.f_star_dsigma.data + esc);
    Field Af(A, Frame::Y, kOdd), Bf(B, Frame::Y, kOdd);
    if (opt_.freeze_modulation) {
      out.lam_rate = 0.0;
    } else {
      const double lb = l12(Bf, g, 0.0);
      out.lam_rate = -l12(Af, g, 0.0) / lb;
    }
    out.d_eps = Field(A + out.lam_rate * B, Frame::Y, kOdd);
    out.cfl = p_.dt * (pack.U.data.cwiseAbs().maxCoeff() / g.hb + cs.cwiseAbs().maxCoeff() / g.hs);
  }

  const Rates r = modulation_coeffs(mod, out.lam_rate, p_);
  VelocityPack pb = opt_.freeze_velocity ? zero_pack(g, Frame::YBAR) : shift_pack(pack, g, -log_l2);
  const double c0 = r.mu_rate - out.lam_rate * (1.0 + d) + (1.0 + d + r.l2_rate);
  Eigen::MatrixXd cx = c0 * Eigen::MatrixXd::Ones(g.ns, g.nb) + a * pb.V.data;
  const double damp = 2.0 * out.lam_rate - (2.0 + r.l1_rate);
  auto transport = [&](const Field& f) {
    Eigen::MatrixXd fs = stencil::limited_sigma(f.data, cx, g.hs);
    Eigen::MatrixXd fb = stencil::upwind_beta(f.data, pb.U.data, g.hb, f.parity);
    return Eigen::MatrixXd(-cx.cwiseProduct(fs) - pb.U.data.cwiseProduct(fb) + damp * f.data);
  };
  Eigen::MatrixXd dx = transport(st.xi) - pb.Lam1.data.cwiseProduct(st.xi.data) -
                       pb.Lam2.data.cwiseProduct(st.phi.data);
  Eigen::MatrixXd dp = transport(st.phi) - pb.Lam3.data.cwiseProduct(st.xi.data) -
                       pb.Lam4.data.cwiseProduct(st.phi.data);
  out.d_xi = Field(std::move(dx), Frame::YBAR, st.xi.parity);
  out.d_phi = Field(std::move(dp), Frame::YBAR, st.phi.parity);
  out.cfl = std::max(out.cfl, p_.dt * (pb.U.data.cwiseAbs().maxCoeff() / g.hb +
                                       cx.cwiseAbs().maxCoeff() / g.hs));
  return out;
}

SimState Evolver::imex_step(const SimState& st, double dt) {
  Rhs k1 = rhs_all(st);
  if (k1.cfl * dt / p_.dt > 1.0)
    throw std::runtime_error("CFL violation: " + std::to_string(k1.cfl * dt / p_.dt));

  SimState s1 = st;
  s1.eps.data += dt * k1.d_eps.data;
  s1.xi.data += dt * k1.d_xi.data;
  s1.phi.data += dt * k1.d_phi.data;
  s1.mod = advance_modulation(st.mod, k1.lam_rate, dt, p_);
  if (!opt_.freeze_velocity) s1.phi_eps = stream(s1.eps);
  Rhs k2 = rhs_all(s1);

  SimState n = st;
  const double lam = 0.5 * (k1.lam_rate + k2.lam_rate);
  n.lam_rate = lam;
  n.mod = advance_modulation(st.mod, lam, dt, p_);
  n.eps.data += 0.5 * dt * (k1.d_eps.data + k2.d_eps.data);
  n.xi.data += 0.5 * dt * (k1.d_xi.data + k2.d_xi.data);
  n.phi.data += 0.5 * dt * (k1.d_phi.data + k2.d_phi.data);

  const Rates r = modulation_coeffs(n.mod, lam, p_);
  const double lc = std::log(dt) + r.log_prefactor;
  n.xi = diff_xi_->solve(n.xi, lc);
  n.phi = diff_phi_->solve(n.phi, lc);

  if (!opt_.freeze_velocity) {
    n.eps = project(n.eps);
    const double drift = std::abs(l12(n.eps, g_, 0.0));
    const double bound = 1e-12 * (1.0 + hk_norm(n.eps, g_, p_, 0));
    if (drift > bound) throw std::runtime_error("constraint drift after projection");
    n.phi_eps = stream(n.eps);
  }
  if (!n.eps.finite() || !n.xi.finite() || !n.phi.finite())
    throw std::runtime_error("non-finite state at s = " + std::to_string(n.mod.s));
  return n;
}

double Evolver::compatibility_residual(const Field& xi, const Field& phi) const {
  const Grid& g = g_;
  const double a = p_.alpha;
  Eigen::MatrixXd lhs = a * stencil::d1_sigma(xi.data, g.hs) * g.sinb.asDiagonal() +
                        stencil::d1_beta(xi.data, g.hb, xi.parity) * g.cosb.asDiagonal();
  Eigen::MatrixXd rhs = a * stencil::d1_sigma(phi.data, g.hs) * g.cosb.asDiagonal() -
                        stencil::d1_beta(phi.data, g.hb, phi.parity) * g.sinb.asDiagonal();
  Eigen::MatrixXd diff = lhs - rhs;
  Eigen::VectorXd lw = Eigen::VectorXd::Zero(g.ns);
  double v = weighted_inner(diff, diff, lw, g.qb(WeightKind::Sin2Beta, 0.0), g);
  return std::sqrt(std::max(0.0, v));
}

Diagnostics Evolver::diagnostics(const SimState& st) const {
  Diagnostics d{};
  const ModulationState& m = st.mod;
  d.s = m.s;
  d.t_phys = m.t_phys;
  d.lambda = m.lambda();
  d.mu = m.mu();
  d.l1 = m.l1();
  d.l2 = m.l2(p_);
  d.lam_rate = st.lam_rate;
  NormReport n = energy_xye(st.eps, st.xi, st.phi, p_.k, p_.c_embed, g_, p_);
  d.hk = n.hk;
  d.X = n.X;
  d.Y = n.Y;
  d.E = n.E;
  d.l12_drift = l12(st.eps, g_, 0.0);
  d.compat = compatibility_residual(st.xi, st.phi);
  d.prefactor_ratio = modulation_coeffs(m, st.lam_rate, p_).prefactor_ratio;
  d.eps_h0 = hk_norm(st.eps, g_, p_, 0);
  return d;
}

PhysicalFields Evolver::reconstruct_physical(const SimState& st) const {
  PhysicalFields out;
  const ModulationState& m = st.mod;
  const double lam = m.lambda();
  out.omega = Field((pk_.f_star.data + st.eps.data) / lam, Frame::Y, kOdd);
  const double sc = m.l1() / (lam * lam);
  out.theta_r = Field(sc * st.xi.data, Frame::YBAR, st.xi.parity);
  out.theta_3 = Field(sc * st.phi.data, Frame::YBAR, st.phi.parity);
  // y = μ R / λ^{1+δ}
  const double shift = (1.0 + p_.delta) * m.log_lambda - m.log_mu;
  out.log_R = g_.sigma.array() + shift;
  out.log_R_bar = g_.sigma.array() - m.log_l2(p_) + shift;
  out.t_phys = m.t_phys;
  return out;
}

}  // namespace bsq
