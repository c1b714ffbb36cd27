#include "bsq/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bsq/stencil.hpp"

namespace bsq {

Field d_sigma(const Field& f, const Grid& g) {
  return Field(stencil::d1_sigma(f.data, g.hs), f.frame, f.parity);
}

Field d_sigma2(const Field& f, const Grid& g) {
  return Field(stencil::d2_sigma(f.data, g.hs), f.frame, f.parity);
}

Field d_beta(const Field& f, const Grid& g) {
  return Field(stencil::d1_beta(f.data, g.hb, f.parity), f.frame, flip(f.parity));
}

Field d_beta2(const Field& f, const Grid& g) {
  return Field(stencil::d2_beta(f.data, g.hb, f.parity), f.frame, f.parity);
}

Field D_beta(const Field& f, const Grid& g) { return times_beta(d_beta(f, g), g.sin2b, kSin2b); }

Field times_beta(const Field& f, const Eigen::VectorXd& w, Parity wp) {
  return Field(f.data * w.asDiagonal(), f.frame, f.parity * wp);
}

Field times_sigma(const Field& f, const Eigen::VectorXd& w) {
  return Field(w.asDiagonal() * f.data, f.frame, f.parity);
}

Field apply_derivative(const Field& f, Deriv op, const Grid& g, double alpha) {
  switch (op) {
    case Deriv::D_SIGMA: return d_sigma(f, g);
    case Deriv::PARTIAL_BETA: return d_beta(f, g);
    case Deriv::D_BETA: return D_beta(f, g);
    case Deriv::D_RHOBAR: {
      Field r = d_sigma(f, g);
      r.data *= alpha;
      return r;
    }
  }
  throw std::invalid_argument("apply_derivative: unknown operator");
}

Field laplace_tilde(const Field& f, const Grid& g, double alpha) {
  Field fb = d_beta(f, g);
  Eigen::MatrixXd out = alpha * alpha * stencil::d2_sigma(f.data, g.hs) +
                        alpha * stencil::d1_sigma(f.data, g.hs) +
                        stencil::d2_beta(f.data, g.hb, f.parity) - fb.data * g.tanb.asDiagonal();
  return Field(std::move(out), f.frame, f.parity);
}

double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  std::size_t m = n / 2;
  return pairwise_sum(x, m) + pairwise_sum(x + m, n - m);
}

Eigen::VectorXd radial_moment(const Field& f, const Grid& g) {
  Eigen::VectorXd kq = 3.0 * g.sinb.cwiseProduct(g.cosb.cwiseAbs2()).cwiseProduct(
                                 g.qb(WeightKind::Sin2Beta, 0.0));
  return f.data * kq;
}

namespace {

// ∫ over cell [i, i+1] of the local cubic interpolant, in units of h
void cell_weights(int i, int n, int& s0, double w[4]) {
  if (i == 0) {
    s0 = 0;
    const double c[4] = {9, 19, -5, 1};
    for (int m = 0; m < 4; ++m) w[m] = c[m] / 24.0;
  } else if (i == n - 2) {
    s0 = n - 4;
    const double c[4] = {1, -5, 19, 9};
    for (int m = 0; m < 4; ++m) w[m] = c[m] / 24.0;
  } else {
    s0 = i - 1;
    const double c[4] = {-1, 13, 13, -1};
    for (int m = 0; m < 4; ++m) w[m] = c[m] / 24.0;
  }
}

}  // namespace

Eigen::VectorXd tail_integral(const Eigen::VectorXd& m, double h) {
  const int n = int(m.size());
  Eigen::VectorXd t = Eigen::VectorXd::Zero(n);
  for (int i = n - 2; i >= 0; --i) {
    int s0;
    double w[4];
    cell_weights(i, n, s0, w);
    double cell = 0.0;
    for (int q = 0; q < 4; ++q) cell += w[q] * m[s0 + q];
    t[i] = t[i + 1] + h * cell;
  }
  return t;
}

double tail_integral_at(const Eigen::VectorXd& m, const Grid& g, double sigma0) {
  if (sigma0 > g.smax) throw std::invalid_argument("l12: lower limit above the σ range");
  Eigen::VectorXd t = tail_integral(m, g.hs);
  if (sigma0 <= g.smin) return t[0];
  const int n = g.ns;
  int i = std::min(int(std::floor((sigma0 - g.smin) / g.hs)), n - 2);
  int s0 = std::clamp(i - 1, 0, n - 4);
  auto cubic = [&](double s) {
    double v = 0.0;
    for (int a = 0; a < 4; ++a) {
      double l = 1.0;
      for (int b = 0; b < 4; ++b)
        if (b != a) l *= (s - g.sigma[s0 + b]) / (g.sigma[s0 + a] - g.sigma[s0 + b]);
      v += l * m[s0 + a];
    }
    return v;
  };
  // two-point Gauss is exact for the cubic
  const double a = sigma0, b = g.sigma[i + 1];
  const double mid = 0.5 * (a + b), hw = 0.5 * (b - a), x = 1.0 / std::sqrt(3.0);
  return t[i + 1] + hw * (cubic(mid - hw * x) + cubic(mid + hw * x));
}

double l12(const Field& f, const Grid& g, double y0) {
  require_frame(f, Frame::Y, "l12");
  if (y0 < 0) throw std::invalid_argument("l12: negative lower limit");
  Eigen::VectorXd m = radial_moment(f, g);
  double s0 = y0 == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(y0);
  return tail_integral_at(m, g, s0);
}

Eigen::VectorXd l12_profile(const Field& f, const Grid& g) {
  require_frame(f, Frame::Y, "l12_profile");
  return tail_integral(radial_moment(f, g), g.hs);
}

double weighted_inner(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::VectorXd& lw,
                      const Eigen::VectorXd& qb, const Grid& g) {
  Eigen::VectorXd r = a.cwiseProduct(b) * qb;
  std::vector<double> terms(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    double v = r[i];
    if (v == 0.0 || g.wsig[i] == 0.0) {
      terms[i] = 0.0;
      continue;
    }
    double e = lw[i] + std::log(std::abs(v) * g.wsig[i]);
    terms[i] = std::copysign(std::exp(e), v);
  }
  return pairwise_sum(terms.data(), terms.size());
}

namespace {

Eigen::VectorXd hk_logweight(const Grid& g) {
  // ((1+y)²/y²)² y : the extra y is dy = y dσ
  Eigen::VectorXd lw(g.ns);
  for (int i = 0; i < g.ns; ++i) lw[i] = 4.0 * std::log1p(std::exp(g.sigma[i])) - 3.0 * g.sigma[i];
  return lw;
}

template <class Visit>
void hk_terms(const Field& f, const Grid& g, int k, Visit&& visit) {
  std::vector<Field> s(k + 1);
  s[0] = f;
  for (int j = 1; j <= k; ++j) s[j] = d_sigma(s[j - 1], g);
  for (int i = 0; i <= k; ++i) visit(s[i].data, 0);
  // (D_β)^i D^j f = sin(2β) ∂_β (D_β)^{i-1} D^j f; the sin(2β) is folded into
  // the weight so the sin^{-γ} factor becomes the integrable sin^{2-γ}.
  for (int j = 0; j < k; ++j) {
    Field cur = s[j];
    for (int i = 1; i + j <= k; ++i) {
      Field z = d_beta(cur, g);
      visit(z.data, 1);
      cur = times_beta(z, g.sin2b, kSin2b);
    }
  }
}

}  // namespace

double hk_inner(const Field& f, const Field& h, const Grid& g, const Params& p, int k) {
  require_frame(f, Frame::Y, "hk_inner");
  require_frame(h, Frame::Y, "hk_inner");
  require_same_shape(f, h, "hk_inner");
  const Eigen::VectorXd lw = hk_logweight(g);
  const Eigen::VectorXd q0 = g.qb(WeightKind::Sin2Beta, -p.eta);
  const Eigen::VectorXd q1 = g.qb(WeightKind::Sin2Beta, 2.0 - p.gamma);
  std::vector<Eigen::MatrixXd> fa, ha;
  std::vector<int> kind;
  hk_terms(f, g, k, [&](const Eigen::MatrixXd& m, int t) {
    fa.push_back(m);
    kind.push_back(t);
  });
  hk_terms(h, g, k, [&](const Eigen::MatrixXd& m, int) { ha.push_back(m); });
  std::vector<double> parts;
  for (std::size_t t = 0; t < fa.size(); ++t)
    parts.push_back(weighted_inner(fa[t], ha[t], lw, kind[t] ? q1 : q0, g));
  return pairwise_sum(parts.data(), parts.size());
}

double hk_norm(const Field& f, const Grid& g, const Params& p, int k) {
  return std::sqrt(std::max(0.0, hk_inner(f, f, g, p, k)));
}

double hk_tail_fraction(const Field& f, const Grid& g, const Params& p, int k, double total) {
  if (total < 0) total = hk_inner(f, f, g, p, k);
  if (total <= 0) return 0.0;
  Field t = f;
  for (int i = 0; i < g.ns; ++i)
    if (g.sigma[i] > g.smin + std::log(10.0) && g.sigma[i] < g.smax - std::log(10.0))
      t.data.row(i).setZero();
  // derivative stencils blur the cut by a couple of rows; fine for a flag
  return std::clamp(hk_inner(t, t, g, p, k) / total, 0.0, 1.0);
}

namespace {

// D_ρ̄ acting on ρ̄^{pw} F, expressed on F: α ∂_σ F + pw F.
Field Drho(const Field& f, const Grid& g, double alpha, double pw) {
  Field r = d_sigma(f, g);
  r.data = alpha * r.data + pw * f.data;
  return r;
}

struct WTerm {
  Eigen::MatrixXd m;
  int weight;  // 0: sin^{-η}(2β), 1: sin^{2-η}(2β), 2: cos^{2-η}β
};

std::vector<WTerm> w_terms(const Field& f, WNorm which, int k, const Grid& g, double alpha,
                           double pw) {
  std::vector<WTerm> out;
  std::vector<Field> r(k + 1);
  r[0] = f;
  for (int j = 1; j <= k; ++j) r[j] = Drho(r[j - 1], g, alpha, pw);
  if (which != WNorm::W3) {
    for (int j = 0; j <= k; ++j) {
      Field cur = r[j];
      for (int i = 0; i + j <= k; ++i) {
        out.push_back({cur.data, (i == 0 && j == k) ? 1 : 0});
        if (i + j < k) cur = D_beta(cur, g);
      }
    }
    return out;
  }
  for (int i = 0; i <= k; ++i) {
    Field cur = r[i];
    for (int j = 0; i + j <= k; ++j) {
      out.push_back({cur.data, 2});
      if (i + j < k) cur = D_beta(cur, g);
    }
  }
  if (k >= 1) {
    std::vector<Field> rb(k);
    rb[0] = d_beta(f, g);
    for (int j = 1; j < k; ++j) rb[j] = Drho(rb[j - 1], g, alpha, pw);
    for (int j = 0; j < k; ++j) {
      Field cur = rb[j];
      for (int i = 0; i + j <= k - 1; ++i) {
        out.push_back({cur.data, 2});
        if (i + j < k - 1) cur = D_beta(cur, g);
      }
    }
  }
  return out;
}

}  // namespace

double w_inner(const Field& f, const Field& h, WNorm which, int k, const Grid& g, double alpha,
               double eta, double pf, double pg) {
  require_frame(f, Frame::YBAR, "w_inner");
  require_frame(h, Frame::YBAR, "w_inner");
  require_same_shape(f, h, "w_inner");
  const double radial = which == WNorm::W2 ? 1.0 + eta : 3.0;
  Eigen::VectorXd lw = ((radial + pf + pg) / alpha) * g.sigma.array() - std::log(alpha);
  const Eigen::VectorXd q[3] = {g.qb(WeightKind::Sin2Beta, -eta),
                                g.qb(WeightKind::Sin2Beta, 2.0 - eta),
                                g.qb(WeightKind::CosBeta, 2.0 - eta)};
  auto tf = w_terms(f, which, k, g, alpha, pf);
  auto th = (&f == &h && pf == pg) ? tf : w_terms(h, which, k, g, alpha, pg);
  std::vector<double> parts;
  for (std::size_t t = 0; t < tf.size(); ++t)
    parts.push_back(weighted_inner(tf[t].m, th[t].m, lw, q[tf[t].weight], g));
  return pairwise_sum(parts.data(), parts.size());
}

namespace {

// W1² and W2² of one field share every derivative term
std::pair<double, double> w12_sq(const Field& f, int k, const Grid& g, double alpha, double eta,
                                 double pf) {
  require_frame(f, Frame::YBAR, "w12_sq");
  const Eigen::VectorXd q0 = g.qb(WeightKind::Sin2Beta, -eta),
                        q1 = g.qb(WeightKind::Sin2Beta, 2.0 - eta);
  const Eigen::VectorXd l1 = ((3.0 + 2 * pf) / alpha) * g.sigma.array() - std::log(alpha);
  const Eigen::VectorXd l2 = ((1.0 + eta + 2 * pf) / alpha) * g.sigma.array() - std::log(alpha);
  auto tf = w_terms(f, WNorm::W1, k, g, alpha, pf);
  std::vector<double> a, b;
  for (const auto& t : tf) {
    const Eigen::VectorXd& q = t.weight == 1 ? q1 : q0;
    a.push_back(weighted_inner(t.m, t.m, l1, q, g));
    b.push_back(weighted_inner(t.m, t.m, l2, q, g));
  }
  return {std::max(0.0, pairwise_sum(a.data(), a.size())),
          std::max(0.0, pairwise_sum(b.data(), b.size()))};
}

}  // namespace

double w_norm(const Field& f, WNorm which, int k, const Grid& g, double alpha, double eta,
              double pf) {
  return std::sqrt(std::max(0.0, w_inner(f, f, which, k, g, alpha, eta, pf, pf)));
}

NormReport energy_xye(const Field& eps, const Field& xi, const Field& phi, int k, double c_embed,
                      const Grid& g, const Params& p) {
  NormReport r;
  r.k = k;
  const double a = p.alpha, e = p.eta;
  r.hk = hk_norm(eps, g, p, k);
  const auto [x1, x2] = w12_sq(xi, k, g, a, e, 0.0);
  r.w1 = std::sqrt(x1);
  r.w2 = std::sqrt(x2);
  r.w3 = w_norm(phi, WNorm::W3, k, g, a, e);
  r.X = r.w1 * r.w1 + r.w2 * r.w2 + r.w3 * r.w3;
  Field xb = d_beta(xi, g), xs = Drho(xi, g, a, 0.0);
  Field pb = d_beta(phi, g), ps = Drho(phi, g, a, 0.0);
  auto sq = [](double v) { return v * v; };
  const auto [b1, b2] = w12_sq(xb, k, g, a, e, -1.0);
  const auto [s1, s2] = w12_sq(xs, k, g, a, e, -1.0);
  r.Y = b1 + s1 + b2 + s2 + sq(w_norm(pb, WNorm::W3, k, g, a, e, -1.0)) +
        sq(w_norm(ps, WNorm::W3, k, g, a, e, -1.0));
  r.E = c_embed * std::pow(a, -2.0 * k + 1.0) * r.X + r.hk * r.hk;
  r.tail = r.hk > 0 ? hk_tail_fraction(eps, g, p, k, r.hk * r.hk) : 0.0;
  return r;
}

}  // namespace bsq
