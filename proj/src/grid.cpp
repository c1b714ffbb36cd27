#include "bsq/grid.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bsq {

std::string to_string(Frame f) { return f == Frame::Y ? "y" : "ybar"; }

namespace {

const char* sym_name(Sym s) {
  switch (s) {
    case Sym::Odd: return "odd";
    case Sym::Even: return "even";
    default: return "none";
  }
}

Sym sym_from(const std::string& s) {
  if (s == "odd") return Sym::Odd;
  if (s == "even") return Sym::Even;
  if (s == "none") return Sym::None;
  throw std::invalid_argument("bad parity '" + s + "'");
}

// Gauss-Legendre on [-1, 1] via Golub-Welsch.
struct GaussRule {
  Eigen::VectorXd x, w;
};

constexpr int kGauss = 20;

const GaussRule& gauss() {
  static const GaussRule rule = [] {
    const int n = kGauss;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
      double b = i / std::sqrt(4.0 * i * i - 1.0);
      J(i, i - 1) = J(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussRule r;
    r.x = es.eigenvalues();
    r.w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
    return r;
  }();
  return rule;
}

template <class F>
double gl(F&& f, double a, double b) {
  const auto& r = gauss();
  double m = 0.5 * (a + b), h = 0.5 * (b - a), s = 0.0;
  for (int q = 0; q < kGauss; ++q) s += r.w[q] * f(m + h * r.x[q]);
  return s * h;
}

// ∫_0^L d^p F(d) dd for smooth F and p > -1: geometric grading towards
// d = 0, then a two-term analytic remainder on the innermost piece.
template <class F>
double singular_integral(F&& f, double p, double L) {
  constexpr int K = 48;
  double s = 0.0, b = L;
  for (int k = 0; k < K; ++k) {
    double a = 0.5 * b;
    s += gl([&](double d) { return std::pow(d, p) * f(d); }, a, b);
    b = a;
  }
  double f0 = f(0.0), f1 = (f(b) - f0) / b;
  s += f0 * std::pow(b, p + 1.0) / (p + 1.0) + f1 * std::pow(b, p + 2.0) / (p + 2.0);
  return s;
}

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

}  // namespace

std::string to_string(Parity p) { return std::string(sym_name(p.lo)) + "/" + sym_name(p.hi); }

Frame frame_from_string(const std::string& s) {
  if (s == "y") return Frame::Y;
  if (s == "ybar") return Frame::YBAR;
  throw std::invalid_argument("bad frame '" + s + "'");
}

Parity parity_from_string(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) throw std::invalid_argument("bad parity '" + s + "'");
  return {sym_from(s.substr(0, slash)), sym_from(s.substr(slash + 1))};
}

Eigen::VectorXd product_weights(int n, WeightKind kind, double p) {
  if (n < 4) throw std::invalid_argument("product_weights: need at least 4 nodes");
  if (!(p > -1.0)) throw std::invalid_argument("product_weights: weight not integrable");
  const double h = M_PI / 2.0 / n;
  auto node = [h](int j) { return (j + 0.5) * h; };
  auto weight = [kind, p](double b) {
    return kind == WeightKind::Sin2Beta ? std::pow(std::sin(2.0 * b), p) : std::pow(std::cos(b), p);
  };
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < n; ++c) {
    const double a = c * h, b = (c + 1) * h;
    const int s0 = std::clamp(c - 1, 0, n - 4);
    for (int m = 0; m < 4; ++m) {
      auto basis = [&](double x) {
        double v = 1.0;
        for (int l = 0; l < 4; ++l)
          if (l != m) v *= (x - node(s0 + l)) / (node(s0 + m) - node(s0 + l));
        return v;
      };
      const bool sing_lo = kind == WeightKind::Sin2Beta && c == 0;
      const bool sing_hi = c == n - 1;
      double val;
      if (sing_lo) {
        // sin(2β) = 2β sinc(2β)
        val = singular_integral(
            [&](double d) { return std::pow(2.0 * sinc(2.0 * d), p) * basis(d); }, p, h);
      } else if (sing_hi) {
        const double hb = M_PI / 2.0;
        if (kind == WeightKind::Sin2Beta)
          val = singular_integral(
              [&](double d) { return std::pow(2.0 * sinc(2.0 * d), p) * basis(hb - d); }, p, h);
        else
          val = singular_integral([&](double d) { return std::pow(sinc(d), p) * basis(hb - d); },
                                  p, h);
      } else {
        val = gl([&](double x) { return weight(x) * basis(x); }, a, b);
      }
      q[s0 + m] += val;
    }
  }
  return q;
}

Eigen::VectorXd Grid::qb(WeightKind kind, double p) const {
  auto it = qcache.find({int(kind), p});
  if (it != qcache.end()) return it->second;
  return product_weights(nb, kind, p);
}

Grid build_grid(int n_sigma, int n_beta, double sigma_min, double sigma_max, double eta,
                double gamma) {
  if (n_sigma < 16 || n_beta < 4)
    throw std::invalid_argument("build_grid: n_sigma must be >= 16 and n_beta >= 4");
  if (!(sigma_min < sigma_max)) throw std::invalid_argument("build_grid: empty σ range");
  Grid g;
  g.ns = n_sigma;
  g.nb = n_beta;
  g.smin = sigma_min;
  g.smax = sigma_max;
  g.hs = (sigma_max - sigma_min) / (n_sigma - 1);
  g.hb = M_PI / 2.0 / n_beta;
  g.sigma.resize(n_sigma);
  for (int i = 0; i < n_sigma; ++i) g.sigma[i] = sigma_min + i * g.hs;
  g.sigma[n_sigma - 1] = sigma_max;
  g.beta.resize(n_beta);
  for (int j = 0; j < n_beta; ++j) g.beta[j] = (j + 0.5) * g.hb;
  g.sin2b = (2.0 * g.beta.array()).sin();
  g.cos2b = (2.0 * g.beta.array()).cos();
  g.sinb = g.beta.array().sin();
  g.cosb = g.beta.array().cos();
  g.tanb = g.beta.array().tan();
  g.wsig = Eigen::VectorXd::Constant(n_sigma, g.hs);
  g.wsig[0] = g.wsig[n_sigma - 1] = 0.5 * g.hs;

  const std::pair<WeightKind, double> used[] = {
      {WeightKind::Sin2Beta, 0.0},        {WeightKind::Sin2Beta, -eta},
      {WeightKind::Sin2Beta, 2.0 - eta},  {WeightKind::Sin2Beta, 2.0 - gamma},
      {WeightKind::CosBeta, 2.0 - eta},   {WeightKind::CosBeta, -eta}};
  for (auto [kind, p] : used) g.qcache[{int(kind), p}] = product_weights(n_beta, kind, p);
  return g;
}

Grid build_grid(const Params& p) {
  validate(p);
  return build_grid(p.n_sigma, p.n_beta, p.sigma_min, p.sigma_max, p.eta, p.gamma);
}

Field shift_sigma(const Field& f, const Grid& g, double shift, Outside mode) {
  Field out = Field::zeros(f.rows(), f.cols(), f.frame, f.parity);
  const int n = int(f.rows());
  for (int i = 0; i < n; ++i) {
    double x = (g.sigma[i] + shift - g.smin) / g.hs;
    if (mode == Outside::Zero && (x < -1.0 || x > n)) continue;
    if (mode == Outside::Clamp) x = std::clamp(x, 0.0, double(n - 1));
    int i0 = int(std::floor(x));
    double t = x - i0;
    double w[4] = {-t * (t - 1) * (t - 2) / 6.0, (t + 1) * (t - 1) * (t - 2) / 2.0,
                   -(t + 1) * t * (t - 2) / 2.0, (t + 1) * t * (t - 1) / 6.0};
    for (int m = 0; m < 4; ++m) {
      int r = i0 - 1 + m;
      if (r < 0 || r >= n) {
        if (mode == Outside::Zero) continue;
        r = std::clamp(r, 0, n - 1);
      }
      out.data.row(i) += w[m] * f.data.row(r);
    }
  }
  return out;
}

}  // namespace bsq
