#include "bsq/params.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace bsq {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad number for " + key + ": '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad integer for " + key + ": '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

using Setter = std::function<void(Params&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> m = {
      {"physics.alpha", [](Params& p, auto& k, auto& v) { p.alpha = to_double(k, v); }},
      {"physics.delta",
       [](Params& p, auto& k, auto& v) {
         p.delta = to_double(k, v);
         p.delta_explicit = true;
       }},
      {"physics.k", [](Params& p, auto& k, auto& v) { p.k = int(to_int(k, v)); }},
      {"physics.eta",
       [](Params&, auto& k, auto& v) {
         if (to_double(k, v) != 0.99) throw ConfigError("eta is fixed at 0.99");
       }},
      {"physics.gamma",
       [](Params&, auto&, auto&) { throw ConfigError("gamma is derived as 1 + alpha/10"); }},
      {"grid.n_beta", [](Params& p, auto& k, auto& v) { p.n_beta = int(to_int(k, v)); }},
      {"grid.n_sigma", [](Params& p, auto& k, auto& v) { p.n_sigma = int(to_int(k, v)); }},
      {"grid.sigma_min", [](Params& p, auto& k, auto& v) { p.sigma_min = to_double(k, v); }},
      {"grid.sigma_max", [](Params& p, auto& k, auto& v) { p.sigma_max = to_double(k, v); }},
      {"modulation.l2_0", [](Params& p, auto& k, auto& v) { p.l2_0 = to_double(k, v); }},
      {"modulation.lambda_0", [](Params& p, auto& k, auto& v) { p.lambda_0 = to_double(k, v); }},
      {"time.dt", [](Params& p, auto& k, auto& v) { p.dt = to_double(k, v); }},
      {"time.s_end", [](Params& p, auto& k, auto& v) { p.s_end = to_double(k, v); }},
      {"solver.tol_linear", [](Params& p, auto& k, auto& v) { p.tol_linear = to_double(k, v); }},
      {"solver.tol_quad", [](Params& p, auto& k, auto& v) { p.tol_quad = to_double(k, v); }},
      {"run.forcing", [](Params& p, auto& k, auto& v) { p.forcing = to_bool(k, v); }},
      {"run.delta0", [](Params& p, auto& k, auto& v) { p.delta0 = to_double(k, v); }},
      {"run.c_embed", [](Params& p, auto& k, auto& v) { p.c_embed = to_double(k, v); }},
      {"run.snapshot_every",
       [](Params& p, auto& k, auto& v) { p.snapshot_every = int(to_int(k, v)); }},
      {"run.seed",
       [](Params& p, auto& k, auto& v) { p.seed = std::uint64_t(to_int(k, v)); }},
      {"run.init",
       [](Params& p, auto& k, auto& v) {
         if (v != "small" && v != "zero") throw ConfigError("run.init must be small or zero");
         p.init = v;
         (void)k;
       }},
  };
  return m;
}

}  // namespace

void finalize(Params& p) {
  p.eta = 0.99;
  p.gamma = 1.0 + p.alpha / 10.0;
  if (!p.delta_explicit) p.delta = p.alpha;
}

void validate(const Params& p) {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (!(p.alpha > 0.0 && std::isfinite(p.alpha))) fail("alpha must be positive");
  if (p.eta != 0.99) fail("eta must equal 99/100");
  if (p.gamma != 1.0 + p.alpha / 10.0) fail("gamma must equal 1 + alpha/10");
  if (!std::isfinite(p.delta)) fail("delta must be finite");
  if (p.k < 0) fail("k must be non-negative");
  if (p.n_beta < 16 || p.n_sigma < 16) fail("n_beta and n_sigma must be at least 16");
  if (!(p.sigma_min < 0.0 && 0.0 < p.sigma_max)) fail("need sigma_min < 0 < sigma_max");
  if (!(p.dt > 0.0)) fail("dt must be positive");
  if (!(p.s_end >= 0.0)) fail("s_end must be non-negative");
  if (!(p.l2_0 > 0.0 && p.lambda_0 > 0.0)) fail("l2_0 and lambda_0 must be positive");
  if (!(p.tol_linear > 0.0 && p.tol_quad > 0.0)) fail("tolerances must be positive");
  if (p.snapshot_every < 0) fail("snapshot_every must be non-negative");
}

Params with_alpha(Params p, double alpha) {
  p.alpha = alpha;
  finalize(p);
  return p;
}

Params with_resolution(Params p, int n) {
  p.n_beta = n;
  p.n_sigma = n;
  return p;
}

Params parse_config(const std::string& text) {
  Params p;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (val.size() >= 2 && val.front() == '"' && val.back() == '"') val = val.substr(1, val.size() - 2);
    std::string full = section.empty() ? key : section + "." + key;
    auto it = setters().find(full);
    if (it == setters().end()) throw ConfigError("unknown key '" + full + "'");
    it->second(p, full, val);
  }
  finalize(p);
  validate(p);
  return p;
}

Params load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const Params& p) {
  std::ostringstream o;
  o.precision(17);
  o << "[physics]\nalpha = " << p.alpha << "\n";
  if (p.delta_explicit) o << "delta = " << p.delta << "\n";
  o << "k = " << p.k << "\n\n[grid]\nn_beta = " << p.n_beta << "\nn_sigma = " << p.n_sigma
    << "\nsigma_min = " << p.sigma_min << "\nsigma_max = " << p.sigma_max
    << "\n\n[modulation]\nl2_0 = " << p.l2_0 << "\nlambda_0 = " << p.lambda_0
    << "\n\n[time]\ndt = " << p.dt << "\ns_end = " << p.s_end
    << "\n\n[solver]\ntol_linear = " << p.tol_linear << "\ntol_quad = " << p.tol_quad
    << "\n\n[run]\nforcing = " << (p.forcing ? "true" : "false") << "\ndelta0 = " << p.delta0
    << "\nc_embed = " << p.c_embed << "\nsnapshot_every = " << p.snapshot_every
    << "\nseed = " << p.seed << "\ninit = " << p.init << "\n";
  return o.str();
}

}  // namespace bsq
