#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bsq {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Params {
  double alpha = 0.1;
  double eta = 0.99;
  double gamma = 1.0 + 0.1 / 10.0;
  double delta = 0.1;
  bool delta_explicit = false;
  int k = 4;

  int n_beta = 128;
  int n_sigma = 128;
  double sigma_min = -20.0;
  double sigma_max = 20.0;

  double l2_0 = 1.0;
  double lambda_0 = 1.0;

  double dt = 2.5e-3;
  double s_end = 10.0;

  double tol_linear = 1e-10;
  double tol_quad = 1e-12;

  // run controls
  bool forcing = true;
  double delta0 = 1e-2;    // initial energy budget, as a multiple of alpha^3
  double c_embed = 1.0;
  int snapshot_every = 0;  // 0 disables snapshots
  std::uint64_t seed = 1;
  std::string init = "small";  // "small" or "zero"
};

// Recompute the derived fields (gamma, and delta when not set explicitly).
void finalize(Params& p);

// Throws ConfigError when an invariant fails.
void validate(const Params& p);

Params with_alpha(Params p, double alpha);
Params with_resolution(Params p, int n);

// key = value lines, '#' comments, [section] headers or dotted keys.
Params parse_config(const std::string& text);
Params load_config(const std::string& path);
std::string to_config_text(const Params& p);

}  // namespace bsq
