#pragma once

#include <condition_variable>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "bsq/evolution.hpp"
#include "bsq/field.hpp"
#include "bsq/grid.hpp"
#include "bsq/params.hpp"
#include "bsq/verify.hpp"
#include "json.hpp"

namespace bsq {

inline constexpr const char* kCodeVersion = "0.1.0";

// s, t_phys, lambda, mu, l1, l2, lam_rate, eps_hk, X, Y, E, l12_drift, compat, prefactor_ratio
const std::vector<std::string>& csv_columns();
std::string csv_header();
std::string csv_row(const Diagnostics& d);

nlohmann::json grid_descriptor(const Grid& g);

// <base>.bin holds rows*cols little-endian float64, row-major (σ rows);
// <base>.json is the sidecar.
void write_snapshot(const std::filesystem::path& base, const Field& f, const Grid& g, double s,
                    const std::string& name);
Field read_snapshot(const std::filesystem::path& base, nlohmann::json* meta = nullptr);

std::string sha256_file(const std::filesystem::path& p);

struct RunManifest {
  std::string config;
  std::string code_version = kCodeVersion;
  nlohmann::json grid;
  std::uint64_t seed = 0;
  double s_start = 0, s_end = 0;
  std::vector<std::filesystem::path> files;  // relative to the run directory
};

// checksums every listed file
nlohmann::json manifest_json(const RunManifest& m, const std::filesystem::path& dir);
void write_manifest(const RunManifest& m, const std::filesystem::path& dir);
// recomputes checksums; returns the first mismatching file, or empty
std::string check_manifest(const std::filesystem::path& dir);

// One writer thread fed by a bounded queue. push() never blocks; a full
// queue drops the job and returns false.
class AsyncWriter {
 public:
  explicit AsyncWriter(std::size_t capacity = 4);
  ~AsyncWriter();
  AsyncWriter(const AsyncWriter&) = delete;
  AsyncWriter& operator=(const AsyncWriter&) = delete;

  bool push(std::function<void()> job);
  void flush();
  std::size_t dropped() const { return dropped_; }

 private:
  void loop();
  std::size_t cap_;
  std::deque<std::function<void()>> q_;
  std::mutex mu_;
  std::condition_variable cv_, idle_;
  bool stop_ = false, busy_ = false;
  std::size_t dropped_ = 0;
  std::thread th_;
};

struct RunResult {
  int steps = 0;
  double s_final = 0;
  std::vector<Diagnostics> rows;
  std::size_t snapshots_dropped = 0;
  double max_constraint_ratio = 0;  // |L₁₂(ε)(0)| / (1 + |ε|_{ℋ⁰}) over all steps
  double wall_seconds = 0;
};

// Full simulation: CSV + budget CSV + snapshots + manifest in out_dir.
RunResult run_simulation(const Params& p, const StepOptions& opt, const std::filesystem::path& out_dir,
                         const std::string& config_text);

// Parses run.csv (and the config echo in manifest.json when present).
std::vector<LedgerRow> read_run_csv(const std::filesystem::path& dir);

}  // namespace bsq
