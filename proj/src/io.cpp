#include "bsq/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bsq/calculus.hpp"

namespace fs = std::filesystem;

namespace bsq {

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> c = {
      "s",      "t_phys", "lambda", "mu", "l1", "l2",        "lam_rate",
      "eps_hk", "X",      "Y",      "E",  "l12_drift", "compat", "prefactor_ratio"};
  return c;
}

std::string csv_header() {
  std::string h;
  for (const auto& c : csv_columns()) h += (h.empty() ? "" : ",") + c;
  return h;
}

std::string csv_row(const Diagnostics& d) {
  const double v[] = {d.s,  d.t_phys, d.lambda, d.mu, d.l1,        d.l2,     d.lam_rate,
                      d.hk, d.X,      d.Y,      d.E,  d.l12_drift, d.compat, d.prefactor_ratio};
  std::string out;
  char buf[40];
  for (double x : v) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    if (!out.empty()) out += ',';
    out += buf;
  }
  return out;
}

nlohmann::json grid_descriptor(const Grid& g) {
  return {{"n_sigma", g.ns},       {"n_beta", g.nb}, {"sigma_min", g.smin},
          {"sigma_max", g.smax},   {"h_sigma", g.hs}, {"h_beta", g.hb},
          {"beta_layout", "midpoint"}, {"sigma_layout", "endpoint-inclusive"}};
}

namespace {

std::uint64_t to_le(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::little) return x;
  else return __builtin_bswap64(x);
}

fs::path with_ext(const fs::path& base, const char* ext) {
  fs::path p = base;
  p += ext;
  return p;
}

}  // namespace

void write_snapshot(const fs::path& base, const Field& f, const Grid& g, double s,
                    const std::string& name) {
  std::ofstream out(with_ext(base, ".bin"), std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + with_ext(base, ".bin").string());
  for (Eigen::Index i = 0; i < f.rows(); ++i)
    for (Eigen::Index j = 0; j < f.cols(); ++j) {
      std::uint64_t u;
      double v = f.data(i, j);
      std::memcpy(&u, &v, 8);
      u = to_le(u);
      out.write(reinterpret_cast<const char*>(&u), 8);
    }
  nlohmann::json meta = {{"name", name},
                         {"rows", f.rows()},
                         {"cols", f.cols()},
                         {"dtype", "float64-le"},
                         {"order", "row-major, rows = sigma, cols = beta"},
                         {"frame", to_string(f.frame)},
                         {"parity", to_string(f.parity)},
                         {"s", s},
                         {"grid", grid_descriptor(g)}};
  std::ofstream js(with_ext(base, ".json"));
  js << meta.dump(2) << "\n";
}

Field read_snapshot(const fs::path& base, nlohmann::json* meta_out) {
  std::ifstream js(with_ext(base, ".json"));
  if (!js) throw std::runtime_error("missing sidecar " + with_ext(base, ".json").string());
  nlohmann::json meta = nlohmann::json::parse(js);
  const Eigen::Index r = meta.at("rows"), c = meta.at("cols");
  Field f(Eigen::MatrixXd(r, c), frame_from_string(meta.at("frame")),
          parity_from_string(meta.at("parity")));
  std::ifstream in(with_ext(base, ".bin"), std::ios::binary);
  if (!in) throw std::runtime_error("missing data " + with_ext(base, ".bin").string());
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) {
      std::uint64_t u;
      if (!in.read(reinterpret_cast<char*>(&u), 8)) throw std::runtime_error("short snapshot file");
      u = to_le(u);
      double v;
      std::memcpy(&v, &u, 8);
      f.data(i, j) = v;
    }
  if (meta_out) *meta_out = meta;
  return f;
}

std::string sha256_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx, buf, std::size_t(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

nlohmann::json manifest_json(const RunManifest& m, const fs::path& dir) {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : m.files)
    files.push_back({{"path", f.generic_string()},
                     {"bytes", fs::file_size(dir / f)},
                     {"sha256", sha256_file(dir / f)}});
  return {{"config", m.config}, {"code_version", m.code_version}, {"grid", m.grid},
          {"seed", m.seed},     {"s_start", m.s_start},          {"s_end", m.s_end},
          {"files", files}};
}

void write_manifest(const RunManifest& m, const fs::path& dir) {
  std::ofstream out(dir / "manifest.json");
  out << manifest_json(m, dir).dump(2) << "\n";
}

std::string check_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) return "manifest.json";
  nlohmann::json m = nlohmann::json::parse(in);
  for (const auto& f : m.at("files")) {
    const std::string p = f.at("path");
    if (!fs::exists(dir / p) || sha256_file(dir / p) != f.at("sha256").get<std::string>()) return p;
  }
  return {};
}

AsyncWriter::AsyncWriter(std::size_t capacity) : cap_(capacity), th_([this] { loop(); }) {}

AsyncWriter::~AsyncWriter() {
  {
    std::lock_guard<std::mutex> lk(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  th_.join();
}

bool AsyncWriter::push(std::function<void()> job) {
  {
    std::lock_guard<std::mutex> lk(mu_);
    if (q_.size() >= cap_) {
      ++dropped_;
      return false;
    }
    q_.push_back(std::move(job));
  }
  cv_.notify_one();
  return true;
}

void AsyncWriter::flush() {
  std::unique_lock<std::mutex> lk(mu_);
  idle_.wait(lk, [this] { return q_.empty() && !busy_; });
}

void AsyncWriter::loop() {
  for (;;) {
    std::function<void()> job;
    {
      std::unique_lock<std::mutex> lk(mu_);
      cv_.wait(lk, [this] { return stop_ || !q_.empty(); });
      if (q_.empty()) return;
      job = std::move(q_.front());
      q_.pop_front();
      busy_ = true;
    }
    job();
    {
      std::lock_guard<std::mutex> lk(mu_);
      busy_ = false;
    }
    idle_.notify_all();
  }
}

RunResult run_simulation(const Params& p, const StepOptions& opt, const fs::path& dir,
                         const std::string& config_text) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(dir);
  Evolver ev(p, opt);
  SimState st = ev.initial_state();
  RunManifest man;
  man.config = config_text;
  man.grid = grid_descriptor(ev.grid());
  man.seed = p.seed;
  man.s_start = st.mod.s;

  std::ofstream csv(dir / "run.csv");
  std::ofstream bud(dir / "budget.csv");
  csv << csv_header() << "\n";
  bud << "s,scaling,transport,diffusion\n";
  man.files = {"run.csv", "budget.csv"};

  RunResult res;
  AsyncWriter writer;
  std::mutex files_mu;
  auto snapshot = [&](const SimState& s, int step) {
    if (p.snapshot_every <= 0 || step % p.snapshot_every != 0) return;
    fs::create_directories(dir / "snapshots");
    auto copy = std::make_shared<SimState>(s);
    const Grid* g = &ev.grid();
    char tag[32];
    std::snprintf(tag, sizeof tag, "%06d", step);
    std::string t(tag);
    bool ok = writer.push([copy, g, t, &dir, &man, &files_mu] {
      const std::pair<const char*, const Field*> fields[] = {
          {"eps", &copy->eps}, {"xi", &copy->xi}, {"phi", &copy->phi}, {"phi_eps", &copy->phi_eps}};
      for (auto [name, f] : fields) {
        fs::path rel = fs::path("snapshots") / (std::string(name) + "_" + t);
        write_snapshot(dir / rel, *f, *g, copy->mod.s, name);
        std::lock_guard<std::mutex> lk(files_mu);
        man.files.push_back(fs::path(rel) += ".bin");
        man.files.push_back(fs::path(rel) += ".json");
      }
    });
    (void)ok;  // dropped snapshots are counted by the writer
  };
  auto record = [&](const SimState& s, int step) {
    Diagnostics d = ev.diagnostics(s);
    csv << csv_row(d) << "\n";
    res.rows.push_back(d);
    if (step > 0)
      res.max_constraint_ratio =
          std::max(res.max_constraint_ratio, std::abs(d.l12_drift) / (1.0 + d.eps_h0));
    if (step % 20 == 0) {
      XBudget b = x_budget(ev, s);
      char buf[128];
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", s.mod.s, b.scaling, b.transport,
                    b.diffusion);
      bud << buf << "\n";
    }
    snapshot(s, step);
  };

  record(st, 0);
  const int nsteps = int(std::llround(p.s_end / p.dt));
  for (int n = 1; n <= nsteps; ++n) {
    st = ev.imex_step(st, p.dt);
    record(st, n);
    res.steps = n;
  }
  res.s_final = st.mod.s;
  writer.flush();
  csv.close();
  bud.close();
  res.snapshots_dropped = writer.dropped();
  man.s_end = st.mod.s;
  write_manifest(man, dir);
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

std::vector<LedgerRow> read_run_csv(const fs::path& dir) {
  std::ifstream in(dir / "run.csv");
  if (!in) throw ConfigError("no run.csv in " + dir.string());
  Params p;
  if (std::ifstream mf(dir / "manifest.json"); mf) {
    nlohmann::json m = nlohmann::json::parse(mf);
    p = parse_config(m.value("config", std::string()));
  } else {
    finalize(p);
  }
  std::string line;
  if (!std::getline(in, line) || line != csv_header())
    throw ConfigError("run.csv has an unexpected header");
  const auto& cols = csv_columns();
  auto idx = [&](const char* name) {
    return std::size_t(std::find(cols.begin(), cols.end(), name) - cols.begin());
  };
  const std::size_t is = idx("s"), iE = idx("E"), iX = idx("X"), iY = idx("Y"), il = idx("lam_rate");
  std::vector<LedgerRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != cols.size()) throw ConfigError("run.csv: malformed row");
    LedgerRow r;
    r.s = v[is];
    r.E = v[iE];
    r.X = v[iX];
    r.Y = v[iY];
    r.lam_rate = v[il];
    r.mu_rate = (2.0 + p.delta) * r.lam_rate;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace bsq
