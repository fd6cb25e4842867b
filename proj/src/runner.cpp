#include "pmsm/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "pmsm/coupling.hpp"
#include "pmsm/error.hpp"

namespace pmsm {

namespace fs = std::filesystem;

int cogging_order(const MachineSpec& spec) {
  return static_cast<int>(std::lcm(2 * spec.pole_pairs, spec.slot_count()));
}

Simulator::Simulator(const MachineSpec& spec, int refinement,
                     int harmonic_cutoff)
    : spec_(spec),
      refinement_(refinement),
      harmonic_cutoff_(harmonic_cutoff),
      mesh_(build_machine_mesh(spec, refinement)) {}

TorqueTrace Simulator::trace(const SampleInputs& s, Spectrum* sp) const {
  EccentricityState ecc{s.r0, s.theta0};
  const CoupledMesh mesh = apply_eccentricity(mesh_, ecc);
  const PeriodRaw raw = run_period(mesh, spec_);
  TorqueTrace tr = analyze_period(raw, spec_, DerivativeMode::Periodic);
  if (sp) *sp = spectrum_and_thd(tr.torque, harmonic_cutoff_);
  return tr;
}

std::vector<double> Simulator::eval(const SampleInputs& s) const {
  Spectrum sp;
  const TorqueTrace tr = trace(s, &sp);
  return {tr.mean_torque, sp.thd};
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex_bits(double v) {
  std::uint64_t bits;
  static_assert(sizeof bits == sizeof v);
  std::memcpy(&bits, &v, sizeof bits);
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(bits));
  return buf;
}

struct PointKey {
  std::uint64_t r0_bits, t0_bits;
  bool operator==(const PointKey&) const = default;
};
struct PointKeyHash {
  std::size_t operator()(const PointKey& k) const {
    return std::hash<std::uint64_t>()(k.r0_bits * 0x9E3779B97F4A7C15ull ^
                                      k.t0_bits);
  }
};

PointKey key_of(const SampleInputs& s) {
  PointKey k;
  std::memcpy(&k.r0_bits, &s.r0, sizeof k.r0_bits);
  std::memcpy(&k.t0_bits, &s.theta0, sizeof k.t0_bits);
  return k;
}

struct CacheEntry {
  bool ok = false;
  std::vector<double> values;  // kQoi when ok
  std::string error;
};

// Evaluation cache shared by the worker pool and the serial estimators;
// successful entries are persisted to the cache file for --resume.
class SampleCache {
 public:
  SampleCache(const Simulator& sim, const std::string& path, bool resume)
      : sim_(&sim), path_(path) {
    if (resume) load();
    file_.open(path_, std::ios::app | std::ios::binary);
    if (!file_) fail(ErrorCode::Io, "cannot open cache file: " + path_);
  }

  // evaluate or fetch; records failures as poisoned entries
  std::vector<double> eval(const SampleInputs& s) {
    {
      std::lock_guard lk(mu_);
      auto it = map_.find(key_of(s));
      if (it != map_.end()) {
        if (it->second.ok) return it->second.values;
        fail(ErrorCode::Uq, it->second.error);
      }
    }
    CacheEntry e;
    try {
      e.values = sim_->eval(s);
      e.ok = true;
    } catch (const Error& err) {
      e.error = err.what();
    }
    std::lock_guard lk(mu_);
    auto [it, inserted] = map_.emplace(key_of(s), e);
    if (inserted && e.ok) persist(s, e.values);
    if (!it->second.ok) fail(ErrorCode::Uq, it->second.error);
    return it->second.values;
  }

  // parallel pre-evaluation; failures stay recorded, not thrown
  void prefill(const std::vector<SampleInputs>& pts, int jobs) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= pts.size()) return;
        try {
          eval(pts[i]);
        } catch (const Error&) {
        }
      }
    };
    if (jobs <= 1) {
      worker();
      return;
    }
    std::vector<std::thread> threads;
    for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }

 private:
  void load() {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
      unsigned long long rb = 0, tb = 0;
      double tau, thd;
      if (std::sscanf(line.c_str(), "%llx %llx %lg %lg", &rb, &tb, &tau,
                      &thd) == 4) {
        CacheEntry e;
        e.ok = true;
        e.values = {tau, thd};
        map_.emplace(PointKey{rb, tb}, std::move(e));
      }
    }
  }

  void persist(const SampleInputs& s, const std::vector<double>& v) {
    file_ << hex_bits(s.r0) << " " << hex_bits(s.theta0) << " " << fmt(v[0])
          << " " << fmt(v[1]) << "\n";
    file_.flush();
  }

  const Simulator* sim_;
  std::string path_;
  std::ofstream file_;
  std::mutex mu_;
  std::unordered_map<PointKey, CacheEntry, PointKeyHash> map_;
};

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::string& header,
            std::uint64_t config_hash) {
    os_.open(path, std::ios::binary);
    if (!os_) fail(ErrorCode::Io, "cannot open output file: " + path.string());
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(config_hash));
    os_ << "# config_hash " << buf << "\n" << header << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      os_ << (i ? "," : "") << cells[i];
    os_ << "\n";
  }
  ~CsvWriter() { os_.flush(); }

 private:
  std::ofstream os_;
};

struct RunContext {
  RunConfig cfg;
  MachineSpec spec;
  std::uint64_t hash = 0;
  fs::path out;
  std::unique_ptr<Simulator> sim;
  std::unique_ptr<SampleCache> cache;
  std::ofstream log;

  void log_line(const std::string& s) {
    log << s << "\n";
    log.flush();
  }
};

void write_trace_csv(const RunContext& ctx, const fs::path& name,
                     const TorqueTrace& tr) {
  CsvWriter csv(ctx.out / name,
                "time,torque,p_electrical,p_loss,w_mag_rate,torque_band",
                ctx.hash);
  for (std::size_t k = 0; k < tr.time.size(); ++k)
    csv.row({fmt(tr.time[k]), fmt(tr.torque[k]), fmt(tr.p_electrical[k]),
             fmt(tr.p_loss[k]), fmt(tr.dw_dt[k]), fmt(tr.torque_band[k])});
}

void write_spectrum_csv(const RunContext& ctx, const fs::path& name,
                        const Spectrum& sp) {
  CsvWriter csv(ctx.out / name, "harmonic,amplitude", ctx.hash);
  for (std::size_t n = 0; n < sp.amps.size(); ++n)
    csv.row({std::to_string(n), fmt(sp.amps[n])});
}

double clip_index(double s) { return std::clamp(s, -0.01, 1.01); }

struct SummaryRow {
  std::string quantity, method;
  double mean = 0.0, sigma = 0.0;
  std::string eps_mc = "", s_r0 = "", s_t0 = "", t_r0 = "", t_t0 = "";
};

void write_summary_csv(const RunContext& ctx,
                       const std::vector<SummaryRow>& rows) {
  CsvWriter csv(ctx.out / "summary.csv",
                "quantity,method,mean,sigma,eps_mc,s_r0,s_theta0,st_r0,st_theta0",
                ctx.hash);
  for (const auto& r : rows)
    csv.row({r.quantity, r.method, fmt(r.mean), fmt(r.sigma), r.eps_mc, r.s_r0,
             r.s_t0, r.t_r0, r.t_t0});
}

void write_manifest(const RunContext& ctx,
                    const std::vector<std::pair<std::string, std::string>>&
                        extra) {
  std::ofstream os(ctx.out / "manifest.txt", std::ios::binary);
  if (!os) fail(ErrorCode::Io, "cannot write manifest");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(ctx.hash));
  os << "version " << kVersion << "\n";
  os << "mode " << ctx.cfg.mode << "\n";
  os << "config_hash " << buf << "\n";
  os << "seed " << ctx.cfg.seed << "\n";
  os << "refinement " << ctx.cfg.refinement << "\n";
  os << "harmonic_cutoff " << ctx.cfg.harmonic_cutoff << "\n";
  for (const auto& [k, v] : extra) os << k << " " << v << "\n";
}

RandomInputModel input_model(const MachineSpec& spec) {
  return RandomInputModel(spec.sigma_r0,
                          spec.truncation_fraction * spec.mean_airgap());
}

Evaluator cache_evaluator(RunContext& ctx) {
  return [&ctx](const SampleInputs& s) { return ctx.cache->eval(s); };
}

// ---- modes ----

std::string hash_hex(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void run_nominal(RunContext& ctx) {
  Spectrum sp;
  const TorqueTrace tr = ctx.sim->trace(SampleInputs{0.0, 0.0}, &sp);
  write_trace_csv(ctx, "trace.csv", tr);
  write_spectrum_csv(ctx, "spectrum.csv", sp);
  write_mesh_text(ctx.sim->base_mesh(), (ctx.out / "mesh.txt").string(),
                  "config_hash " + hash_hex(ctx.hash));
  write_summary_csv(ctx, {{"tau_mean", "nominal", tr.mean_torque, 0.0},
                          {"thd", "nominal", sp.thd, 0.0}});
  write_manifest(ctx, {{"mean_torque", fmt(tr.mean_torque)},
                       {"mean_torque_band", fmt(tr.mean_torque_band)},
                       {"thd", fmt(sp.thd)},
                       {"max_lambda_residual", fmt(tr.max_lambda_residual)},
                       {"steps", std::to_string(tr.time.size())}});
}

void run_sweep(RunContext& ctx) {
  const double gap = ctx.spec.mean_airgap();
  const int slot_order = cogging_order(ctx.spec);
  std::vector<SampleInputs> pts;
  for (double eps : ctx.cfg.eps_sweep) {
    if (eps < 0.0 || eps >= 1.0)
      fail(ErrorCode::Config, "sweep eccentricity must lie in [0, 1)");
    pts.push_back(SampleInputs{eps * gap, 0.0});
  }

  CsvWriter csv(ctx.out / "sweep.csv",
                "eps,r0,tau_mean,thd,slot_harmonic_amplitude", ctx.hash);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Spectrum sp;
    const TorqueTrace tr = ctx.sim->trace(pts[i], &sp);
    const double amp = slot_order < static_cast<int>(sp.amps.size())
                           ? sp.amps[slot_order]
                           : 0.0;
    csv.row({fmt(ctx.cfg.eps_sweep[i]), fmt(pts[i].r0), fmt(tr.mean_torque),
             fmt(sp.thd), fmt(amp)});
    write_spectrum_csv(ctx, "spectrum_" + std::to_string(i) + ".csv", sp);
    ctx.log_line("{\"sweep_point\":" + std::to_string(i) + ",\"status\":\"ok\"}");
  }
  write_manifest(ctx, {{"sweep_points", std::to_string(pts.size())},
                       {"slot_harmonic", std::to_string(slot_order)}});
}

void write_mc_samples_csv(const RunContext& ctx, const McResult& mc,
                          const RandomInputModel& model) {
  CsvWriter csv(ctx.out / "samples.csv", "id,r0,theta0,tau_mean,thd,status",
                ctx.hash);
  // replay the slot/attempt walk deterministically for the listing
  int failures_seen = 0;
  for (int j = 0; j < mc.n_requested; ++j) {
    for (int attempt = 0;; ++attempt) {
      const SampleInputs s = model.draw(ctx.cfg.seed, mc_sample_id(j, attempt));
      const std::string id =
          "mc:" + std::to_string(j) +
          (attempt ? (":" + std::to_string(attempt)) : std::string());
      bool ok = true;
      std::vector<double> v;
      try {
        v = ctx.cache->eval(s);
      } catch (const Error&) {
        ok = false;
      }
      if (ok) {
        csv.row({id, fmt(s.r0), fmt(s.theta0), fmt(v[0]), fmt(v[1]), "ok"});
        break;
      }
      csv.row({id, fmt(s.r0), fmt(s.theta0), "", "", "fail"});
      if (++failures_seen > mc.n_failed) break;  // stay in step with the run
    }
  }
}

McResult run_mc_part(RunContext& ctx, std::vector<SummaryRow>* rows) {
  const RandomInputModel model = input_model(ctx.spec);
  std::vector<SampleInputs> pts;
  pts.reserve(ctx.cfg.n_mc);
  for (int j = 0; j < ctx.cfg.n_mc; ++j)
    pts.push_back(model.draw(ctx.cfg.seed, mc_sample_id(j, 0)));
  ctx.cache->prefill(pts, ctx.cfg.jobs);

  const McResult mc = mc_estimate(model, ctx.cfg.seed, ctx.cfg.n_mc,
                                  Simulator::kQoi, cache_evaluator(ctx));
  ctx.log_line("{\"event\":\"mc_done\",\"n_used\":" + std::to_string(mc.n_used) +
               ",\"n_failed\":" + std::to_string(mc.n_failed) +
               ",\"n_rejected_draws\":" + std::to_string(mc.n_rejected_draws) +
               "}");
  write_mc_samples_csv(ctx, mc, model);
  const char* names[] = {"tau_mean", "thd"};
  for (int q = 0; q < Simulator::kQoi; ++q) {
    SummaryRow r{names[q], "mc", mc.mean[q], std::sqrt(mc.variance[q])};
    r.eps_mc = fmt(mc.mc_error[q]);
    rows->push_back(r);
  }
  return mc;
}

GpcResult run_gpc_part(RunContext& ctx, std::vector<SummaryRow>* rows) {
  const RandomInputModel model = input_model(ctx.spec);
  std::vector<SampleInputs> pts;
  std::vector<double> wts;
  gpc_grid(model, ctx.cfg.nodes_per_dim, ctx.cfg.nodes_per_dim, &pts, &wts);
  ctx.cache->prefill(pts, ctx.cfg.jobs);

  const GpcResult gpc =
      gpc_estimate(model, ctx.cfg.nodes_per_dim, ctx.cfg.nodes_per_dim,
                   Simulator::kQoi, cache_evaluator(ctx));
  CsvWriter csv(ctx.out / "nodes.csv", "id,r0,theta0,weight,tau_mean,thd",
                ctx.hash);
  for (std::size_t g = 0; g < gpc.grid.size(); ++g) {
    const auto v = ctx.cache->eval(gpc.grid[g]);
    csv.row({"gpc:" + std::to_string(g), fmt(gpc.grid[g].r0),
             fmt(gpc.grid[g].theta0), fmt(gpc.weights[g]), fmt(v[0]),
             fmt(v[1])});
  }
  const char* names[] = {"tau_mean", "thd"};
  for (int q = 0; q < Simulator::kQoi; ++q)
    rows->push_back(
        {names[q], "gpc", gpc.mean[q], std::sqrt(gpc.variance[q])});
  return gpc;
}

void run_uq_mc(RunContext& ctx) {
  std::vector<SummaryRow> rows;
  const McResult mc = run_mc_part(ctx, &rows);
  write_summary_csv(ctx, rows);
  write_manifest(ctx, {{"n_mc", std::to_string(mc.n_requested)},
                       {"n_used", std::to_string(mc.n_used)},
                       {"n_failed", std::to_string(mc.n_failed)},
                       {"n_rejected_draws", std::to_string(mc.n_rejected_draws)}});
}

void run_uq_gpc(RunContext& ctx) {
  std::vector<SummaryRow> rows;
  const GpcResult gpc = run_gpc_part(ctx, &rows);
  write_summary_csv(ctx, rows);
  write_manifest(ctx,
                 {{"nodes_per_dim", std::to_string(ctx.cfg.nodes_per_dim)},
                  {"n_evals", std::to_string(gpc.n_evals)}});
}

void run_sensitivity(RunContext& ctx) {
  const RandomInputModel model = input_model(ctx.spec);
  std::vector<SampleInputs> pts;
  pts.reserve(4 * ctx.cfg.n_base);
  for (int j = 0; j < ctx.cfg.n_base; ++j) {
    const auto quad = sobol_quadruple(model, ctx.cfg.seed, j);
    pts.insert(pts.end(), quad.begin(), quad.end());
  }
  ctx.cache->prefill(pts, ctx.cfg.jobs);

  const SobolResult sob =
      sobol_sensitivity(model, ctx.cfg.seed, ctx.cfg.n_base, Simulator::kQoi,
                        cache_evaluator(ctx));
  ctx.log_line("{\"event\":\"sobol_done\",\"n_used\":" +
               std::to_string(sob.n_used) +
               ",\"n_failed\":" + std::to_string(sob.n_failed) + "}");

  CsvWriter csv(ctx.out / "samples.csv", "id,r0,theta0,tau_mean,thd,status",
                ctx.hash);
  static const char* tag[] = {"a", "b", "ba", "ab"};
  for (int j = 0; j < ctx.cfg.n_base; ++j) {
    for (int p = 0; p < 4; ++p) {
      const SampleInputs& s = pts[4 * j + p];
      const std::string id =
          std::string(tag[p]) + ":" + std::to_string(j);
      try {
        const auto v = ctx.cache->eval(s);
        csv.row({id, fmt(s.r0), fmt(s.theta0), fmt(v[0]), fmt(v[1]), "ok"});
      } catch (const Error&) {
        csv.row({id, fmt(s.r0), fmt(s.theta0), "", "", "fail"});
      }
    }
  }

  std::vector<SummaryRow> rows;
  const char* names[] = {"tau_mean", "thd"};
  for (int q = 0; q < Simulator::kQoi; ++q) {
    SummaryRow r{names[q], "saltelli", 0.0, std::sqrt(sob.total_variance[q])};
    r.s_r0 = fmt(clip_index(sob.first_r0[q]));
    r.s_t0 = fmt(clip_index(sob.first_theta0[q]));
    r.t_r0 = fmt(clip_index(sob.total_r0[q]));
    r.t_t0 = fmt(clip_index(sob.total_theta0[q]));
    rows.push_back(r);
  }
  write_summary_csv(ctx, rows);
  write_manifest(ctx, {{"n_base", std::to_string(sob.n_base)},
                       {"n_used", std::to_string(sob.n_used)},
                       {"n_failed", std::to_string(sob.n_failed)},
                       {"raw_s_r0_tau", fmt(sob.first_r0[0])},
                       {"raw_s_theta0_tau", fmt(sob.first_theta0[0])}});
}

void run_compare(RunContext& ctx) {
  std::vector<SummaryRow> rows;
  const McResult mc = run_mc_part(ctx, &rows);
  const GpcResult gpc = run_gpc_part(ctx, &rows);
  const MethodComparison cmp = compare_methods(mc, gpc);

  CsvWriter csv(ctx.out / "compare.csv",
                "quantity,mu_mc,mu_gpc,eps_mc,abs_diff,within_3eps", ctx.hash);
  const char* names[] = {"tau_mean", "thd"};
  for (int q = 0; q < Simulator::kQoi; ++q)
    csv.row({names[q], fmt(cmp.mu_mc[q]), fmt(cmp.mu_gpc[q]),
             fmt(cmp.eps_mc[q]), fmt(cmp.abs_diff[q]),
             cmp.within[q] ? "1" : "0"});
  write_summary_csv(ctx, rows);
  write_manifest(ctx, {{"n_mc", std::to_string(mc.n_requested)},
                       {"nodes_per_dim", std::to_string(ctx.cfg.nodes_per_dim)},
                       {"n_failed", std::to_string(mc.n_failed)}});
}

}  // namespace

void run(const RunConfig& cfg) {
  static const char* kModes[] = {"nominal", "sweep",       "uq-mc",
                                 "uq-gpc",  "sensitivity", "compare"};
  bool known = false;
  for (const char* m : kModes) known = known || cfg.mode == m;
  if (!known)
    fail(ErrorCode::InvalidArgument,
         "unknown mode '" + cfg.mode +
             "' (expected nominal|sweep|uq-mc|uq-gpc|sensitivity|compare)");
  if (cfg.out_dir.empty())
    fail(ErrorCode::InvalidArgument, "output directory not set");
  if (cfg.jobs < 1) fail(ErrorCode::InvalidArgument, "--jobs must be at least 1");

  RunContext ctx;
  ctx.cfg = cfg;
  std::string raw;
  ctx.spec = load_machine_config(cfg.config_path, &raw);
  ctx.hash = config_hash(raw);
  ctx.out = fs::path(cfg.out_dir);
  fs::create_directories(ctx.out);

  ctx.sim = std::make_unique<Simulator>(ctx.spec, cfg.refinement,
                                        cfg.harmonic_cutoff);
  char hashbuf[32];
  std::snprintf(hashbuf, sizeof hashbuf, "%016llx",
                static_cast<unsigned long long>(ctx.hash));
  const std::string cache_name = std::string("cache_") + hashbuf + "_r" +
                                 std::to_string(cfg.refinement) + ".txt";
  ctx.cache = std::make_unique<SampleCache>(
      *ctx.sim, (ctx.out / cache_name).string(), cfg.resume);
  ctx.log.open(ctx.out / "run_log.jsonl", std::ios::app | std::ios::binary);
  if (!ctx.log) fail(ErrorCode::Io, "cannot open run log");
  ctx.log_line("{\"event\":\"start\",\"mode\":\"" + cfg.mode +
               "\",\"seed\":" + std::to_string(cfg.seed) +
               ",\"config_hash\":\"" + std::string(hashbuf) + "\"}");

  if (cfg.mode == "nominal")
    run_nominal(ctx);
  else if (cfg.mode == "sweep")
    run_sweep(ctx);
  else if (cfg.mode == "uq-mc")
    run_uq_mc(ctx);
  else if (cfg.mode == "uq-gpc")
    run_uq_gpc(ctx);
  else if (cfg.mode == "sensitivity")
    run_sensitivity(ctx);
  else if (cfg.mode == "compare")
    run_compare(ctx);
  ctx.log_line("{\"event\":\"complete\"}");
}

}  // namespace pmsm
