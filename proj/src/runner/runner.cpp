#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "trajzoom/discrete.hpp"
#include "trajzoom/limit.hpp"
#include "trajzoom/parallel.hpp"
#include "trajzoom/runner.hpp"
#include "trajzoom/sde.hpp"
#include "trajzoom/stats.hpp"
#include "trajzoom/studies.hpp"

#ifndef TRAJZOOM_VERSION
#define TRAJZOOM_VERSION "unknown"
#endif

namespace trajzoom {
namespace {

namespace fs = std::filesystem;

constexpr double kIdentityTolerance = 1e-12;
constexpr double kMollifierEps = 0.02;

/// A deterministic internal check failed; maps to kExitConsistency.
struct ConsistencyFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConsistencyFailure(what);
}

struct Column {
  std::string name;
  std::span<const double> values;
};

void write_csv(const fs::path& file, const std::vector<Column>& columns) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, file.string(), "cannot open for writing");
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c].name;
  out << '\n';
  const std::size_t rows = columns.empty() ? 0 : columns.front().values.size();
  char buf[32];
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", columns[c].values[r]);
      if (c) out.put(',');
      out << buf;
    }
    out.put('\n');
  }
  out.close();
  if (!out) throw Error(ErrorCode::kIo, file.string(), "write failed");
}

/// Re-reads a file written by write_csv and demands bit equality.
CsvTable reread(const fs::path& file, const std::vector<Column>& columns) {
  CsvTable table = read_csv(file);
  const std::string name = file.filename().string();
  require(table.header.size() == columns.size(), name + ": header width changed on re-read");
  for (std::size_t c = 0; c < columns.size(); ++c) {
    require(table.header[c] == columns[c].name, name + ": header changed on re-read");
    require(table.rows.size() == columns[c].values.size(), name + ": row count changed on re-read");
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const double a = table.rows[r][c];
      const double b = columns[c].values[r];
      require(a == b || (std::isnan(a) && std::isnan(b)), name + ": value changed on re-read");
    }
  }
  return table;
}

std::vector<double> column_of(const CsvTable& table, std::string_view name) {
  const auto idx = table.column(name);
  if (!idx) throw Error(ErrorCode::kMissingColumn, std::string(name), "column missing");
  std::vector<double> v;
  v.reserve(table.rows.size());
  for (const auto& row : table.rows) v.push_back(row[*idx]);
  return v;
}

std::string traj_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "traj_%05zu.csv", index);
  return buf;
}

std::size_t steps_for(double horizon, double step) {
  return static_cast<std::size_t>(std::ceil(horizon / step * (1.0 - 1e-12)));
}

struct Context {
  const RunConfig& config;
  const RunOptions& options;
  fs::path dir;
  bool dump = false;
  std::vector<fs::path> files;
  std::vector<std::pair<std::string, std::string>> summary;
  std::uint64_t clamped_steps = 0;
  std::uint64_t degenerate_events = 0;

  void note(std::string key, double value) { summary.emplace_back(std::move(key), format_double(value)); }
  void note(std::string key, std::uint64_t value) { summary.emplace_back(std::move(key), std::to_string(value)); }
};

void write_aggregate(Context& ctx, const std::vector<Column>& columns) {
  const fs::path file = ctx.dir / "aggregate.csv";
  write_csv(file, columns);
  reread(file, columns);
  ctx.files.push_back(file);
}

/// Shared tail for the real-time engines: dump, re-read, re-validate.
void emit_real_time_path(Context& ctx, std::size_t index, const Trajectory& traj, double ds) {
  const auto checked = [&](const Trajectory& path, const std::string& label) {
    try {
      check_invariants(path, ds);
    } catch (const Error& e) {
      throw ConsistencyFailure(label + ": " + e.what());
    }
  };
  checked(traj, "trajectory " + std::to_string(index));
  if (!ctx.dump) return;
  const fs::path file = ctx.dir / traj_name(index);
  const std::vector<Column> cols{{"s", traj.s}, {"Q", traj.q}, {"t", traj.t}};
  write_csv(file, cols);
  const CsvTable table = reread(file, cols);
  checked(Trajectory{column_of(table, "s"), column_of(table, "Q"), column_of(table, "t")}, file.filename().string());
}

void run_discrete_mode(Context& ctx) {
  const RunConfig& c = ctx.config;
  const std::size_t n = c.n_traj;
  const std::size_t steps = steps_for(c.horizon, c.params.ds);
  std::vector<double> final_q(n), final_t(n), plus(n), degenerate(n);
  parallel_for(n, ctx.options.threads, [&](std::size_t i) {
    DiscreteOptions opt;
    opt.normalization = c.effective_time_normalization;
    opt.q0 = c.q0;
    const DiscreteRun r = run_discrete(c.params, {c.master_seed, i}, steps, opt);
    const auto& traj = r.trajectory;
    // The effective-time column must be reproducible from Q alone.
    const auto t = discrete_effective_time(traj.q, c.effective_time_normalization);
    require(t == traj.t, "discrete trajectory " + std::to_string(i) + ": effective time disagrees with its Q");
    emit_real_time_path(ctx, i, traj, c.params.ds);
    final_q[i] = traj.q.back();
    final_t[i] = traj.t.back();
    std::size_t count = 0;
    for (const auto& s : r.steps) count += s.outcome == Outcome::kPlus;
    plus[i] = static_cast<double>(count);
    degenerate[i] = traj.t.back() == 0.0 ? 1.0 : 0.0;
  });
  std::vector<double> index(n);
  for (std::size_t i = 0; i < n; ++i) {
    index[i] = static_cast<double>(i);
    ctx.degenerate_events += static_cast<std::uint64_t>(degenerate[i]);
  }
  write_aggregate(ctx, {{"trajectory", index}, {"final_Q", final_q}, {"final_t", final_t}, {"plus_outcomes", plus}});
  ctx.note("steps_per_trajectory", static_cast<std::uint64_t>(steps));
}

void run_sde_mode(Context& ctx) {
  const RunConfig& c = ctx.config;
  const std::size_t n = c.n_traj;
  std::vector<double> final_q(n), final_t(n), qv(n), clamped(n), degenerate(n);
  parallel_for(n, ctx.options.threads, [&](std::size_t i) {
    SdeOptions opt;
    opt.q0 = c.q0;
    opt.keep_increments = false;
    const SdePath path = run_sde(c.params, {c.master_seed, i}, c.horizon, opt);
    emit_real_time_path(ctx, i, path.trajectory, c.params.ds);
    final_q[i] = path.trajectory.q.back();
    final_t[i] = path.trajectory.t.back();
    qv[i] = quadratic_variation_time(path.trajectory);
    clamped[i] = static_cast<double>(path.clamped_steps);
    degenerate[i] = path.trajectory.t.back() == 0.0 ? 1.0 : 0.0;
  });
  std::vector<double> index(n);
  for (std::size_t i = 0; i < n; ++i) {
    index[i] = static_cast<double>(i);
    ctx.clamped_steps += static_cast<std::uint64_t>(clamped[i]);
    ctx.degenerate_events += static_cast<std::uint64_t>(degenerate[i]);
  }
  write_aggregate(ctx, {{"trajectory", index},
                        {"final_Q", final_q},
                        {"final_t", final_t},
                        {"quadratic_variation_t", qv},
                        {"clamped_steps", clamped}});
  ctx.note("steps_per_trajectory", static_cast<std::uint64_t>(steps_for(c.horizon, c.params.ds)));
}

double identity_residual(std::span<const double> q, std::span<const double> b, std::span<const double> l,
                         std::span<const double> u) {
  double worst = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) worst = std::max(worst, std::abs(q[k] - (q[0] + b[k] + l[k] - u[k])));
  return worst;
}

void run_limit_mode(Context& ctx) {
  const RunConfig& c = ctx.config;
  const std::size_t n = c.n_traj;
  LimitOptions opt;
  opt.scheme = c.reflection;
  opt.boundaries = c.boundaries;
  opt.q0 = c.q0;
  std::vector<double> final_q(n), final_l(n), final_u(n), final_s(n), residual(n), mollified(n);
  parallel_for(n, ctx.options.threads, [&](std::size_t i) {
    const LimitTrajectory path = run_limit(c.params, {c.master_seed, i}, c.horizon, opt);
    const std::string label = "limit trajectory " + std::to_string(i);
    residual[i] = identity_residual(path.q, path.b, path.big_l, path.big_u);
    require(residual[i] <= kIdentityTolerance, label + ": Skorokhod identity residual " + format_double(residual[i]));
    for (std::size_t k = 0; k < path.size(); ++k) {
      require(path.q[k] >= 0.0 && path.q[k] <= 1.0, label + ": Q left [0,1]");
      require(k == 0 || (path.big_l[k] >= path.big_l[k - 1] && path.big_u[k] >= path.big_u[k - 1]),
              label + ": local time decreased");
    }
    if (ctx.dump) {
      const fs::path file = ctx.dir / traj_name(i);
      const std::vector<Column> cols{{"t", path.t},         {"Q", path.q},      {"L", path.big_l},
                                     {"U", path.big_u},     {"s", path.s_of_t}, {"B", path.b}};
      write_csv(file, cols);
      const CsvTable table = reread(file, cols);
      const double back = identity_residual(column_of(table, "Q"), column_of(table, "B"), column_of(table, "L"),
                                            column_of(table, "U"));
      require(back <= kIdentityTolerance, file.filename().string() + ": identity fails after re-read");
    }
    final_q[i] = path.q.back();
    final_l[i] = path.big_l.back();
    final_u[i] = path.big_u.back();
    final_s[i] = path.s_of_t.back();
    mollified[i] = local_time_mollifier(path.q, path.dt, 0, kMollifierEps).back();
  });
  std::vector<double> index(n);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    index[i] = static_cast<double>(i);
    worst = std::max(worst, residual[i]);
  }
  write_aggregate(ctx, {{"trajectory", index},
                        {"final_Q", final_q},
                        {"final_L", final_l},
                        {"final_U", final_u},
                        {"final_s", final_s},
                        {"identity_residual", residual},
                        {"final_L_mollifier", mollified}});
  ctx.note("max_identity_residual", worst);
  ctx.note("mollifier_eps", kMollifierEps);
}

void run_excursions_mode(Context& ctx) {
  const RunConfig& c = ctx.config;
  ExcursionStudyConfig sc;
  sc.dt = c.params.dt;
  sc.window = c.horizon;
  sc.n_traj = c.n_traj;
  sc.master_seed = c.master_seed;
  sc.floor = c.floor;
  sc.apex_min = c.apex_min;
  sc.apex_max = c.apex_max;
  sc.scheme = c.reflection;
  sc.threads = ctx.options.threads;
  const ExcursionStudyResult r = run_excursion_study(sc);
  require(r.max_identity_residual <= kIdentityTolerance,
          "excursion paths: Skorokhod identity residual " + format_double(r.max_identity_residual));
  std::vector<double> sigma, asc, asc_se, desc, desc_se, exact;
  if (!r.ascent.empty()) {
    for (double s : c.sigmas) {
      const Estimate a = empirical_laplace(r.ascent, s);
      const Estimate d = empirical_laplace(r.descent, s);
      sigma.push_back(s);
      asc.push_back(a.value);
      asc_se.push_back(a.std_error);
      desc.push_back(d.value);
      desc_se.push_back(d.std_error);
      exact.push_back(excursion_laplace_exact(sc.m_ref, s));
    }
  }
  write_aggregate(ctx, {{"sigma", sigma},
                        {"ascent_transform", asc},
                        {"ascent_stderr", asc_se},
                        {"descent_transform", desc},
                        {"descent_stderr", desc_se},
                        {"exact", exact}});
  ctx.note("excursions", static_cast<std::uint64_t>(r.excursions));
  ctx.note("binned_excursions", static_cast<std::uint64_t>(r.ascent.size()));
  ctx.note("spikes", static_cast<std::uint64_t>(r.spikes));
  ctx.note("jumps", static_cast<std::uint64_t>(r.jumps));
  ctx.note("time_scale_reference_height", sc.m_ref);
  if (r.ascent.size() >= 2) {
    const Estimate mean = mean_estimate(r.ascent);
    ctx.note("mean_ascent", mean.value);
    ctx.note("mean_ascent_stderr", mean.std_error);
    ctx.note("mean_ascent_exact", excursion_mean_ascent(sc.m_ref));
    const Estimate rho = correlation(r.ascent, r.descent);
    ctx.note("ascent_descent_correlation", rho.value);
    ctx.note("ascent_descent_correlation_stderr", rho.std_error);
  }
}

void run_levy_mode(Context& ctx) {
  const RunConfig& c = ctx.config;
  if (c.s_points.size() != 2) {
    throw Error(ErrorCode::kInvalidArgument, "s_points", "stats-levy needs exactly two physical times");
  }
  LevyStudyConfig lc;
  lc.lambda = c.params.lambda;
  lc.p = c.params.p;
  lc.dt = c.params.dt;
  lc.s1 = c.s_points[0];
  lc.s2 = c.s_points[1];
  lc.cap = c.horizon;
  lc.n_samples = c.n_traj;
  lc.master_seed = c.master_seed;
  lc.threads = ctx.options.threads;
  const LevyStudyResult r = run_levy_study(lc);
  require(r.max_identity_residual <= kIdentityTolerance,
          "levy paths: Skorokhod identity residual " + format_double(r.max_identity_residual));
  std::vector<double> sigma, e1, se1, x1, e2, se2, x2;
  for (double s : c.sigmas) {
    const Estimate a = empirical_laplace(r.t1, s);
    const Estimate b = empirical_laplace(r.t2, s);
    sigma.push_back(s);
    e1.push_back(a.value);
    se1.push_back(a.std_error);
    x1.push_back(levy_laplace(lc.s1, s, lc.lambda, lc.p));
    e2.push_back(b.value);
    se2.push_back(b.std_error);
    x2.push_back(levy_laplace(lc.s2, s, lc.lambda, lc.p));
  }
  write_aggregate(ctx, {{"sigma", sigma},
                        {"transform_s1", e1},
                        {"stderr_s1", se1},
                        {"exact_s1", x1},
                        {"transform_s2", e2},
                        {"stderr_s2", se2},
                        {"exact_s2", x2}});
  const KsResult ks = ks_statistic(r.t2, [&](double t) { return levy_cdf(lc.s2, t, lc.lambda, lc.p); });
  ctx.note("ks_distance_s2", ks.d);
  ctx.note("ks_p_value_s2", ks.p_value);
  ctx.note("tail_completed", static_cast<std::uint64_t>(r.tail_completed));
  if (r.t1.size() >= 10000) {
    std::vector<double> inc(r.t1.size());
    for (std::size_t i = 0; i < inc.size(); ++i) inc[i] = r.t2[i] - r.t1[i];
    const double sg = c.sigmas.empty() ? 1.0 : c.sigmas.front();
    const FactorizationCheck f = laplace_factorization_check(r.t1, inc, lc.s1, lc.s2, sg, sg, lc.lambda, lc.p);
    ctx.note("factorization_z_joint", f.z_joint);
    ctx.note("factorization_z_covariance", f.z_covariance);
  }
}

void run_spikes_mode(Context& ctx) {
  const RunConfig& c = ctx.config;
  const std::size_t n = c.n_traj;
  std::vector<SpikeStudyResult> results(n);
  parallel_for(n, ctx.options.threads, [&](std::size_t i) {
    SpikeStudyConfig sc;
    sc.params = c.params;
    sc.window = c.horizon;
    sc.level = c.spike_height;
    sc.sample_spacing = c.sample_spacing;
    sc.master_seed = c.master_seed;
    sc.trajectory_index = i;
    results[i] = run_spike_study(sc);
  });
  const double gamma = c.params.gamma.value();
  const double lambda = c.params.lambda;
  const double p = c.params.p;
  std::vector<double> index(n), in_window(n), printed(n), theory(n), total(n), jumps(n), plateau(n), ks_printed(n),
      ks_corrected(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = results[i];
    index[i] = static_cast<double>(i);
    in_window[i] = static_cast<double>(r.spikes_in_window);
    printed[i] = spike_count_mean(c.spike_height, lambda, p, c.horizon);
    theory[i] = spike_count_excursion_theory(c.spike_height, lambda, p, c.horizon);
    total[i] = static_cast<double>(r.spikes_total);
    jumps[i] = static_cast<double>(r.jumps_total);
    plateau[i] = r.plateau_time_total;
    const bool enough = !r.law_samples.empty();
    ks_printed[i] = enough ? ks_statistic(r.law_samples, [&](double q) {
                               return boundary_law_cdf(q, gamma, lambda, p);
                             }).d
                           : std::nan("");
    ks_corrected[i] = enough ? ks_statistic(r.law_samples, [&](double q) {
                                 return boundary_layer_cdf(q, gamma, lambda, p);
                               }).d
                             : std::nan("");
    ctx.clamped_steps += r.clamped_steps;
  }
  write_aggregate(ctx, {{"trajectory", index},
                        {"spikes_in_window", in_window},
                        {"mean_printed_law", printed},
                        {"mean_excursion_theory", theory},
                        {"spikes_total", total},
                        {"jumps_total", jumps},
                        {"bottom_plateau_time", plateau},
                        {"ks_printed_law", ks_printed},
                        {"ks_corrected_law", ks_corrected}});
}

void run_entropy_mode(Context& ctx) {
  const RunConfig& c = ctx.config;
  EntropyStudyConfig ec;
  ec.dt = c.params.dt;
  ec.horizon = c.horizon;
  ec.n_traj = c.n_traj;
  ec.master_seed = c.master_seed;
  ec.scheme = c.reflection;
  ec.threads = ctx.options.threads;
  const EntropyStudyResult r = run_entropy_study(ec);
  require(r.max_identity_residual <= kIdentityTolerance,
          "entropy paths: Skorokhod identity residual " + format_double(r.max_identity_residual));
  const double reference = -2.0 * r.dt;
  const double n_bulk = static_cast<double>(r.bulk_ds.n);
  const double n_all = static_cast<double>(r.residual.n);
  const std::vector<double> v1{r.bulk_ds.value}, v2{r.bulk_ds.std_error}, v3{reference}, v4{n_bulk},
      v5{r.bulk_residual.value}, v6{r.bulk_residual.std_error}, v7{r.residual.value}, v8{r.residual.std_error},
      v9{n_all};
  write_aggregate(ctx, {{"bulk_dS_mean", v1},
                        {"bulk_dS_stderr", v2},
                        {"bulk_dS_reference", v3},
                        {"bulk_steps", v4},
                        {"bulk_residual_mean", v5},
                        {"bulk_residual_stderr", v6},
                        {"residual_mean", v7},
                        {"residual_stderr", v8},
                        {"steps", v9}});
}

void write_manifest(const Context& ctx, double seconds) {
  const fs::path file = ctx.dir / "manifest.txt";
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, file.string(), "cannot open for writing");
  out << "version=" << TRAJZOOM_VERSION << '\n';
  for (const auto& [k, v] : config_entries(ctx.config)) out << "config." << k << '=' << v << '\n';
  out << "seed_source=" << ctx.options.seed_source << '\n';
  out << "seed_rule=mt19937_64 per (trajectory, substream), seeded through std::seed_seq from "
         "{lo32(master_seed), hi32(master_seed), lo32(index), hi32(index), substream, 0x7a6f6f6d}\n";
  out << "trajectory_indices=0.." << (ctx.config.n_traj - 1) << '\n';
  out << "threads=" << ctx.options.threads << '\n';
  out << "isa=" << kernels::to_string(kernels::active_kernels().isa) << '\n';
  out << "paths_written=" << (ctx.dump ? "true" : "false") << '\n';
  out << "clamped_steps=" << ctx.clamped_steps << '\n';
  out << "degenerate_events=" << ctx.degenerate_events << '\n';
  for (const auto& [k, v] : ctx.summary) out << "result." << k << '=' << v << '\n';
  out << "wall_clock_seconds=" << format_double(seconds) << '\n';
  out.close();
  if (!out) throw Error(ErrorCode::kIo, file.string(), "write failed");
}

}  // namespace

RunResult run(const RunConfig& config, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  Context ctx{config, options, fs::path(config.output_dir), false, {}, {}};
  // Only the engine modes have paths to write; the stats modes keep theirs in memory.
  ctx.dump = (options.dump_paths || config.n_traj <= kPathDumpLimit) && config.mode <= Mode::kLimit;
  RunResult result;
  try {
    std::error_code ec;
    fs::create_directories(ctx.dir, ec);
    if (ec) throw Error(ErrorCode::kIo, config.output_dir, "cannot create output directory: " + ec.message());
    switch (config.mode) {
      case Mode::kDiscrete: run_discrete_mode(ctx); break;
      case Mode::kSde: run_sde_mode(ctx); break;
      case Mode::kLimit: run_limit_mode(ctx); break;
      case Mode::kStatsExcursions: run_excursions_mode(ctx); break;
      case Mode::kStatsLevy: run_levy_mode(ctx); break;
      case Mode::kStatsSpikes: run_spikes_mode(ctx); break;
      case Mode::kStatsEntropy: run_entropy_mode(ctx); break;
    }
    if (ctx.dump) {
      for (std::size_t i = 0; i < config.n_traj; ++i) ctx.files.push_back(ctx.dir / traj_name(i));
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(ctx, seconds);
    ctx.files.push_back(ctx.dir / "manifest.txt");
    result.message = "ok";
  } catch (const ConsistencyFailure& e) {
    result.exit_code = kExitConsistency;
    result.message = std::string("internal check failed: ") + e.what();
  } catch (const Error& e) {
    result.exit_code = kExitEngine;
    result.message = e.what();
  }
  result.files = std::move(ctx.files);
  return result;
}

}  // namespace trajzoom
