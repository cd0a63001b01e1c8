#include "trajzoom/studies.hpp"

#include <algorithm>
#include <cmath>

#include "trajzoom/limit.hpp"
#include "trajzoom/parallel.hpp"
#include "trajzoom/sde.hpp"

namespace trajzoom {
namespace {

constexpr std::size_t kLanes = 4;

std::size_t ceil_steps(double horizon, double dt) {
  return static_cast<std::size_t>(std::ceil(horizon / dt * (1.0 - 1e-12)));
}

void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::kOutOfRange, field, "must be finite and > 0");
}

void require_count(std::size_t n, const char* field) {
  if (n == 0) throw Error(ErrorCode::kOutOfRange, field, "must be >= 1");
}

double entropy(double q) { return 2.0 * (q * (1.0 - q)); }

/// Running sums for a mean and its standard error.
struct Moments {
  double n = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    n += 1.0;
    sum += x;
    sum_sq += x * x;
  }
  void merge(const Moments& o) {
    n += o.n;
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
  Estimate estimate() const {
    if (n == 0.0) return {};
    const double mean = sum / n;
    const double var = n > 1.0 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
    return {mean, std::sqrt(var / n), static_cast<std::size_t>(n)};
  }
};

}  // namespace

ExcursionStudyResult run_excursion_study(const ExcursionStudyConfig& config) {
  require_positive(config.dt, "dt");
  require_positive(config.window, "window");
  require_count(config.n_traj, "n_traj");
  if (!(config.margin >= 0.0)) throw Error(ErrorCode::kOutOfRange, "margin", "must be >= 0");
  if (!(config.apex_min > 0.0 && config.apex_max > config.apex_min && config.apex_max <= 1.0)) {
    throw Error(ErrorCode::kOutOfRange, "apex_min", "need 0 < apex_min < apex_max <= 1");
  }
  const std::size_t steps = ceil_steps(config.window + config.margin, config.dt);
  const std::size_t groups = (config.n_traj + kLanes - 1) / kLanes;
  LimitOptions options;
  options.scheme = config.scheme;

  struct Part {
    ExcursionStudyResult r;
  };
  std::vector<Part> parts(groups);

  parallel_for(groups, config.threads, [&](std::size_t g) {
    const std::size_t first = g * kLanes;
    const std::size_t count = std::min(kLanes, config.n_traj - first);
    std::vector<std::uint64_t> indices(count);
    for (std::size_t i = 0; i < count; ++i) indices[i] = first + i;
    const std::vector<double> starts(count, 0.0);
    LimitLanes lanes(config.dt, options, config.master_seed, indices, starts);
    ExcursionStudyResult& r = parts[g].r;

    // Paths are consumed block by block; only the excursions are kept.
    std::vector<RandomStream> refine;
    std::vector<ExcursionTracker> trackers;
    std::vector<ExcursionStudyResult> per_lane(count);
    refine.reserve(count);
    trackers.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      refine.emplace_back(SeedSpec{config.master_seed, indices[i]}, Substream::kApexRefinement);
      ExcursionOptions eo;
      eo.floor = config.floor;
      eo.refine_rng = config.refine_apex ? &refine[i] : nullptr;
      eo.refine_above = config.apex_min;
      trackers.emplace_back(config.dt, config.scheme, eo);
      trackers[i].push(0.0, 0.0, 0.0);
    }
    constexpr std::size_t kBlock = 2048;
    std::vector<double> xs(kBlock * count), bs(kBlock * count), ls(kBlock * count), us(kBlock * count);
    for (std::size_t done = 0; done < steps;) {
      const std::size_t block = std::min(kBlock, steps - done);
      lanes.advance(block, {xs.data(), bs.data(), ls.data(), us.data()});
      done += block;
      for (std::size_t i = 0; i < count; ++i) {
        ExcursionTracker& tracker = trackers[i];
        for (std::size_t k = 0; k < block; ++k) {
          const std::size_t at = k * count + i;
          const double identity = ((0.0 + bs[at]) + ls[at]) - us[at];
          r.max_identity_residual = std::max(r.max_identity_residual, std::abs(xs[at] - identity));
          tracker.push(xs[at], ls[at], us[at]);
        }
        ExcursionStudyResult& lane = per_lane[i];
        for (const Excursion& e : tracker.closed()) {
          if (!(e.t_start < config.window)) continue;
          ++r.excursions;
          if (e.kind == ExcursionKind::kSpike) {
            ++r.spikes;
          } else {
            ++r.jumps;
          }
          if (e.height >= config.apex_min && e.height <= config.apex_max) {
            const double scale = (config.m_ref / e.height) * (config.m_ref / e.height);
            lane.binned.push_back(e);
            lane.ascent_raw.push_back(e.ascent_time());
            lane.descent_raw.push_back(e.descent_time());
            lane.ascent.push_back(e.ascent_time() * scale);
            lane.descent.push_back(e.descent_time() * scale);
          }
        }
        tracker.closed().clear();
      }
    }
    for (const ExcursionStudyResult& lane : per_lane) {
      r.binned.insert(r.binned.end(), lane.binned.begin(), lane.binned.end());
      r.ascent.insert(r.ascent.end(), lane.ascent.begin(), lane.ascent.end());
      r.descent.insert(r.descent.end(), lane.descent.begin(), lane.descent.end());
      r.ascent_raw.insert(r.ascent_raw.end(), lane.ascent_raw.begin(), lane.ascent_raw.end());
      r.descent_raw.insert(r.descent_raw.end(), lane.descent_raw.begin(), lane.descent_raw.end());
    }
  });

  ExcursionStudyResult out;
  out.effective_time = config.window * static_cast<double>(config.n_traj);
  for (const Part& part : parts) {
    const ExcursionStudyResult& r = part.r;
    out.binned.insert(out.binned.end(), r.binned.begin(), r.binned.end());
    out.ascent.insert(out.ascent.end(), r.ascent.begin(), r.ascent.end());
    out.descent.insert(out.descent.end(), r.descent.begin(), r.descent.end());
    out.ascent_raw.insert(out.ascent_raw.end(), r.ascent_raw.begin(), r.ascent_raw.end());
    out.descent_raw.insert(out.descent_raw.end(), r.descent_raw.begin(), r.descent_raw.end());
    out.excursions += r.excursions;
    out.spikes += r.spikes;
    out.jumps += r.jumps;
    out.max_identity_residual = std::max(out.max_identity_residual, r.max_identity_residual);
  }
  return out;
}

LevyStudyResult run_levy_study(const LevyStudyConfig& config) {
  require_positive(config.dt, "dt");
  require_positive(config.cap, "cap");
  require_count(config.n_samples, "n_samples");
  if (!(config.s1 > 0.0 && config.s2 > config.s1)) throw Error(ErrorCode::kOutOfRange, "s", "need 0 < s1 < s2");
  ModelParams check;
  check.lambda = config.lambda;
  check.p = config.p;
  validate(check);

  constexpr std::size_t kChunk = 2000;
  constexpr std::size_t kBlock = 64;
  const std::size_t n = config.n_samples;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  const double a1 = config.lambda * config.p * config.s1;
  const double a2 = config.lambda * config.p * config.s2;

  LevyStudyResult out;
  out.t1.assign(n, 0.0);
  out.t2.assign(n, 0.0);
  std::vector<std::size_t> tails(chunks, 0);
  std::vector<double> residuals(chunks, 0.0);

  LimitOptions options;
  options.scheme = kernels::ReflectionScheme::kBridge;
  options.boundaries = kernels::Boundaries::kLowerOnly;

  parallel_for(chunks, config.threads, [&](std::size_t c) {
    const std::size_t first = c * kChunk;
    const std::size_t last = std::min(n, first + kChunk);
    const std::size_t width = std::min(kLanes, last - first);
    std::vector<std::uint64_t> indices(width);
    for (std::size_t i = 0; i < width; ++i) indices[i] = first + i;
    LimitLanes lanes(config.dt, options, config.master_seed, indices, std::vector<double>(width, 0.0));

    struct LaneState {
      std::uint64_t index;
      std::size_t steps = 0;
      bool found1 = false;
      bool active = true;
    };
    std::vector<LaneState> st(width);
    for (std::size_t i = 0; i < width; ++i) st[i].index = indices[i];
    std::size_t next = first + width;
    std::size_t active = width;
    std::vector<double> ls(kBlock * width);

    while (active > 0) {
      lanes.advance(kBlock, {nullptr, nullptr, ls.data(), nullptr});
      for (std::size_t i = 0; i < width; ++i) {
        const double identity = (0.0 + lanes.b()[i]) + lanes.l()[i];
        residuals[c] = std::max(residuals[c], std::abs(lanes.x()[i] - identity));
      }
      for (std::size_t i = 0; i < width; ++i) {
        LaneState& s = st[i];
        if (!s.active) continue;
        bool done = false;
        for (std::size_t k = 0; k < kBlock && !done; ++k) {
          const double clock = physical_time(ls[k * width + i], 0.0, config.lambda, config.p);
          const double t = static_cast<double>(s.steps + k + 1) * config.dt;
          if (!s.found1 && clock > config.s1) {
            out.t1[s.index] = t;
            s.found1 = true;
          }
          if (s.found1 && clock > config.s2) {
            out.t2[s.index] = t;
            done = true;
          }
        }
        s.steps += kBlock;
        if (!done && static_cast<double>(s.steps) * config.dt >= config.cap) {
          RandomStream tail(SeedSpec{config.master_seed, s.index}, Substream::kTailCompletion);
          const double now = static_cast<double>(s.steps) * config.dt;
          const double x = lanes.x()[i];
          const double ell = lanes.l()[i];
          if (!s.found1) {
            out.t1[s.index] = now + sample_remaining_passage(x, ell, a1, tail);
            out.t2[s.index] = out.t1[s.index] + sample_remaining_passage(0.0, 0.0, a2 - a1, tail);
          } else {
            out.t2[s.index] = now + sample_remaining_passage(x, ell, a2, tail);
          }
          ++tails[c];
          done = true;
        }
        if (done) {
          if (next < last) {
            lanes.reset_lane(i, next, 0.0);
            s = LaneState{next};
            ++next;
          } else {
            s.active = false;
            --active;
          }
        }
      }
    }
  });

  for (std::size_t c = 0; c < chunks; ++c) {
    out.tail_completed += tails[c];
    out.max_identity_residual = std::max(out.max_identity_residual, residuals[c]);
  }
  return out;
}

EntropyStudyResult run_entropy_study(const EntropyStudyConfig& config) {
  require_positive(config.dt, "dt");
  require_positive(config.horizon, "horizon");
  require_count(config.n_traj, "n_traj");
  constexpr std::size_t kBlock = 4096;
  const std::size_t steps = ceil_steps(config.horizon, config.dt);
  const std::size_t groups = (config.n_traj + kLanes - 1) / kLanes;
  LimitOptions options;
  options.scheme = config.scheme;

  struct Part {
    Moments bulk_ds, bulk_res, res;
    double identity = 0.0;
  };
  std::vector<Part> parts(groups);

  parallel_for(groups, config.threads, [&](std::size_t g) {
    const std::size_t first = g * kLanes;
    const std::size_t count = std::min(kLanes, config.n_traj - first);
    std::vector<std::uint64_t> indices(count);
    std::vector<double> starts(count);
    for (std::size_t i = 0; i < count; ++i) {
      indices[i] = first + i;
      starts[i] = RandomStream(SeedSpec{config.master_seed, indices[i]}, Substream::kInitialState).uniform();
    }
    LimitLanes lanes(config.dt, options, config.master_seed, indices, starts);
    std::vector<double> xs(kBlock * count), bs(kBlock * count), ls(kBlock * count), us(kBlock * count);
    std::vector<double> px(starts), pb(count, 0.0), pl(count, 0.0), pu(count, 0.0);
    Part& part = parts[g];
    for (std::size_t done = 0; done < steps;) {
      const std::size_t block = std::min(kBlock, steps - done);
      lanes.advance(block, {xs.data(), bs.data(), ls.data(), us.data()});
      for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t k = 0; k < block; ++k) {
          const std::size_t at = k * count + i;
          const double q = px[i];
          const double d_s = entropy(xs[at]) - entropy(q);
          const double mart = 2.0 * (1.0 - 2.0 * q) * (bs[at] - pb[i]);
          const double push = 2.0 * ((ls[at] - pl[i]) + (us[at] - pu[i]));
          part.res.add(d_s - mart + 2.0 * config.dt - push);
          if (q >= config.bulk_lo && q <= config.bulk_hi) {
            part.bulk_ds.add(d_s);
            part.bulk_res.add(d_s + 2.0 * config.dt - mart);
          }
          const double identity = ((starts[i] + bs[at]) + ls[at]) - us[at];
          part.identity = std::max(part.identity, std::abs(xs[at] - identity));
          px[i] = xs[at];
          pb[i] = bs[at];
          pl[i] = ls[at];
          pu[i] = us[at];
        }
      }
      done += block;
    }
  });

  Moments bulk_ds, bulk_res, res;
  EntropyStudyResult out;
  for (const Part& part : parts) {
    bulk_ds.merge(part.bulk_ds);
    bulk_res.merge(part.bulk_res);
    res.merge(part.res);
    out.max_identity_residual = std::max(out.max_identity_residual, part.identity);
  }
  out.bulk_ds = bulk_ds.estimate();
  out.bulk_residual = bulk_res.estimate();
  out.residual = res.estimate();
  out.dt = config.dt;
  return out;
}

SpikeStudyResult run_spike_study(const SpikeStudyConfig& config) {
  check_step_guard(config.params);
  require_positive(config.window, "window");
  require_positive(config.sample_spacing, "sample_spacing");
  if (!(config.level > config.plateau_band && config.level < 1.0 - config.plateau_band)) {
    throw Error(ErrorCode::kOutOfRange, "level", "must lie strictly between the plateau bands");
  }
  const double ds = config.params.ds;
  const double target = std::max({config.window, config.rate_window, config.law_window});
  // A run that never settles on the bottom plateau is cut off here.
  const double max_real_time = 100.0 * target;
  const auto spacing_steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.sample_spacing / ds)));
  const double lo = config.plateau_band;
  const double hi = 1.0 - config.plateau_band;

  const std::uint64_t index = config.trajectory_index;
  const double q0 = 0.0;
  SdeLanes lane(config.params, config.master_seed, std::span(&index, 1), std::span(&q0, 1));

  constexpr std::size_t kBlock = 4096;
  std::vector<double> qs(kBlock);
  SpikeStudyResult out;
  bool bottom = true;
  bool armed = false;
  std::size_t bottom_steps = 0;
  std::size_t total_steps = 0;
  while (out.plateau_time_total < target && static_cast<double>(total_steps) * ds < max_real_time) {
    lane.advance(kBlock, {qs.data(), nullptr});
    for (std::size_t k = 0; k < kBlock; ++k) {
      const double q = qs[k];
      ++total_steps;
      if (bottom) {
        ++bottom_steps;
        const double plateau_time = static_cast<double>(bottom_steps) * ds;
        if (bottom_steps % spacing_steps == 0 && plateau_time <= config.law_window) out.law_samples.push_back(q);
        if (q >= config.level) armed = true;
        if (q >= hi) {
          bottom = false;
          armed = false;
          ++out.jumps_total;
        } else if (armed && q <= lo) {
          armed = false;
          if (plateau_time <= config.rate_window) ++out.spikes_total;
          if (plateau_time <= config.window) ++out.spikes_in_window;
        }
      } else if (q <= lo) {
        bottom = true;
        ++out.jumps_total;
      }
    }
    out.plateau_time_total = static_cast<double>(bottom_steps) * ds;
  }
  out.plateau_time_total = std::min(out.plateau_time_total, config.rate_window);
  out.real_time = static_cast<double>(total_steps) * ds;
  out.clamped_steps = lane.clamped()[0];
  return out;
}

std::vector<GammaStudyPoint> run_gamma_study(const GammaStudyConfig& config) {
  require_positive(config.kappa, "kappa");
  require_positive(config.lag, "lag");
  require_count(config.n_samples, "n_samples");
  if (!(config.bulk_lo >= 0.0 && config.bulk_hi <= 1.0 && config.bulk_lo < config.bulk_hi)) {
    throw Error(ErrorCode::kOutOfRange, "bulk_lo", "need 0 <= bulk_lo < bulk_hi <= 1");
  }
  constexpr std::size_t kChunk = 4096;
  constexpr std::size_t kBlock = 64;
  const std::size_t n = config.n_samples;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  const double root_lag = std::sqrt(config.lag);

  // Sample i uses the same streams at every gamma, so differences between
  // gammas are not swamped by sampling noise.
  std::vector<double> starts(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = RandomStream(SeedSpec{config.master_seed, i}, Substream::kInitialState).uniform();
    starts[i] = config.bulk_lo + (config.bulk_hi - config.bulk_lo) * u;
  }

  std::vector<GammaStudyPoint> points;
  for (double gamma : config.gammas) {
    ModelParams params;
    params.lambda = config.lambda;
    params.p = config.p;
    params.gamma = MeasurementRate::finite(gamma);
    params.ds = config.kappa / gamma;
    check_step_guard(params);

    std::vector<double> increments(n, 0.0);
    parallel_for(chunks, config.threads, [&](std::size_t c) {
      const std::size_t first = c * kChunk;
      const std::size_t last = std::min(n, first + kChunk);
      const std::size_t width = std::min(kLanes, last - first);
      std::vector<std::uint64_t> indices(width);
      std::vector<double> q0(width);
      for (std::size_t i = 0; i < width; ++i) {
        indices[i] = first + i;
        q0[i] = starts[first + i];
      }
      SdeLanes lanes(params, config.master_seed, indices, q0);
      std::vector<std::uint64_t> owner(indices);
      std::vector<bool> live(width, true);
      std::size_t active = width;
      std::size_t next = first + width;
      std::vector<double> qs(kBlock * width), ts(kBlock * width), before(width);
      while (active > 0) {
        for (std::size_t i = 0; i < width; ++i) before[i] = lanes.q()[i];
        lanes.advance(kBlock, {qs.data(), ts.data()});
        for (std::size_t i = 0; i < width; ++i) {
          if (!live[i]) continue;
          double last_q = before[i];
          bool done = false;
          for (std::size_t k = 0; k < kBlock; ++k) {
            if (ts[k * width + i] > config.lag) {
              done = true;
              break;
            }
            last_q = qs[k * width + i];
          }
          if (!done) continue;
          increments[owner[i]] = (last_q - starts[owner[i]]) / root_lag;
          if (next < last) {
            lanes.reset_lane(i, next, starts[next]);
            owner[i] = next;
            ++next;
          } else {
            live[i] = false;
            --active;
          }
        }
      }
    });

    std::vector<double> oriented(n);
    for (std::size_t i = 0; i < n; ++i) oriented[i] = starts[i] <= config.p ? increments[i] : -increments[i];
    const LawSpec normal = standard_normal_law();
    GammaStudyPoint point;
    point.gamma = gamma;
    point.oriented_mean = mean_estimate(oriented);
    point.oriented = ks_statistic(std::move(oriented), normal.cdf);
    point.unoriented = ks_statistic(std::move(increments), normal.cdf);
    points.push_back(point);
  }
  return points;
}

}  // namespace trajzoom
