#include "trajzoom/limit.hpp"

#include <algorithm>
#include <cmath>

namespace trajzoom {
namespace {

constexpr std::size_t kBlock = 1024;

std::size_t step_count(double horizon, double dt) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw Error(ErrorCode::kOutOfRange, "horizon", "must be finite and > 0");
  }
  return static_cast<std::size_t>(std::ceil(horizon / dt * (1.0 - 1e-12)));
}

void check_start(double x0, kernels::Boundaries boundaries) {
  if (!(x0 >= 0.0)) throw Error(ErrorCode::kStartOutOfStrip, "q0", "must be >= 0");
  if (boundaries == kernels::Boundaries::kBoth && !(x0 <= 1.0)) {
    throw Error(ErrorCode::kStartOutOfStrip, "q0", "must lie in [0,1]");
  }
}

}  // namespace

SkorokhodPair skorokhod_map(std::span<const double> b, double x0) {
  if (!(x0 >= 0.0)) throw Error(ErrorCode::kNegativeStart, "x0", "start must be >= 0");
  if (b.empty()) throw Error(ErrorCode::kEmptyPath, "b", "no samples");
  if (b[0] != 0.0) throw Error(ErrorCode::kInvalidArgument, "b", "driving path must start at 0");
  SkorokhodPair out{std::vector<double>(b.size()), std::vector<double>(b.size())};
  double running_min = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) {
    running_min = std::min(running_min, b[k]);
    out.l[k] = std::max(0.0, -running_min - x0);
    out.x[k] = (x0 + b[k]) + out.l[k];
  }
  return out;
}

StripReflection reflect_strip(std::span<const double> b, double x0) {
  if (!(x0 >= 0.0 && x0 <= 1.0)) throw Error(ErrorCode::kStartOutOfStrip, "x0", "start must lie in [0,1]");
  if (b.empty()) throw Error(ErrorCode::kEmptyPath, "b", "no samples");
  if (b[0] != 0.0) throw Error(ErrorCode::kInvalidArgument, "b", "driving path must start at 0");
  const std::size_t n = b.size();
  StripReflection out{std::vector<double>(n), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  out.x[0] = x0;
  double l = 0.0;
  double u = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double y = ((x0 + b[k]) + l) - u;
    if (y < 0.0) l = l - y;
    if (y > 1.0) u = u + (y - 1.0);
    out.l[k] = l;
    out.u[k] = u;
    out.x[k] = std::min(1.0, std::max(0.0, ((x0 + b[k]) + l) - u));
  }
  return out;
}

double bridge_guard(double h) { return 8.0 * std::sqrt(h); }

kernels::ReflectionParams reflection_params(const LimitOptions& options, double dt) {
  return {options.scheme, options.boundaries, dt, bridge_guard(dt)};
}

LimitLanes::LimitLanes(double dt, const LimitOptions& options, std::uint64_t master_seed,
                       std::span<const std::uint64_t> indices, std::span<const double> q0,
                       const kernels::KernelTable& table)
    : table_(&table),
      rp_(reflection_params(options, dt)),
      master_seed_(master_seed),
      sqrt_dt_(std::sqrt(dt)),
      x0_(q0.begin(), q0.end()),
      x_(q0.begin(), q0.end()),
      b_(q0.size(), 0.0),
      l_(q0.size(), 0.0),
      u_(q0.size(), 0.0) {
  if (indices.size() != q0.size()) {
    throw Error(ErrorCode::kInvalidArgument, "q0", "one start value per lane is required");
  }
  if (!(dt > 0.0)) throw Error(ErrorCode::kOutOfRange, "dt", "must be > 0");
  for (double x : q0) check_start(x, options.boundaries);
  increments_.reserve(indices.size());
  for (std::uint64_t index : indices) {
    increments_.emplace_back(SeedSpec{master_seed, index}, Substream::kIncrements);
    if (rp_.scheme == kernels::ReflectionScheme::kBridge) {
      bridge_.emplace_back(SeedSpec{master_seed, index}, Substream::kBridge);
    }
  }
}

void LimitLanes::advance(std::size_t steps, kernels::ReflectRecord record) {
  const std::size_t n = lanes();
  if (n == 0 || steps == 0) return;
  const bool bridge = rp_.scheme == kernels::ReflectionScheme::kBridge;
  db_.resize(std::min(steps, kBlock) * n);
  if (bridge) {
    uniform_.resize(n * kBlock);
    cursor_.resize(n, 0);
    filled_.resize(n, 0);
  }
  for (std::size_t done = 0; done < steps;) {
    const std::size_t block = std::min(kBlock, steps - done);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < block; ++k) db_[k * n + i] = sqrt_dt_ * increments_[i].normal();
      if (bridge && filled_[i] - cursor_[i] < block) {
        double* queue = uniform_.data() + i * kBlock;
        std::copy(queue + cursor_[i], queue + filled_[i], queue);
        filled_[i] -= cursor_[i];
        cursor_[i] = 0;
        for (; filled_[i] < block; ++filled_[i]) queue[filled_[i]] = bridge_[i].uniform_positive();
      }
    }
    kernels::ReflectRecord rec;
    const std::size_t off = done * n;
    if (record.x != nullptr) rec.x = record.x + off;
    if (record.b != nullptr) rec.b = record.b + off;
    if (record.l != nullptr) rec.l = record.l + off;
    if (record.u != nullptr) rec.u = record.u + off;
    table_->reflect_advance({x0_.data(), x_.data(), b_.data(), l_.data(), u_.data(), n}, db_.data(),
                            {bridge ? uniform_.data() : nullptr, kBlock, bridge ? cursor_.data() : nullptr}, block,
                            rp_, rec);
    done += block;
  }
}

void LimitLanes::reset_lane(std::size_t lane, std::uint64_t index, double q0) {
  check_start(q0, rp_.boundaries);
  increments_.at(lane) = RandomStream(SeedSpec{master_seed_, index}, Substream::kIncrements);
  if (rp_.scheme == kernels::ReflectionScheme::kBridge) {
    bridge_.at(lane) = RandomStream(SeedSpec{master_seed_, index}, Substream::kBridge);
    if (!cursor_.empty()) cursor_[lane] = filled_[lane] = 0;
  }
  x0_[lane] = q0;
  x_[lane] = q0;
  b_[lane] = 0.0;
  l_[lane] = 0.0;
  u_[lane] = 0.0;
}

namespace {

LimitTrajectory split_lane(const std::vector<double>& xs, const std::vector<double>& bs, const std::vector<double>& ls,
                           const std::vector<double>& us, std::size_t lane, std::size_t lanes, std::size_t steps,
                           double x0, double dt, const ModelParams& params, const LimitOptions& options) {
  LimitTrajectory tr;
  tr.dt = dt;
  tr.scheme = options.scheme;
  tr.t.resize(steps + 1);
  tr.q.resize(steps + 1);
  tr.big_l.resize(steps + 1);
  tr.big_u.resize(steps + 1);
  if (options.keep_driving_path) tr.b.resize(steps + 1);
  tr.q[0] = x0;
  tr.big_l[0] = 0.0;
  tr.big_u[0] = 0.0;
  if (options.keep_driving_path) tr.b[0] = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t at = k * lanes + lane;
    tr.q[k + 1] = xs[at];
    tr.big_l[k + 1] = ls[at];
    tr.big_u[k + 1] = us[at];
    if (options.keep_driving_path) tr.b[k + 1] = bs[at];
  }
  for (std::size_t k = 0; k <= steps; ++k) tr.t[k] = static_cast<double>(k) * dt;
  tr.s_of_t = physical_time(tr.big_l, tr.big_u, params.lambda, params.p);
  return tr;
}

}  // namespace

std::vector<LimitTrajectory> run_limit_batch(const ModelParams& params, std::uint64_t master_seed,
                                             std::uint64_t first_index, std::size_t count, double horizon_t,
                                             const LimitOptions& options) {
  validate(params, Regime::kLimit);
  const std::size_t steps = step_count(horizon_t, params.dt);
  const double x0 = options.q0.value_or(params.p);
  check_start(x0, options.boundaries);
  std::vector<std::uint64_t> indices(count);
  for (std::size_t i = 0; i < count; ++i) indices[i] = first_index + i;
  const std::vector<double> starts(count, x0);
  LimitLanes lanes(params.dt, options, master_seed, indices, starts);
  std::vector<double> xs(steps * count), bs(steps * count), ls(steps * count), us(steps * count);
  lanes.advance(steps, {xs.data(), bs.data(), ls.data(), us.data()});
  std::vector<LimitTrajectory> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(split_lane(xs, bs, ls, us, i, count, steps, x0, params.dt, params, options));
  }
  return out;
}

LimitTrajectory run_limit(const ModelParams& params, SeedSpec seed, double horizon_t, const LimitOptions& options) {
  return std::move(run_limit_batch(params, seed.master_seed, seed.trajectory_index, 1, horizon_t, options).front());
}

std::vector<double> local_time_mollifier(std::span<const double> q, double dt, int level, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kEpsNonpositive, "eps", "window width must be > 0");
  if (level != 0 && level != 1) throw Error(ErrorCode::kInvalidArgument, "level", "must be 0 or 1");
  std::vector<double> out(q.size(), 0.0);
  const double weight = dt / (2.0 * eps);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    out[k] = static_cast<double>(hits) * weight;
    const double dist = level == 0 ? q[k] : 1.0 - q[k];
    if (dist >= 0.0 && dist <= eps) ++hits;
  }
  return out;
}

double physical_time(double big_l, double big_u, double lambda, double p) {
  return big_l / (lambda * p) + big_u / (lambda * (1.0 - p));
}

std::vector<double> physical_time(std::span<const double> big_l, std::span<const double> big_u, double lambda,
                                  double p) {
  if (big_l.size() != big_u.size()) {
    throw Error(ErrorCode::kInvalidArgument, "big_u", "local-time paths have different lengths");
  }
  std::vector<double> s(big_l.size());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = physical_time(big_l[k], big_u[k], lambda, p);
  return s;
}

std::optional<double> try_inverse_time_change(std::span<const double> t, std::span<const double> s_of_t,
                                              double s_query) {
  if (t.size() != s_of_t.size()) {
    throw Error(ErrorCode::kInvalidArgument, "s_of_t", "time grid and clock have different lengths");
  }
  const auto it = std::upper_bound(s_of_t.begin(), s_of_t.end(), s_query);
  if (it == s_of_t.end()) return std::nullopt;
  return t[static_cast<std::size_t>(it - s_of_t.begin())];
}

double inverse_time_change(std::span<const double> t, std::span<const double> s_of_t, double s_query) {
  const auto found = try_inverse_time_change(t, s_of_t, s_query);
  if (!found) throw Error(ErrorCode::kHorizonExceeded, "s", "query lies beyond the simulated clock");
  return *found;
}

double sample_remaining_passage(double x, double ell, double target, RandomStream& rng) {
  const double d = x + (target - ell);
  const double z = rng.normal();
  return (d * d) / (z * z);
}

}  // namespace trajzoom
