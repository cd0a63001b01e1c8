#include <algorithm>
#include <cmath>

#include "kernels/lane_ops.hpp"
#include "trajzoom/stats.hpp"

namespace trajzoom {

ExcursionTracker::ExcursionTracker(double dt, kernels::ReflectionScheme scheme, const ExcursionOptions& options)
    : dt_(dt),
      scheme_(scheme),
      options_(options),
      tolerance_(options.jump_tolerance.value_or(2.0 * std::sqrt(dt))),
      window_(options.refine_window * std::sqrt(dt)) {
  if (!(dt > 0.0)) throw Error(ErrorCode::kOutOfRange, "dt", "must be > 0");
  if (!(options.floor > 0.0 && options.floor < 0.5)) {
    throw Error(ErrorCode::kOutOfRange, "floor", "must lie in (0, 0.5)");
  }
}

void ExcursionTracker::push(double q, double big_l, double big_u) {
  const std::size_t k = next_++;
  // A contact is a grid point on 0 or 1, or a step over which L or U grew.
  const bool at0 = q == 0.0;
  const bool at1 = q == 1.0;
  const bool push0 = k > 0 && big_l > prev_l_;
  const bool push1 = k > 0 && big_u > prev_u_;
  prev_l_ = big_l;
  prev_u_ = big_u;
  if (!(at0 || at1 || push0 || push1)) {
    if (open_) add_point(k, q);
    return;
  }
  const int side = (at0 || push0) ? 0 : 1;
  // Step contacts are timed at the step midpoint under the bridge scheme and
  // the point itself then opens the next stretch.
  const bool on_grid = at0 || at1 || scheme_ == kernels::ReflectionScheme::kClamp;
  const double tk = static_cast<double>(k) * dt_;
  const double time = on_grid ? tk : tk - 0.5 * dt_;
  if (open_ && !empty_) close(time, side);
  open_ = true;
  side_ = side;
  t_open_ = time;
  empty_ = true;
  near_apex_.clear();
  prune_at_ = 64;
  if (!on_grid) add_point(k, q);
}

void ExcursionTracker::add_point(std::size_t k, double q) {
  const double h = height(q);
  if (empty_) {
    empty_ = false;
    first_ = last_ = apex_ = k;
    apex_height_ = last_height_ = h;
    return;
  }
  if (h > apex_height_) {
    apex_height_ = h;
    apex_ = k;
  }
  if (options_.refine_rng != nullptr) {
    const double threshold = apex_height_ - window_;
    const double top = std::max(last_height_, h);
    if (top >= threshold && top >= options_.refine_above - 2.0 * window_) near_apex_.push_back({last_, last_height_, h});
    if (near_apex_.size() > prune_at_) {
      std::erase_if(near_apex_, [&](const Step& s) { return std::max(s.h0, s.h1) < threshold; });
      prune_at_ = std::max<std::size_t>(64, 2 * near_apex_.size());
    }
  }
  last_ = k;
  last_height_ = h;
}

void ExcursionTracker::close(double time, int closing_side) {
  double height = apex_height_;
  if (!(height > options_.floor)) return;
  double t_apex = static_cast<double>(apex_) * dt_;
  if (options_.refine_rng != nullptr && height >= options_.refine_above - window_) {
    const double grid_max = height;
    for (const Step& s : near_apex_) {
      if (std::max(s.h0, s.h1) < grid_max - window_) continue;
      const double m = s.h0 + kernels::bridge_max(s.h1 - s.h0, dt_, options_.refine_rng->uniform_positive());
      if (m > height) {
        height = m;
        t_apex = (static_cast<double>(s.k) + 0.5) * dt_;
      }
    }
    height = std::min(height, 1.0);
  }
  Excursion e;
  e.t_start = t_open_;
  e.t_apex = t_apex;
  e.t_end = time;
  e.height = height;
  e.origin = side_;
  e.kind = (closing_side != side_ || height >= 1.0 - tolerance_) ? ExcursionKind::kJump : ExcursionKind::kSpike;
  e.first_index = first_;
  e.last_index = last_;
  closed_.push_back(e);
}

std::vector<Excursion> detect_excursions(std::span<const double> q, std::span<const double> big_l,
                                         std::span<const double> big_u, double dt,
                                         kernels::ReflectionScheme scheme, const ExcursionOptions& options) {
  if (big_l.size() != q.size() || big_u.size() != q.size()) {
    throw Error(ErrorCode::kMissingLocalTimes, "local_times", "L and U must accompany every grid point");
  }
  ExcursionTracker tracker(dt, scheme, options);
  for (std::size_t k = 0; k < q.size(); ++k) tracker.push(q[k], big_l[k], big_u[k]);
  return std::move(tracker.closed());
}

std::vector<Excursion> detect_excursions(const LimitTrajectory& path, const ExcursionOptions& options) {
  return detect_excursions(path.q, path.big_l, path.big_u, path.dt, path.scheme, options);
}

}  // namespace trajzoom
