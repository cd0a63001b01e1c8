#include "trajzoom/sde.hpp"

#include <algorithm>
#include <cmath>

namespace trajzoom {
namespace {

kernels::EmCoefficients coefficients(const ModelParams& params) {
  const double gamma = params.gamma.value();
  return {params.lambda * params.ds, params.p, std::sqrt(gamma) * std::sqrt(params.ds), gamma * params.ds};
}

constexpr std::size_t kBlock = 1024;

}  // namespace

double em_step(double q, const ModelParams& params, double xi) {
  const kernels::EmCoefficients c = coefficients(params);
  const double w = q * (1.0 - q);
  const double y = (q + c.lambda_ds * (c.p - q)) + (c.sqrt_gamma_ds * w) * xi;
  return std::min(1.0, std::max(0.0, y));
}

void check_step_guard(const ModelParams& params) {
  validate(params, Regime::kFiniteRate);
  const double gamma = params.gamma.value();
  if (params.ds * gamma > 0.1) {
    throw Error(ErrorCode::kOutOfRange, "ds", "must satisfy ds <= 0.1/gamma to resolve the boundary layer");
  }
}

SdeLanes::SdeLanes(const ModelParams& params, std::uint64_t master_seed, std::span<const std::uint64_t> indices,
                   std::span<const double> q0, const kernels::KernelTable& table)
    : table_(&table), coeff_(coefficients(params)), master_seed_(master_seed), q_(q0.begin(), q0.end()), t_(q0.size(), 0.0),
      clamped_(q0.size(), 0) {
  if (indices.size() != q0.size()) {
    throw Error(ErrorCode::kInvalidArgument, "q0", "one start value per lane is required");
  }
  streams_.reserve(indices.size());
  for (std::uint64_t index : indices) streams_.emplace_back(SeedSpec{master_seed, index}, Substream::kIncrements);
}

void SdeLanes::advance(std::size_t steps, kernels::EmRecord record, double* xi_out) {
  const std::size_t n = lanes();
  if (n == 0 || steps == 0) return;
  xi_.resize(std::min(steps, kBlock) * n);
  for (std::size_t done = 0; done < steps;) {
    const std::size_t block = std::min(kBlock, steps - done);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < block; ++k) xi_[k * n + i] = streams_[i].normal();
    }
    kernels::EmRecord rec;
    if (record.q != nullptr) rec.q = record.q + done * n;
    if (record.t != nullptr) rec.t = record.t + done * n;
    table_->em_advance({q_.data(), t_.data(), clamped_.data(), n}, xi_.data(), block, coeff_, rec);
    if (xi_out != nullptr) std::copy_n(xi_.data(), block * n, xi_out + done * n);
    done += block;
  }
}

void SdeLanes::reset_lane(std::size_t lane, std::uint64_t index, double q0) {
  streams_.at(lane) = RandomStream(SeedSpec{master_seed_, index}, Substream::kIncrements);
  q_[lane] = q0;
  t_[lane] = 0.0;
  clamped_[lane] = 0;
}

SdePath run_sde(const ModelParams& params, SeedSpec seed, double horizon_s, const SdeOptions& options) {
  check_step_guard(params);
  if (!(horizon_s > 0.0) || !std::isfinite(horizon_s)) {
    throw Error(ErrorCode::kOutOfRange, "horizon", "must be finite and > 0");
  }
  const double q0 = options.q0.value_or(params.p);
  if (!(q0 >= 0.0 && q0 <= 1.0)) throw Error(ErrorCode::kOutOfRange, "q0", "must lie in [0,1]");
  // A relative slack keeps horizon/ds = 8/1e-5 from rounding up to one extra step.
  const auto steps = static_cast<std::size_t>(std::ceil(horizon_s / params.ds * (1.0 - 1e-12)));

  const std::uint64_t index = seed.trajectory_index;
  const double start = q0;
  SdeLanes lane(params, seed.master_seed, std::span(&index, 1), std::span(&start, 1));

  SdePath path;
  path.gamma = params.gamma.value();
  Trajectory& tr = path.trajectory;
  tr.q.resize(steps + 1);
  tr.t.resize(steps + 1);
  tr.s.resize(steps + 1);
  tr.q[0] = q0;
  tr.t[0] = 0.0;
  if (options.keep_increments) path.increments_w.resize(steps);
  lane.advance(steps, {tr.q.data() + 1, tr.t.data() + 1},
               options.keep_increments ? path.increments_w.data() : nullptr);
  for (std::size_t k = 0; k <= steps; ++k) tr.s[k] = static_cast<double>(k) * params.ds;
  path.clamped_steps = lane.clamped()[0];
  return path;
}

double quadratic_variation_time(const Trajectory& traj) {
  return kernels::active_kernels().sum_squared_increments(traj.q.data(), traj.q.size());
}

EffectivePath reparametrize(const Trajectory& traj, double dt_grid) {
  if (traj.size() == 0) throw Error(ErrorCode::kEmptyPath, "trajectory", "no samples");
  if (!(dt_grid > 0.0)) throw Error(ErrorCode::kOutOfRange, "dt", "must be > 0");
  EffectivePath out;
  const double t_final = traj.t.back();
  if (!(t_final > 0.0)) {
    out.t.push_back(0.0);
    out.q.push_back(traj.q.front());
    out.s.push_back(traj.s.empty() ? 0.0 : traj.s.front());
    out.degenerate_time = true;
    return out;
  }
  const auto points = static_cast<std::size_t>(std::floor(t_final / dt_grid * (1.0 + 1e-12))) + 1;
  out.t.resize(points);
  out.q.resize(points);
  out.s.resize(points);
  std::size_t k = 0;
  for (std::size_t j = 0; j < points; ++j) {
    const double tj = static_cast<double>(j) * dt_grid;
    while (k + 1 < traj.size() && traj.t[k + 1] <= tj) ++k;
    out.t[j] = tj;
    out.q[j] = traj.q[k];
    out.s[j] = traj.s[k];
  }
  return out;
}

}  // namespace trajzoom
