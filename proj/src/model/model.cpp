#include "trajzoom/model.hpp"

#include <cmath>
#include <sstream>

#include "trajzoom/random.hpp"

namespace trajzoom {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOutOfRange:
      return "OUT_OF_RANGE";
    case ErrorCode::kInconsistent:
      return "INCONSISTENT";
    case ErrorCode::kInvalidArgument:
      return "INVALID_ARGUMENT";
    case ErrorCode::kEmptyPath:
      return "EMPTY_PATH";
    case ErrorCode::kNegativeStart:
      return "NEGATIVE_START";
    case ErrorCode::kStartOutOfStrip:
      return "START_OUT_OF_STRIP";
    case ErrorCode::kEpsNonpositive:
      return "EPS_NONPOSITIVE";
    case ErrorCode::kHorizonExceeded:
      return "HORIZON_EXCEEDED";
    case ErrorCode::kEmptySamples:
      return "EMPTY_SAMPLES";
    case ErrorCode::kInsufficientSamples:
      return "INSUFFICIENT_SAMPLES";
    case ErrorCode::kMissingLocalTimes:
      return "MISSING_LOCAL_TIMES";
    case ErrorCode::kParseError:
      return "PARSE_ERROR";
    case ErrorCode::kUnknownKey:
      return "UNKNOWN_KEY";
    case ErrorCode::kMissingColumn:
      return "MISSING_COLUMN";
    case ErrorCode::kIo:
      return "IO";
  }
  return "UNKNOWN";
}

namespace {

std::string format_error(ErrorCode code, const std::string& field, const std::string& message, int line) {
  std::ostringstream out;
  out << to_string(code);
  if (!field.empty()) out << '(' << field << ')';
  if (line > 0) out << " at line " << line;
  if (!message.empty()) out << ": " << message;
  return out.str();
}

void require(bool ok, const char* field, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kOutOfRange, field, what);
}

}  // namespace

Error::Error(ErrorCode code, std::string field, const std::string& message, int line)
    : std::runtime_error(format_error(code, field, message, line)),
      code_(code),
      field_(std::move(field)),
      line_(line) {}

double MeasurementRate::value() const {
  if (kind_ == Kind::kInfinite) {
    throw Error(ErrorCode::kInconsistent, "gamma", "the infinite measurement rate has no finite value");
  }
  return value_;
}

ModelParams validate(const ModelParams& params, Regime regime) {
  // Negated comparisons so that NaN fails every check.
  require(params.lambda > 0.0 && std::isfinite(params.lambda), "lambda", "must be finite and > 0");
  require(params.p > 0.0 && params.p < 1.0, "p", "must lie in (0,1)");
  require(params.epsilon > 0.0 && params.epsilon < 1.0, "epsilon", "must lie in (0,1)");
  require(params.ds > 0.0 && std::isfinite(params.ds), "ds", "must be finite and > 0");
  require(params.dt > 0.0 && std::isfinite(params.dt), "dt", "must be finite and > 0");
  if (!params.gamma.is_infinite()) {
    const double g = params.gamma.value();
    require(g > 0.0 && std::isfinite(g), "gamma", "must be finite and > 0, or the infinite marker");
  }
  if (regime == Regime::kFiniteRate && params.gamma.is_infinite()) {
    throw Error(ErrorCode::kInconsistent, "gamma", "finite-rate engine requires a finite gamma");
  }
  if (regime == Regime::kLimit && !params.gamma.is_infinite()) {
    throw Error(ErrorCode::kInconsistent, "gamma", "limit engine requires gamma = infinite");
  }
  return params;
}

void check_invariants(const Trajectory& traj, double ds) {
  const std::size_t n = traj.q.size();
  if (traj.s.size() != n || traj.t.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "trajectory", "columns have different lengths");
  }
  if (n == 0) throw Error(ErrorCode::kEmptyPath, "trajectory", "no samples");
  if (traj.t[0] != 0.0) throw Error(ErrorCode::kOutOfRange, "t", "effective time must start at 0");
  for (std::size_t k = 0; k < n; ++k) {
    if (!(traj.q[k] >= 0.0 && traj.q[k] <= 1.0)) {
      throw Error(ErrorCode::kOutOfRange, "q", "sample " + std::to_string(k) + " outside [0,1]");
    }
    if (k > 0) {
      if (!(traj.t[k] >= traj.t[k - 1])) {
        throw Error(ErrorCode::kOutOfRange, "t", "decreases at sample " + std::to_string(k));
      }
      const double step = traj.s[k] - traj.s[k - 1];
      if (!(step > 0.0) || std::abs(step - ds) > 1e-9 * std::max(1.0, traj.s[k])) {
        throw Error(ErrorCode::kOutOfRange, "s", "grid not uniform with spacing ds at sample " + std::to_string(k));
      }
    }
  }
}

RandomStream::RandomStream(SeedSpec seed, Substream substream) {
  const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffU); };
  const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed.master_seed), hi(seed.master_seed), lo(seed.trajectory_index),
                    hi(seed.trajectory_index), static_cast<std::uint32_t>(substream), 0x7a6f6f6dU};
  engine_.seed(seq);
}

}  // namespace trajzoom
