#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include "trajzoom/runner.hpp"
#include "trajzoom/sde.hpp"

namespace trajzoom {
namespace {

constexpr std::pair<Mode, std::string_view> kModes[] = {
    {Mode::kDiscrete, "discrete"},       {Mode::kSde, "sde"},
    {Mode::kLimit, "limit"},             {Mode::kStatsExcursions, "stats-excursions"},
    {Mode::kStatsLevy, "stats-levy"},    {Mode::kStatsSpikes, "stats-spikes"},
    {Mode::kStatsEntropy, "stats-entropy"},
};

const std::set<std::string, std::less<>> kKeys = {
    "mode",     "lambda",  "p",         "gamma",      "epsilon",    "ds",
    "dt",       "horizon", "n_traj",    "master_seed", "output_dir", "effective_time_normalization",
    "q0",       "floor",   "apex_min",  "apex_max",   "sigmas",     "s_points",
    "reflection", "boundaries", "spike_height", "sample_spacing",
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view text, const std::string& key, int line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorCode::kParseError, key, "not a number: '" + std::string(text) + "'", line);
  }
  return v;
}

std::uint64_t parse_unsigned(std::string_view text, const std::string& key, int line) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorCode::kParseError, key, "not a non-negative integer: '" + std::string(text) + "'", line);
  }
  return v;
}

std::vector<double> parse_list(std::string_view text, const std::string& key, int line) {
  std::vector<double> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_double(trim(text.substr(0, comma)), key, line));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw Error(ErrorCode::kParseError, key, "empty list", line);
  return out;
}

bool uses_limit_engine(Mode mode) {
  return mode == Mode::kLimit || mode == Mode::kStatsExcursions || mode == Mode::kStatsLevy ||
         mode == Mode::kStatsEntropy;
}

void out_of_range(const std::string& key, const std::string& what, int line) {
  throw Error(ErrorCode::kOutOfRange, key, what, line);
}

}  // namespace

std::string_view to_string(Mode mode) {
  for (const auto& [m, name] : kModes) {
    if (m == mode) return name;
  }
  return "unknown";
}

std::optional<Mode> parse_mode(std::string_view text) {
  for (const auto& [m, name] : kModes) {
    if (name == text) return m;
  }
  return std::nullopt;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

RunConfig parse_config(std::string_view text) {
  std::map<std::string, std::pair<std::string, int>, std::less<>> values;
  int line_no = 0;
  while (!text.empty() || line_no == 0) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (text.empty()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kParseError, "", "expected key=value", line_no);
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw Error(ErrorCode::kParseError, "", "empty key", line_no);
    if (!kKeys.contains(key)) throw Error(ErrorCode::kUnknownKey, key, "unknown key", line_no);
    if (values.contains(key)) throw Error(ErrorCode::kParseError, key, "duplicate key", line_no);
    values.emplace(key, std::make_pair(value, line_no));
  }

  const auto find = [&](const char* key) -> const std::pair<std::string, int>* {
    const auto it = values.find(key);
    return it == values.end() ? nullptr : &it->second;
  };
  const auto line_of = [&](const std::string& key) {
    const auto* entry = find(key.c_str());
    return entry != nullptr ? entry->second : 0;
  };

  RunConfig c;
  const auto* mode = find("mode");
  if (mode == nullptr) throw Error(ErrorCode::kParseError, "mode", "missing mode", 0);
  const auto parsed_mode = parse_mode(mode->first);
  if (!parsed_mode) throw Error(ErrorCode::kParseError, "mode", "unknown mode '" + mode->first + "'", mode->second);
  c.mode = *parsed_mode;

  const auto number = [&](const char* key, double& target) {
    if (const auto* e = find(key)) target = parse_double(e->first, key, e->second);
  };
  number("lambda", c.params.lambda);
  number("p", c.params.p);
  number("epsilon", c.params.epsilon);
  number("ds", c.params.ds);
  number("dt", c.params.dt);
  number("horizon", c.horizon);
  number("effective_time_normalization", c.effective_time_normalization);
  number("floor", c.floor);
  number("apex_min", c.apex_min);
  number("apex_max", c.apex_max);
  number("spike_height", c.spike_height);
  number("sample_spacing", c.sample_spacing);
  if (const auto* e = find("q0")) c.q0 = parse_double(e->first, "q0", e->second);
  if (const auto* e = find("sigmas")) c.sigmas = parse_list(e->first, "sigmas", e->second);
  if (const auto* e = find("s_points")) c.s_points = parse_list(e->first, "s_points", e->second);
  if (const auto* e = find("output_dir")) c.output_dir = e->first;
  if (const auto* e = find("master_seed")) c.master_seed = parse_unsigned(e->first, "master_seed", e->second);
  if (const auto* e = find("n_traj")) {
    c.n_traj = parse_unsigned(e->first, "n_traj", e->second);
    if (c.n_traj == 0) out_of_range("n_traj", "must be >= 1", e->second);
  }
  if (const auto* e = find("reflection")) {
    if (e->first == "clamp") {
      c.reflection = kernels::ReflectionScheme::kClamp;
    } else if (e->first == "bridge") {
      c.reflection = kernels::ReflectionScheme::kBridge;
    } else {
      throw Error(ErrorCode::kParseError, "reflection", "expected clamp or bridge", e->second);
    }
  }
  if (const auto* e = find("boundaries")) {
    if (e->first == "both") {
      c.boundaries = kernels::Boundaries::kBoth;
    } else if (e->first == "lower") {
      c.boundaries = kernels::Boundaries::kLowerOnly;
    } else {
      throw Error(ErrorCode::kParseError, "boundaries", "expected both or lower", e->second);
    }
  }

  const auto* gamma = find("gamma");
  if (gamma != nullptr) {
    if (gamma->first == "inf" || gamma->first == "infinite" || gamma->first == "INFINITE") {
      c.params.gamma = MeasurementRate::infinite();
    } else {
      const double g = parse_double(gamma->first, "gamma", gamma->second);
      if (!(g > 0.0) || !std::isfinite(g)) out_of_range("gamma", "must be > 0 or inf", gamma->second);
      c.params.gamma = MeasurementRate::finite(g);
    }
  }
  if (uses_limit_engine(c.mode)) {
    if (gamma == nullptr) c.params.gamma = MeasurementRate::infinite();
    if (!c.params.gamma.is_infinite()) {
      throw Error(ErrorCode::kInconsistent, "gamma", "mode " + std::string(to_string(c.mode)) + " needs gamma=inf",
                  gamma->second);
    }
  } else if (c.mode == Mode::kSde || c.mode == Mode::kStatsSpikes) {
    if (c.params.gamma.is_infinite()) {
      throw Error(ErrorCode::kInconsistent, "gamma", "finite-rate mode needs a finite gamma", gamma->second);
    }
  }

  try {
    validate(c.params);
    if (c.mode == Mode::kSde || c.mode == Mode::kStatsSpikes) check_step_guard(c.params);
  } catch (const Error& e) {
    throw Error(e.code(), e.field(), "invalid value", line_of(e.field()));
  }
  if (!(c.horizon > 0.0) || !std::isfinite(c.horizon)) out_of_range("horizon", "must be > 0", line_of("horizon"));
  if (c.effective_time_normalization != 1.0 && c.effective_time_normalization != 2.0) {
    out_of_range("effective_time_normalization", "must be 1 or 2", line_of("effective_time_normalization"));
  }
  if (c.q0 && !(*c.q0 >= 0.0 && *c.q0 <= 1.0)) out_of_range("q0", "must lie in [0,1]", line_of("q0"));
  if (!(c.floor > 0.0 && c.floor < 0.5)) out_of_range("floor", "must lie in (0, 0.5)", line_of("floor"));
  if (!(c.apex_min > 0.0 && c.apex_max > c.apex_min && c.apex_max <= 1.0)) {
    out_of_range("apex_min", "need 0 < apex_min < apex_max <= 1", line_of("apex_min"));
  }
  for (double s : c.sigmas) {
    if (!(s >= 0.0)) out_of_range("sigmas", "must be >= 0", line_of("sigmas"));
  }
  for (std::size_t i = 0; i < c.s_points.size(); ++i) {
    if (!(c.s_points[i] > 0.0) || (i > 0 && !(c.s_points[i] > c.s_points[i - 1]))) {
      out_of_range("s_points", "must be positive and increasing", line_of("s_points"));
    }
  }
  if (!(c.spike_height > 0.0 && c.spike_height < 1.0)) {
    out_of_range("spike_height", "must lie in (0,1)", line_of("spike_height"));
  }
  if (!(c.sample_spacing > 0.0)) out_of_range("sample_spacing", "must be > 0", line_of("sample_spacing"));
  if (c.output_dir.empty()) out_of_range("output_dir", "must not be empty", line_of("output_dir"));
  return c;
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& c) {
  const auto list = [](const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
    return out;
  };
  std::vector<std::pair<std::string, std::string>> e;
  e.emplace_back("mode", std::string(to_string(c.mode)));
  e.emplace_back("lambda", format_double(c.params.lambda));
  e.emplace_back("p", format_double(c.params.p));
  e.emplace_back("gamma", c.params.gamma.is_infinite() ? "inf" : format_double(c.params.gamma.value()));
  e.emplace_back("epsilon", format_double(c.params.epsilon));
  e.emplace_back("ds", format_double(c.params.ds));
  e.emplace_back("dt", format_double(c.params.dt));
  e.emplace_back("horizon", format_double(c.horizon));
  e.emplace_back("n_traj", std::to_string(c.n_traj));
  e.emplace_back("master_seed", std::to_string(c.master_seed));
  e.emplace_back("output_dir", c.output_dir);
  e.emplace_back("effective_time_normalization", format_double(c.effective_time_normalization));
  if (c.q0) e.emplace_back("q0", format_double(*c.q0));
  e.emplace_back("floor", format_double(c.floor));
  e.emplace_back("apex_min", format_double(c.apex_min));
  e.emplace_back("apex_max", format_double(c.apex_max));
  e.emplace_back("sigmas", list(c.sigmas));
  e.emplace_back("s_points", list(c.s_points));
  e.emplace_back("reflection", c.reflection == kernels::ReflectionScheme::kBridge ? "bridge" : "clamp");
  e.emplace_back("boundaries", c.boundaries == kernels::Boundaries::kLowerOnly ? "lower" : "both");
  e.emplace_back("spike_height", format_double(c.spike_height));
  e.emplace_back("sample_spacing", format_double(c.sample_spacing));
  return e;
}

bool apply_seed_override(RunConfig& config) {
  const char* env = std::getenv("TRAJZOOM_SEED");
  if (env == nullptr || *env == '\0') return false;
  config.master_seed = parse_unsigned(trim(env), "TRAJZOOM_SEED", 0);
  return true;
}

}  // namespace trajzoom
