#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "trajzoom/runner.hpp"

using namespace trajzoom;
namespace fs = std::filesystem;

namespace {

Error error_of(std::string_view text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e;
  }
  FAIL("config was accepted");
  return Error(ErrorCode::kIo, "", "");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("trajzoom_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("figure configuration parses") {
  const auto c = parse_config("mode=sde\ngamma=200\nlambda=1\np=0.5\nds=1e-5\nhorizon=8\nn_traj=1\nmaster_seed=42\n"
                              "output_dir=out");
  CHECK(c.mode == Mode::kSde);
  CHECK(c.params.gamma == MeasurementRate::finite(200.0));
  CHECK(c.params.lambda == 1.0);
  CHECK(c.params.p == 0.5);
  CHECK(c.params.ds == 1e-5);
  CHECK(c.horizon == 8.0);
  CHECK(c.master_seed == 42);
  CHECK(c.output_dir == "out");
}

TEST_CASE("config errors") {
  const auto empty = error_of("");
  CHECK(empty.code() == ErrorCode::kParseError);
  CHECK(empty.field() == "mode");

  const auto neg = error_of("mode=sde\ngamma=-1\n");
  CHECK(neg.code() == ErrorCode::kOutOfRange);
  CHECK(neg.field() == "gamma");
  CHECK(neg.line() == 2);

  const auto unknown = error_of("# comment\nmode=sde\nspeed=3\n");
  CHECK(unknown.code() == ErrorCode::kUnknownKey);
  CHECK(unknown.line() == 3);

  CHECK(error_of("mode=sde\np=0.5\np=0.4\n").code() == ErrorCode::kParseError);
  CHECK(error_of("mode=sde\nlambda\n").code() == ErrorCode::kParseError);
  CHECK(error_of("mode=sde\nlambda=fast\n").code() == ErrorCode::kParseError);
  CHECK(error_of("mode=sde\nn_traj=0\n").code() == ErrorCode::kOutOfRange);
  CHECK(error_of("mode=sde\nds=1e-3\n").field() == "ds");
  CHECK(error_of("mode=sde\ngamma=inf\n").code() == ErrorCode::kInconsistent);
  CHECK(error_of("mode=limit\ngamma=100\n").code() == ErrorCode::kInconsistent);
  CHECK(error_of("mode=discrete\neffective_time_normalization=3\n").field() == "effective_time_normalization");

  const auto bad_p = error_of("mode=sde\n\np=1\n");
  CHECK(bad_p.field() == "p");
  CHECK(bad_p.line() == 3);
}

TEST_CASE("limit modes default to the infinite rate") {
  const auto c = parse_config("mode=limit\n");
  CHECK(c.params.gamma.is_infinite());
  CHECK(parse_config("mode=stats-levy\ngamma=inf\n").params.gamma.is_infinite());
}

TEST_CASE("config echo re-parses to the same configuration") {
  const auto c = parse_config("mode=limit\ndt=3e-4\nq0=0.25\nsigmas=0.5,1,2\nreflection=bridge\nboundaries=lower\n"
                              "master_seed=18446744073709551615\n");
  std::string text;
  for (const auto& [k, v] : config_entries(c)) text += k + "=" + v + "\n";
  const auto back = parse_config(text);
  CHECK(back.params == c.params);
  CHECK(back.q0 == c.q0);
  CHECK(back.sigmas == c.sigmas);
  CHECK(back.reflection == c.reflection);
  CHECK(back.boundaries == c.boundaries);
  CHECK(back.master_seed == c.master_seed);
}

TEST_CASE("seed override from the environment") {
  auto c = parse_config("mode=sde\nmaster_seed=1\n");
  ::unsetenv("TRAJZOOM_SEED");
  CHECK(!apply_seed_override(c));
  ::setenv("TRAJZOOM_SEED", "987", 1);
  CHECK(apply_seed_override(c));
  CHECK(c.master_seed == 987);
  ::unsetenv("TRAJZOOM_SEED");
}

TEST_CASE("limit output re-reads with an exact decomposition") {
  auto c = parse_config("mode=limit\ndt=1e-3\nhorizon=2\nn_traj=2\nmaster_seed=5\n");
  c.output_dir = scratch("limit").string();
  const auto r = run(c);
  REQUIRE(r.exit_code == kExitSuccess);
  const auto table = read_csv(fs::path(c.output_dir) / "traj_00001.csv");
  CHECK(table.header == std::vector<std::string>{"t", "Q", "L", "U", "s", "B"});
  REQUIRE(table.rows.size() == 2001);
  const double q0 = table.rows[0][1];
  for (const auto& row : table.rows) {
    REQUIRE(std::abs(row[1] - (q0 + row[5] + row[2] - row[3])) <= 1e-12);
    REQUIRE(row[4] == doctest::Approx(row[2] / 0.5 + row[3] / 0.5).epsilon(1e-15));
  }
  CHECK(fs::exists(fs::path(c.output_dir) / "manifest.txt"));
  CHECK(fs::exists(fs::path(c.output_dir) / "aggregate.csv"));
}

TEST_CASE("outputs do not depend on the thread count") {
  for (const char* text : {"mode=sde\ngamma=200\nds=1e-4\nhorizon=1\nn_traj=6\n",
                           "mode=discrete\nds=1e-3\nhorizon=1\nn_traj=6\nepsilon=0.1\n",
                           "mode=limit\ndt=1e-3\nhorizon=1\nn_traj=20\n",
                           "mode=stats-excursions\ndt=1e-3\nhorizon=4\nn_traj=9\n"}) {
    auto c = parse_config(text);
    c.master_seed = 77;
    c.output_dir = scratch("seq").string();
    REQUIRE(run(c, {.threads = 1}).exit_code == kExitSuccess);
    const std::string seq = c.output_dir;
    c.output_dir = scratch("par").string();
    REQUIRE(run(c, {.threads = 4, .dump_paths = false}).exit_code == kExitSuccess);
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(seq)) {
      const auto name = entry.path().filename();
      if (name == "manifest.txt") continue;
      CHECK(slurp(entry.path()) == slurp(fs::path(c.output_dir) / name));
      ++compared;
    }
    CHECK(compared >= 1);
  }
}

TEST_CASE("path files are written for small ensembles or on request") {
  auto c = parse_config("mode=limit\ndt=1e-3\nhorizon=0.5\nn_traj=17\n");
  c.output_dir = scratch("dump").string();
  REQUIRE(run(c).exit_code == kExitSuccess);
  CHECK(!fs::exists(fs::path(c.output_dir) / "traj_00000.csv"));
  REQUIRE(run(c, {.dump_paths = true}).exit_code == kExitSuccess);
  CHECK(fs::exists(fs::path(c.output_dir) / "traj_00016.csv"));
}

TEST_CASE("plot data panels") {
  const fs::path dir = scratch("plot");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "traj_00000.csv");
    f << "s,Q,t\n0,0.3,0\n0.5,0.3,0\n1,0.3,0\n";
  }
  emit_plotdata(dir, dir / "plot.csv");
  const std::string out = slurp(dir / "plot.csv");
  CHECK(out.find("00000,t_vs_s,1,0\n") != std::string::npos);
  CHECK(out.find("00000,Q_vs_s,0.5,0.29999999999999999\n") != std::string::npos);
  CHECK(out.find("00000,Q_vs_t,0,0.29999999999999999\n") != std::string::npos);
  {
    std::ofstream f(dir / "traj_00001.csv");
    f << "s,Q\n0,0.3\n";
  }
  try {
    emit_plotdata(dir, dir / "plot.csv");
    FAIL("missing column accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingColumn);
  }
}

TEST_CASE("limit plot data traces the inverse of the physical clock") {
  auto c = parse_config("mode=limit\ndt=1e-3\nhorizon=1\nn_traj=1\n");
  c.output_dir = scratch("plotlimit").string();
  REQUIRE(run(c).exit_code == kExitSuccess);
  const fs::path out = fs::path(c.output_dir) / "plot.csv";
  emit_plotdata(c.output_dir, out);
  const auto traj = read_csv(fs::path(c.output_dir) / "traj_00000.csv");
  std::ifstream in(out);
  std::string line;
  std::getline(in, line);
  std::vector<std::pair<double, double>> ts;
  while (std::getline(in, line)) {
    if (line.find(",t_vs_s,") == std::string::npos) continue;
    const auto a = line.find(",t_vs_s,") + 8;
    const auto comma = line.find(',', a);
    ts.emplace_back(std::stod(line.substr(a, comma - a)), std::stod(line.substr(comma + 1)));
  }
  REQUIRE(ts.size() == traj.rows.size());
  for (std::size_t k = 0; k < ts.size(); ++k) {
    CHECK(ts[k].first == traj.rows[k][4]);
    CHECK(ts[k].second == traj.rows[k][0]);
    if (k > 0) CHECK(ts[k].first >= ts[k - 1].first);
  }
}
