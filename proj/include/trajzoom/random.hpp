#pragma once

#include <cstdint>
#include <random>
#include <span>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "trajzoom/model.hpp"

namespace trajzoom {

/// Named substreams so that auxiliary draws (apex refinement, tail
/// completion, initial states) never perturb the main increment stream.
enum class Substream : std::uint32_t {
  kIncrements = 0,
  kBridge = 1,
  kInitialState = 2,
  kApexRefinement = 3,
  kTailCompletion = 4,
};

/// Random stream that is a pure function of (master_seed, trajectory_index,
/// substream). The engine is seeded through std::seed_seq over the 32-bit
/// halves of each word, so neighbouring indices give unrelated states.
class RandomStream {
 public:
  explicit RandomStream(SeedSpec seed, Substream substream = Substream::kIncrements);

  double normal() { return normal_(engine_); }
  /// Uniform on [0,1).
  double uniform() { return uniform_(engine_); }
  /// Uniform on (0,1], safe to take the logarithm of.
  double uniform_positive() { return 1.0 - uniform_(engine_); }

  void fill_normal(std::span<double> out) {
    for (double& v : out) v = normal_(engine_);
  }
  void fill_uniform_positive(std::span<double> out) {
    for (double& v : out) v = 1.0 - uniform_(engine_);
  }

 private:
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
  boost::random::uniform_01<double> uniform_;
};

}  // namespace trajzoom
