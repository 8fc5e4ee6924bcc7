//
// Copyright 2026 The fedsia Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef FEDSIA_RNG_H_
#define FEDSIA_RNG_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace fedsia {

// splitmix64 finalizer. Bijective on 64-bit words.
std::uint64_t splitmix64(std::uint64_t x);

// Purpose tags for stream derivation. Values are part of the reproducibility
// contract and must never be renumbered.
enum class Purpose : std::uint64_t {
  kSynthetic = 1,
  kSplit = 2,
  kPartition = 3,
  kTargets = 4,
  kModelInit = 5,
  kClientTrain = 6,
  kStudentInit = 7,
  kStudentTrain = 8,
  kPublicSplit = 9,
  kBaseline = 10,
};

// Counter-based derivation of independent stream seeds from a master seed.
//
//   h = splitmix64(master)
//   h = splitmix64(h ^ purpose)
//   h = splitmix64(h ^ round)
//   h = splitmix64(h ^ client)
//
// The resulting word seeds a std::mt19937_64, whose output sequence is fixed
// by the C++ standard.
class SeedDerivation {
 public:
  explicit SeedDerivation(std::uint64_t master_seed) : master_(master_seed) {}

  std::uint64_t master() const { return master_; }
  std::uint64_t derive(Purpose purpose, std::uint64_t round = 0,
                       std::uint64_t client = 0) const;

 private:
  std::uint64_t master_;
};

// Deterministic random stream. All distributions are written out here rather
// than taken from <random> so that runs are reproducible across standard
// library implementations:
//   uniform01  = (u64 >> 11) * 2^-53
//   below(n)   = rejection sampling of u64 % n above 2^64 mod n
//   normal     = Box-Muller on (1 - uniform01, uniform01), both outputs used
//   gamma(a)   = Marsaglia-Tsang; a < 1 boosted by U^(1/a)
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform01();
  std::uint64_t below(std::uint64_t n);
  double normal();
  double gamma(double shape);

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fedsia

#endif  // FEDSIA_RNG_H_
