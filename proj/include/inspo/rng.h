// Copyright 2026 The InSPO Tabular Lab Authors
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

#ifndef INSPO_RNG_H_
#define INSPO_RNG_H_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace inspo {

// Seeded generator with platform-independent derived draws. The standard
// distributions are implementation defined, so everything here is built
// directly on the raw 64-bit engine output.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 bits of precision.
  double Uniform();

  // Uniform integer in [0, n).
  int UniformInt(int n);

  // Index drawn with probability proportional to weights.
  int Categorical(std::span<const double> weights);

  // Uniformly random permutation of 0..n-1 (Fisher-Yates).
  std::vector<int> Permutation(int n);

  uint64_t NextRaw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// Derives an independent stream seed from a base seed and a stream tag.
uint64_t DeriveSeed(uint64_t seed, uint64_t stream);

}  // namespace inspo

#endif  // INSPO_RNG_H_
