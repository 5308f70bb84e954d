// Copyright 2026 The pospsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "posp/compiler.hpp"

namespace posp {

// Per-trajectory stream: mt19937_64 seeded from splitmix64(seed, index).
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t index);
  double normal() { return normal_(eng_); }
  double uniform() { return uniform_(eng_); }  // [0,1)
  double gamma2() { return gamma_(eng_); }      // Gamma(2,1)
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::gamma_distribution<double> gamma_{2.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

struct PhaseDraw {
  cplx value;        // eta (or theta, or z)
  cplx partner;      // z+ for the proper scheme; equals value otherwise
  cplx logweight;
};

// eta = e^{i psi}, w = 1 + e^{-i psi}
PhaseDraw sample_eta(Rng& rng);
// theta = e^{i psi}, w = 1 + e^{-2 i psi}
PhaseDraw sample_theta(Rng& rng);
// Proper positive-P pair (z, z+) with <z z+> = 1 and <z^2 z+^2> = 0, weight 1.
PhaseDraw sample_proper(Rng& rng);

struct WeightedSample {
  std::vector<cplx> state;
  cplx logweight = 0.0;
};

class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

WeightedSample init_effective_density(const CompiledSystem& sys, const InitialStateSpec& spec, Rng& rng);
WeightedSample init_cvariables(const CompiledSystem& sys, const InitialStateSpec& spec, Rng& rng);
// Dispatch on the formulation.
WeightedSample init_sample(const CompiledSystem& sys, const InitialStateSpec& spec, Rng& rng);

}  // namespace posp
