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

#include "posp/compiler.hpp"

namespace posp {

struct EnsembleResult;
struct MomentEstimate;

// Drift A' = A + deltaA and weight variable C0 with dC0 = A0 dt + xi0, where
// <xi0 xi0> = -2 A0 and <xi xi0> = -deltaA border the diffusion matrix.
CompiledSystem apply_drift_gauge(const CompiledSystem& sys, const GaugeSpec& g);

// Ratio estimates of every channel with Omega folded into the weights.
std::vector<std::vector<MomentEstimate>> weighted_expectation(const EnsembleResult& r);

}  // namespace posp
