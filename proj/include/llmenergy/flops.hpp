// Copyright 2026 The llm-energy Authors
// SPDX-License-Identifier: Apache-2.0
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

#pragma once

#include <cstdint>

#include "llmenergy/binning.hpp"
#include "llmenergy/core.hpp"
#include "llmenergy/error.hpp"

namespace llmenergy {

struct FlopsBreakdown {
  std::uint64_t prefill_flops = 0;
  std::uint64_t decode_flops = 0;

  std::uint64_t total() const { return prefill_flops + decode_flops; }
  friend bool operator==(const FlopsBreakdown&,
                         const FlopsBreakdown&) = default;
};

/// Analytic forward-pass FLOPs for one request on a dense decoder.
///
/// Every processed token costs 2 FLOPs per parameter (one multiply-accumulate
/// through every weight matrix) plus 4 * d_model FLOPs per layer and per
/// attended position (QK^T scores and the AV mix). Prefill processes tokens
/// 1..I with causal contexts 1..I; decode reuses the KV cache, so generated
/// token j attends to I + j positions. Softmax, norms and activations are not
/// counted.
inline FlopsBreakdown request_flops(const ModelConfig& model,
                                    TokenCount input_len,
                                    TokenCount output_len) {
  if (input_len == 0) {
    throw InvalidArgument("request_flops requires input_len >= 1");
  }
  const std::uint64_t params = effective_param_count(model);
  const std::uint64_t attn = 4 * model.n_layers * model.d_model;
  const std::uint64_t i = input_len;
  const std::uint64_t o = output_len;

  FlopsBreakdown out;
  out.prefill_flops = 2 * params * i + attn * (i * (i + 1) / 2);
  out.decode_flops = 2 * params * o + attn * (o * i + o * (o + 1) / 2);
  return out;
}

/// Energy per FLOP at rated peak throughput and full TDP draw.
inline double joules_per_flop(const HardwareSpec& hw) {
  hw.validate();
  return hw.tdp_watts / hw.peak_flops;
}

/// Idealized lower-bound energy: every binned request is charged the FLOPs of
/// its bin caps at the hardware's J/FLOP. Excluded requests cost nothing.
inline Energy idealized_energy(const HardwareSpec& hw, const ModelConfig& model,
                               const BinnedWorkload& workload) {
  const double ratio = joules_per_flop(hw);
  double joules = 0.0;
  for (const auto& [bin, count] : workload.counts()) {
    const auto flops = request_flops(model, bin.input_cap, bin.output_cap);
    joules += static_cast<double>(count) *
              static_cast<double>(flops.total()) * ratio;
  }
  return Energy::from_joules(joules);
}

// Sum of FLOPs over the workload at bin caps, as a double (may exceed 2^64).
inline double workload_flops(const ModelConfig& model,
                             const BinnedWorkload& workload) {
  double total = 0.0;
  for (const auto& [bin, count] : workload.counts()) {
    total += static_cast<double>(count) *
             static_cast<double>(
                 request_flops(model, bin.input_cap, bin.output_cap).total());
  }
  return total;
}

}  // namespace llmenergy
