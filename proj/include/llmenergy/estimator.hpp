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

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "llmenergy/binning.hpp"
#include "llmenergy/core.hpp"
#include "llmenergy/error.hpp"
#include "llmenergy/tables.hpp"

namespace llmenergy {

// Fractional charges count / max_batch batches; ceiling rounds up and charges
// every partial batch as a full one.
enum class BatchMode { kFractional, kCeiling };

inline std::string_view to_string(BatchMode mode) {
  return mode == BatchMode::kFractional ? "fractional" : "ceiling";
}

inline BatchMode parse_batch_mode(std::string_view name) {
  if (name == "fractional") return BatchMode::kFractional;
  if (name == "ceiling") return BatchMode::kCeiling;
  throw InvalidArgument("unknown batch mode '" + std::string(name) +
                        "' (expected fractional or ceiling)");
}

struct BinEstimate {
  Bin bin;
  std::uint64_t count = 0;
  std::uint64_t max_batch = 0;
  double batches = 0.0;
  Energy energy;
  std::optional<Energy> prefill_energy;
  std::optional<Energy> decode_energy;
  Provenance provenance = Provenance::kMeasured;
};

struct WorkloadEstimate {
  std::string dataset = "workload";
  std::string label;  // defaults to the backend name
  std::string backend;
  std::string device;
  BatchMode mode = BatchMode::kFractional;
  std::vector<BinEstimate> per_bin;
  Energy total;
  // Present only when every bin carries a prefill/decode split.
  std::optional<Energy> prefill_total;
  std::optional<Energy> decode_total;
  std::uint64_t excluded_requests = 0;

  std::uint64_t binned_requests() const {
    std::uint64_t n = 0;
    for (const auto& b : per_bin) n += b.count;
    return n;
  }
};

struct EstimateOptions {
  BatchMode mode = BatchMode::kFractional;
  LookupPolicy lookup = LookupPolicy::kStrict;
  std::string dataset = "workload";
  std::string label;
};

inline double batch_count(std::uint64_t count, std::uint64_t max_batch,
                          BatchMode mode) {
  if (mode == BatchMode::kCeiling) {
    return static_cast<double>((count + max_batch - 1) / max_batch);
  }
  return static_cast<double>(count) / static_cast<double>(max_batch);
}

/// Estimated energy of serving `workload` on one backend/device: for each
/// nonzero bin, batches(count, B) times the measured full-batch energy.
/// Excluded requests are reported but never charged.
inline WorkloadEstimate estimate(const BinnedWorkload& workload,
                                 const MeasurementTable& table,
                                 const std::string& backend,
                                 const std::string& device,
                                 const EstimateOptions& options = {}) {
  WorkloadEstimate out;
  out.dataset = options.dataset;
  out.label = options.label.empty() ? backend : options.label;
  out.backend = backend;
  out.device = device;
  out.mode = options.mode;
  out.excluded_requests = workload.excluded();

  bool split_everywhere = true;
  Energy prefill_sum, decode_sum;
  for (const auto& [bin, count] : workload.counts()) {
    if (count == 0) continue;
    LookupResult found = lookup(table, backend, device, bin, options.lookup);
    const MeasurementRecord& rec = found.record;
    BinEstimate be;
    be.bin = bin;
    be.count = count;
    be.max_batch = rec.max_batch;
    be.batches = batch_count(count, rec.max_batch, options.mode);
    be.energy = rec.batch_energy * be.batches;
    if (rec.has_split()) {
      be.prefill_energy = *rec.prefill_energy * be.batches;
      be.decode_energy = *rec.decode_energy * be.batches;
      prefill_sum += *be.prefill_energy;
      decode_sum += *be.decode_energy;
    } else {
      split_everywhere = false;
    }
    be.provenance = found.provenance;
    out.total += be.energy;
    out.per_bin.push_back(be);
  }
  if (split_everywhere && !out.per_bin.empty()) {
    out.prefill_total = prefill_sum;
    out.decode_total = decode_sum;
  }
  return out;
}

}  // namespace llmenergy
