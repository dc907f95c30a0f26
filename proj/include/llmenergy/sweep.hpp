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

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmenergy/core.hpp"
#include "llmenergy/error.hpp"
#include "llmenergy/tables.hpp"
#include "llmenergy/text.hpp"

namespace llmenergy {

enum class SweepAxis { kInputLength, kOutputLength, kBatchSize };

inline std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kInputLength: return "input_length";
    case SweepAxis::kOutputLength: return "output_length";
    case SweepAxis::kBatchSize: return "batch_size";
  }
  return "input_length";
}

inline SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "input_length") return SweepAxis::kInputLength;
  if (name == "output_length") return SweepAxis::kOutputLength;
  if (name == "batch_size") return SweepAxis::kBatchSize;
  throw InvalidArgument("unknown sweep axis '" + std::string(name) + "'");
}

// Measurement protocol: 1024 samples per point, or 4096 normalized back when
// any batch in the plan exceeds 256.
inline constexpr std::uint64_t kProtocolSamples = 1024;
inline constexpr std::uint64_t kLargeBatchSamples = 4096;
inline constexpr std::uint64_t kLargeBatchThreshold = 256;

inline bool is_power_of_two(std::uint64_t v) { return v && !(v & (v - 1)); }

inline std::vector<std::uint64_t> powers_of_two(std::uint64_t lo,
                                                std::uint64_t hi) {
  if (!is_power_of_two(lo) || !is_power_of_two(hi) || lo > hi) {
    throw InvalidArgument("power-of-two range needs power-of-two bounds lo <= hi");
  }
  std::vector<std::uint64_t> out;
  for (std::uint64_t v = lo; v <= hi; v *= 2) out.push_back(v);
  return out;
}

/// One controlled sweep: `points` vary along `axis`, the other two
/// dimensions are fixed. A sequence sweep with no fixed batch is meant to be
/// crossed with a batch sweep by the harness.
struct SweepPlan {
  SweepAxis axis = SweepAxis::kInputLength;
  std::optional<std::uint64_t> fixed_input;
  std::optional<std::uint64_t> fixed_output;
  std::optional<std::uint64_t> fixed_batch;
  std::vector<std::uint64_t> points;
  std::uint64_t samples_per_point = kProtocolSamples;
  std::uint64_t warmup_batches = 20;
  std::string truncation_source;
  bool allow_non_power_of_two = false;

  std::uint64_t largest_batch() const {
    if (axis == SweepAxis::kBatchSize) {
      return points.empty() ? 0 : points.back();
    }
    return fixed_batch.value_or(0);
  }
  bool needs_normalization() const {
    return largest_batch() > kLargeBatchThreshold;
  }
  std::uint64_t required_samples() const {
    return needs_normalization() ? kLargeBatchSamples : kProtocolSamples;
  }

  void validate() const {
    if (points.empty()) throw InvalidArgument("sweep plan has no points");
    for (std::size_t k = 0; k < points.size(); ++k) {
      if (points[k] == 0) throw InvalidArgument("sweep points must be positive");
      if (k && points[k] <= points[k - 1]) {
        throw InvalidArgument("sweep points must be strictly increasing");
      }
      if (!allow_non_power_of_two && !is_power_of_two(points[k])) {
        throw InvalidArgument("sweep point " + std::to_string(points[k]) +
                              " is not a power of two (set the override to "
                              "allow it)");
      }
    }
    const bool input_fixed_ok = axis == SweepAxis::kInputLength
                                    ? !fixed_input.has_value()
                                    : fixed_input.has_value();
    const bool output_fixed_ok = axis == SweepAxis::kOutputLength
                                     ? !fixed_output.has_value()
                                     : fixed_output.has_value();
    if (!input_fixed_ok || !output_fixed_ok ||
        (axis == SweepAxis::kBatchSize && fixed_batch)) {
      throw InvalidArgument(
          "sweep plan must fix exactly the non-swept sequence dimensions");
    }
    if (samples_per_point != required_samples()) {
      throw InvalidArgument(
          "samples_per_point must be " + std::to_string(required_samples()) +
          " for this plan (4096 only when some batch exceeds 256)");
    }
  }

  std::string file_name() const {
    std::string desc;
    auto add = [&](std::string_view key, std::optional<std::uint64_t> v) {
      if (!v) return;
      if (!desc.empty()) desc += '_';
      desc += std::string(key) + std::to_string(*v);
    };
    add("input", fixed_input);
    add("output", fixed_output);
    add("batch", fixed_batch);
    return "sweep_" + std::string(to_string(axis)) + "_" + desc + ".cfg";
  }
};

inline SweepPlan make_sweep_plan(SweepAxis axis,
                                 std::optional<std::uint64_t> fixed_input,
                                 std::optional<std::uint64_t> fixed_output,
                                 std::optional<std::uint64_t> fixed_batch,
                                 std::vector<std::uint64_t> points,
                                 std::uint64_t warmup_batches = 20,
                                 std::string truncation_source = "PG19",
                                 bool allow_non_power_of_two = false) {
  SweepPlan plan;
  plan.axis = axis;
  plan.fixed_input = fixed_input;
  plan.fixed_output = fixed_output;
  plan.fixed_batch = fixed_batch;
  plan.points = std::move(points);
  plan.warmup_batches = warmup_batches;
  plan.truncation_source = std::move(truncation_source);
  plan.allow_non_power_of_two = allow_non_power_of_two;
  plan.samples_per_point = plan.required_samples();
  plan.validate();
  return plan;
}

struct SweepOptions {
  std::uint64_t min_input = 32;
  std::uint64_t max_input = 32768;
  std::uint64_t min_output = 8;
  std::uint64_t max_output = 4096;
  std::uint64_t min_batch = 1;
  std::uint64_t max_batch = 1024;
  std::vector<std::uint64_t> fixed_outputs = {64, 8};   // for input sweeps
  std::vector<std::uint64_t> fixed_inputs = {512, 64};  // for output sweeps
  std::uint64_t warmup_batches = 20;
  std::string truncation_source = "PG19";
};

/// The controlled sweeps: input lengths at each fixed output, output lengths
/// at each fixed input, and batch sizes at the paired (input, output)
/// settings (512, 64) and (64, 8).
inline std::vector<SweepPlan> plan_paper_sweeps(const SweepOptions& opt = {}) {
  if (opt.fixed_inputs.size() != opt.fixed_outputs.size()) {
    throw InvalidArgument("fixed_inputs and fixed_outputs must pair up");
  }
  std::vector<SweepPlan> plans;
  const auto inputs = powers_of_two(opt.min_input, opt.max_input);
  const auto outputs = powers_of_two(opt.min_output, opt.max_output);
  const auto batches = powers_of_two(opt.min_batch, opt.max_batch);
  for (std::uint64_t out : opt.fixed_outputs) {
    plans.push_back(make_sweep_plan(SweepAxis::kInputLength, std::nullopt, out,
                                    std::nullopt, inputs, opt.warmup_batches,
                                    opt.truncation_source));
  }
  for (std::uint64_t in : opt.fixed_inputs) {
    plans.push_back(make_sweep_plan(SweepAxis::kOutputLength, in, std::nullopt,
                                    std::nullopt, outputs, opt.warmup_batches,
                                    opt.truncation_source));
  }
  for (std::size_t k = 0; k < opt.fixed_inputs.size(); ++k) {
    plans.push_back(make_sweep_plan(SweepAxis::kBatchSize, opt.fixed_inputs[k],
                                    opt.fixed_outputs[k], std::nullopt,
                                    batches, opt.warmup_batches,
                                    opt.truncation_source));
  }
  return plans;
}

// ---------------------------------------------------------------------------
// plan files

inline void write_plan(std::ostream& out, const SweepPlan& plan) {
  auto opt = [](std::optional<std::uint64_t> v) {
    return v ? std::to_string(*v) : std::string();
  };
  if (plan.needs_normalization()) {
    out << "# batches above " << kLargeBatchThreshold << " run over "
        << kLargeBatchSamples << " samples; normalize metrics to "
        << kProtocolSamples << "\n";
  }
  out << "axis=" << to_string(plan.axis) << '\n'
      << "fixed_input=" << opt(plan.fixed_input) << '\n'
      << "fixed_output=" << opt(plan.fixed_output) << '\n'
      << "fixed_batch=" << opt(plan.fixed_batch) << '\n'
      << "points=" << format_axis(plan.points) << '\n'
      << "samples_per_point=" << plan.samples_per_point << '\n'
      << "warmup_batches=" << plan.warmup_batches << '\n'
      << "truncation_source=" << plan.truncation_source << '\n';
  if (plan.allow_non_power_of_two) out << "allow_non_power_of_two=true\n";
}

inline SweepPlan read_plan(std::istream& in,
                           std::string_view origin = "<plan>") {
  const KeyValues kv = parse_key_values(in, origin);
  auto get = [&](std::string_view key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) {
      throw DataError(std::string(origin) + ": missing key '" +
                      std::string(key) + "'");
    }
    return it->second;
  };
  auto opt = [&](std::string_view key) -> std::optional<std::uint64_t> {
    std::string text = get(key);
    if (text.empty()) return std::nullopt;
    auto v = parse_unsigned(text);
    if (!v) throw DataError(std::string(origin) + ": bad " + std::string(key));
    return v;
  };
  try {
    SweepPlan plan;
    plan.axis = parse_sweep_axis(get("axis"));
    plan.fixed_input = opt("fixed_input");
    plan.fixed_output = opt("fixed_output");
    plan.fixed_batch = opt("fixed_batch");
    plan.points = parse_axis(get("points"), "points");
    auto samples = opt("samples_per_point");
    auto warmup = opt("warmup_batches");
    if (!samples || !warmup) {
      throw DataError("samples_per_point and warmup_batches are required");
    }
    plan.samples_per_point = *samples;
    plan.warmup_batches = *warmup;
    plan.truncation_source = get("truncation_source");
    if (auto it = kv.find("allow_non_power_of_two"); it != kv.end()) {
      plan.allow_non_power_of_two = it->second == "true";
    }
    plan.validate();
    return plan;
  } catch (const Error& e) {
    throw DataError(std::string(origin) + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// table coverage

struct PlanCoverage {
  std::set<std::uint64_t> inputs;
  std::set<std::uint64_t> outputs;

  bool covers(const Bin& bin) const {
    return inputs.count(bin.input_cap) && outputs.count(bin.output_cap);
  }
};

/// Cross product of every input length and every output length that some
/// plan measures, either as a swept point or as a fixed value.
inline PlanCoverage plan_coverage(const std::vector<SweepPlan>& plans) {
  PlanCoverage c;
  for (const SweepPlan& p : plans) {
    if (p.fixed_input) c.inputs.insert(*p.fixed_input);
    if (p.fixed_output) c.outputs.insert(*p.fixed_output);
    if (p.axis == SweepAxis::kInputLength) {
      c.inputs.insert(p.points.begin(), p.points.end());
    } else if (p.axis == SweepAxis::kOutputLength) {
      c.outputs.insert(p.points.begin(), p.points.end());
    }
  }
  return c;
}

struct ConfigurationCoverage {
  std::string backend;
  std::string device;
  std::vector<Bin> missing;
};

struct CoverageReport {
  std::size_t required_bins = 0;
  std::vector<Bin> unplanned;  // grid bins no plan reaches
  std::vector<ConfigurationCoverage> configurations;

  bool full() const {
    if (configurations.empty()) return false;
    return std::all_of(configurations.begin(), configurations.end(),
                       [](const auto& c) { return c.missing.empty(); });
  }
  std::size_t missing_count() const {
    std::size_t n = 0;
    for (const auto& c : configurations) n += c.missing.size();
    return n;
  }
};

/// Lists, per (backend, device), the table-grid bins reachable from the plans
/// that have no record.
inline CoverageReport validate_table_against_plan(
    const MeasurementTable& table, const std::vector<SweepPlan>& plans) {
  const PlanCoverage coverage = plan_coverage(plans);
  std::vector<Bin> required;
  CoverageReport report;
  for (const Bin& bin : table.metadata().grid.bins()) {
    (coverage.covers(bin) ? required : report.unplanned).push_back(bin);
  }
  report.required_bins = required.size();
  for (const auto& [backend, device] : table.configurations()) {
    ConfigurationCoverage c{backend, device, {}};
    for (const Bin& bin : required) {
      if (!table.find(backend, device, bin)) c.missing.push_back(bin);
    }
    report.configurations.push_back(std::move(c));
  }
  return report;
}

inline nlohmann::ordered_json to_json(const CoverageReport& r) {
  using nlohmann::ordered_json;
  auto bins = [](const std::vector<Bin>& v) {
    ordered_json a = ordered_json::array();
    for (const Bin& b : v) a.push_back({b.input_cap, b.output_cap});
    return a;
  };
  ordered_json configs = ordered_json::array();
  for (const auto& c : r.configurations) {
    configs.push_back({{"backend", c.backend},
                       {"device", c.device},
                       {"missing", bins(c.missing)}});
  }
  return ordered_json{{"coverage", r.full() ? "full" : "partial"},
                      {"required_bins", r.required_bins},
                      {"missing_total", r.missing_count()},
                      {"configurations", std::move(configs)},
                      {"unplanned_bins", bins(r.unplanned)}};
}

}  // namespace llmenergy
