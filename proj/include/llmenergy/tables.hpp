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
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "llmenergy/core.hpp"
#include "llmenergy/error.hpp"
#include "llmenergy/flops.hpp"
#include "llmenergy/text.hpp"

namespace llmenergy {

/// Measured cost of one full batch at the largest batch size that fits, for
/// one (backend, device, bin). Per-request energy is derived, never stored.
struct MeasurementRecord {
  std::string backend;
  std::string device;
  Bin bin;
  std::uint64_t max_batch = 0;
  Energy batch_energy;
  std::optional<Energy> prefill_energy;
  std::optional<Energy> decode_energy;
  std::uint64_t samples_measured = 1;
  std::uint64_t warmup_batches = 0;

  double per_request_joules() const {
    return batch_energy.joules() / static_cast<double>(max_batch);
  }
  bool has_split() const { return prefill_energy && decode_energy; }

  // Relative tolerance on |prefill + decode - batch| when both are present.
  static constexpr double kSplitTolerance = 0.005;

  void validate() const {
    const std::string where = backend + "/" + device + " " + to_string(bin);
    if (max_batch < 1) throw DataError(where + ": max_batch must be >= 1");
    if (!(batch_energy.joules() > 0.0)) {
      throw DataError(where + ": batch_energy must be positive");
    }
    if (samples_measured < 1) {
      throw DataError(where + ": samples_measured must be >= 1");
    }
    if (has_split()) {
      const double sum = prefill_energy->joules() + decode_energy->joules();
      if (std::abs(sum - batch_energy.joules()) >
          kSplitTolerance * batch_energy.joules()) {
        throw DataError(where +
                        ": prefill + decode differs from batch_energy by more "
                        "than 0.5%");
      }
    }
  }
};

struct TableMetadata {
  BinGrid grid = BinGrid::default_grid();
  std::uint64_t protocol_samples = 1024;
  std::string normalization_note;
  std::string padding_policy;
};

struct RecordKey {
  std::string backend;
  std::string device;
  Bin bin;
  friend auto operator<=>(const RecordKey&, const RecordKey&) = default;
};

class MeasurementTable {
 public:
  explicit MeasurementTable(TableMetadata metadata = {})
      : metadata_(std::move(metadata)) {
    if (metadata_.protocol_samples == 0) {
      throw DataError("protocol_samples must be positive");
    }
  }

  const TableMetadata& metadata() const { return metadata_; }
  const std::map<RecordKey, MeasurementRecord>& records() const {
    return records_;
  }
  std::size_t size() const { return records_.size(); }

  void add(MeasurementRecord record) {
    record.validate();
    if (!metadata_.grid.contains(record.bin)) {
      throw DataError("bin " + to_string(record.bin) + " for " +
                      record.backend + "/" + record.device +
                      " is not on the table grid");
    }
    RecordKey key{record.backend, record.device, record.bin};
    if (records_.count(key)) {
      throw DataError("duplicate record for " + record.backend + "/" +
                      record.device + " " + to_string(record.bin));
    }
    records_.emplace(std::move(key), std::move(record));
  }

  const MeasurementRecord* find(const std::string& backend,
                                const std::string& device,
                                const Bin& bin) const {
    auto it = records_.find(RecordKey{backend, device, bin});
    return it == records_.end() ? nullptr : &it->second;
  }

  std::set<std::pair<std::string, std::string>> configurations() const {
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& [key, rec] : records_) out.emplace(key.backend, key.device);
    return out;
  }

 private:
  TableMetadata metadata_;
  std::map<RecordKey, MeasurementRecord> records_;
};

// ---------------------------------------------------------------------------
// csv schema

inline constexpr std::string_view kTableColumns[] = {
    "backend",        "device",           "input_cap",     "output_cap",
    "max_batch",      "batch_energy",     "energy_unit",   "prefill_energy",
    "decode_energy",  "samples_measured", "warmup_batches"};

/// Reads a measurement table. Leading `# key=value` lines carry metadata
/// (input_bins, output_bins, protocol_samples, normalization_note,
/// padding_policy); the header row must name every schema column, and extra
/// columns are ignored.
inline MeasurementTable read_table(std::istream& in,
                                   std::string_view origin = "<table>") {
  auto fail = [&](std::size_t line_no, const std::string& what) {
    return DataError(std::string(origin) + ":" + std::to_string(line_no) +
                     ": " + what);
  };
  KeyValues meta;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) strip_utf8_bom(line);
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      view = trim(view.substr(1));
      if (auto eq = view.find('='); eq != std::string_view::npos) {
        meta[std::string(trim(view.substr(0, eq)))] =
            std::string(trim(view.substr(eq + 1)));
      }
      continue;
    }
    header = split_csv_record(view);
    break;
  }
  if (header.empty()) throw fail(line_no, "missing header row");

  std::map<std::string_view, std::size_t> col;
  for (std::string_view name : kTableColumns) {
    auto it = std::find_if(header.begin(), header.end(), [&](const auto& h) {
      return trim(h) == name;
    });
    if (it == header.end()) {
      throw fail(line_no, "missing column '" + std::string(name) + "'");
    }
    col[name] = static_cast<std::size_t>(it - header.begin());
  }

  TableMetadata metadata;
  if (meta.count("input_bins") || meta.count("output_bins")) {
    metadata.grid = bin_grid_from(meta);
  }
  if (auto it = meta.find("protocol_samples"); it != meta.end()) {
    auto n = parse_unsigned(it->second);
    if (!n || *n == 0) {
      throw DataError(std::string(origin) +
                      ": protocol_samples must be a positive integer");
    }
    metadata.protocol_samples = *n;
  }
  if (auto it = meta.find("normalization_note"); it != meta.end()) {
    metadata.normalization_note = it->second;
  }
  if (auto it = meta.find("padding_policy"); it != meta.end()) {
    metadata.padding_policy = it->second;
  }
  MeasurementTable table(std::move(metadata));

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto fields = split_csv_record(view);
    if (fields.size() < header.size()) {
      throw fail(line_no, "expected " + std::to_string(header.size()) +
                              " fields, got " + std::to_string(fields.size()));
    }
    auto field = [&](std::string_view name) {
      return trim(fields[col.at(name)]);
    };
    auto integer = [&](std::string_view name) {
      auto v = parse_unsigned(field(name));
      if (!v) {
        throw fail(line_no, std::string(name) + " is not a nonnegative integer");
      }
      return *v;
    };
    try {
      const EnergyUnit unit = parse_energy_unit(field("energy_unit"));
      auto energy = [&](std::string_view name) -> std::optional<Energy> {
        std::string_view text = field(name);
        if (text.empty()) return std::nullopt;
        auto v = parse_double(text);
        if (!v) throw fail(line_no, std::string(name) + " is not a number");
        if (!(*v >= 0.0)) {
          throw fail(line_no, std::string(name) + " must be nonnegative");
        }
        return Energy::from(*v, unit);
      };
      MeasurementRecord rec;
      rec.backend = std::string(field("backend"));
      rec.device = std::string(field("device"));
      rec.bin = Bin{integer("input_cap"), integer("output_cap")};
      rec.max_batch = integer("max_batch");
      auto batch = energy("batch_energy");
      if (!batch) throw fail(line_no, "batch_energy is required");
      rec.batch_energy = *batch;
      rec.prefill_energy = energy("prefill_energy");
      rec.decode_energy = energy("decode_energy");
      rec.samples_measured = integer("samples_measured");
      rec.warmup_batches = integer("warmup_batches");
      table.add(std::move(rec));
    } catch (const DataError&) {
      throw;
    } catch (const Error& e) {
      throw fail(line_no, e.what());
    }
  }
  return table;
}

inline MeasurementTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open table file '" + path + "'");
  try {
    return read_table(in, path);
  } catch (const DataError&) {
    throw;
  } catch (const Error& e) {
    throw DataError(path + ": " + e.what());
  }
}

namespace detail {

inline std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"") == std::string_view::npos) {
    return std::string(text);
  }
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

/// Writes the table in joules with round-trip precision.
inline void write_table(std::ostream& out, const MeasurementTable& table) {
  const TableMetadata& m = table.metadata();
  out << "# input_bins=" << format_axis(m.grid.input_bins()) << '\n'
      << "# output_bins=" << format_axis(m.grid.output_bins()) << '\n'
      << "# protocol_samples=" << m.protocol_samples << '\n';
  if (!m.normalization_note.empty()) {
    out << "# normalization_note=" << m.normalization_note << '\n';
  }
  if (!m.padding_policy.empty()) {
    out << "# padding_policy=" << m.padding_policy << '\n';
  }
  for (std::size_t k = 0; k < std::size(kTableColumns); ++k) {
    out << (k ? "," : "") << kTableColumns[k];
  }
  out << '\n';
  auto optional_joules = [](const std::optional<Energy>& e) {
    return e ? format_double(e->joules()) : std::string();
  };
  for (const auto& [key, r] : table.records()) {
    out << detail::csv_field(r.backend) << ',' << detail::csv_field(r.device)
        << ',' << r.bin.input_cap << ',' << r.bin.output_cap << ','
        << r.max_batch << ',' << format_double(r.batch_energy.joules())
        << ",J," << optional_joules(r.prefill_energy) << ','
        << optional_joules(r.decode_energy) << ',' << r.samples_measured
        << ',' << r.warmup_batches << '\n';
  }
}

// ---------------------------------------------------------------------------
// lookup

enum class LookupPolicy { kStrict, kInterpolate };
enum class Provenance { kMeasured, kInterpolated };

inline std::string_view to_string(Provenance p) {
  return p == Provenance::kMeasured ? "measured" : "interpolated";
}

struct LookupResult {
  MeasurementRecord record;
  Provenance provenance = Provenance::kMeasured;
};

namespace detail {

// Log-log bilinear interpolation of per-request energy from the tightest
// measured rectangle that brackets `bin`. Degenerate sides (a measured row or
// column through the target) reduce to linear interpolation.
inline std::optional<MeasurementRecord> interpolate(
    const MeasurementTable& table, const std::string& backend,
    const std::string& device, const Bin& bin) {
  std::set<TokenCount> inputs, outputs;
  for (const auto& [key, rec] : table.records()) {
    if (key.backend == backend && key.device == device) {
      inputs.insert(key.bin.input_cap);
      outputs.insert(key.bin.output_cap);
    }
  }
  auto below = [](const std::set<TokenCount>& s, TokenCount v) {
    std::vector<TokenCount> out;
    for (auto it = s.begin(); it != s.end() && *it <= v; ++it) out.push_back(*it);
    std::reverse(out.begin(), out.end());
    return out;
  };
  auto above = [](const std::set<TokenCount>& s, TokenCount v) {
    return std::vector<TokenCount>(s.lower_bound(v), s.end());
  };
  const auto i_lo = below(inputs, bin.input_cap);
  const auto i_hi = above(inputs, bin.input_cap);
  const auto o_lo = below(outputs, bin.output_cap);
  const auto o_hi = above(outputs, bin.output_cap);

  using Corners = std::array<const MeasurementRecord*, 4>;
  std::optional<std::tuple<double, TokenCount, TokenCount, TokenCount,
                           TokenCount, Corners>>
      best;
  for (TokenCount a : i_lo) {
    for (TokenCount b : i_hi) {
      for (TokenCount c : o_lo) {
        for (TokenCount d : o_hi) {
          Corners corners = {table.find(backend, device, {a, c}),
                             table.find(backend, device, {a, d}),
                             table.find(backend, device, {b, c}),
                             table.find(backend, device, {b, d})};
          if (std::find(corners.begin(), corners.end(), nullptr) !=
              corners.end()) {
            continue;
          }
          const double span = std::log(static_cast<double>(b) / a) +
                              std::log(static_cast<double>(d) / c);
          if (!best || span < std::get<0>(*best)) {
            best = std::tuple{span, a, b, c, d, corners};
          }
        }
      }
    }
  }
  if (!best) return std::nullopt;

  auto [span, a, b, c, d, corners] = *best;
  auto weight = [](TokenCount lo, TokenCount hi, TokenCount v) {
    if (lo == hi) return 0.0;
    return std::log(static_cast<double>(v) / lo) /
           std::log(static_cast<double>(hi) / lo);
  };
  const double ti = weight(a, b, bin.input_cap);
  const double to = weight(c, d, bin.output_cap);
  auto log_e = [](const MeasurementRecord* r) {
    return std::log(r->per_request_joules());
  };
  const double log_energy = (1 - ti) * (1 - to) * log_e(corners[0]) +
                            (1 - ti) * to * log_e(corners[1]) +
                            ti * (1 - to) * log_e(corners[2]) +
                            ti * to * log_e(corners[3]);

  MeasurementRecord rec;
  rec.backend = backend;
  rec.device = device;
  rec.bin = bin;
  rec.max_batch = corners[0]->max_batch;
  rec.samples_measured = corners[0]->samples_measured;
  for (const MeasurementRecord* r : corners) {
    rec.max_batch = std::min(rec.max_batch, r->max_batch);
    rec.samples_measured = std::min(rec.samples_measured, r->samples_measured);
  }
  rec.batch_energy = Energy::from_joules(std::exp(log_energy) *
                                         static_cast<double>(rec.max_batch));
  return rec;
}

}  // namespace detail

/// Finds the record for (backend, device, bin). Strict mode requires an exact
/// measurement; interpolation mode synthesizes one from measured neighbours
/// and flags it. The interpolated record uses the smallest neighbouring
/// max_batch and carries no prefill/decode split.
inline LookupResult lookup(const MeasurementTable& table,
                           const std::string& backend,
                           const std::string& device, const Bin& bin,
                           LookupPolicy policy = LookupPolicy::kStrict) {
  if (const MeasurementRecord* rec = table.find(backend, device, bin)) {
    return {*rec, Provenance::kMeasured};
  }
  const std::string where = "bin " + to_string(bin) + " for backend '" +
                            backend + "' on device '" + device + "'";
  if (policy == LookupPolicy::kStrict) {
    throw DataError("no measurement for " + where);
  }
  auto rec = detail::interpolate(table, backend, device, bin);
  if (!rec) {
    throw DataError("cannot interpolate " + where +
                    ": outside the hull of measured bins");
  }
  return {std::move(*rec), Provenance::kInterpolated};
}

// ---------------------------------------------------------------------------
// synthetic tables

struct SynthesisOptions {
  double efficiency = 1.0;      // fraction of peak FLOPS at TDP, in (0, 1]
  double decode_penalty = 1.0;  // multiplier on decode FLOPs, >= 1
  std::string backend = "synthetic";
  double device_memory_bytes = 48e9;
  double bytes_per_param = 2.0;
  // Bytes of KV cache per token; derived from the model when unset.
  std::optional<double> kv_bytes_per_token;
  std::uint64_t max_batch_cap = 1024;
  std::uint64_t samples_measured = 1024;
  std::uint64_t warmup_batches = 20;
};

// 2 (K and V) * layers * kv heads * head_dim * bytes per element.
inline double default_kv_bytes_per_token(const ModelConfig& model,
                                         double bytes_per_element = 2.0) {
  return 2.0 * static_cast<double>(model.n_layers * model.n_kv_heads *
                                   model.head_dim()) *
         bytes_per_element;
}

/// Largest batch whose KV cache fits next to the weights, in [1, cap].
inline std::uint64_t heuristic_max_batch(const ModelConfig& model,
                                         const Bin& bin,
                                         const SynthesisOptions& opt) {
  const double kv = opt.kv_bytes_per_token.value_or(
      default_kv_bytes_per_token(model, opt.bytes_per_param));
  const double weights =
      static_cast<double>(effective_param_count(model)) * opt.bytes_per_param;
  const double free_bytes = opt.device_memory_bytes - weights;
  const double per_request =
      kv * static_cast<double>(bin.input_cap + bin.output_cap);
  if (free_bytes <= 0.0 || per_request <= 0.0) return 1;
  const double fit = std::floor(free_bytes / per_request);
  if (fit < 1.0) return 1;
  if (fit >= static_cast<double>(opt.max_batch_cap)) return opt.max_batch_cap;
  return static_cast<std::uint64_t>(fit);
}

/// Builds a full-grid table from the analytic FLOPs model:
/// batch_energy = B * (prefill + penalty * decode) FLOPs * J/FLOP / efficiency.
inline MeasurementTable synthesize_table(const BinGrid& grid,
                                         const ModelConfig& model,
                                         const HardwareSpec& hw,
                                         const SynthesisOptions& opt = {}) {
  if (!(opt.efficiency > 0.0 && opt.efficiency <= 1.0)) {
    throw InvalidArgument("efficiency must be in (0, 1]");
  }
  if (!(opt.decode_penalty >= 1.0) || !std::isfinite(opt.decode_penalty)) {
    throw InvalidArgument("decode_penalty must be >= 1");
  }
  if (opt.max_batch_cap < 1) {
    throw InvalidArgument("max_batch_cap must be >= 1");
  }
  model.validate();
  const double ratio = joules_per_flop(hw);

  TableMetadata meta;
  meta.grid = grid;
  meta.protocol_samples = opt.samples_measured;
  meta.normalization_note = "synthetic: analytic FLOPs at efficiency " +
                            format_double(opt.efficiency) +
                            " and decode penalty " +
                            format_double(opt.decode_penalty);
  meta.padding_policy = "requests charged at bin caps";
  MeasurementTable table(std::move(meta));

  for (const Bin& bin : grid.bins()) {
    const FlopsBreakdown flops =
        request_flops(model, bin.input_cap, bin.output_cap);
    const std::uint64_t batch = heuristic_max_batch(model, bin, opt);
    const double b = static_cast<double>(batch);
    double effective_flops;
    if (opt.decode_penalty == 1.0) {
      effective_flops = static_cast<double>(flops.total());
    } else {
      effective_flops = static_cast<double>(flops.prefill_flops) +
                        static_cast<double>(flops.decode_flops) *
                            opt.decode_penalty;
    }
    MeasurementRecord rec;
    rec.backend = opt.backend;
    rec.device = hw.name;
    rec.bin = bin;
    rec.max_batch = batch;
    rec.batch_energy =
        Energy::from_joules(b * effective_flops * ratio / opt.efficiency);
    rec.prefill_energy = Energy::from_joules(
        b * static_cast<double>(flops.prefill_flops) * ratio / opt.efficiency);
    rec.decode_energy = Energy::from_joules(
        b * static_cast<double>(flops.decode_flops) * opt.decode_penalty *
        ratio / opt.efficiency);
    rec.samples_measured = opt.samples_measured;
    rec.warmup_batches = opt.warmup_batches;
    table.add(std::move(rec));
  }
  return table;
}

}  // namespace llmenergy
