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
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "llmenergy/binning.hpp"
#include "llmenergy/core.hpp"
#include "llmenergy/error.hpp"
#include "llmenergy/estimator.hpp"
#include "llmenergy/flops.hpp"
#include "llmenergy/ingest.hpp"

namespace llmenergy {

inline constexpr int kReportSchemaVersion = 1;

enum class ReportFormat { kJson, kCsv, kMarkdown };

inline ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "markdown" || name == "md" || name == "markdown-table") {
    return ReportFormat::kMarkdown;
  }
  throw InvalidArgument("unknown report format '" + std::string(name) +
                        "' (expected json, csv or markdown)");
}

// ---------------------------------------------------------------------------
// comparison

struct ComparisonEntry {
  std::string label;
  Energy energy;
  double pct_delta_vs_optimal = 0.0;
  std::optional<double> savings_vs_reference;  // absent for the reference
};

struct Comparison {
  std::string dataset;
  BatchMode mode = BatchMode::kFractional;
  Energy baseline;
  std::string reference_label;
  std::vector<ComparisonEntry> entries;  // ascending energy
  std::uint64_t excluded_requests = 0;
};

inline double pct_delta(Energy energy, Energy baseline) {
  return 100.0 * (energy.joules() - baseline.joules()) / baseline.joules();
}

inline double savings_pct(Energy energy, Energy reference) {
  return 100.0 * (1.0 - energy.joules() / reference.joules());
}

/// Relates each estimate to the idealized baseline and to a reference
/// configuration. All estimates must describe the same workload.
inline Comparison compare(std::span<const WorkloadEstimate> estimates,
                          Energy optimal, const std::string& reference_label) {
  if (!(optimal.joules() > 0.0)) {
    throw InvalidArgument("baseline energy must be positive");
  }
  if (estimates.empty()) throw InvalidArgument("no estimates to compare");

  const WorkloadEstimate& first = estimates.front();
  std::set<std::string> labels;
  const WorkloadEstimate* reference = nullptr;
  for (const WorkloadEstimate& e : estimates) {
    if (!labels.insert(e.label).second) {
      throw InvalidArgument("duplicate estimate label '" + e.label + "'");
    }
    if (e.dataset != first.dataset) {
      throw InvalidArgument("estimates cover different datasets ('" +
                            first.dataset + "' vs '" + e.dataset + "')");
    }
    if (e.mode != first.mode) {
      throw InvalidArgument("estimates use different batch modes");
    }
    if (e.excluded_requests != first.excluded_requests ||
        e.binned_requests() != first.binned_requests()) {
      throw InvalidArgument("estimates '" + first.label + "' and '" + e.label +
                            "' cover different workloads");
    }
    if (e.label == reference_label) reference = &e;
  }
  if (!reference) {
    throw InvalidArgument("reference label '" + reference_label +
                          "' not among the estimates");
  }
  if (!(reference->total.joules() > 0.0)) {
    throw InvalidArgument("reference estimate has zero energy");
  }

  Comparison out;
  out.dataset = first.dataset;
  out.mode = first.mode;
  out.baseline = optimal;
  out.reference_label = reference_label;
  out.excluded_requests = first.excluded_requests;
  for (const WorkloadEstimate& e : estimates) {
    ComparisonEntry entry;
    entry.label = e.label;
    entry.energy = e.total;
    entry.pct_delta_vs_optimal = pct_delta(e.total, optimal);
    if (e.label != reference_label) {
      entry.savings_vs_reference = savings_pct(e.total, reference->total);
    }
    out.entries.push_back(std::move(entry));
  }
  std::sort(out.entries.begin(), out.entries.end(),
            [](const ComparisonEntry& a, const ComparisonEntry& b) {
              if (a.energy != b.energy) return a.energy < b.energy;
              return a.label < b.label;
            });
  return out;
}

// ---------------------------------------------------------------------------
// idealized baseline report

struct BaselineBin {
  Bin bin;
  std::uint64_t count = 0;
  std::uint64_t flops_per_request = 0;
  Energy energy;
};

struct BaselineReport {
  std::string dataset = "workload";
  std::string hardware;
  double joules_per_flop = 0.0;
  double total_flops = 0.0;
  Energy energy;
  std::uint64_t excluded_requests = 0;
  std::vector<BaselineBin> per_bin;
};

inline BaselineReport compute_baseline(const HardwareSpec& hw,
                                       const ModelConfig& model,
                                       const BinnedWorkload& workload,
                                       std::string dataset = "workload") {
  BaselineReport out;
  out.dataset = std::move(dataset);
  out.hardware = hw.name;
  out.joules_per_flop = joules_per_flop(hw);
  out.excluded_requests = workload.excluded();
  for (const auto& [bin, count] : workload.counts()) {
    const std::uint64_t flops =
        request_flops(model, bin.input_cap, bin.output_cap).total();
    out.per_bin.push_back(
        {bin, count, flops,
         Energy::from_joules(static_cast<double>(count) *
                             static_cast<double>(flops) *
                             out.joules_per_flop)});
  }
  out.total_flops = workload_flops(model, workload);
  out.energy = idealized_energy(hw, model, workload);
  return out;
}

// ---------------------------------------------------------------------------
// json

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson optional_joules(const std::optional<Energy>& e) {
  return e ? ojson(e->joules()) : ojson(nullptr);
}

inline std::optional<Energy> read_optional_joules(const nlohmann::json& j,
                                                  const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return Energy::from_joules(it->get<double>());
}

inline ojson stats_json(const TraceStats& s) {
  return ojson{{"count", s.count},   {"mean", s.mean}, {"std", s.stddev},
               {"median", s.median}, {"p99", s.p99},   {"max", s.max}};
}

// Two decimals for percentages, six significant digits for kWh.
inline std::string pct(double v) { return fmt::format("{:.2f}", v); }
inline std::string kwh(Energy e) { return fmt::format("{:.6g}", e.kwh()); }

inline std::string csv_cell(std::string_view text) {
  if (text.find_first_of(",\"\n") == std::string_view::npos) {
    return std::string(text);
  }
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string md_cell(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const Comparison& c) {
  using detail::ojson;
  ojson entries = ojson::array();
  for (const ComparisonEntry& e : c.entries) {
    entries.push_back(
        {{"label", e.label},
         {"energy_j", e.energy.joules()},
         {"pct_delta_vs_optimal", e.pct_delta_vs_optimal},
         {"savings_vs_reference", e.savings_vs_reference
                                      ? ojson(*e.savings_vs_reference)
                                      : ojson(nullptr)}});
  }
  return ojson{{"schema_version", kReportSchemaVersion},
               {"dataset", c.dataset},
               {"mode", std::string(to_string(c.mode))},
               {"baseline_j", c.baseline.joules()},
               {"reference_label", c.reference_label},
               {"entries", std::move(entries)},
               {"excluded_requests", c.excluded_requests}};
}

inline nlohmann::ordered_json to_json(const WorkloadEstimate& w) {
  using detail::ojson;
  ojson bins = ojson::array();
  for (const BinEstimate& b : w.per_bin) {
    bins.push_back({{"input_cap", b.bin.input_cap},
                    {"output_cap", b.bin.output_cap},
                    {"count", b.count},
                    {"max_batch", b.max_batch},
                    {"batches", b.batches},
                    {"energy_j", b.energy.joules()},
                    {"prefill_j", detail::optional_joules(b.prefill_energy)},
                    {"decode_j", detail::optional_joules(b.decode_energy)},
                    {"provenance", std::string(to_string(b.provenance))}});
  }
  return ojson{{"schema_version", kReportSchemaVersion},
               {"kind", "estimate"},
               {"dataset", w.dataset},
               {"label", w.label},
               {"backend", w.backend},
               {"device", w.device},
               {"mode", std::string(to_string(w.mode))},
               {"total_j", w.total.joules()},
               {"prefill_j", detail::optional_joules(w.prefill_total)},
               {"decode_j", detail::optional_joules(w.decode_total)},
               {"excluded_requests", w.excluded_requests},
               {"bins", std::move(bins)}};
}

inline nlohmann::ordered_json to_json(const BaselineReport& r) {
  using detail::ojson;
  ojson bins = ojson::array();
  for (const BaselineBin& b : r.per_bin) {
    bins.push_back({{"input_cap", b.bin.input_cap},
                    {"output_cap", b.bin.output_cap},
                    {"count", b.count},
                    {"flops_per_request", b.flops_per_request},
                    {"energy_j", b.energy.joules()}});
  }
  return ojson{{"schema_version", kReportSchemaVersion},
               {"kind", "baseline"},
               {"dataset", r.dataset},
               {"hardware", r.hardware},
               {"joules_per_flop", r.joules_per_flop},
               {"total_flops", r.total_flops},
               {"baseline_j", r.energy.joules()},
               {"excluded_requests", r.excluded_requests},
               {"bins", std::move(bins)}};
}

inline nlohmann::ordered_json to_json(const TraceSummary& s,
                                      std::string_view dataset,
                                      std::size_t skipped_rows = 0) {
  return detail::ojson{{"schema_version", kReportSchemaVersion},
                       {"kind", "stats"},
                       {"dataset", std::string(dataset)},
                       {"requests", s.input.count},
                       {"skipped_rows", skipped_rows},
                       {"input", detail::stats_json(s.input)},
                       {"output", detail::stats_json(s.output)}};
}

/// Reads an estimate report written by to_json(WorkloadEstimate).
inline WorkloadEstimate estimate_from_json(const nlohmann::json& j) {
  try {
    if (j.at("kind").get<std::string>() != "estimate") {
      throw DataError("report is not an estimate");
    }
    if (j.at("schema_version").get<int>() != kReportSchemaVersion) {
      throw DataError("unsupported estimate schema_version");
    }
    WorkloadEstimate w;
    w.dataset = j.at("dataset").get<std::string>();
    w.label = j.at("label").get<std::string>();
    w.backend = j.at("backend").get<std::string>();
    w.device = j.at("device").get<std::string>();
    w.mode = parse_batch_mode(j.at("mode").get<std::string>());
    w.total = Energy::from_joules(j.at("total_j").get<double>());
    w.prefill_total = detail::read_optional_joules(j, "prefill_j");
    w.decode_total = detail::read_optional_joules(j, "decode_j");
    w.excluded_requests = j.at("excluded_requests").get<std::uint64_t>();
    for (const auto& b : j.at("bins")) {
      BinEstimate be;
      be.bin = {b.at("input_cap").get<TokenCount>(),
                b.at("output_cap").get<TokenCount>()};
      be.count = b.at("count").get<std::uint64_t>();
      be.max_batch = b.at("max_batch").get<std::uint64_t>();
      be.batches = b.at("batches").get<double>();
      be.energy = Energy::from_joules(b.at("energy_j").get<double>());
      be.prefill_energy = detail::read_optional_joules(b, "prefill_j");
      be.decode_energy = detail::read_optional_joules(b, "decode_j");
      const auto prov = b.at("provenance").get<std::string>();
      if (prov != "measured" && prov != "interpolated") {
        throw DataError("unknown provenance '" + prov + "'");
      }
      be.provenance = prov == "measured" ? Provenance::kMeasured
                                         : Provenance::kInterpolated;
      w.per_bin.push_back(be);
    }
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed estimate report: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("malformed estimate report: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// emitters

inline void emit_report(std::ostream& out, const Comparison& c,
                        ReportFormat format) {
  switch (format) {
    case ReportFormat::kJson:
      out << to_json(c).dump(2) << '\n';
      return;
    case ReportFormat::kCsv:
      out << "dataset,label,energy_kwh,pct_delta_vs_optimal,"
             "savings_vs_reference\n";
      out << detail::csv_cell(c.dataset) << ",theoretical,"
          << detail::kwh(c.baseline) << ",0.00,\n";
      for (const ComparisonEntry& e : c.entries) {
        out << detail::csv_cell(c.dataset) << ',' << detail::csv_cell(e.label)
            << ',' << detail::kwh(e.energy) << ','
            << detail::pct(e.pct_delta_vs_optimal) << ','
            << (e.savings_vs_reference ? detail::pct(*e.savings_vs_reference)
                                       : std::string())
            << '\n';
      }
      return;
    case ReportFormat::kMarkdown:
      out << "Dataset: " << c.dataset << " (" << to_string(c.mode)
          << " batches; idealized baseline " << detail::kwh(c.baseline)
          << " kWh; excluded requests: " << c.excluded_requests << ")\n\n";
      out << "| label | energy (kWh) | delta vs optimal (%) | savings vs "
          << detail::md_cell(c.reference_label) << " (%) |\n";
      out << "|---|---:|---:|---:|\n";
      for (const ComparisonEntry& e : c.entries) {
        out << "| " << detail::md_cell(e.label) << " | "
            << detail::kwh(e.energy) << " | "
            << detail::pct(e.pct_delta_vs_optimal) << " | "
            << (e.savings_vs_reference ? detail::pct(*e.savings_vs_reference)
                                       : std::string("-"))
            << " |\n";
      }
      return;
  }
}

inline void emit_report(std::ostream& out, const WorkloadEstimate& w,
                        ReportFormat format) {
  switch (format) {
    case ReportFormat::kJson:
      out << to_json(w).dump(2) << '\n';
      return;
    case ReportFormat::kCsv: {
      out << "dataset,label,input_cap,output_cap,count,max_batch,batches,"
             "energy_kwh,provenance\n";
      const std::string prefix =
          detail::csv_cell(w.dataset) + ',' + detail::csv_cell(w.label) + ',';
      double batches = 0.0;
      for (const BinEstimate& b : w.per_bin) {
        batches += b.batches;
        out << prefix << b.bin.input_cap << ',' << b.bin.output_cap << ','
            << b.count << ',' << b.max_batch << ','
            << fmt::format("{:.6g}", b.batches) << ',' << detail::kwh(b.energy)
            << ',' << to_string(b.provenance) << '\n';
      }
      out << prefix << "total,," << w.binned_requests() << ",,"
          << fmt::format("{:.6g}", batches) << ',' << detail::kwh(w.total)
          << ",\n";
      return;
    }
    case ReportFormat::kMarkdown:
      out << "Estimate: " << w.label << " (" << w.backend << " on "
          << w.device << ", " << to_string(w.mode) << " batches, dataset "
          << w.dataset << ")\n\n";
      out << "| input cap | output cap | requests | max batch | batches | "
             "energy (kWh) | source |\n";
      out << "|---:|---:|---:|---:|---:|---:|---|\n";
      for (const BinEstimate& b : w.per_bin) {
        out << "| " << b.bin.input_cap << " | " << b.bin.output_cap << " | "
            << b.count << " | " << b.max_batch << " | "
            << fmt::format("{:.6g}", b.batches) << " | "
            << detail::kwh(b.energy) << " | " << to_string(b.provenance)
            << " |\n";
      }
      out << "\nTotal: " << detail::kwh(w.total) << " kWh over "
          << w.binned_requests() << " requests";
      if (w.prefill_total && w.decode_total) {
        out << " (prefill " << detail::kwh(*w.prefill_total)
            << " kWh, decode " << detail::kwh(*w.decode_total) << " kWh)";
      }
      out << "\nExcluded requests (not charged): " << w.excluded_requests
          << '\n';
      return;
  }
}

inline void emit_report(std::ostream& out, const BaselineReport& r,
                        ReportFormat format) {
  switch (format) {
    case ReportFormat::kJson:
      out << to_json(r).dump(2) << '\n';
      return;
    case ReportFormat::kCsv:
      out << "dataset,input_cap,output_cap,count,flops_per_request,"
             "energy_kwh\n";
      for (const BaselineBin& b : r.per_bin) {
        out << detail::csv_cell(r.dataset) << ',' << b.bin.input_cap << ','
            << b.bin.output_cap << ',' << b.count << ','
            << b.flops_per_request << ',' << detail::kwh(b.energy) << '\n';
      }
      out << detail::csv_cell(r.dataset) << ",total,,,,"
          << detail::kwh(r.energy) << '\n';
      return;
    case ReportFormat::kMarkdown:
      out << "Idealized baseline: " << r.dataset << " on " << r.hardware
          << "\n\n";
      out << "| quantity | value |\n|---|---:|\n";
      out << "| J/FLOP | " << fmt::format("{:.4e}", r.joules_per_flop)
          << " |\n";
      out << "| total FLOPs | " << fmt::format("{:.6e}", r.total_flops)
          << " |\n";
      out << "| energy (kWh) | " << detail::kwh(r.energy) << " |\n";
      out << "| excluded requests | " << r.excluded_requests << " |\n";
      return;
  }
}

inline void emit_report(std::ostream& out, const TraceSummary& s,
                        ReportFormat format, std::string_view dataset,
                        std::size_t skipped_rows = 0) {
  switch (format) {
    case ReportFormat::kJson:
      out << to_json(s, dataset, skipped_rows).dump(2) << '\n';
      return;
    case ReportFormat::kCsv:
      out << "dataset,column,count,mean,std,median,p99,max\n";
      for (auto [name, st] : {std::pair{"input", &s.input},
                              std::pair{"output", &s.output}}) {
        out << detail::csv_cell(dataset) << ',' << name << ',' << st->count
            << ',' << fmt::format("{:.2f}", st->mean) << ','
            << fmt::format("{:.2f}", st->stddev) << ',' << st->median << ','
            << st->p99 << ',' << st->max << '\n';
      }
      return;
    case ReportFormat::kMarkdown:
      out << "| dataset | column | mean +/- std | median | 99th | max |\n"
          << "|---|---|---:|---:|---:|---:|\n";
      for (auto [name, st] : {std::pair{"input", &s.input},
                              std::pair{"output", &s.output}}) {
        out << "| " << detail::md_cell(dataset) << " | " << name << " | "
            << fmt::format("{:.2f} +/- {:.2f}", st->mean, st->stddev)
            << " | " << st->median << " | " << st->p99 << " | " << st->max
            << " |\n";
      }
      return;
  }
}

template <typename T, typename... Extra>
std::string render_report(const T& value, ReportFormat format,
                          Extra&&... extra) {
  std::ostringstream out;
  emit_report(out, value, format, std::forward<Extra>(extra)...);
  return out.str();
}

}  // namespace llmenergy
