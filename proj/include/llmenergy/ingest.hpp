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
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmenergy/core.hpp"
#include "llmenergy/error.hpp"
#include "llmenergy/text.hpp"

namespace llmenergy {

enum class TraceFormat { kGenericCsv, kJsonl };

inline TraceFormat parse_trace_format(std::string_view name) {
  if (name == "csv" || name == "generic-csv") return TraceFormat::kGenericCsv;
  if (name == "jsonl") return TraceFormat::kJsonl;
  throw InvalidArgument("unknown trace format '" + std::string(name) + "'");
}

// Picks jsonl for *.jsonl / *.json paths, csv otherwise.
inline TraceFormat guess_trace_format(std::string_view path) {
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() &&
           path.substr(path.size() - suffix.size()) == suffix;
  };
  return ends_with(".jsonl") || ends_with(".json") ? TraceFormat::kJsonl
                                                   : TraceFormat::kGenericCsv;
}

struct ColumnMap {
  std::string input_tokens = "input_tokens";
  std::string output_tokens = "output_tokens";
};

/// Column names used by well-known public traces.
inline ColumnMap column_preset(std::string_view name) {
  if (name == "default") return {};
  if (name == "burstgpt") return {"Request tokens", "Response tokens"};
  if (name == "azure") return {"ContextTokens", "GeneratedTokens"};
  throw InvalidArgument("unknown column preset '" + std::string(name) +
                        "' (expected default, burstgpt or azure)");
}

struct TraceSource {
  std::string path;
  TraceFormat format = TraceFormat::kGenericCsv;
  ColumnMap columns;
};

struct RowError {
  std::size_t line = 0;
  std::string message;
};

struct LoadedTrace {
  std::vector<Request> requests;
  std::vector<RowError> malformed;  // skipped rows (permissive mode only)
  std::size_t data_rows = 0;        // == requests.size() + malformed.size()
};

struct LoadOptions {
  bool permissive = false;
};

namespace detail {

inline std::string describe_row_errors(const std::vector<RowError>& errors,
                                       std::string_view origin) {
  constexpr std::size_t kShown = 5;
  std::string msg = std::string(origin) + ": " +
                    std::to_string(errors.size()) + " malformed row(s)";
  for (std::size_t k = 0; k < errors.size() && k < kShown; ++k) {
    msg += "; line " + std::to_string(errors[k].line) + ": " +
           errors[k].message;
  }
  if (errors.size() > kShown) msg += "; ...";
  return msg;
}

inline std::optional<TokenCount> parse_token_field(std::string_view raw,
                                                   std::string& why) {
  std::string_view text = trim(raw);
  if (text.empty()) {
    why = "empty token field";
    return std::nullopt;
  }
  if (text.front() == '-') {
    why = "negative token count '" + std::string(text) + "'";
    return std::nullopt;
  }
  auto value = parse_unsigned(text);
  if (!value) why = "non-integer token count '" + std::string(text) + "'";
  return value;
}

inline std::optional<TokenCount> json_token_field(const nlohmann::json& obj,
                                                  const std::string& key,
                                                  std::string& why) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    why = "missing member '" + key + "'";
    return std::nullopt;
  }
  if (it->is_number_unsigned()) return it->get<std::uint64_t>();
  if (it->is_number_integer()) {
    why = "negative token count in '" + key + "'";
    return std::nullopt;
  }
  if (it->is_number_float()) {
    double v = it->get<double>();
    if (v >= 0.0 && v == std::floor(v) && v < 1.8e19) {
      return static_cast<TokenCount>(v);
    }
    why = "non-integer token count in '" + key + "'";
    return std::nullopt;
  }
  if (it->is_string()) return parse_token_field(it->get<std::string>(), why);
  why = "member '" + key + "' is not a number";
  return std::nullopt;
}

inline void finish_trace(LoadedTrace& trace, const LoadOptions& options,
                         std::string_view origin) {
  if (!trace.malformed.empty() && !options.permissive) {
    throw DataError(describe_row_errors(trace.malformed, origin));
  }
}

}  // namespace detail

/// Reads a comma-separated trace with a header row. Extra columns are ignored.
inline LoadedTrace read_csv_trace(std::istream& in, const ColumnMap& columns,
                                  const LoadOptions& options = {},
                                  std::string_view origin = "<trace>") {
  LoadedTrace trace;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw DataError(std::string(origin) + ": missing csv header row");
  }
  ++line_no;
  strip_utf8_bom(line);
  auto header = split_csv_record(line);
  auto column_index = [&](const std::string& name) {
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (trim(header[k]) == name) return k;
    }
    throw DataError(std::string(origin) + ": missing column '" + name + "'");
  };
  const std::size_t in_col = column_index(columns.input_tokens);
  const std::size_t out_col = column_index(columns.output_tokens);
  const std::size_t needed = std::max(in_col, out_col) + 1;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++trace.data_rows;
    auto fields = split_csv_record(line);
    if (fields.size() < needed) {
      trace.malformed.push_back(
          {line_no, "expected at least " + std::to_string(needed) +
                        " fields, got " + std::to_string(fields.size())});
      continue;
    }
    std::string why;
    auto input = detail::parse_token_field(fields[in_col], why);
    auto output =
        input ? detail::parse_token_field(fields[out_col], why) : std::nullopt;
    if (!input || !output) {
      trace.malformed.push_back({line_no, why});
      continue;
    }
    trace.requests.emplace_back(*input, *output);
  }
  detail::finish_trace(trace, options, origin);
  return trace;
}

/// Reads one json object per line; blank lines are skipped.
inline LoadedTrace read_jsonl_trace(std::istream& in, const ColumnMap& columns,
                                    const LoadOptions& options = {},
                                    std::string_view origin = "<trace>") {
  LoadedTrace trace;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) strip_utf8_bom(line);
    if (trim(line).empty()) continue;
    ++trace.data_rows;
    auto obj = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded() || !obj.is_object()) {
      trace.malformed.push_back({line_no, "not a json object"});
      continue;
    }
    std::string why;
    auto input = detail::json_token_field(obj, columns.input_tokens, why);
    auto output = input ? detail::json_token_field(obj, columns.output_tokens,
                                                   why)
                        : std::nullopt;
    if (!input || !output) {
      trace.malformed.push_back({line_no, why});
      continue;
    }
    trace.requests.emplace_back(*input, *output);
  }
  detail::finish_trace(trace, options, origin);
  return trace;
}

inline LoadedTrace load_trace(const TraceSource& source,
                              const LoadOptions& options = {}) {
  std::ifstream in(source.path);
  if (!in) throw DataError("cannot open trace file '" + source.path + "'");
  return source.format == TraceFormat::kJsonl
             ? read_jsonl_trace(in, source.columns, options, source.path)
             : read_csv_trace(in, source.columns, options, source.path);
}

// ---------------------------------------------------------------------------
// Statistics

/// Summary of one token-length column. Median is the lower median, p99 the
/// nearest-rank percentile, std the population form.
struct TraceStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double median = 0.0;
  double p99 = 0.0;
  std::uint64_t max = 0;
};

// 1-based nearest rank ceil(q * n), computed in integers for q = pct / 100.
inline std::size_t nearest_rank(std::size_t n, unsigned pct) {
  std::size_t rank = (pct * n + 99) / 100;
  return std::max<std::size_t>(rank, 1);
}

inline TraceStats compute_stats(std::span<const TokenCount> values) {
  if (values.empty()) {
    throw InvalidArgument("cannot compute statistics of an empty sequence");
  }
  const std::size_t n = values.size();
  std::vector<TokenCount> sorted(values.begin(), values.end());

  // Lower median and p99 via selection; p99 rank >= median rank.
  const std::size_t median_idx = (n - 1) / 2;
  const std::size_t p99_idx = nearest_rank(n, 99) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + median_idx, sorted.end());
  const TokenCount median = sorted[median_idx];
  std::nth_element(sorted.begin() + median_idx, sorted.begin() + p99_idx,
                   sorted.end());
  const TokenCount p99 = sorted[p99_idx];
  const TokenCount max = *std::max_element(sorted.begin() + p99_idx,
                                           sorted.end());

  long double sum = 0;
  for (TokenCount v : values) sum += static_cast<long double>(v);
  const long double mean = sum / static_cast<long double>(n);
  long double sq = 0;
  for (TokenCount v : values) {
    long double dev = static_cast<long double>(v) - mean;
    sq += dev * dev;
  }

  TraceStats stats;
  stats.count = n;
  stats.mean = static_cast<double>(mean);
  stats.stddev = static_cast<double>(std::sqrt(sq / static_cast<long double>(n)));
  stats.median = static_cast<double>(median);
  stats.p99 = static_cast<double>(p99);
  stats.max = max;
  return stats;
}

struct TraceSummary {
  TraceStats input;
  TraceStats output;
};

inline TraceSummary summarize_trace(std::span<const Request> requests) {
  if (requests.empty()) {
    throw InvalidArgument("cannot summarize an empty trace");
  }
  std::vector<TokenCount> in, out;
  in.reserve(requests.size());
  out.reserve(requests.size());
  for (const Request& r : requests) {
    in.push_back(r.input_tokens());
    out.push_back(r.output_tokens());
  }
  return {compute_stats(in), compute_stats(out)};
}

}  // namespace llmenergy
