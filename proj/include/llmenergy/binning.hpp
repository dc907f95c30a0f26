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
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <variant>

#include "llmenergy/core.hpp"
#include "llmenergy/error.hpp"
#include "llmenergy/text.hpp"

namespace llmenergy {

enum class Overflow { kInput, kOutput };

// Request beyond the largest cap. When both dimensions overflow the input
// dimension is reported.
struct Excluded {
  Overflow dimension = Overflow::kInput;
  friend bool operator==(const Excluded&, const Excluded&) = default;
};

using BinAssignment = std::variant<Bin, Excluded>;

namespace detail {

// Smallest cap >= length, or nullopt when length exceeds the last cap.
inline std::optional<TokenCount> ceiling_cap(
    const std::vector<TokenCount>& caps, TokenCount length) {
  auto it = std::lower_bound(caps.begin(), caps.end(), length);
  if (it == caps.end()) return std::nullopt;
  return *it;
}

}  // namespace detail

/// Maps a request to the smallest grid bin that covers both of its lengths.
/// Zero-length inputs and outputs land in the smallest bin.
inline BinAssignment map_to_bin(const Request& request, const BinGrid& grid) {
  auto input_cap = detail::ceiling_cap(grid.input_bins(),
                                       request.input_tokens());
  if (!input_cap) return Excluded{Overflow::kInput};
  auto output_cap = detail::ceiling_cap(grid.output_bins(),
                                        request.output_tokens());
  if (!output_cap) return Excluded{Overflow::kOutput};
  return Bin{*input_cap, *output_cap};
}

/// Histogram of requests per bin plus exclusion tallies. Only nonzero counts
/// are stored.
class BinnedWorkload {
 public:
  explicit BinnedWorkload(BinGrid grid = BinGrid::default_grid())
      : grid_(std::move(grid)) {}

  const BinGrid& grid() const { return grid_; }
  const std::map<Bin, std::uint64_t>& counts() const { return counts_; }
  std::uint64_t excluded_input() const { return excluded_input_; }
  std::uint64_t excluded_output() const { return excluded_output_; }
  std::uint64_t excluded() const { return excluded_input_ + excluded_output_; }

  std::uint64_t count(const Bin& bin) const {
    auto it = counts_.find(bin);
    return it == counts_.end() ? 0 : it->second;
  }
  std::uint64_t binned_requests() const {
    std::uint64_t total = 0;
    for (const auto& [bin, n] : counts_) total += n;
    return total;
  }
  std::uint64_t total_requests() const { return binned_requests() + excluded(); }

  void add(const Bin& bin, std::uint64_t n = 1) {
    if (!grid_.contains(bin)) {
      throw InvalidArgument("bin " + to_string(bin) + " is not on the grid");
    }
    if (n) counts_[bin] += n;
  }
  void add_excluded(Overflow dimension, std::uint64_t n = 1) {
    (dimension == Overflow::kInput ? excluded_input_ : excluded_output_) += n;
  }
  void add(const BinAssignment& assignment) {
    if (const Bin* bin = std::get_if<Bin>(&assignment)) {
      add(*bin);
    } else {
      add_excluded(std::get<Excluded>(assignment).dimension);
    }
  }

  BinnedWorkload& operator+=(const BinnedWorkload& other) {
    if (!(grid_ == other.grid_)) {
      throw InvalidArgument("cannot merge workloads binned on different grids");
    }
    for (const auto& [bin, n] : other.counts_) counts_[bin] += n;
    excluded_input_ += other.excluded_input_;
    excluded_output_ += other.excluded_output_;
    return *this;
  }
  friend BinnedWorkload operator+(BinnedWorkload a, const BinnedWorkload& b) {
    return a += b;
  }

  friend bool operator==(const BinnedWorkload&,
                         const BinnedWorkload&) = default;

 private:
  BinGrid grid_;
  std::map<Bin, std::uint64_t> counts_;
  std::uint64_t excluded_input_ = 0;
  std::uint64_t excluded_output_ = 0;
};

inline BinnedWorkload bin_workload(std::span<const Request> requests,
                                   const BinGrid& grid) {
  BinnedWorkload workload(grid);
  for (const Request& r : requests) workload.add(map_to_bin(r, grid));
  return workload;
}

// ---------------------------------------------------------------------------
// csv form:
//
//   # input_bins=32,128,...
//   # output_bins=8,16,...
//   input_cap,output_cap,count
//   256,8,2
//   # excluded_input=0
//   # excluded_output=1

inline void write_binned_csv(std::ostream& out, const BinnedWorkload& w) {
  out << "# input_bins=" << format_axis(w.grid().input_bins()) << '\n'
      << "# output_bins=" << format_axis(w.grid().output_bins()) << '\n'
      << "input_cap,output_cap,count\n";
  for (const auto& [bin, n] : w.counts()) {
    out << bin.input_cap << ',' << bin.output_cap << ',' << n << '\n';
  }
  out << "# excluded_input=" << w.excluded_input() << '\n'
      << "# excluded_output=" << w.excluded_output() << '\n';
}

inline BinnedWorkload read_binned_csv(std::istream& in,
                                      std::string_view origin = "<binned>") {
  auto fail = [&](std::size_t line_no, const std::string& what) -> DataError {
    return DataError(std::string(origin) + ":" + std::to_string(line_no) +
                     ": " + what);
  };
  KeyValues meta;
  std::map<Bin, std::uint64_t> rows;
  bool header_seen = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      view = trim(view.substr(1));
      auto eq = view.find('=');
      if (eq == std::string_view::npos) continue;
      meta.emplace(std::string(trim(view.substr(0, eq))),
                   std::string(trim(view.substr(eq + 1))));
      continue;
    }
    if (!header_seen) {
      if (view != "input_cap,output_cap,count") {
        throw fail(line_no, "expected header 'input_cap,output_cap,count'");
      }
      header_seen = true;
      continue;
    }
    auto fields = split(view, ',');
    if (fields.size() != 3) throw fail(line_no, "expected 3 fields");
    auto i = parse_unsigned(trim(fields[0]));
    auto o = parse_unsigned(trim(fields[1]));
    auto n = parse_unsigned(trim(fields[2]));
    if (!i || !o || !n) throw fail(line_no, "non-integer field");
    if (!rows.emplace(Bin{*i, *o}, *n).second) {
      throw fail(line_no, "duplicate bin " + to_string(Bin{*i, *o}));
    }
  }
  if (!header_seen) throw fail(line_no, "missing header row");

  BinGrid grid = BinGrid::default_grid();
  if (meta.count("input_bins") || meta.count("output_bins")) {
    grid = bin_grid_from(meta);
  }
  BinnedWorkload workload(grid);
  for (const auto& [bin, n] : rows) {
    if (!grid.contains(bin)) {
      throw DataError(std::string(origin) + ": bin " + to_string(bin) +
                      " is not on the grid");
    }
    workload.add(bin, n);
  }
  for (auto [key, dim] : {std::pair{"excluded_input", Overflow::kInput},
                          std::pair{"excluded_output", Overflow::kOutput}}) {
    if (auto it = meta.find(key); it != meta.end()) {
      auto n = parse_unsigned(it->second);
      if (!n) throw DataError(std::string(origin) + ": bad " + key);
      workload.add_excluded(dim, *n);
    }
  }
  return workload;
}

}  // namespace llmenergy
