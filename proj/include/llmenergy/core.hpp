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
#include <compare>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "llmenergy/error.hpp"
#include "llmenergy/text.hpp"

namespace llmenergy {

using TokenCount = std::uint64_t;

// One inference call.
class Request {
 public:
  constexpr Request() = default;
  constexpr Request(TokenCount input_tokens, TokenCount output_tokens)
      : input_tokens_(input_tokens), output_tokens_(output_tokens) {}

  constexpr TokenCount input_tokens() const { return input_tokens_; }
  constexpr TokenCount output_tokens() const { return output_tokens_; }

  friend constexpr bool operator==(const Request&, const Request&) = default;

 private:
  TokenCount input_tokens_ = 0;
  TokenCount output_tokens_ = 0;
};

// A cell of the (input cap, output cap) lattice.
struct Bin {
  TokenCount input_cap = 0;
  TokenCount output_cap = 0;

  friend constexpr auto operator<=>(const Bin&, const Bin&) = default;
};

inline std::string to_string(const Bin& bin) {
  return "(" + std::to_string(bin.input_cap) + ", " +
         std::to_string(bin.output_cap) + ")";
}

/// Discrete bin caps for input and output lengths. Both lists are non-empty,
/// strictly increasing and positive; the constructor enforces this.
class BinGrid {
 public:
  BinGrid(std::vector<TokenCount> input_bins,
          std::vector<TokenCount> output_bins)
      : input_bins_(std::move(input_bins)),
        output_bins_(std::move(output_bins)) {
    check_axis(input_bins_, "input_bins");
    check_axis(output_bins_, "output_bins");
  }

  /// The enumerated sets {32, 128, ..., 8192} x {8, 16, ..., 512}.
  static BinGrid default_grid() {
    return BinGrid({32, 128, 256, 512, 1024, 2048, 4096, 8192},
                   {8, 16, 32, 64, 128, 256, 512});
  }

  const std::vector<TokenCount>& input_bins() const { return input_bins_; }
  const std::vector<TokenCount>& output_bins() const { return output_bins_; }
  TokenCount max_input() const { return input_bins_.back(); }
  TokenCount max_output() const { return output_bins_.back(); }

  bool has_input_cap(TokenCount cap) const {
    return std::binary_search(input_bins_.begin(), input_bins_.end(), cap);
  }
  bool has_output_cap(TokenCount cap) const {
    return std::binary_search(output_bins_.begin(), output_bins_.end(), cap);
  }
  bool contains(const Bin& bin) const {
    return has_input_cap(bin.input_cap) && has_output_cap(bin.output_cap);
  }

  // All bins in row-major (input, then output) order.
  std::vector<Bin> bins() const {
    std::vector<Bin> out;
    out.reserve(input_bins_.size() * output_bins_.size());
    for (TokenCount i : input_bins_) {
      for (TokenCount o : output_bins_) out.push_back({i, o});
    }
    return out;
  }

  friend bool operator==(const BinGrid&, const BinGrid&) = default;

 private:
  static void check_axis(const std::vector<TokenCount>& axis,
                         std::string_view name) {
    if (axis.empty()) {
      throw InvalidArgument(std::string(name) + " must not be empty");
    }
    if (axis.front() == 0) {
      throw InvalidArgument(std::string(name) + " must be positive");
    }
    for (std::size_t k = 1; k < axis.size(); ++k) {
      if (axis[k] <= axis[k - 1]) {
        throw InvalidArgument(std::string(name) +
                              " must be strictly increasing");
      }
    }
  }

  std::vector<TokenCount> input_bins_;
  std::vector<TokenCount> output_bins_;
};

// Comma-separated list form used by config files and csv comment headers.
inline std::string format_axis(const std::vector<TokenCount>& axis) {
  std::string out;
  for (std::size_t k = 0; k < axis.size(); ++k) {
    if (k) out += ',';
    out += std::to_string(axis[k]);
  }
  return out;
}

inline std::vector<TokenCount> parse_axis(std::string_view text,
                                          std::string_view what) {
  std::vector<TokenCount> out;
  for (std::string_view piece : split(text, ',')) {
    auto value = parse_unsigned(trim(piece));
    if (!value) {
      throw InvalidArgument(std::string(what) + ": '" + std::string(piece) +
                            "' is not a nonnegative integer");
    }
    out.push_back(*value);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Energy

enum class EnergyUnit { kJoule, kWattHour, kKilowattHour };

inline constexpr double kJoulesPerWattHour = 3.6e3;
inline constexpr double kJoulesPerKilowattHour = 3.6e6;

inline EnergyUnit parse_energy_unit(std::string_view label) {
  if (label == "J") return EnergyUnit::kJoule;
  if (label == "Wh") return EnergyUnit::kWattHour;
  if (label == "kWh") return EnergyUnit::kKilowattHour;
  throw InvalidArgument("unknown energy unit '" + std::string(label) +
                        "' (expected J, Wh or kWh)");
}

inline std::string_view unit_label(EnergyUnit unit) {
  switch (unit) {
    case EnergyUnit::kJoule: return "J";
    case EnergyUnit::kWattHour: return "Wh";
    case EnergyUnit::kKilowattHour: return "kWh";
  }
  return "J";
}

/// Nonnegative energy, stored in joules. Other units exist only at
/// construction and accessor boundaries.
class Energy {
 public:
  constexpr Energy() = default;

  static Energy from_joules(double joules) {
    if (!(joules >= 0.0) || !std::isfinite(joules)) {
      throw InvalidArgument("energy must be finite and nonnegative, got " +
                            std::to_string(joules) + " J");
    }
    return Energy(joules);
  }
  static Energy from(double value, EnergyUnit unit) {
    switch (unit) {
      case EnergyUnit::kJoule: return from_joules(value);
      case EnergyUnit::kWattHour: return from_joules(value * kJoulesPerWattHour);
      case EnergyUnit::kKilowattHour:
        return from_joules(value * kJoulesPerKilowattHour);
    }
    return from_joules(value);
  }
  static Energy from_kwh(double kwh) {
    return from(kwh, EnergyUnit::kKilowattHour);
  }
  static Energy zero() { return Energy(); }

  constexpr double joules() const { return joules_; }
  constexpr double wh() const { return joules_ / kJoulesPerWattHour; }
  constexpr double kwh() const { return joules_ / kJoulesPerKilowattHour; }

  Energy& operator+=(Energy other) {
    joules_ += other.joules_;
    return *this;
  }
  friend Energy operator+(Energy a, Energy b) { return a += b; }
  friend Energy operator*(Energy e, double k) {
    if (!(k >= 0.0)) throw InvalidArgument("energy scale must be nonnegative");
    return Energy(e.joules_ * k);
  }
  friend Energy operator*(double k, Energy e) { return e * k; }
  // Dimensionless ratio.
  friend double operator/(Energy a, Energy b) { return a.joules_ / b.joules_; }

  friend constexpr auto operator<=>(const Energy&, const Energy&) = default;

 private:
  constexpr explicit Energy(double joules) : joules_(joules) {}
  double joules_ = 0.0;
};

// ---------------------------------------------------------------------------
// Hardware and model configuration

struct HardwareSpec {
  std::string name;
  double tdp_watts = 0.0;
  double peak_flops = 0.0;

  void validate() const {
    if (!(tdp_watts > 0.0) || !std::isfinite(tdp_watts)) {
      throw InvalidArgument("hardware tdp must be positive");
    }
    if (!(peak_flops > 0.0) || !std::isfinite(peak_flops)) {
      throw InvalidArgument("hardware peak_flops must be positive");
    }
  }
};

/// Dense decoder-only transformer shape. `n_params` overrides the derived
/// parameter count when set.
struct ModelConfig {
  std::uint64_t n_layers = 0;
  std::uint64_t d_model = 0;
  std::uint64_t n_heads = 0;
  std::uint64_t n_kv_heads = 0;
  std::uint64_t d_ff = 0;
  std::uint64_t vocab_size = 0;
  std::optional<std::uint64_t> n_params;
  bool tied_embeddings = false;

  std::uint64_t head_dim() const { return d_model / n_heads; }

  void validate() const {
    const std::pair<std::string_view, std::uint64_t> fields[] = {
        {"n_layers", n_layers}, {"d_model", d_model},
        {"n_heads", n_heads},   {"n_kv_heads", n_kv_heads},
        {"d_ff", d_ff},         {"vocab_size", vocab_size}};
    for (const auto& [name, value] : fields) {
      if (value == 0) {
        throw InvalidArgument("model " + std::string(name) +
                              " must be positive");
      }
    }
    if (n_params && *n_params == 0) {
      throw InvalidArgument("model n_params must be positive");
    }
    if (d_model % n_heads != 0) {
      throw InvalidArgument("model d_model must be divisible by n_heads");
    }
    if (n_heads % n_kv_heads != 0) {
      throw InvalidArgument("model n_heads must be divisible by n_kv_heads");
    }
  }
};

/// Closed-form dense parameter count: embeddings, per-layer Q/K/V/O
/// projections (grouped K/V), a gated three-matrix feed-forward, and the
/// output head unless tied. Biases and norm weights are not counted.
inline std::uint64_t derive_param_count(const ModelConfig& config) {
  config.validate();
  const std::uint64_t d = config.d_model;
  const std::uint64_t kv_width = config.n_kv_heads * config.head_dim();
  const std::uint64_t attention = d * d        // query
                                  + 2 * d * kv_width  // key, value
                                  + d * d;     // output projection
  const std::uint64_t feed_forward = 3 * d * config.d_ff;
  const std::uint64_t embedding = config.vocab_size * d;
  return embedding + config.n_layers * (attention + feed_forward) +
         (config.tied_embeddings ? 0 : embedding);
}

inline std::uint64_t effective_param_count(const ModelConfig& config) {
  config.validate();
  return config.n_params ? *config.n_params : derive_param_count(config);
}

// ---------------------------------------------------------------------------
// `key = value` configuration files

using KeyValues = std::map<std::string, std::string, std::less<>>;

inline KeyValues parse_key_values(std::istream& in,
                                  std::string_view origin = "<input>") {
  KeyValues out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) continue;
    auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw DataError(std::string(origin) + ":" + std::to_string(line_no) +
                      ": expected 'key = value'");
    }
    std::string key(trim(view.substr(0, eq)));
    std::string value(trim(view.substr(eq + 1)));
    if (key.empty()) {
      throw DataError(std::string(origin) + ":" + std::to_string(line_no) +
                      ": empty key");
    }
    if (!out.emplace(key, value).second) {
      throw DataError(std::string(origin) + ":" + std::to_string(line_no) +
                      ": duplicate key '" + key + "'");
    }
  }
  return out;
}

inline KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  return parse_key_values(in, path);
}

namespace detail {

inline std::optional<std::string_view> find_key(const KeyValues& kv,
                                                std::string_view key) {
  auto it = kv.find(key);
  if (it == kv.end()) return std::nullopt;
  return std::string_view(it->second);
}

inline std::uint64_t require_unsigned(const KeyValues& kv,
                                      std::string_view key) {
  auto text = find_key(kv, key);
  if (!text) throw DataError("missing config key '" + std::string(key) + "'");
  auto value = parse_unsigned(*text);
  if (!value) {
    throw DataError("config key '" + std::string(key) +
                    "' is not a nonnegative integer: '" + std::string(*text) +
                    "'");
  }
  return *value;
}

inline double require_double(const KeyValues& kv, std::string_view key) {
  auto text = find_key(kv, key);
  if (!text) throw DataError("missing config key '" + std::string(key) + "'");
  auto value = parse_double(*text);
  if (!value) {
    throw DataError("config key '" + std::string(key) +
                    "' is not a number: '" + std::string(*text) + "'");
  }
  return *value;
}

}  // namespace detail

inline ModelConfig model_config_from(const KeyValues& kv) {
  ModelConfig config;
  config.n_layers = detail::require_unsigned(kv, "n_layers");
  config.d_model = detail::require_unsigned(kv, "d_model");
  config.n_heads = detail::require_unsigned(kv, "n_heads");
  config.n_kv_heads = detail::require_unsigned(kv, "n_kv_heads");
  config.d_ff = detail::require_unsigned(kv, "d_ff");
  config.vocab_size = detail::require_unsigned(kv, "vocab_size");
  if (detail::find_key(kv, "n_params")) {
    config.n_params = detail::require_unsigned(kv, "n_params");
  }
  if (auto tied = detail::find_key(kv, "tied_embeddings")) {
    if (*tied == "true" || *tied == "1") {
      config.tied_embeddings = true;
    } else if (*tied == "false" || *tied == "0") {
      config.tied_embeddings = false;
    } else {
      throw DataError("config key 'tied_embeddings' must be true or false");
    }
  }
  config.validate();
  return config;
}

inline HardwareSpec hardware_spec_from(const KeyValues& kv) {
  HardwareSpec hw;
  auto name = detail::find_key(kv, "name");
  hw.name = name ? std::string(*name) : std::string("unnamed");
  hw.tdp_watts = detail::require_double(kv, "tdp");
  hw.peak_flops = detail::require_double(kv, "peak_flops");
  hw.validate();
  return hw;
}

inline ModelConfig load_model_config(const std::string& path) {
  return model_config_from(load_key_values(path));
}

inline HardwareSpec load_hardware_spec(const std::string& path) {
  return hardware_spec_from(load_key_values(path));
}

/// Grid config: `input_bins = 32,128,...` and `output_bins = 8,16,...`.
inline BinGrid bin_grid_from(const KeyValues& kv) {
  auto in = detail::find_key(kv, "input_bins");
  auto out = detail::find_key(kv, "output_bins");
  if (!in || !out) {
    throw DataError("grid config needs both input_bins and output_bins");
  }
  return BinGrid(parse_axis(*in, "input_bins"),
                 parse_axis(*out, "output_bins"));
}

}  // namespace llmenergy
