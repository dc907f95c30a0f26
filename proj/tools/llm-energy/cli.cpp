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

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "llmenergy/llmenergy.hpp"

namespace llmenergy::cli {
namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraceArgs {
  std::string trace;
  std::string binned;
  std::string trace_format;  // empty: guess from extension
  std::string columns = "default";
  std::string input_col;
  std::string output_col;
  bool permissive = false;
  std::string grid;
  std::string dataset = "workload";
};

void add_trace_options(CLI::App* cmd, TraceArgs& a, bool allow_binned) {
  cmd->add_option("--trace", a.trace, "request trace file ('-' for stdin)");
  if (allow_binned) {
    cmd->add_option("--binned", a.binned,
                    "pre-binned workload csv ('-' for stdin)");
  }
  cmd->add_option("--trace-format", a.trace_format, "csv or jsonl")
      ->check(CLI::IsMember({"csv", "generic-csv", "jsonl"}));
  cmd->add_option("--columns", a.columns,
                  "column preset: default, burstgpt, azure")
      ->check(CLI::IsMember({"default", "burstgpt", "azure"}));
  cmd->add_option("--input-col", a.input_col, "input token column name");
  cmd->add_option("--output-col", a.output_col, "output token column name");
  cmd->add_flag("--permissive", a.permissive,
                "skip malformed rows instead of failing");
  cmd->add_option("--grid", a.grid,
                  "grid config file (input_bins = ..., output_bins = ...)");
  cmd->add_option("--dataset", a.dataset, "dataset label for reports");
}

class Io {
 public:
  Io(std::istream& in, std::ostream& out, std::ostream& err)
      : in_(in), out_(out), err_(err) {}

  std::istream& in() { return in_; }
  std::ostream& err() { return err_; }

  // Opens `path` for reading; "-" is the invocation's stdin.
  template <typename Fn>
  auto with_input(const std::string& path, Fn&& fn) {
    if (path == "-") return fn(in_, std::string("<stdin>"));
    std::ifstream file(path);
    if (!file) throw DataError("cannot open '" + path + "'");
    return fn(static_cast<std::istream&>(file), path);
  }

  void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
      out_ << text;
      return;
    }
    std::ofstream file(out_path, std::ios::binary);
    if (!file) throw DataError("cannot write '" + out_path + "'");
    file << text;
    if (!file) throw DataError("failed writing '" + out_path + "'");
  }

 private:
  std::istream& in_;
  std::ostream& out_;
  std::ostream& err_;
};

BinGrid grid_from(const TraceArgs& a) {
  return a.grid.empty() ? BinGrid::default_grid()
                        : bin_grid_from(load_key_values(a.grid));
}

LoadedTrace read_trace(const TraceArgs& a, Io& io) {
  ColumnMap columns = column_preset(a.columns);
  if (!a.input_col.empty()) columns.input_tokens = a.input_col;
  if (!a.output_col.empty()) columns.output_tokens = a.output_col;
  const TraceFormat format = a.trace_format.empty()
                                 ? guess_trace_format(a.trace)
                                 : parse_trace_format(a.trace_format);
  LoadOptions options;
  options.permissive = a.permissive;
  LoadedTrace trace = io.with_input(
      a.trace, [&](std::istream& s, const std::string& origin) {
        return format == TraceFormat::kJsonl
                   ? read_jsonl_trace(s, columns, options, origin)
                   : read_csv_trace(s, columns, options, origin);
      });
  if (!trace.malformed.empty()) {
    io.err() << "warning: skipped " << trace.malformed.size()
             << " malformed row(s) of " << trace.data_rows << "; first at line "
             << trace.malformed.front().line << ": "
             << trace.malformed.front().message << '\n';
  }
  return trace;
}

BinnedWorkload workload_from(const TraceArgs& a, Io& io) {
  if (a.trace.empty() == a.binned.empty()) {
    throw UsageError("exactly one of --trace or --binned is required");
  }
  if (!a.binned.empty()) {
    BinnedWorkload w = io.with_input(
        a.binned, [](std::istream& s, const std::string& origin) {
          return read_binned_csv(s, origin);
        });
    if (!a.grid.empty() && !(w.grid() == grid_from(a))) {
      throw DataError("--grid does not match the grid of the binned input");
    }
    return w;
  }
  const LoadedTrace trace = read_trace(a, io);
  BinnedWorkload w = bin_workload(trace.requests, grid_from(a));
  if (w.excluded()) {
    io.err() << "note: " << w.excluded() << " request(s) beyond the grid ("
             << w.excluded_input() << " input, " << w.excluded_output()
             << " output) are excluded and not charged\n";
  }
  return w;
}

std::string version_text() {
  return std::string("llm-energy ") + kVersion + " (report schema_version " +
         std::to_string(kReportSchemaVersion) + ")\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in,
        std::ostream& out, std::ostream& err) {
  Io io(in, out, err);

  CLI::App app{"Energy estimates for offline LLM inference workloads",
               "llm-energy"};
  app.require_subcommand(0, 1);
  bool show_version = false;
  app.add_flag("--version", show_version, "print version and exit");

  std::string out_path;
  std::string format;

  // stats
  TraceArgs stats_args;
  auto* stats = app.add_subcommand("stats", "token-length statistics");
  add_trace_options(stats, stats_args, /*allow_binned=*/false);
  stats->add_option("--format", format, "json, csv or markdown");
  stats->add_option("--out", out_path, "output file");

  // bin
  TraceArgs bin_args;
  auto* bin = app.add_subcommand("bin", "bin a trace onto the grid");
  add_trace_options(bin, bin_args, /*allow_binned=*/false);
  bin->add_option("--out", out_path, "output file");

  // estimate
  TraceArgs est_args;
  std::string table_path, backend, device, mode = "fractional", label;
  bool interpolate = false;
  auto* est = app.add_subcommand("estimate", "estimate workload energy");
  add_trace_options(est, est_args, /*allow_binned=*/true);
  est->add_option("--table", table_path, "measurement table csv")->required();
  est->add_option("--backend", backend, "backend label")->required();
  est->add_option("--device", device, "device label")->required();
  est->add_option("--mode", mode, "fractional or ceiling")
      ->check(CLI::IsMember({"fractional", "ceiling"}));
  est->add_flag("--interpolate", interpolate,
                "interpolate bins missing from the table");
  est->add_option("--label", label, "entry label (default: backend)");
  est->add_option("--format", format, "json, csv or markdown");
  est->add_option("--out", out_path, "output file");

  // baseline
  TraceArgs base_args;
  std::string model_path, hw_path;
  auto* base = app.add_subcommand("baseline", "idealized energy baseline");
  add_trace_options(base, base_args, /*allow_binned=*/true);
  base->add_option("--model", model_path, "model config file")->required();
  base->add_option("--hw", hw_path, "hardware config file")->required();
  base->add_option("--format", format, "json, csv or markdown");
  base->add_option("--out", out_path, "output file");

  // compare
  std::vector<std::string> estimate_paths;
  double baseline_j = 0.0;
  std::string reference;
  auto* cmp = app.add_subcommand("compare", "compare estimates");
  cmp->add_option("--estimates", estimate_paths, "estimate json reports")
      ->required()
      ->delimiter(',');
  cmp->add_option("--baseline-j", baseline_j, "idealized baseline in joules")
      ->required();
  cmp->add_option("--reference", reference, "reference entry label")
      ->required();
  cmp->add_option("--format", format, "json, csv or markdown");
  cmp->add_option("--out", out_path, "output file");

  // plan-sweep
  std::string plan_dir;
  std::uint64_t min_input = 32;
  auto* plan = app.add_subcommand("plan-sweep", "emit sweep plan files");
  plan->add_option("--out", plan_dir, "directory for plan files");
  plan->add_option("--min-input", min_input,
                   "lower endpoint of input-length sweeps");

  // validate-table
  std::string validate_path;
  auto* validate = app.add_subcommand("validate-table",
                                      "check table coverage of the plans");
  validate->add_option("--table", validate_path, "measurement table csv")
      ->required();
  validate->add_option("--out", out_path, "output file");

  // synth-table
  std::string synth_model, synth_hw, synth_grid;
  SynthesisOptions synth_opt;
  double memory_gb = 48.0;
  std::optional<double> kv_bytes;
  auto* synth = app.add_subcommand("synth-table",
                                   "synthesize a table from the FLOPs model");
  synth->add_option("--model", synth_model, "model config file")->required();
  synth->add_option("--hw", synth_hw, "hardware config file")->required();
  synth->add_option("--efficiency", synth_opt.efficiency, "in (0, 1]");
  synth->add_option("--decode-penalty", synth_opt.decode_penalty, ">= 1");
  synth->add_option("--backend", synth_opt.backend, "backend label");
  synth->add_option("--memory-gb", memory_gb, "device memory in GB");
  synth->add_option("--kv-bytes-per-token", kv_bytes,
                    "KV-cache bytes per token (default: from model)");
  synth->add_option("--max-batch-cap", synth_opt.max_batch_cap,
                    "upper bound on max_batch");
  synth->add_option("--grid", synth_grid, "grid config file");
  synth->add_option("--out", out_path, "output file");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kUsage;
  }

  if (show_version) {
    out << version_text();
    return kOk;
  }

  try {
    auto report_format = [&](const char* fallback) {
      try {
        return parse_report_format(format.empty() ? fallback : format);
      } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
      }
    };

    if (stats->parsed()) {
      if (stats_args.trace.empty()) throw UsageError("--trace is required");
      const ReportFormat f = report_format("markdown");
      const LoadedTrace trace = read_trace(stats_args, io);
      const TraceSummary summary = summarize_trace(trace.requests);
      io.emit(render_report(summary, f, stats_args.dataset,
                            trace.malformed.size()),
              out_path);
    } else if (bin->parsed()) {
      if (bin_args.trace.empty()) throw UsageError("--trace is required");
      const BinnedWorkload w = workload_from(bin_args, io);
      std::ostringstream text;
      write_binned_csv(text, w);
      io.emit(text.str(), out_path);
    } else if (est->parsed()) {
      const ReportFormat f = report_format("json");
      const BinnedWorkload w = workload_from(est_args, io);
      const MeasurementTable table = load_table(table_path);
      EstimateOptions options;
      options.mode = parse_batch_mode(mode);
      options.lookup =
          interpolate ? LookupPolicy::kInterpolate : LookupPolicy::kStrict;
      options.dataset = est_args.dataset;
      options.label = label;
      const WorkloadEstimate result =
          estimate(w, table, backend, device, options);
      io.emit(render_report(result, f), out_path);
    } else if (base->parsed()) {
      const ReportFormat f = report_format("json");
      const BinnedWorkload w = workload_from(base_args, io);
      const BaselineReport report =
          compute_baseline(load_hardware_spec(hw_path),
                           load_model_config(model_path), w, base_args.dataset);
      io.emit(render_report(report, f), out_path);
    } else if (cmp->parsed()) {
      const ReportFormat f = report_format("markdown");
      std::vector<WorkloadEstimate> estimates;
      for (const std::string& path : estimate_paths) {
        estimates.push_back(io.with_input(
            path, [](std::istream& s, const std::string& origin) {
              nlohmann::json j = nlohmann::json::parse(s, nullptr, false);
              if (j.is_discarded()) {
                throw DataError(origin + ": not valid json");
              }
              return estimate_from_json(j);
            }));
      }
      if (!(baseline_j > 0.0)) {
        throw DataError("--baseline-j must be positive");
      }
      const Comparison c =
          compare(estimates, Energy::from_joules(baseline_j), reference);
      io.emit(render_report(c, f), out_path);
    } else if (plan->parsed()) {
      SweepOptions options;
      options.min_input = min_input;
      const auto plans = plan_paper_sweeps(options);
      if (plan_dir.empty()) {
        std::ostringstream text;
        for (const SweepPlan& p : plans) {
          text << "# file: " << p.file_name() << '\n';
          write_plan(text, p);
          text << '\n';
        }
        io.emit(text.str(), "");
      } else {
        std::filesystem::create_directories(plan_dir);
        for (const SweepPlan& p : plans) {
          std::ostringstream text;
          write_plan(text, p);
          const auto path = std::filesystem::path(plan_dir) / p.file_name();
          io.emit(text.str(), path.string());
          out << path.string() << '\n';
        }
      }
    } else if (validate->parsed()) {
      const MeasurementTable table = load_table(validate_path);
      const CoverageReport report =
          validate_table_against_plan(table, plan_paper_sweeps());
      io.emit(to_json(report).dump(2) + "\n", out_path);
      if (!report.full()) {
        err << "error: partial coverage: " << report.missing_count()
            << " planned bin(s) missing across "
            << report.configurations.size() << " configuration(s)\n";
        return kDataError;
      }
    } else if (synth->parsed()) {
      synth_opt.device_memory_bytes = memory_gb * 1e9;
      synth_opt.kv_bytes_per_token = kv_bytes;
      const BinGrid grid = synth_grid.empty()
                               ? BinGrid::default_grid()
                               : bin_grid_from(load_key_values(synth_grid));
      const MeasurementTable table =
          synthesize_table(grid, load_model_config(synth_model),
                           load_hardware_spec(synth_hw), synth_opt);
      std::ostringstream text;
      write_table(text, table);
      io.emit(text.str(), out_path);
    } else {
      err << "error: a subcommand is required\n" << app.help();
      return kUsage;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}

}  // namespace llmenergy::cli
