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

#include "llmenergy/report.hpp"

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles/oracles.hpp"

namespace llmenergy {
namespace {

// Estimate carrying only a total, as when a published %delta is replayed.
WorkloadEstimate total_only(std::string label, double joules,
                            std::string dataset = "BurstGPT") {
  WorkloadEstimate e;
  e.dataset = std::move(dataset);
  e.label = e.backend = std::move(label);
  e.device = "A6000";
  e.total = Energy::from_joules(joules);
  return e;
}

// Energies for a published pair of %deltas over an arbitrary baseline.
std::vector<WorkloadEstimate> from_deltas(double pytorch_pct, double vllm_pct,
                                          double baseline) {
  return {total_only("pytorch", baseline * (1 + pytorch_pct / 100)),
          total_only("vllm", baseline * (1 + vllm_pct / 100))};
}

double vllm_savings(const Comparison& c) {
  for (const auto& e : c.entries) {
    if (e.label == "vllm") return *e.savings_vs_reference;
  }
  return -1;
}

TEST(Compare, PublishedOfflineSavings) {
  const Energy base = Energy::from_joules(1.0e9);
  EXPECT_NEAR(vllm_savings(compare(from_deltas(506.52, 63.75, 1e9), base,
                                   "pytorch")),
              73.00, 0.01);
  EXPECT_NEAR(vllm_savings(compare(from_deltas(102.79, 26.59, 1e9), base,
                                   "pytorch")),
              37.58, 0.01);
  EXPECT_NEAR(vllm_savings(compare(from_deltas(490.23, 64.22, 1e9), base,
                                   "pytorch")),
              72.18, 0.01);
}

TEST(Compare, FieldsAndOrdering) {
  const std::vector<WorkloadEstimate> es{total_only("pytorch", 6.0),
                                         total_only("vllm", 2.0),
                                         total_only("vllm-eager", 3.0)};
  const Comparison c = compare(es, Energy::from_joules(1.0), "pytorch");
  ASSERT_EQ(c.entries.size(), 3u);
  EXPECT_EQ(c.entries[0].label, "vllm");
  EXPECT_EQ(c.entries[2].label, "pytorch");
  EXPECT_DOUBLE_EQ(c.entries[0].pct_delta_vs_optimal, 100.0);
  EXPECT_NEAR(*c.entries[0].savings_vs_reference, 100.0 * (1 - 2.0 / 6.0),
              1e-12);
  EXPECT_FALSE(c.entries[2].savings_vs_reference);
}

TEST(Compare, EqualEnergiesMeanZeroSavings) {
  const std::vector<WorkloadEstimate> es{total_only("a", 5.0),
                                         total_only("b", 5.0)};
  const Comparison c = compare(es, Energy::from_joules(1.0), "a");
  EXPECT_EQ(*c.entries[1].savings_vs_reference, 0.0);
}

TEST(Compare, Errors) {
  const std::vector<WorkloadEstimate> es{total_only("a", 5.0),
                                         total_only("b", 4.0)};
  EXPECT_THROW(compare(es, Energy::zero(), "a"), InvalidArgument);
  EXPECT_THROW(compare(es, Energy::from_joules(1.0), "missing"),
               InvalidArgument);
  const std::vector<WorkloadEstimate> mixed{total_only("a", 5.0, "x"),
                                            total_only("b", 4.0, "y")};
  EXPECT_THROW(compare(mixed, Energy::from_joules(1.0), "a"), InvalidArgument);
  const std::vector<WorkloadEstimate> dup{total_only("a", 5.0),
                                          total_only("a", 4.0)};
  EXPECT_THROW(compare(dup, Energy::from_joules(1.0), "a"), InvalidArgument);
}

TEST(Compare, ScaleInvarianceIdentityAndOrdering) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> energy(0.1, 100.0), scale(1e-3, 1e6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<WorkloadEstimate> es;
    const int n = 2 + static_cast<int>(rng() % 4);
    for (int k = 0; k < n; ++k) {
      es.push_back(total_only("cfg" + std::to_string(k), energy(rng)));
    }
    const Energy base = Energy::from_joules(energy(rng));
    const Comparison c = compare(es, base, "cfg0");

    const double s = scale(rng);
    std::vector<WorkloadEstimate> scaled = es;
    for (auto& e : scaled) e.total = e.total * s;
    const Comparison cs = compare(scaled, base * s, "cfg0");

    double ref_delta = 0;
    for (const auto& e : c.entries) {
      if (e.label == "cfg0") ref_delta = e.pct_delta_vs_optimal;
    }
    for (std::size_t k = 0; k < c.entries.size(); ++k) {
      const auto& e = c.entries[k];
      EXPECT_NEAR(cs.entries[k].pct_delta_vs_optimal, e.pct_delta_vs_optimal,
                  1e-9 * std::max(1.0, std::abs(e.pct_delta_vs_optimal)));
      if (k) {
        EXPECT_LE(c.entries[k - 1].pct_delta_vs_optimal,
                  e.pct_delta_vs_optimal);
      }
      if (!e.savings_vs_reference) continue;
      EXPECT_NEAR(*cs.entries[k].savings_vs_reference,
                  *e.savings_vs_reference,
                  1e-9 * std::max(1.0, std::abs(*e.savings_vs_reference)));
      const double identity =
          100.0 * (1.0 - (1.0 + e.pct_delta_vs_optimal / 100.0) /
                             (1.0 + ref_delta / 100.0));
      EXPECT_NEAR(*e.savings_vs_reference, identity, 1e-9);
    }
  }
}

TEST(EmitReport, MarkdownComparisonHasOneRowPerEntry) {
  const std::vector<WorkloadEstimate> es{total_only("pytorch", 6.0652e9),
                                         total_only("vllm", 1.6375e9),
                                         total_only("vllm-eager", 2.0e9)};
  const Comparison c = compare(es, Energy::from_joules(1.0e9), "pytorch");
  const std::string md = render_report(c, ReportFormat::kMarkdown);
  std::istringstream lines(md);
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) {
    if (line.rfind("| ", 0) == 0 && line.find("label") == std::string::npos) {
      ++rows;
    }
  }
  EXPECT_EQ(rows, 3);
  EXPECT_NE(md.find("| vllm | 454.861 | 63.75 | 73.00 |"), std::string::npos);
  EXPECT_NE(md.find("| pytorch | 1684.78 | 506.52 | - |"), std::string::npos);
}

TEST(EmitReport, ComparisonJsonSchema) {
  const std::vector<WorkloadEstimate> es{total_only("a", 3.0),
                                         total_only("b", 2.0)};
  const auto j = to_json(compare(es, Energy::from_joules(1.0), "a"));
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{
                      "schema_version", "dataset", "mode", "baseline_j",
                      "reference_label", "entries", "excluded_requests"}));
  EXPECT_EQ(j["schema_version"], kReportSchemaVersion);
  EXPECT_EQ(j["entries"][0]["label"], "b");
  EXPECT_EQ(j["entries"][0]["energy_j"], 2.0);
  EXPECT_EQ(j["entries"][0]["pct_delta_vs_optimal"], 100.0);
  EXPECT_TRUE(j["entries"][1]["savings_vs_reference"].is_null());
}

TEST(EmitReport, Deterministic) {
  const std::vector<WorkloadEstimate> es{total_only("a", 3.0),
                                         total_only("b", 2.0)};
  const Comparison c = compare(es, Energy::from_joules(1.0), "a");
  for (ReportFormat f :
       {ReportFormat::kJson, ReportFormat::kCsv, ReportFormat::kMarkdown}) {
    EXPECT_EQ(render_report(c, f), render_report(c, f));
  }
}

TEST(EmitReport, EstimateCsvHasBinRowsPlusTotal) {
  MeasurementTable t;
  for (Bin b : {Bin{256, 8}, Bin{1024, 64}, Bin{32, 8}}) {
    MeasurementRecord r;
    r.backend = "b";
    r.device = "d";
    r.bin = b;
    r.max_batch = 4;
    r.batch_energy = Energy::from_joules(3.6e6);
    t.add(r);
  }
  BinnedWorkload w;
  w.add(Bin{256, 8}, 2);
  w.add(Bin{1024, 64}, 1);
  const std::string csv =
      render_report(estimate(w, t, "b", "d"), ReportFormat::kCsv);
  EXPECT_EQ(csv,
            "dataset,label,input_cap,output_cap,count,max_batch,batches,"
            "energy_kwh,provenance\n"
            "workload,b,256,8,2,4,0.5,0.5,measured\n"
            "workload,b,1024,64,1,4,0.25,0.25,measured\n"
            "workload,b,total,,3,,0.75,0.75,\n");
}

TEST(EstimateJson, RoundTrips) {
  const ModelConfig m = oracle::toy_model(2, 8, 2, 1, 16, 64);
  const BinGrid g = BinGrid::default_grid();
  const MeasurementTable t = synthesize_table(
      g, m, {"A6000", 300.0, 309.7e12}, {.efficiency = 0.3});
  std::mt19937_64 rng(1);
  const BinnedWorkload w =
      bin_workload(oracle::random_requests(rng, 500, 9000, 600), g);
  const WorkloadEstimate e = estimate(w, t, "synthetic", "A6000",
                                      {.mode = BatchMode::kCeiling,
                                       .dataset = "toy",
                                       .label = "synth"});
  const auto j = nlohmann::json::parse(to_json(e).dump());
  const WorkloadEstimate back = estimate_from_json(j);
  EXPECT_EQ(to_json(back).dump(), to_json(e).dump());
}

TEST(EstimateJson, RejectsOtherReports) {
  EXPECT_THROW(estimate_from_json(nlohmann::json{{"kind", "baseline"}}),
               DataError);
  EXPECT_THROW(estimate_from_json(nlohmann::json::object()), DataError);
}

TEST(ReportFormat, UnknownFormatRejected) {
  EXPECT_EQ(parse_report_format("markdown-table"), ReportFormat::kMarkdown);
  EXPECT_THROW(parse_report_format("xml"), InvalidArgument);
}

TEST(Baseline, ReportMatchesIdealizedEnergy) {
  const HardwareSpec hw{"A6000", 300.0, 309.7e12};
  const ModelConfig m = oracle::toy_model(1, 4);
  BinnedWorkload w;
  w.add(Bin{32, 8}, 3);
  w.add(Bin{256, 64}, 2);
  w.add_excluded(Overflow::kInput, 1);
  const BaselineReport r = compute_baseline(hw, m, w, "toy");
  EXPECT_EQ(r.energy, idealized_energy(hw, m, w));
  EXPECT_EQ(r.per_bin.size(), 2u);
  EXPECT_EQ(r.excluded_requests, 1u);
  double sum = 0;
  for (const auto& b : r.per_bin) sum += b.energy.joules();
  EXPECT_NEAR(sum, r.energy.joules(), 1e-12 * sum);
}

TEST(StatsReport, MarkdownShape) {
  const std::vector<Request> r{{10, 1}, {20, 3}, {30, 5}};
  const std::string md = render_report(summarize_trace(r),
                                       ReportFormat::kMarkdown, "toy");
  EXPECT_NE(md.find("| toy | input | 20.00 +/- 8.16 | 20 | 30 | 30 |"),
            std::string::npos)
      << md;
}

}  // namespace
}  // namespace llmenergy
