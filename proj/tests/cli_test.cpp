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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>
#include <sys/wait.h>

#include "llmenergy/llmenergy.hpp"

namespace llmenergy::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(const std::vector<std::string>& args,
              const std::string& stdin_text = "") {
  std::istringstream in(stdin_text);
  std::ostringstream out, err;
  const int code = run(args, in, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("llmenergy_cli_" +
            std::string(::testing::UnitTest::GetInstance()
                            ->current_test_info()
                            ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write("trace.csv",
          "input_tokens,output_tokens\n215,7\n215,7\n929,41\n");
    write("table.csv",
          "backend,device,input_cap,output_cap,max_batch,batch_energy,"
          "energy_unit,prefill_energy,decode_energy,samples_measured,"
          "warmup_batches\n"
          "vllm,A6000,256,8,4,2,J,,,1024,20\n"
          "vllm,A6000,1024,64,2,10,J,,,1024,20\n"
          "pytorch,A6000,256,8,2,6,J,,,1024,20\n"
          "pytorch,A6000,1024,64,1,20,J,,,1024,20\n");
    write("model.cfg",
          "n_layers = 1\nd_model = 4\nn_heads = 1\nn_kv_heads = 1\n"
          "d_ff = 8\nvocab_size = 10\n");
    write("hw.cfg", "name = A6000\ntdp = 300\npeak_flops = 309.7e12\n");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }
  void write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
  }
  std::string read(const std::string& name) const {
    std::ifstream in(dir_ / name);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  fs::path dir_;
};

TEST_F(CliTest, Version) {
  const Result r = invoke({"--version"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "llm-energy 0.1.0 (report schema_version 1)\n");
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(invoke({}).code, kUsage);
  const Result unknown = invoke({"estimate", "--bogus"});
  EXPECT_EQ(unknown.code, kUsage);
  EXPECT_EQ(unknown.err.rfind("error:", 0), 0u);
  EXPECT_EQ(invoke({"stats", "--trace", path("trace.csv"), "--format", "xml"})
                .code,
            kUsage);
  EXPECT_EQ(invoke({"estimate", "--table", path("table.csv"), "--backend",
                    "vllm", "--device", "A6000"})
                .code,
            kUsage);  // neither --trace nor --binned
}

TEST_F(CliTest, EstimateThreeRequestFixture) {
  const Result r =
      invoke({"estimate", "--trace", path("trace.csv"), "--table",
              path("table.csv"), "--backend", "vllm", "--device", "A6000"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  // (256,8): 2/4 * 2 J; (1024,64): 1/2 * 10 J
  EXPECT_DOUBLE_EQ(j["total_j"].get<double>(), 6.0);
  EXPECT_EQ(j["bins"].size(), 2u);
  EXPECT_EQ(j["mode"], "fractional");

  const Result ceil = invoke({"estimate", "--trace", path("trace.csv"),
                              "--table", path("table.csv"), "--backend",
                              "vllm", "--device", "A6000", "--mode",
                              "ceiling"});
  EXPECT_DOUBLE_EQ(nlohmann::json::parse(ceil.out)["total_j"].get<double>(),
                   12.0);
}

TEST_F(CliTest, EstimateMissingBinIsDataError) {
  write("short.csv", "input_tokens,output_tokens\n4000,300\n");
  const Result r =
      invoke({"estimate", "--trace", path("short.csv"), "--table",
              path("table.csv"), "--backend", "vllm", "--device", "A6000"});
  EXPECT_EQ(r.code, kDataError);
  EXPECT_EQ(r.err.rfind("error:", 0), 0u);
  EXPECT_NE(r.err.find("(4096, 512)"), std::string::npos);
}

TEST_F(CliTest, BinnedPipelineMatchesRawTrace) {
  const Result binned = invoke({"bin", "--trace", path("trace.csv")});
  ASSERT_EQ(binned.code, 0) << binned.err;
  const std::vector<std::string> common = {"--table", path("table.csv"),
                                           "--backend", "pytorch",
                                           "--device", "A6000"};
  std::vector<std::string> from_trace = {"estimate", "--trace",
                                         path("trace.csv")};
  std::vector<std::string> from_binned = {"estimate", "--binned", "-"};
  from_trace.insert(from_trace.end(), common.begin(), common.end());
  from_binned.insert(from_binned.end(), common.begin(), common.end());
  const Result a = invoke(from_trace);
  const Result b = invoke(from_binned, binned.out);
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, CompareReplaysPublishedDeltas) {
  // Baseline 1 GJ; totals encode %delta of 506.52 and 63.75.
  WorkloadEstimate pytorch, vllm;
  pytorch.dataset = vllm.dataset = "BurstGPT";
  pytorch.label = pytorch.backend = "pytorch";
  vllm.label = vllm.backend = "vllm";
  pytorch.total = Energy::from_joules(1e9 * 6.0652);
  vllm.total = Energy::from_joules(1e9 * 1.6375);
  write("pt.json", to_json(pytorch).dump());
  write("vllm.json", to_json(vllm).dump());
  const Result r = invoke({"compare", "--estimates",
                           path("pt.json") + "," + path("vllm.json"),
                           "--baseline-j", "1e9", "--reference", "pytorch"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("| 63.75 | 73.00 |"), std::string::npos) << r.out;

  const Result missing = invoke({"compare", "--estimates", path("pt.json"),
                                 "--baseline-j", "1e9", "--reference", "x"});
  EXPECT_EQ(missing.code, kDataError);
}

TEST_F(CliTest, OutFlagWritesOnlyThere) {
  const Result r = invoke({"stats", "--trace", path("trace.csv"), "--format",
                           "json", "--out", path("stats.json")});
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  const auto j = nlohmann::json::parse(read("stats.json"));
  EXPECT_EQ(j["input"]["median"], 215.0);
  EXPECT_EQ(j["output"]["max"], 41);
}

TEST_F(CliTest, BaselineReport) {
  const Result r = invoke({"baseline", "--trace", path("trace.csv"), "--model",
                           path("model.cfg"), "--hw", path("hw.cfg")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  const double want =
      (2.0 * static_cast<double>(request_flops(
                 load_model_config(path("model.cfg")), 256, 8).total()) +
       static_cast<double>(request_flops(
           load_model_config(path("model.cfg")), 1024, 64).total())) *
      300.0 / 309.7e12;
  EXPECT_NEAR(j["baseline_j"].get<double>(), want, 1e-12 * want);
}

TEST_F(CliTest, PlanSweepWritesPlanFiles) {
  const Result r = invoke({"plan-sweep", "--out", path("plans")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir_ / "plans")) {
    ++files;
    std::ifstream in(entry.path());
    EXPECT_NO_THROW(read_plan(in));
  }
  EXPECT_EQ(files, 6u);
}

TEST_F(CliTest, SynthThenValidate) {
  const Result synth = invoke({"synth-table", "--model", path("model.cfg"),
                               "--hw", path("hw.cfg"), "--efficiency", "0.5",
                               "--out", path("synth.csv")});
  ASSERT_EQ(synth.code, 0) << synth.err;
  const Result full = invoke({"validate-table", "--table", path("synth.csv")});
  EXPECT_EQ(full.code, 0) << full.err;
  EXPECT_EQ(nlohmann::json::parse(full.out)["coverage"], "full");

  const Result partial = invoke({"validate-table", "--table",
                                 path("table.csv")});
  EXPECT_EQ(partial.code, kDataError);
  EXPECT_EQ(nlohmann::json::parse(partial.out)["coverage"], "partial");

  EXPECT_EQ(invoke({"synth-table", "--model", path("model.cfg"), "--hw",
                    path("hw.cfg"), "--efficiency", "2"})
                .code,
            kDataError);
}

TEST_F(CliTest, MalformedTraceRowsAbortUnlessPermissive) {
  write("bad.csv", "input_tokens,output_tokens\n10,2\n-3,1\n");
  const Result strict = invoke({"stats", "--trace", path("bad.csv")});
  EXPECT_EQ(strict.code, kDataError);
  EXPECT_NE(strict.err.find("line 3"), std::string::npos);
  const Result lax =
      invoke({"stats", "--trace", path("bad.csv"), "--permissive"});
  EXPECT_EQ(lax.code, 0);
  EXPECT_NE(lax.err.find("skipped 1"), std::string::npos);
}

TEST_F(CliTest, BinaryExitCodes) {
  const std::string bin = LLMENERGY_CLI_PATH;
  auto status = [&](const std::string& args) {
    const int raw = std::system((bin + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(raw);
  };
  EXPECT_EQ(status("--version"), 0);
  EXPECT_EQ(status("nope"), 1);
  EXPECT_EQ(status("stats --trace " + path("missing.csv")), 2);
}

}  // namespace
}  // namespace llmenergy::cli
