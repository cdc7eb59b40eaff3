#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "tridecomp/cli.hpp"
#include "tridecomp/io.hpp"

using namespace tridecomp;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
  Json json() const { return Json::parse(out); }
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "tridecomp_cli_test";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

std::string write(const std::string& name, const Json& j) {
  const std::string p = scratch(name);
  write_text_file(p, j.dump());
  return p;
}

}  // namespace

TEST(Cli, InfoReportsSchemaAndTolerances) {
  const Outcome r = run({"info"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json j = r.json();
  EXPECT_EQ(j["schema"], kSchemaVersion);
  EXPECT_DOUBLE_EQ(j["tolerances"]["li"].get<double>(), 1e-8);
}

TEST(Cli, SingletConstructionWritesThreeStatesAndTwoVerifiedDecompositions) {
  const std::string path = scratch("singlet.json");
  const Outcome r = run({"construct", "singlet", "--theta", "0.3", "-o", path});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json b = read_json_file(path);
  EXPECT_EQ(b["kind"], "bundle");
  EXPECT_EQ(b["states"].size(), 3u);
  ASSERT_EQ(b["decompositions"].size(), 2u);
  for (const auto& [name, d] : b["decompositions"].items()) EXPECT_EQ(d["certificate"]["passed"], true) << name;

  // Every consuming subcommand accepts the bundle unmodified.
  const Outcome v = run({"verify", "--in", path});
  EXPECT_EQ(v.code, kExitOk) << v.err;
  const Outcome s = run({"schmidt", "--in", path, "--left", "0"});
  ASSERT_EQ(s.code, kExitOk) << s.err;
  EXPECT_EQ(s.json()["rank"], 1);
  const Outcome x = run({"extract", "--in", path});
  ASSERT_EQ(x.code, kExitOk) << x.err;
  EXPECT_EQ(x.json()["status"], "not_triorthogonal");
  const Outcome x2 = run({"extract", "--in", path, "--state", "phi_theta"});
  EXPECT_EQ(x2.code, kExitOk) << x2.err;
}

TEST(Cli, ExtractProductStatePrintsSingleTerm) {
  Json j = {{"schema", kSchemaVersion}, {"dims", {2, 2, 2}}, {"format", "dense"}, {"amplitudes", Json::array()}};
  for (int i = 0; i < 8; ++i) j["amplitudes"].push_back({i == 5 ? 1.0 : 0.0, 0.0});
  const Outcome r = run({"extract", "--in", write("product.json", j)});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json out = r.json();
  EXPECT_EQ(out["status"], "triorthogonal");
  EXPECT_EQ(out["decomposition"]["terms"].size(), 1u);
}

TEST(Cli, OtherConstructionsSucceed) {
  for (const std::vector<std::string>& args :
       {std::vector<std::string>{"construct", "reduced-pair", "--theta", "0.1"},
        std::vector<std::string>{"construct", "diverging", "--theta", "0.0001"},
        std::vector<std::string>{"construct", "witness3", "--n", "3"},
        std::vector<std::string>{"construct", "witness4", "--n", "2"},
        std::vector<std::string>{"construct", "perturbed", "--epsilon", "0.1"},
        std::vector<std::string>{"construct", "paired", "--epsilon", "0.7"}}) {
    const Outcome r = run(args);
    EXPECT_EQ(r.code, kExitOk) << args[1] << ": " << r.err;
  }
}

TEST(Cli, PairedBundleRoundTripsThroughVerify) {
  const std::string path = scratch("paired.json");
  ASSERT_EQ(run({"construct", "mover", "--epsilon", "0.7", "-o", path}).code, kExitOk);
  const Json b = read_json_file(path);
  EXPECT_EQ(b["terms"][1], 729);
  EXPECT_TRUE(b.contains("mover"));
  const Outcome v = run({"verify", "--in", path, "--decomposition", "phi2"});
  EXPECT_EQ(v.code, kExitOk) << v.err;
}

TEST(Cli, VerifyFailureExitsTwo) {
  const std::string path = scratch("singlet_for_mismatch.json");
  ASSERT_EQ(run({"construct", "singlet", "--theta", "0.5", "-o", path}).code, kExitOk);
  Json b = read_json_file(path);
  b["decompositions"]["phi_theta"]["state"] = "psi_theta";  // pair a decomposition with the wrong state
  const Outcome r = run({"verify", "--in", write("mismatch.json", b)});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_NE(r.err.find("reconstruction"), std::string::npos);
}

TEST(Cli, OversizedAngleExitsWithFailure) {
  const Outcome r = run({"construct", "paired", "--epsilon", "0.7", "--theta", "1.5"});
  EXPECT_NE(r.code, kExitOk);
}

TEST(Cli, MatchNearbyStates) {
  const std::string path = scratch("perturbed.json");
  ASSERT_EQ(run({"construct", "perturbed", "--epsilon", "0.1", "-o", path}).code, kExitOk);
  const Json b = read_json_file(path);
  const std::string psi = write("match_psi.json", b["states"]["psi"]);
  const Outcome same = run({"match", "--in", psi, "--other", psi, "--epsilon", "0.2"});
  ASSERT_EQ(same.code, kExitOk) << same.err;
  EXPECT_EQ(same.json()["all_hold"], true);
  // The perturbed state is not triorthogonal: a precondition failure, exit 2.
  const std::string moved = write("match_moved.json", b["states"]["psi_eps"]);
  const Outcome pre = run({"match", "--in", psi, "--other", moved, "--epsilon", "0.2"});
  EXPECT_EQ(pre.code, kExitFailure);
}

TEST(Cli, CampaignReportsAreSeedDeterministic) {
  const Outcome a = run({"campaign", "stability", "--trials", "20", "--seed", "7"});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  Json ja = a.json();
  EXPECT_EQ(ja["trials"].size(), 20u);
  const Outcome b = run({"campaign", "stability", "--trials", "20", "--seed", "7"});
  Json jb = b.json();
  ja.erase("elapsed_seconds");
  jb.erase("elapsed_seconds");
  EXPECT_EQ(ja.dump(), jb.dump());
  const Outcome csv = run({"campaign", "spectral", "--trials", "5", "--format", "csv", "--selector", "overlap"});
  ASSERT_EQ(csv.code, kExitOk) << csv.err;
  EXPECT_EQ(std::count(csv.out.begin(), csv.out.end(), '\n'), 6);
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"info", "--no-such-flag"}).code, kExitUsage);
  EXPECT_EQ(run({"construct", "nonexistent"}).code, kExitUsage);
  EXPECT_EQ(run({"campaign", "stability", "--trials", "0"}).code, kExitUsage);
  EXPECT_EQ(run({"construct", "singlet", "--tol-li", "-1"}).code, kExitUsage);
  EXPECT_EQ(run({"extract"}).code, kExitUsage);
  EXPECT_EQ(run({"extract", "--in", scratch("missing.json")}).code, kExitUsage);
}

TEST(Cli, MalformedStateFileExitsOne) {
  const std::string broken = scratch("broken.json");
  write_text_file(broken, "{\"schema\":\"tridecomp/1\",\"dims\":[2,2],\"format\":\"dense\",\"amplitudes\":[[1,0]]}");
  const Outcome r = run({"extract", "--in", broken});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_FALSE(r.err.empty());
  write_text_file(broken, "not json");
  EXPECT_EQ(run({"schmidt", "--in", broken, "--left", "0"}).code, kExitUsage);
}

TEST(Cli, ToleranceFlagsAreEchoed) {
  const Outcome r = run({"construct", "singlet", "--tol-li", "1e-6", "--tol-deg", "1e-5"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json j = r.json();
  EXPECT_DOUBLE_EQ(j["tolerances"]["li"].get<double>(), 1e-6);
  EXPECT_DOUBLE_EQ(j["tolerances"]["deg"].get<double>(), 1e-5);
}
