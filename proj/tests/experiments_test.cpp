#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "tridecomp/errors.hpp"
#include "tridecomp/experiments.hpp"

using namespace tridecomp;

namespace {

double measured(const TrialRecord& t, const std::string& key) {
  for (const auto& [k, v] : t.measured)
    if (k == key) return v;
  ADD_FAILURE() << "missing " << key;
  return NAN;
}

TrialConfig config(std::uint64_t seed, std::size_t trials, std::string selector = {}) {
  TrialConfig c;
  c.seed = seed;
  c.trial_count = trials;
  c.selector = std::move(selector);
  return c;
}

}  // namespace

TEST(TrialConfig, ValidationRejectsEmptyAndOversized) {
  TrialConfig c;
  c.trial_count = 0;
  EXPECT_THROW(c.validate(), ArgumentError);
  c.trial_count = 3;
  c.dims = {1};
  EXPECT_THROW(c.validate(), ArgumentError);
  c.dims = {65};
  EXPECT_THROW(c.validate(), ArgumentError);
  c.dims = {4, 4};
  EXPECT_NO_THROW(c.validate());
}

TEST(RandomConstructions, SeparatedMagnitudesAndOrthonormality) {
  Rng rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    const auto m = random_separated_magnitudes(4, 0.03, rng);
    double w = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      w += m[k] * m[k];
      if (k > 0) EXPECT_GE(m[k - 1] - m[k], 0.03 - 1e-12);
    }
    EXPECT_NEAR(w, 1.0, 1e-12);
    const TriDecomposition d = random_triorthogonal({4, 5, 4}, m, rng);
    EXPECT_TRUE(verify_tridecomposition(d, State(d.to_sum_state())).passed);
  }
}

TEST(InstabilitySweep, DivergingCoefficientAtSmallestAngle) {
  const CampaignReport r = run_instability_sweep({0.3, 0.01, 1e-4});
  EXPECT_TRUE(r.all_passed());
  bool found = false;
  for (const auto& t : r.trials)
    for (const auto& [k, v] : t.measured)
      if (k == "max_raw_coefficient" && std::abs(measured(t, "theta") - 1e-4) < 1e-18) {
        EXPECT_NEAR(v, 100.0, 1e-9);
        found = true;
      }
  EXPECT_TRUE(found);
  for (const auto& t : r.trials)
    for (const auto& [k, v] : t.measured)
      if (k == "max_cross_overlap") EXPECT_LE(v, 1.0 / std::sqrt(2.0) + 1e-10);
}

TEST(SpectralCampaign, AllSelectorsPass) {
  for (const char* sel : {"eigenvalue", "projection", "overlap", "partial-trace"}) {
    const CampaignReport r = run_spectral_campaign(config(3, 200, sel));
    EXPECT_EQ(r.trials.size(), 200u);
    EXPECT_EQ(r.pass_rate(), 1.0) << sel;
    EXPECT_GE(r.worst_margin(), -1e-12) << sel;
  }
  EXPECT_THROW(run_spectral_campaign(config(3, 2, "nonsense")), ArgumentError);
}

TEST(EntropyCampaign, CeilingNeverExceeded) {
  const CampaignReport r = run_entropy_campaign(config(4, 100));
  EXPECT_EQ(r.pass_rate(), 1.0);
}

TEST(RoundTripCampaign, ExtractionRecoversConstruction) {
  const CampaignReport r = run_roundtrip_campaign(config(5, 60));
  EXPECT_EQ(r.pass_rate(), 1.0);
}

TEST(StabilityCampaign, SingleProductTrials) {
  const CampaignReport r = run_stability_campaign(config(6, 1000, "single-product"));
  EXPECT_EQ(r.trials.size(), 1000u);
  EXPECT_EQ(r.pass_rate(), 1.0);
  EXPECT_GT(r.worst_margin(), 0.0);
}

TEST(StabilityCampaign, MatchingTrialsInsideHypothesis) {
  const CampaignReport r = run_stability_campaign(config(7, 200));
  EXPECT_EQ(r.pass_rate(), 1.0);
  for (const auto& t : r.trials) EXPECT_LT(measured(t, "distance"), measured(t, "distance_bound"));
  bool has_overlap = false;
  for (const auto& [k, v] : r.aggregate) has_overlap = has_overlap || k == "worst_overlap";
  EXPECT_TRUE(has_overlap);
}

TEST(StabilityCampaign, DegenerateBlocksStillMatchUniquely) {
  const CampaignReport r = run_stability_campaign(config(8, 200, "matching-degenerate"));
  EXPECT_EQ(r.pass_rate(), 1.0);
}

TEST(IsolationScan, WitnessesAndPerturbedStates) {
  TrialConfig c = config(9, 200, "witness3");
  const CampaignReport w3 = run_isolation_scan(c);
  EXPECT_EQ(w3.pass_rate(), 1.0);
  for (const auto& t : w3.trials)
    for (const auto& [k, v] : t.measured)
      if (k == "distance") EXPECT_LE(v, 0.05 + 1e-12);

  const CampaignReport w4 = run_isolation_scan(config(9, 50, "witness4"));
  EXPECT_EQ(w4.pass_rate(), 1.0);

  const CampaignReport p = run_isolation_scan(config(9, 200, "perturbed"));
  EXPECT_EQ(p.pass_rate(), 1.0);
  EXPECT_EQ(p.trials.size(), 2u * 3u * 201u);
}

TEST(ClosureTest, RotatedAndConstantSequences) {
  const CampaignReport rotated = run_closure_test(config(10, 2));
  EXPECT_TRUE(rotated.all_passed());
  ASSERT_EQ(rotated.trials.size(), 5u);
  // sequence members approach the limit; the extrapolated record lands on it
  const double d1 = measured(rotated.trials[1], "term_distance_to_limit");
  const double d4 = measured(rotated.trials[3], "term_distance_to_limit");
  EXPECT_LT(d4, d1);
  EXPECT_LT(measured(rotated.trials.back(), "term_distance_to_limit"), 1e-6);
  const CampaignReport constant = run_closure_test(config(10, 2, "constant"));
  EXPECT_TRUE(constant.all_passed());
}

TEST(CampaignDispatch, UnknownNameRejected) {
  EXPECT_THROW(run_campaign("no-such-campaign", config(1, 1)), ArgumentError);
  EXPECT_EQ(run_campaign("entropy", config(1, 5)).campaign, "entropy");
}

TEST(Reports, DeterministicWithoutTiming) {
  const std::string a = report_to_json(run_stability_campaign(config(11, 30)), false).dump();
  const std::string b = report_to_json(run_stability_campaign(config(11, 30)), false).dump();
  EXPECT_EQ(a, b);
  const std::string c = report_to_json(run_stability_campaign(config(12, 30)), false).dump();
  EXPECT_NE(a, c);
}

TEST(Reports, JsonLayoutAndCsvRows) {
  const CampaignReport r = run_entropy_campaign(config(13, 7));
  const auto j = report_to_json(r);
  EXPECT_EQ(j["schema"], kReportSchema);
  EXPECT_EQ(j["trials"].size(), 7u);
  EXPECT_TRUE(j.contains("elapsed_seconds") || j.dump().find("elapsed") != std::string::npos);
  EXPECT_EQ(report_to_json(r, false).dump().find("elapsed"), std::string::npos);

  const std::string csv = report_to_csv(r);
  std::istringstream in(csv);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 8u);
}

TEST(Reports, TrialsSortedAndDigestsStable) {
  const CampaignReport r = run_roundtrip_campaign(config(14, 10));
  for (std::size_t i = 0; i < r.trials.size(); ++i) {
    EXPECT_EQ(r.trials[i].index, i);
    EXPECT_EQ(r.trials[i].input_digest.size(), 16u);
  }
  Vector v(2);
  v << Complex(1.0, 0.0), Complex(0.0, 1.0);
  EXPECT_EQ(digest(v), digest(v));
  Vector w = v;
  w[1] = Complex(0.0, -1.0);
  EXPECT_NE(digest(v), digest(w));
}
