#include <gtest/gtest.h>

#include <filesystem>

#include "tridecomp/constructions.hpp"
#include "tridecomp/errors.hpp"
#include "tridecomp/experiments.hpp"
#include "tridecomp/io.hpp"

using namespace tridecomp;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "tridecomp_io_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(StateJson, DenseRoundTrip) {
  const DenseState s = haar_random_state(ProductSpace({2, 3, 2}), 4);
  const Json j = state_to_json(s);
  EXPECT_EQ(j["schema"], kSchemaVersion);
  EXPECT_EQ(j["format"], "dense");
  EXPECT_EQ(j["amplitudes"].size(), 12u);
  const State back = state_from_json(Json::parse(j.dump()));
  const auto& d = std::get<DenseState>(back);
  EXPECT_EQ(d.space(), s.space());
  EXPECT_NEAR((d.amplitudes() - s.amplitudes()).norm(), 0.0, 1e-15);
  EXPECT_TRUE(d.normalized());
}

TEST(StateJson, ProductSumRoundTripKeepsSparseIndices) {
  const SingletFamily ex = singlet_family(0.2);
  const Json j = state_to_json(ex.phi_theta);
  EXPECT_EQ(j["format"], "product_sum");
  const State back = state_from_json(j);
  const auto& s = std::get<SumState>(back);
  ASSERT_EQ(s.term_count(), 2u);
  EXPECT_NEAR(std::abs(inner(s, ex.phi_theta) - Complex(1.0)), 0.0, 1e-12);

  const SumState wide(ProductSpace({1000, 2, 2}), {ProductTerm{1.0, {SparseVector::basis(999), SparseVector::basis(0), SparseVector::basis(1)}}});
  const Json wj = state_to_json(wide);
  EXPECT_EQ(wj["terms"][0]["factors"][0][0][0], 999);
  EXPECT_EQ(std::get<SumState>(state_from_json(wj)).terms()[0].factors[0], SparseVector::basis(999));
}

TEST(StateJson, MalformedDocumentsRaiseSchemaError) {
  const Json good = state_to_json(haar_random_state(ProductSpace({2, 2}), 1));
  Json j = good;
  j["schema"] = "other/9";
  EXPECT_THROW(state_from_json(j), SchemaError);
  j = good;
  j.erase("dims");
  EXPECT_THROW(state_from_json(j), SchemaError);
  j = good;
  j["amplitudes"].erase(0);
  EXPECT_THROW(state_from_json(j), SchemaError);
  j = good;
  j["format"] = "sparse";
  EXPECT_THROW(state_from_json(j), SchemaError);
  j = good;
  j["dims"] = {1, 4};
  EXPECT_THROW(state_from_json(j), SchemaError);
  j = good;
  j["amplitudes"][0] = {1.0};
  EXPECT_THROW(state_from_json(j), SchemaError);

  Json ps = state_to_json(singlet_family(0.3).phi_theta);
  ps["terms"][0]["factors"][0][0][0] = 7;  // index beyond dim 2
  EXPECT_THROW(state_from_json(ps), SchemaError);
  ps = state_to_json(singlet_family(0.3).phi_theta);
  ps["terms"][0]["factors"][0] = Json::array({Json::array({0, {2.0, 0.0}})});  // non-unit factor
  EXPECT_THROW(state_from_json(ps), SchemaError);
}

TEST(DecompositionJson, RoundTripWithCertificate) {
  const SingletFamily ex = singlet_family(0.5);
  const auto cert = verify_tridecomposition(ex.psi_decomposition, State(ex.psi_theta));
  const Tolerances tol;
  const Json j = decomposition_to_json(ex.psi_decomposition, &cert, &tol);
  EXPECT_EQ(j["kind"], "decomposition");
  EXPECT_EQ(j["variant"], variant_name(Variant::LiAll));
  EXPECT_EQ(j["certificate"]["passed"], true);
  EXPECT_DOUBLE_EQ(j["tolerances"]["li"].get<double>(), 1e-8);
  const TriDecomposition back = decomposition_from_json(j);
  EXPECT_EQ(back.variant, Variant::LiAll);
  EXPECT_TRUE(decompositions_equivalent(back, ex.psi_decomposition, 1e-14));
  Json bad = j;
  bad["variant"] = "bogus";
  EXPECT_THROW(decomposition_from_json(bad), SchemaError);
  bad = j;
  bad["terms"] = Json::array();
  EXPECT_THROW(decomposition_from_json(bad), SchemaError);
}

TEST(TolerancesJson, OverridesAndDefaults) {
  const Tolerances t = tolerances_from_json(Json{{"li", 1e-6}});
  EXPECT_EQ(t.li, 1e-6);
  EXPECT_EQ(t.orth, Tolerances{}.orth);
  EXPECT_THROW(tolerances_from_json(Json{{"deg", -1.0}}), SchemaError);
  const Json round = tolerances_to_json(t);
  EXPECT_EQ(tolerances_from_json(round).li, 1e-6);
}

TEST(LemmaReportJson, CarriesBothSides) {
  const LemmaReport r{"eigenvalue_gap", 0.1, 0.2, true, {{"dim", 4.0}}};
  const Json j = lemma_report_to_json(r);
  EXPECT_EQ(j["lemma"], "eigenvalue_gap");
  EXPECT_EQ(j["holds"], true);
  EXPECT_EQ(j["dim"], 4.0);
}

TEST(Bundles, SelectByNameAndDefault) {
  const SingletFamily ex = singlet_family(0.3);
  Json b = {{"schema", kSchemaVersion},
            {"kind", "bundle"},
            {"provenance", Json::object()},
            {"primary", "psi"},
            {"states", {{"psi", state_to_json(ex.psi)}, {"phi_theta", state_to_json(ex.phi_theta)}}},
            {"decompositions", {{"phi_theta", decomposition_to_json(ex.phi_decomposition)}}}};
  EXPECT_TRUE(is_bundle(b));
  EXPECT_TRUE(std::holds_alternative<DenseState>(select_state(b)));
  EXPECT_TRUE(std::holds_alternative<SumState>(select_state(b, "phi_theta")));
  EXPECT_THROW(select_state(b, "missing"), SchemaError);
  EXPECT_EQ(select_decomposition(b).size(), 2u);
  EXPECT_THROW(select_state(state_to_json(ex.psi), "psi"), SchemaError);
}

TEST(Files, ReadWriteAndErrors) {
  const auto path = scratch("state.json");
  write_text_file(path.string(), state_to_json(singlet_family(0.3).psi).dump());
  EXPECT_NO_THROW(state_from_json(read_json_file(path.string())));
  const auto broken = scratch("broken.json");
  write_text_file(broken.string(), "{\"schema\": ");
  EXPECT_THROW(read_json_file(broken.string()), SchemaError);
  EXPECT_THROW(read_json_file(scratch("does_not_exist.json").string()), ArgumentError);
}
