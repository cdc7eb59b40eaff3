#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "tridecomp/decomp.hpp"
#include "tridecomp/spectral.hpp"
#include "tridecomp/state.hpp"
#include "tridecomp/tolerances.hpp"

namespace tridecomp {

using Json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "tridecomp/1";

// States: {"schema","dims","format":"dense","amplitudes":[[re,im],...]} or
// {"schema","dims","format":"product_sum","terms":[{"coeff":[re,im],"factors":[[[idx,[re,im]],...],...]}]}.
// Basis indices are 0-based.
Json state_to_json(const DenseState& s);
Json state_to_json(const SumState& s);
Json state_to_json(const State& s);
// Throws SchemaError on any structural or numerical defect.
State state_from_json(const Json& j);

Json tolerances_to_json(const Tolerances& tol);
// Missing keys keep the defaults.
Tolerances tolerances_from_json(const Json& j);

Json certificate_to_json(const DecompositionCertificate& c);
// Product-sum layout plus "kind":"decomposition", "variant", and optionally the
// certificate and tolerance echo.
Json decomposition_to_json(const TriDecomposition& d, const DecompositionCertificate* cert = nullptr,
                           const Tolerances* tol = nullptr);
TriDecomposition decomposition_from_json(const Json& j);

Json schmidt_to_json(const SchmidtDecomposition& s);
Json lemma_report_to_json(const LemmaReport& r);

// Bundles group named states and decompositions with a provenance block:
// {"schema","kind":"bundle","provenance":{...},"primary":name,"states":{...},"decompositions":{...}}.
bool is_bundle(const Json& j);
// A bare state document, or the named (default: primary) state of a bundle.
State select_state(const Json& j, const std::optional<std::string>& name = std::nullopt);
// A bare decomposition document, or the named (default: first) decomposition of a bundle.
TriDecomposition select_decomposition(const Json& j, const std::optional<std::string>& name = std::nullopt);

// Parse errors raise SchemaError; unreadable files raise ArgumentError.
Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace tridecomp
