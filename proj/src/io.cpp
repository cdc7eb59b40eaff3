#include "tridecomp/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "tridecomp/errors.hpp"

namespace tridecomp {

namespace {

Json complex_to_json(Complex c) { return Json::array({c.real(), c.imag()}); }

Complex complex_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw SchemaError(where + ": expected [re, im]");
  const Complex c(j[0].get<double>(), j[1].get<double>());
  if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw SchemaError(where + ": non-finite number");
  return c;
}

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw SchemaError(where + ": missing \"" + key + "\"");
  return *it;
}

void check_schema(const Json& j, const std::string& where) {
  const Json& s = field(j, "schema", where);
  if (!s.is_string() || s.get<std::string>() != kSchemaVersion)
    throw SchemaError(where + ": unsupported schema (expected \"" + std::string(kSchemaVersion) + "\")");
}

ProductSpace space_from_json(const Json& j, const std::string& where) {
  const Json& dims = field(j, "dims", where);
  if (!dims.is_array()) throw SchemaError(where + ": \"dims\" must be an array");
  std::vector<std::size_t> out;
  for (const auto& d : dims) {
    if (!d.is_number_unsigned()) throw SchemaError(where + ": dims must be positive integers");
    out.push_back(d.get<std::size_t>());
  }
  try {
    return ProductSpace(out);
  } catch (const std::exception& e) {
    throw SchemaError(where + ": " + e.what());
  }
}

Json terms_to_json(const std::vector<ProductTerm>& terms) {
  Json out = Json::array();
  for (const auto& t : terms) {
    Json factors = Json::array();
    for (const auto& f : t.factors) {
      Json entries = Json::array();
      for (const auto& [idx, v] : f.entries()) entries.push_back(Json::array({idx, complex_to_json(v)}));
      factors.push_back(std::move(entries));
    }
    out.push_back({{"coeff", complex_to_json(t.coeff)}, {"factors", std::move(factors)}});
  }
  return out;
}

std::vector<ProductTerm> terms_from_json(const Json& j, const ProductSpace& space, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + ": \"terms\" must be an array");
  std::vector<ProductTerm> terms;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string at = where + ": term " + std::to_string(k);
    ProductTerm t{complex_from_json(field(j[k], "coeff", at), at + " coeff"), {}};
    const Json& factors = field(j[k], "factors", at);
    if (!factors.is_array() || factors.size() != space.factor_count())
      throw SchemaError(at + ": expected " + std::to_string(space.factor_count()) + " factor vectors");
    for (std::size_t i = 0; i < factors.size(); ++i) {
      if (!factors[i].is_array()) throw SchemaError(at + ": factor vector must be an array of [idx, [re, im]]");
      std::vector<SparseVector::Entry> entries;
      for (const auto& e : factors[i]) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned())
          throw SchemaError(at + ": factor entries must be [idx, [re, im]]");
        const auto idx = e[0].get<std::size_t>();
        if (idx >= space.dim(i)) throw SchemaError(at + ": basis index " + std::to_string(idx) + " out of range");
        entries.emplace_back(idx, complex_from_json(e[1], at));
      }
      try {
        t.factors.emplace_back(std::move(entries));
      } catch (const std::exception& ex) {
        throw SchemaError(at + ": " + ex.what());
      }
    }
    terms.push_back(std::move(t));
  }
  return terms;
}

}  // namespace

Json state_to_json(const DenseState& s) {
  Json amps = Json::array();
  for (Eigen::Index i = 0; i < s.amplitudes().size(); ++i) amps.push_back(complex_to_json(s.amplitudes()[i]));
  return {{"schema", kSchemaVersion}, {"dims", s.space().dims()}, {"format", "dense"}, {"amplitudes", std::move(amps)}};
}

Json state_to_json(const SumState& s) {
  return {{"schema", kSchemaVersion}, {"dims", s.space().dims()}, {"format", "product_sum"}, {"terms", terms_to_json(s.terms())}};
}

Json state_to_json(const State& s) {
  return std::visit([](const auto& x) { return state_to_json(x); }, s);
}

State state_from_json(const Json& j) {
  const std::string where = "state";
  check_schema(j, where);
  const ProductSpace space = space_from_json(j, where);
  const Json& format = field(j, "format", where);
  if (!format.is_string()) throw SchemaError(where + ": \"format\" must be a string");
  const std::string fmt = format.get<std::string>();
  try {
    if (fmt == "dense") {
      const Json& amps = field(j, "amplitudes", where);
      if (!amps.is_array()) throw SchemaError(where + ": \"amplitudes\" must be an array");
      if (amps.size() != space.total_dim())
        throw SchemaError(where + ": " + std::to_string(amps.size()) + " amplitudes for product dimension " +
                          std::to_string(space.total_dim()));
      Vector v(static_cast<Eigen::Index>(amps.size()));
      for (std::size_t i = 0; i < amps.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = complex_from_json(amps[i], where + " amplitude " + std::to_string(i));
      const bool unit = std::abs(v.norm() - 1.0) <= Tolerances{}.norm;
      return DenseState(space, std::move(v), unit);
    }
    if (fmt == "product_sum") return SumState(space, terms_from_json(field(j, "terms", where), space, where));
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw SchemaError(where + ": " + e.what());
  }
  throw SchemaError(where + ": unknown format \"" + fmt + "\"");
}

Json tolerances_to_json(const Tolerances& tol) {
  return {{"norm", tol.norm},     {"herm", tol.herm},
          {"psd", tol.psd},       {"li", tol.li},
          {"orth", tol.orth},     {"deg", tol.deg},
          {"reconstruction", tol.reconstruction},
          {"spectral_match", tol.spectral_match},
          {"zero", tol.zero}};
}

Tolerances tolerances_from_json(const Json& j) {
  Tolerances tol;
  if (!j.is_object()) throw SchemaError("tolerances: expected an object");
  auto read = [&](const char* key, double& slot) {
    if (const auto it = j.find(key); it != j.end()) {
      if (!it->is_number() || !(it->get<double>() > 0.0)) throw SchemaError(std::string("tolerances: bad \"") + key + "\"");
      slot = it->get<double>();
    }
  };
  read("norm", tol.norm);
  read("herm", tol.herm);
  read("psd", tol.psd);
  read("li", tol.li);
  read("orth", tol.orth);
  read("deg", tol.deg);
  read("reconstruction", tol.reconstruction);
  read("spectral_match", tol.spectral_match);
  read("zero", tol.zero);
  return tol;
}

Json certificate_to_json(const DecompositionCertificate& c) {
  return {{"variant", variant_name(c.variant)},
          {"passed", c.passed},
          {"failed_condition", c.failed_condition},
          {"reconstruction_error", c.reconstruction_error},
          {"min_coefficient", c.min_coefficient},
          {"min_singular_values", c.min_singular_values},
          {"max_overlaps", c.max_overlaps}};
}

Json decomposition_to_json(const TriDecomposition& d, const DecompositionCertificate* cert, const Tolerances* tol) {
  Json out = {{"schema", kSchemaVersion},
              {"kind", "decomposition"},
              {"dims", d.space.dims()},
              {"format", "product_sum"},
              {"variant", variant_name(d.variant)},
              {"terms", terms_to_json(d.terms)}};
  if (cert) out["certificate"] = certificate_to_json(*cert);
  if (tol) out["tolerances"] = tolerances_to_json(*tol);
  return out;
}

TriDecomposition decomposition_from_json(const Json& j) {
  const std::string where = "decomposition";
  check_schema(j, where);
  const ProductSpace space = space_from_json(j, where);
  const Json& variant = field(j, "variant", where);
  if (!variant.is_string()) throw SchemaError(where + ": \"variant\" must be a string");
  Variant v;
  try {
    v = parse_variant(variant.get<std::string>());
  } catch (const std::exception& e) {
    throw SchemaError(where + ": " + e.what());
  }
  auto terms = terms_from_json(field(j, "terms", where), space, where);
  if (terms.empty()) throw SchemaError(where + ": no terms");
  try {
    SumState check(space, terms);  // validates unit factors
  } catch (const std::exception& e) {
    throw SchemaError(where + ": " + e.what());
  }
  return TriDecomposition{space, std::move(terms), v};
}

Json schmidt_to_json(const SchmidtDecomposition& s) {
  Json coeffs = Json::array();
  for (Eigen::Index k = 0; k < s.coefficients.size(); ++k) coeffs.push_back(s.coefficients[k]);
  auto columns = [](const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      Json col = Json::array();
      for (Eigen::Index r = 0; r < m.rows(); ++r) col.push_back(complex_to_json(m(r, c)));
      out.push_back(std::move(col));
    }
    return out;
  };
  return {{"schema", kSchemaVersion},
          {"kind", "schmidt"},
          {"left_factors", s.left_factors},
          {"right_factors", s.right_factors},
          {"rank", s.rank()},
          {"coefficients", std::move(coeffs)},
          {"left", columns(s.left)},
          {"right", columns(s.right)}};
}

Json lemma_report_to_json(const LemmaReport& r) {
  Json out = {{"lemma", r.lemma}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"holds", r.holds}};
  for (const auto& [k, v] : r.details) out[k] = v;
  return out;
}

bool is_bundle(const Json& j) {
  return j.is_object() && j.contains("kind") && j["kind"].is_string() && j["kind"].get<std::string>() == "bundle";
}

State select_state(const Json& j, const std::optional<std::string>& name) {
  if (!is_bundle(j)) {
    if (name) throw SchemaError("state \"" + *name + "\" requested but the document is not a bundle");
    return state_from_json(j);
  }
  check_schema(j, "bundle");
  const Json& states = field(j, "states", "bundle");
  std::string key;
  if (name) {
    key = *name;
  } else {
    const Json& primary = field(j, "primary", "bundle");
    if (!primary.is_string()) throw SchemaError("bundle: \"primary\" must be a string");
    key = primary.get<std::string>();
  }
  if (!states.is_object() || !states.contains(key)) throw SchemaError("bundle: no state named \"" + key + "\"");
  return state_from_json(states[key]);
}

TriDecomposition select_decomposition(const Json& j, const std::optional<std::string>& name) {
  if (!is_bundle(j)) {
    if (name) throw SchemaError("decomposition \"" + *name + "\" requested but the document is not a bundle");
    return decomposition_from_json(j);
  }
  check_schema(j, "bundle");
  const Json& decs = field(j, "decompositions", "bundle");
  if (!decs.is_object() || decs.empty()) throw SchemaError("bundle: no decompositions");
  if (!name) return decomposition_from_json(decs.begin().value());
  if (!decs.contains(*name)) throw SchemaError("bundle: no decomposition named \"" + *name + "\"");
  return decomposition_from_json(decs[*name]);
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const Json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write " + path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

}  // namespace tridecomp
