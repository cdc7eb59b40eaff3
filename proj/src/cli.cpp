#include "tridecomp/cli.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "tridecomp/constructions.hpp"
#include "tridecomp/errors.hpp"
#include "tridecomp/experiments.hpp"
#include "tridecomp/io.hpp"

namespace tridecomp {

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr double kPi = 3.14159265358979323846;

// Raised when a verification or bound check fails; maps to exit code 2.
struct CheckFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string in, other, decomp, out;
  std::optional<std::string> state_name, decomp_name;
  std::optional<double> theta, epsilon;
  std::vector<std::size_t> dims, left{0};
  std::size_t trials = 100, n = 2, blocks = 0;
  std::uint64_t seed = 7;
  std::string format = "json", selector, which;
  std::optional<double> tol_li, tol_orth, tol_deg;

  Tolerances tolerances() const {
    Tolerances t;
    if (tol_li) t.li = *tol_li;
    if (tol_orth) t.orth = *tol_orth;
    if (tol_deg) t.deg = *tol_deg;
    return t;
  }
};

void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out.empty())
    out << text << (text.empty() || text.back() == '\n' ? "" : "\n");
  else
    write_text_file(o.out, text);
}

void emit(const Options& o, const Json& j, std::ostream& out) { emit(o, j.dump(2), out); }

void require_json(const Options& o) {
  if (o.format != "json") throw ArgumentError("--format csv is only available for campaign reports");
}

void require_input(const Options& o) {
  if (o.in.empty()) throw ArgumentError("--in is required");
}

// u_1 ⊗ u_1 ⊗ … on the given shape.
DenseState first_basis_product(const std::vector<std::size_t>& dims) {
  const ProductSpace space(dims);
  std::vector<Vector> f;
  for (std::size_t d : dims) f.push_back(Vector::Unit(static_cast<Eigen::Index>(d), 0));
  return DenseState::product(space, f);
}

double theta_or(const Options& o, double fallback) {
  const double t = o.theta.value_or(fallback);
  if (!(t > 0.0 && t <= kPi / 2.0)) throw ArgumentError("--theta must lie in (0, π/2]");
  return t;
}

Json provenance(const std::string& construction, Json parameters) {
  return {{"construction", construction}, {"parameters", std::move(parameters)}, {"generator", "tridecomp"}, {"version", kVersion}};
}

Json bundle(Json prov, const std::string& primary) {
  return {{"schema", kSchemaVersion}, {"kind", "bundle"}, {"provenance", std::move(prov)}, {"primary", primary},
          {"states", Json::object()}, {"decompositions", Json::object()}, {"checks", Json::object()}};
}

// Adds a decomposition verified against the named state; failures are collected.
void add_verified(Json& b, const std::string& name, const TriDecomposition& d, const std::string& state_name,
                  const State& state, const Tolerances& tol, std::vector<std::string>& failures) {
  const DecompositionCertificate cert = verify_tridecomposition(d, state, tol);
  Json j = decomposition_to_json(d, &cert, &tol);
  j["state"] = state_name;
  b["decompositions"][name] = std::move(j);
  if (!cert.passed) failures.push_back(name + ": " + cert.failed_condition);
}

void add_check(Json& b, const std::string& name, double lhs, double rhs, bool holds, std::vector<std::string>& failures,
               const std::string& relation) {
  b["checks"][name] = {{"lhs", lhs}, {"rhs", rhs}, {"relation", relation}, {"holds", holds}};
  if (!holds) failures.push_back(name + " " + relation + " fails: " + std::to_string(lhs) + " vs " + std::to_string(rhs));
}

void finish_checks(const std::vector<std::string>& failures) {
  if (failures.empty()) return;
  std::string msg;
  for (const auto& f : failures) msg += (msg.empty() ? "" : "; ") + f;
  throw CheckFailed(msg);
}

// ---------------------------------------------------------------------------

int run_schmidt(const Options& o, std::ostream& out) {
  require_input(o);
  require_json(o);
  const State psi = select_state(read_json_file(o.in), o.state_name);
  const SchmidtDecomposition s = schmidt(psi, o.left, o.tolerances());
  Json j = schmidt_to_json(s);
  j["tolerances"] = tolerances_to_json(o.tolerances());
  emit(o, j, out);
  return kExitOk;
}

int run_extract(const Options& o, std::ostream& out) {
  require_input(o);
  require_json(o);
  const Tolerances tol = o.tolerances();
  const State psi = select_state(read_json_file(o.in), o.state_name);
  const ExtractionResult r = extract_triortho(psi, tol, o.seed);
  Json j = {{"schema", kSchemaVersion}, {"kind", "extraction"}, {"status", status_name(r.status)}, {"reason", r.reason},
            {"tolerances", tolerances_to_json(tol)}};
  if (r.decomposition) {
    const DecompositionCertificate cert = verify_tridecomposition(r.decomposition->decomposition, psi, tol);
    j["decomposition"] = decomposition_to_json(r.decomposition->decomposition, &cert, &tol);
    Json blocks = Json::array();
    for (const auto& b : r.decomposition->blocks) blocks.push_back({{"magnitude", b.magnitude}, {"members", b.members}});
    j["blocks"] = std::move(blocks);
  }
  emit(o, j, out);
  return kExitOk;
}

int run_verify(const Options& o, std::ostream& out) {
  require_input(o);
  require_json(o);
  const Tolerances tol = o.tolerances();
  const Json doc = read_json_file(o.in);
  Json report = {{"schema", kSchemaVersion}, {"kind", "verification"}, {"tolerances", tolerances_to_json(tol)},
                 {"certificates", Json::object()}};
  std::vector<std::string> failures;
  auto check = [&](const std::string& name, const TriDecomposition& d, const State& s) {
    const DecompositionCertificate c = verify_tridecomposition(d, s, tol);
    report["certificates"][name] = certificate_to_json(c);
    if (!c.passed) failures.push_back(name + ": " + c.failed_condition);
  };
  if (!o.decomp.empty()) {
    const State psi = select_state(doc, o.state_name);
    check(o.decomp_name.value_or("decomposition"), select_decomposition(read_json_file(o.decomp), o.decomp_name), psi);
  } else if (is_bundle(doc)) {
    if (!doc.contains("decompositions") || doc["decompositions"].empty())
      throw SchemaError("bundle has no decompositions to verify; pass --decomp");
    for (const auto& [name, dj] : doc["decompositions"].items()) {
      if (o.decomp_name && name != *o.decomp_name) continue;
      if (!dj.contains("state") || !dj["state"].is_string())
        throw SchemaError("bundle decomposition \"" + name + "\" names no state");
      check(name, decomposition_from_json(dj), select_state(doc, dj["state"].get<std::string>()));
    }
  } else {
    throw ArgumentError("--decomp is required when --in is not a bundle");
  }
  emit(o, report, out);
  finish_checks(failures);
  return kExitOk;
}

int run_construct(const Options& o, std::ostream& out) {
  require_json(o);
  const Tolerances tol = o.tolerances();
  std::vector<std::string> failures;
  Json b;
  const std::string& w = o.which;

  if (w == "singlet") {
    const double theta = theta_or(o, 0.3);
    const SingletFamily ex = singlet_family(theta);
    b = bundle(provenance(w, {{"theta", theta}}), "psi");
    b["states"]["psi"] = state_to_json(ex.psi);
    b["states"]["phi_theta"] = state_to_json(ex.phi_theta);
    b["states"]["psi_theta"] = state_to_json(ex.psi_theta);
    add_verified(b, "phi_theta", ex.phi_decomposition, "phi_theta", ex.phi_theta, tol, failures);
    add_verified(b, "psi_theta", ex.psi_decomposition, "psi_theta", ex.psi_theta, tol, failures);
  } else if (w == "reduced-pair") {
    const double theta = theta_or(o, 0.3);
    const SingletFamily family = singlet_family(theta);
    const ReducedPair ex = reduced_pair(theta);
    b = bundle(provenance(w, {{"theta", theta}}), "phi_theta");
    b["states"]["phi_theta"] = state_to_json(family.phi_theta);
    b["states"]["psi_theta"] = state_to_json(family.psi_theta);
    b["trace_norm_gap"] = ex.trace_norm_gap;
    Json cross = Json::array();
    for (Eigen::Index i = 0; i < 2; ++i) cross.push_back({ex.cross_overlaps(i, 0), ex.cross_overlaps(i, 1)});
    b["cross_overlaps"] = cross;
    const double ceiling = 1.0 / std::sqrt(2.0) + 1e-10;
    add_check(b, "max_cross_overlap", ex.cross_overlaps.maxCoeff(), ceiling, ex.cross_overlaps.maxCoeff() <= ceiling,
              failures, "≤");
    add_check(b, "convex_sum_error", ex.formula_error, 1e-12, ex.formula_error <= 1e-12, failures, "≤");
  } else if (w == "diverging") {
    const double theta = theta_or(o, 1e-4);
    const DivergingFamily ex = diverging_family(theta);
    b = bundle(provenance(w, {{"theta", theta}}), "psi_theta");
    b["states"]["psi_theta"] = state_to_json(ex.psi_theta);
    b["states"]["limit"] = state_to_json(ex.limit);
    b["max_raw_coefficient"] = ex.max_raw_coefficient;
    b["distance_to_limit"] = (ex.psi_theta.amplitudes() - ex.limit.amplitudes()).norm();
    add_verified(b, "psi_theta", ex.decomposition, "psi_theta", ex.psi_theta, tol, failures);
  } else if (w == "paired" || w == "mover") {
    const double eps = o.epsilon.value_or(0.7);
    const DenseState psi = o.in.empty() ? first_basis_product(o.dims.empty() ? std::vector<std::size_t>{2, 2, 2} : o.dims)
                                        : to_dense(select_state(read_json_file(o.in), o.state_name));
    const PairedExpansions r = paired_expansions(psi, eps, o.theta);
    Json params = {{"epsilon", eps}, {"theta", r.theta}, {"n0", r.n0}, {"n", r.n}};
    b = bundle(provenance(w, params), "phi1");
    b["states"]["psi"] = state_to_json(psi);
    b["states"]["phi1"] = state_to_json(r.phi1);
    b["states"]["phi2"] = state_to_json(r.phi2);
    add_verified(b, "phi1", r.d1, "phi1", r.phi1, tol, failures);
    add_verified(b, "phi2", r.d2, "phi2", r.phi2, tol, failures);
    add_check(b, "distance1", r.distance1, eps, r.distance1 < eps, failures, "<");
    add_check(b, "distance2", r.distance2, eps, r.distance2 < eps, failures, "<");
    add_check(b, "basis_overlap_floor", 1.0 - eps, r.min_basis_overlap, 1.0 - eps < r.min_basis_overlap, failures, "<");
    add_check(b, "cross_overlap", r.max_cross_overlap, eps, r.max_cross_overlap < eps, failures, "<");
    b["terms"] = {r.d1.size(), r.d2.size()};
    if (w == "mover") {
      const TensorStructurePair pair = structure_mover(r.phi1, r.phi2, tol);
      const MoverUnitary& u = pair.mover;
      const double tn = u.correction_trace_norm();
      const double two_d = 2.0 * u.states_distance();
      b["mover"] = {{"alpha", {u.alpha().real(), u.alpha().imag()}}, {"beta", u.beta()}, {"states_distance", u.states_distance()}};
      add_check(b, "trace_norm_identity", std::abs(tn - two_d), 1e-8, std::abs(tn - two_d) <= 1e-8, failures, "≤");
      add_check(b, "trace_norm_bound", tn, 4.0 * eps, tn < 4.0 * eps, failures, "<");
    }
  } else if (w == "witness3" || w == "witness4") {
    const bool four = w == "witness4";
    const DenseState phi = four ? isolation_witness_4(o.n, o.dims.empty() ? std::nullopt : std::optional(o.dims))
                                : isolation_witness_3(o.n, o.dims.empty() ? std::nullopt : std::optional(o.dims));
    b = bundle(provenance(w, {{"n", o.n}}), "phi");
    b["states"]["phi"] = state_to_json(phi);
    const std::vector<std::size_t> keep = four ? std::vector<std::size_t>{1, 2} : std::vector<std::size_t>{2};
    const double s = entropy(partial_trace(phi, keep, tol), tol).nats;
    const double exact = std::log(static_cast<double>(o.n + 1));
    b["entropy"] = {{"kept_factors", keep}, {"nats", s}, {"log_base", EntropyValue::log_base_note}};
    add_check(b, "entropy_error", std::abs(s - exact), 1e-10, std::abs(s - exact) <= 1e-10, failures, "≤");
    if (!four) {
      const EntropyBoundReport eb = entropy_decomposition_bound(phi, o.n, tol);
      add_check(b, "term_count_ceiling", std::log(static_cast<double>(o.n)), s, eb.violated, failures, "<");
    }
  } else if (w == "perturbed") {
    const double eps = o.epsilon.value_or(0.1);
    const State source = o.in.empty() ? State(first_basis_product(o.dims.empty() ? std::vector<std::size_t>{3, 3, 3} : o.dims))
                                      : select_state(read_json_file(o.in), o.state_name);
    const ExtractionResult ex = extract_triortho(source, tol, o.seed);
    if (ex.status != ExtractionStatus::Triorthogonal)
      throw PreconditionError(std::string("input must be triorthogonal: ") + status_name(ex.status) + " (" + ex.reason + ")");
    const DenseState moved = isolating_perturbation(*ex.decomposition, eps, tol);
    const DenseState base = to_dense(source);
    b = bundle(provenance(w, {{"epsilon", eps}}), "psi_eps");
    b["states"]["psi"] = state_to_json(base);
    b["states"]["psi_eps"] = state_to_json(moved);
    const double sq = (base.amplitudes() - moved.amplitudes()).squaredNorm();
    add_check(b, "squared_distance", sq, 2.0 * eps + 1e-12, sq <= 2.0 * eps + 1e-12, failures, "≤");
    const SpectraAgreement sa = reduced_spectra_agreement(moved, tol.spectral_match, tol);
    Json r1 = Json::array();
    for (const auto& s : sa.spectra) r1.push_back(s.at(0));
    b["largest_eigenvalues"] = r1;
    add_check(b, "spectra_mismatch_floor", tol.spectral_match, sa.max_mismatch, !sa.agree, failures, "<");
  } else {
    throw ArgumentError("unknown construction '" + w +
                        "' (singlet, reduced-pair, diverging, paired, mover, witness3, witness4, perturbed)");
  }
  b["tolerances"] = tolerances_to_json(tol);
  emit(o, b, out);
  finish_checks(failures);
  return kExitOk;
}

int run_match(const Options& o, std::ostream& out) {
  require_input(o);
  require_json(o);
  if (o.other.empty()) throw ArgumentError("--other is required");
  if (!o.epsilon) throw ArgumentError("--epsilon is required");
  const Tolerances tol = o.tolerances();
  const State psi_state = select_state(read_json_file(o.in), o.state_name);
  const State phi_state = select_state(read_json_file(o.other));
  const ExtractionResult ep = extract_triortho(psi_state, tol, o.seed);
  const ExtractionResult ef = extract_triortho(phi_state, tol, o.seed);
  if (ep.status != ExtractionStatus::Triorthogonal)
    throw PreconditionError(std::string("Ψ must be triorthogonal: ") + status_name(ep.status) + " (" + ep.reason + ")");
  if (ef.status != ExtractionStatus::Triorthogonal)
    throw PreconditionError(std::string("Φ must be triorthogonal: ") + status_name(ef.status) + " (" + ef.reason + ")");
  const std::size_t L = o.blocks == 0 ? ep.decomposition->block_count() : o.blocks;
  const MatchReport r = match_components(*ep.decomposition, ef.decomposition->decomposition, L, *o.epsilon, tol);
  Json pairs = Json::array();
  for (const auto& p : r.pairs)
    pairs.push_back({{"block", p.block},
                     {"term", p.term},
                     {"partner", p.partner},
                     {"coefficient_gap", p.coefficient_gap},
                     {"overlaps", p.overlaps},
                     {"term_distance", p.term_distance},
                     {"holds", p.holds}});
  Json j = {{"schema", kSchemaVersion},
            {"kind", "match"},
            {"L", r.L},
            {"epsilon", r.epsilon},
            {"epsilon_prime", r.epsilon_prime},
            {"distance", r.distance},
            {"distance_bound", r.distance_bound},
            {"coefficient_bound", r.coefficient_bound()},
            {"overlap_bound", r.overlap_bound()},
            {"term_bound", r.term_bound()},
            {"pairs", pairs},
            {"all_hold", r.all_hold},
            {"tolerances", tolerances_to_json(tol)}};
  emit(o, j, out);
  if (!r.all_hold) throw CheckFailed("matched pair violates | |â|² − |b|² | < 3ε, overlap > 1 − ε or term distance < 3√ε");
  return kExitOk;
}

int run_campaign_cmd(const Options& o, std::ostream& out) {
  if (o.format != "json" && o.format != "csv") throw ArgumentError("--format must be json or csv");
  TrialConfig cfg;
  cfg.seed = o.seed;
  cfg.trial_count = o.trials;
  cfg.dims = o.dims;
  cfg.tol = o.tolerances();
  cfg.selector = o.selector;
  cfg.epsilon = o.epsilon;
  const CampaignReport r = run_campaign(o.which, cfg);
  emit(o, o.format == "csv" ? report_to_csv(r) : report_to_json(r).dump(2), out);
  if (!r.all_passed())
    throw CheckFailed(std::to_string(r.trials.size() - r.passed()) + " of " + std::to_string(r.trials.size()) +
                      " trials failed (worst margin " + std::to_string(r.worst_margin()) + ")");
  return kExitOk;
}

int run_info(const Options& o, std::ostream& out) {
  require_json(o);
  Json j = {{"name", "tridecomp"},
            {"version", kVersion},
            {"schema", kSchemaVersion},
            {"report_schema", kReportSchema},
            {"dense_ceiling", kDefaultDenseCeiling},
            {"log_base", EntropyValue::log_base_note},
            {"tolerances", tolerances_to_json(o.tolerances())},
            {"subcommands", {"schmidt", "extract", "verify", "construct", "match", "campaign", "info"}},
            {"constructions", {"singlet", "reduced-pair", "diverging", "paired", "mover", "witness3", "witness4", "perturbed"}},
            {"campaigns", {"instability", "spectral", "entropy", "roundtrip", "stability", "isolation", "closure"}}};
  emit(o, j, out);
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Decompositions of multipartite pure states", "tridecomp"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto positive = CLI::PositiveNumber;
  auto add_tolerances = [&](CLI::App* sub) {
    sub->add_option("--tol-li", o.tol_li, "Linear independence threshold")->check(positive);
    sub->add_option("--tol-orth", o.tol_orth, "Orthonormality threshold")->check(positive);
    sub->add_option("--tol-deg", o.tol_deg, "Degeneracy grouping threshold")->check(positive);
    sub->add_option("-o,--out", o.out, "Output file (default: standard output)");
    sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  };
  auto add_input = [&](CLI::App* sub) {
    sub->add_option("--in", o.in, "Input state or bundle file");
    sub->add_option("--state", o.state_name, "State name inside a bundle");
  };

  auto* schmidt_cmd = app.add_subcommand("schmidt", "Schmidt decomposition across a bipartition");
  add_input(schmidt_cmd);
  schmidt_cmd->add_option("--left", o.left, "Factors on the left side (0-based)")->delimiter(',');
  add_tolerances(schmidt_cmd);

  auto* extract_cmd = app.add_subcommand("extract", "Triorthogonal decomposition of a three-factor state");
  add_input(extract_cmd);
  extract_cmd->add_option("--seed", o.seed, "Seed for degenerate-block resolution");
  add_tolerances(extract_cmd);

  auto* verify_cmd = app.add_subcommand("verify", "Check decompositions against states");
  add_input(verify_cmd);
  verify_cmd->add_option("--decomp", o.decomp, "Decomposition file");
  verify_cmd->add_option("--decomposition", o.decomp_name, "Decomposition name inside a bundle");
  add_tolerances(verify_cmd);

  auto* construct_cmd = app.add_subcommand("construct", "Build one of the explicit constructions");
  construct_cmd->add_option("construction", o.which, "singlet, reduced-pair, diverging, paired, mover, witness3, witness4, perturbed")
      ->required();
  construct_cmd->add_option("--theta", o.theta, "Angle θ");
  construct_cmd->add_option("--epsilon", o.epsilon, "Proximity ε")->check(CLI::Range(0.0, 1.0));
  construct_cmd->add_option("--dims", o.dims, "Factor dimensions d1,d2,d3[,d4]")->delimiter(',')->check(CLI::Range(2, 1 << 20));
  construct_cmd->add_option("--n", o.n, "Witness size")->check(CLI::Range(1, 64));
  construct_cmd->add_option("--seed", o.seed, "Seed");
  add_input(construct_cmd);
  add_tolerances(construct_cmd);

  auto* match_cmd = app.add_subcommand("match", "Pair the terms of two nearby triorthogonal states");
  add_input(match_cmd);
  match_cmd->add_option("--other", o.other, "Second state file");
  match_cmd->add_option("--epsilon", o.epsilon, "ε in (0, 1/4)")->check(CLI::Range(0.0, 1.0));
  match_cmd->add_option("--blocks", o.blocks, "Number of leading magnitude blocks to match (default: all)");
  match_cmd->add_option("--seed", o.seed, "Seed for degenerate-block resolution");
  add_tolerances(match_cmd);

  auto* campaign_cmd = app.add_subcommand("campaign", "Run a seeded verification campaign");
  campaign_cmd->add_option("name", o.which, "instability, spectral, entropy, roundtrip, stability, isolation, closure")
      ->required();
  campaign_cmd->add_option("--trials", o.trials, "Trial count")->check(CLI::Range(1, 1000000));
  campaign_cmd->add_option("--seed", o.seed, "Campaign seed");
  campaign_cmd->add_option("--dims", o.dims, "Per-factor dimension caps")->delimiter(',')->check(CLI::Range(2, 64));
  campaign_cmd->add_option("--epsilon", o.epsilon, "Fixed ε (default: sampled)")->check(CLI::Range(0.0, 1.0));
  campaign_cmd->add_option("--selector", o.selector, "Campaign variant");
  add_tolerances(campaign_cmd);

  auto* info_cmd = app.add_subcommand("info", "Version, schema and default tolerances");
  add_tolerances(info_cmd);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (schmidt_cmd->parsed()) return run_schmidt(o, out);
    if (extract_cmd->parsed()) return run_extract(o, out);
    if (verify_cmd->parsed()) return run_verify(o, out);
    if (construct_cmd->parsed()) return run_construct(o, out);
    if (match_cmd->parsed()) return run_match(o, out);
    if (campaign_cmd->parsed()) return run_campaign_cmd(o, out);
    if (info_cmd->parsed()) return run_info(o, out);
  } catch (const CheckFailed& e) {
    err << "verification failed: " << e.what() << '\n';
    return kExitFailure;
  } catch (const PreconditionError& e) {
    err << "precondition failed: " << e.what() << '\n';
    return kExitFailure;
  } catch (const BoundViolation& e) {
    err << "bound violated: " << e.what() << '\n';
    return kExitFailure;
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace tridecomp
