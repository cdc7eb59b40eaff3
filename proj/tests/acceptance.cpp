// Acceptance suite: one line per criterion, nonzero exit when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "tridecomp/constructions.hpp"
#include "tridecomp/decomp.hpp"
#include "tridecomp/experiments.hpp"
#include "tridecomp/spectral.hpp"

using namespace tridecomp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

const std::vector<double> kGrid{0.3, 0.1, 0.03, 0.01};

Outcome singlet_instability() {
  const auto t0 = Clock::now();
  bool ok = true;
  double prev_phi = INFINITY, prev_psi = INFINITY, last_phi = 0.0, last_psi = 0.0;
  for (double theta : kGrid) {
    const SingletFamily ex = singlet_family(theta);
    const auto c1 = verify_tridecomposition(ex.phi_decomposition, State(ex.phi_theta));
    const auto c2 = verify_tridecomposition(ex.psi_decomposition, State(ex.psi_theta));
    ok = ok && c1.passed && c2.passed && c1.variant == Variant::LiAll && c2.variant == Variant::LiAll;
    last_phi = distance(State(ex.phi_theta), State(ex.psi));
    last_psi = distance(State(ex.psi_theta), State(ex.psi));
    ok = ok && last_phi < prev_phi && last_psi < prev_psi;
    prev_phi = last_phi;
    prev_psi = last_psi;
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 1.0;
  return {ok, "distances at θ=0.01: " + fmt(last_phi) + ", " + fmt(last_psi) + "; " + fmt(secs) + " s"};
}

Outcome reduced_gap() {
  bool ok = true;
  double prev = INFINITY, worst = 0.0, last = 0.0;
  for (double theta : kGrid) {
    const ReducedPair ex = reduced_pair(theta);
    ok = ok && ex.trace_norm_gap < prev;
    prev = last = ex.trace_norm_gap;
    worst = std::max(worst, ex.cross_overlaps.maxCoeff());
  }
  ok = ok && worst <= 1.0 / std::sqrt(2.0) + 1e-10;
  return {ok, "gap at θ=0.01: " + fmt(last) + "; max cross overlap " + fmt(worst)};
}

Outcome diverging_coefficients() {
  const double theta = 1e-4;
  const DivergingFamily ex = diverging_family(theta);
  const double dist = (ex.psi_theta.amplitudes() - ex.limit.amplitudes()).norm();
  const auto cert = verify_tridecomposition(ex.decomposition, State(ex.psi_theta));
  const bool ok = dist < 0.05 && ex.max_raw_coefficient == 1.0 / std::sqrt(theta) &&
                  std::abs(ex.max_raw_coefficient - 100.0) <= 1e-12 && cert.passed;
  return {ok, "distance " + fmt(dist) + ", max coefficient " + fmt(ex.max_raw_coefficient) + ", certificate " +
                  (cert.passed ? "passed" : cert.failed_condition)};
}

DenseState corner_product() {
  return DenseState::product(ProductSpace({2, 2, 2}), {Vector::Unit(2, 0), Vector::Unit(2, 0), Vector::Unit(2, 0)});
}

Outcome paired_expansions(std::optional<PairedExpansions>& keep) {
  const auto t0 = Clock::now();
  const double eps = 0.7;
  const DenseState psi = corner_product();
  PairedExpansions r = paired_expansions(psi, eps);
  const auto c1 = verify_tridecomposition(r.d1, State(r.phi1));
  const auto c2 = verify_tridecomposition(r.d2, State(r.phi2));
  const double secs = seconds_since(t0);
  const bool ok = r.n == 9 && r.d2.size() == 729 && r.distance1 < eps && r.distance2 < eps &&
                  r.min_basis_overlap > (1.0 - eps) + 0.3 && r.max_cross_overlap < eps && c1.passed && c2.passed &&
                  secs < 30.0;
  std::string detail = "N=" + std::to_string(r.n) + ", M=" + std::to_string(r.d2.size()) + ", θ=" + fmt(r.theta) +
                       ", distances " + fmt(r.distance1) + "/" + fmt(r.distance2) + ", basis overlap " +
                       fmt(r.min_basis_overlap) + ", cross overlap " + fmt(r.max_cross_overlap) + "; " + fmt(secs) + " s";
  if (!c1.passed) detail += "; first certificate: " + c1.failed_condition;
  if (!c2.passed) detail += "; second certificate: " + c2.failed_condition;
  keep = std::move(r);
  return {ok, detail};
}

Outcome structure_mover(const std::optional<PairedExpansions>& r) {
  if (!r) return {false, "no paired expansions available"};
  const double eps = r->epsilon;
  const TensorStructurePair pair = structure_mover(r->phi1, r->phi2);
  const double tn = pair.mover.correction_trace_norm();
  const double two_d = 2.0 * pair.mover.states_distance();
  bool ok = std::abs(tn - two_d) <= 1e-8 && tn < 4.0 * eps;

  const std::size_t dim = r->space.dim(0);
  const std::array<std::array<std::size_t, 2>, 2> aux{{{0, 0}, {dim - 1, 1}}};
  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    for (const auto& tk : r->d1.terms)
      for (const auto& tm : r->d2.terms) {
        const Complex direct = dot(tk.factors[i], tm.factors[i]);
        for (const auto& a : aux)
          worst = std::max(worst, std::abs(pair.relabeled_overlap(i, tk.factors[i], tm.factors[i], a) - direct));
      }
  ok = ok && worst <= 1e-10;
  return {ok, "‖U−1‖₁ " + fmt(tn) + " vs 2‖Φ₁−Φ₂‖ " + fmt(two_d) + " (4ε = " + fmt(4.0 * eps) +
                  "), worst relabeled overlap error " + fmt(worst)};
}

Outcome spectral_inequalities() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (const char* sel : {"eigenvalue", "projection", "overlap", "partial-trace"}) {
    TrialConfig cfg;
    cfg.seed = 20240601;
    cfg.trial_count = 1000;
    cfg.dims = {12};
    cfg.selector = sel;
    const CampaignReport r = run_spectral_campaign(cfg);
    ok = ok && r.trials.size() == 1000 && r.pass_rate() == 1.0;
    detail += std::string(sel) + " " + fmt(r.pass_rate()) + ", ";
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 60.0;
  return {ok, detail + fmt(secs) + " s"};
}

Outcome entropy_ceiling() {
  TrialConfig cfg;
  cfg.seed = 99;
  cfg.trial_count = 200;
  const CampaignReport r = run_entropy_campaign(cfg);
  bool ok = r.pass_rate() == 1.0;
  double worst = 0.0;
  for (std::size_t n = 2; n <= 6; ++n) {
    const double exact = std::log(static_cast<double>(n + 1));
    const double s3 = entropy(partial_trace(isolation_witness_3(n), {2})).nats;
    const double s23 = entropy(partial_trace(isolation_witness_4(n), {1, 2})).nats;
    worst = std::max({worst, std::abs(s3 - exact), std::abs(s23 - exact)});
  }
  ok = ok && worst <= 1e-10;
  return {ok, "random sums pass rate " + fmt(r.pass_rate()) + ", worst witness entropy error " + fmt(worst)};
}

Outcome extraction_round_trip() {
  TrialConfig cfg;
  cfg.seed = 4242;
  cfg.trial_count = 200;
  const CampaignReport r = run_roundtrip_campaign(cfg);
  double worst = 0.0;
  for (const auto& [k, v] : r.aggregate)
    if (k == "worst_spectrum_mismatch") worst = v;
  return {r.trials.size() == 200 && r.pass_rate() == 1.0,
          "pass rate " + fmt(r.pass_rate()) + ", worst spectrum mismatch " + fmt(worst)};
}

Outcome perturbed_isolation() {
  TrialConfig cfg;
  cfg.seed = 11;
  cfg.trial_count = 200;
  cfg.selector = "perturbed";
  const CampaignReport r = run_isolation_scan(cfg);
  double min_mismatch = INFINITY;
  for (const auto& [k, v] : r.aggregate) min_mismatch = std::min(min_mismatch, v);
  return {r.trials.size() == 2 * 3 * 201 && r.pass_rate() == 1.0,
          "pass rate " + fmt(r.pass_rate()) + ", smallest perturbed spectra mismatch " + fmt(min_mismatch)};
}

Outcome decomposition_matching() {
  const auto t0 = Clock::now();
  TrialConfig cfg;
  cfg.seed = 7;
  cfg.trial_count = 500;
  cfg.selector = "matching";
  const CampaignReport r = run_stability_campaign(cfg);
  const double secs = seconds_since(t0);
  std::string detail = "pass rate " + fmt(r.pass_rate()) + ", worst margin " + fmt(r.worst_margin()) + "; " + fmt(secs) + " s";
  for (const auto& t : r.trials)
    if (!t.pass) {
      detail += "; first failure: trial " + std::to_string(t.index) + " " + t.note;
      break;
    }
  return {r.trials.size() == 500 && r.pass_rate() == 1.0 && secs < 120.0, detail};
}

Outcome closure() {
  TrialConfig cfg;
  cfg.seed = 5;
  cfg.trial_count = 1;
  cfg.n = 10000;
  const CampaignReport r = run_closure_test(cfg);
  const TrialRecord& last = r.trials.back();
  double dist = 0.0, coeff = 0.0;
  for (const auto& [k, v] : last.measured) {
    if (k == "term_distance_to_limit") dist = v;
    if (k == "coefficient_vs_spectrum") coeff = v;
  }
  std::string detail = "extrapolated term distance " + fmt(dist) + ", coefficient error " + fmt(coeff);
  for (const auto& t : r.trials)
    if (!t.pass) detail += "; " + t.note;
  return {r.all_passed(), detail};
}

}  // namespace

int main() {
  std::optional<PairedExpansions> pair;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"singlet family instability", singlet_instability},
      {"reduced-state gap with bounded overlaps", reduced_gap},
      {"diverging coefficients near a product", diverging_coefficients},
      {"paired expansions near a product state", [&] { return paired_expansions(pair); }},
      {"tensor structure mover", [&] { return structure_mover(pair); }},
      {"spectral inequality campaigns", spectral_inequalities},
      {"entropy ceiling and isolation witnesses", entropy_ceiling},
      {"triorthogonal extraction round trip", extraction_round_trip},
      {"isolation of perturbed triorthogonal states", perturbed_isolation},
      {"matching of nearby decompositions", decomposition_matching},
      {"closure of triorthogonal sequences", closure},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
