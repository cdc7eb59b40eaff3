#include "tridecomp/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "tridecomp/constructions.hpp"
#include "tridecomp/errors.hpp"
#include "tridecomp/spectral.hpp"

namespace tridecomp {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Accumulates the checks of one trial into a TrialRecord.
class Checks {
 public:
  explicit Checks(std::size_t index) { rec_.index = index; rec_.pass = true; }

  void value(const std::string& name, double v) { rec_.measured.emplace_back(name, v); }

  // lhs ≤ rhs (with rounding slack), or lhs < rhs when strict.
  void bound(const std::string& name, double lhs, double rhs, bool strict = false) {
    value(name, lhs);
    value(name + "_bound", rhs);
    const bool ok = strict ? lhs < rhs : lhs <= rhs + inequality_slack(lhs, rhs);
    fail_unless(ok, name + " " + (strict ? "<" : "≤") + " bound fails");
    if (!tracked_ || rhs - lhs < rec_.rhs - rec_.lhs) {
      rec_.lhs = lhs;
      rec_.rhs = rhs;
      tracked_ = true;
    }
  }

  void require(const std::string& name, bool cond) {
    value(name, cond ? 1.0 : 0.0);
    fail_unless(cond, name + " fails");
  }

  void fail(const std::string& why) { fail_unless(false, why); }
  void digest(std::string d) { rec_.input_digest = std::move(d); }

  TrialRecord finish() {
    if (!tracked_) rec_.lhs = rec_.rhs = 0.0;
    return std::move(rec_);
  }

 private:
  void fail_unless(bool ok, const std::string& why) {
    if (ok) return;
    rec_.pass = false;
    if (!rec_.note.empty()) rec_.note += "; ";
    rec_.note += why;
  }

  TrialRecord rec_;
  bool tracked_ = false;
};

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a[i] * b;
  return out;
}

Vector dense_of(const std::vector<Complex>& coeffs, const std::vector<std::array<Vector, 3>>& comps) {
  Vector out = Vector::Zero(comps[0][0].size() * comps[0][1].size() * comps[0][2].size());
  for (std::size_t k = 0; k < coeffs.size(); ++k) out += coeffs[k] * kron(comps[k][0], kron(comps[k][1], comps[k][2]));
  return out;
}

std::vector<std::array<Vector, 3>> components_of(const TriDecomposition& d) {
  std::vector<std::array<Vector, 3>> out;
  for (const auto& t : d.terms) {
    std::array<Vector, 3> c;
    for (std::size_t i = 0; i < 3; ++i) c[i] = t.factors[i].to_dense(d.space.dim(i));
    out.push_back(std::move(c));
  }
  return out;
}

TriDecomposition decomposition_of(const ProductSpace& space, const std::vector<Complex>& coeffs,
                                  const std::vector<std::array<Vector, 3>>& comps) {
  TriDecomposition d{space, {}, Variant::Orthonormal};
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    ProductTerm t{coeffs[k], {}};
    for (std::size_t i = 0; i < 3; ++i) t.factors.push_back(SparseVector::from_dense(comps[k][i]));
    d.terms.push_back(std::move(t));
  }
  return d;
}

Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

// Unit vector in the orthogonal complement of `v`.
Vector random_orthogonal_unit(const Vector& v, Rng& rng) {
  Vector chi = random_gaussian_vector(static_cast<std::size_t>(v.size()), rng);
  chi -= v.dot(chi) / v.squaredNorm() * v;
  return chi / chi.norm();
}

// cos t Φ + sin t χ with ‖Φ − Φ′‖ = 2 sin(t/2) ≤ radius.
Vector perturb_within(const Vector& phi, double radius, Rng& rng) {
  const double tmax = 2.0 * std::asin(std::min(1.0, radius / 2.0));
  const double t = uniform(rng, 0.0, tmax);
  return std::cos(t) * phi + std::sin(t) * random_orthogonal_unit(phi, rng);
}

CampaignReport start_report(std::string campaign, std::string selector, const TrialConfig& cfg) {
  CampaignReport r;
  r.campaign = std::move(campaign);
  r.selector = std::move(selector);
  r.seed = cfg.seed;
  r.tolerances = cfg.tol;
  return r;
}

std::size_t dim_cap(const TrialConfig& cfg, std::size_t factor, std::size_t fallback) {
  if (cfg.dims.empty()) return fallback;
  return cfg.dims[std::min(factor, cfg.dims.size() - 1)];
}

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

// ---------------------------------------------------------------------------

void TrialConfig::validate() const {
  if (trial_count == 0) throw ArgumentError("trial count must be at least 1");
  std::size_t total = 1;
  for (std::size_t d : dims) {
    if (d < 2 || d > 64) throw ArgumentError("campaign dims must lie in [2, 64]");
    total *= d;
  }
  if (total > kDefaultDenseCeiling) throw CapacityError("campaign dims exceed the dense ceiling");
  if (epsilon && !(*epsilon > 0.0 && *epsilon < 1.0)) throw ArgumentError("ε must lie in (0, 1)");
  if (radius && !(*radius > 0.0 && *radius < 2.0)) throw ArgumentError("perturbation radius must lie in (0, 2)");
  if (n == 0) throw ArgumentError("sequence index must be positive");
}

std::size_t CampaignReport::passed() const {
  return static_cast<std::size_t>(std::count_if(trials.begin(), trials.end(), [](const TrialRecord& t) { return t.pass; }));
}

double CampaignReport::pass_rate() const {
  return trials.empty() ? 0.0 : static_cast<double>(passed()) / static_cast<double>(trials.size());
}

double CampaignReport::worst_margin() const {
  double w = kInf;
  for (const auto& t : trials) w = std::min(w, t.margin());
  return trials.empty() ? 0.0 : w;
}

std::string digest(const Vector& v) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(v.data());
  for (std::size_t i = 0; i < static_cast<std::size_t>(v.size()) * sizeof(Complex); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

nlohmann::json report_to_json(const CampaignReport& r, bool include_timing) {
  using nlohmann::json;
  json trials = json::array();
  for (const auto& t : r.trials) {
    json measured = json::object();
    for (const auto& [k, v] : t.measured) measured[k] = v;
    trials.push_back({{"index", t.index},
                      {"input_digest", t.input_digest},
                      {"measured", measured},
                      {"lhs", t.lhs},
                      {"rhs", t.rhs},
                      {"margin", t.margin()},
                      {"pass", t.pass},
                      {"note", t.note}});
  }
  json aggregate = {{"trials", r.trials.size()},
                    {"passed", r.passed()},
                    {"pass_rate", r.pass_rate()},
                    {"worst_margin", r.worst_margin()}};
  for (const auto& [k, v] : r.aggregate) aggregate[k] = v;
  const Tolerances& tol = r.tolerances;
  json environment = {{"precision", "binary64"},
                      {"log_base", EntropyValue::log_base_note},
                      {"tolerances",
                       {{"norm", tol.norm},
                        {"herm", tol.herm},
                        {"psd", tol.psd},
                        {"li", tol.li},
                        {"orth", tol.orth},
                        {"deg", tol.deg},
                        {"reconstruction", tol.reconstruction},
                        {"spectral_match", tol.spectral_match},
                        {"zero", tol.zero}}}};
  json out = {{"schema", kReportSchema},
              {"campaign", r.campaign},
              {"selector", r.selector},
              {"seed", r.seed},
              {"aggregate", aggregate},
              {"environment", environment},
              {"trials", trials}};
  if (include_timing) out["elapsed_seconds"] = r.elapsed_seconds;
  return out;
}

std::string report_to_csv(const CampaignReport& r) {
  std::vector<std::string> columns;
  for (const auto& t : r.trials)
    for (const auto& m : t.measured)
      if (std::find(columns.begin(), columns.end(), m.first) == columns.end()) columns.push_back(m.first);

  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  std::ostringstream os;
  os << std::setprecision(17);
  os << "index,input_digest,lhs,rhs,margin,pass";
  for (const auto& c : columns) os << ',' << quote(c);
  os << ",note\n";
  for (const auto& t : r.trials) {
    os << t.index << ',' << t.input_digest << ',' << t.lhs << ',' << t.rhs << ',' << t.margin() << ','
       << (t.pass ? "true" : "false");
    for (const auto& c : columns) {
      os << ',';
      for (const auto& m : t.measured)
        if (m.first == c) {
          os << m.second;
          break;
        }
    }
    os << ',' << quote(t.note) << '\n';
  }
  return os.str();
}

std::vector<double> random_separated_magnitudes(std::size_t k, double min_gap, Rng& rng) {
  if (k == 0) throw ArgumentError("magnitudes: need at least one term");
  const double stair = 3.0 * min_gap * std::sqrt(static_cast<double>(k));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<double> x(k);
    for (auto& v : x) v = uniform(rng, 0.0, 1.0);
    std::sort(x.begin(), x.end(), std::greater<>());
    for (std::size_t j = 0; j < k; ++j) x[j] += static_cast<double>(k - 1 - j) * stair + stair;
    double nrm = 0.0;
    for (double v : x) nrm += v * v;
    nrm = std::sqrt(nrm);
    for (auto& v : x) v /= nrm;
    bool ok = true;
    for (std::size_t j = 0; j + 1 < k; ++j) ok = ok && x[j] - x[j + 1] >= min_gap;
    if (ok) return x;
  }
  throw ArgumentError("magnitudes: cannot reach the requested separation");
}

TriDecomposition random_triorthogonal(const std::vector<std::size_t>& dims, const std::vector<double>& magnitudes,
                                      Rng& rng) {
  if (dims.size() != 3) throw DimensionError("random triorthogonal state needs three factor dims");
  const std::size_t k = magnitudes.size();
  for (std::size_t d : dims)
    if (d < k) throw ArgumentError("random triorthogonal state: every factor needs dimension ≥ K");
  double nrm = 0.0;
  for (double m : magnitudes) nrm += m * m;
  nrm = std::sqrt(nrm);
  std::array<Matrix, 3> cols;
  for (std::size_t i = 0; i < 3; ++i) cols[i] = random_orthonormal_columns(dims[i], k, rng);
  std::vector<Complex> coeffs;
  std::vector<std::array<Vector, 3>> comps;
  for (std::size_t j = 0; j < k; ++j) {
    coeffs.push_back(magnitudes[j] / nrm * random_phase(rng));
    comps.push_back({cols[0].col(static_cast<Eigen::Index>(j)), cols[1].col(static_cast<Eigen::Index>(j)),
                     cols[2].col(static_cast<Eigen::Index>(j))});
  }
  return decomposition_of(ProductSpace(dims), coeffs, comps);
}

// ---------------------------------------------------------------------------
// instability

CampaignReport run_instability_sweep(const std::vector<double>& grid, const Tolerances& tol) {
  const auto t0 = Clock::now();
  TrialConfig cfg;
  cfg.tol = tol;
  cfg.seed = 0;
  CampaignReport rep = start_report("instability", "", cfg);
  std::vector<double> thetas = grid;
  for (double t : thetas)
    if (!(t > 0.0 && t <= kPi / 2.0)) throw ArgumentError("instability sweep: θ must lie in (0, π/2]");
  std::sort(thetas.begin(), thetas.end(), std::greater<>());
  thetas.erase(std::unique(thetas.begin(), thetas.end()), thetas.end());

  double prev_phi = kInf, prev_psi = kInf, prev_gap = kInf;
  std::size_t index = 0;
  for (double theta : thetas) {
    {
      Checks c(index++);
      const SingletFamily ex = singlet_family(theta);
      const auto c1 = verify_tridecomposition(ex.phi_decomposition, State(ex.phi_theta), tol);
      const auto c2 = verify_tridecomposition(ex.psi_decomposition, State(ex.psi_theta), tol);
      const double dphi = distance(State(ex.phi_theta), State(ex.psi));
      const double dpsi = distance(State(ex.psi_theta), State(ex.psi));
      c.digest(digest(densify(ex.phi_theta).amplitudes()));
      c.value("theta", theta);
      c.value("component_overlap", std::abs(dot(ex.phi_decomposition.terms[0].factors[0],
                                                 ex.phi_decomposition.terms[1].factors[0])));
      c.require("phi_certificate", c1.passed);
      c.require("psi_certificate", c2.passed);
      c.bound("phi_distance", dphi, prev_phi);
      c.bound("psi_distance", dpsi, prev_psi);
      c.bound("reconstruction", std::max(c1.reconstruction_error, c2.reconstruction_error), tol.reconstruction);
      prev_phi = dphi;
      prev_psi = dpsi;
      TrialRecord r = c.finish();
      r.note = "singlet family" + (r.note.empty() ? "" : ": " + r.note);
      rep.trials.push_back(std::move(r));
    }
    {
      Checks c(index++);
      const ReducedPair ex = reduced_pair(theta);
      c.digest(digest(flatten(ex.rho_phi.matrix())));
      c.value("theta", theta);
      for (Eigen::Index i = 0; i < 2; ++i)
        for (Eigen::Index j = 0; j < 2; ++j)
          c.value("cross_overlap_" + std::to_string(i + 1) + std::to_string(j + 1), ex.cross_overlaps(i, j));
      c.bound("trace_norm_gap", ex.trace_norm_gap, prev_gap);
      c.bound("max_cross_overlap", ex.cross_overlaps.maxCoeff(), 1.0 / std::sqrt(2.0) + 1e-10);
      c.bound("formula_error", ex.formula_error, 1e-12);
      prev_gap = ex.trace_norm_gap;
      TrialRecord r = c.finish();
      r.note = "reduced pair" + (r.note.empty() ? "" : ": " + r.note);
      rep.trials.push_back(std::move(r));
    }
    if (theta != 1.0) {
      Checks c(index++);
      const DivergingFamily ex = diverging_family(theta);
      const auto cert = verify_tridecomposition(ex.decomposition, State(ex.psi_theta), tol);
      c.digest(digest(ex.psi_theta.amplitudes()));
      c.value("theta", theta);
      c.value("max_raw_coefficient", ex.max_raw_coefficient);
      c.value("distance_to_limit", (ex.psi_theta.amplitudes() - ex.limit.amplitudes()).norm());
      c.value("inverse_sqrt_theta", 1.0 / std::sqrt(theta));
      c.require("certificate", cert.passed);
      TrialRecord r = c.finish();
      r.note = "diverging coefficients" + (r.note.empty() ? "" : ": " + r.note);
      rep.trials.push_back(std::move(r));
    }
  }
  rep.elapsed_seconds = seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// spectral lemmas

CampaignReport run_spectral_campaign(const TrialConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  const std::string sel = cfg.selector.empty() ? "eigenvalue" : cfg.selector;
  if (sel != "eigenvalue" && sel != "projection" && sel != "overlap" && sel != "partial-trace")
    throw ArgumentError("spectral campaign: unknown selector '" + sel + "'");
  CampaignReport rep = start_report("spectral", sel, cfg);
  const std::size_t cap = std::max<std::size_t>(2, dim_cap(cfg, 0, 12));

  for (std::size_t trial = 0; trial < cfg.trial_count; ++trial) {
    Rng rng(derive_seed(cfg.seed, trial));
    Checks c(trial);
    const std::size_t n = uniform_index(rng, 2, cap);
    c.value("dim", static_cast<double>(n));
    try {
      if (sel == "eigenvalue") {
        const Matrix r = random_positive_operator(n, uniform_index(rng, 1, n), uniform(rng, 0.1, 1.0), rng);
        const Matrix s = random_positive_operator(n, uniform_index(rng, 1, n), uniform(rng, 0.1, 1.0), rng);
        c.digest(digest(flatten(r)));
        const LemmaReport lr = verify_spectral_lemmas(r, s, cfg.tol);
        c.bound("max_eigenvalue_gap", lr.lhs, lr.rhs);
      } else if (sel == "projection" || sel == "overlap") {
        const Vector psi = random_unit_vector(n, rng);
        Vector phi = psi + uniform(rng, 0.0, 2.0) * random_unit_vector(n, rng);
        phi /= phi.norm();
        c.digest(digest(psi));
        if (sel == "projection") {
          const Matrix p = random_projection(n, uniform_index(rng, 1, n), rng);
          const auto lr = verify_projection_bounds(psi, phi, p);
          c.bound("projected_trace_norm", lr[0].lhs, lr[0].rhs);
          c.bound("trace_norm", lr[1].lhs, lr[1].rhs);
        } else {
          const Complex ov = psi.dot(phi);
          phi *= std::abs(ov) / ov;  // ⟨Ψ|Φ⟩ made real positive
          const LemmaReport lr = verify_positive_overlap_bound(psi, phi);
          c.bound("distance", lr.lhs, lr.rhs);
        }
      } else {
        static const std::vector<std::vector<std::size_t>> shapes{{2, 2}, {2, 3}, {3, 2}, {2, 4}, {3, 3}, {2, 5},
                                                                  {2, 6}, {3, 4}, {4, 3}, {2, 2, 2}, {2, 2, 3}, {2, 3, 2}};
        std::vector<std::vector<std::size_t>> fitting;
        for (const auto& s : shapes)
          if (std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>()) <= cap) fitting.push_back(s);
        const auto& dims = fitting[uniform_index(rng, 0, fitting.size() - 1)];
        const std::size_t total = std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
        Matrix a(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
        for (Eigen::Index col = 0; col < a.cols(); ++col) a.col(col) = random_gaussian_vector(total, rng);
        std::vector<std::size_t> keep;
        do {
          keep.clear();
          for (std::size_t i = 0; i < dims.size(); ++i)
            if (uniform_index(rng, 0, 1) == 1) keep.push_back(i);
        } while (keep.empty() || keep.size() == dims.size());
        c.digest(digest(flatten(a)));
        c.value("dim", static_cast<double>(total));
        const LemmaReport lr = verify_partial_trace_contraction(a, dims, keep);
        c.bound("reduced_trace_norm", lr.lhs, lr.rhs);
      }
    } catch (const std::exception& e) {
      c.fail(e.what());
    }
    rep.trials.push_back(c.finish());
  }
  rep.elapsed_seconds = seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// entropy

CampaignReport run_entropy_campaign(const TrialConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  CampaignReport rep = start_report("entropy", cfg.selector, cfg);
  for (std::size_t trial = 0; trial < cfg.trial_count; ++trial) {
    Rng rng(derive_seed(cfg.seed, trial));
    Checks c(trial);
    try {
      const std::size_t k = uniform_index(rng, 1, 8);
      std::vector<std::size_t> dims;
      for (std::size_t i = 0; i < 3; ++i) dims.push_back(uniform_index(rng, 2, std::max<std::size_t>(2, dim_cap(cfg, i, 8))));
      const ProductSpace space(dims);
      std::vector<ProductTerm> terms;
      for (std::size_t j = 0; j < k; ++j) {
        ProductTerm t{random_gaussian_vector(1, rng)[0], {}};
        for (std::size_t i = 0; i < 3; ++i) t.factors.push_back(SparseVector::from_dense(random_unit_vector(dims[i], rng)));
        terms.push_back(std::move(t));
      }
      const DenseState raw = densify(SumState(space, terms));
      const DenseState psi = DenseState::wavefunction(space, raw.amplitudes());
      c.digest(digest(psi.amplitudes()));
      c.value("terms", static_cast<double>(k));
      const EntropyBoundReport eb = entropy_decomposition_bound(psi, k, cfg.tol);
      c.bound("max_entropy", *std::max_element(eb.entropies.begin(), eb.entropies.end()), eb.ceiling + 1e-9);
      c.require("no_violation_flag", !eb.violated);
    } catch (const std::exception& e) {
      c.fail(e.what());
    }
    rep.trials.push_back(c.finish());
  }
  rep.elapsed_seconds = seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// extraction round trip

CampaignReport run_roundtrip_campaign(const TrialConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  CampaignReport rep = start_report("roundtrip", cfg.selector, cfg);
  double worst_spectrum = 0.0;
  for (std::size_t trial = 0; trial < cfg.trial_count; ++trial) {
    Rng rng(derive_seed(cfg.seed, trial));
    Checks c(trial);
    try {
      const std::size_t k = uniform_index(rng, 1, 6);
      std::vector<std::size_t> dims;
      for (std::size_t i = 0; i < 3; ++i)
        dims.push_back(uniform_index(rng, std::max<std::size_t>(2, k), std::max({std::size_t{2}, k, dim_cap(cfg, i, 8)})));
      const TriDecomposition d = random_triorthogonal(dims, random_separated_magnitudes(k, 0.01, rng), rng);
      const DenseState psi = densify(d.to_sum_state());
      c.digest(digest(psi.amplitudes()));
      c.value("terms", static_cast<double>(k));

      std::vector<double> weights;
      for (const auto& t : d.terms) weights.push_back(std::norm(t.coeff));
      std::sort(weights.begin(), weights.end(), std::greater<>());
      double mismatch = 0.0;
      for (std::size_t i = 0; i < 3; ++i) {
        const Spectrum s = spectrum(partial_trace(psi, {i}, cfg.tol), cfg.tol);
        for (std::size_t n = 0; n < std::max(s.values.size(), weights.size()); ++n)
          mismatch = std::max(mismatch, std::abs(s.at(n) - (n < weights.size() ? weights[n] : 0.0)));
      }
      worst_spectrum = std::max(worst_spectrum, mismatch);
      c.bound("spectrum_mismatch", mismatch, 1e-9);

      const ExtractionResult ex = extract_triortho(psi, cfg.tol, derive_seed(cfg.seed, trial + (1ULL << 32)));
      c.require("extracted", ex.status == ExtractionStatus::Triorthogonal);
      if (ex.decomposition)
        c.require("equivalent", decompositions_equivalent(ex.decomposition->decomposition, d, 1e-7, cfg.tol));
      else
        c.fail(ex.reason);
    } catch (const std::exception& e) {
      c.fail(e.what());
    }
    rep.trials.push_back(c.finish());
  }
  rep.aggregate.emplace_back("worst_spectrum_mismatch", worst_spectrum);
  rep.elapsed_seconds = seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// stability of decompositions

namespace {

TrialRecord single_product_trial(const TrialConfig& cfg, std::size_t trial) {
  Rng rng(derive_seed(cfg.seed, trial));
  Checks c(trial);
  try {
    const std::size_t cap = std::max<std::size_t>(2, dim_cap(cfg, 0, 6));
    const std::size_t d1 = uniform_index(rng, 2, cap), d2 = uniform_index(rng, 2, std::max<std::size_t>(2, dim_cap(cfg, 1, 6)));
    const double mag = uniform(rng, 0.4, 1.0);
    const double eps = cfg.epsilon ? *cfg.epsilon : uniform(rng, 0.05, 0.5);
    const double eps_prime = 0.99 * std::pow(mag * eps / 3.0, 2);
    const BipartiteTerm psi{mag * random_phase(rng), random_unit_vector(d1, rng), random_unit_vector(d2, rng)};

    // Φ: Schmidt form of a perturbation of Ψ's amplitude matrix by δ < ε′/3
    Matrix g(static_cast<Eigen::Index>(d1), static_cast<Eigen::Index>(d2));
    for (Eigen::Index col = 0; col < g.cols(); ++col) g.col(col) = random_gaussian_vector(d1, rng);
    const double delta = uniform(rng, 0.05, 1.0) * eps_prime / 3.0;
    const Matrix m = psi.coeff * psi.first * psi.second.transpose() + delta / g.norm() * g;
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    std::vector<BipartiteTerm> phi;
    for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k)
      phi.push_back({svd.singularValues()[k], svd.matrixU().col(k), svd.matrixV().col(k).conjugate()});
    std::shuffle(phi.begin(), phi.end(), rng);

    c.digest(digest(flatten(m)));
    c.value("epsilon", eps);
    c.value("epsilon_prime", eps_prime);
    const SingleProductReport r = match_single_product(psi, phi, eps, eps_prime, cfg.tol);
    c.bound("coefficient_gap", r.coefficient_gap, eps_prime, true);
    c.bound("max_other_weight", r.max_other_weight, eps_prime, true);
    c.require("second_applicable", r.second_applicable);
    c.bound("term_distance", r.term_distance, eps, true);
    c.bound("overlap_first_floor", 1.0 - eps, r.overlap_first, true);
    c.bound("overlap_second_floor", 1.0 - eps, r.overlap_second, true);
  } catch (const std::exception& e) {
    c.fail(e.what());
  }
  return c.finish();
}

TrialRecord matching_trial(const TrialConfig& cfg, std::size_t trial, bool degenerate) {
  Rng rng(derive_seed(cfg.seed, trial));
  Checks c(trial);
  try {
    const std::size_t k = uniform_index(rng, 2, 4);
    std::vector<std::size_t> dims;
    for (std::size_t i = 0; i < 3; ++i) dims.push_back(uniform_index(rng, k, std::max(k, dim_cap(cfg, i, 5))));
    std::vector<double> mags;
    if (degenerate) {
      mags = random_separated_magnitudes(k - 1, 0.05, rng);
      mags.insert(mags.begin(), mags.front());
    } else {
      mags = random_separated_magnitudes(k, 0.05, rng);
    }
    const double eps = cfg.epsilon ? *cfg.epsilon : uniform(rng, 0.05, 0.24);
    const TriDecomposition d = random_triorthogonal(dims, mags, rng);
    const OrderedTriortho psi = make_ordered(d, cfg.tol);
    const std::size_t L = uniform_index(rng, 1, psi.block_count());
    const double a_l = psi.blocks[L - 1].magnitude;
    const double bound = a_l * a_l * eps * eps / 18.0;

    std::vector<Complex> a;
    for (const auto& t : psi.decomposition.terms) a.push_back(t.coeff);
    const auto comps = components_of(psi.decomposition);
    const Vector psi_dense = dense_of(a, comps);

    std::array<Matrix, 3> gens;
    for (std::size_t i = 0; i < 3; ++i) gens[i] = random_hermitian(dims[i], rng);
    std::vector<Complex> shift(k);
    for (auto& s : shift) s = Complex(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
    std::vector<double> spin(k);
    for (auto& s : spin) s = uniform(rng, -1.0, 1.0);
    const auto& block0 = psi.blocks[0].members;

    auto build = [&](double s, std::vector<Complex>& b, std::vector<std::array<Vector, 3>>& f) {
      std::array<Matrix, 3> u;
      for (std::size_t i = 0; i < 3; ++i) u[i] = unitary_from_generator(gens[i], s);
      b.assign(k, 0.0);
      f.assign(k, {});
      for (std::size_t j = 0; j < k; ++j) {
        const bool in_block = degenerate && std::find(block0.begin(), block0.end(), j) != block0.end();
        // members of a degenerate block keep equal magnitudes
        b[j] = in_block ? a[j] * std::polar(1.0, s * spin[j]) : a[j] + s * shift[j];
        for (std::size_t i = 0; i < 3; ++i) f[j][i] = u[i] * comps[j][i];
      }
      double nrm = 0.0;
      for (const auto& x : b) nrm += std::norm(x);
      for (auto& x : b) x /= std::sqrt(nrm);
      return (psi_dense - dense_of(b, f)).norm();
    };

    std::vector<Complex> b;
    std::vector<std::array<Vector, 3>> f;
    const double target = uniform(rng, 0.2, 1.0) * 0.9 * bound;
    double s = target;
    for (int it = 0; it < 4; ++it) {
      const double dist = build(s, b, f);
      if (dist > 0.0) s *= target / dist;
    }
    double dist = build(s, b, f);
    while (!(dist < 0.9 * bound)) {
      s *= 0.5;
      dist = build(s, b, f);
    }
    const Vector phi_dense = dense_of(b, f);
    c.digest(digest(phi_dense));
    c.value("terms", static_cast<double>(k));
    c.value("L", static_cast<double>(L));
    c.value("epsilon", eps);
    c.value("distance", dist);
    c.value("distance_bound", bound);

    const ExtractionResult ex =
        extract_triortho(DenseState(ProductSpace(dims), phi_dense), cfg.tol, derive_seed(cfg.seed, trial + (1ULL << 32)));
    if (ex.status != ExtractionStatus::Triorthogonal || !ex.decomposition) {
      c.fail(std::string("Φ extraction: ") + status_name(ex.status) + " (" + ex.reason + ")");
      return c.finish();
    }
    TriDecomposition phi = ex.decomposition->decomposition;
    std::shuffle(phi.terms.begin(), phi.terms.end(), rng);

    const MatchReport mr = match_components(psi, phi, L, eps, cfg.tol);
    double gap = 0.0, overlap = kInf, term = 0.0;
    for (const auto& p : mr.pairs) {
      gap = std::max(gap, p.coefficient_gap);
      term = std::max(term, p.term_distance);
      for (double o : p.overlaps) overlap = std::min(overlap, o);
    }
    c.value("pairs", static_cast<double>(mr.pairs.size()));
    c.bound("coefficient_gap", gap, mr.coefficient_bound(), true);
    c.bound("overlap_floor", mr.overlap_bound(), overlap, true);
    c.bound("term_distance", term, mr.term_bound(), true);
    c.require("all_pairs_hold", mr.all_hold);
  } catch (const std::exception& e) {
    c.fail(e.what());
  }
  return c.finish();
}

}  // namespace

CampaignReport run_stability_campaign(const TrialConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  const std::string sel = cfg.selector.empty() ? "matching" : cfg.selector;
  if (sel != "single-product" && sel != "matching" && sel != "matching-degenerate")
    throw ArgumentError("stability campaign: unknown selector '" + sel + "'");
  if (cfg.epsilon && sel != "single-product" && !(*cfg.epsilon < 0.25))
    throw ArgumentError("stability campaign: matching needs ε < 1/4");
  CampaignReport rep = start_report("stability", sel, cfg);
  for (std::size_t trial = 0; trial < cfg.trial_count; ++trial)
    rep.trials.push_back(sel == "single-product" ? single_product_trial(cfg, trial)
                                                  : matching_trial(cfg, trial, sel == "matching-degenerate"));
  double worst_overlap = kInf;
  for (const auto& t : rep.trials)
    for (const auto& [name, v] : t.measured)
      if (name.rfind("overlap", 0) == 0 && name.find("_bound") != std::string::npos) worst_overlap = std::min(worst_overlap, v);
  if (worst_overlap < kInf) rep.aggregate.emplace_back("worst_overlap", worst_overlap);
  rep.elapsed_seconds = seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// isolation

namespace {

void scan_witness(CampaignReport& rep, const TrialConfig& cfg, std::size_t& index, bool four_factors,
                  std::size_t size) {
  const DenseState phi = four_factors ? isolation_witness_4(size) : isolation_witness_3(size);
  const std::vector<std::size_t> keep = four_factors ? std::vector<std::size_t>{1, 2} : std::vector<std::size_t>{2};
  const double exact = std::log(static_cast<double>(size + 1));
  const double floor = std::log(static_cast<double>(size));
  const double radius = cfg.radius.value_or(0.05);
  const std::string label = (four_factors ? "witness4 N=" : "witness3 N=") + std::to_string(size);
  {
    Checks c(index++);
    c.digest(digest(phi.amplitudes()));
    const double s = entropy(partial_trace(phi, keep, cfg.tol), cfg.tol).nats;
    c.value("entropy", s);
    c.bound("entropy_error", std::abs(s - exact), 1e-10);
    if (!four_factors) c.require("term_count_ruled_out", entropy_decomposition_bound(phi, size, cfg.tol).violated);
    TrialRecord r = c.finish();
    r.note = label + (r.note.empty() ? "" : ": " + r.note);
    rep.trials.push_back(std::move(r));
  }
  for (std::size_t t = 0; t < cfg.trial_count; ++t) {
    Rng rng(derive_seed(cfg.seed, index));
    Checks c(index++);
    const Vector moved = perturb_within(phi.amplitudes(), radius, rng);
    c.digest(digest(moved));
    c.value("distance", (moved - phi.amplitudes()).norm());
    const double s = entropy(partial_trace(DenseState(phi.space(), moved, true), keep, cfg.tol), cfg.tol).nats;
    c.bound("entropy_floor", floor, s, true);
    TrialRecord r = c.finish();
    r.note = label + " perturbed" + (r.note.empty() ? "" : ": " + r.note);
    rep.trials.push_back(std::move(r));
  }
}

void scan_perturbed(CampaignReport& rep, const TrialConfig& cfg, std::size_t& index) {
  const double radius = cfg.radius.value_or(0.01);
  const std::size_t d = std::max<std::size_t>(3, dim_cap(cfg, 0, 3));
  const std::vector<std::size_t> dims{d, d, d};
  Rng base(derive_seed(cfg.seed, 0xfeedULL));
  const TriDecomposition single = random_triorthogonal(dims, {1.0}, base);
  const TriDecomposition pair = random_triorthogonal(dims, {std::sqrt(0.7), std::sqrt(0.3)}, base);
  for (const auto* source : {&single, &pair}) {
    const OrderedTriortho psi = make_ordered(*source, cfg.tol);
    const Vector psi_dense = densify(source->to_sum_state()).amplitudes();
    const std::string label = source == &single ? "case I" : "case II";
    for (double eps : {0.05, 0.1, 0.2}) {
      const DenseState moved = isolating_perturbation(psi, eps, cfg.tol);
      {
        Checks c(index++);
        c.digest(digest(moved.amplitudes()));
        c.value("epsilon", eps);
        c.bound("squared_distance", (psi_dense - moved.amplitudes()).squaredNorm(), 2.0 * eps + 1e-12);
        std::array<double, 3> r1{};
        for (std::size_t i = 0; i < 3; ++i) r1[i] = spectrum(partial_trace(moved, {i}, cfg.tol), cfg.tol).at(0);
        c.value("r1_factor1", r1[0]);
        c.value("r1_factor2", r1[1]);
        c.value("r1_factor3", r1[2]);
        c.bound("r1_factor12_gap", std::abs(r1[0] - r1[1]), cfg.tol.spectral_match);
        c.bound("r1_factor3_gap_floor", 1e-6, std::abs(r1[0] - r1[2]), true);
        c.require("necessary_test_false", !triortho_necessary_test(moved, cfg.tol.spectral_match, cfg.tol));
        TrialRecord r = c.finish();
        r.note = label + (r.note.empty() ? "" : ": " + r.note);
        rep.trials.push_back(std::move(r));
      }
      double min_mismatch = kInf;
      for (std::size_t t = 0; t < cfg.trial_count; ++t) {
        Rng rng(derive_seed(cfg.seed, index));
        Checks c(index++);
        const Vector v = perturb_within(moved.amplitudes(), radius, rng);
        c.digest(digest(v));
        c.value("epsilon", eps);
        c.value("distance", (v - moved.amplitudes()).norm());
        const SpectraAgreement sa = reduced_spectra_agreement(DenseState(moved.space(), v, true), cfg.tol.spectral_match, cfg.tol);
        min_mismatch = std::min(min_mismatch, sa.max_mismatch);
        c.bound("spectra_mismatch_floor", cfg.tol.spectral_match, sa.max_mismatch, true);
        TrialRecord r = c.finish();
        r.note = label + " perturbed" + (r.note.empty() ? "" : ": " + r.note);
        rep.trials.push_back(std::move(r));
      }
      rep.aggregate.emplace_back(std::string(source == &single ? "case1" : "case2") + "_eps" +
                                     std::to_string(eps).substr(0, 4) + "_min_mismatch",
                                 min_mismatch);
    }
  }
}

}  // namespace

CampaignReport run_isolation_scan(const TrialConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  const std::string& sel = cfg.selector;
  if (!sel.empty() && sel != "witness3" && sel != "witness4" && sel != "perturbed")
    throw ArgumentError("isolation scan: unknown selector '" + sel + "'");
  CampaignReport rep = start_report("isolation", sel, cfg);
  std::size_t index = 0;
  if (sel.empty() || sel == "witness3")
    for (std::size_t n = 2; n <= 6; ++n) scan_witness(rep, cfg, index, false, n);
  if (sel.empty() || sel == "witness4")
    for (std::size_t n = 2; n <= 6; ++n) scan_witness(rep, cfg, index, true, n);
  if (sel.empty() || sel == "perturbed") scan_perturbed(rep, cfg, index);
  rep.elapsed_seconds = seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// closure

CampaignReport run_closure_test(const TrialConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  const std::string sel = cfg.selector.empty() ? "rotated" : cfg.selector;
  if (sel != "rotated" && sel != "constant") throw ArgumentError("closure test: unknown selector '" + sel + "'");
  CampaignReport rep = start_report("closure", sel, cfg);

  Rng rng(derive_seed(cfg.seed, 0));
  const std::size_t k = 3;
  std::vector<std::size_t> dims;
  for (std::size_t i = 0; i < 3; ++i) dims.push_back(std::max(k, dim_cap(cfg, i, 4)));
  const ProductSpace space(dims);
  const TriDecomposition limit = canonical_phase(random_triorthogonal(dims, random_separated_magnitudes(k, 0.05, rng), rng));
  const OrderedTriortho reference = make_ordered(limit, cfg.tol);
  const DenseState limit_dense = densify(limit.to_sum_state());

  std::array<Matrix, 3> gens;
  for (std::size_t i = 0; i < 3; ++i) gens[i] = sel == "constant" ? Matrix::Zero(static_cast<Eigen::Index>(dims[i]), static_cast<Eigen::Index>(dims[i])) : random_hermitian(dims[i], rng);
  std::vector<Complex> shift(k, 0.0);
  if (sel != "constant")
    for (auto& s : shift) s = Complex(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));

  std::vector<Complex> a;
  for (const auto& t : reference.decomposition.terms) a.push_back(t.coeff);
  const auto comps = components_of(reference.decomposition);
  const Spectrum limit_spectrum = spectrum(partial_trace(limit_dense, {0}, cfg.tol), cfg.tol);

  auto coefficient_check = [&](Checks& c, const TriDecomposition& d) {
    double worst = 0.0;
    for (std::size_t j = 0; j < d.terms.size(); ++j)
      worst = std::max(worst, std::abs(std::abs(d.terms[j].coeff) - std::sqrt(limit_spectrum.at(j))));
    c.bound("coefficient_vs_spectrum", worst, 1e-8);
  };

  std::size_t index = 0;
  {
    Checks c(index++);
    c.digest(digest(limit_dense.amplitudes()));
    const ExtractionResult ex = extract_triortho(limit_dense, cfg.tol, derive_seed(cfg.seed, 1));
    c.require("limit_extracted", ex.status == ExtractionStatus::Triorthogonal);
    if (ex.decomposition) {
      c.require("limit_equivalent", decompositions_equivalent(ex.decomposition->decomposition, limit, 1e-6, cfg.tol));
      coefficient_check(c, ex.decomposition->decomposition);
    }
    TrialRecord r = c.finish();
    r.note = "limit state" + (r.note.empty() ? "" : ": " + r.note);
    rep.trials.push_back(std::move(r));
  }

  // Ψ_n: components exp(iH_i/n)ψ^i_k, coefficients (a_k + c_k/n) renormalized
  std::vector<std::vector<Complex>> seq_coeffs;
  std::vector<std::vector<std::array<Vector, 3>>> seq_comps;
  bool sequence_ok = true;
  for (std::size_t mult : {1, 2, 4}) {
    const double n = static_cast<double>(cfg.n * mult);
    Checks c(index++);
    c.value("n", n);
    std::vector<Complex> b(k);
    std::vector<std::array<Vector, 3>> f(k);
    double nrm = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      b[j] = a[j] + shift[j] / n;
      nrm += std::norm(b[j]);
      for (std::size_t i = 0; i < 3; ++i) f[j][i] = unitary_from_generator(gens[i], 1.0 / n) * comps[j][i];
    }
    for (auto& x : b) x /= std::sqrt(nrm);
    const Vector psi_n = dense_of(b, f);
    c.digest(digest(psi_n));
    const ExtractionResult ex = extract_triortho(DenseState(space, psi_n, true), cfg.tol, derive_seed(cfg.seed, index));
    if (ex.status != ExtractionStatus::Triorthogonal || !ex.decomposition) {
      c.fail(std::string("extraction: ") + status_name(ex.status));
      sequence_ok = false;
    } else {
      const TriDecomposition aligned = canonical_phase(ex.decomposition->decomposition, &reference.decomposition);
      double gap = 0.0;
      for (std::size_t j = 0; j < k; ++j) gap = std::max(gap, term_distance(aligned.terms[j], reference.decomposition.terms[j]));
      c.value("term_distance_to_limit", gap);
      // ⟨ψ^i_k(n)|ψ^i_k⟩ ≥ 0 after alignment
      double worst_phase = 0.0;
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < 3; ++i)
          worst_phase = std::max(worst_phase, std::abs(std::arg(dot(aligned.terms[j].factors[i], reference.decomposition.terms[j].factors[i]))));
      c.bound("alignment_phase", worst_phase, 1e-9);
      std::vector<Complex> coeffs;
      for (const auto& t : aligned.terms) coeffs.push_back(t.coeff);
      seq_coeffs.push_back(std::move(coeffs));
      seq_comps.push_back(components_of(aligned));
    }
    TrialRecord r = c.finish();
    r.note = "sequence" + (r.note.empty() ? "" : ": " + r.note);
    rep.trials.push_back(std::move(r));
  }

  Checks c(index++);
  if (sequence_ok) {
    // Richardson extrapolation in h = 1/n through O(h²)
    auto extrapolate = [](const auto& x1, const auto& x2, const auto& x4) { return (8.0 * x4 - 6.0 * x2 + x1) / 3.0; };
    std::vector<Complex> coeffs(k);
    std::vector<std::array<Vector, 3>> f(k);
    for (std::size_t j = 0; j < k; ++j) {
      coeffs[j] = extrapolate(seq_coeffs[0][j], seq_coeffs[1][j], seq_coeffs[2][j]);
      for (std::size_t i = 0; i < 3; ++i) {
        const Vector v = extrapolate(seq_comps[0][j][i], seq_comps[1][j][i], seq_comps[2][j][i]);
        f[j][i] = v / v.norm();
      }
    }
    const TriDecomposition extrapolated = decomposition_of(space, coeffs, f);
    c.digest(digest(dense_of(coeffs, f)));
    double gap = 0.0;
    for (std::size_t j = 0; j < k; ++j) gap = std::max(gap, term_distance(extrapolated.terms[j], reference.decomposition.terms[j]));
    c.value("term_distance_to_limit", gap);
    c.require("extrapolated_equivalent", decompositions_equivalent(extrapolated, limit, 1e-6, cfg.tol));
    coefficient_check(c, extrapolated);
  } else {
    c.fail("sequence extraction failed");
  }
  TrialRecord r = c.finish();
  r.note = "extrapolated limit" + (r.note.empty() ? "" : ": " + r.note);
  rep.trials.push_back(std::move(r));
  rep.elapsed_seconds = seconds_since(t0);
  return rep;
}

CampaignReport run_campaign(const std::string& name, const TrialConfig& cfg) {
  if (name == "instability") return run_instability_sweep({0.3, 0.1, 0.03, 0.01, 1e-3, 1e-4}, cfg.tol);
  if (name == "spectral") return run_spectral_campaign(cfg);
  if (name == "entropy") return run_entropy_campaign(cfg);
  if (name == "roundtrip") return run_roundtrip_campaign(cfg);
  if (name == "stability") return run_stability_campaign(cfg);
  if (name == "isolation") return run_isolation_scan(cfg);
  if (name == "closure") return run_closure_test(cfg);
  throw ArgumentError("unknown campaign '" + name + "'");
}

}  // namespace tridecomp
