#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "tridecomp/decomp.hpp"
#include "tridecomp/random.hpp"
#include "tridecomp/tolerances.hpp"

namespace tridecomp {

struct TrialConfig {
  std::uint64_t seed = 7;
  std::size_t trial_count = 100;
  std::vector<std::size_t> dims;  // per-factor upper bounds; empty selects the campaign default
  Tolerances tol{};
  std::string selector;            // campaign-specific variant, empty for the default
  std::optional<double> epsilon;   // sampled per trial when unset
  std::optional<double> radius;    // perturbation radius for isolation scans
  std::size_t n = 10000;           // sequence index for the closure test

  // Throws ArgumentError for trial_count = 0 or dims outside [2, 64].
  void validate() const;
};

struct TrialRecord {
  std::size_t index = 0;
  std::string input_digest;
  std::vector<std::pair<std::string, double>> measured;
  // Tightest checked inequality lhs ≤ rhs of the trial.
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
  std::string note;

  double margin() const { return rhs - lhs; }
};

struct CampaignReport {
  std::string campaign;
  std::string selector;
  std::uint64_t seed = 0;
  Tolerances tolerances{};
  std::vector<TrialRecord> trials;  // sorted by index
  std::vector<std::pair<std::string, double>> aggregate;
  double elapsed_seconds = 0.0;

  std::size_t passed() const;
  double pass_rate() const;
  double worst_margin() const;
  bool all_passed() const { return passed() == trials.size(); }
};

// Version tag written into every serialized report.
inline constexpr const char* kReportSchema = "tridecomp-report/1";

// `include_timing = false` gives byte-identical output for identical configs.
nlohmann::json report_to_json(const CampaignReport& r, bool include_timing = true);
// One row per trial; measured quantities become columns in first-appearance order.
std::string report_to_csv(const CampaignReport& r);

// FNV-1a over the amplitude bytes, as 16 hex digits.
std::string digest(const Vector& v);

// Random ORTHONORMAL decomposition with the given coefficient magnitudes
// (normalized to unit total weight) and random phases.
TriDecomposition random_triorthogonal(const std::vector<std::size_t>& dims, const std::vector<double>& magnitudes, Rng& rng);
// K distinct magnitudes, non-increasing, consecutive gaps at least `min_gap` after normalization.
std::vector<double> random_separated_magnitudes(std::size_t k, double min_gap, Rng& rng);

// ---------------------------------------------------------------------------
// campaigns

// Singlet family, its reduced states, and the diverging-coefficient family over a θ grid.
CampaignReport run_instability_sweep(const std::vector<double>& grid, const Tolerances& tol = {});

// Selectors: "eigenvalue" (|r_n − s_n| ≤ ‖R − S‖₁), "projection" (projection
// and distance chain), "overlap" (positive-overlap bound), "partial-trace".
// dims[0] caps the operator dimension (default 12).
CampaignReport run_spectral_campaign(const TrialConfig& cfg);

// Random K-term product sums (K ≤ 8) against the ln K entropy ceiling.
CampaignReport run_entropy_campaign(const TrialConfig& cfg);

// Random nondegenerate triorthogonal states: reduced spectra and extraction round trip.
CampaignReport run_roundtrip_campaign(const TrialConfig& cfg);

// Selectors: "single-product", "matching" (default), "matching-degenerate".
CampaignReport run_stability_campaign(const TrialConfig& cfg);

// Selectors: "witness3", "witness4", "perturbed", or empty for all three.
CampaignReport run_isolation_scan(const TrialConfig& cfg);

// Convergent sequence of triorthogonal states and the extracted limit.
CampaignReport run_closure_test(const TrialConfig& cfg);

// Dispatch by campaign name: instability, spectral, entropy, roundtrip,
// stability, isolation, closure.
CampaignReport run_campaign(const std::string& name, const TrialConfig& cfg);

}  // namespace tridecomp
