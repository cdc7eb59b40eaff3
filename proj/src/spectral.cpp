#include "tridecomp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include <Eigen/Eigenvalues>

#include "tridecomp/errors.hpp"

namespace tridecomp {

Spectrum spectrum(const Matrix& op, const Tolerances& tol) {
  if (op.rows() != op.cols()) throw DimensionError("spectrum: operator is not square");
  if (!op.allFinite()) throw NumericalError("spectrum: non-finite entries");
  Spectrum out;
  if (op.size() == 0) return out;
  const double asym = (op - op.adjoint()).cwiseAbs().maxCoeff();
  if (asym > tol.herm) throw NumericalError("spectrum: operator is not Hermitian (deviation " + std::to_string(asym) + ")");
  const Matrix h = 0.5 * (op + op.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("spectrum: eigensolver did not converge");
  const RealVector& ev = es.eigenvalues();
  out.values.reserve(static_cast<std::size_t>(ev.size()));
  for (Eigen::Index i = ev.size(); i-- > 0;) {
    double v = ev[i];
    if (v < 0.0) {
      if (v < -tol.psd) throw NumericalError("spectrum: negative eigenvalue " + std::to_string(v));
      out.most_negative = std::min(out.most_negative, v);
      ++out.clamped;
      v = 0.0;
    }
    out.values.push_back(v);
  }
  out.source_trace = h.trace().real();
  return out;
}

Spectrum spectrum(const DensityMatrix& rho, const Tolerances& tol) { return spectrum(rho.matrix(), tol); }

EntropyValue entropy(const Spectrum& s) {
  EntropyValue e;
  for (double r : s.values)
    if (r > 0.0) e.nats -= r * std::log(r);
  e.nats = std::max(0.0, e.nats);
  return e;
}

EntropyValue entropy(const DensityMatrix& rho, const Tolerances& tol) { return entropy(spectrum(rho, tol)); }

double inequality_slack(double lhs, double rhs) {
  return 1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

namespace {
LemmaReport make_report(std::string lemma, double lhs, double rhs) {
  LemmaReport r;
  r.lemma = std::move(lemma);
  r.lhs = lhs;
  r.rhs = rhs;
  r.holds = lhs <= rhs + inequality_slack(lhs, rhs);
  return r;
}

void check_unit(const Vector& v, const char* what) {
  if (std::abs(v.norm() - 1.0) > 1e-9) throw ArgumentError(std::string(what) + " must be a unit vector");
}
}  // namespace

LemmaReport verify_spectral_lemmas(const Matrix& r, const Matrix& s, const Tolerances& tol) {
  if (r.rows() != s.rows() || r.cols() != s.cols()) throw DimensionError("spectral lemma: operators differ in shape");
  const Spectrum sr = spectrum(r, tol);
  const Spectrum ss = spectrum(s, tol);
  double gap = 0.0;
  std::size_t worst = 0;
  for (std::size_t n = 0; n < std::max(sr.values.size(), ss.values.size()); ++n) {
    const double g = std::abs(sr.at(n) - ss.at(n));
    if (g > gap) {
      gap = g;
      worst = n;
    }
  }
  LemmaReport rep = make_report("eigenvalue_gap", gap, trace_norm(r - s));
  rep.details.emplace_back("worst_index", static_cast<double>(worst));
  return rep;
}

Matrix pure_state_difference(const Vector& psi, const Vector& phi) {
  if (psi.size() != phi.size()) throw DimensionError("pure state difference: dimension mismatch");
  return psi * psi.adjoint() - phi * phi.adjoint();
}

double pure_state_trace_distance(const Vector& psi, const Vector& phi) {
  const double c = std::min(1.0, std::abs(psi.dot(phi)));
  return 2.0 * std::sqrt(std::max(0.0, 1.0 - c * c));
}

std::array<LemmaReport, 2> verify_projection_bounds(const Vector& psi, const Vector& phi, const Matrix& projection) {
  check_unit(psi, "Ψ");
  check_unit(phi, "Φ");
  if (projection.rows() != psi.size() || projection.cols() != psi.size())
    throw DimensionError("projection bound: projection has the wrong shape");
  const Matrix diff = pure_state_difference(psi, phi);
  const double full = trace_norm(diff);
  const double projected = trace_norm(projection * diff * projection);
  const double dist = (psi - phi).norm();
  return {make_report("projected_trace_norm", projected, full), make_report("trace_norm_vs_distance", full, 2.0 * dist)};
}

LemmaReport verify_positive_overlap_bound(const Vector& psi, const Vector& phi) {
  check_unit(psi, "Ψ");
  check_unit(phi, "Φ");
  if (psi.size() != phi.size()) throw DimensionError("overlap bound: dimension mismatch");
  const Complex ov = psi.dot(phi);
  if (!(ov.real() > 0.0) || std::abs(ov.imag()) > 1e-12 * std::max(1.0, std::abs(ov)))
    throw PreconditionError("⟨Ψ|Φ⟩ > 0 fails: overlap is (" + std::to_string(ov.real()) + ", " +
                            std::to_string(ov.imag()) + ")");
  LemmaReport rep = make_report("positive_overlap_distance", 2.0 * (psi - phi).norm(), std::sqrt(2.0) * trace_norm(pure_state_difference(psi, phi)));
  rep.details.emplace_back("overlap", ov.real());
  return rep;
}

LemmaReport verify_partial_trace_contraction(const Matrix& a, const std::vector<std::size_t>& dims,
                                             const std::vector<std::size_t>& keep) {
  const Matrix reduced = partial_trace_operator(a, dims, keep);
  return make_report("partial_trace_contraction", trace_norm(reduced), trace_norm(a));
}

EntropyBoundReport entropy_decomposition_bound(const State& psi, std::size_t term_count, const Tolerances& tol) {
  if (term_count == 0) throw ArgumentError("entropy bound: term count must be positive");
  const ProductSpace& space = space_of(psi);
  EntropyBoundReport rep;
  rep.term_count = term_count;
  rep.ceiling = std::log(static_cast<double>(term_count));
  for (std::size_t i = 0; i < space.factor_count(); ++i) {
    const double s = entropy(partial_trace(psi, {i}, tol), tol).nats;
    rep.entropies.push_back(s);
    if (s > rep.ceiling + 1e-9) rep.violated = true;
  }
  return rep;
}

SpectraAgreement reduced_spectra_agreement(const State& psi, double match_tol, const Tolerances& tol) {
  const ProductSpace& space = space_of(psi);
  if (space.factor_count() != 3) throw ArgumentError("spectra agreement requires a three-factor state");
  SpectraAgreement out;
  for (std::size_t i = 0; i < 3; ++i) out.spectra.push_back(spectrum(partial_trace(psi, {i}, tol), tol));
  std::size_t len = 0;
  for (const auto& s : out.spectra) len = std::max(len, s.values.size());
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j)
      for (std::size_t n = 0; n < len; ++n)
        out.max_mismatch = std::max(out.max_mismatch, std::abs(out.spectra[i].at(n) - out.spectra[j].at(n)));
  out.agree = out.max_mismatch <= match_tol;
  return out;
}

bool triortho_necessary_test(const State& psi, double match_tol, const Tolerances& tol) {
  return reduced_spectra_agreement(psi, match_tol, tol).agree;
}

}  // namespace tridecomp
