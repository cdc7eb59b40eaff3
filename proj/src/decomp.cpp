#include "tridecomp/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/SVD>

#include "tridecomp/errors.hpp"
#include "tridecomp/random.hpp"

namespace tridecomp {

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

RealVector singular_values(const Matrix& m) {
  if (m.rows() <= 64 && m.cols() <= 64) return Eigen::JacobiSVD<Matrix>(m).singularValues();
  return Eigen::BDCSVD<Matrix>(m).singularValues();
}

// Negative when a precedes b in lexicographic (real, imag) order.
int lex_compare(const Vector& a, const Vector& b) {
  constexpr double eps = 1e-12;
  for (Eigen::Index i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (std::abs(a[i].real() - b[i].real()) > eps) return a[i].real() < b[i].real() ? -1 : 1;
    if (std::abs(a[i].imag() - b[i].imag()) > eps) return a[i].imag() < b[i].imag() ? -1 : 1;
  }
  return 0;
}

Complex canonical_phase_factor(const SparseVector& v) {
  double mx = 0.0;
  for (const auto& e : v.entries()) mx = std::max(mx, std::abs(e.second));
  for (const auto& e : v.entries())
    if (std::abs(e.second) > 1e-10 * mx) return std::conj(e.second) / std::abs(e.second);
  return 1.0;
}

std::vector<Vector> dense_factors(const ProductTerm& t, const ProductSpace& space) {
  std::vector<Vector> out;
  for (std::size_t i = 0; i < t.factors.size(); ++i) out.push_back(t.factors[i].to_dense(space.dim(i)));
  return out;
}

ProductTerm make_term(Complex coeff, const std::vector<Vector>& factors) {
  ProductTerm t{coeff, {}};
  for (const auto& f : factors) t.factors.push_back(SparseVector::from_dense(f));
  return t;
}

double max_pairwise_overlap(const std::vector<SparseVector>& vs) {
  double mx = 0.0;
  for (std::size_t k = 0; k < vs.size(); ++k)
    for (std::size_t l = k + 1; l < vs.size(); ++l) mx = std::max(mx, std::abs(dot(vs[k], vs[l])));
  return mx;
}

}  // namespace

// ---------------------------------------------------------------------------
// Schmidt

Matrix SchmidtDecomposition::reconstruct() const {
  return left * coefficients.cast<Complex>().asDiagonal() * right.transpose();
}

std::size_t phase_anchor(const Vector& v) {
  const double mx = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) > 1e-10 * mx) return static_cast<std::size_t>(i);
  return 0;
}

Complex canonical_phase_factor(const Vector& v) {
  if (v.size() == 0) return 1.0;
  const Complex x = v[static_cast<Eigen::Index>(phase_anchor(v))];
  return std::abs(x) > 0.0 ? std::conj(x) / std::abs(x) : Complex{1.0, 0.0};
}

SchmidtDecomposition schmidt(const State& psi, std::vector<std::size_t> left_factors, const Tolerances& tol) {
  const DenseState d = to_dense(psi);
  std::sort(left_factors.begin(), left_factors.end());
  left_factors.erase(std::unique(left_factors.begin(), left_factors.end()), left_factors.end());
  const Matrix m = bipartite_matrix(d, left_factors);
  const double total = m.norm();
  if (!(total > 0.0)) throw ArgumentError("schmidt: zero state");

  Eigen::JacobiSVD<Matrix> svd;
  Eigen::BDCSVD<Matrix> bdc;
  Matrix u, v;
  RealVector sv;
  if (m.rows() <= 64 && m.cols() <= 64) {
    svd.compute(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = svd.matrixU();
    v = svd.matrixV();
    sv = svd.singularValues();
  } else {
    bdc.compute(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = bdc.matrixU();
    v = bdc.matrixV();
    sv = bdc.singularValues();
  }

  Eigen::Index rank = 0;
  while (rank < sv.size() && sv[rank] > tol.zero * total) ++rank;

  std::vector<Vector> lefts, rights;
  for (Eigen::Index k = 0; k < rank; ++k) {
    Vector l = u.col(k);
    Vector r = v.col(k).conjugate();  // m = Σ σ u v†, so the right factor is conj(v)
    const Complex ph = canonical_phase_factor(l);
    lefts.push_back(l * ph);
    rights.push_back(r * std::conj(ph));
  }

  // Equal coefficients are ordered by their canonically phased left vectors.
  std::vector<std::size_t> order(static_cast<std::size_t>(rank));
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start + 1;
    while (end < order.size() && sv[static_cast<Eigen::Index>(start)] - sv[static_cast<Eigen::Index>(end)] <=
                                     1e-12 * sv[0])
      ++end;
    std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return lex_compare(lefts[a], lefts[b]) < 0; });
    start = end;
  }

  SchmidtDecomposition out;
  out.left_factors = left_factors;
  for (std::size_t i = 0; i < d.space().factor_count(); ++i)
    if (!std::binary_search(left_factors.begin(), left_factors.end(), i)) out.right_factors.push_back(i);
  out.coefficients.resize(rank);
  out.left.resize(m.rows(), rank);
  out.right.resize(m.cols(), rank);
  for (Eigen::Index k = 0; k < rank; ++k) {
    const std::size_t src = order[static_cast<std::size_t>(k)];
    out.coefficients[k] = sv[static_cast<Eigen::Index>(src)];
    out.left.col(k) = lefts[src];
    out.right.col(k) = rights[src];
  }
  return out;
}

std::size_t schmidt_rank(const State& psi, std::vector<std::size_t> left_factors, double threshold) {
  const Matrix m = bipartite_matrix(to_dense(psi), std::move(left_factors));
  const RealVector sv = singular_values(m);
  return static_cast<std::size_t>((sv.array() > threshold).count());
}

// ---------------------------------------------------------------------------
// linear independence

IndependenceCertificate linear_independence(const std::vector<Vector>& vectors, double tol) {
  if (vectors.empty()) throw ArgumentError("linear independence: empty vector list");
  const Eigen::Index n = vectors.front().size();
  for (const auto& v : vectors)
    if (v.size() != n) throw DimensionError("linear independence: vectors differ in dimension");
  if (static_cast<Eigen::Index>(vectors.size()) > n) return {0.0, false};
  Matrix m(n, static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t k = 0; k < vectors.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = vectors[k];
  const RealVector sv = singular_values(m);
  const double smin = sv[sv.size() - 1];
  return {smin, smin > tol};
}

IndependenceCertificate linear_independence(const std::vector<SparseVector>& vectors, double tol) {
  if (vectors.empty()) throw ArgumentError("linear independence: empty vector list");
  // Only rows touched by some vector matter.
  std::vector<std::size_t> rows;
  for (const auto& v : vectors)
    for (const auto& e : v.entries()) rows.push_back(e.first);
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  if (vectors.size() > rows.size()) return {0.0, false};
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t k = 0; k < vectors.size(); ++k)
    for (const auto& [idx, val] : vectors[k].entries()) {
      const auto r = std::lower_bound(rows.begin(), rows.end(), idx) - rows.begin();
      m(r, static_cast<Eigen::Index>(k)) = val;
    }
  const RealVector sv = singular_values(m);
  const double smin = sv[sv.size() - 1];
  return {smin, smin > tol};
}

// ---------------------------------------------------------------------------
// tridecompositions

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::LiTwoFactors:
      return "LI_TWO_FACTORS";
    case Variant::LiAll:
      return "LI_ALL";
    case Variant::Orthonormal:
      return "ORTHONORMAL";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  if (name == "LI_TWO_FACTORS") return Variant::LiTwoFactors;
  if (name == "LI_ALL") return Variant::LiAll;
  if (name == "ORTHONORMAL") return Variant::Orthonormal;
  throw ArgumentError("unknown decomposition variant '" + name + "'");
}

DecompositionCertificate verify_tridecomposition(const TriDecomposition& d, const State& psi, const Tolerances& tol) {
  if (d.terms.empty()) throw ArgumentError("verify: decomposition has no terms");
  if (d.space.factor_count() != 3) throw ArgumentError("verify: tridecompositions need three factors");
  DecompositionCertificate cert;
  cert.variant = d.variant;

  cert.min_coefficient = std::numeric_limits<double>::infinity();
  for (const auto& t : d.terms) cert.min_coefficient = std::min(cert.min_coefficient, std::abs(t.coeff));

  const SumState sum = d.to_sum_state();
  cert.reconstruction_error = distance(psi, State(sum));

  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<SparseVector> comps;
    for (const auto& t : d.terms) comps.push_back(t.factors[i]);
    cert.min_singular_values.push_back(linear_independence(comps, tol.li).min_singular_value);
    cert.max_overlaps.push_back(max_pairwise_overlap(comps));
  }

  auto fail = [&](std::string why) {
    cert.passed = false;
    cert.failed_condition = std::move(why);
    return cert;
  };
  if (!(cert.min_coefficient > tol.zero)) return fail("|a_k| > 0 fails: smallest coefficient " + fmt(cert.min_coefficient));
  if (!(cert.reconstruction_error <= tol.reconstruction))
    return fail("reconstruction error " + fmt(cert.reconstruction_error) + " exceeds " + fmt(tol.reconstruction));

  auto independent = [&](std::size_t i) -> std::string {
    if (cert.min_singular_values[i] > tol.li) return {};
    return "factor " + std::to_string(i + 1) + " components are not linearly independent (min singular value " +
           fmt(cert.min_singular_values[i]) + ")";
  };
  switch (d.variant) {
    case Variant::LiAll:
      for (std::size_t i = 0; i < 3; ++i)
        if (auto why = independent(i); !why.empty()) return fail(why);
      break;
    case Variant::LiTwoFactors:
      for (std::size_t i = 0; i < 2; ++i)
        if (auto why = independent(i); !why.empty()) return fail(why);
      if (!(cert.max_overlaps[2] < 1.0 - tol.orth))
        return fail("factor 3 has a collinear pair (max overlap " + fmt(cert.max_overlaps[2]) + ")");
      break;
    case Variant::Orthonormal:
      for (std::size_t i = 0; i < 3; ++i)
        if (!(cert.max_overlaps[i] < tol.orth))
          return fail("factor " + std::to_string(i + 1) + " components are not orthonormal (max overlap " +
                      fmt(cert.max_overlaps[i]) + ")");
      break;
  }
  cert.passed = true;
  return cert;
}

TriDecomposition truncate_decomposition(const TriDecomposition& d, double delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ArgumentError("truncation: delta must be finite and non-negative");
  TriDecomposition out{d.space, {}, d.variant};
  for (const auto& t : d.terms)
    if (std::abs(t.coeff) > delta) out.terms.push_back(t);
  if (out.terms.empty()) throw ArgumentError("truncation: every coefficient is at most delta");
  return out;
}

TriDecomposition canonical_phase(const TriDecomposition& d, const TriDecomposition* reference) {
  if (reference && (reference->terms.size() != d.terms.size() ||
                    reference->space.factor_count() != d.space.factor_count()))
    throw ArgumentError("canonical phase: reference decomposition has a different shape");
  TriDecomposition out = d;
  for (std::size_t k = 0; k < out.terms.size(); ++k) {
    auto& t = out.terms[k];
    for (std::size_t i = 0; i < t.factors.size(); ++i) {
      Complex ph = canonical_phase_factor(t.factors[i]);
      if (reference) {
        const Complex o = dot(t.factors[i], reference->terms[k].factors[i]);
        if (std::abs(o) > 1e-12) ph = o / std::abs(o);
      }
      t.factors[i] = t.factors[i].scaled(ph);
      t.coeff *= std::conj(ph);
    }
  }
  return out;
}

double term_distance(const ProductTerm& a, const ProductTerm& b) {
  if (a.factors.size() != b.factors.size()) throw DimensionError("term distance: factor counts differ");
  Complex cb = b.coeff;
  double log_overlap = 0.0;
  for (std::size_t i = 0; i < a.factors.size(); ++i) {
    const Complex o = dot(a.factors[i], b.factors[i]);
    const double r = std::abs(o);
    if (r == 0.0) return std::sqrt(std::norm(a.coeff) + std::norm(b.coeff));
    // rephase y so that ⟨x|y'⟩ is real positive; the term is unchanged
    const Complex ph = std::conj(o) / r;
    cb *= std::conj(ph);
    const double diff = combine(1.0, a.factors[i], -ph, b.factors[i]).norm();
    const double delta = std::min(1.0, 0.5 * diff * diff);
    if (delta >= 1.0) return std::sqrt(std::norm(a.coeff) + std::norm(b.coeff));
    log_overlap += std::log1p(-delta);
  }
  const double one_minus = -std::expm1(log_overlap);
  const double d2 = std::norm(a.coeff - cb) + 2.0 * (std::conj(a.coeff) * cb).real() * one_minus;
  return std::sqrt(std::max(0.0, d2));
}

double term_overlap(const ProductTerm& a, const ProductTerm& b) {
  if (a.factors.size() != b.factors.size()) throw DimensionError("term overlap: factor counts differ");
  double p = 1.0;
  for (std::size_t i = 0; i < a.factors.size(); ++i) p *= std::abs(dot(a.factors[i], b.factors[i]));
  return p;
}

std::vector<std::size_t> max_weight_assignment(const Eigen::MatrixXd& weight) {
  // Hungarian method on cost = −weight, 1-based potentials.
  const auto n = static_cast<std::size_t>(weight.rows());
  if (weight.cols() != weight.rows()) throw DimensionError("assignment: weight matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  auto cost = [&](std::size_t i, std::size_t j) {
    return -weight(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1));
  };
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n, 0);
  for (std::size_t j = 1; j <= n; ++j)
    if (p[j] != 0) assignment[p[j] - 1] = j - 1;
  return assignment;
}

bool decompositions_equivalent(const TriDecomposition& d1, const TriDecomposition& d2, double tol,
                               const Tolerances& tols) {
  if (d1.terms.size() != d2.terms.size()) return false;
  if (d1.space.factor_count() != d2.space.factor_count()) return false;
  auto sorted = [](const TriDecomposition& d) {
    std::vector<std::size_t> idx(d.terms.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(d.terms[a].coeff) > std::abs(d.terms[b].coeff); });
    return idx;
  };
  const auto o1 = sorted(d1);
  const auto o2 = sorted(d2);
  const double gap = std::max(tols.deg, tol);
  auto mag1 = [&](std::size_t p) { return std::abs(d1.terms[o1[p]].coeff); };
  auto mag2 = [&](std::size_t p) { return std::abs(d2.terms[o2[p]].coeff); };

  for (std::size_t start = 0; start < o1.size();) {
    std::size_t end = start + 1;
    // a group ends only where both sorted lists show a clear magnitude gap
    while (end < o1.size() && (mag1(end - 1) - mag1(end) <= gap || mag2(end - 1) - mag2(end) <= gap)) ++end;
    const std::size_t g = end - start;
    Eigen::MatrixXd w(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(g));
    for (std::size_t i = 0; i < g; ++i)
      for (std::size_t j = 0; j < g; ++j)
        w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            term_overlap(d1.terms[o1[start + i]], d2.terms[o2[start + j]]);
    const auto assign = max_weight_assignment(w);
    for (std::size_t i = 0; i < g; ++i) {
      const ProductTerm& a = d1.terms[o1[start + i]];
      const ProductTerm& b = d2.terms[o2[start + assign[i]]];
      if (std::abs(std::abs(a.coeff) - std::abs(b.coeff)) > tol) return false;
      if (term_distance(a, b) > tol) return false;
    }
    start = end;
  }
  return true;
}

// ---------------------------------------------------------------------------
// extraction

OrderedTriortho make_ordered(TriDecomposition d, const Tolerances& tol) {
  std::stable_sort(d.terms.begin(), d.terms.end(),
                   [](const ProductTerm& a, const ProductTerm& b) { return std::abs(a.coeff) > std::abs(b.coeff); });
  std::vector<MagnitudeBlock> blocks;
  for (std::size_t k = 0; k < d.terms.size(); ++k) {
    const double mag = std::abs(d.terms[k].coeff);
    if (blocks.empty() || blocks.back().magnitude - mag > tol.deg) blocks.push_back({mag, {}});
    blocks.back().members.push_back(k);
  }
  return OrderedTriortho{std::move(d), std::move(blocks)};
}

const char* status_name(ExtractionStatus s) {
  switch (s) {
    case ExtractionStatus::Triorthogonal:
      return "triorthogonal";
    case ExtractionStatus::NotTriorthogonal:
      return "not_triorthogonal";
    case ExtractionStatus::Undetermined:
      return "undetermined";
  }
  return "?";
}

ExtractionResult extract_triortho(const State& psi, const Tolerances& tol, std::uint64_t seed) {
  const ProductSpace& space = space_of(psi);
  if (space.factor_count() != 3) throw ArgumentError("extract: triorthogonal extraction needs three factors");
  const DenseState d = to_dense(psi);
  if (!(d.amplitudes().norm() > 0.0)) throw ArgumentError("extract: zero state");
  const std::size_t d1 = space.dim(0), d2 = space.dim(1), d3 = space.dim(2);

  ExtractionResult result;
  const SpectraAgreement agreement = reduced_spectra_agreement(d, tol.spectral_match, tol);
  if (!agreement.agree) {
    result.status = ExtractionStatus::NotTriorthogonal;
    result.reason = "reduced spectra differ by " + fmt(agreement.max_mismatch);
    return result;
  }

  const SchmidtDecomposition s = schmidt(d, {0}, tol);
  const auto& amps = d.amplitudes();
  // x(i1) = Σ conj(ψ²(i2)) conj(ψ³(i3)) Ψ(i1, i2, i3)
  auto contract = [&](const Vector& p2, const Vector& p3) {
    Vector x = Vector::Zero(static_cast<Eigen::Index>(d1));
    for (std::size_t i1 = 0; i1 < d1; ++i1)
      for (std::size_t i2 = 0; i2 < d2; ++i2) {
        const Complex c2 = std::conj(p2[static_cast<Eigen::Index>(i2)]);
        if (c2 == Complex{0.0, 0.0}) continue;
        for (std::size_t i3 = 0; i3 < d3; ++i3)
          x[static_cast<Eigen::Index>(i1)] +=
              c2 * std::conj(p3[static_cast<Eigen::Index>(i3)]) *
              amps[static_cast<Eigen::Index>((i1 * d2 + i2) * d3 + i3)];
      }
    return x;
  };

  Rng rng(seed);
  constexpr int kAttempts = 4;
  constexpr double kSeparation = 1e-6;
  TriDecomposition out{space, {}, Variant::Orthonormal};
  const auto r = static_cast<std::size_t>(s.rank());
  for (std::size_t start = 0, block = 0; start < r; ++block) {
    std::size_t end = start + 1;
    while (end < r && s.coefficients[static_cast<Eigen::Index>(start)] - s.coefficients[static_cast<Eigen::Index>(end)] <=
                          tol.deg)
      ++end;
    const std::size_t g = end - start;
    bool resolved = false;
    for (int attempt = 0; attempt < kAttempts && !resolved; ++attempt) {
      // A generic combination of the block's right vectors; for a triorthogonal
      // state its singular vectors are the factor-2 and factor-3 components.
      Vector z = g == 1 ? Vector::Ones(1) : random_gaussian_vector(g, rng);
      Matrix x = Matrix::Zero(static_cast<Eigen::Index>(d2), static_cast<Eigen::Index>(d3));
      for (std::size_t j = 0; j < g; ++j)
        for (std::size_t i2 = 0; i2 < d2; ++i2)
          for (std::size_t i3 = 0; i3 < d3; ++i3)
            x(static_cast<Eigen::Index>(i2), static_cast<Eigen::Index>(i3)) +=
                z[static_cast<Eigen::Index>(j)] *
                s.right(static_cast<Eigen::Index>(i2 * d3 + i3), static_cast<Eigen::Index>(start + j));
      Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const RealVector& sv = svd.singularValues();
      if (sv.size() < static_cast<Eigen::Index>(g)) break;
      if (sv.size() > static_cast<Eigen::Index>(g) && sv[static_cast<Eigen::Index>(g)] > kSeparation * sv[0]) {
        result.status = ExtractionStatus::NotTriorthogonal;
        result.reason = "Schmidt block " + std::to_string(block + 1) + " does not span product states (residual " +
                        fmt(sv[static_cast<Eigen::Index>(g)] / sv[0]) + ")";
        return result;
      }
      bool separated = sv[static_cast<Eigen::Index>(g) - 1] > kSeparation * sv[0];
      for (std::size_t j = 0; j + 1 < g && separated; ++j)
        separated = sv[static_cast<Eigen::Index>(j)] - sv[static_cast<Eigen::Index>(j + 1)] > kSeparation * sv[0];
      if (!separated) continue;
      for (std::size_t j = 0; j < g; ++j) {
        const Vector p2 = svd.matrixU().col(static_cast<Eigen::Index>(j));
        const Vector p3 = svd.matrixV().col(static_cast<Eigen::Index>(j)).conjugate();
        const Vector x1 = contract(p2, p3);
        const double a = x1.norm();
        if (!(a > tol.zero)) {
          result.status = ExtractionStatus::NotTriorthogonal;
          result.reason = "Schmidt block " + std::to_string(block + 1) + " yields a vanishing component";
          return result;
        }
        out.terms.push_back(make_term(a, {x1 / a, p2, p3}));
      }
      resolved = true;
    }
    if (!resolved) {
      result.status = ExtractionStatus::Undetermined;
      result.reason = "degenerate Schmidt block " + std::to_string(block + 1) + " of size " + std::to_string(g) +
                      " could not be separated into products";
      return result;
    }
    start = end;
  }

  const DecompositionCertificate cert = verify_tridecomposition(out, d, tol);
  if (!cert.passed) {
    result.status = ExtractionStatus::NotTriorthogonal;
    result.reason = cert.failed_condition;
    return result;
  }
  result.status = ExtractionStatus::Triorthogonal;
  result.decomposition = make_ordered(canonical_phase(out), tol);
  return result;
}

// ---------------------------------------------------------------------------
// matching

namespace {

Matrix bipartite_operator(const std::vector<BipartiteTerm>& terms, Eigen::Index d1, Eigen::Index d2) {
  Matrix m = Matrix::Zero(d1, d2);
  for (const auto& t : terms) m += t.coeff * t.first * t.second.transpose();
  return m;
}

void require_orthonormal(const std::vector<Vector>& vs, double tol, const char* what) {
  for (std::size_t k = 0; k < vs.size(); ++k) {
    if (std::abs(vs[k].norm() - 1.0) > tol) throw ArgumentError(std::string(what) + " vectors are not unit");
    for (std::size_t l = k + 1; l < vs.size(); ++l)
      if (std::abs(vs[k].dot(vs[l])) > tol) throw ArgumentError(std::string(what) + " vectors are not orthogonal");
  }
}

}  // namespace

SingleProductReport match_single_product(const BipartiteTerm& psi, const std::vector<BipartiteTerm>& phi,
                                         double epsilon, double epsilon_prime, const Tolerances& tol) {
  if (phi.empty()) throw ArgumentError("single product match: Φ has no terms");
  const Eigen::Index d1 = psi.first.size(), d2 = psi.second.size();
  std::vector<Vector> f1, f2;
  for (const auto& t : phi) {
    if (t.first.size() != d1 || t.second.size() != d2) throw DimensionError("single product match: dimension mismatch");
    f1.push_back(t.first);
    f2.push_back(t.second);
  }
  if (std::abs(psi.first.norm() - 1.0) > tol.norm || std::abs(psi.second.norm() - 1.0) > tol.norm)
    throw ArgumentError("single product match: ψ¹ and ψ² must be unit vectors");
  require_orthonormal(f1, tol.orth, "φ¹");
  require_orthonormal(f2, tol.orth, "φ²");

  SingleProductReport rep;
  rep.epsilon = epsilon;
  rep.epsilon_prime = epsilon_prime;
  const Matrix mpsi = bipartite_operator({psi}, d1, d2);
  const Matrix mphi = bipartite_operator(phi, d1, d2);
  rep.reduced_trace_distance = trace_norm(mpsi * mpsi.adjoint() - mphi * mphi.adjoint());
  const double a2 = std::norm(psi.coeff);

  if (!(epsilon_prime > 0.0)) throw PreconditionError("ε′ > 0 fails: ε′ = " + fmt(epsilon_prime));
  if (!(rep.reduced_trace_distance < epsilon_prime))
    throw PreconditionError("‖ρ₁(Ψ) − ρ₁(Φ)‖₁ < ε′ fails: " + fmt(rep.reduced_trace_distance) + " ≥ " + fmt(epsilon_prime));
  if (!(a2 <= 1.0 + tol.norm)) throw PreconditionError("1 ≥ |a|² fails: |a|² = " + fmt(a2));
  if (!(a2 > 2.0 * epsilon_prime))
    throw PreconditionError("|a|² > 2ε′ fails: " + fmt(a2) + " ≤ " + fmt(2.0 * epsilon_prime));

  std::size_t m = 0;
  for (std::size_t k = 1; k < phi.size(); ++k)
    if (std::abs(phi[k].coeff) > std::abs(phi[m].coeff)) m = k;
  rep.match = m;
  rep.coefficient_gap = std::abs(a2 - std::norm(phi[m].coeff));
  for (std::size_t k = 0; k < phi.size(); ++k)
    if (k != m) rep.max_other_weight = std::max(rep.max_other_weight, std::norm(phi[k].coeff));
  rep.first_holds = rep.coefficient_gap < epsilon_prime && rep.max_other_weight < epsilon_prime;

  rep.state_distance = (mpsi - mphi).norm();
  const double a = std::sqrt(a2);
  if (!(epsilon > 0.0 && epsilon < 1.0))
    rep.second_inapplicable_reason = "ε ∈ (0, 1) fails";
  else if (!(rep.state_distance < epsilon_prime))
    rep.second_inapplicable_reason = "‖Ψ − Φ‖ < ε′ fails";
  else if (!(std::sqrt(epsilon_prime) <= a * epsilon / 3.0))
    rep.second_inapplicable_reason = "√ε′ ≤ |a|ε/3 fails";
  else if (!(a * epsilon / 3.0 < 1.0))
    rep.second_inapplicable_reason = "|a|ε/3 < 1 fails";
  rep.second_applicable = rep.second_inapplicable_reason.empty();

  const ProductTerm tp = make_term(psi.coeff, {psi.first, psi.second});
  const ProductTerm tq = make_term(phi[m].coeff, {phi[m].first, phi[m].second});
  rep.term_distance = term_distance(tp, tq);
  rep.overlap_first = std::abs(psi.first.dot(phi[m].first));
  rep.overlap_second = std::abs(psi.second.dot(phi[m].second));
  if (rep.second_applicable)
    rep.second_holds = rep.term_distance < epsilon && rep.overlap_first > 1.0 - epsilon &&
                       rep.overlap_second > 1.0 - epsilon;
  return rep;
}

double MatchReport::term_bound() const { return 3.0 * std::sqrt(epsilon); }

MatchReport match_components(const OrderedTriortho& psi, const TriDecomposition& phi, std::size_t L, double epsilon,
                             const Tolerances& tol) {
  const TriDecomposition& pd = psi.decomposition;
  if (pd.space.factor_count() != 3 || phi.space.factor_count() != 3)
    throw ArgumentError("match: both decompositions need three factors");
  if (!(epsilon > 0.0 && epsilon < 0.25)) throw PreconditionError("ε ∈ (0, 1/4) fails: ε = " + fmt(epsilon));
  if (L < 1 || L > psi.blocks.size())
    throw PreconditionError("1 ≤ L ≤ M fails: L = " + std::to_string(L) + ", M = " + std::to_string(psi.blocks.size()));
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<SparseVector> comps;
    for (const auto& t : phi.terms) comps.push_back(t.factors[i]);
    if (!(max_pairwise_overlap(comps) < tol.orth))
      throw PreconditionError("Φ's decomposition is not triorthogonal in factor " + std::to_string(i + 1));
  }

  MatchReport rep;
  rep.L = L;
  rep.epsilon = epsilon;
  const double aL = psi.blocks[L - 1].magnitude;
  rep.distance_bound = aL * aL * epsilon * epsilon / 18.0;
  rep.epsilon_prime = aL * aL * epsilon * epsilon / 9.0;
  rep.distance = distance(State(pd.to_sum_state()), State(phi.to_sum_state()));
  if (!(rep.distance < rep.distance_bound))
    throw PreconditionError("‖Ψ − Φ‖ < |â_L|²ε²/18 fails: " + fmt(rep.distance) + " ≥ " + fmt(rep.distance_bound));

  const ProductSpace common = pd.space.padded_with(phi.space);
  std::vector<std::vector<Vector>> phi_dense;
  for (const auto& t : phi.terms) phi_dense.push_back(dense_factors(t, common));

  std::vector<bool> used(phi.terms.size(), false);
  rep.all_hold = true;
  for (std::size_t m = 0; m < L; ++m) {
    for (std::size_t k : psi.blocks[m].members) {
      const ProductTerm& t = pd.terms[k];
      const auto f = dense_factors(t, common);
      std::vector<BipartiteTerm> projected;
      for (std::size_t j = 0; j < phi.terms.size(); ++j)
        projected.push_back({phi.terms[j].coeff * f[2].dot(phi_dense[j][2]), phi_dense[j][0], phi_dense[j][1]});
      SingleProductReport single;
      try {
        single = match_single_product({t.coeff, f[0], f[1]}, projected, epsilon, rep.epsilon_prime, tol);
      } catch (const PreconditionError& e) {
        throw BoundViolation(std::string("projected pair violates the reduced-state estimate: ") + e.what());
      }
      const std::size_t kp = single.match;
      if (used[kp])
        throw BoundViolation("pairing is not injective: term " + std::to_string(kp + 1) + " of Φ matched twice");
      used[kp] = true;

      PairRecord rec;
      rec.block = m;
      rec.term = k;
      rec.partner = kp;
      rec.coefficient_gap = std::abs(std::norm(t.coeff) - std::norm(phi.terms[kp].coeff));
      for (std::size_t i = 0; i < 3; ++i) rec.overlaps[i] = std::abs(f[i].dot(phi_dense[kp][i]));
      rec.term_distance = term_distance(t, phi.terms[kp]);
      rec.holds = single.holds() && rec.coefficient_gap < rep.coefficient_bound() &&
                  rec.term_distance < rep.term_bound();
      for (double o : rec.overlaps) rec.holds = rec.holds && o > rep.overlap_bound();
      rep.all_hold = rep.all_hold && rec.holds;
      rep.pairs.push_back(rec);
    }
  }
  return rep;
}

}  // namespace tridecomp
