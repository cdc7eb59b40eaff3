#include "tridecomp/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "tridecomp/errors.hpp"

namespace tridecomp {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_angle(double theta, const char* what) {
  if (!(theta > 0.0 && theta <= kPi / 2.0))
    throw ArgumentError(std::string(what) + ": θ must lie in (0, π/2], got " + std::to_string(theta));
}

Vector basis_vector(std::size_t dim, std::size_t index) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
  v[static_cast<Eigen::Index>(index)] = 1.0;
  return v;
}

Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a[i] * b;
  return out;
}

ProductTerm dense_term(Complex coeff, const std::vector<Vector>& factors) {
  ProductTerm t{coeff, {}};
  for (const auto& f : factors) t.factors.push_back(SparseVector::from_dense(f));
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------

SingletFamily singlet_family(double theta) {
  check_angle(theta, "singlet family");
  const ProductSpace space({2, 2, 2});
  const double r = 1.0 / std::sqrt(2.0);
  const Vector e0 = basis_vector(2, 0), e1 = basis_vector(2, 1);

  Vector singlet = r * (kron(e0, e1) - kron(e1, e0));
  DenseState psi(space, kron(e0, singlet), true);

  const Vector phi2_1 = r * (e0 - e1), phi2_2 = r * (e0 + e1);
  const Vector phi3_1 = r * (e0 + e1), phi3_2 = r * (e0 - e1);
  const Vector first_1 = e0;
  const Vector first_2 = -std::cos(theta) * e0 - std::sin(theta) * e1;

  std::vector<ProductTerm> phi_terms{dense_term(r, {first_1, phi2_1, phi3_1}), dense_term(r, {first_2, phi2_2, phi3_2})};
  std::vector<ProductTerm> psi_terms{dense_term(r, {first_1, e0, e1}), dense_term(r, {first_2, e1, e0})};

  return SingletFamily{theta,
                   std::move(psi),
                   SumState(space, phi_terms),
                   SumState(space, psi_terms),
                   TriDecomposition{space, phi_terms, Variant::LiAll},
                   TriDecomposition{space, psi_terms, Variant::LiAll}};
}

SchmidtRotation schmidt_rotation(double p1, double p2, double alpha) {
  if (!(p1 >= p2 && p2 > 0.0)) throw ArgumentError("schmidt rotation requires p1 ≥ p2 > 0");
  const Vector e0 = basis_vector(2, 0), e1 = basis_vector(2, 1);
  const double s1 = std::sqrt(p1), s2 = std::sqrt(p2);
  const double c = std::cos(alpha), s = std::sin(alpha);
  SchmidtRotation out;
  out.p1 = p1;
  out.p2 = p2;
  out.alpha = alpha;
  out.target = s1 * kron(e0, e0) + s2 * kron(e1, e1);
  out.schmidt_form = {std::pair<Vector, Vector>{e0, s1 * e0}, std::pair<Vector, Vector>{e1, s2 * e1}};
  out.rotated_form = {std::pair<Vector, Vector>{c * e0 + s * e1, s1 * c * e0 + s2 * s * e1},
                      std::pair<Vector, Vector>{s * e0 - c * e1, s1 * s * e0 - s2 * c * e1}};
  return out;
}

Vector expansion_vector(const std::array<std::pair<Vector, Vector>, 2>& terms) {
  return kron(terms[0].first, terms[0].second) + kron(terms[1].first, terms[1].second);
}

ReducedPair reduced_pair(double theta) {
  const SingletFamily ex = singlet_family(theta);
  const DensityMatrix rho_phi = partial_trace(ex.phi_theta, {0, 1});
  const DensityMatrix rho_psi = partial_trace(ex.psi_theta, {0, 1});

  auto products = [](const TriDecomposition& d) {
    std::array<Vector, 2> out;
    for (std::size_t k = 0; k < 2; ++k)
      out[k] = kron(d.terms[k].factors[0].to_dense(2), d.terms[k].factors[1].to_dense(2));
    return out;
  };
  auto weights = [](const TriDecomposition& d) {
    return std::array<double, 2>{std::norm(d.terms[0].coeff), std::norm(d.terms[1].coeff)};
  };

  ReducedPair out{theta, rho_phi, rho_psi, weights(ex.phi_decomposition), weights(ex.psi_decomposition),
                products(ex.phi_decomposition), products(ex.psi_decomposition), 0.0, Eigen::Matrix2d::Zero(), 0.0};
  out.trace_norm_gap = trace_norm(rho_phi.matrix() - rho_psi.matrix());
  Matrix sum_phi = Matrix::Zero(4, 4), sum_psi = Matrix::Zero(4, 4);
  for (std::size_t k = 0; k < 2; ++k) {
    sum_phi += out.phi_weights[k] * out.phi_products[k] * out.phi_products[k].adjoint();
    sum_psi += out.psi_weights[k] * out.xi_products[k] * out.xi_products[k].adjoint();
    for (std::size_t j = 0; j < 2; ++j)
      out.cross_overlaps(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
          std::abs(out.phi_products[k].dot(out.xi_products[j]));
  }
  out.formula_error = std::max((sum_phi - rho_phi.matrix()).cwiseAbs().maxCoeff(),
                               (sum_psi - rho_psi.matrix()).cwiseAbs().maxCoeff());
  return out;
}

DivergingFamily diverging_family(double theta) {
  check_angle(theta, "diverging family");
  const ProductSpace space({2, 2, 2});
  const Vector e0 = basis_vector(2, 0), e1 = basis_vector(2, 1);
  const Vector rotated = std::cos(theta) * e0 + std::sin(theta) * e1;
  const double big = 1.0 / std::sqrt(theta);
  const std::array<Complex, 2> raw{1.0 - big, big};
  for (const auto& c : raw)
    if (c == Complex{0.0, 0.0}) throw ArgumentError("diverging family: |a_k| > 0 fails at θ = " + std::to_string(theta));

  const std::vector<ProductTerm> terms{dense_term(raw[0], {e0, e0, e0}), dense_term(raw[1], {rotated, rotated, rotated})};
  SumState phi(space, terms);
  const DenseState dense = densify(phi);
  const double nrm = dense.amplitudes().norm();

  std::vector<ProductTerm> normalized = terms;
  for (auto& t : normalized) t.coeff /= nrm;
  return DivergingFamily{theta,
                   std::move(phi),
                   nrm,
                   raw,
                   std::max(std::abs(raw[0]), std::abs(raw[1])),
                   DenseState(space, dense.amplitudes() / nrm, true),
                   DenseState::product(space, {e0, e0, e0}),
                   TriDecomposition{space, std::move(normalized), Variant::LiAll}};
}

Matrix dft_basis(std::size_t n) {
  if (n == 0) throw ArgumentError("dft basis: N must be at least 1");
  const auto m = static_cast<Eigen::Index>(n);
  Matrix f(m, m);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t k = 1; k <= n; ++k)
    for (std::size_t j = 1; j <= n; ++j)
      f(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(j - 1)) =
          std::polar(scale, 2.0 * kPi * static_cast<double>((k * j) % n) / static_cast<double>(n));
  return f;
}

// ---------------------------------------------------------------------------

namespace {

struct IndexedCoefficient {
  Complex value;
  std::array<std::size_t, 3> index;
};

struct PairCandidate {
  SumState phi1, phi2;
  TriDecomposition d1, d2;
  double distance1 = 0.0, distance2 = 0.0, min_basis_overlap = 1.0, max_cross_overlap = 0.0;
};

PairCandidate build_candidate(const DenseState& psi, const ProductSpace& ambient, std::size_t n, const Matrix& f,
                           const std::vector<IndexedCoefficient>& a, const std::vector<IndexedCoefficient>& b,
                           double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  // term j (1-based) takes the fresh direction u_{N+1+j}, i.e. 0-based N + j
  auto u_component = [&](std::size_t idx, std::size_t j) {
    return SparseVector({{idx, c}, {n + j, s}});
  };
  auto v_component = [&](std::size_t idx, std::size_t j) {
    std::vector<SparseVector::Entry> e;
    for (std::size_t r = 0; r < n; ++r) e.emplace_back(r, c * f(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(idx)));
    e.emplace_back(n + j, s);
    return SparseVector(std::move(e));
  };
  auto assemble = [&](const std::vector<IndexedCoefficient>& coeffs, auto&& component) {
    std::vector<ProductTerm> terms;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      ProductTerm t{coeffs[j].value, {}};
      for (std::size_t i = 0; i < 3; ++i) t.factors.push_back(component(coeffs[j].index[i], j + 1));
      terms.push_back(std::move(t));
    }
    const double nrm = norm(SumState(ambient, terms));
    for (auto& t : terms) t.coeff /= nrm;
    return terms;
  };
  auto t1 = assemble(a, u_component);
  auto t2 = assemble(b, v_component);

  PairCandidate out{SumState(ambient, t1), SumState(ambient, t2), TriDecomposition{ambient, t1, Variant::LiAll},
                     TriDecomposition{ambient, t2, Variant::LiAll}};
  const State target = sparsify(psi).embedded_in(ambient);
  out.distance1 = distance(target, State(out.phi1));
  out.distance2 = distance(target, State(out.phi2));
  for (std::size_t k = 0; k < t1.size(); ++k)
    for (std::size_t i = 0; i < 3; ++i) {
      out.min_basis_overlap = std::min(out.min_basis_overlap, std::abs(t1[k].factors[i].at(a[k].index[i])));
      for (const auto& t : t2) out.max_cross_overlap = std::max(out.max_cross_overlap, std::abs(dot(t1[k].factors[i], t.factors[i])));
    }
  return out;
}

}  // namespace

PairedExpansions paired_expansions(const DenseState& psi, double epsilon, std::optional<double> theta) {
  if (psi.space().factor_count() != 3) throw ArgumentError("paired expansions: Ψ must live on three factors");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ArgumentError("paired expansions: ε must lie in (0, 1)");
  if (std::abs(psi.amplitudes().norm() - 1.0) > 1e-9) throw ArgumentError("paired expansions: Ψ must be normalized");
  if (theta) check_angle(*theta, "paired expansions");
  const auto& dims = psi.space().dims();
  const std::size_t dmax = *std::max_element(dims.begin(), dims.end());

  // P^N Ψ keeps amplitudes whose every index is below N
  auto truncated = [&](std::size_t n) {
    Vector v = psi.amplitudes();
    for (std::size_t i1 = 0; i1 < dims[0]; ++i1)
      for (std::size_t i2 = 0; i2 < dims[1]; ++i2)
        for (std::size_t i3 = 0; i3 < dims[2]; ++i3)
          if (i1 >= n || i2 >= n || i3 >= n) v[static_cast<Eigen::Index>((i1 * dims[1] + i2) * dims[2] + i3)] = 0.0;
    return v;
  };

  std::size_t n0 = 0;
  for (std::size_t n = 1; n <= dmax && n0 == 0; ++n) {
    const Vector p = truncated(n);
    const double pn = p.norm();
    if (pn > 1.0 - (epsilon / 4.0) * (epsilon / 4.0) && (psi.amplitudes() - p / pn).norm() < epsilon / 2.0) n0 = n;
  }
  std::size_t n = n0;
  while (!(1.0 / std::sqrt(static_cast<double>(n)) < epsilon / 2.0)) ++n;

  const Vector pn_vec = truncated(n0 > n ? n0 : n);
  const Vector phi_n = pn_vec / pn_vec.norm();
  const double truncation_error = (psi.amplitudes() - phi_n).norm();

  // coefficients in the u basis, zero-padded to N per factor
  const auto nn = static_cast<Eigen::Index>(n);
  std::vector<Complex> a(n * n * n, 0.0);
  for (std::size_t i1 = 0; i1 < std::min(n, dims[0]); ++i1)
    for (std::size_t i2 = 0; i2 < std::min(n, dims[1]); ++i2)
      for (std::size_t i3 = 0; i3 < std::min(n, dims[2]); ++i3)
        a[(i1 * n + i2) * n + i3] = phi_n[static_cast<Eigen::Index>((i1 * dims[1] + i2) * dims[2] + i3)];

  // b = (F†)^{⊗3} a, one mode at a time
  const Matrix f = dft_basis(n);
  const Matrix fh = f.adjoint();
  std::vector<Complex> b = a;
  for (std::size_t mode = 0; mode < 3; ++mode) {
    std::vector<Complex> next(b.size(), 0.0);
    for (std::size_t i1 = 0; i1 < n; ++i1)
      for (std::size_t i2 = 0; i2 < n; ++i2)
        for (std::size_t i3 = 0; i3 < n; ++i3) {
          const std::array<std::size_t, 3> idx{i1, i2, i3};
          const Complex val = b[(i1 * n + i2) * n + i3];
          if (val == Complex{0.0, 0.0}) continue;
          for (std::size_t r = 0; r < n; ++r) {
            auto out = idx;
            out[mode] = r;
            next[(out[0] * n + out[1]) * n + out[2]] +=
                fh(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(idx[mode])) * val;
          }
        }
    b = std::move(next);
  }
  (void)nn;

  // terms with (numerically) zero coefficients are omitted
  auto collect = [&](const std::vector<Complex>& coeffs) {
    double mx = 0.0;
    for (const auto& c : coeffs) mx = std::max(mx, std::abs(c));
    std::vector<IndexedCoefficient> out;
    for (std::size_t i1 = 0; i1 < n; ++i1)
      for (std::size_t i2 = 0; i2 < n; ++i2)
        for (std::size_t i3 = 0; i3 < n; ++i3) {
          const Complex c = coeffs[(i1 * n + i2) * n + i3];
          if (std::abs(c) > 1e-12 * mx) out.push_back({c, {i1, i2, i3}});
        }
    return out;
  };
  const auto ka = collect(a);
  const auto mb = collect(b);

  std::vector<std::size_t> ambient_dims(3);
  for (std::size_t i = 0; i < 3; ++i) ambient_dims[i] = std::max(dims[i], n + 1 + std::max(ka.size(), mb.size()));
  const ProductSpace ambient(ambient_dims);

  auto strict_failure = [&](const PairCandidate& c) -> std::string {
    if (!(c.distance1 < epsilon)) return "‖Ψ − Φ₁‖ < ε fails (" + std::to_string(c.distance1) + ")";
    if (!(c.distance2 < epsilon)) return "‖Ψ − Φ₂‖ < ε fails (" + std::to_string(c.distance2) + ")";
    if (!(c.min_basis_overlap > 1.0 - epsilon))
      return "|⟨ψ^i_k|u^i_n(k)⟩| > 1 − ε fails (" + std::to_string(c.min_basis_overlap) + ")";
    if (!(c.max_cross_overlap < epsilon)) return "|⟨ψ^i_k|φ^i_m⟩| < ε fails (" + std::to_string(c.max_cross_overlap) + ")";
    return {};
  };
  auto with_slack = [&](const PairCandidate& c) {
    const double lim = 0.9 * epsilon;
    return c.distance1 <= lim && c.distance2 <= lim && c.min_basis_overlap >= 1.0 - lim && c.max_cross_overlap <= lim;
  };

  std::optional<PairCandidate> chosen;
  double theta_used = 0.0;
  if (theta) {
    PairCandidate c = build_candidate(psi, ambient, n, f, ka, mb, *theta);
    if (auto why = strict_failure(c); !why.empty()) throw ArgumentError("paired expansions: θ = " + std::to_string(*theta) + " too large: " + why);
    chosen = std::move(c);
    theta_used = *theta;
  } else {
    for (int j = 0; j <= 40 && !chosen; ++j) {
      const double t = std::ldexp(1.0, -j);
      if (t > kPi / 2.0) continue;
      PairCandidate c = build_candidate(psi, ambient, n, f, ka, mb, t);
      if (with_slack(c)) {
        chosen = std::move(c);
        theta_used = t;
      }
    }
    if (!chosen) throw ArgumentError("paired expansions: no θ on the 2^-j grid meets the conclusions");
  }

  PairedExpansions out{ambient,
                  epsilon,
                  theta_used,
                  n0,
                  n,
                  truncation_error,
                  chosen->phi1,
                  chosen->phi2,
                  chosen->d1,
                  chosen->d2,
                  {},
                  chosen->distance1,
                  chosen->distance2,
                  chosen->min_basis_overlap,
                  chosen->max_cross_overlap};
  for (const auto& k : ka) out.basis_index.push_back(k.index);
  return out;
}

// ---------------------------------------------------------------------------
// mover

MoverUnitary::MoverUnitary(SumState phi1, SumState phi2, const Tolerances& tol)
    : phi1_(std::move(phi1)), phi2_(std::move(phi2)) {
  if (phi1_.space().factor_count() != phi2_.space().factor_count())
    throw DimensionError("mover: states have different factor counts");
  const ProductSpace common = phi1_.space().padded_with(phi2_.space());
  phi1_ = phi1_.embedded_in(common);
  phi2_ = phi2_.embedded_in(common);
  const double n1 = tridecomp::norm(phi1_), n2 = tridecomp::norm(phi2_);
  if (std::abs(n1 - 1.0) > tol.norm || std::abs(n2 - 1.0) > tol.norm)
    throw ArgumentError("mover: Φ₁ and Φ₂ must be wavefunctions");
  phi1_ = phi1_.scaled(1.0 / n1);
  phi2_ = phi2_.scaled(1.0 / n2);
  gram_(0, 0) = tridecomp::inner(phi1_, phi1_);
  gram_(0, 1) = tridecomp::inner(phi1_, phi2_);
  gram_(1, 0) = std::conj(gram_(0, 1));
  gram_(1, 1) = tridecomp::inner(phi2_, phi2_);
  alpha_ = gram_(1, 0);
  states_distance_ = distance(State(phi1_), State(phi2_));
  if (states_distance_ <= 1e-12) {
    identity_ = true;
    alpha_ = 1.0;
    beta_ = 0.0;
    return;
  }
  beta_ = std::sqrt(std::max(0.0, 1.0 - std::norm(alpha_)));
  if (beta_ < 1e-9) throw ArgumentError("mover: Φ₁ and Φ₂ differ only by a phase");
}

AugmentedVector MoverUnitary::wrap(SumState base) const {
  return AugmentedVector{base.embedded_in(phi1_.space()), 0.0, 0.0};
}

Complex MoverUnitary::project(const SumState& onto, const AugmentedVector& x) const {
  const std::size_t j = (&onto == &phi1_) ? 0 : 1;
  return tridecomp::inner(onto, x.base) + x.c1 * gram_(static_cast<Eigen::Index>(j), 0) +
         x.c2 * gram_(static_cast<Eigen::Index>(j), 1);
}

AugmentedVector MoverUnitary::apply_block(const AugmentedVector& x, const Eigen::Matrix2cd& block) const {
  if (identity_) return x;
  const Complex p1 = project(phi1_, x);
  const Complex q2 = project(phi2_, x);
  // Φ₁⊥ = (ᾱΦ₁ − Φ₂)/β
  const Complex p2 = (alpha_ * p1 - q2) / beta_;
  const Complex t1 = block(0, 0) * p1 + block(0, 1) * p2;
  const Complex t2 = block(1, 0) * p1 + block(1, 1) * p2;
  AugmentedVector out = x;
  out.c1 += t1 + std::conj(alpha_) / beta_ * t2;
  out.c2 += -t2 / beta_;
  return out;
}

AugmentedVector MoverUnitary::apply(const AugmentedVector& x) const {
  Eigen::Matrix2cd d;
  d << alpha_ - 1.0, -beta_, beta_, std::conj(alpha_) - 1.0;
  return apply_block(x, d);
}

AugmentedVector MoverUnitary::apply_adjoint(const AugmentedVector& x) const {
  Eigen::Matrix2cd d;
  d << alpha_ - 1.0, -beta_, beta_, std::conj(alpha_) - 1.0;
  return apply_block(x, d.adjoint());
}

Complex MoverUnitary::inner(const AugmentedVector& x, const AugmentedVector& y) const {
  Complex s = tridecomp::inner(x.base, y.base);
  s += y.c1 * tridecomp::inner(x.base, phi1_) + y.c2 * tridecomp::inner(x.base, phi2_);
  s += std::conj(x.c1) * (tridecomp::inner(phi1_, y.base) + y.c1 * gram_(0, 0) + y.c2 * gram_(0, 1));
  s += std::conj(x.c2) * (tridecomp::inner(phi2_, y.base) + y.c1 * gram_(1, 0) + y.c2 * gram_(1, 1));
  return s;
}

double MoverUnitary::span_distance(const AugmentedVector& x, const AugmentedVector& y) const {
  bool same_base = x.base.term_count() == y.base.term_count();
  for (std::size_t k = 0; same_base && k < x.base.term_count(); ++k)
    same_base = x.base.terms()[k].coeff == y.base.terms()[k].coeff &&
                x.base.terms()[k].factors == y.base.terms()[k].factors;
  if (!same_base) throw ArgumentError("span distance: vectors have different base parts");
  Eigen::Vector2cd v(x.c1 - y.c1, x.c2 - y.c2);
  return std::sqrt(std::max(0.0, (v.adjoint() * gram_ * v)(0, 0).real()));
}

Eigen::Matrix2cd MoverUnitary::correction_matrix() const {
  if (identity_) return Eigen::Matrix2cd::Zero();
  const SumState empty(phi1_.space(), {});
  const std::array<AugmentedVector, 2> e{AugmentedVector{empty, 1.0, 0.0},
                                         AugmentedVector{empty, std::conj(alpha_) / beta_, -1.0 / beta_}};
  Eigen::Matrix2cd m;
  for (std::size_t j = 0; j < 2; ++j) {
    AugmentedVector moved = apply(e[j]);
    moved.c1 -= e[j].c1;
    moved.c2 -= e[j].c2;
    for (std::size_t i = 0; i < 2; ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = inner(e[i], moved);
  }
  return m;
}

double MoverUnitary::correction_trace_norm() const {
  return Eigen::JacobiSVD<Eigen::Matrix2cd>(correction_matrix()).singularValues().sum();
}

Complex TensorStructurePair::relabeled_overlap(std::size_t factor, const SparseVector& psi, const SparseVector& phi,
                                               std::array<std::size_t, 2> aux) const {
  const ProductSpace& space = mover.phi1().space();
  if (space.factor_count() != 3) throw ArgumentError("relabeled overlap needs three factors");
  if (factor >= 3) throw DimensionError("relabeled overlap: factor index out of range");
  auto product = [&](const SparseVector& v) {
    ProductTerm t{1.0, {}};
    std::size_t next = 0;
    for (std::size_t i = 0; i < 3; ++i) t.factors.push_back(i == factor ? v : SparseVector::basis(aux[next++]));
    return SumState(space, {t});
  };
  const AugmentedVector moved = mover.apply_adjoint(mover.apply(mover.wrap(product(phi))));
  return mover.inner(mover.wrap(product(psi)), moved);
}

TensorStructurePair structure_mover(const SumState& phi1, const SumState& phi2, const Tolerances& tol) {
  return TensorStructurePair{MoverUnitary(phi1, phi2, tol)};
}

// ---------------------------------------------------------------------------
// witnesses

DenseState isolation_witness_3(std::size_t n1, std::optional<std::vector<std::size_t>> dims) {
  if (n1 < 1) throw ArgumentError("isolation witness: N₁ must be positive");
  const std::vector<std::size_t> shape = dims ? *dims : std::vector<std::size_t>{std::max<std::size_t>(n1, 2), 2, n1 + 1};
  if (shape.size() != 3) throw DimensionError("isolation witness: three factor dimensions expected");
  if (shape[0] < n1 || shape[1] < 2 || shape[2] < n1 + 1)
    throw DimensionError("isolation witness: need dim H₁ ≥ N₁, dim H₂ ≥ 2, dim H₃ ≥ N₁ + 1");
  const ProductSpace space(shape);
  Vector amps = Vector::Zero(static_cast<Eigen::Index>(space.total_dim()));
  const double c = 1.0 / std::sqrt(static_cast<double>(n1 + 1));
  auto at = [&](std::size_t i1, std::size_t i2, std::size_t i3) {
    return static_cast<Eigen::Index>((i1 * shape[1] + i2) * shape[2] + i3);
  };
  for (std::size_t n = 0; n < n1; ++n) amps[at(n, 0, n)] = c;
  amps[at(0, 1, n1)] = c;
  return DenseState(space, std::move(amps), true);
}

DenseState isolation_witness_4(std::size_t n, std::optional<std::vector<std::size_t>> dims) {
  if (n < 2) throw ArgumentError("isolation witness: N must be at least 2");
  const std::vector<std::size_t> shape = dims ? *dims : std::vector<std::size_t>(4, n);
  if (shape.size() != 4) throw DimensionError("isolation witness: four factor dimensions expected");
  for (std::size_t d : shape)
    if (d < n) throw DimensionError("isolation witness: every factor needs dimension ≥ N");
  const ProductSpace space(shape);
  Vector amps = Vector::Zero(static_cast<Eigen::Index>(space.total_dim()));
  const double c = 1.0 / std::sqrt(static_cast<double>(n + 1));
  auto at = [&](std::size_t i1, std::size_t i2, std::size_t i3, std::size_t i4) {
    return static_cast<Eigen::Index>(((i1 * shape[1] + i2) * shape[2] + i3) * shape[3] + i4);
  };
  for (std::size_t k = 0; k < n; ++k) amps[at(k, k, 0, 0)] = c;
  amps[at(0, 0, 1, 1)] = c;
  return DenseState(space, std::move(amps), true);
}

namespace {
// Unit vector orthogonal to v, from the standard basis vector with least overlap.
Vector orthogonal_direction(const Vector& v) {
  Eigen::Index best = 0;
  v.cwiseAbs().minCoeff(&best);
  Vector e = basis_vector(static_cast<std::size_t>(v.size()), static_cast<std::size_t>(best));
  e -= v.dot(e) * v;
  return e / e.norm();
}
}  // namespace

DenseState isolating_perturbation(const OrderedTriortho& psi, double epsilon, const Tolerances& tol) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ArgumentError("isolating perturbation: ε must lie in (0, 1)");
  const TriDecomposition& d = psi.decomposition;
  if (d.space.factor_count() != 3 || d.terms.empty()) throw ArgumentError("isolating perturbation: need a three-factor decomposition");
  const ProductSpace& space = d.space;
  const double eta = std::sqrt(1.0 - epsilon), eta_p = std::sqrt(epsilon);

  std::vector<std::array<Vector, 3>> comps;
  for (const auto& t : d.terms) {
    std::array<Vector, 3> c;
    for (std::size_t i = 0; i < 3; ++i) c[i] = t.factors[i].to_dense(space.dim(i));
    comps.push_back(std::move(c));
  }
  const Complex a1 = d.terms[0].coeff;

  std::vector<ProductTerm> terms;
  if (d.terms.size() == 1) {
    if (std::abs(std::abs(a1) - 1.0) > tol.norm) throw ArgumentError("isolating perturbation: single-term input must have |a₁| = 1");
    std::array<Vector, 3> second;
    for (std::size_t i = 0; i < 3; ++i) second[i] = orthogonal_direction(comps[0][i]);
    terms.push_back(dense_term(a1 * eta, {comps[0][0], comps[0][1], eta * comps[0][2] + eta_p * second[2]}));
    terms.push_back(dense_term(a1 * eta_p, {second[0], second[1], second[2]}));
  } else {
    if (!(std::abs(a1) < 1.0)) throw ArgumentError("isolating perturbation: case II needs |a₁| < 1");
    terms.push_back(dense_term(a1, {comps[0][0], comps[0][1], eta * comps[0][2] + eta_p * comps[1][2]}));
    for (std::size_t k = 1; k < d.terms.size(); ++k)
      terms.push_back(dense_term(d.terms[k].coeff, {comps[k][0], comps[k][1], comps[k][2]}));
  }
  return DenseState(space, densify(SumState(space, terms)).amplitudes(), true, 1e-9);
}

}  // namespace tridecomp
