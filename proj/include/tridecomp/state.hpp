#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "tridecomp/tolerances.hpp"

namespace tridecomp {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

/// Shape of H_1 ⊗ … ⊗ H_F with F ∈ {2, 3, 4} and every factor of dimension ≥ 2.
class ProductSpace {
 public:
  explicit ProductSpace(std::vector<std::size_t> factor_dims);

  std::size_t factor_count() const noexcept { return dims_.size(); }
  std::size_t dim(std::size_t factor) const;
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }

  // Product of all factor dimensions. Throws CapacityError on overflow.
  std::size_t total_dim() const;
  std::size_t subsystem_dim(std::span<const std::size_t> factors) const;

  // Elementwise maximum of the two shapes; factor counts must match.
  ProductSpace padded_with(const ProductSpace& other) const;

  friend bool operator==(const ProductSpace&, const ProductSpace&) = default;

 private:
  std::vector<std::size_t> dims_;
};

/// Vector stored as sorted (basis index, amplitude) pairs. Used for factor
/// vectors whose ambient dimension is large but whose support is small.
class SparseVector {
 public:
  using Entry = std::pair<std::size_t, Complex>;

  SparseVector() = default;
  explicit SparseVector(std::vector<Entry> entries);

  static SparseVector basis(std::size_t index, Complex value = 1.0);
  static SparseVector from_dense(const Vector& v);

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }
  // One past the largest stored index (0 when empty).
  std::size_t support_end() const noexcept;
  Complex at(std::size_t index) const;

  double norm() const;
  Vector to_dense(std::size_t dim) const;
  SparseVector scaled(Complex factor) const;

  friend bool operator==(const SparseVector&, const SparseVector&) = default;

 private:
  std::vector<Entry> entries_;
};

// ⟨a|b⟩, conjugate-linear in a.
Complex dot(const SparseVector& a, const SparseVector& b);
// ca·a + cb·b
SparseVector combine(Complex ca, const SparseVector& a, Complex cb, const SparseVector& b);

/// coeff · f¹ ⊗ f² ⊗ … with unit factor vectors.
struct ProductTerm {
  Complex coeff{0.0, 0.0};
  std::vector<SparseVector> factors;
};

/// Full amplitude tensor, row-major (last factor varies fastest).
class DenseState {
 public:
  // When `normalized` is set the norm must be 1 within `norm_tol`.
  DenseState(ProductSpace space, Vector amplitudes, bool normalized = false, double norm_tol = 1e-9);

  // Rescales to unit norm and sets the normalized flag. Throws on the zero vector.
  static DenseState wavefunction(ProductSpace space, Vector amplitudes);
  static DenseState product(ProductSpace space, const std::vector<Vector>& factors, Complex coeff = 1.0);

  const ProductSpace& space() const noexcept { return space_; }
  const Vector& amplitudes() const noexcept { return amplitudes_; }
  bool normalized() const noexcept { return normalized_; }

  std::size_t flat_index(std::span<const std::size_t> multi_index) const;
  Complex amplitude(std::span<const std::size_t> multi_index) const;

  // Zero-pads into a larger shape with the same factor count.
  DenseState padded_to(const ProductSpace& target) const;

 private:
  ProductSpace space_;
  Vector amplitudes_;
  bool normalized_ = false;
};

/// Σ_k c_k f¹_k ⊗ f²_k ⊗ …, never materialized densely.
class SumState {
 public:
  SumState(ProductSpace space, std::vector<ProductTerm> terms, double norm_tol = 1e-9);

  const ProductSpace& space() const noexcept { return space_; }
  const std::vector<ProductTerm>& terms() const noexcept { return terms_; }
  std::size_t term_count() const noexcept { return terms_.size(); }

  SumState scaled(Complex factor) const;
  // Combines terms whose factor vectors are identical entry by entry and drops
  // terms with zero coefficient.
  SumState merged() const;
  SumState embedded_in(const ProductSpace& target) const;

 private:
  ProductSpace space_;
  std::vector<ProductTerm> terms_;
};

// ca·a + cb·b on the padded common space.
SumState add(const SumState& a, Complex ca, const SumState& b, Complex cb);

using State = std::variant<DenseState, SumState>;

const ProductSpace& space_of(const State& s);

Complex inner(const DenseState& a, const DenseState& b);
Complex inner(const SumState& a, const SumState& b);
Complex inner(const DenseState& a, const SumState& b);
Complex inner(const SumState& a, const DenseState& b);
Complex inner(const State& a, const State& b);

double norm(const DenseState& s);
double norm(const SumState& s);
double norm(const State& s);

// ‖a − b‖. Densifies when the padded space fits under `ceiling`, which avoids
// the cancellation of the Gram route for nearby states.
double distance(const State& a, const State& b, std::size_t ceiling = kDefaultDenseCeiling);

/// Reduced state on a subset of factors (factor indices refer to the parent space).
class DensityMatrix {
 public:
  DensityMatrix(std::vector<std::size_t> kept_factors, std::vector<std::size_t> kept_dims, Matrix matrix,
                const Tolerances& tol = {});

  const std::vector<std::size_t>& kept_factors() const noexcept { return kept_factors_; }
  const std::vector<std::size_t>& kept_dims() const noexcept { return kept_dims_; }
  const Matrix& matrix() const noexcept { return matrix_; }
  double trace() const noexcept { return trace_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }

 private:
  std::vector<std::size_t> kept_factors_;
  std::vector<std::size_t> kept_dims_;
  Matrix matrix_;
  double trace_ = 0.0;
};

// Unvalidated reduced operators tr_{complement}(|s⟩⟨s|); `keep` must be a
// nonempty proper subset of the factors.
Matrix reduced_operator(const DenseState& s, std::vector<std::size_t> keep);
Matrix reduced_operator(const SumState& s, std::vector<std::size_t> keep, std::size_t ceiling = kDefaultDenseCeiling);
// Amplitudes reshaped as a (kept × rest) matrix, both sides row-major in factor order.
Matrix bipartite_matrix(const DenseState& s, std::vector<std::size_t> keep);
// Partial trace of an arbitrary operator on a space with the given factor dims.
Matrix partial_trace_operator(const Matrix& op, const std::vector<std::size_t>& dims, std::vector<std::size_t> keep);

DensityMatrix partial_trace(const DenseState& s, std::vector<std::size_t> keep, const Tolerances& tol = {});
DensityMatrix partial_trace(const SumState& s, std::vector<std::size_t> keep, const Tolerances& tol = {},
                            std::size_t ceiling = kDefaultDenseCeiling);
DensityMatrix partial_trace(const DensityMatrix& rho, std::vector<std::size_t> keep, const Tolerances& tol = {});
DensityMatrix partial_trace(const State& s, std::vector<std::size_t> keep, const Tolerances& tol = {});

// P_φ on factor `factor`; φ must be a unit vector. The result is subnormalized in general.
DenseState project_factor(const DenseState& s, std::size_t factor, const Vector& phi, const Tolerances& tol = {});
SumState project_factor(const SumState& s, std::size_t factor, const SparseVector& phi, const Tolerances& tol = {});

// Sum of singular values.
double trace_norm(const Matrix& a);

// Normalized standard complex Gaussian; deterministic for a fixed seed.
DenseState haar_random_state(const ProductSpace& space, std::uint64_t seed);

DenseState densify(const SumState& s, std::size_t ceiling = kDefaultDenseCeiling);
// One basis-aligned product term per nonzero amplitude.
SumState sparsify(const DenseState& s);

// |s⟩ as a column vector of the padded dense space.
DenseState to_dense(const State& s, std::size_t ceiling = kDefaultDenseCeiling);

}  // namespace tridecomp
