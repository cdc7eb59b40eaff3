#include "tridecomp/state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "tridecomp/errors.hpp"
#include "tridecomp/random.hpp"

namespace tridecomp {

namespace {

std::vector<std::size_t> row_major_strides(const std::vector<std::size_t>& dims) {
  std::vector<std::size_t> strides(dims.size(), 1);
  for (std::size_t i = dims.size(); i-- > 1;) strides[i - 1] = strides[i] * dims[i];
  return strides;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

// Sorted, deduplicated, nonempty proper subset of {0, …, factor_count-1}.
std::vector<std::size_t> normalize_keep(std::vector<std::size_t> keep, std::size_t factor_count) {
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  if (keep.empty()) throw ArgumentError("partial trace: kept factor set is empty");
  if (keep.back() >= factor_count) throw ArgumentError("partial trace: factor index out of range");
  if (keep.size() == factor_count) throw ArgumentError("partial trace: kept factor set must be a proper subset");
  return keep;
}

std::vector<std::size_t> complement(const std::vector<std::size_t>& keep, std::size_t factor_count) {
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < factor_count; ++i)
    if (!std::binary_search(keep.begin(), keep.end(), i)) rest.push_back(i);
  return rest;
}

// For every flat index of the full space, the flat indices inside the kept and
// traced-out subsystems (each row-major in increasing factor order).
struct SplitIndex {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> rest;
  std::size_t kept_dim = 1;
  std::size_t rest_dim = 1;
};

SplitIndex split_index(const std::vector<std::size_t>& dims, const std::vector<std::size_t>& keep) {
  const auto rest_factors = complement(keep, dims.size());
  std::vector<std::size_t> kstride(dims.size(), 0), rstride(dims.size(), 0);
  SplitIndex out;
  for (std::size_t i = keep.size(); i-- > 0;) {
    kstride[keep[i]] = out.kept_dim;
    out.kept_dim *= dims[keep[i]];
  }
  for (std::size_t i = rest_factors.size(); i-- > 0;) {
    rstride[rest_factors[i]] = out.rest_dim;
    out.rest_dim *= dims[rest_factors[i]];
  }
  const std::size_t total = out.kept_dim * out.rest_dim;
  out.kept.resize(total);
  out.rest.resize(total);
  std::vector<std::size_t> counter(dims.size(), 0);
  std::size_t k = 0, r = 0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    out.kept[flat] = k;
    out.rest[flat] = r;
    for (std::size_t i = dims.size(); i-- > 0;) {
      ++counter[i];
      k += kstride[i];
      r += rstride[i];
      if (counter[i] < dims[i]) break;
      k -= kstride[i] * dims[i];
      r -= rstride[i] * dims[i];
      counter[i] = 0;
    }
  }
  return out;
}

// Σ_idx conj(a[idx]) ∏_i f_i[idx_i]; support outside a's shape contributes zero.
Complex dense_product_overlap(const DenseState& a, const std::vector<SparseVector>& factors) {
  const auto& dims = a.space().dims();
  const auto strides = row_major_strides(dims);
  const auto& amps = a.amplitudes();
  Complex total{0.0, 0.0};
  auto recurse = [&](auto&& self, std::size_t factor, std::size_t offset, Complex weight) -> void {
    if (factor == dims.size()) {
      total += std::conj(amps[static_cast<Eigen::Index>(offset)]) * weight;
      return;
    }
    for (const auto& [idx, val] : factors[factor].entries()) {
      if (idx >= dims[factor]) break;
      self(self, factor + 1, offset + idx * strides[factor], weight * val);
    }
  };
  recurse(recurse, 0, 0, Complex{1.0, 0.0});
  return total;
}

void accumulate_product(Vector& out, const std::vector<std::size_t>& dims, const std::vector<SparseVector>& factors,
                        Complex coeff) {
  const auto strides = row_major_strides(dims);
  auto recurse = [&](auto&& self, std::size_t factor, std::size_t offset, Complex weight) -> void {
    if (factor == dims.size()) {
      out[static_cast<Eigen::Index>(offset)] += weight;
      return;
    }
    for (const auto& [idx, val] : factors[factor].entries()) {
      if (idx >= dims[factor]) throw DimensionError("factor vector support exceeds factor dimension");
      self(self, factor + 1, offset + idx * strides[factor], weight * val);
    }
  };
  recurse(recurse, 0, 0, coeff);
}

// Sparse tensor product of the listed factors, flattened row-major.
std::vector<std::pair<std::size_t, Complex>> kron_sparse(const std::vector<SparseVector>& factors,
                                                         const std::vector<std::size_t>& which,
                                                         const std::vector<std::size_t>& dims, Complex coeff) {
  std::vector<std::pair<std::size_t, Complex>> acc{{0, coeff}};
  for (std::size_t f : which) {
    std::vector<std::pair<std::size_t, Complex>> next;
    next.reserve(acc.size() * factors[f].entries().size());
    for (const auto& [i, a] : acc)
      for (const auto& [j, b] : factors[f].entries()) next.emplace_back(i * dims[f] + j, a * b);
    acc = std::move(next);
  }
  return acc;
}

void check_unit(const SparseVector& v, double tol, const char* what) {
  if (v.empty() || std::abs(v.norm() - 1.0) > tol)
    throw ArgumentError(std::string(what) + ": factor vector is not a unit vector");
}

}  // namespace

// ---------------------------------------------------------------------------
// ProductSpace

ProductSpace::ProductSpace(std::vector<std::size_t> factor_dims) : dims_(std::move(factor_dims)) {
  if (dims_.size() < 2 || dims_.size() > 4)
    throw ArgumentError("product space must have 2, 3 or 4 factors, got " + std::to_string(dims_.size()));
  for (std::size_t d : dims_)
    if (d < 2) throw ArgumentError("every factor dimension must be at least 2");
}

std::size_t ProductSpace::dim(std::size_t factor) const {
  if (factor >= dims_.size()) throw DimensionError("factor index out of range");
  return dims_[factor];
}

std::size_t ProductSpace::total_dim() const {
  std::size_t total = 1;
  for (std::size_t d : dims_) {
    if (total > std::numeric_limits<std::size_t>::max() / d) throw CapacityError("product dimension overflows");
    total *= d;
  }
  return total;
}

std::size_t ProductSpace::subsystem_dim(std::span<const std::size_t> factors) const {
  std::size_t total = 1;
  for (std::size_t f : factors) {
    const std::size_t d = dim(f);
    if (total > std::numeric_limits<std::size_t>::max() / d) throw CapacityError("subsystem dimension overflows");
    total *= d;
  }
  return total;
}

ProductSpace ProductSpace::padded_with(const ProductSpace& other) const {
  if (other.factor_count() != factor_count())
    throw DimensionError("factor counts differ: " + std::to_string(factor_count()) + " vs " +
                         std::to_string(other.factor_count()));
  std::vector<std::size_t> dims(dims_.size());
  for (std::size_t i = 0; i < dims.size(); ++i) dims[i] = std::max(dims_[i], other.dims_[i]);
  return ProductSpace(std::move(dims));
}

// ---------------------------------------------------------------------------
// SparseVector

SparseVector::SparseVector(std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.first < b.first; });
  for (const auto& [idx, val] : entries) {
    if (!std::isfinite(val.real()) || !std::isfinite(val.imag()))
      throw NumericalError("sparse vector entry is not finite");
    if (!entries_.empty() && entries_.back().first == idx)
      entries_.back().second += val;
    else
      entries_.emplace_back(idx, val);
  }
  std::erase_if(entries_, [](const Entry& e) { return e.second == Complex{0.0, 0.0}; });
}

SparseVector SparseVector::basis(std::size_t index, Complex value) { return SparseVector({{index, value}}); }

SparseVector SparseVector::from_dense(const Vector& v) {
  std::vector<Entry> entries;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] != Complex{0.0, 0.0}) entries.emplace_back(static_cast<std::size_t>(i), v[i]);
  return SparseVector(std::move(entries));
}

std::size_t SparseVector::support_end() const noexcept { return entries_.empty() ? 0 : entries_.back().first + 1; }

Complex SparseVector::at(std::size_t index) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                             [](const Entry& e, std::size_t i) { return e.first < i; });
  return (it != entries_.end() && it->first == index) ? it->second : Complex{0.0, 0.0};
}

double SparseVector::norm() const {
  double s = 0.0;
  for (const auto& e : entries_) s += std::norm(e.second);
  return std::sqrt(s);
}

Vector SparseVector::to_dense(std::size_t dim) const {
  if (support_end() > dim) throw DimensionError("sparse vector does not fit the requested dimension");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
  for (const auto& [idx, val] : entries_) v[static_cast<Eigen::Index>(idx)] = val;
  return v;
}

SparseVector SparseVector::scaled(Complex factor) const {
  std::vector<Entry> entries = entries_;
  for (auto& e : entries) e.second *= factor;
  return SparseVector(std::move(entries));
}

Complex dot(const SparseVector& a, const SparseVector& b) {
  Complex s{0.0, 0.0};
  auto ia = a.entries().begin(), ib = b.entries().begin();
  while (ia != a.entries().end() && ib != b.entries().end()) {
    if (ia->first < ib->first)
      ++ia;
    else if (ib->first < ia->first)
      ++ib;
    else {
      s += std::conj(ia->second) * ib->second;
      ++ia;
      ++ib;
    }
  }
  return s;
}

SparseVector combine(Complex ca, const SparseVector& a, Complex cb, const SparseVector& b) {
  std::vector<SparseVector::Entry> entries;
  entries.reserve(a.entries().size() + b.entries().size());
  for (const auto& [i, v] : a.entries()) entries.emplace_back(i, ca * v);
  for (const auto& [i, v] : b.entries()) entries.emplace_back(i, cb * v);
  return SparseVector(std::move(entries));
}

// ---------------------------------------------------------------------------
// DenseState

DenseState::DenseState(ProductSpace space, Vector amplitudes, bool normalized, double norm_tol)
    : space_(std::move(space)), amplitudes_(std::move(amplitudes)), normalized_(normalized) {
  if (static_cast<std::size_t>(amplitudes_.size()) != space_.total_dim())
    throw DimensionError("amplitude count " + std::to_string(amplitudes_.size()) + " does not match product dimension " +
                         std::to_string(space_.total_dim()));
  if (!amplitudes_.allFinite()) throw NumericalError("state amplitudes must be finite");
  if (normalized_ && std::abs(amplitudes_.norm() - 1.0) > norm_tol)
    throw ArgumentError("state flagged normalized but has norm " + std::to_string(amplitudes_.norm()));
}

DenseState DenseState::wavefunction(ProductSpace space, Vector amplitudes) {
  const double n = amplitudes.norm();
  if (!(n > 0.0)) throw ArgumentError("cannot normalize the zero vector");
  amplitudes /= n;
  return DenseState(std::move(space), std::move(amplitudes), true);
}

DenseState DenseState::product(ProductSpace space, const std::vector<Vector>& factors, Complex coeff) {
  if (factors.size() != space.factor_count()) throw DimensionError("product: wrong number of factor vectors");
  Vector acc = Vector::Constant(1, coeff);
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (static_cast<std::size_t>(factors[i].size()) != space.dim(i))
      throw DimensionError("product: factor vector dimension mismatch");
    Vector next(acc.size() * factors[i].size());
    for (Eigen::Index a = 0; a < acc.size(); ++a) next.segment(a * factors[i].size(), factors[i].size()) = acc[a] * factors[i];
    acc = std::move(next);
  }
  const bool unit = std::abs(acc.norm() - 1.0) <= 1e-12;
  return DenseState(std::move(space), std::move(acc), unit);
}

std::size_t DenseState::flat_index(std::span<const std::size_t> multi_index) const {
  if (multi_index.size() != space_.factor_count()) throw DimensionError("multi-index has wrong length");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < multi_index.size(); ++i) {
    if (multi_index[i] >= space_.dim(i)) throw DimensionError("multi-index out of range");
    flat = flat * space_.dim(i) + multi_index[i];
  }
  return flat;
}

Complex DenseState::amplitude(std::span<const std::size_t> multi_index) const {
  return amplitudes_[static_cast<Eigen::Index>(flat_index(multi_index))];
}

DenseState DenseState::padded_to(const ProductSpace& target) const {
  if (target == space_) return *this;
  const ProductSpace check = space_.padded_with(target);
  if (!(check == target)) throw DimensionError("padding target is smaller than the state's space");
  Vector out = Vector::Zero(static_cast<Eigen::Index>(target.total_dim()));
  const auto& dims = space_.dims();
  const auto tstrides = row_major_strides(target.dims());
  std::vector<std::size_t> counter(dims.size(), 0);
  for (Eigen::Index flat = 0; flat < amplitudes_.size(); ++flat) {
    std::size_t t = 0;
    for (std::size_t i = 0; i < dims.size(); ++i) t += counter[i] * tstrides[i];
    out[static_cast<Eigen::Index>(t)] = amplitudes_[flat];
    for (std::size_t i = dims.size(); i-- > 0;) {
      if (++counter[i] < dims[i]) break;
      counter[i] = 0;
    }
  }
  return DenseState(target, std::move(out), normalized_);
}

// ---------------------------------------------------------------------------
// SumState

SumState::SumState(ProductSpace space, std::vector<ProductTerm> terms, double norm_tol)
    : space_(std::move(space)), terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    if (t.factors.size() != space_.factor_count()) throw DimensionError("product term has wrong number of factors");
    if (!std::isfinite(t.coeff.real()) || !std::isfinite(t.coeff.imag()))
      throw NumericalError("product term coefficient is not finite");
    for (std::size_t i = 0; i < t.factors.size(); ++i) {
      if (t.factors[i].support_end() > space_.dim(i))
        throw DimensionError("factor vector support exceeds factor dimension " + std::to_string(space_.dim(i)));
      check_unit(t.factors[i], norm_tol, "sum state");
    }
  }
}

SumState SumState::scaled(Complex factor) const {
  auto terms = terms_;
  for (auto& t : terms) t.coeff *= factor;
  return SumState(space_, std::move(terms));
}

SumState SumState::merged() const {
  std::vector<ProductTerm> out;
  for (const auto& t : terms_) {
    auto it = std::find_if(out.begin(), out.end(), [&](const ProductTerm& u) { return u.factors == t.factors; });
    if (it == out.end())
      out.push_back(t);
    else
      it->coeff += t.coeff;
  }
  std::erase_if(out, [](const ProductTerm& t) { return t.coeff == Complex{0.0, 0.0}; });
  return SumState(space_, std::move(out));
}

SumState SumState::embedded_in(const ProductSpace& target) const {
  if (!(space_.padded_with(target) == target)) throw DimensionError("embedding target is smaller than the state's space");
  return SumState(target, terms_);
}

SumState add(const SumState& a, Complex ca, const SumState& b, Complex cb) {
  const ProductSpace space = a.space().padded_with(b.space());
  std::vector<ProductTerm> terms;
  terms.reserve(a.term_count() + b.term_count());
  for (const auto& t : a.terms()) terms.push_back({ca * t.coeff, t.factors});
  for (const auto& t : b.terms()) terms.push_back({cb * t.coeff, t.factors});
  return SumState(space, std::move(terms));
}

const ProductSpace& space_of(const State& s) {
  return std::visit([](const auto& x) -> const ProductSpace& { return x.space(); }, s);
}

// ---------------------------------------------------------------------------
// inner products and norms

Complex inner(const DenseState& a, const DenseState& b) {
  if (a.space() == b.space()) return a.amplitudes().dot(b.amplitudes());
  const ProductSpace common = a.space().padded_with(b.space());
  return a.padded_to(common).amplitudes().dot(b.padded_to(common).amplitudes());
}

Complex inner(const SumState& a, const SumState& b) {
  if (a.space().factor_count() != b.space().factor_count()) throw DimensionError("inner: factor counts differ");
  Complex total{0.0, 0.0};
  const std::size_t nf = a.space().factor_count();
  for (const auto& s : a.terms()) {
    const Complex cs = std::conj(s.coeff);
    for (const auto& t : b.terms()) {
      Complex w = cs * t.coeff;
      for (std::size_t i = 0; i < nf && w != Complex{0.0, 0.0}; ++i) w *= dot(s.factors[i], t.factors[i]);
      total += w;
    }
  }
  return total;
}

Complex inner(const DenseState& a, const SumState& b) {
  if (a.space().factor_count() != b.space().factor_count()) throw DimensionError("inner: factor counts differ");
  Complex total{0.0, 0.0};
  for (const auto& t : b.terms()) total += t.coeff * dense_product_overlap(a, t.factors);
  return total;
}

Complex inner(const SumState& a, const DenseState& b) { return std::conj(inner(b, a)); }

Complex inner(const State& a, const State& b) {
  return std::visit([](const auto& x, const auto& y) { return inner(x, y); }, a, b);
}

double norm(const DenseState& s) { return s.amplitudes().norm(); }

double norm(const SumState& s) { return std::sqrt(std::max(0.0, inner(s, s).real())); }

double norm(const State& s) {
  return std::visit([](const auto& x) { return norm(x); }, s);
}

double distance(const State& a, const State& b, std::size_t ceiling) {
  const ProductSpace common = space_of(a).padded_with(space_of(b));
  bool fits = false;
  try {
    fits = common.total_dim() <= ceiling;
  } catch (const CapacityError&) {
    fits = false;
  }
  if (fits) {
    const DenseState da = to_dense(a, ceiling).padded_to(common);
    const DenseState db = to_dense(b, ceiling).padded_to(common);
    return (da.amplitudes() - db.amplitudes()).norm();
  }
  auto as_sum = [](const State& s) {
    return std::holds_alternative<SumState>(s) ? std::get<SumState>(s) : sparsify(std::get<DenseState>(s));
  };
  return norm(add(as_sum(a), 1.0, as_sum(b), -1.0).merged());
}

// ---------------------------------------------------------------------------
// density matrices and partial traces

DensityMatrix::DensityMatrix(std::vector<std::size_t> kept_factors, std::vector<std::size_t> kept_dims, Matrix matrix,
                             const Tolerances& tol)
    : kept_factors_(std::move(kept_factors)), kept_dims_(std::move(kept_dims)), matrix_(std::move(matrix)) {
  if (kept_factors_.size() != kept_dims_.size()) throw DimensionError("density matrix: factor/dimension lists differ");
  std::size_t d = 1;
  for (std::size_t k : kept_dims_) d *= k;
  if (matrix_.rows() != matrix_.cols() || static_cast<std::size_t>(matrix_.rows()) != d)
    throw DimensionError("density matrix: shape does not match kept dimensions");
  if (!all_finite(matrix_)) throw NumericalError("density matrix: non-finite entries");
  const double asym = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
  if (asym > tol.herm) throw NumericalError("density matrix: not Hermitian (deviation " + std::to_string(asym) + ")");
  trace_ = matrix_.trace().real();
  if (!(trace_ > 0.0) || trace_ > 1.0 + tol.norm)
    throw NumericalError("density matrix: trace " + std::to_string(trace_) + " outside (0, 1]");
  Eigen::SelfAdjointEigenSolver<Matrix> es(matrix_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol.psd)
    throw NumericalError("density matrix: negative eigenvalue " + std::to_string(es.eigenvalues().minCoeff()));
}

Matrix bipartite_matrix(const DenseState& s, std::vector<std::size_t> keep) {
  const auto& dims = s.space().dims();
  keep = normalize_keep(std::move(keep), dims.size());
  const SplitIndex split = split_index(dims, keep);
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(split.kept_dim), static_cast<Eigen::Index>(split.rest_dim));
  const auto& amps = s.amplitudes();
  for (std::size_t flat = 0; flat < split.kept.size(); ++flat)
    m(static_cast<Eigen::Index>(split.kept[flat]), static_cast<Eigen::Index>(split.rest[flat])) =
        amps[static_cast<Eigen::Index>(flat)];
  return m;
}

Matrix reduced_operator(const DenseState& s, std::vector<std::size_t> keep) {
  const Matrix m = bipartite_matrix(s, std::move(keep));
  return m * m.adjoint();
}

Matrix reduced_operator(const SumState& s, std::vector<std::size_t> keep, std::size_t ceiling) {
  const auto& dims = s.space().dims();
  keep = normalize_keep(std::move(keep), dims.size());
  const auto rest = complement(keep, dims.size());
  const std::size_t d = s.space().subsystem_dim(keep);
  if (d > ceiling / d) throw CapacityError("reduced operator of dimension " + std::to_string(d) + " exceeds ceiling");
  const auto& terms = s.terms();
  std::vector<std::vector<std::pair<std::size_t, Complex>>> kept_vectors;
  kept_vectors.reserve(terms.size());
  for (const auto& t : terms) kept_vectors.push_back(kron_sparse(t.factors, keep, dims, t.coeff));
  Matrix rho = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < terms.size(); ++k) {
    for (std::size_t l = 0; l < terms.size(); ++l) {
      // tr_rest |f_k⟩⟨f_l| = ∏ ⟨f_l|f_k⟩ over traced factors
      Complex w{1.0, 0.0};
      for (std::size_t i : rest) {
        w *= dot(terms[l].factors[i], terms[k].factors[i]);
        if (w == Complex{0.0, 0.0}) break;
      }
      if (w == Complex{0.0, 0.0}) continue;
      for (const auto& [a, xa] : kept_vectors[k])
        for (const auto& [b, xb] : kept_vectors[l])
          rho(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += w * xa * std::conj(xb);
    }
  }
  return rho;
}

Matrix partial_trace_operator(const Matrix& op, const std::vector<std::size_t>& dims, std::vector<std::size_t> keep) {
  keep = normalize_keep(std::move(keep), dims.size());
  const SplitIndex split = split_index(dims, keep);
  if (op.rows() != op.cols() || static_cast<std::size_t>(op.rows()) != split.kept.size())
    throw DimensionError("partial trace: operator shape does not match factor dimensions");
  // full index of (kept, rest)
  std::vector<std::size_t> full(split.kept.size());
  for (std::size_t flat = 0; flat < full.size(); ++flat) full[split.kept[flat] * split.rest_dim + split.rest[flat]] = flat;
  const auto kd = static_cast<Eigen::Index>(split.kept_dim);
  Matrix out = Matrix::Zero(kd, kd);
  for (std::size_t a = 0; a < split.kept_dim; ++a)
    for (std::size_t b = 0; b < split.kept_dim; ++b) {
      Complex s{0.0, 0.0};
      for (std::size_t r = 0; r < split.rest_dim; ++r)
        s += op(static_cast<Eigen::Index>(full[a * split.rest_dim + r]),
                static_cast<Eigen::Index>(full[b * split.rest_dim + r]));
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = s;
    }
  return out;
}

namespace {
std::vector<std::size_t> kept_dims_of(const ProductSpace& space, const std::vector<std::size_t>& keep) {
  std::vector<std::size_t> out;
  for (std::size_t f : keep) out.push_back(space.dim(f));
  return out;
}
}  // namespace

DensityMatrix partial_trace(const DenseState& s, std::vector<std::size_t> keep, const Tolerances& tol) {
  keep = normalize_keep(std::move(keep), s.space().factor_count());
  Matrix rho = reduced_operator(s, keep);
  return DensityMatrix(keep, kept_dims_of(s.space(), keep), std::move(rho), tol);
}

DensityMatrix partial_trace(const SumState& s, std::vector<std::size_t> keep, const Tolerances& tol, std::size_t ceiling) {
  keep = normalize_keep(std::move(keep), s.space().factor_count());
  Matrix rho = reduced_operator(s, keep, ceiling);
  return DensityMatrix(keep, kept_dims_of(s.space(), keep), std::move(rho), tol);
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::vector<std::size_t> keep, const Tolerances& tol) {
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  const auto& parent = rho.kept_factors();
  std::vector<std::size_t> local;
  for (std::size_t f : keep) {
    auto it = std::find(parent.begin(), parent.end(), f);
    if (it == parent.end()) throw ArgumentError("partial trace: factor " + std::to_string(f) + " already traced out");
    local.push_back(static_cast<std::size_t>(it - parent.begin()));
  }
  Matrix reduced = partial_trace_operator(rho.matrix(), rho.kept_dims(), local);
  std::vector<std::size_t> dims;
  for (std::size_t l : local) dims.push_back(rho.kept_dims()[l]);
  return DensityMatrix(keep, std::move(dims), std::move(reduced), tol);
}

DensityMatrix partial_trace(const State& s, std::vector<std::size_t> keep, const Tolerances& tol) {
  return std::visit([&](const auto& x) { return partial_trace(x, keep, tol); }, s);
}

// ---------------------------------------------------------------------------
// projections

DenseState project_factor(const DenseState& s, std::size_t factor, const Vector& phi, const Tolerances& tol) {
  const auto& dims = s.space().dims();
  if (factor >= dims.size()) throw DimensionError("projection: factor index out of range");
  if (static_cast<std::size_t>(phi.size()) != dims[factor]) throw DimensionError("projection: vector dimension mismatch");
  if (std::abs(phi.norm() - 1.0) > tol.norm) throw ArgumentError("projection: target vector is not a unit vector");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (i != factor) keep.push_back(i);
  const SplitIndex split = split_index(dims, keep);
  // split.rest is the index along `factor`
  Vector contracted = Vector::Zero(static_cast<Eigen::Index>(split.kept_dim));
  const auto& amps = s.amplitudes();
  for (std::size_t flat = 0; flat < split.kept.size(); ++flat)
    contracted[static_cast<Eigen::Index>(split.kept[flat])] +=
        std::conj(phi[static_cast<Eigen::Index>(split.rest[flat])]) * amps[static_cast<Eigen::Index>(flat)];
  Vector out(amps.size());
  for (std::size_t flat = 0; flat < split.kept.size(); ++flat)
    out[static_cast<Eigen::Index>(flat)] =
        phi[static_cast<Eigen::Index>(split.rest[flat])] * contracted[static_cast<Eigen::Index>(split.kept[flat])];
  return DenseState(s.space(), std::move(out), false);
}

SumState project_factor(const SumState& s, std::size_t factor, const SparseVector& phi, const Tolerances& tol) {
  if (factor >= s.space().factor_count()) throw DimensionError("projection: factor index out of range");
  if (phi.support_end() > s.space().dim(factor)) throw DimensionError("projection: vector dimension mismatch");
  check_unit(phi, tol.norm, "projection");
  std::vector<ProductTerm> terms;
  for (const auto& t : s.terms()) {
    const Complex c = t.coeff * dot(phi, t.factors[factor]);
    if (c == Complex{0.0, 0.0}) continue;
    ProductTerm p{c, t.factors};
    p.factors[factor] = phi;
    terms.push_back(std::move(p));
  }
  return SumState(s.space(), std::move(terms));
}

// ---------------------------------------------------------------------------

double trace_norm(const Matrix& a) {
  if (!a.allFinite()) throw NumericalError("trace norm: non-finite entries");
  if (a.size() == 0) return 0.0;
  if (a.rows() <= 64 && a.cols() <= 64) {
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues().sum();
  }
  Eigen::BDCSVD<Matrix> svd(a);
  return svd.singularValues().sum();
}

DenseState haar_random_state(const ProductSpace& space, std::uint64_t seed) {
  Rng rng(seed);
  return DenseState::wavefunction(space, random_gaussian_vector(space.total_dim(), rng));
}

DenseState densify(const SumState& s, std::size_t ceiling) {
  const std::size_t total = s.space().total_dim();
  if (total > ceiling)
    throw CapacityError("densify: " + std::to_string(total) + " amplitudes exceed ceiling " + std::to_string(ceiling));
  Vector out = Vector::Zero(static_cast<Eigen::Index>(total));
  for (const auto& t : s.terms()) accumulate_product(out, s.space().dims(), t.factors, t.coeff);
  return DenseState(s.space(), std::move(out), false);
}

SumState sparsify(const DenseState& s) {
  const auto& dims = s.space().dims();
  std::vector<ProductTerm> terms;
  std::vector<std::size_t> counter(dims.size(), 0);
  const auto& amps = s.amplitudes();
  for (Eigen::Index flat = 0; flat < amps.size(); ++flat) {
    if (amps[flat] != Complex{0.0, 0.0}) {
      ProductTerm t{amps[flat], {}};
      for (std::size_t i = 0; i < dims.size(); ++i) t.factors.push_back(SparseVector::basis(counter[i]));
      terms.push_back(std::move(t));
    }
    for (std::size_t i = dims.size(); i-- > 0;) {
      if (++counter[i] < dims[i]) break;
      counter[i] = 0;
    }
  }
  return SumState(s.space(), std::move(terms));
}

DenseState to_dense(const State& s, std::size_t ceiling) {
  if (const auto* d = std::get_if<DenseState>(&s)) return *d;
  return densify(std::get<SumState>(s), ceiling);
}

}  // namespace tridecomp
