#include "tridecomp/random.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "tridecomp/errors.hpp"

namespace tridecomp {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + (stream + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Vector random_gaussian_vector(std::size_t n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double re = g(rng);
    const double im = g(rng);
    v[i] = Complex(re, im);
  }
  return v;
}

Vector random_unit_vector(std::size_t n, Rng& rng) {
  Vector v = random_gaussian_vector(n, rng);
  return v / v.norm();
}

Complex random_phase(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * M_PI);
  return std::polar(1.0, u(rng));
}

Matrix random_unitary(std::size_t n, Rng& rng) {
  const auto m = static_cast<Eigen::Index>(n);
  Matrix z(m, m);
  for (Eigen::Index c = 0; c < m; ++c) z.col(c) = random_gaussian_vector(n, rng);
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ() * Matrix::Identity(m, m);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < m; ++i) {
    const double a = std::abs(r(i, i));
    if (a > 0.0) q.col(i) *= r(i, i) / a;
  }
  return q;
}

Matrix random_orthonormal_columns(std::size_t n, std::size_t k, Rng& rng) {
  if (k > n) throw ArgumentError("cannot draw more orthonormal columns than the dimension");
  return random_unitary(n, rng).leftCols(static_cast<Eigen::Index>(k));
}

Matrix random_hermitian(std::size_t n, Rng& rng) {
  const auto m = static_cast<Eigen::Index>(n);
  Matrix z(m, m);
  for (Eigen::Index c = 0; c < m; ++c) z.col(c) = random_gaussian_vector(n, rng);
  Matrix h = 0.5 * (z + z.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  return scale > 0.0 ? Matrix(h / scale) : h;
}

Matrix unitary_from_generator(const Matrix& hermitian, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian);
  const Vector phases = (Complex(0.0, t) * es.eigenvalues().cast<Complex>()).array().exp().matrix();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix random_positive_operator(std::size_t n, std::size_t rank, double trace, Rng& rng) {
  if (rank == 0 || rank > n) throw ArgumentError("positive operator rank must lie in [1, n]");
  const auto m = static_cast<Eigen::Index>(n);
  Matrix g(m, static_cast<Eigen::Index>(rank));
  for (Eigen::Index c = 0; c < g.cols(); ++c) g.col(c) = random_gaussian_vector(n, rng);
  Matrix p = g * g.adjoint();
  p = 0.5 * (p + p.adjoint());
  return p * (trace / p.trace().real());
}

Matrix random_projection(std::size_t n, std::size_t rank, Rng& rng) {
  const Matrix v = random_orthonormal_columns(n, rank, rng);
  return v * v.adjoint();
}

}  // namespace tridecomp
