#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "tridecomp/state.hpp"

namespace tridecomp {

using Rng = std::mt19937_64;

// Independent stream for trial `stream` of a campaign seeded with `seed` (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

Vector random_gaussian_vector(std::size_t n, Rng& rng);
Vector random_unit_vector(std::size_t n, Rng& rng);
Complex random_phase(Rng& rng);

// Haar unitary via QR of a Ginibre matrix with the diagonal phase fix.
Matrix random_unitary(std::size_t n, Rng& rng);
// First k columns of a Haar unitary.
Matrix random_orthonormal_columns(std::size_t n, std::size_t k, Rng& rng);
// GUE-like Hermitian matrix scaled to unit operator norm.
Matrix random_hermitian(std::size_t n, Rng& rng);
// exp(i t H) for Hermitian H.
Matrix unitary_from_generator(const Matrix& hermitian, double t);
// Positive operator of the given rank and trace.
Matrix random_positive_operator(std::size_t n, std::size_t rank, double trace, Rng& rng);
// Orthogonal projection onto a random subspace of the given rank.
Matrix random_projection(std::size_t n, std::size_t rank, Rng& rng);

}  // namespace tridecomp
