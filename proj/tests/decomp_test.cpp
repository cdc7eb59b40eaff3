#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "tridecomp/constructions.hpp"
#include "tridecomp/decomp.hpp"
#include "tridecomp/errors.hpp"
#include "tridecomp/experiments.hpp"
#include "tridecomp/random.hpp"

using namespace tridecomp;

namespace {

Vector e(std::size_t n, std::size_t i) { return Vector::Unit(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)); }

ProductTerm term(Complex c, const std::vector<Vector>& fs) {
  ProductTerm t{c, {}};
  for (const auto& f : fs) t.factors.push_back(SparseVector::from_dense(f));
  return t;
}

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

SumState singlet23() {
  // (1/√2)(e0 e0 e1 − e0 e1 e0): factor 1 is a product, factors 2,3 form a singlet.
  return SumState(ProductSpace({2, 2, 2}), {term(kInvSqrt2, {e(2, 0), e(2, 0), e(2, 1)}), term(-kInvSqrt2, {e(2, 0), e(2, 1), e(2, 0)})});
}

TriDecomposition rephased_and_permuted(const TriDecomposition& d, Rng& rng) {
  TriDecomposition out = d;
  for (auto& t : out.terms)
    for (auto& f : t.factors) {
      const Complex ph = random_phase(rng);
      f = f.scaled(ph);
      t.coeff /= ph;
    }
  std::reverse(out.terms.begin(), out.terms.end());
  return out;
}

}  // namespace

TEST(Schmidt, ProductStateHasOneCoefficient) {
  const DenseState s = DenseState::product(ProductSpace({2, 3, 2}), {e(2, 1), e(3, 0), e(2, 1)});
  const SchmidtDecomposition sd = schmidt(s, {0});
  ASSERT_EQ(sd.rank(), 1u);
  EXPECT_NEAR(sd.coefficients[0], 1.0, 1e-12);
}

TEST(Schmidt, SingletHasEqualCoefficients) {
  const SchmidtDecomposition sd = schmidt(singlet23(), {0, 1});
  ASSERT_EQ(sd.rank(), 2u);
  EXPECT_NEAR(sd.coefficients[0], kInvSqrt2, 1e-12);
  EXPECT_NEAR(sd.coefficients[1], kInvSqrt2, 1e-12);
  EXPECT_EQ(schmidt_rank(singlet23(), {1}, 1e-10), 2u);
  EXPECT_EQ(schmidt_rank(singlet23(), {0}, 1e-10), 1u);
}

TEST(Schmidt, SquaredCoefficientsMatchReducedSpectrum) {
  const ProductSpace sp({3, 2, 4});
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const DenseState psi = haar_random_state(sp, seed);
    for (const auto& left : std::vector<std::vector<std::size_t>>{{0}, {1}, {0, 2}}) {
      const SchmidtDecomposition sd = schmidt(psi, left);
      const Spectrum spec = spectrum(partial_trace(psi, left));
      for (std::size_t k = 0; k < sd.rank(); ++k) EXPECT_NEAR(sd.coefficients[k] * sd.coefficients[k], spec.values[k], 1e-10);
    }
  }
}

TEST(Schmidt, ReconstructionAndOrthonormality) {
  const ProductSpace sp({3, 3, 2});
  for (std::uint64_t seed = 20; seed < 40; ++seed) {
    const DenseState psi = haar_random_state(sp, seed);
    const SchmidtDecomposition sd = schmidt(psi, {1});
    EXPECT_NEAR((sd.reconstruct() - bipartite_matrix(psi, {1})).norm(), 0.0, 1e-8);
    const Eigen::Index r = static_cast<Eigen::Index>(sd.rank());
    EXPECT_NEAR((sd.left.adjoint() * sd.left - Matrix::Identity(r, r)).norm(), 0.0, 1e-9);
    EXPECT_NEAR((sd.right.adjoint() * sd.right - Matrix::Identity(r, r)).norm(), 0.0, 1e-9);
    EXPECT_NEAR(sd.coefficients.squaredNorm(), 1.0, 1e-9);
  }
}

TEST(Schmidt, DeterministicUnderDegeneracy) {
  const SchmidtDecomposition a = schmidt(singlet23(), {1}), b = schmidt(singlet23(), {1});
  EXPECT_EQ(a.left, b.left);
  EXPECT_EQ(a.right, b.right);
}

TEST(Schmidt, ZeroStateRejected) {
  const DenseState z(ProductSpace({2, 2}), Vector::Zero(4));
  EXPECT_THROW(schmidt(z, {0}), std::exception);
}

TEST(LinearIndependence, OrthonormalSetHasUnitSingularValue) {
  const auto c = linear_independence(std::vector<Vector>{e(3, 0), e(3, 1), e(3, 2)}, 1e-8);
  EXPECT_NEAR(c.min_singular_value, 1.0, 1e-12);
  EXPECT_TRUE(c.independent);
}

TEST(LinearIndependence, RotatedPairIndependentIffSineNonzero) {
  for (double theta : {0.0, 0.3, std::numbers::pi / 2, std::numbers::pi}) {
    const Vector v = -std::cos(theta) * e(2, 0) - std::sin(theta) * e(2, 1);
    const auto c = linear_independence(std::vector<Vector>{e(2, 0), v}, 1e-8);
    // Gram [[1, −cos], [−cos, 1]] has eigenvalues 1 ± |cos|.
    EXPECT_NEAR(c.min_singular_value, std::sqrt(1.0 - std::abs(std::cos(theta))), 1e-7);
    EXPECT_EQ(c.independent, std::abs(std::sin(theta)) > 1e-8);
  }
}

TEST(LinearIndependence, DuplicateAndOversizedSets) {
  const auto dup = linear_independence(std::vector<Vector>{e(3, 1), e(3, 1)}, 1e-8);
  EXPECT_NEAR(dup.min_singular_value, 0.0, 1e-12);
  EXPECT_FALSE(dup.independent);
  const auto big = linear_independence(std::vector<Vector>{e(2, 0), e(2, 1), e(2, 0)}, 1e-8);
  EXPECT_EQ(big.min_singular_value, 0.0);
  EXPECT_FALSE(big.independent);
}

TEST(VerifyTridecomposition, RotatedSingletExpansionPasses) {
  const SingletFamily ex = singlet_family(std::numbers::pi / 4);
  const auto cert = verify_tridecomposition(ex.phi_decomposition, State(ex.phi_theta));
  EXPECT_TRUE(cert.passed) << cert.failed_condition;
  EXPECT_LT(cert.reconstruction_error, 1e-12);
}

TEST(VerifyTridecomposition, CollinearAtZeroAngleFails) {
  const SingletFamily ex = singlet_family(std::numbers::pi / 4);
  TriDecomposition d = ex.phi_decomposition;
  d.terms[1].factors[0] = SparseVector::from_dense(-e(2, 0));
  const auto cert = verify_tridecomposition(d, State(d.to_sum_state()));
  EXPECT_FALSE(cert.passed);
  EXPECT_FALSE(cert.failed_condition.empty());
  EXPECT_LT(cert.min_singular_values[0], 1e-8);
}

TEST(VerifyTridecomposition, RandomOrthonormalConstructionPasses) {
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const auto mags = random_separated_magnitudes(3, 0.05, rng);
    const TriDecomposition d = random_triorthogonal({4, 3, 5}, mags, rng);
    const auto cert = verify_tridecomposition(d, State(d.to_sum_state()));
    EXPECT_TRUE(cert.passed) << cert.failed_condition;
    EXPECT_EQ(cert.variant, Variant::Orthonormal);
  }
}

TEST(VerifyTridecomposition, ReconstructionFailureIsNamed) {
  const SingletFamily ex = singlet_family(0.5);
  const auto cert = verify_tridecomposition(ex.phi_decomposition, State(ex.psi_theta));
  EXPECT_FALSE(cert.passed);
  EXPECT_NE(cert.failed_condition.find("reconstruction"), std::string::npos);
}

TEST(VerifyTridecomposition, PerturbingAComponentBreaksReconstruction) {
  Rng rng(4);
  const TriDecomposition d = random_triorthogonal({3, 3, 3}, {std::sqrt(0.6), std::sqrt(0.4)}, rng);
  const SumState target = d.to_sum_state();
  TriDecomposition moved = d;
  const Vector f = moved.terms[0].factors[1].to_dense(3);
  const Vector g = (f + 1e-6 * random_unit_vector(3, rng)).normalized();
  moved.terms[0].factors[1] = SparseVector::from_dense(g);
  EXPECT_FALSE(verify_tridecomposition(moved, State(target)).passed);
}

TEST(VerifyTridecomposition, TwoFactorVariantRejectsCollinearThirdPair) {
  const ProductSpace sp({2, 2, 2});
  TriDecomposition d{sp, {term(0.8, {e(2, 0), e(2, 0), e(2, 0)}), term(0.6, {e(2, 1), e(2, 1), e(2, 0)})}, Variant::LiTwoFactors};
  const auto cert = verify_tridecomposition(d, State(d.to_sum_state()));
  EXPECT_FALSE(cert.passed);
  d.terms[1].factors[2] = SparseVector::from_dense((e(2, 0) + e(2, 1)).normalized());
  EXPECT_TRUE(verify_tridecomposition(d, State(d.to_sum_state())).passed);
}

TEST(ExtractTriortho, RecoversTwoTermConstruction) {
  Rng rng(5);
  const TriDecomposition d = random_triorthogonal({3, 4, 3}, {std::sqrt(0.64), std::sqrt(0.36)}, rng);
  const ExtractionResult r = extract_triortho(d.to_sum_state());
  ASSERT_EQ(r.status, ExtractionStatus::Triorthogonal) << r.reason;
  const auto& out = r.decomposition->decomposition;
  EXPECT_NEAR(std::abs(out.terms[0].coeff), 0.8, 1e-10);
  EXPECT_NEAR(std::abs(out.terms[1].coeff), 0.6, 1e-10);
  EXPECT_TRUE(decompositions_equivalent(out, d, 1e-8));
}

TEST(ExtractTriortho, SingletFamilyLimitIsNotTriorthogonal) {
  const ExtractionResult r = extract_triortho(singlet_family(0.3).psi);
  EXPECT_EQ(r.status, ExtractionStatus::NotTriorthogonal);
  EXPECT_FALSE(r.decomposition.has_value());
}

TEST(ExtractTriortho, ProductStateGivesOneTerm) {
  Rng rng(6);
  const DenseState s = DenseState::product(ProductSpace({3, 2, 3}), {random_unit_vector(3, rng), random_unit_vector(2, rng), random_unit_vector(3, rng)});
  const ExtractionResult r = extract_triortho(s);
  ASSERT_EQ(r.status, ExtractionStatus::Triorthogonal);
  ASSERT_EQ(r.decomposition->decomposition.size(), 1u);
  EXPECT_NEAR(std::abs(r.decomposition->decomposition.terms[0].coeff), 1.0, 1e-12);
}

TEST(ExtractTriortho, RoundTripOnRandomConstructions) {
  Rng rng(7);
  std::uniform_int_distribution<std::size_t> kd(1, 6);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t k = kd(rng);
    std::vector<std::size_t> dims(3);
    for (auto& d : dims) d = std::uniform_int_distribution<std::size_t>(std::max<std::size_t>(k, 2), 8)(rng);
    const auto mags = random_separated_magnitudes(k, 0.02, rng);
    const TriDecomposition d = random_triorthogonal(dims, mags, rng);
    const ExtractionResult r = extract_triortho(d.to_sum_state());
    ASSERT_EQ(r.status, ExtractionStatus::Triorthogonal) << r.reason;
    EXPECT_TRUE(decompositions_equivalent(r.decomposition->decomposition, d, 1e-8));
    // Reduced spectra equal the squared magnitudes.
    const DenseState psi = densify(d.to_sum_state());
    for (std::size_t i = 0; i < 3; ++i) {
      const Spectrum sp = spectrum(partial_trace(psi, {i}));
      for (std::size_t n = 0; n < k; ++n) EXPECT_NEAR(sp.values[n], mags[n] * mags[n], 1e-9);
    }
  }
}

TEST(ExtractTriortho, DegenerateBlockIsResolved) {
  Rng rng(8);
  const double m = std::sqrt(0.3);
  const TriDecomposition d = random_triorthogonal({3, 3, 3}, {std::sqrt(0.4), m, m}, rng);
  const ExtractionResult r = extract_triortho(d.to_sum_state());
  ASSERT_EQ(r.status, ExtractionStatus::Triorthogonal) << r.reason;
  EXPECT_EQ(r.decomposition->block_count(), 2u);
  EXPECT_TRUE(decompositions_equivalent(r.decomposition->decomposition, d, 1e-8));
}

TEST(CanonicalPhase, IdempotentAndGaugeInvariant) {
  Rng rng(9);
  const TriDecomposition d = random_triorthogonal({3, 3, 3}, {std::sqrt(0.5), std::sqrt(0.3), std::sqrt(0.2)}, rng);
  const TriDecomposition c1 = canonical_phase(d);
  const TriDecomposition c2 = canonical_phase(c1);
  for (std::size_t k = 0; k < d.size(); ++k) {
    EXPECT_NEAR(std::abs(c1.terms[k].coeff - c2.terms[k].coeff), 0.0, 1e-14);
    for (std::size_t i = 0; i < 3; ++i)
      EXPECT_NEAR((c1.terms[k].factors[i].to_dense(3) - c2.terms[k].factors[i].to_dense(3)).norm(), 0.0, 1e-14);
  }
  TriDecomposition g = d;
  for (auto& t : g.terms) {
    const Complex ph = random_phase(rng);
    t.factors[1] = t.factors[1].scaled(ph);
    t.coeff /= ph;
  }
  const TriDecomposition cg = canonical_phase(g);
  for (std::size_t k = 0; k < d.size(); ++k) {
    EXPECT_NEAR(std::abs(c1.terms[k].coeff - cg.terms[k].coeff), 0.0, 1e-12);
    for (std::size_t i = 0; i < 3; ++i)
      EXPECT_NEAR((c1.terms[k].factors[i].to_dense(3) - cg.terms[k].factors[i].to_dense(3)).norm(), 0.0, 1e-12);
  }
}

TEST(CanonicalPhase, TermTensorsUnchanged) {
  Rng rng(10);
  const TriDecomposition d = random_triorthogonal({4, 3, 3}, {std::sqrt(0.7), std::sqrt(0.3)}, rng);
  const TriDecomposition c = canonical_phase(d);
  for (std::size_t k = 0; k < d.size(); ++k) EXPECT_LT(term_distance(d.terms[k], c.terms[k]), 1e-12);
  EXPECT_NEAR((densify(d.to_sum_state()).amplitudes() - densify(c.to_sum_state()).amplitudes()).norm(), 0.0, 1e-12);
}

TEST(CanonicalPhase, ReferenceMakesOverlapsNonNegative) {
  Rng rng(11);
  const TriDecomposition ref = random_triorthogonal({3, 3, 3}, {std::sqrt(0.6), std::sqrt(0.4)}, rng);
  const TriDecomposition moved = rephased_and_permuted(ref, rng);
  TriDecomposition same_order = moved;
  std::reverse(same_order.terms.begin(), same_order.terms.end());
  const TriDecomposition c = canonical_phase(same_order, &ref);
  for (std::size_t k = 0; k < c.size(); ++k)
    for (std::size_t i = 0; i < 3; ++i) {
      const Complex ov = dot(c.terms[k].factors[i], ref.terms[k].factors[i]);
      EXPECT_GE(ov.real(), -1e-12);
      EXPECT_NEAR(ov.imag(), 0.0, 1e-12);
    }
}

TEST(DecompositionsEquivalent, PermutedAndRephasedIsEquivalent) {
  Rng rng(12);
  const TriDecomposition d = random_triorthogonal({3, 3, 4}, {std::sqrt(0.5), std::sqrt(0.3), std::sqrt(0.2)}, rng);
  EXPECT_TRUE(decompositions_equivalent(d, rephased_and_permuted(d, rng), 1e-10));
}

TEST(DecompositionsEquivalent, SingletFamilyExpansionsDiffer) {
  const SingletFamily ex = singlet_family(std::numbers::pi / 4);
  EXPECT_FALSE(decompositions_equivalent(ex.phi_decomposition, ex.psi_decomposition, 1e-6));
}

TEST(DecompositionsEquivalent, CoefficientShiftDetected) {
  Rng rng(13);
  const double tol = 1e-8;
  const TriDecomposition d = random_triorthogonal({3, 3, 3}, {std::sqrt(0.6), std::sqrt(0.4)}, rng);
  TriDecomposition c = d;
  c.terms[1].coeff *= 1.0 + 10.0 * tol / std::abs(c.terms[1].coeff);
  EXPECT_FALSE(decompositions_equivalent(d, c, tol));
}

TEST(DecompositionsEquivalent, UniquenessOfVerifiedDecompositions) {
  // A second expansion written out by hand, with other phases and order, against a hand-built dense target.
  const double theta = 0.7;
  const SingletFamily ex = singlet_family(theta);
  const double r = kInvSqrt2;
  const Vector a = (e(2, 0) - e(2, 1)) * r, b = (e(2, 0) + e(2, 1)) * r;
  const Vector f2 = -std::cos(theta) * e(2, 0) - std::sin(theta) * e(2, 1);
  const TriDecomposition other{ProductSpace({2, 2, 2}),
                               {term(Complex(0.0, r), {f2, Complex(0.0, -1.0) * b, a}), term(-r, {e(2, 0), -a, b})},
                               Variant::LiAll};
  Vector target = Vector::Zero(8);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        target[4 * i + 2 * j + k] = r * (e(2, 0)[i] * a[j] * b[k] + f2[i] * b[j] * a[k]);
  const State dense_target(DenseState(ProductSpace({2, 2, 2}), target));
  ASSERT_TRUE(verify_tridecomposition(other, dense_target).passed);
  ASSERT_TRUE(verify_tridecomposition(ex.phi_decomposition, dense_target).passed);
  EXPECT_TRUE(decompositions_equivalent(other, ex.phi_decomposition, 1e-10));
}

TEST(MaxWeightAssignment, FindsOptimalPermutation) {
  Eigen::MatrixXd w(3, 3);
  w << 1, 9, 2, 8, 7, 1, 3, 2, 6;
  const auto p = max_weight_assignment(w);
  EXPECT_EQ(p, (std::vector<std::size_t>{1, 0, 2}));
}

TEST(MatchSingleProduct, IdenticalStatesMatchExactly) {
  Rng rng(14);
  const Vector u = random_unit_vector(3, rng), v = random_unit_vector(3, rng);
  const SingleProductReport r = match_single_product({1.0, u, v}, {{1.0, u, v}}, 0.3, 0.01);
  EXPECT_EQ(r.match, 0u);
  EXPECT_NEAR(r.coefficient_gap, 0.0, 1e-12);
  EXPECT_NEAR(r.reduced_trace_distance, 0.0, 1e-12);
  EXPECT_TRUE(r.holds());
}

TEST(MatchSingleProduct, SmallOrthogonalAdmixture) {
  const double eps = 0.3;
  const double eps_p = 0.99 * std::pow(eps / 3.0, 2);
  const double delta = 0.5 * eps_p;  // keeps ‖Ψ − Φ‖ < ε′
  const Vector u0 = e(3, 0), u1 = e(3, 1);
  const SingleProductReport r =
      match_single_product({1.0, u0, u0}, {{std::sqrt(1.0 - delta * delta), u0, u0}, {delta, u1, u1}}, eps, eps_p);
  EXPECT_EQ(r.match, 0u);
  EXPECT_TRUE(r.first_holds);
  EXPECT_TRUE(r.second_applicable);
  EXPECT_TRUE(r.second_holds);
  // Closed forms: the match shares the components exactly.
  EXPECT_NEAR(r.overlap_first, 1.0, 1e-12);
  EXPECT_NEAR(r.coefficient_gap, delta * delta, 1e-12);
  EXPECT_NEAR(r.term_distance, 1.0 - std::sqrt(1.0 - delta * delta), 1e-12);
  EXPECT_NEAR(r.max_other_weight, delta * delta, 1e-12);
}

TEST(MatchSingleProduct, PreconditionFailureNamesInequality) {
  const Vector u0 = e(2, 0), u1 = e(2, 1);
  try {
    match_single_product({1.0, u0, u0}, {{1.0, u1, u1}}, 0.3, 0.01);
    FAIL() << "expected PreconditionError";
  } catch (const PreconditionError& err) {
    EXPECT_NE(std::string(err.what()).find("ε′"), std::string::npos);
  }
}

TEST(MatchComponents, IdenticalDecompositionsPairIdentically) {
  Rng rng(15);
  const TriDecomposition d = random_triorthogonal({3, 3, 3}, {std::sqrt(0.5), std::sqrt(0.3), std::sqrt(0.2)}, rng);
  const OrderedTriortho o = make_ordered(d);
  const MatchReport r = match_components(o, o.decomposition, o.block_count(), 0.2);
  ASSERT_EQ(r.pairs.size(), 3u);
  for (const auto& p : r.pairs) {
    EXPECT_EQ(p.term, p.partner);
    EXPECT_NEAR(p.coefficient_gap, 0.0, 1e-12);
    EXPECT_NEAR(p.term_distance, 0.0, 1e-12);
  }
  EXPECT_TRUE(r.all_hold);
}

TEST(MatchComponents, PerturbedFactorWithinHypothesis) {
  Rng rng(16);
  const TriDecomposition d = random_triorthogonal({4, 4, 4}, {std::sqrt(0.5), std::sqrt(0.3), std::sqrt(0.2)}, rng);
  const OrderedTriortho o = make_ordered(d);
  const double eps = 0.2;
  const double bound = 0.2 * eps * eps / 18.0;
  // Rotate the last term's factor-1 vector inside the orthogonal complement of the others.
  TriDecomposition phi = o.decomposition;
  Vector f = phi.terms[2].factors[0].to_dense(4);
  Vector spare = Vector::Zero(4);
  for (std::size_t j = 0; j < 4 && spare.norm() < 0.5; ++j) {
    Vector cand = e(4, j);
    for (const auto& t : phi.terms) {
      const Vector b = t.factors[0].to_dense(4);
      cand -= b * b.dot(cand);
    }
    if (cand.norm() > 0.5) spare = cand.normalized();
  }
  const double s = 0.5 * bound / std::abs(phi.terms[2].coeff);
  f = std::cos(s) * f + std::sin(s) * spare;
  phi.terms[2].factors[0] = SparseVector::from_dense(f);
  const MatchReport r = match_components(o, phi, o.block_count(), eps);
  EXPECT_LT(r.distance, r.distance_bound);
  EXPECT_TRUE(r.all_hold);
  for (const auto& p : r.pairs) {
    EXPECT_EQ(p.term, p.partner);
    EXPECT_LT(p.coefficient_gap, r.coefficient_bound());
    for (double ov : p.overlaps) EXPECT_GT(ov, r.overlap_bound());
    EXPECT_LT(p.term_distance, r.term_bound());
  }
}

TEST(MatchComponents, DistantStatesRejected) {
  Rng rng(17);
  const TriDecomposition a = random_triorthogonal({3, 3, 3}, {std::sqrt(0.6), std::sqrt(0.4)}, rng);
  const TriDecomposition b = random_triorthogonal({3, 3, 3}, {std::sqrt(0.6), std::sqrt(0.4)}, rng);
  EXPECT_THROW(match_components(make_ordered(a), b, 1, 0.2), PreconditionError);
  EXPECT_THROW(match_components(make_ordered(a), a, 1, 0.3), PreconditionError);
}

TEST(TruncateDecomposition, DropsSmallCoefficientsOnly) {
  Rng rng(31);
  const std::vector<double> mags{std::sqrt(0.6), std::sqrt(0.3), std::sqrt(0.0999), std::sqrt(0.0001)};
  const TriDecomposition d = random_triorthogonal({4, 4, 4}, mags, rng);
  const TriDecomposition t = truncate_decomposition(d, 0.05);
  std::vector<Complex> kept;
  for (const auto& term : d.terms)
    if (std::abs(term.coeff) > 0.05) kept.push_back(term.coeff);
  ASSERT_EQ(t.size(), 3u);
  ASSERT_EQ(kept.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(t.terms[k].coeff, kept[k]);
  // dropped mass equals the discarded |a_k|²
  EXPECT_NEAR(std::pow(norm(t.to_sum_state()), 2), 1.0 - 0.0001, 1e-12);
  EXPECT_EQ(truncate_decomposition(d, 0.0).size(), 4u);
  EXPECT_THROW(truncate_decomposition(d, 1.0), ArgumentError);
  EXPECT_THROW(truncate_decomposition(d, -1.0), ArgumentError);
}
