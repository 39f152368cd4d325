import numpy as np
from django.test import SimpleTestCase, override_settings
from numpy.testing import assert_allclose

from densitylab.exceptions import (
    DimensionLimitExceeded,
    DimensionMismatch,
    InvalidState,
    InvalidWeights,
    KindMismatch,
    NotHermitian,
)
from densitylab.hilbert import (
    DensityMatrix,
    Operator,
    PureState,
    basis_state,
    bell_state,
    bloch_density,
    bloch_state,
    bloch_vector,
    eig_hermitian,
    expectation,
    fidelity,
    from_pairs,
    mix,
    partial_trace,
    pauli,
    pauli_sum,
    purity,
    random_density,
    random_hermitian,
    random_state,
    random_unitary,
    schmidt_state,
    tensor,
    to_pairs,
    trace_distance,
)


class OperatorTests(SimpleTestCase):
    def test_hermitian_flag(self):
        self.assertTrue(pauli("Y").hermitian_flag)
        self.assertFalse(Operator([[0, 1], [0, 0]]).hermitian_flag)

    def test_entries_are_read_only(self):
        op = pauli("Z")
        with self.assertRaises(ValueError):
            op.entries[0, 0] = 5

    def test_non_square_rejected(self):
        with self.assertRaises(DimensionMismatch):
            Operator(np.zeros((2, 3)))

    @override_settings(DENSITYLAB_MAX_DIM=8)
    def test_dimension_limit(self):
        with self.assertRaises(DimensionLimitExceeded):
            Operator.identity(16)

    def test_random_unitary_is_unitary(self):
        rng = np.random.Generator(np.random.PCG64(3))
        self.assertTrue(random_unitary(5, rng).is_unitary())


class StateTests(SimpleTestCase):
    def test_unnormalized_vector_rejected(self):
        with self.assertRaises(InvalidState):
            PureState(np.array([1.0, 1.0]))

    def test_from_vector_normalizes(self):
        state = PureState.from_vector([3, 4j])
        self.assertAlmostEqual(np.linalg.norm(state.amplitudes), 1.0, places=14)

    def test_density_matrix_validation(self):
        with self.assertRaises(InvalidState):
            DensityMatrix(np.diag([0.7, 0.7]))
        with self.assertRaises(InvalidState):
            DensityMatrix(np.diag([1.2, -0.2]))

    def test_bloch_round_trip(self):
        rho = bloch_density((0.6, 0.0, 0.8))
        assert_allclose(bloch_vector(rho), (0.6, 0.0, 0.8), atol=1e-12)
        state = bloch_state((0.0, 1.0, 0.0))
        assert_allclose(bloch_vector(state.projector()), (0.0, 1.0, 0.0), atol=1e-12)


class TensorTests(SimpleTestCase):
    def test_identities(self):
        assert_allclose(tensor(pauli("I"), pauli("I")).entries, np.eye(4))

    def test_first_factor_major(self):
        state = tensor(basis_state(0, 2), basis_state(1, 2))
        assert_allclose(state.amplitudes, basis_state(1, 4).amplitudes)

    def test_zz_on_01(self):
        zz = tensor(pauli("Z"), pauli("Z"))
        ket = tensor(basis_state(0, 2), basis_state(1, 2))
        assert_allclose(zz @ ket, -ket.amplitudes)

    def test_kind_mismatch(self):
        with self.assertRaises(KindMismatch):
            tensor(pauli("Z"), basis_state(0, 2))


class PartialTraceTests(SimpleTestCase):
    def test_bell_reduction_is_unpolarized(self):
        reduced = partial_trace(bell_state().projector(), (2, 2), keep=1)
        assert_allclose(reduced.entries, np.eye(2) / 2, atol=1e-15)

    def test_product_state(self):
        rng = np.random.Generator(np.random.PCG64(11))
        rho_a, rho_b = random_density(2, rng), random_density(3, rng)
        reduced = partial_trace(tensor(rho_a, rho_b), (2, 3), keep=2)
        assert_allclose(reduced.entries, rho_b.entries, atol=1e-14)

    def test_schmidt_state_against_index_sum(self):
        chi = schmidt_state([np.sqrt(0.7), np.sqrt(0.3)])
        rho = chi.projector().entries.reshape(2, 2, 2, 2)
        by_hand = np.zeros((2, 2), dtype=complex)
        for i in range(2):
            for k in range(2):
                by_hand[i, k] = sum(rho[i, j, k, j] for j in range(2))
        reduced = partial_trace(chi, (2, 2), keep=1)
        assert_allclose(reduced.entries, by_hand, atol=1e-15)
        assert_allclose(reduced.entries, np.diag([0.7, 0.3]), atol=1e-12)

    def test_random_reductions_are_states(self):
        rng = np.random.Generator(np.random.PCG64(23))
        for d1 in range(2, 5):
            for d2 in range(2, 5):
                for _ in range(10):
                    rho = random_density(d1 * d2, rng, rank=int(rng.integers(1, d1 * d2 + 1)))
                    for keep, d in ((1, d1), (2, d2)):
                        reduced = partial_trace(rho, (d1, d2), keep=keep)
                        self.assertEqual(reduced.dim, d)
                        self.assertAlmostEqual(np.trace(reduced.entries).real, 1.0, delta=1e-12)
                        self.assertGreaterEqual(reduced.eigenvalues().min(), -1e-12)

    def test_reduced_expectation_matches_composite(self):
        rng = np.random.Generator(np.random.PCG64(29))
        for d1, d2 in ((2, 2), (2, 3), (3, 4), (4, 4)):
            for _ in range(20):
                chi = random_state(d1 * d2, rng)
                a, b = random_hermitian(d1, rng), random_hermitian(d2, rng)
                on_first = np.vdot(chi.amplitudes, np.kron(a.entries, np.eye(d2)) @ chi.amplitudes).real
                on_second = np.vdot(chi.amplitudes, np.kron(np.eye(d1), b.entries) @ chi.amplitudes).real
                self.assertAlmostEqual(
                    expectation(partial_trace(chi, (d1, d2), keep=1), a), on_first, delta=1e-10
                )
                self.assertAlmostEqual(
                    expectation(partial_trace(chi, (d1, d2), keep=2), b), on_second, delta=1e-10
                )

    def test_bad_factorization(self):
        with self.assertRaises(DimensionMismatch):
            partial_trace(bell_state(), (3, 2), keep=1)


class ExpectationTests(SimpleTestCase):
    def test_examples(self):
        self.assertAlmostEqual(expectation(DensityMatrix.maximally_mixed(2), pauli("Z")), 0.0)
        self.assertAlmostEqual(expectation(basis_state(0, 2), pauli("Z")), 1.0)
        self.assertAlmostEqual(expectation(bloch_density((0.6, 0, 0.8)), pauli("X")), 0.6, places=12)

    def test_identity_has_unit_expectation(self):
        rng = np.random.Generator(np.random.PCG64(31))
        for d in range(1, 7):
            for _ in range(10):
                rho = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
                self.assertAlmostEqual(expectation(rho, Operator.identity(d)), 1.0, delta=1e-10)

    def test_non_hermitian_observable(self):
        with self.assertRaises(NotHermitian):
            expectation(basis_state(0, 2), Operator([[0, 1], [0, 0]]))

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            expectation(basis_state(0, 3), pauli("Z"))


class EigenTests(SimpleTestCase):
    def test_ascending_and_orthonormal(self):
        h = pauli_sum({"Z": 1.0, "X": 0.5})
        values, vectors = eig_hermitian(h)
        assert_allclose(values, [-np.sqrt(1.25), np.sqrt(1.25)], atol=1e-12)
        assert_allclose(vectors.conj().T @ vectors, np.eye(2), atol=1e-12)

    def test_reconstruction(self):
        rng = np.random.Generator(np.random.PCG64(37))
        for d in range(1, 9):
            for _ in range(10):
                a = random_hermitian(d, rng)
                values, vectors = eig_hermitian(a)
                rebuilt = (vectors * values) @ vectors.conj().T
                self.assertLessEqual(
                    np.max(np.abs(rebuilt - a.entries)), 1e-9 * np.linalg.norm(a.entries)
                )

    def test_rejects_non_hermitian(self):
        with self.assertRaises(NotHermitian):
            eig_hermitian(Operator([[1, 2], [0, 1]]))


class MixTests(SimpleTestCase):
    def test_z_and_x_mixtures_coincide(self):
        z = mix([(basis_state(0, 2), 0.5), (basis_state(1, 2), 0.5)])
        x = mix([(PureState.from_vector([1, 1]), 0.5), (PureState.from_vector([1, -1]), 0.5)])
        self.assertLess(trace_distance(z, x), 1e-12)

    def test_purity_of_mixtures(self):
        rng = np.random.Generator(np.random.PCG64(41))
        for d in range(2, 6):
            for _ in range(10):
                psi, phi = random_state(d, rng), random_state(d, rng)
                self.assertTrue(mix([(psi, 1.0)]).is_pure())
                self.assertFalse(mix([(psi, 0.5), (phi, 0.5)]).is_pure())

    def test_weights_must_sum_to_one(self):
        with self.assertRaises(InvalidWeights):
            mix([(basis_state(0, 2), 0.5), (basis_state(1, 2), 0.6)])

    def test_negative_weight(self):
        with self.assertRaises(InvalidWeights):
            mix([(basis_state(0, 2), 1.5), (basis_state(1, 2), -0.5)])


class DistanceTests(SimpleTestCase):
    def test_orthogonal_pure_states(self):
        self.assertAlmostEqual(trace_distance(basis_state(0, 2), basis_state(1, 2)), 1.0)
        self.assertAlmostEqual(fidelity(basis_state(0, 2), basis_state(1, 2)), 0.0)

    def test_fidelity_of_commuting_states(self):
        rho = DensityMatrix(np.diag([0.5, 0.3, 0.2]))
        sigma = DensityMatrix(np.diag([0.2, 0.3, 0.5]))
        expected = (2 * np.sqrt(0.1) + 0.3) ** 2
        self.assertAlmostEqual(fidelity(rho, sigma), expected, places=10)

    def test_fidelity_pure_fast_path(self):
        rng = np.random.Generator(np.random.PCG64(5))
        psi, rho = random_state(3, rng), random_density(3, rng)
        expected = np.vdot(psi.amplitudes, rho.entries @ psi.amplitudes).real
        self.assertAlmostEqual(fidelity(psi, rho), expected, places=12)
        self.assertAlmostEqual(fidelity(rho, psi), expected, places=12)

    def test_purity(self):
        self.assertAlmostEqual(purity(DensityMatrix.maximally_mixed(4)), 0.25)
        self.assertAlmostEqual(purity(bell_state()), 1.0)


class PairCodecTests(SimpleTestCase):
    def test_pairs(self):
        rho = bloch_density((0.0, 0.6, 0.0))
        rows = to_pairs(rho)
        self.assertEqual(rows[0][1], [0.0, -0.3])
        assert_allclose(from_pairs(rows), rho.entries)
