import math

import numpy as np
from django.test import SimpleTestCase

from densitylab.dynamics import TimeDependentHamiltonian, evolve_to_times
from densitylab.entropy import (
    entanglement_growth,
    entropy_under_unitary,
    subsystem_entropy,
    von_neumann_entropy,
)
from densitylab.exceptions import DimensionMismatch, InvalidState, NotUnitary
from densitylab.hilbert import (
    DensityMatrix,
    Operator,
    basis_state,
    bell_state,
    pauli,
    random_density,
    random_hermitian,
    random_state,
    random_unitary,
    schmidt_state,
    tensor,
)


class VonNeumannEntropyTests(SimpleTestCase):
    def test_pure_state_has_zero_entropy(self):
        rng = np.random.Generator(np.random.PCG64(1))
        report = von_neumann_entropy(random_state(4, rng))
        self.assertAlmostEqual(report.value, 0.0, delta=1e-10)
        self.assertAlmostEqual(report.purity, 1.0, delta=1e-10)

    def test_unpolarized_qubit(self):
        report = von_neumann_entropy(DensityMatrix.maximally_mixed(2))
        self.assertAlmostEqual(report.value, math.log(2), delta=1e-10)
        self.assertAlmostEqual(von_neumann_entropy(DensityMatrix.maximally_mixed(2), bits=True).value, 1.0)

    def test_diagonal_state(self):
        report = von_neumann_entropy(DensityMatrix(np.diag([0.7, 0.3])))
        expected = -(0.7 * math.log(0.7) + 0.3 * math.log(0.3))
        self.assertAlmostEqual(report.value, expected, places=12)
        np.testing.assert_allclose(report.to_dict()["spectrum"], [0.3, 0.7], atol=1e-15)

    def test_report_in_bits_converts_back(self):
        report = von_neumann_entropy(DensityMatrix.maximally_mixed(4), bits=True)
        self.assertAlmostEqual(report.value, 2.0, places=12)
        self.assertAlmostEqual(report.to_dict()["S_nats"], 2 * math.log(2), places=12)

    def test_noise_level_negative_eigenvalue_clamped(self):
        report = von_neumann_entropy(DensityMatrix(np.diag([1.0 + 5e-11, -5e-11])))
        self.assertEqual(min(report.eigenvalue_spectrum), 0.0)
        self.assertAlmostEqual(report.value, 0.0, delta=1e-9)

    def test_clamping_is_logged(self):
        with self.assertLogs("densitylab.entropy", level="DEBUG") as logs:
            von_neumann_entropy(DensityMatrix(np.diag([1.0 + 5e-11, -5e-11])))
        self.assertIn("clamped 1 eigenvalues", logs.output[0])

    def test_concavity(self):
        rng = np.random.Generator(np.random.PCG64(43))
        for _ in range(200):
            d = int(rng.integers(2, 6))
            r1 = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
            r2 = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
            mixed = DensityMatrix.from_matrix(0.5 * (r1.entries + r2.entries))
            average = 0.5 * (von_neumann_entropy(r1).value + von_neumann_entropy(r2).value)
            self.assertGreaterEqual(von_neumann_entropy(mixed).value, average - 1e-12)

    def test_zero_exactly_when_pure(self):
        rng = np.random.Generator(np.random.PCG64(47))
        for _ in range(100):
            d = int(rng.integers(2, 6))
            pure = von_neumann_entropy(random_density(d, rng, rank=1))
            self.assertAlmostEqual(pure.value, 0.0, delta=1e-9)
            self.assertAlmostEqual(pure.purity, 1.0, delta=1e-12)
            mixed = von_neumann_entropy(random_density(d, rng, rank=int(rng.integers(2, d + 1))))
            self.assertGreater(mixed.value, 1e-6)
            self.assertLess(mixed.purity, 1.0 - 1e-6)


class UnitaryInvarianceTests(SimpleTestCase):
    def test_random_pairs(self):
        rng = np.random.Generator(np.random.PCG64(17))
        for _ in range(100):
            d = int(rng.integers(2, 6))
            before, after = entropy_under_unitary(random_density(d, rng), random_unitary(d, rng))
            self.assertLessEqual(abs(after - before), 1e-9)

    def test_rejects_non_unitary(self):
        with self.assertRaises(NotUnitary):
            entropy_under_unitary(DensityMatrix.maximally_mixed(2), Operator([[1, 1], [0, 1]]))

    def test_dimension_mismatch(self):
        rng = np.random.Generator(np.random.PCG64(0))
        with self.assertRaises(DimensionMismatch):
            entropy_under_unitary(DensityMatrix.maximally_mixed(2), random_unitary(3, rng))


class SubsystemEntropyTests(SimpleTestCase):
    def test_bell_and_schmidt(self):
        self.assertAlmostEqual(subsystem_entropy(bell_state(), (2, 2)), math.log(2), places=12)
        chi = schmidt_state([math.sqrt(0.7), math.sqrt(0.3)])
        expected = -(0.7 * math.log(0.7) + 0.3 * math.log(0.3))
        self.assertAlmostEqual(subsystem_entropy(chi, (2, 2), keep=2), expected, places=12)

    def test_both_halves_of_a_pure_state_agree(self):
        rng = np.random.Generator(np.random.PCG64(53))
        for dims in ((2, 2), (2, 3), (3, 4), (4, 2)):
            for _ in range(25):
                chi = random_state(dims[0] * dims[1], rng)
                self.assertAlmostEqual(
                    subsystem_entropy(chi, dims, keep=1), subsystem_entropy(chi, dims, keep=2), delta=1e-9
                )


class EntanglementGrowthTests(SimpleTestCase):
    def test_xx_coupling(self):
        h = TimeDependentHamiltonian.constant(pauli("XX"), math.pi / 2)
        times = [0.0, math.pi / 4, math.pi / 2]
        rows = entanglement_growth(h, basis_state(0, 4), times, (2, 2))
        self.assertEqual([t for t, _ in rows], times)
        self.assertAlmostEqual(rows[0][1], 0.0, delta=1e-6)
        self.assertAlmostEqual(rows[1][1], math.log(2), delta=1e-6)
        self.assertAlmostEqual(rows[2][1], 0.0, delta=1e-6)

    def test_local_hamiltonian_creates_no_entanglement(self):
        h = TimeDependentHamiltonian.constant(pauli("XI") + pauli("IZ"), 2.0)
        rows = entanglement_growth(h, basis_state(0, 4), [0.5, 1.0, 2.0], (2, 2))
        for _, entropy in rows:
            self.assertAlmostEqual(entropy, 0.0, delta=1e-9)

    def test_total_state_stays_pure(self):
        rng = np.random.Generator(np.random.PCG64(59))
        times = [0.0, 0.5, 1.0, 1.5, 2.0]
        for _ in range(5):
            h = TimeDependentHamiltonian.constant(random_hermitian(4, rng), 2.0)
            psi0 = tensor(random_state(2, rng), random_state(2, rng))
            for _, state in evolve_to_times(h, psi0, times):
                self.assertAlmostEqual(von_neumann_entropy(state).value, 0.0, delta=1e-9)
            rows = entanglement_growth(h, psi0, times, (2, 2))
            self.assertAlmostEqual(rows[0][1], 0.0, delta=1e-8)
            self.assertGreater(max(s for _, s in rows), 1e-3)

    def test_initial_state_must_be_product(self):
        h = TimeDependentHamiltonian.constant(pauli("XX"), 1.0)
        with self.assertRaises(InvalidState):
            entanglement_growth(h, bell_state(), [0.5], (2, 2))

    def test_dims_must_factor(self):
        h = TimeDependentHamiltonian.constant(pauli("XX"), 1.0)
        with self.assertRaises(DimensionMismatch):
            entanglement_growth(h, basis_state(0, 4), [0.5], (3, 2))
