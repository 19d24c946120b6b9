from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magskin import dynamics, liouville, model
from magskin.errors import InvalidSpecError, RegimeError, SizeError
from magskin.linalg import set_distance
from magskin.liouville import DensityMatrix, FockSpec
from magskin.model import ChainSpec, NNChainSpec
from magskin.verify import random_chain

FIG2B = dict(j_sym=1.0, d_asym=1.0, gamma=1.0, gamma0=2.0)


def lindblad_action(spec: ChainSpec, fock: FockSpec, rho: np.ndarray) -> np.ndarray:
    """Master-equation right-hand side evaluated with operator products."""
    a = fock.annihilators
    ad = [x.conj().T for x in a]
    n = spec.n_sites
    h = sum((spec.omega[i] * (i == j) + spec.spin_s * np.conj(spec.j_mat[i, j])) * ad[i] @ a[j]
            for i in range(n) for j in range(n))
    out = -1j * (h @ rho - rho @ h)
    for i in range(n):
        for j in range(n):
            g = 2 * spec.spin_s * spec.gamma_mat[i, j]
            out = out + g * (a[j] @ rho @ ad[i] - 0.5 * (ad[i] @ a[j] @ rho + rho @ ad[i] @ a[j]))
    return out


def vec(m):
    return m.reshape(-1, order="F")


def random_density(rng, dim, support=None):
    psi = rng.normal(size=(dim, 3)) + 1j * rng.normal(size=(dim, 3))
    if support is not None:
        psi[~support] = 0
    rho = psi @ psi.conj().T
    return rho / np.trace(rho)


class TestFockSpace:
    @pytest.mark.parametrize("n,m", [(1, 1), (1, 4), (2, 2), (3, 1), (3, 2), (4, 3)])
    def test_dimension(self, n, m):
        fock = FockSpec(n, m)
        assert fock.dimension == comb(n + m, m) == len(fock.basis) == len(set(fock.basis))

    def test_basis_order(self):
        assert FockSpec(2, 2).basis == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]

    def test_canonical_commutator_below_cutoff(self):
        fock = FockSpec(3, 3)
        a = fock.annihilators
        below = np.array([sum(o) < fock.cutoff for o in fock.basis])
        for i in range(3):
            for j in range(3):
                comm = a[i] @ a[j].T - a[j].T @ a[i]
                np.testing.assert_allclose(comm[np.ix_(below, below)], np.eye(below.sum()) * (i == j), atol=1e-14)
                np.testing.assert_allclose(a[i] @ a[j] - a[j] @ a[i], 0, atol=1e-14)

    def test_number_operator(self):
        fock = FockSpec(3, 2)
        total = sum(x.T @ x for x in fock.annihilators)
        np.testing.assert_allclose(total, fock.number_operator, atol=1e-14)

    def test_invalid(self):
        with pytest.raises(InvalidSpecError):
            FockSpec(0, 1)
        with pytest.raises(InvalidSpecError):
            FockSpec(2, 0)


class TestDensityMatrix:
    def test_trace(self):
        with pytest.raises(InvalidSpecError, match="trace"):
            DensityMatrix(np.eye(2))

    def test_psd(self):
        with pytest.raises(InvalidSpecError):
            DensityMatrix(np.diag([1.5, -0.5]))

    def test_pure(self):
        rho = DensityMatrix.pure([1, 1j]).rho
        np.testing.assert_allclose(rho, [[0.5, -0.5j], [0.5j, 0.5]])


class TestStructureMatrix:
    def test_single_site(self):
        spec = ChainSpec(1, 1.0, 1.0, [[0.0]], [[2.0]])
        x = liouville.third_quantization_x(spec)
        np.testing.assert_allclose(x.x, 0.5 * np.diag([1j + 2, -1j + 2]))
        assert x.offset == pytest.approx(2.0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_spectrum_is_half_rapidities_and_conjugates(self, seed):
        spec = random_chain(np.random.default_rng(seed))
        x = liouville.third_quantization_x(spec)
        lam = np.linalg.eigvals(model.build_hm(spec))
        assert set_distance(np.linalg.eigvals(x.x), 0.5 * np.concatenate([lam, lam.conj()])) < 1e-10

    def test_pump_rejected(self):
        spec = ChainSpec(1, 1.0, 1.0, [[0.0]], [[1.0]], [[0.2]])
        with pytest.raises(RegimeError):
            liouville.third_quantization_x(spec)


class TestRapidities:
    def test_single_site(self):
        spec = ChainSpec(1, 0.5, 1.3, [[0.0]], [[0.4]])
        np.testing.assert_allclose(liouville.rapidity_spectrum(spec), [1.3j + 0.5 * 0.4])

    def test_two_site_reciprocal(self):
        s, w, g0, j = 1.0, 1.0, 0.3, 0.8
        spec = model.nn_to_general(NNChainSpec(2, spin_s=s, omega=w, gamma0=g0, j_sym=j))
        ref = [1j * w + s * g0 + 1j * s * j, 1j * w + s * g0 - 1j * s * j]
        assert set_distance(liouville.rapidity_spectrum(spec), ref) < 1e-14

    def test_unidirectional_degenerate(self):
        spec = model.nn_to_general(dynamics.figure2_nn_spec("A").replace(n_sites=2))
        np.testing.assert_allclose(liouville.rapidity_spectrum(spec), [1j + 2, 1j + 2], atol=1e-7)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_nonnegative_real_parts(self, seed):
        spec = random_chain(np.random.default_rng(seed))
        assert liouville.rapidity_spectrum(spec).real.min() >= -1e-10


class TestLiouvillian:
    def test_single_mode_spectrum(self):
        s, w, g0 = 1.0, 1.7, 0.6
        spec = ChainSpec(1, s, w, [[0.0]], [[g0]])
        ev = np.linalg.eigvals(liouville.truncated_liouvillian(spec, FockSpec(1, 1)))
        ref = [0, -1j * w - s * g0, 1j * w - s * g0, -2 * s * g0]
        assert set_distance(ev, ref) < 1e-12

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 2))
    def test_matches_operator_form(self, seed, n, m):
        rng = np.random.default_rng(seed)
        spec = random_chain(rng, n)
        fock = FockSpec(n, m)
        sup = liouville.truncated_liouvillian(spec, fock)
        rho = random_density(rng, fock.dimension)
        np.testing.assert_allclose(sup @ vec(rho), vec(lindblad_action(spec, fock, rho)), atol=1e-11)

    def test_trace_preservation(self):
        spec = random_chain(np.random.default_rng(3), 3)
        fock = FockSpec(3, 2)
        sup = liouville.truncated_liouvillian(spec, fock)
        left = vec(np.eye(fock.dimension))
        np.testing.assert_allclose(left @ sup, 0, atol=1e-12)

    def test_coherent_only_is_imaginary(self):
        base = random_chain(np.random.default_rng(5), 2)
        spec = ChainSpec(2, 1.0, base.omega, base.j_mat, np.zeros((2, 2)))
        ev = np.linalg.eigvals(liouville.truncated_liouvillian(spec, FockSpec(2, 2)))
        assert np.abs(ev.real).max() < 1e-12

    def test_no_leakage(self):
        spec = random_chain(np.random.default_rng(0), 3)
        assert liouville.leakage_rate(spec, FockSpec(3, 2)) == 0.0

    def test_size_budget(self):
        spec = model.nn_to_general(NNChainSpec(9, **FIG2B))
        with pytest.raises(SizeError):
            liouville.truncated_liouvillian(spec, FockSpec(9, 2))

    def test_fock_mismatch(self):
        spec = random_chain(np.random.default_rng(0), 3)
        with pytest.raises(InvalidSpecError):
            liouville.truncated_liouvillian(spec, FockSpec(2, 1))


class TestCombinationRule:
    def test_single_mode(self):
        spec = ChainSpec(1, 1.0, 1.0, [[0.0]], [[2.0]])
        rep = liouville.combination_rule_check(spec, FockSpec(1, 1))
        assert rep.passed and rep.max_distance < 1e-10

    def test_nonreciprocal_pair(self):
        spec = model.nn_to_general(NNChainSpec(2, **FIG2B))
        rep = liouville.combination_rule_check(spec, FockSpec(2, 2))
        assert rep.passed and rep.max_distance < 1e-8
        assert rep.eigenvalues.size == 36

    def test_coherent_chain_on_imaginary_axis(self):
        spec = model.nn_to_general(NNChainSpec(3, j_sym=1.0, d_asym=0.4))
        rep = liouville.combination_rule_check(spec, FockSpec(3, 1))
        assert rep.passed
        assert np.abs(rep.rapidities.real).max() < 1e-12

    def test_orphans_are_reported(self):
        spec = model.nn_to_general(NNChainSpec(2, **FIG2B))
        rep = liouville.combination_rule_check(spec, FockSpec(2, 1), tol=-1.0)
        assert not rep.passed and len(rep.orphans) == rep.eigenvalues.size

    def test_combination_values_independently(self):
        # brute-force the combination set for N=2, M=1 from numpy eigenvalues
        spec = random_chain(np.random.default_rng(12), 2)
        lam = np.linalg.eigvals(model.build_hm(spec))
        combos = [-(n1 * lam[0] + n2 * lam[1] + m1 * lam[0].conj() + m2 * lam[1].conj())
                  for n1 in range(3) for n2 in range(3) for m1 in range(3) for m2 in range(3)
                  if n1 + n2 + m1 + m2 <= 2]
        ev = np.linalg.eigvals(liouville.truncated_liouvillian(spec, FockSpec(2, 1)))
        assert max(np.abs(np.array(combos) - e).min() for e in ev) < 1e-8


class TestExactEvolution:
    def test_single_mode_decay(self):
        s, g0 = 1.0, 0.8
        spec = ChainSpec(1, s, 1.0, [[0.0]], [[g0]])
        fock = FockSpec(1, 1)
        times = np.linspace(0, 2, 7)
        ev = liouville.evolve_exact(spec, fock, liouville.single_excitation(fock, 0), times)
        np.testing.assert_allclose(ev.record.densities[:, 0], np.exp(-2 * s * g0 * times), rtol=1e-12)

    def test_vacuum_is_stationary(self):
        spec = model.nn_to_general(NNChainSpec(3, **FIG2B))
        fock = FockSpec(3, 1)
        ev = liouville.evolve_exact(spec, fock, liouville.vacuum(fock), [0.0, 1.0, 3.0])
        np.testing.assert_array_equal(ev.record.densities, 0)

    def test_gaussian_equivalence_full_correlations(self):
        rng = np.random.default_rng(21)
        spec = random_chain(rng, 3)
        fock = FockSpec(3, 2)
        support = np.array([sum(o) <= 2 for o in fock.basis])
        rho0 = DensityMatrix(random_density(rng, fock.dimension, support))
        times = np.linspace(0, 1.5, 6)
        ev = liouville.evolve_exact(spec, fock, rho0, times)
        c0 = dynamics.CorrelationState(0.0, liouville.correlation_from_rho(fock, rho0.rho))
        for k, t in enumerate(times):
            gauss = dynamics.evolve(spec, c0, t).c_mat
            np.testing.assert_allclose(ev.correlations[k], gauss, atol=1e-10)

    def test_invariants(self):
        rng = np.random.default_rng(2)
        spec = random_chain(rng, 2)
        fock = FockSpec(2, 2)
        rho0 = DensityMatrix(random_density(rng, fock.dimension))
        ev = liouville.evolve_exact(spec, fock, rho0, np.linspace(0, 3, 10))
        assert ev.trace_error < 1e-10
        assert ev.min_eigenvalue > -1e-9
        assert ev.leakage == 0

    def test_shape_mismatch(self):
        spec = random_chain(np.random.default_rng(0), 2)
        with pytest.raises(InvalidSpecError):
            liouville.evolve_exact(spec, FockSpec(2, 1), liouville.vacuum(FockSpec(2, 2)), [0.0])
