import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm as scipy_expm

from magskin import dynamics, model
from magskin.dynamics import CorrelationState, Figure2Variant
from magskin.errors import InvalidSpecError, RegimeError
from magskin.model import ChainSpec, NNChainSpec
from magskin.verify import random_chain


def hatano_nelson(nn: NNChainSpec) -> np.ndarray:
    """Open-chain single-particle matrix written out from the amplitudes."""
    s, n = nn.spin_s, nn.n_sites
    gr = s * (nn.j_sym + 1j * (nn.d_asym - nn.gamma))
    gl = s * (nn.j_sym - 1j * (nn.d_asym + nn.gamma))
    eps0 = nn.omega - 1j * s * nn.gamma0
    return eps0 * np.eye(n) + gr * np.eye(n, k=-1) + gl * np.eye(n, k=1)


def wavefunction_densities(nn: NNChainSpec, site: int, times) -> np.ndarray:
    """|exp(-i h t) e_site|^2: conditional evolution of one magnon."""
    h = hatano_nelson(nn)
    e = np.zeros(nn.n_sites)
    e[site] = 1
    return np.array([np.abs(scipy_expm(-1j * h * t) @ e) ** 2 for t in times])


def random_state(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return CorrelationState(0.0, a @ a.conj().T / n)


class TestEvolve:
    def test_scalar_decay(self):
        s, g0 = 1.5, 0.7
        spec = ChainSpec(1, s, 2.0, [[0.0]], [[g0]])
        c0 = CorrelationState(0.0, [[0.8]])
        for t in (0.0, 0.3, 2.0):
            assert dynamics.evolve(spec, c0, t).densities[0] == pytest.approx(0.8 * np.exp(-2 * s * g0 * t), rel=1e-13)

    def test_time_zero_is_identity(self):
        rng = np.random.default_rng(0)
        spec = random_chain(rng, 4)
        c0 = random_state(rng, 4)
        np.testing.assert_allclose(dynamics.evolve(spec, c0, 0.0).c_mat, c0.c_mat, atol=1e-15)

    def test_against_adaptive_integrator(self):
        nn = NNChainSpec(3, **dynamics.FIGURE2_PARAMS[Figure2Variant.B])
        spec = model.nn_to_general(nn)
        rng = np.random.default_rng(4)
        c0 = random_state(rng, 3)
        # dC/dt = -G C - C G^H with G = conj(H_m) = conj(i h)
        g = np.conj(1j * hatano_nelson(nn))

        def rhs(_, y):
            c = y.reshape(3, 3)
            return (-g @ c - c @ g.conj().T).ravel()

        sol = solve_ivp(rhs, (0, 0.3), c0.c_mat.ravel(), method="DOP853", rtol=1e-13, atol=1e-15)
        ref = sol.y[:, -1].reshape(3, 3)
        np.testing.assert_allclose(dynamics.evolve(spec, c0, 0.3).c_mat, ref, atol=1e-9)

    def test_rk4_reference_agrees(self):
        spec = random_chain(np.random.default_rng(8), 3)
        c0 = random_state(np.random.default_rng(9), 3)
        np.testing.assert_allclose(dynamics.rk4_reference(spec, c0, 0.2), dynamics.evolve(spec, c0, 0.2).c_mat,
                                   atol=1e-10)

    @pytest.mark.parametrize("variant", list(Figure2Variant))
    def test_single_magnon_is_conditional_wavefunction(self, variant):
        nn = dynamics.figure2_nn_spec(variant)
        spec = model.nn_to_general(nn)
        times = np.linspace(0, 2, 9)
        rec = dynamics.density_trajectory(spec, CorrelationState.single_magnon(9, 4), times)
        np.testing.assert_allclose(rec.densities, wavefunction_densities(nn, 4, times), atol=1e-12)

    def test_semigroup(self):
        rng = np.random.default_rng(2)
        spec = random_chain(rng, 5)
        c0 = random_state(rng, 5)
        two_step = dynamics.evolve(spec, dynamics.evolve(spec, c0, 0.4), 0.7)
        np.testing.assert_allclose(two_step.c_mat, dynamics.evolve(spec, c0, 1.1).c_mat, atol=1e-10)
        assert two_step.time == pytest.approx(1.1)

    def test_negative_time(self):
        spec = random_chain(np.random.default_rng(0), 2)
        with pytest.raises(ValueError):
            dynamics.evolve(spec, CorrelationState.single_magnon(2, 0), -1.0)

    def test_pump_rejected(self):
        spec = ChainSpec(2, 1.0, 1.0, np.zeros((2, 2)), np.eye(2), 0.5 * np.eye(2))
        with pytest.raises(RegimeError):
            dynamics.evolve(spec, CorrelationState.single_magnon(2, 0), 1.0)
        with pytest.raises(RegimeError):
            dynamics.generator_from_knh(spec)

    def test_generator_from_knh(self):
        for seed in range(20):
            spec = random_chain(np.random.default_rng(seed))
            np.testing.assert_allclose(dynamics.generator_from_knh(spec), dynamics.generator(spec), atol=1e-14)

    def test_number_decay_rate(self):
        # d Tr C / dt = -2s Tr(Gamma^* C)
        rng = np.random.default_rng(6)
        spec = random_chain(rng, 4)
        c0 = random_state(rng, 4)
        h = 1e-4
        rec = dynamics.density_trajectory(spec, c0, [h, 2 * h])
        slope = (4 * rec.total_number[0] - rec.total_number[1] - 3 * np.trace(c0.c_mat).real) / (2 * h)
        expected = -2 * spec.spin_s * np.trace(spec.gamma_mat.conj() @ c0.c_mat).real
        assert slope == pytest.approx(expected, rel=1e-6)


class TestTrajectory:
    def test_zero_state(self):
        spec = random_chain(np.random.default_rng(1), 3)
        rec = dynamics.density_trajectory(spec, CorrelationState(0.0, np.zeros((3, 3))), [0, 1, 2])
        np.testing.assert_array_equal(rec.densities, 0)

    def test_unidirectional_no_density_right_of_source(self):
        spec, c0, times = dynamics.figure2_preset("A")
        rec = dynamics.density_trajectory(spec, c0, times)
        assert np.abs(rec.densities[:, 5:]).max() <= 1e-12
        assert rec.densities[-1, 0] > 0  # weight does reach the left edge

    def test_reciprocal_mirror(self):
        spec, c0, times = dynamics.figure2_preset("C")
        d = dynamics.density_trajectory(spec, c0, times).densities
        np.testing.assert_allclose(d, d[:, ::-1], atol=1e-12)

    def test_nonreciprocal_drifts_left(self):
        spec, c0, times = dynamics.figure2_preset("B")
        rec = dynamics.density_trajectory(spec, c0, times)
        assert np.all(rec.asymmetry(4)[1:] < 0)

    def test_eigen_route_matches_expm(self):
        spec, c0, times = dynamics.figure2_preset("B")
        rec = dynamics.density_trajectory(spec, c0, times[::20])
        ref = [dynamics.evolve(spec, c0, t).densities for t in times[::20]]
        np.testing.assert_allclose(rec.densities, ref, atol=1e-12)

    def test_invalid_times(self):
        spec = random_chain(np.random.default_rng(0), 2)
        c0 = CorrelationState.single_magnon(2, 0)
        for bad in ([1.0, 0.5], [-1.0, 0.0], [], [0.0, 0.0]):
            with pytest.raises(ValueError):
                dynamics.density_trajectory(spec, c0, bad)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_state_stays_hermitian_psd_and_number_decreases(self, seed):
        rng = np.random.default_rng(seed)
        spec = random_chain(rng)
        c0 = random_state(rng, spec.n_sites)
        times = np.linspace(0, 3, 25)
        previous = np.trace(c0.c_mat).real
        for t in times[1:]:
            c = dynamics.evolve(spec, c0, t)  # validates Hermitian and PSD
            assert np.linalg.eigvalsh(c.c_mat)[0] >= -1e-10
            total = np.trace(c.c_mat).real
            assert total <= previous * (1 + 1e-12)
            previous = total


class TestCorrelationState:
    def test_rejects_non_hermitian(self):
        with pytest.raises(InvalidSpecError):
            CorrelationState(0.0, [[1, 1], [0, 1]])

    def test_rejects_negative(self):
        with pytest.raises(InvalidSpecError):
            CorrelationState(0.0, [[1, 0], [0, -0.5]])

    def test_single_magnon(self):
        c = CorrelationState.single_magnon(4, 2)
        np.testing.assert_array_equal(c.densities, [0, 0, 1, 0])


class TestFigure2Presets:
    def test_layout(self):
        spec, c0, times = dynamics.figure2_preset("B")
        assert spec.n_sites == 9
        assert spec.spin_s == 1.0
        np.testing.assert_array_equal(spec.omega, 1.0)
        np.testing.assert_array_equal(c0.densities, np.eye(9)[4])
        assert times.size == 200 and times[0] == 0 and times[-1] == 4

    def test_parameters(self):
        p = dynamics.FIGURE2_PARAMS
        assert p[Figure2Variant.A] == dict(j_sym=0.0, d_asym=1.0, gamma=1.0, gamma0=2.0)
        assert p[Figure2Variant.B] == dict(j_sym=1.0, d_asym=1.0, gamma=1.0, gamma0=2.0)
        assert p[Figure2Variant.C] == dict(j_sym=1.0, d_asym=0.0, gamma=1.0, gamma0=2.0)
        assert p[Figure2Variant.D]["gamma0"] > 10 * p[Figure2Variant.D]["d_asym"]

    def test_variant_a_unidirectional(self):
        assert model.hopping_amplitudes(dynamics.figure2_nn_spec("A")).gamma_r == 0

    def test_variant_c_reciprocal(self):
        a = model.hopping_amplitudes(dynamics.figure2_nn_spec("c"))
        assert abs(a.gamma_r) == pytest.approx(abs(a.gamma_l))

    def test_decay_suppresses_spreading(self):
        peak = {}
        for v in "BD":
            spec, c0, times = dynamics.figure2_preset(v)
            peak[v] = dynamics.density_trajectory(spec, c0, times).densities[:, 0].max()
        assert peak["B"] >= 1e3 * peak["D"]

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            dynamics.figure2_preset("E")
