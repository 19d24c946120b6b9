"""Magnon two-point correlation dynamics.

With no pump the quadratic equations of motion close on
``C[a, b] = <a_a^dag a_b>``::

    dC/dt = -conj(H_m) C - C conj(H_m)^H

and are solved exactly by ``C(t) = P C(0) P^H`` with
``P = expm(-conj(H_m) t)``.  An RK4 integrator of the same equation is kept
as an independent check of the propagator.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import InvalidSpecError, RegimeError
from .model import ChainSpec, NNChainSpec, build_hm, build_knh, nn_to_general

PSD_TOL = 1e-10
# largest eigenvector condition number for which the spectral propagator is used
SPECTRAL_COND_LIMIT = 1e6


@dataclass(frozen=True)
class CorrelationState:
    time: float
    c_mat: np.ndarray

    def __post_init__(self):
        c = np.array(self.c_mat, dtype=complex)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise InvalidSpecError(f"correlation matrix must be square, got {c.shape}")
        scale = max(1.0, float(np.abs(c).max(initial=0.0)))
        if np.abs(c - c.conj().T).max(initial=0.0) > PSD_TOL * scale:
            raise InvalidSpecError("correlation matrix is not Hermitian")
        if c.size and np.linalg.eigvalsh(c)[0] < -PSD_TOL * scale:
            raise InvalidSpecError("correlation matrix is not positive semidefinite")
        c.setflags(write=False)
        object.__setattr__(self, "c_mat", c)
        object.__setattr__(self, "time", float(self.time))

    @property
    def densities(self) -> np.ndarray:
        return np.real(np.diag(self.c_mat)).copy()

    @classmethod
    def single_magnon(cls, n_sites: int, site: int, time: float = 0.0) -> "CorrelationState":
        """One magnon on ``site`` (0-based): ``C = e_site e_site^T``."""
        c = np.zeros((n_sites, n_sites), dtype=complex)
        c[site, site] = 1.0
        return cls(time, c)


@dataclass(frozen=True)
class TrajectoryRecord:
    times: np.ndarray
    densities: np.ndarray  # shape (len(times), N)
    total_number: np.ndarray

    def asymmetry(self, source: int) -> np.ndarray:
        """Right-minus-left weight about the 0-based ``source`` site."""
        d = self.densities
        return d[:, source + 1:].sum(axis=1) - d[:, :source].sum(axis=1)


def generator(spec: ChainSpec) -> np.ndarray:
    """``conj(H_m)``; C evolves as ``dC/dt = -G C - C G^H``."""
    return build_hm(spec).conj()


def generator_from_knh(spec: ChainSpec) -> np.ndarray:
    """Same generator assembled from the conditional coupling matrix.

    Uses ``K_L = conj(K_nh)`` (valid without pump) and the on-site terms
    ``-i Omega``: ``conj(H_m) = -i Omega + s K_L``.
    """
    if spec.has_pump:
        raise RegimeError("generator_from_knh requires gamma_tilde = 0")
    return -1j * np.diag(spec.omega) + spec.spin_s * build_knh(spec).conj()


def _check_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("times must be a non-empty 1-d sequence")
    if np.any(t < 0) or np.any(np.diff(t) <= 0):
        raise ValueError("times must be nonnegative and strictly increasing")
    return t


def propagator(spec: ChainSpec, t: float) -> np.ndarray:
    return linalg.expm(-generator(spec) * t)


def evolve(spec: ChainSpec, c0: CorrelationState, t: float) -> CorrelationState:
    """Exact ``C(c0.time + t)`` from ``c0``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    p = propagator(spec, t)
    c = p @ c0.c_mat @ p.conj().T
    return CorrelationState(c0.time + t, 0.5 * (c + c.conj().T))


def _propagators(spec: ChainSpec, times: np.ndarray):
    g = generator(spec)
    try:
        dec = linalg.eig(g)
    except Exception:
        dec = None
    if dec is not None and dec.condition < SPECTRAL_COND_LIMIT:
        v = dec.right_vectors
        v_inv = linalg.solve(v, np.eye(len(v)))
        for t in times:
            yield (v * np.exp(-dec.eigenvalues * t)) @ v_inv
    else:
        # defective or nearly defective generator (e.g. unidirectional hopping)
        for t in times:
            yield linalg.expm(-g * t)


def density_trajectory(spec: ChainSpec, c0: CorrelationState, times) -> TrajectoryRecord:
    """Sample ``n_a(t)`` and ``Tr C(t)`` at ``times`` (relative to ``c0``).

    The generator is diagonalised once and reused for every sample when its
    eigenvectors are well conditioned; otherwise each sample is a fresh
    matrix exponential.
    """
    times = _check_times(times)
    n = spec.n_sites
    dens = np.empty((times.size, n))
    for j, p in enumerate(_propagators(spec, times)):
        c = p @ c0.c_mat @ p.conj().T
        dens[j] = np.real(np.diag(c))
    return TrajectoryRecord(times, dens, dens.sum(axis=1))


def rk4_reference(spec: ChainSpec, c0: CorrelationState, t: float, n_steps: int = 2000) -> np.ndarray:
    """Fixed-step RK4 solution of the correlation equation (verification only)."""
    g = generator(spec)
    gh = g.conj().T

    def rhs(c):
        return -g @ c - c @ gh

    c = np.array(c0.c_mat, dtype=complex)
    h = t / n_steps
    for _ in range(n_steps):
        k1 = rhs(c)
        k2 = rhs(c + 0.5 * h * k1)
        k3 = rhs(c + 0.5 * h * k2)
        k4 = rhs(c + h * k3)
        c = c + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return c


class Figure2Variant(str, enum.Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"


FIGURE2_PARAMS = {
    Figure2Variant.A: dict(j_sym=0.0, d_asym=1.0, gamma=1.0, gamma0=2.0),
    Figure2Variant.B: dict(j_sym=1.0, d_asym=1.0, gamma=1.0, gamma0=2.0),
    Figure2Variant.C: dict(j_sym=1.0, d_asym=0.0, gamma=1.0, gamma0=2.0),
    Figure2Variant.D: dict(j_sym=1.0, d_asym=1.0, gamma=1.0, gamma0=20.0),
}
FIGURE2_SITES = 9
FIGURE2_SOURCE = 4  # 0-based; site 5 in 1-based numbering
FIGURE2_TMAX = 4.0
FIGURE2_NT = 200


def figure2_nn_spec(variant) -> NNChainSpec:
    variant = Figure2Variant(str(getattr(variant, "value", variant)).upper())
    return NNChainSpec(FIGURE2_SITES, spin_s=1.0, omega=1.0, **FIGURE2_PARAMS[variant])


def figure2_preset(variant) -> tuple[ChainSpec, CorrelationState, np.ndarray]:
    """Chain, initial single magnon on the centre site and sample times.

    Time window ``[0, 4]`` with 200 samples and ``gamma0 = 20`` for
    variant D are choices of this package; the remaining values follow
    the figure.
    """
    spec = nn_to_general(figure2_nn_spec(variant))
    c0 = CorrelationState.single_magnon(FIGURE2_SITES, FIGURE2_SOURCE)
    return spec, c0, np.linspace(0.0, FIGURE2_TMAX, FIGURE2_NT)
