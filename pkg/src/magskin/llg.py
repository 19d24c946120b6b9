"""Macrospin LLG dynamics of a magnetic multilayer with nonlocal damping.

Energy per configuration::

    E = -sum_bonds [J m_a.m_b + D z.(m_a x m_b)] - mu0 Ms H sum_a z.m_a

Each layer obeys::

    dm_a/dt = -(gamma/Ms) m_a x H_eff,a + alpha_l m_a x dm_a/dt
              + alpha_nl m_a x (dm_{a-1}/dt + dm_{a+1}/dt)

The damping terms couple the time derivatives, so every right-hand-side
evaluation solves a 3N x 3N linear system.

Linear waves use the circular variable ``psi = m_x - i m_y`` with time
dependence ``exp(-i w t)``; decaying modes have ``Im w < 0``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from . import linalg
from .errors import InvalidSpecError, StepSizeError
from .model import Boundary
from .spectra import DispersionLoop, momentum_grid

logger = logging.getLogger(__name__)

NORM_TOL = 1e-9
MAX_NORM_DRIFT = 1e-8


@dataclass(frozen=True)
class MultilayerSpec:
    n_layers: int
    j_ex: float = 1.0
    d_dmi: float = 0.0
    alpha_l: float = 0.0
    alpha_nl: float = 0.0
    h_field: float = 1.0
    ms: float = 1.0
    gyro: float = 1.0
    mu0: float = 1.0
    boundary: Boundary = Boundary.OPEN

    def __post_init__(self):
        if int(self.n_layers) < 1:
            raise InvalidSpecError("n_layers must be positive")
        for name in ("j_ex", "d_dmi", "alpha_l", "alpha_nl", "h_field", "ms", "gyro", "mu0"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise InvalidSpecError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.alpha_l < 0 or self.alpha_nl < 0:
            raise InvalidSpecError("damping constants must be >= 0")
        if self.h_field < 0:
            raise InvalidSpecError("h_field must be >= 0")
        if self.ms <= 0 or self.gyro <= 0 or self.mu0 <= 0:
            raise InvalidSpecError("ms, gyro and mu0 must be positive")
        if not self.alpha_l + 2 * self.alpha_nl < 1:
            raise InvalidSpecError(
                f"alpha_l + 2 alpha_nl = {self.alpha_l + 2 * self.alpha_nl:g} must be < 1"
            )
        object.__setattr__(self, "n_layers", int(self.n_layers))
        boundary = Boundary.parse(self.boundary)
        if boundary is Boundary.PERIODIC and self.n_layers < 3:
            raise InvalidSpecError("periodic multilayers need n_layers >= 3")
        object.__setattr__(self, "boundary", boundary)

    def replace(self, **changes) -> "MultilayerSpec":
        return replace(self, **changes)

    @property
    def zeeman(self) -> float:
        """Applied field in effective-field units, ``mu0 Ms H``."""
        return self.mu0 * self.ms * self.h_field

    @property
    def larmor(self) -> float:
        """``gamma mu0 H``."""
        return self.gyro * self.mu0 * self.h_field

    def neighbours(self, a: int) -> tuple[int | None, int | None]:
        n = self.n_layers
        periodic = self.boundary is Boundary.PERIODIC
        left = a - 1 if a > 0 else (n - 1 if periodic else None)
        right = a + 1 if a < n - 1 else (0 if periodic else None)
        return left, right

    def adjacency(self) -> np.ndarray:
        t = np.zeros((self.n_layers, self.n_layers))
        for a in range(self.n_layers):
            for b in self.neighbours(a):
                if b is not None:
                    t[a, b] += 1.0
        return t


@dataclass(frozen=True)
class MagnetizationState:
    time: float
    m: np.ndarray  # (N, 3)

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.ndim != 2 or m.shape[1] != 3:
            raise InvalidSpecError(f"magnetization must have shape (N, 3), got {m.shape}")
        norms = np.linalg.norm(m, axis=1)
        if np.abs(norms - 1).max(initial=0.0) > NORM_TOL:
            raise InvalidSpecError("magnetization vectors must have unit norm")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "time", float(self.time))

    @classmethod
    def tilted(cls, n_layers: int, angle: float, layers=None, phi: float = 0.0) -> "MagnetizationState":
        """All layers along z except ``layers`` (default: all), tilted by ``angle``."""
        m = np.tile([0.0, 0.0, 1.0], (n_layers, 1))
        idx = range(n_layers) if layers is None else layers
        for a in idx:
            m[a] = [np.sin(angle) * np.cos(phi), np.sin(angle) * np.sin(phi), np.cos(angle)]
        return cls(0.0, m)


@dataclass
class LLGTrajectory:
    times: np.ndarray
    m: np.ndarray  # (T, N, 3)
    norm_drift: np.ndarray  # max pre-renormalisation drift per step

    def states(self) -> list[MagnetizationState]:
        return [MagnetizationState(t, m) for t, m in zip(self.times, self.m)]


def _cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    # row-wise u x v for (N, 3) arrays; np.cross is slow for small inputs
    out = np.empty(np.broadcast_shapes(u.shape, v.shape))
    out[..., 0] = u[..., 1] * v[..., 2] - u[..., 2] * v[..., 1]
    out[..., 1] = u[..., 2] * v[..., 0] - u[..., 0] * v[..., 2]
    out[..., 2] = u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
    return out


@lru_cache(maxsize=32)
def _neighbour_index(spec: MultilayerSpec) -> tuple[np.ndarray, np.ndarray]:
    """Left/right neighbour indices, ``-1`` where an open chain ends."""
    pairs = [spec.neighbours(a) for a in range(spec.n_layers)]
    left = np.array([-1 if l is None else l for l, _ in pairs])
    right = np.array([-1 if r is None else r for _, r in pairs])
    return left, right


def effective_field(spec: MultilayerSpec, m) -> np.ndarray:
    """``H_eff,a = J(m_l + m_r) + D(m_r x z + z x m_l) + mu0 Ms H z``."""
    m = np.asarray(getattr(m, "m", m), dtype=float)
    left, right = _neighbour_index(spec)
    pad = np.concatenate([m, np.zeros((1, 3))])  # index -1 -> zero vector
    ml, mr = pad[left], pad[right]
    # m_r x z + z x m_l = (m_r,y - m_l,y, m_l,x - m_r,x, 0)
    h = spec.j_ex * (ml + mr)
    h[:, 0] += spec.d_dmi * (mr[:, 1] - ml[:, 1])
    h[:, 1] += spec.d_dmi * (ml[:, 0] - mr[:, 0])
    h[:, 2] += spec.zeeman
    return h


def energy(spec: MultilayerSpec, m) -> float:
    m = np.asarray(getattr(m, "m", m), dtype=float)
    e = -spec.zeeman * m[:, 2].sum()
    n = spec.n_layers
    bonds = [(a, a + 1) for a in range(n - 1)]
    if spec.boundary is Boundary.PERIODIC:
        bonds.append((n - 1, 0))
    for a, b in bonds:
        e -= spec.j_ex * m[a] @ m[b] + spec.d_dmi * np.cross(m[a], m[b])[2]
    return float(e)


@lru_cache(maxsize=32)
def _damping_coupling(spec: MultilayerSpec) -> np.ndarray:
    return spec.alpha_l * np.eye(spec.n_layers) + spec.alpha_nl * spec.adjacency()


def damping_matrix(spec: MultilayerSpec, m: np.ndarray) -> np.ndarray:
    """``I - G(m)`` acting on the stacked 3N velocity vector."""
    n = spec.n_layers
    cx = np.zeros((n, 3, 3))
    cx[:, 0, 1], cx[:, 0, 2], cx[:, 1, 2] = -m[:, 2], m[:, 1], -m[:, 0]
    cx -= cx.transpose(0, 2, 1)
    coupling = _damping_coupling(spec)
    # block (a, b) = coupling[a, b] * [m_a]_x
    g = (coupling[:, None, :, None] * cx[:, :, None, :]).reshape(3 * n, 3 * n)
    return np.eye(3 * n) - g


def implicit_rhs(spec: MultilayerSpec, m) -> np.ndarray:
    """``dm/dt`` as an (N, 3) array, solving the implicit damping system."""
    m = np.asarray(getattr(m, "m", m), dtype=float)
    torque = -(spec.gyro / spec.ms) * _cross(m, effective_field(spec, m))
    if spec.alpha_l == 0 and spec.alpha_nl == 0:
        return torque
    v = linalg.solve(damping_matrix(spec, m), torque.reshape(-1))
    return np.real(v).reshape(-1, 3)


def integrate(spec: MultilayerSpec, state0: MagnetizationState, dt: float, t_end: float,
              *, sample_every: int = 1, max_norm_drift: float = MAX_NORM_DRIFT) -> LLGTrajectory:
    """Classical RK4 with per-step renormalisation of every layer.

    The norm drift accumulated during a step (before renormalising) is the
    local error monitor; a step exceeding ``max_norm_drift`` raises
    :class:`StepSizeError`.  Every ``sample_every``-th step is stored.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if state0.m.shape[0] != spec.n_layers:
        raise InvalidSpecError("state does not match the number of layers")
    n_steps = int(round((t_end - state0.time) / dt))
    m = np.array(state0.m)
    t = state0.time
    times, ms, drifts = [t], [m.copy()], [0.0]
    step_drift = 0.0
    for step in range(1, n_steps + 1):
        k1 = implicit_rhs(spec, m)
        k2 = implicit_rhs(spec, m + 0.5 * dt * k1)
        k3 = implicit_rhs(spec, m + 0.5 * dt * k2)
        k4 = implicit_rhs(spec, m + dt * k3)
        m = m + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        norms = np.linalg.norm(m, axis=1)
        drift = float(np.abs(norms - 1).max())
        if drift > max_norm_drift:
            raise StepSizeError(
                f"norm drift {drift:.3e} at t={t + dt:.6g} exceeds {max_norm_drift:.1e}; reduce dt",
                partial=LLGTrajectory(np.array(times), np.array(ms), np.array(drifts)),
            )
        m = m / norms[:, None]
        t = state0.time + step * dt
        step_drift = max(step_drift, drift)
        if step % sample_every == 0 or step == n_steps:
            times.append(t)
            ms.append(m.copy())
            drifts.append(step_drift)
            step_drift = 0.0
    logger.debug("integrate: %d steps, max renormalisation %.3e", n_steps, max(drifts))
    return LLGTrajectory(np.array(times), np.array(ms), np.array(drifts))


# --- linear waves about the uniform state m = z -------------------------------


@dataclass(frozen=True)
class LinearizedSystem:
    """``d psi/dt = -i M psi`` with ``M = A^-1 B``."""

    dyn_matrix: np.ndarray
    coherent: np.ndarray
    damping: np.ndarray
    params: MultilayerSpec

    def frequencies(self) -> np.ndarray:
        return linalg.eigvals(self.dyn_matrix)

    def propagate(self, psi0, t: float) -> np.ndarray:
        return linalg.expm(-1j * self.dyn_matrix * t) @ np.asarray(psi0, dtype=complex)


def coherent_matrix(spec: MultilayerSpec) -> np.ndarray:
    """Hermitian ``B``: diagonal ``g(mu0 Ms H + z_a J)``, bonds ``-g(J +- iD)``."""
    g = spec.gyro / spec.ms
    t = spec.adjacency()
    b = np.diag(g * (spec.zeeman + spec.j_ex * t.sum(axis=1))).astype(complex)
    for a in range(spec.n_layers):
        left, right = spec.neighbours(a)
        if right is not None:
            b[a, right] += -g * complex(spec.j_ex, spec.d_dmi)
        if left is not None:
            b[a, left] += -g * complex(spec.j_ex, -spec.d_dmi)
    return b


def linearized_dynamical_matrix(spec: MultilayerSpec) -> LinearizedSystem:
    if spec.j_ex < 0 or spec.h_field <= 0:
        raise InvalidSpecError("linearisation assumes a stable z ground state (J >= 0, H > 0)")
    b = coherent_matrix(spec)
    a = np.eye(spec.n_layers) + 1j * (spec.alpha_l * np.eye(spec.n_layers) + spec.alpha_nl * spec.adjacency())
    return LinearizedSystem(linalg.solve(a, b), b, a, spec)


def bloch_frequency(spec: MultilayerSpec, k) -> np.ndarray:
    """``B(k) / A(k)`` for the periodic multilayer."""
    k = np.asarray(k, dtype=float)
    g = spec.gyro / spec.ms
    b = g * (spec.zeeman + 2 * spec.j_ex) - 2 * g * (spec.j_ex * np.cos(k) - spec.d_dmi * np.sin(k))
    a = 1 + 1j * (spec.alpha_l + 2 * spec.alpha_nl * np.cos(k))
    return b / a


def llg_pbc_spectrum(spec: MultilayerSpec, n_k: int) -> DispersionLoop:
    if spec.boundary is not Boundary.PERIODIC:
        raise InvalidSpecError("llg_pbc_spectrum requires a periodic multilayer")
    if n_k < 3:
        raise ValueError("n_k must be >= 3")
    k = momentum_grid(n_k)
    return DispersionLoop(k, bloch_frequency(spec, k), spec)


@dataclass
class BalanceReport:
    """Bilayer couplings ``M_12``/``M_21`` minimised over the DMI strength."""

    target: float            # alpha_nl mu0 Ms H
    target_with_exchange: float  # alpha_nl (mu0 Ms H + J)
    d_min_12: float
    d_min_21: float
    residual_12: float
    residual_21: float
    sweep_d: np.ndarray
    sweep_m12: np.ndarray
    sweep_m21: np.ndarray

    @property
    def relative_deviation(self) -> float:
        """Worst of ``| |D_min| / target - 1 |`` over both couplings."""
        return max(abs(abs(self.d_min_12) / self.target - 1), abs(abs(self.d_min_21) / self.target - 1))


def _offdiag(spec: MultilayerSpec, d: float) -> tuple[float, float]:
    m = linearized_dynamical_matrix(spec.replace(d_dmi=d)).dyn_matrix
    return abs(m[0, 1]), abs(m[1, 0])


def bilayer_balance_check(spec: MultilayerSpec, n_sweep: int = 401) -> BalanceReport:
    """Locate the DMI values that switch off one bilayer coupling.

    A coarse sweep over ``|D| <= 4 alpha_nl mu0 Ms H`` (at least +-1e-6)
    brackets each minimum, which is then refined with a bounded scalar
    minimiser.
    """
    if spec.n_layers != 2:
        raise InvalidSpecError("bilayer_balance_check needs n_layers = 2")
    target = spec.alpha_nl * spec.zeeman
    span = max(4 * target, 1e-6)
    ds = np.linspace(-span, span, n_sweep)
    vals = np.array([_offdiag(spec, d) for d in ds])
    found = []
    for col in (0, 1):
        i = int(np.argmin(vals[:, col]))
        lo, hi = ds[max(i - 1, 0)], ds[min(i + 1, n_sweep - 1)]
        res = minimize_scalar(lambda d: _offdiag(spec, d)[col], bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-14 * max(span, 1.0)})
        found.append((float(res.x), float(res.fun)))
    return BalanceReport(
        target=target,
        target_with_exchange=spec.alpha_nl * (spec.zeeman + spec.j_ex),
        d_min_12=found[0][0], d_min_21=found[1][0],
        residual_12=found[0][1], residual_21=found[1][1],
        sweep_d=ds, sweep_m12=vals[:, 0], sweep_m21=vals[:, 1],
    )


FIG3B = dict(j_ex=1.0, d_dmi=0.5, h_field=1.0, alpha_l=0.002, alpha_nl=0.001)


def figure3b_preset(n_layers: int = 64, boundary=Boundary.PERIODIC) -> MultilayerSpec:
    """Damping values from the figure; ``J = 1, D = 0.5, H = 1`` are illustrative."""
    return MultilayerSpec(n_layers, boundary=boundary, **FIG3B)
