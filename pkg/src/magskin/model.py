"""Microscopic chain parameters and the coupling matrices derived from them.

Sites are indexed from 0 internally.  Only the I/O layer (``cli``) speaks
1-based site numbers.

Conventions
-----------
``j_mat``        coherent exchange, Hermitian with zero diagonal.
``gamma_mat``    correlated decay (spin loss), Hermitian PSD.
``gamma_tilde``  correlated pump, Hermitian PSD.

The quadratic magnon generator is ``H_m = i*Omega + s*(i*conj(J) + Gamma)``,
and the single-particle hopping matrix is ``h = -i*H_m`` so that the
second-quantised magnon Hamiltonian reads ``a^dag h a`` with
``h[a+1, a] = gamma_R``, ``h[a, a+1] = gamma_L`` and ``h[a, a] = eps_0``
for the nearest-neighbour chain.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidSpecError, RegimeError

HERMITIAN_TOL = 1e-12
PSD_REL_TOL = 1e-12


class Boundary(str, enum.Enum):
    OPEN = "open"
    PERIODIC = "periodic"

    @classmethod
    def parse(cls, value) -> "Boundary":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise InvalidSpecError(f"boundary must be 'open' or 'periodic', got {value!r}") from None


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def _check_hermitian(name: str, m: np.ndarray) -> None:
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    err = float(np.abs(m - m.conj().T).max(initial=0.0))
    if err > HERMITIAN_TOL * scale:
        raise InvalidSpecError(f"{name} is not Hermitian (max |M - M^H| = {err:.3e})")


def check_psd(name: str, m: np.ndarray) -> None:
    """Reject a Hermitian matrix with an eigenvalue below ``-1e-12 * max diag``."""
    if m.size == 0:
        return
    lam = np.linalg.eigvalsh(m)
    slack = PSD_REL_TOL * max(float(np.real(np.diag(m)).max()), 0.0)
    if lam[0] < -slack:
        raise InvalidSpecError(
            f"{name} is not positive semidefinite: eigenvalue {lam[0]:.6g} < 0"
        )


@dataclass(frozen=True)
class ChainSpec:
    """General dissipative spin chain.

    ``omega`` are the Zeeman frequencies, ``j_mat``/``gamma_mat``/
    ``gamma_tilde_mat`` the coherent, decay and pump coupling matrices.
    ``boundary`` is informational; the bonds live in the matrices.
    """

    n_sites: int
    spin_s: float
    omega: np.ndarray
    j_mat: np.ndarray
    gamma_mat: np.ndarray
    gamma_tilde_mat: np.ndarray | None = None
    boundary: Boundary = Boundary.OPEN

    def __post_init__(self):
        n = int(self.n_sites)
        if n < 1:
            raise InvalidSpecError(f"n_sites must be positive, got {self.n_sites}")
        if not (np.isfinite(self.spin_s) and self.spin_s > 0):
            raise InvalidSpecError(f"spin_s must be positive, got {self.spin_s}")
        omega = np.broadcast_to(np.asarray(self.omega, dtype=float), (n,)).copy()
        if not np.all(np.isfinite(omega)) or np.any(omega <= 0):
            raise InvalidSpecError("omega entries must be strictly positive")
        omega.setflags(write=False)
        gt = np.zeros((n, n)) if self.gamma_tilde_mat is None else self.gamma_tilde_mat
        mats = {}
        for name, m in (("j_mat", self.j_mat), ("gamma_mat", self.gamma_mat), ("gamma_tilde_mat", gt)):
            m = _frozen(m)
            if m.shape != (n, n):
                raise InvalidSpecError(f"{name} must have shape ({n}, {n}), got {m.shape}")
            if not np.all(np.isfinite(m)):
                raise InvalidSpecError(f"{name} has non-finite entries")
            _check_hermitian(name, m)
            mats[name] = m
        if np.any(np.diag(mats["j_mat"]) != 0):
            raise InvalidSpecError("j_mat must have zero diagonal")
        check_psd("gamma_mat", mats["gamma_mat"])
        check_psd("gamma_tilde_mat", mats["gamma_tilde_mat"])

        object.__setattr__(self, "n_sites", n)
        object.__setattr__(self, "spin_s", float(self.spin_s))
        object.__setattr__(self, "omega", omega)
        for name, m in mats.items():
            object.__setattr__(self, name, m)
        object.__setattr__(self, "boundary", Boundary.parse(self.boundary))

    @property
    def has_pump(self) -> bool:
        return bool(np.any(self.gamma_tilde_mat != 0))


@dataclass(frozen=True)
class NNChainSpec:
    """Uniform nearest-neighbour chain.

    Couplings: ``J + iD`` on every bond ``(a, a+1)``, symmetric nonlocal
    decay ``gamma`` on every bond and local decay ``gamma0`` on site.
    Positivity of the resulting decay matrix is only enforced by
    :func:`nn_to_general`, so bare dispersion formulas can be evaluated
    for arbitrary parameters.
    """

    n_sites: int
    spin_s: float = 1.0
    omega: float = 1.0
    gamma0: float = 0.0
    gamma: float = 0.0
    j_sym: float = 0.0
    d_asym: float = 0.0
    boundary: Boundary = Boundary.OPEN

    def __post_init__(self):
        if int(self.n_sites) < 1:
            raise InvalidSpecError(f"n_sites must be positive, got {self.n_sites}")
        if not (np.isfinite(self.spin_s) and self.spin_s > 0):
            raise InvalidSpecError(f"spin_s must be positive, got {self.spin_s}")
        for name in ("omega", "gamma0", "gamma", "j_sym", "d_asym"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise InvalidSpecError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.gamma0 < 0:
            raise InvalidSpecError(f"gamma0 must be >= 0, got {self.gamma0}")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        object.__setattr__(self, "spin_s", float(self.spin_s))
        object.__setattr__(self, "boundary", Boundary.parse(self.boundary))

    def replace(self, **changes) -> "NNChainSpec":
        return replace(self, **changes)


@dataclass(frozen=True)
class HoppingAmplitudes:
    gamma_r: complex
    gamma_l: complex
    eps0: complex

    @property
    def ratio(self) -> float:
        """``|gamma_R / gamma_L|``; ``inf`` when ``gamma_L`` vanishes."""
        if self.gamma_l == 0:
            return np.inf
        return abs(self.gamma_r / self.gamma_l)


def _bonds(n: int, boundary: Boundary) -> list[tuple[int, int]]:
    bonds = [(a, a + 1) for a in range(n - 1)]
    if boundary is Boundary.PERIODIC:
        bonds.append((n - 1, 0))
    return bonds


def nn_to_general(spec: NNChainSpec) -> ChainSpec:
    """Expand a nearest-neighbour spec into full coupling matrices.

    Periodic chains need at least three sites so that the wrap bond is
    distinct from the bulk bonds.
    """
    n = spec.n_sites
    if spec.boundary is Boundary.PERIODIC and n < 3:
        raise InvalidSpecError(f"periodic chains need n_sites >= 3, got {n}")
    j = np.zeros((n, n), dtype=complex)
    g = np.diag(np.full(n, spec.gamma0)).astype(complex)
    coupling = complex(spec.j_sym, spec.d_asym)
    for a, b in _bonds(n, spec.boundary):
        j[a, b] += coupling
        j[b, a] += coupling.conjugate()
        g[a, b] += spec.gamma
        g[b, a] += spec.gamma
    check_psd("gamma_mat", g)
    return ChainSpec(n, spec.spin_s, np.full(n, spec.omega), j, g, None, spec.boundary)


def build_knh(spec: ChainSpec) -> np.ndarray:
    """Transverse coupling of the conditional Hamiltonian, ``i J* + G + Gt*``."""
    return 1j * spec.j_mat.conj() + spec.gamma_mat + spec.gamma_tilde_mat.conj()


def build_kl(spec: ChainSpec) -> np.ndarray:
    """Transverse coupling of the full Liouvillian moments, ``-i J + G* - Gt``."""
    return -1j * spec.j_mat + spec.gamma_mat.conj() - spec.gamma_tilde_mat


def _require_no_pump(spec: ChainSpec, what: str) -> None:
    if spec.has_pump:
        raise RegimeError(f"{what} requires gamma_tilde = 0 (zero-temperature, undriven reservoir)")


def build_hm(spec: ChainSpec) -> np.ndarray:
    """Quadratic magnon generator ``H_m = i Omega + s (i J* + Gamma)``."""
    _require_no_pump(spec, "build_hm")
    return 1j * np.diag(spec.omega) + spec.spin_s * (1j * spec.j_mat.conj() + spec.gamma_mat)


def hopping_matrix(spec: ChainSpec) -> np.ndarray:
    """Single-particle matrix ``h = -i H_m`` of ``a^dag h a``."""
    return -1j * build_hm(spec)


def hopping_amplitudes(spec: NNChainSpec) -> HoppingAmplitudes:
    s, j, d, g = spec.spin_s, spec.j_sym, spec.d_asym, spec.gamma
    return HoppingAmplitudes(
        gamma_r=s * complex(j, d - g),
        gamma_l=s * complex(j, -(d + g)),
        eps0=complex(spec.omega, -s * spec.gamma0),
    )


def hopping_matrix_from_amplitudes(amps: HoppingAmplitudes, n: int, boundary: Boundary = Boundary.OPEN) -> np.ndarray:
    """Tridiagonal (or circulant) Hatano-Nelson matrix assembled directly."""
    boundary = Boundary.parse(boundary)
    h = np.diag(np.full(n, amps.eps0, dtype=complex))
    for a, b in _bonds(n, boundary):
        h[b, a] += amps.gamma_r
        h[a, b] += amps.gamma_l
    return h
