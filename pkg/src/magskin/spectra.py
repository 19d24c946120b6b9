"""Spectral signatures of the skin effect.

PBC dispersion loops and their point gap/winding, OBC right eigenmodes
and the closed-form skin profile of the nearest-neighbour chain.

Winding sign: positive means the loop runs counterclockwise in the
complex energy plane as ``k`` increases through ``[0, 2*pi)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from . import linalg
from .errors import ConditioningError, DegenerateReferenceError, InvalidSpecError, NoPointGapError, RegimeError
from .model import Boundary, ChainSpec, NNChainSpec, hopping_amplitudes, hopping_matrix, nn_to_general

WINDING_INTEGER_TOL = 0.01
ON_LOOP_REL_TOL = 1e-9
AREA_REL_TOL = 1e-12
# eigenvector condition number above which obc_modes refuses to report densities
OBC_COND_LIMIT = 1e10


@dataclass(frozen=True)
class DispersionLoop:
    """Closed spectral loop sampled on a uniform momentum grid."""

    k_values: np.ndarray
    energies: np.ndarray
    params: Any = None

    @property
    def scale(self) -> float:
        e = self.energies
        return max(float(np.abs(e - e.mean()).max(initial=0.0)), float(np.abs(e).max(initial=0.0)), 1e-300)

    def centroid(self) -> complex:
        return complex(self.energies.mean())

    def signed_area(self) -> float:
        """Shoelace area of the closed polygon through the samples."""
        e = self.energies - self.energies.mean()
        x, y = e.real, e.imag
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def radii(self, center: complex | None = None) -> np.ndarray:
        c = self.centroid() if center is None else center
        return np.abs(self.energies - c)

    def ellipticity(self) -> float:
        """``(r_max - r_min) / (r_max + r_min)`` about the centroid; 0 for a circle."""
        r = self.radii()
        total = r.max() + r.min()
        return 0.0 if total == 0 else float((r.max() - r.min()) / total)


@dataclass(frozen=True)
class SkinProfile:
    mode_index: int
    densities: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        d = np.asarray(self.densities, dtype=float)
        if np.any(d < 0):
            raise ValueError("densities must be nonnegative")
        if self.normalized and not np.isclose(d.sum(), 1.0, rtol=0, atol=1e-12):
            raise ValueError(f"normalized profile sums to {d.sum()!r}")
        d.setflags(write=False)
        object.__setattr__(self, "densities", d)


@dataclass(frozen=True)
class WindingResult:
    reference_energy: complex
    winding: int
    loop: DispersionLoop


def dispersion_formula(spec: NNChainSpec, k) -> np.ndarray:
    """``eps_0 + 2s[(J cos k + D sin k) - i Gamma cos k]``."""
    k = np.asarray(k, dtype=float)
    s = spec.spin_s
    eps0 = hopping_amplitudes(spec).eps0
    return eps0 + 2 * s * ((spec.j_sym * np.cos(k) + spec.d_asym * np.sin(k)) - 1j * spec.gamma * np.cos(k))


def momentum_grid(n_k: int) -> np.ndarray:
    return 2 * np.pi * np.arange(n_k) / n_k


def pbc_dispersion(spec: NNChainSpec, n_k: int) -> DispersionLoop:
    if n_k < 3:
        raise ValueError(f"n_k must be >= 3, got {n_k}")
    k = momentum_grid(n_k)
    return DispersionLoop(k, dispersion_formula(spec, k), spec)


def circulant_spectrum(spec: NNChainSpec) -> np.ndarray:
    """Numerical eigenvalues of the periodic hopping matrix of ``spec``."""
    chain = nn_to_general(spec.replace(boundary=Boundary.PERIODIC))
    return linalg.eigvals(hopping_matrix(chain))


def obc_modes(spec: ChainSpec) -> list[tuple[complex, SkinProfile]]:
    """Right eigenmodes of the open chain's hopping matrix ``h = -i H_m``.

    Returns ``(eigenvalue, profile)`` pairs sorted by real part (then
    imaginary part).  Strictly triangular hopping (one hopping direction
    switched off) is defective; its single eigenvector sits on one edge
    and every returned profile is that edge state.

    Raises
    ------
    ConditioningError
        When the eigenvector basis is too ill-conditioned for the
        densities to be meaningful; use :func:`analytic_skin_profile`.
    """
    if spec.boundary is not Boundary.OPEN:
        raise InvalidSpecError("obc_modes requires an open chain")
    h = hopping_matrix(spec)
    n = spec.n_sites
    off = h - np.diag(np.diag(h))
    if not np.any(off):
        order = np.lexsort((np.diag(h).imag, np.diag(h).real))
        return [(complex(h[a, a]), SkinProfile(i + 1, np.eye(n)[a])) for i, a in enumerate(order)]
    if not np.any(np.tril(off)) or not np.any(np.triu(off)):
        return _triangular_modes(h)

    dec = linalg.eig(h).sorted()
    if dec.condition > OBC_COND_LIMIT:
        raise ConditioningError(
            f"obc_modes: eigenvector condition number {dec.condition:.2e} exceeds "
            f"{OBC_COND_LIMIT:.0e}; use analytic_skin_profile for strongly nonreciprocal chains",
            partial=dec, report={"condition": dec.condition},
        )
    out = []
    for i, lam in enumerate(dec.eigenvalues):
        dens = np.abs(dec.right_vectors[:, i]) ** 2
        out.append((complex(lam), SkinProfile(i + 1, dens / dens.sum())))
    return out


def _triangular_modes(h: np.ndarray) -> list[tuple[complex, SkinProfile]]:
    n = h.shape[0]
    lam = np.diag(h)
    if not np.allclose(lam, lam[0], rtol=0, atol=1e-14 * max(1.0, abs(lam[0]))):
        # distinct diagonal: the triangular system is diagonalisable
        dec = linalg.eig(h).sorted()
        return [(complex(l), SkinProfile(i + 1, np.abs(v) ** 2 / np.sum(np.abs(v) ** 2)))
                for i, (l, v) in enumerate(zip(dec.eigenvalues, dec.right_vectors.T))]
    edge = 0 if not np.any(np.tril(h, -1)) else n - 1
    dens = np.zeros(n)
    dens[edge] = 1.0
    return [(complex(lam[0]), SkinProfile(i + 1, dens)) for i in range(n)]


def analytic_skin_profile(spec: NNChainSpec, n: int, normalize: bool = True) -> SkinProfile:
    """Closed-form right-eigenmode density ``|gR/gL|^a sin^2(n a pi/(N+1))``.

    Sites ``a = 1..N``.  The raw expression has no normalisation constant;
    with ``normalize`` the profile is scaled to unit sum.
    """
    if spec.boundary is not Boundary.OPEN:
        raise InvalidSpecError("analytic_skin_profile requires an open chain")
    size = spec.n_sites
    if not 1 <= n <= size:
        raise ValueError(f"mode index n must be in 1..{size}, got {n}")
    amps = hopping_amplitudes(spec)
    if amps.gamma_l == 0:
        raise RegimeError("gamma_L = 0: ratio undefined (unidirectional chain); use obc_modes")
    alpha = np.arange(1, size + 1)
    dens = amps.ratio ** alpha * np.sin(n * alpha * np.pi / (size + 1)) ** 2
    if normalize:
        dens = dens / dens.sum()
    return SkinProfile(n, dens, normalize)


def analytic_obc_eigenvalues(spec: NNChainSpec) -> np.ndarray:
    """``eps_0 + 2 sqrt(gR gL) cos(n pi/(N+1))``, ``n = 1..N`` (principal root)."""
    amps = hopping_amplitudes(spec)
    n = np.arange(1, spec.n_sites + 1)
    return amps.eps0 + 2 * np.sqrt(complex(amps.gamma_r * amps.gamma_l)) * np.cos(n * np.pi / (spec.n_sites + 1))


def similarity_profiles(spec: NNChainSpec) -> list[tuple[complex, SkinProfile]]:
    """OBC modes via the diagonal similarity to a complex-symmetric chain.

    ``h = S h_sym S^-1`` with ``S = diag(r^a)``, ``r = sqrt(gR/gL)``.  The
    eigenvectors of ``h_sym`` are well conditioned, so this route stays
    accurate for long chains where direct eigenvectors of ``h`` do not.
    Densities are assembled in log space to avoid overflow.
    """
    amps = hopping_amplitudes(spec)
    if amps.gamma_l == 0 or amps.gamma_r == 0:
        raise RegimeError("similarity transform needs both hopping amplitudes nonzero")
    size = spec.n_sites
    t = np.sqrt(complex(amps.gamma_r * amps.gamma_l))
    h_sym = np.diag(np.full(size, amps.eps0)) + t * (np.eye(size, k=1) + np.eye(size, k=-1))
    dec = linalg.eig(h_sym).sorted()
    log_r2 = np.log(amps.ratio) * np.arange(1, size + 1)
    out = []
    for i, lam in enumerate(dec.eigenvalues):
        with np.errstate(divide="ignore"):
            logd = np.log(np.abs(dec.right_vectors[:, i]) ** 2) + log_r2
        logd -= logd.max()
        dens = np.exp(logd)
        out.append((complex(lam), SkinProfile(i + 1, dens / dens.sum())))
    return out


def winding_number(loop: DispersionLoop, e_ref: complex) -> WindingResult:
    """Net number of counterclockwise turns of ``eps(k) - e_ref``."""
    z = loop.energies - e_ref
    dist = float(np.abs(z).min())
    if dist <= ON_LOOP_REL_TOL * loop.scale:
        raise DegenerateReferenceError(f"reference energy {e_ref} lies on the loop (distance {dist:.3e})")
    steps = np.angle(np.roll(z, -1) / z)
    total = steps.sum() / (2 * np.pi)
    w = round(total)
    if abs(total - w) > WINDING_INTEGER_TOL:
        raise DegenerateReferenceError(
            f"accumulated phase {total:.4f} turns is not an integer; refine the k-grid"
        )
    return WindingResult(complex(e_ref), int(w), loop)


def point_gap_reference(loop: DispersionLoop) -> complex:
    """Centroid of the loop samples, used as winding reference.

    Raises :class:`NoPointGapError` when the loop encloses no area.
    """
    if abs(loop.signed_area()) <= AREA_REL_TOL * loop.scale ** 2:
        raise NoPointGapError("spectral loop encloses no area: no point gap")
    return loop.centroid()
