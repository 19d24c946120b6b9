"""Exact bosonic Lindblad oracle and third-quantisation structure.

The zero-temperature magnon Lindbladian is built on a truncated Fock space
(total magnon number <= M) and used to check the Gaussian correlation
dynamics and the rapidity combination rule.

Conventions
-----------
* Basis: occupation tuples graded by total number ``m = 0..M``; inside a
  sector tuples are in descending lexicographic order, so the one-magnon
  sector lists sites in order ``(1,0,..), (0,1,..), ...``.
* Vectorisation: column stacking, ``vec(A rho B) = (B^T kron A) vec(rho)``.
* Superoperator::

      L rho = -i[H, rho] + sum_ab 2s Gamma_ab (a_b rho a_a^dag - 1/2 {a_a^dag a_b, rho})

  with ``H = a^dag (Omega + s conj(J)) a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import numpy as np

from . import linalg
from .dynamics import TrajectoryRecord, _check_times
from .errors import InvalidSpecError, RegimeError, SizeError
from .model import ChainSpec, build_hm

# dense superoperator budget: (dim^2)^2 entries
MAX_SUPEROP_ENTRIES = 4_000_000
LEAKAGE_TOL = 1e-12
MATCH_TOL = 1e-8


def _sector(n_sites: int, m: int) -> list[tuple[int, ...]]:
    if n_sites == 1:
        return [(m,)]
    out = []
    for first in range(m, -1, -1):
        out.extend((first,) + rest for rest in _sector(n_sites - 1, m - first))
    return out


@dataclass(frozen=True)
class FockSpec:
    """Truncated bosonic space of ``n_sites`` modes with at most ``cutoff`` quanta."""

    n_sites: int
    cutoff: int

    def __post_init__(self):
        if self.n_sites < 1:
            raise InvalidSpecError("n_sites must be positive")
        if self.cutoff < 1:
            raise InvalidSpecError("cutoff must be >= 1")

    @property
    def dimension(self) -> int:
        return sum(comb(self.n_sites + m - 1, m) for m in range(self.cutoff + 1))

    @cached_property
    def basis(self) -> list[tuple[int, ...]]:
        return [occ for m in range(self.cutoff + 1) for occ in _sector(self.n_sites, m)]

    @cached_property
    def index(self) -> dict[tuple[int, ...], int]:
        return {occ: i for i, occ in enumerate(self.basis)}

    @cached_property
    def annihilators(self) -> list[np.ndarray]:
        """Matrices of ``a_1..a_N`` restricted to the truncated space."""
        dim = self.dimension
        ops = []
        for site in range(self.n_sites):
            a = np.zeros((dim, dim))
            for j, occ in enumerate(self.basis):
                if occ[site]:
                    lowered = occ[:site] + (occ[site] - 1,) + occ[site + 1:]
                    a[self.index[lowered], j] = np.sqrt(occ[site])
            ops.append(a)
        return ops

    @cached_property
    def number_operator(self) -> np.ndarray:
        return np.diag([float(sum(occ)) for occ in self.basis])

    def basis_state(self, occupations) -> np.ndarray:
        v = np.zeros(self.dimension, dtype=complex)
        v[self.index[tuple(int(x) for x in occupations)]] = 1.0
        return v


@dataclass(frozen=True)
class DensityMatrix:
    rho: np.ndarray

    def __post_init__(self):
        r = np.array(self.rho, dtype=complex)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise InvalidSpecError("density matrix must be square")
        if np.abs(r - r.conj().T).max() > 1e-10:
            raise InvalidSpecError("density matrix is not Hermitian")
        if abs(np.trace(r) - 1) > 1e-10:
            raise InvalidSpecError(f"density matrix trace is {np.trace(r).real:.12g}, not 1")
        if np.linalg.eigvalsh(r)[0] < -1e-10:
            raise InvalidSpecError("density matrix is not positive semidefinite")
        r.setflags(write=False)
        object.__setattr__(self, "rho", r)

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))


@dataclass(frozen=True)
class StructureMatrixX:
    x: np.ndarray
    offset: float

    @property
    def blocks(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.x.shape[0] // 2
        return self.x[:n, :n], self.x[n:, n:]


def _require_no_pump(spec: ChainSpec) -> None:
    if spec.has_pump:
        raise RegimeError("exact magnon Lindbladian is implemented for gamma_tilde = 0 only")


def third_quantization_x(spec: ChainSpec) -> StructureMatrixX:
    """``X = diag(H_m, conj(H_m)) / 2`` and the scalar offset ``s Tr Gamma``."""
    _require_no_pump(spec)
    hm = build_hm(spec)
    n = spec.n_sites
    x = np.zeros((2 * n, 2 * n), dtype=complex)
    x[:n, :n] = 0.5 * hm
    x[n:, n:] = 0.5 * hm.conj()
    return StructureMatrixX(x, float(spec.spin_s * np.trace(spec.gamma_mat).real))


def rapidity_spectrum(spec: ChainSpec) -> np.ndarray:
    """Eigenvalues of ``H_m`` sorted by real then imaginary part."""
    lam = linalg.eigvals(build_hm(spec))
    return lam[np.lexsort((lam.imag, lam.real))]


def _check_size(fock: FockSpec) -> None:
    entries = fock.dimension ** 4
    if entries > MAX_SUPEROP_ENTRIES:
        raise SizeError(
            f"superoperator would have {entries} entries (dim {fock.dimension}); "
            f"budget is {MAX_SUPEROP_ENTRIES}"
        )


def _check_fock(spec: ChainSpec, fock: FockSpec) -> None:
    if fock.n_sites != spec.n_sites:
        raise InvalidSpecError(f"Fock space has {fock.n_sites} modes, chain has {spec.n_sites} sites")


def magnon_operators(spec: ChainSpec, fock: FockSpec) -> tuple[np.ndarray, list[tuple[complex, np.ndarray, np.ndarray]]]:
    """Hamiltonian and weighted jump pairs ``(2s Gamma_ab, a_a, a_b)``."""
    a = fock.annihilators
    coh = np.diag(spec.omega) + spec.spin_s * spec.j_mat.conj()
    dim = fock.dimension
    ham = np.zeros((dim, dim), dtype=complex)
    jumps = []
    n = spec.n_sites
    for i in range(n):
        for j in range(n):
            if coh[i, j] != 0:
                ham += coh[i, j] * (a[i].T @ a[j])
            if spec.gamma_mat[i, j] != 0:
                jumps.append((2 * spec.spin_s * spec.gamma_mat[i, j], a[i], a[j]))
    return ham, jumps


def truncated_liouvillian(spec: ChainSpec, fock: FockSpec) -> np.ndarray:
    """Column-stacked Lindblad superoperator on the truncated space."""
    _require_no_pump(spec)
    _check_fock(spec, fock)
    _check_size(fock)
    ham, jumps = magnon_operators(spec, fock)
    dim = fock.dimension
    eye = np.eye(dim)
    heff = ham.astype(complex)
    sup = np.zeros((dim * dim, dim * dim), dtype=complex)
    for rate, a_i, a_j in jumps:
        heff = heff - 0.5j * rate * (a_i.T @ a_j)
        # a_j rho a_i^dag -> kron((a_i^dag)^T, a_j) = kron(a_i, a_j) for real a
        sup += rate * np.kron(a_i, a_j)
    sup += -1j * np.kron(eye, heff) + 1j * np.kron(heff.conj(), eye)
    return sup


def leakage_rate(spec: ChainSpec, fock: FockSpec) -> float:
    """Largest generator matrix element out of the truncated space.

    Builds the Hamiltonian and jumps with one extra quantum of room and
    measures their couplings from sectors ``<= M`` into sector ``M + 1``.
    Zero means the truncation is exact for states inside the space.
    """
    big = FockSpec(fock.n_sites, fock.cutoff + 1)
    ham, jumps = magnon_operators(spec, big)
    inside = fock.dimension
    worst = float(np.abs(ham[inside:, :inside]).max(initial=0.0))
    for rate, a_i, a_j in jumps:
        worst = max(worst, abs(rate) * float(np.abs(a_j[inside:, :inside]).max(initial=0.0)),
                    abs(rate) * float(np.abs((a_i.T @ a_j)[inside:, :inside]).max(initial=0.0)))
    return worst


@dataclass
class CombinationReport:
    eigenvalues: np.ndarray
    distances: np.ndarray
    combinations: list[tuple[tuple[int, ...], tuple[int, ...]]]
    rapidities: np.ndarray
    tol: float = MATCH_TOL
    orphans: list[int] = field(default_factory=list)

    @property
    def max_distance(self) -> float:
        return float(self.distances.max(initial=0.0))

    @property
    def passed(self) -> bool:
        return not self.orphans


def _compositions(total: int, parts: int):
    """All nonnegative integer tuples of length ``parts`` summing to ``<= total``."""
    if parts == 0:
        yield ()
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


def combination_rule_check(spec: ChainSpec, fock: FockSpec, tol: float = MATCH_TOL) -> CombinationReport:
    """Match every Liouvillian eigenvalue to ``-sum(n_j lam_j + m_j conj(lam_j))``.

    ``lam_j`` are the rapidities; ``n_j, m_j >= 0`` with total at most
    ``2M``.  Eigenvalues farther than ``tol`` from every combination are
    reported as orphans.
    """
    sup = truncated_liouvillian(spec, fock)
    ev = linalg.eigvals(sup)
    lam = rapidity_spectrum(spec)
    n = lam.size
    combos = []
    values = []
    for c in _compositions(2 * fock.cutoff, 2 * n):
        ns, ms = c[:n], c[n:]
        combos.append((ns, ms))
        values.append(-(np.dot(ns, lam) + np.dot(ms, lam.conj())))
    values = np.asarray(values)
    dist = np.abs(ev[:, None] - values[None, :])
    best = dist.argmin(axis=1)
    distances = dist[np.arange(ev.size), best]
    orphans = [int(i) for i in np.flatnonzero(distances > tol)]
    return CombinationReport(ev, distances, [combos[b] for b in best], lam, tol, orphans)


def correlation_from_rho(fock: FockSpec, rho: np.ndarray) -> np.ndarray:
    """``C[a, b] = Tr(rho a_a^dag a_b)``."""
    a = fock.annihilators
    n = fock.n_sites
    c = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            c[i, j] = np.trace(rho @ (a[i].T @ a[j]))
    return c


def single_excitation(fock: FockSpec, site: int) -> DensityMatrix:
    """Pure one-magnon Fock state on the 0-based ``site``."""
    occ = [0] * fock.n_sites
    occ[site] = 1
    return DensityMatrix.pure(fock.basis_state(occ))


def vacuum(fock: FockSpec) -> DensityMatrix:
    return DensityMatrix.pure(fock.basis_state([0] * fock.n_sites))


@dataclass
class ExactEvolution:
    record: TrajectoryRecord
    final: DensityMatrix
    correlations: np.ndarray  # (len(times), N, N)
    trace_error: float
    min_eigenvalue: float
    leakage: float


def evolve_exact(spec: ChainSpec, fock: FockSpec, rho0: DensityMatrix, times) -> ExactEvolution:
    """Exact ``rho(t) = exp(L t) rho0`` sampled at ``times``.

    Also records the worst trace error, the most negative eigenvalue of
    ``rho(t)`` and the truncation leakage rate (which must vanish).
    """
    _check_fock(spec, fock)
    times = _check_times(times)
    if rho0.rho.shape != (fock.dimension, fock.dimension):
        raise InvalidSpecError(f"rho0 has shape {rho0.rho.shape}, expected dimension {fock.dimension}")
    leak = leakage_rate(spec, fock)
    if leak > LEAKAGE_TOL:
        raise RegimeError(f"truncation is not closed: leakage rate {leak:.3e}")
    sup = truncated_liouvillian(spec, fock)
    dim = fock.dimension
    v0 = rho0.rho.reshape(-1, order="F")
    cs = np.empty((times.size, spec.n_sites, spec.n_sites), dtype=complex)
    trace_err = 0.0
    min_eig = np.inf
    rho = rho0.rho
    for k, t in enumerate(times):
        rho = (linalg.expm(sup * t) @ v0).reshape(dim, dim, order="F")
        rho = 0.5 * (rho + rho.conj().T)
        trace_err = max(trace_err, abs(np.trace(rho) - 1))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(rho)[0]))
        cs[k] = correlation_from_rho(fock, rho)
    dens = np.real(np.einsum("tii->ti", cs))
    record = TrajectoryRecord(times, dens, dens.sum(axis=1))
    final = DensityMatrix(rho / np.trace(rho).real)
    return ExactEvolution(record, final, cs, float(trace_err), min_eig, leak)
