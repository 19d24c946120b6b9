"""End-to-end acceptance checks.

Each check returns a :class:`CheckResult`; ``run_all`` executes the full
suite (used by ``magskin verify`` and the test suite).
"""

from __future__ import annotations

import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dynamics, linalg, liouville, llg, model, spectra
from .errors import DegenerateReferenceError, NoPointGapError
from .model import Boundary, NNChainSpec


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: measured={self.measured:.3e} tol={self.tolerance:.1e} {self.detail}".rstrip()


def _fig2b(n_sites: int, boundary=Boundary.OPEN) -> NNChainSpec:
    return dynamics.figure2_nn_spec("B").replace(n_sites=n_sites, boundary=boundary)


def check_skin_profile(tol: float = 1e-8) -> CheckResult:
    """Numeric OBC densities vs the closed-form profile (fig 2(b) couplings)."""
    worst = 0.0
    for size in (5, 9, 15):
        nn = _fig2b(size)
        modes = spectra.obc_modes(model.nn_to_general(nn))
        lam = np.array([m[0] for m in modes])
        targets = spectra.analytic_obc_eigenvalues(nn)
        for n in (1, 2, size):
            idx = int(np.argmin(np.abs(lam - targets[n - 1])))
            ana = spectra.analytic_skin_profile(nn, n).densities
            worst = max(worst, float(np.abs(modes[idx][1].densities - ana).max()))
    return CheckResult("1 skin-profile formula", worst <= tol, worst, tol, "N in {5,9,15}, n in {1,2,N}")


def check_pbc_dispersion(tol: float = 1e-10) -> CheckResult:
    worst = 0.0
    for size in (8, 64):
        for variant in "ABC":
            nn = dynamics.figure2_nn_spec(variant).replace(n_sites=size, boundary=Boundary.PERIODIC)
            numeric = spectra.circulant_spectrum(nn)
            formula = spectra.pbc_dispersion(nn, size).energies
            worst = max(worst, linalg.set_distance(numeric, formula))
    return CheckResult("2 PBC dispersion vs circulant", worst <= tol, worst, tol, "N in {8,64}")


def check_winding(n_k: int = 512, tol: float = 1e-10) -> CheckResult:
    notes = []
    ok = True
    for variant in "AB":
        loop = spectra.pbc_dispersion(dynamics.figure2_nn_spec(variant), n_k)
        w = spectra.winding_number(loop, spectra.point_gap_reference(loop)).winding
        notes.append(f"w_{variant}={w}")
        ok &= abs(w) == 1
    nn_c = dynamics.figure2_nn_spec("C")
    loop_c = spectra.pbc_dispersion(nn_c, n_k)
    try:
        spectra.point_gap_reference(loop_c)
        ok = False
        notes.append("C: unexpected point gap")
    except NoPointGapError:
        notes.append("C: no gap")
    eps0 = model.hopping_amplitudes(nn_c).eps0
    for off in (0.3 * (1 + 1j), -0.7 * (1 + 1j), 5.0, 100.0j):
        try:
            w = spectra.winding_number(loop_c, eps0 + off).winding
        except DegenerateReferenceError:
            w = None
        ok &= w == 0
    notes.append("w_C=0" if ok else "w_C!=0")
    loop_a = spectra.pbc_dispersion(dynamics.figure2_nn_spec("A"), n_k)
    r = loop_a.radii()
    spread = float(r.max() - r.min())
    ok &= spread <= tol
    return CheckResult("3 winding / point gap / circle", ok, spread, tol, " ".join(notes))


def random_chain(rng: np.random.Generator, n_sites: int | None = None) -> model.ChainSpec:
    """Random valid chain without pump: Hermitian J, PSD Gamma = A A^H."""
    n = int(rng.integers(1, 7)) if n_sites is None else n_sites
    j = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    j = 0.5 * (j + j.conj().T)
    np.fill_diagonal(j, 0)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return model.ChainSpec(n, float(rng.uniform(0.5, 3)), rng.uniform(0.1, 2, n), j, a @ a.conj().T / n)


def check_k_equivalence(n_specs: int = 100, seed: int = 0, tol: float = 1e-14) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_specs):
        spec = random_chain(rng)
        worst = max(worst, float(np.abs(model.build_kl(spec) - model.build_knh(spec).conj()).max()))
    return CheckResult("4 K_L = conj(K_nh)", worst <= tol, worst, tol, f"{n_specs} random specs")


def check_gaussian_vs_exact(tol: float = 1e-8) -> CheckResult:
    chain = model.nn_to_general(_fig2b(3))
    fock = liouville.FockSpec(3, 1)
    times = np.linspace(0.0, 4.0, 50)
    exact = liouville.evolve_exact(chain, fock, liouville.single_excitation(fock, 1), times)
    gauss = dynamics.density_trajectory(chain, dynamics.CorrelationState.single_magnon(3, 1), times)
    dev = float(np.abs(exact.record.densities - gauss.densities).max())
    return CheckResult("5 Gaussian vs exact Lindblad", dev <= tol, dev, tol, "N=3, 50 samples")


def check_combination_rule(tol: float = 1e-8) -> CheckResult:
    chain = model.nn_to_general(_fig2b(2))
    rep = liouville.combination_rule_check(chain, liouville.FockSpec(2, 2), tol)
    return CheckResult("6 rapidity combination rule", rep.passed, rep.max_distance, tol,
                       f"{rep.eigenvalues.size} eigenvalues, {len(rep.orphans)} orphans")


def _trajectory(variant):
    spec, c0, times = dynamics.figure2_preset(variant)
    return dynamics.density_trajectory(spec, c0, times)


def check_figure2(tol: float = 1e-12, suppression: float = 1e3) -> CheckResult:
    src = dynamics.FIGURE2_SOURCE
    a = _trajectory("A").densities
    right_a = float(np.abs(a[:, src + 1:]).max())
    c = _trajectory("C").densities
    mirror = float(np.abs(c - c[:, ::-1]).max())
    peak_b = float(_trajectory("B").densities[:, 0].max())
    peak_d = float(_trajectory("D").densities[:, 0].max())
    ratio = peak_b / peak_d if peak_d > 0 else np.inf
    ok = right_a <= tol and mirror <= tol and ratio >= suppression
    return CheckResult("7 figure-2 qualitative", ok, max(right_a, mirror), tol,
                       f"A right={right_a:.1e} C mirror={mirror:.1e} B/D boundary peak={ratio:.2e}")


def check_monotone_number(rel: float = 1e-12) -> CheckResult:
    worst = 0.0
    for v in "ABCD":
        total = _trajectory(v).total_number
        inc = np.diff(total) / np.maximum(total[:-1], np.finfo(float).tiny)
        worst = max(worst, float(inc.max()))
    return CheckResult("8 monotone magnon number", worst <= rel, worst, rel, "presets A-D")


def check_llg(tol_drift: float = 1e-8, tol_closed: float = 1e-6, tol_area: float = 1e-12) -> CheckResult:
    alpha = 0.01
    spec = llg.MultilayerSpec(1, j_ex=0.0, alpha_l=alpha, h_field=1.0)
    w = spec.larmor / (1 + alpha ** 2)
    t_end = 10 * 2 * np.pi / w
    dt = 5e-3
    tr = llg.integrate(spec, llg.MagnetizationState.tilted(1, 0.3), dt, t_end, sample_every=50)
    t = tr.times
    theta = 2 * np.arctan(np.tan(0.15) * np.exp(-alpha * w * t))
    ref = np.stack([np.sin(theta) * np.cos(w * t), np.sin(theta) * np.sin(w * t), np.cos(theta)], axis=-1)
    closed = float(np.abs(tr.m[:, 0] - ref).max())
    drift = float(tr.norm_drift.max())

    fig = llg.figure3b_preset()
    loop = llg.llg_pbc_spectrum(fig, 256)
    area = abs(loop.signed_area())
    ell = loop.ellipticity()
    flat = max(abs(llg.llg_pbc_spectrum(fig.replace(alpha_nl=0.0), 256).signed_area()),
               abs(llg.llg_pbc_spectrum(fig.replace(d_dmi=0.0), 256).signed_area()))
    ok = drift < tol_drift and closed <= tol_closed and area > tol_area and ell > 0 and flat <= tol_area
    return CheckResult("9 LLG integrity", ok, closed, tol_closed,
                       f"drift={drift:.1e} area={area:.2e} ellipticity={ell:.3f} degenerate_area={flat:.1e}")


def check_bilayer_balance() -> CheckResult:
    spec = llg.MultilayerSpec(2, j_ex=0.0, d_dmi=0.0, alpha_l=0.002, alpha_nl=0.001, h_field=1.0)
    rep = llg.bilayer_balance_check(spec)
    bound = 10 * (spec.alpha_l + spec.alpha_nl)
    ok = rep.relative_deviation < bound and rep.d_min_12 < 0 < rep.d_min_21
    return CheckResult("10 bilayer balance", ok, rep.relative_deviation, bound,
                       f"D12={rep.d_min_12:.6e} D21={rep.d_min_21:.6e} target={rep.target:.1e}")


def check_determinism() -> CheckResult:
    from .cli import main

    runs = [
        ["dynamics", "--preset", "fig2a", "--format", "csv"],
        ["spectrum", "--preset", "fig1c-unidirectional", "--format", "json"],
        ["llg-spectrum", "--preset", "fig3b", "--format", "csv"],
    ]
    same = True
    with tempfile.TemporaryDirectory() as tmp:
        for i, argv in enumerate(runs):
            blobs = []
            for rep in range(2):
                out = Path(tmp) / f"run{i}_{rep}"
                code = main(argv + ["--out", str(out)])
                blobs.append(out.read_bytes() if code == 0 else None)
            same &= blobs[0] is not None and blobs[0] == blobs[1]
    return CheckResult("11 byte-identical CLI output", same, 0.0 if same else 1.0, 0.0, f"{len(runs)} commands x2")


ALL_CHECKS = [
    check_skin_profile, check_pbc_dispersion, check_winding, check_k_equivalence,
    check_gaussian_vs_exact, check_combination_rule, check_figure2, check_monotone_number,
    check_llg, check_bilayer_balance, check_determinism,
]


def run_all(checks=ALL_CHECKS) -> list[CheckResult]:
    results = []
    for check in checks:
        try:
            results.append(check())
        except Exception as exc:  # a crashing check is a failed check
            results.append(CheckResult(check.__name__, False, np.nan, np.nan, f"{type(exc).__name__}: {exc}"))
    return results
