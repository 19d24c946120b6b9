"""Command-line entry point.

Usage::

    magskin COMMAND (--preset NAME | --config FILE) [--out PATH] [--format csv|json]
                    [--nk N] [--tmax T] [--nt N] [--cutoff M] [--seed S]

Commands: spectrum, skin-modes, dynamics, liouville-check, llg-spectrum,
llg-dynamics, verify.  Sites are numbered from 1 in all output.

Exit status: 0 success, 2 invalid input/spec, 3 numerical failure,
4 verification failure.  Errors print one line to stderr::

    magskin: error[invalid-spec]: <message>
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__, dynamics, linalg, liouville, llg, model, presets, spectra
from .config import Command, OutputFormat, RunConfig, parse_config
from .errors import (ConfigError, InvalidSpecError, NoPointGapError, NumericalError, RegimeError, SizeError,
                     VerificationError)
from .linalg import set_distance
from .model import Boundary

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_VERIFY = 0, 2, 3, 4
SCHEMA_VERSION = 1

DEFAULT_NK = 256
LIOUVILLE_TOL = 1e-8
LLG_DEFAULT_LAYERS = 9
LLG_DEFAULT_TILT = 0.01


def fmt_float(x) -> str:
    return format(float(x) + 0.0, ".17g")  # + 0.0 drops the sign of -0.0


def _fmt_meta(value):
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    if isinstance(value, complex):
        return f"{fmt_float(value.real)}{'+' if value.imag >= 0 else '-'}{fmt_float(abs(value.imag))}j"
    if isinstance(value, (float, np.floating)):
        return fmt_float(value)
    if isinstance(value, np.integer):
        return int(value)
    return str(value)


class Table:
    """Columns plus provenance/metadata, serialisable as CSV or JSON."""

    def __init__(self, columns, rows, provenance=None, meta=None):
        self.columns = list(columns)
        self.rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if self.rows.size and self.rows.shape[1] != len(self.columns):
            raise ValueError("row width does not match columns")
        self.provenance = {k: _fmt_meta(v) for k, v in (provenance or {}).items()}
        self.meta = {k: _fmt_meta(v) for k, v in (meta or {}).items()}

    def to_csv(self) -> str:
        lines = [f"# provenance.{k}: {self.provenance[k]}" for k in sorted(self.provenance)]
        lines += [f"# {k}: {self.meta[k]}" for k in sorted(self.meta)]
        lines.append(",".join(self.columns))
        lines += [",".join(fmt_float(x) for x in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        token = "\x00DATA\x00"
        doc = {
            "schema_version": SCHEMA_VERSION,
            "provenance": self.provenance,
            "meta": self.meta,
            "columns": self.columns,
            "data": token,
        }
        text = json.dumps(doc, indent=1, sort_keys=True)
        data = ",\n  ".join("[" + ", ".join(fmt_float(x) for x in row) + "]" for row in self.rows)
        return text.replace(json.dumps(token), "[\n  " + data + "\n ]") + "\n"

    def render(self, fmt: OutputFormat) -> str:
        return self.to_json() if fmt is OutputFormat.JSON else self.to_csv()


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(table: Table, cfg: RunConfig) -> None:
    text = table.render(cfg.fmt)
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        write_atomic(cfg.out, text)


# --- spec resolution ----------------------------------------------------------


def _preset(cfg: RunConfig):
    return presets.get(cfg.preset) if cfg.preset else None


def _chain(cfg: RunConfig) -> tuple[model.NNChainSpec, dict, presets.Preset | None]:
    p = _preset(cfg)
    if p is not None:
        if p.chain is None:
            raise ConfigError(f"preset {p.name!r} does not define a spin chain")
        return p.chain, dict(p.provenance), p
    if cfg.chain is None:
        raise ConfigError("this command needs a [chain] specification (--preset or --config)")
    return cfg.chain, {"source": str(cfg.config_path)}, None


def _multilayer(cfg: RunConfig) -> tuple[llg.MultilayerSpec, dict, presets.Preset | None]:
    p = _preset(cfg)
    if p is not None:
        if p.multilayer is None:
            raise ConfigError(f"preset {p.name!r} does not define a multilayer")
        return p.multilayer, dict(p.provenance), p
    if cfg.multilayer is None:
        raise ConfigError("this command needs an [llg] specification (--preset or --config)")
    return cfg.multilayer, {"source": str(cfg.config_path)}, None


def _source(cfg: RunConfig, n: int, p) -> int:
    if cfg.source is not None:
        site = cfg.source - 1
    elif p is not None:
        site = p.source_site
    else:
        site = (n - 1) // 2
    if not 0 <= site < n:
        raise ConfigError(f"source site {site + 1} outside 1..{n}")
    return site


def _times(cfg: RunConfig, p, default_tmax: float, default_nt: int) -> np.ndarray:
    tmax = cfg.tmax if cfg.tmax is not None else (p.tmax if p is not None else default_tmax)
    nt = cfg.nt if cfg.nt is not None else (p.nt if p is not None else default_nt)
    if tmax <= 0 or nt < 2:
        raise ConfigError("need tmax > 0 and nt >= 2")
    return np.linspace(0.0, tmax, nt)


def _site_cols(prefix: str, n: int) -> list[str]:
    return [f"{prefix}{a}" for a in range(1, n + 1)]


# --- commands -----------------------------------------------------------------


def cmd_spectrum(cfg: RunConfig) -> Table:
    nn, prov, _ = _chain(cfg)
    model.nn_to_general(nn)
    nk = cfg.nk or DEFAULT_NK
    loop = spectra.pbc_dispersion(nn, nk)
    meta = {"nk": nk, "area": loop.signed_area(), "centroid": loop.centroid(),
            "radius_min": float(loop.radii().min()), "radius_max": float(loop.radii().max())}
    try:
        ref = spectra.point_gap_reference(loop)
        meta["winding"] = spectra.winding_number(loop, ref).winding
    except NoPointGapError:
        meta["winding"] = "none (no point gap)"
    if nk <= linalg.MAX_EIG_DIM:  # dense cross-check against the nk-site ring
        ring = model.nn_to_general(nn.replace(n_sites=nk, boundary=Boundary.PERIODIC))
        meta["circulant_max_deviation"] = set_distance(
            linalg.eigvals(model.hopping_matrix(ring)), loop.energies)
    rows = np.column_stack([loop.k_values, loop.energies.real, loop.energies.imag])
    return Table(["k", "re_energy", "im_energy"], rows, prov, meta)


def cmd_skin_modes(cfg: RunConfig) -> Table:
    nn, prov, _ = _chain(cfg)
    nn = nn.replace(boundary=Boundary.OPEN)
    modes = spectra.obc_modes(model.nn_to_general(nn))
    amps = model.hopping_amplitudes(nn)
    rows = [[i + 1, lam.real, lam.imag, *prof.densities] for i, (lam, prof) in enumerate(modes)]
    meta = {"gamma_r": amps.gamma_r, "gamma_l": amps.gamma_l, "eps0": amps.eps0,
            "ratio_abs_gr_over_gl": amps.ratio}
    return Table(["mode", "re_eigenvalue", "im_eigenvalue", *_site_cols("n_", nn.n_sites)], rows, prov, meta)


def cmd_dynamics(cfg: RunConfig) -> Table:
    nn, prov, p = _chain(cfg)
    chain = model.nn_to_general(nn)
    src = _source(cfg, nn.n_sites, p)
    times = _times(cfg, p, dynamics.FIGURE2_TMAX, dynamics.FIGURE2_NT)
    rec = dynamics.density_trajectory(chain, dynamics.CorrelationState.single_magnon(nn.n_sites, src), times)
    rows = np.column_stack([rec.times, rec.densities, rec.total_number, rec.asymmetry(src)])
    meta = {"source_site": src + 1, "asymmetry": "sum(n_a, a>source) - sum(n_a, a<source)"}
    return Table(["t", *_site_cols("n_", nn.n_sites), "total", "asymmetry"], rows, prov, meta)


def cmd_liouville_check(cfg: RunConfig) -> tuple[Table, bool]:
    nn, prov, p = _chain(cfg)
    chain = model.nn_to_general(nn)
    fock = liouville.FockSpec(nn.n_sites, cfg.cutoff)
    rep = liouville.combination_rule_check(chain, fock, LIOUVILLE_TOL)
    src = _source(cfg, nn.n_sites, p)
    times = np.linspace(0.0, cfg.tmax if cfg.tmax is not None else 4.0, cfg.nt or 50)
    exact = liouville.evolve_exact(chain, fock, liouville.single_excitation(fock, src), times)
    gauss = dynamics.density_trajectory(chain, dynamics.CorrelationState.single_magnon(nn.n_sites, src), times)
    dev = float(np.abs(exact.record.densities - gauss.densities).max())
    order = np.lexsort((rep.eigenvalues.imag, rep.eigenvalues.real))
    combo = np.array([-(np.dot(n, rep.rapidities) + np.dot(m, rep.rapidities.conj()))
                      for n, m in rep.combinations])
    rows = np.column_stack([rep.eigenvalues.real, rep.eigenvalues.imag, combo.real, combo.imag, rep.distances])[order]
    passed = rep.passed and dev <= LIOUVILLE_TOL
    meta = {"cutoff": cfg.cutoff, "fock_dimension": fock.dimension, "max_match_distance": rep.max_distance,
            "orphans": len(rep.orphans), "gaussian_exact_max_deviation": dev, "tolerance": LIOUVILLE_TOL,
            "trace_error": exact.trace_error, "leakage_rate": exact.leakage, "passed": passed}
    table = Table(["re_eigenvalue", "im_eigenvalue", "re_combination", "im_combination", "distance"], rows, prov, meta)
    return table, passed


def cmd_llg_spectrum(cfg: RunConfig) -> Table:
    ml, prov, _ = _multilayer(cfg)
    nk = cfg.nk or DEFAULT_NK
    ml = ml.replace(boundary=Boundary.PERIODIC, n_layers=max(nk, 3))
    loop = llg.llg_pbc_spectrum(ml, nk)
    meta = {"nk": nk, "area": loop.signed_area(), "ellipticity": loop.ellipticity(),
            "max_imag": float(loop.energies.imag.max())}
    if nk <= linalg.MAX_EIG_DIM:
        numeric = llg.linearized_dynamical_matrix(ml).frequencies()
        meta["circulant_max_deviation"] = set_distance(numeric, loop.energies)
    rows = np.column_stack([loop.k_values, loop.energies.real, loop.energies.imag])
    return Table(["k", "re_omega", "im_omega"], rows, prov, meta)


def cmd_llg_dynamics(cfg: RunConfig) -> Table:
    ml, prov, p = _multilayer(cfg)
    if p is not None and p.name == "fig3b":
        ml = ml.replace(n_layers=LLG_DEFAULT_LAYERS, boundary=Boundary.OPEN)
        prov["chosen"] = prov.get("chosen", "") + f"; dynamics on {LLG_DEFAULT_LAYERS} open layers"
    n = ml.n_layers
    src = _source(cfg, n, p if p is None or p.name != "fig3b" else None)
    tilt = cfg.tilt if cfg.tilt is not None else LLG_DEFAULT_TILT
    times = _times(cfg, None, 20.0, 201) if p is None else _times(cfg, p, 20.0, 201)
    rate = (ml.gyro / ml.ms) * (ml.zeeman + 4 * abs(ml.j_ex) + 4 * abs(ml.d_dmi))
    sample_dt = times[1] - times[0]
    steps = max(1, int(np.ceil(sample_dt * rate / 5e-2)))
    dt = sample_dt / steps
    state0 = llg.MagnetizationState.tilted(n, tilt, layers=[src])
    tr = llg.integrate(ml, state0, dt, times[-1], sample_every=steps)
    cols = ["t"] + [f"m{a}_{c}" for a in range(1, n + 1) for c in "xyz"] + ["norm_drift"]
    rows = np.column_stack([tr.times, tr.m.reshape(len(tr.times), -1), tr.norm_drift])
    meta = {"dt": dt, "tilted_layer": src + 1, "tilt_rad": tilt}
    return Table(cols, rows, prov, meta)


def cmd_verify(cfg: RunConfig) -> tuple[Table, bool]:
    from .verify import run_all

    results = run_all()
    for r in results:
        print(r.line())
    rows = [[i + 1, float(r.passed), r.measured, r.tolerance] for i, r in enumerate(results)]
    meta = {f"check_{i + 1}": r.line() for i, r in enumerate(results)}
    table = Table(["criterion", "passed", "measured", "tolerance"], rows, {"suite": "acceptance"}, meta)
    return table, all(r.passed for r in results)


COMMANDS = {
    Command.SPECTRUM: cmd_spectrum,
    Command.SKIN_MODES: cmd_skin_modes,
    Command.DYNAMICS: cmd_dynamics,
    Command.LIOUVILLE_CHECK: cmd_liouville_check,
    Command.LLG_SPECTRUM: cmd_llg_spectrum,
    Command.LLG_DYNAMICS: cmd_llg_dynamics,
    Command.VERIFY: cmd_verify,
}


def run(cfg: RunConfig) -> int:
    """Execute ``cfg`` and return the exit status (exceptions propagate)."""
    if cfg.command is None:
        raise ConfigError("no command given")
    if cfg.command is not Command.VERIFY and cfg.preset and (cfg.chain or cfg.multilayer):
        raise ConfigError("give either --preset or explicit parameters, not both")
    result = COMMANDS[cfg.command](cfg)
    table, passed = result if isinstance(result, tuple) else (result, True)
    if cfg.command is not Command.VERIFY or cfg.out is not None:
        emit(table, cfg)
    if not passed:
        raise VerificationError(f"{cfg.command.value}: verification failed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="magskin",
        description="Skin-effect spectra, magnon correlation dynamics, Lindblad checks and multilayer LLG runs.",
        epilog="exit status: 0 ok, 2 invalid input/spec, 3 numerical failure, 4 verification failure",
    )
    ap.add_argument("--version", action="version", version=f"magskin {__version__}")
    ap.add_argument("command", choices=[c.value for c in Command])
    src = ap.add_mutually_exclusive_group()
    src.add_argument("--preset", help=f"one of: {', '.join(sorted([*presets.PRESETS, *presets.ALIASES]))}")
    src.add_argument("--config", type=Path, help="key = value configuration file")
    ap.add_argument("--out", type=Path, help="output file (default: stdout)")
    ap.add_argument("--format", choices=[f.value for f in OutputFormat], default=None)
    ap.add_argument("--nk", type=int, help="number of momenta on the PBC loop")
    ap.add_argument("--tmax", type=float, help="final time")
    ap.add_argument("--nt", type=int, help="number of time samples")
    ap.add_argument("--cutoff", type=int, help="Fock-space cutoff (max total magnons)")
    ap.add_argument("--source", type=int, help="initially excited site/layer (1-based)")
    ap.add_argument("--seed", type=int, help="seed for randomised checks")
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = parse_config(args.config) if args.config else RunConfig()
    cfg.command = Command(args.command)
    cfg.preset = args.preset
    for name in ("out", "nk", "tmax", "nt", "cutoff", "source", "seed"):
        value = getattr(args, name)
        if value is not None:
            setattr(cfg, name, value)
    if args.format:
        cfg.fmt = OutputFormat(args.format)
    return cfg


_ERROR_KIND = [
    (VerificationError, "verification", EXIT_VERIFY),
    (NumericalError, "numerical", EXIT_NUMERICAL),
    (InvalidSpecError, "invalid-spec", EXIT_INVALID),
    (RegimeError, "regime", EXIT_INVALID),
    (SizeError, "size", EXIT_INVALID),
    (ConfigError, "config", EXIT_INVALID),
    (ValueError, "invalid-input", EXIT_INVALID),  # e.g. too few momenta or samples
]


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        return run(config_from_args(args))
    except tuple(e for e, _, _ in _ERROR_KIND) as exc:
        kind, code = next((k, c) for e, k, c in _ERROR_KIND if isinstance(exc, e))
        message = " ".join(str(exc).split())
        print(f"magskin: error[{kind}]: {message}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
