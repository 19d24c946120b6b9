"""Run configuration and the ``key = value`` config-file grammar.

Grammar::

    # comment (also allowed after a value)
    [chain]            # section header: chain (default), llg or run
    N = 9
    boundary = open

Keys are case-sensitive.  Unknown keys and sections are errors.  Site
numbers (``source``) are 1-based in files and on the command line.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .llg import MultilayerSpec
from .model import NNChainSpec


class Command(str, enum.Enum):
    SPECTRUM = "spectrum"
    SKIN_MODES = "skin-modes"
    DYNAMICS = "dynamics"
    LIOUVILLE_CHECK = "liouville-check"
    LLG_SPECTRUM = "llg-spectrum"
    LLG_DYNAMICS = "llg-dynamics"
    VERIFY = "verify"


class OutputFormat(str, enum.Enum):
    CSV = "csv"
    JSON = "json"


# key -> (constructor field, converter)
CHAIN_KEYS = {
    "N": ("n_sites", int),
    "s": ("spin_s", float),
    "omega": ("omega", float),
    "J": ("j_sym", float),
    "D": ("d_asym", float),
    "Gamma": ("gamma", float),
    "Gamma0": ("gamma0", float),
    "boundary": ("boundary", str),
}
LLG_KEYS = {
    "N": ("n_layers", int),
    "J": ("j_ex", float),
    "D": ("d_dmi", float),
    "alpha_l": ("alpha_l", float),
    "alpha_nl": ("alpha_nl", float),
    "H": ("h_field", float),
    "Ms": ("ms", float),
    "gamma": ("gyro", float),
    "mu0": ("mu0", float),
    "boundary": ("boundary", str),
}
RUN_KEYS = {
    "command": ("command", str),
    "nk": ("nk", int),
    "tmax": ("tmax", float),
    "nt": ("nt", int),
    "cutoff": ("cutoff", int),
    "source": ("source", int),
    "tilt": ("tilt", float),
    "format": ("fmt", str),
    "seed": ("seed", int),
}
SECTIONS = {"chain": CHAIN_KEYS, "llg": LLG_KEYS, "run": RUN_KEYS}

_SECTION_RE = re.compile(r"^\[\s*([A-Za-z_][\w-]*)\s*\]$")
_PAIR_RE = re.compile(r"^([A-Za-z_][\w]*)\s*=\s*(.*)$")


@dataclass
class RunConfig:
    command: Command | None = None
    preset: str | None = None
    config_path: Path | None = None
    chain: NNChainSpec | None = None
    multilayer: MultilayerSpec | None = None
    out: Path | None = None
    fmt: OutputFormat = OutputFormat.CSV
    nk: int | None = None
    tmax: float | None = None
    nt: int | None = None
    cutoff: int = 1
    seed: int = 0
    source: int | None = None  # 1-based
    tilt: float | None = None
    provenance: dict = field(default_factory=dict)


def _convert(conv, raw: str, key: str, lineno: int):
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse {key} = {raw!r} as {conv.__name__}") from None


def parse_text(text: str, origin: str = "<string>") -> RunConfig:
    values: dict[str, dict[str, object]] = {name: {} for name in SECTIONS}
    section = "chain"
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).lower()
            if section not in SECTIONS:
                raise ConfigError(f"{origin}:{lineno}: unknown section [{section}]; valid: {', '.join(SECTIONS)}")
            continue
        m = _PAIR_RE.match(line)
        if not m:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = m.group(1), m.group(2).strip()
        keys = SECTIONS[section]
        if key not in keys:
            raise ConfigError(
                f"{origin}:{lineno}: unknown key {key!r} in [{section}]; valid keys: {', '.join(keys)}"
            )
        if key in values[section]:
            raise ConfigError(f"{origin}:{lineno}: duplicate key {key!r}")
        values[section][key] = _convert(keys[key][1], raw, key, lineno)

    cfg = RunConfig()
    if values["chain"] and values["llg"]:
        raise ConfigError(f"{origin}: give either a [chain] or an [llg] section, not both")
    if values["chain"]:
        kwargs = {CHAIN_KEYS[k][0]: v for k, v in values["chain"].items()}
        if "n_sites" not in kwargs:
            raise ConfigError(f"{origin}: [chain] requires N")
        cfg.chain = NNChainSpec(**kwargs)
    if values["llg"]:
        kwargs = {LLG_KEYS[k][0]: v for k, v in values["llg"].items()}
        if "n_layers" not in kwargs:
            raise ConfigError(f"{origin}: [llg] requires N")
        cfg.multilayer = MultilayerSpec(**kwargs)
    for key, v in values["run"].items():
        name = RUN_KEYS[key][0]
        if name == "command":
            v = _enum(Command, v, "command")
        elif name == "fmt":
            v = _enum(OutputFormat, v, "format")
        setattr(cfg, name, v)
    return cfg


def _enum(cls, value, what):
    try:
        return cls(str(value).lower())
    except ValueError:
        raise ConfigError(f"invalid {what} {value!r}; valid: {', '.join(m.value for m in cls)}") from None


def parse_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cfg = parse_text(path.read_text(encoding="utf-8"), str(path))
    cfg.config_path = path
    return cfg
