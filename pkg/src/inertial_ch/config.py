"""Run configuration files.

A config is a flat key/value text file with three sections::

    [problem]
    dim = 1
    n = 32
    epsilon = 0.1
    f = 0, -1, 0, 1          # coefficients, constant term first
    g = zero                 # preset name or coefficient list

    [integrator]
    scheme = etd
    dt = 1e-3
    T = 10

    [experiment]
    u0 = random
    rng_seed = 7
    output_dir = out

Unknown sections or keys, malformed numbers and out-of-range values raise
:class:`ConfigError` carrying the line (and column) of the offending entry.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .diagnostics import OBSERVERS
from .dynamics import SCHEMES, IntegratorConfig, State
from .model import Nonlinearity, ProblemConfig
from .rng import make_rng
from .spectral import DomainSpec, SpectralField, eigenvalues

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "G_PRESETS", "U0_PRESETS"]

G_PRESETS = ("zero", "mode1", "smooth")
U0_PRESETS = ("zero", "mode1", "smooth", "random", "rough")


class ConfigError(ValueError):
    """Malformed or invalid configuration; ``line``/``column`` are 1-based when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None, path: str | None = None):
        self.line, self.column, self.path = line, column, path
        loc = ""
        if line is not None:
            loc = f"line {line}" + (f", column {column}" if column is not None else "")
        where = ":".join(x for x in (path or "", loc) if x)
        super().__init__(f"{where}: {message}" if where else message)
        self.message = message


def _floats(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",")]
    if not parts or any(p == "" for p in parts):
        raise ValueError("empty entry in list")
    return tuple(float(p) for p in parts)


def _ints(text: str) -> tuple[int, ...]:
    parts = [p.strip() for p in text.split(",")]
    out = []
    for p in parts:
        if not re.fullmatch(r"[+-]?\d+", p):
            raise ValueError(f"{p!r} is not an integer")
        out.append(int(p))
    return tuple(out)


def _int(text: str) -> int:
    (v,) = _ints(text)
    return v


def _float(text: str) -> float:
    v = float(text)
    if not np.isfinite(v):
        raise ValueError("value must be finite")
    return v


def _names(text: str) -> tuple[str, ...]:
    parts = tuple(p.strip() for p in text.split(",") if p.strip())
    return parts


def _str(text: str) -> str:
    if not text.strip():
        raise ValueError("empty value")
    return text.strip()


def _opt_float(text: str):
    t = text.strip().lower()
    if t in ("auto", "none"):
        return None
    return _float(text)


def _coeff_or_preset(text: str):
    t = text.strip()
    if re.fullmatch(r"[A-Za-z_]\w*", t):
        return t
    return _floats(t)


# lower-case key -> (parser, default); keys are case-insensitive
_FIELD = {"l": "L", "l0": "L0", "t": "T"}

SCHEMA: dict[str, dict[str, tuple]] = {
    "problem": {
        "dim": (_int, 1),
        "n": (_int, 32),
        "epsilon": (_float, 1.0),
        "f": (_floats, (0.0, -1.0, 0.0, 1.0)),
        "g": (_coeff_or_preset, "zero"),
        "g_amplitude": (_float, 1.0),
        "l": (_opt_float, None),
        "l0": (_float, 0.0),
    },
    "integrator": {
        "scheme": (_str, "etd"),
        "dt": (_float, 1e-3),
        "tol": (_float, 1e-10),
        "record_every": (_int, 1),
        "t": (_float, 10.0),
    },
    "experiment": {
        "u0": (_coeff_or_preset, "random"),
        "u0_amplitude": (_float, 1.0),
        "u0_decay": (_float, 2.0),
        "rng_seed": (_int, 0),
        "observers": (_names, ("energy", "x0_norm", "v_norms")),
        "output_dir": (_str, "output"),
        "checkpoints": (_int, 1),
        "catalog": (_str, None),
        "beta": (_float, 0.5),
        "seed_count": (_int, 8),
        "gaps": (_floats, (1e-1, 1e-2, 1e-3)),
        "cutoff": (_str, "bump"),
        "glue_direction": (_coeff_or_preset, "mode1"),
        "t0": (_float, 0.0),
        "lowpass_m": (_int, None),
        "eps_list": (_floats, (1e-2, 1e-3, 1e-4)),
        "n_list": (_ints, (8, 16, 32)),
        "t_tail": (_float, None),
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration (the echo stored in snapshots and reports)."""

    dim: int = 1
    n: int = 32
    epsilon: float = 1.0
    f: tuple = (0.0, -1.0, 0.0, 1.0)
    g: object = "zero"
    g_amplitude: float = 1.0
    L: float | None = None
    L0: float = 0.0
    scheme: str = "etd"
    dt: float = 1e-3
    tol: float = 1e-10
    record_every: int = 1
    T: float = 10.0
    u0: object = "random"
    u0_amplitude: float = 1.0
    u0_decay: float = 2.0
    rng_seed: int = 0
    observers: tuple = ("energy", "x0_norm", "v_norms")
    output_dir: str = "output"
    checkpoints: int = 1
    catalog: str | None = None
    beta: float = 0.5
    seed_count: int = 8
    gaps: tuple = (1e-1, 1e-2, 1e-3)
    cutoff: str = "bump"
    glue_direction: object = "mode1"
    t0: float = 0.0
    lowpass_m: int | None = None
    eps_list: tuple = (1e-2, 1e-3, 1e-4)
    n_list: tuple = (8, 16, 32)
    t_tail: float | None = None
    source: str | None = field(default=None, compare=False)

    # -- builders -----------------------------------------------------------------

    @property
    def domain(self) -> DomainSpec:
        return DomainSpec(self.dim)

    def nonlinearity(self) -> Nonlinearity:
        return Nonlinearity(self.f)

    def coefficient_field(self, spec, n: int | None = None, amplitude: float = 1.0, name: str = "g") -> SpectralField:
        n = self.n if n is None else n
        d = self.domain
        if isinstance(spec, str):
            if spec == "zero":
                return SpectralField.zeros(d, n)
            if spec == "mode1":
                return SpectralField.mode(d, n, (1,) * self.dim, amplitude)
            if spec == "smooth":
                lam = eigenvalues(d, n)
                idx = np.indices(lam.shape).sum(axis=0)
                sign = np.where(idx % 2 == 0, 1.0, -1.0)
                return SpectralField(d, amplitude * sign / lam**1.5)
            raise ConfigError(f"unknown preset {spec!r} for {name}")
        c = np.zeros((n,) * self.dim)
        vals = np.asarray(spec, dtype=float)
        if self.dim == 1:
            m = min(vals.size, n)
            c[:m] = vals[:m]
        else:
            side = int(round(np.sqrt(vals.size)))
            if side * side != vals.size:
                raise ConfigError(f"2-D coefficient list for {name} must have a square length")
            m = min(side, n)
            c[:m, :m] = vals.reshape(side, side)[:m, :m]
        return SpectralField(d, amplitude * c)

    def forcing(self, n: int | None = None) -> SpectralField:
        return self.coefficient_field(self.g, n, self.g_amplitude, "g")

    def problem(self, n: int | None = None, epsilon: float | None = None) -> ProblemConfig:
        n = self.n if n is None else n
        return ProblemConfig(
            epsilon=self.epsilon if epsilon is None else epsilon,
            g=self.forcing(n),
            domain=self.domain,
            L=0.0 if self.L is None else self.L,
            L0=self.L0,
        )

    def initial_field(self, n: int | None = None) -> SpectralField:
        """``u(0)``; random presets are drawn at the largest cutoff of the run and truncated."""
        n = self.n if n is None else n
        spec = self.u0
        d = self.domain
        if isinstance(spec, str) and spec in ("random", "rough", "smooth"):
            big = max([self.n, n] + list(self.n_list))
            decay = {"random": self.u0_decay, "rough": 1.1, "smooth": 2.0}[spec]
            rng = make_rng(self.rng_seed, f"u0:{spec}")
            lam = eigenvalues(d, big)
            draw = rng.standard_normal(lam.shape)
            if spec == "smooth":
                draw = np.sign(draw)
            full = self.u0_amplitude * draw / np.sqrt(lam) ** decay
            return SpectralField(d, full[(slice(0, n),) * self.dim].copy())
        return self.coefficient_field(spec, n, self.u0_amplitude, "u0")

    def initial_state(self, n: int | None = None) -> State:
        u = self.initial_field(n)
        return State(u, SpectralField.zeros(u.domain, u.n), 0.0)

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(scheme=self.scheme, dt=self.dt, tol=self.tol, record_every=self.record_every)

    def to_dict(self) -> dict:
        out = {}
        for k, v in asdict(self).items():
            if k == "source":
                continue
            out[k] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        kw = {}
        for k, v in data.items():
            if k not in cls.__dataclass_fields__ or k == "source":
                raise ConfigError(f"unknown key {k!r}")
            kw[k] = tuple(v) if isinstance(v, list) else v
        return cls(**kw)


def _locate(text: str) -> dict:
    """``(section, key) -> (line, column of value)`` from the raw text."""
    where = {}
    section = None
    for i, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"\[\s*([^\]]+?)\s*\]", s)
        if m:
            section = m.group(1).strip().lower()
            where[(section, None)] = (i, raw.index("[") + 1)
            continue
        m = re.match(r"\s*([^=:]+?)\s*[=:]\s*", raw)
        if m and section is not None:
            where[(section, m.group(1).strip().lower())] = (i, m.end() + 1)
    return where


def _strip_comment(value: str) -> str:
    return re.split(r"\s[#;]", value, maxsplit=1)[0].strip()


def parse_config(text: str, source: str | None = None) -> RunConfig:
    """Parse config text; every failure is a :class:`ConfigError` with a location."""
    where = _locate(text)
    cp = configparser.ConfigParser(interpolation=None, strict=True, delimiters=("=",), comment_prefixes=("#", ";"))
    cp.optionxform = str.lower
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("entry before the first [section] header", exc.lineno, 1, source) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno, 1, source) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno, 1, source) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line (expected 'key = value')", line, 1, source) from None
    except configparser.Error as exc:
        raise ConfigError(str(exc), None, None, source) from None

    values: dict = {}
    for section in cp.sections():
        key_sec = section.lower()
        if key_sec not in SCHEMA:
            line, col = where.get((key_sec, None), (None, None))
            raise ConfigError(f"unknown section [{section}]", line, col, source)
        schema = SCHEMA[key_sec]
        for key, raw in cp.items(section):
            line, col = where.get((key_sec, key), (None, None))
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in [{section}]", line, col, source)
            parser, _ = schema[key]
            try:
                val = parser(_strip_comment(raw))
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}", line, col, source) from None
            field_name = _FIELD.get(key, key)
            values[field_name] = (val, line, col)
    return _validate(values, source)


def _validate(values: dict, source: str | None) -> RunConfig:
    kw = {k: v[0] for k, v in values.items()}

    def fail(key, msg):
        line, col = values[key][1:] if key in values else (None, None)
        if key not in values:
            msg = f"{msg} (default value)"
        raise ConfigError(msg, line, col, source)

    cfg = RunConfig(source=source, **kw)
    if cfg.dim not in (1, 2):
        fail("dim", "dim must be 1 or 2")
    if cfg.n < 1:
        fail("n", "n must be a positive integer")
    if not 0 < cfg.epsilon <= 1:
        fail("epsilon", "epsilon must lie in (0, 1]")
    if cfg.scheme not in SCHEMES:
        fail("scheme", f"scheme must be one of {SCHEMES}")
    if not cfg.dt > 0:
        fail("dt", "dt must be positive")
    if not cfg.tol > 0:
        fail("tol", "tol must be positive")
    if cfg.record_every < 1:
        fail("record_every", "record_every must be >= 1")
    if not cfg.T >= 0:
        fail("T", "T must be nonnegative")
    if cfg.L is not None and cfg.L < 0:
        fail("L", "L must be nonnegative")
    if cfg.L0 < 0:
        fail("L0", "L0 must be nonnegative")
    if cfg.checkpoints < 1:
        fail("checkpoints", "checkpoints must be >= 1")
    if cfg.seed_count < 1:
        fail("seed_count", "seed_count must be >= 1")
    if cfg.rng_seed < 0:
        fail("rng_seed", "rng_seed must be nonnegative")
    if not 0 < cfg.beta <= 1:
        fail("beta", "beta must lie in (0, 1]")
    if cfg.cutoff not in ("bump", "smoothstep"):
        fail("cutoff", "cutoff must be 'bump' or 'smoothstep'")
    if cfg.lowpass_m is not None and not 1 <= cfg.lowpass_m <= cfg.n:
        fail("lowpass_m", f"lowpass_m must lie in [1, n={cfg.n}]")
    if any(not 0 < e <= 1 for e in cfg.eps_list):
        fail("eps_list", "every eps must lie in (0, 1]")
    if any(k < 1 for k in cfg.n_list):
        fail("n_list", "mode counts must be positive")
    if any(not x > 0 for x in cfg.gaps):
        fail("gaps", "gaps must be positive")
    for name in cfg.observers:
        if name not in OBSERVERS:
            fail("observers", f"unknown observer {name!r}; available: {', '.join(sorted(OBSERVERS))}")
    for key, presets in (("g", G_PRESETS), ("u0", U0_PRESETS), ("glue_direction", G_PRESETS)):
        val = getattr(cfg, key)
        if isinstance(val, str) and val not in presets:
            fail(key, f"unknown preset {val!r}; available: {', '.join(presets)}")
    if cfg.dim == 2:
        for key in ("g", "u0", "glue_direction"):
            val = getattr(cfg, key)
            if not isinstance(val, str) and int(round(np.sqrt(len(val)))) ** 2 != len(val):
                fail(key, "a 2-D coefficient list needs a square number of entries (row-major)")
    try:
        Nonlinearity(cfg.f)
    except ValueError as exc:
        fail("f", str(exc))
    return cfg


def load_config(path) -> RunConfig:
    """Read and parse a config file (``OSError`` propagates for missing files)."""
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    return parse_config(text, source=str(p))
