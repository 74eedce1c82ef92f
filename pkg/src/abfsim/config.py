"""Experiment configuration: dataclasses plus a strict key=value format.

The on-disk format is one ``section.key=value`` pair per line (``#``
comments allowed), e.g.::

    experiment=v1-abf
    sim.beta=10.0
    kernel.epsilon=0.01
    init.center=-1.0,0.0

Unknown keys are rejected with the offending line, values are coerced
to the dataclass field types, and serialize/parse round-trips exactly
(floats are written with repr). Tuples are comma-separated.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import get_args, get_origin, get_type_hints

from .dynamics import InitialCondition, SimulationConfig
from .errors import ConfigurationError
from .kernels import KernelSpec
from .potentials import GaussianTerm, QuarticTerm, make_potential


@dataclass(frozen=True)
class PotentialConfig:
    """Which landscape to simulate.

    ``period`` and ``dim`` matter for 'sine_quadratic' (period) and
    'custom' (both); the named landscapes fix their own. For 'custom',
    ``gaussians`` is ';'-separated ``amplitude:c1:...:cd[:width]`` terms
    and ``quartics`` is ';'-separated ``axis:coeff[:center]`` terms.
    """

    name: str = "v1"
    period: float = 4.0
    dim: int = 2
    gaussians: str = ""
    quartics: str = ""


@dataclass(frozen=True)
class KernelConfig:
    epsilon: float = 0.01
    alpha: float = 0.0


@dataclass(frozen=True)
class GridConfig:
    m: int = 200


@dataclass(frozen=True)
class ReferenceConfig:
    y_max: float = 6.0
    n_quad: int = 200


@dataclass(frozen=True)
class ProfileConfig:
    """Time-averaging schedule of the reported force profile: skip the
    first ``burn_frac`` of the steps, then use every ``every``-th."""

    every: int = 1
    burn_frac: float = 0.25


@dataclass(frozen=True)
class SweepConfig:
    n_values: tuple[int, ...] = (125, 250, 500, 1000, 2000)
    eps_values: tuple[float, ...] = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)


@dataclass(frozen=True)
class PdeConfig:
    m1: int = 128
    m2: int = 128
    y_max: float = 4.0
    times: tuple[float, ...] = (0.25, 0.5, 1.0)
    bins: int = 10


@dataclass
class ExperimentConfig:
    experiment: str = "v1-abf"
    seeds: int = 1
    potential: PotentialConfig = field(default_factory=PotentialConfig)
    sim: SimulationConfig = field(default_factory=SimulationConfig)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    init: InitialCondition = field(default_factory=InitialCondition)
    grid: GridConfig = field(default_factory=GridConfig)
    reference: ReferenceConfig = field(default_factory=ReferenceConfig)
    profile: ProfileConfig = field(default_factory=ProfileConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    pde: PdeConfig = field(default_factory=PdeConfig)


_SECTIONS = {
    "potential": PotentialConfig,
    "sim": SimulationConfig,
    "kernel": KernelConfig,
    "init": InitialCondition,
    "grid": GridConfig,
    "reference": ReferenceConfig,
    "profile": ProfileConfig,
    "sweep": SweepConfig,
    "pde": PdeConfig,
}
_TOP_KEYS = {"experiment": str, "seeds": int}


def _format_value(value):
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg):
    """Stable text form; parse(serialize(cfg)) == cfg."""
    lines = []
    for key, _ in _TOP_KEYS.items():
        lines.append(f"{key}={_format_value(getattr(cfg, key))}")
    for section, cls in _SECTIONS.items():
        obj = getattr(cfg, section)
        for f in dataclasses.fields(cls):
            lines.append(
                f"{section}.{f.name}={_format_value(getattr(obj, f.name))}"
            )
    return "\n".join(lines) + "\n"


def _coerce(raw, target, key):
    origin = get_origin(target)
    try:
        if origin is tuple:
            elem = get_args(target)[0]
            raw = raw.strip()
            if not raw:
                return ()
            return tuple(_coerce(part, elem, key) for part in raw.split(","))
        if target is float:
            return float(raw)
        if target is int:
            val = int(raw)
            return val
        if target is str:
            return raw
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {key}: {exc}") from None
    raise ConfigurationError(f"unsupported field type for {key}: {target}")


def apply_override(cfg, key, raw):
    """Set one dotted key on a copy of the config."""
    key = key.strip()
    if key in _TOP_KEYS:
        value = _coerce(raw, _TOP_KEYS[key], key)
        return dataclasses.replace(cfg, **{key: value})
    if "." not in key:
        raise ConfigurationError(f"unknown config key '{key}'")
    section, _, name = key.partition(".")
    cls = _SECTIONS.get(section)
    if cls is None:
        raise ConfigurationError(
            f"unknown config section '{section}' in key '{key}'"
        )
    hints = get_type_hints(cls)
    if name not in hints:
        valid = ", ".join(f"{section}.{f.name}" for f in dataclasses.fields(cls))
        raise ConfigurationError(f"unknown config key '{key}' (valid: {valid})")
    value = _coerce(raw, hints[name], key)
    try:
        new_section = dataclasses.replace(getattr(cfg, section), **{name: value})
    except ConfigurationError:
        raise
    except Exception as exc:
        raise ConfigurationError(f"bad value for {key}: {exc}") from exc
    return dataclasses.replace(cfg, **{section: new_section})


def apply_overrides(cfg, pairs):
    """Apply 'key=value' strings in order."""
    for pair in pairs:
        if "=" not in pair:
            raise ConfigurationError(
                f"override '{pair}' is not of the form key=value"
            )
        key, _, raw = pair.partition("=")
        cfg = apply_override(cfg, key, raw)
    return cfg


def parse_config_text(text, base=None):
    cfg = dataclasses.replace(base) if base is not None else ExperimentConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigurationError(
                f"line {lineno}: expected key=value, got '{line.rstrip()}'"
            )
        key, _, raw = stripped.partition("=")
        try:
            cfg = apply_override(cfg, key, raw.strip())
        except ConfigurationError as exc:
            raise ConfigurationError(f"line {lineno}: {exc}") from None
    return cfg


def parse_config(path, base=None):
    """Parse a config file; unknown keys are errors."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text, base=base)


def _parse_terms(text, parser, what):
    terms = []
    for i, chunk in enumerate(filter(None, (c.strip() for c in text.split(";")))):
        parts = chunk.split(":")
        try:
            terms.append(parser(parts))
        except (ValueError, IndexError) as exc:
            raise ConfigurationError(
                f"bad {what} term #{i + 1} '{chunk}': {exc}"
            ) from None
    return terms


def build_potential(pc):
    """Instantiate the potential described by a PotentialConfig."""
    if pc.name == "sine_quadratic":
        return make_potential(pc.name, period=pc.period)
    if pc.name == "custom":
        def gauss(parts):
            if len(parts) == pc.dim + 2:
                width = float(parts[-1])
                parts = parts[:-1]
            elif len(parts) == pc.dim + 1:
                width = 1.0
            else:
                raise ValueError(
                    f"expected amplitude:{pc.dim} centers[:width], got "
                    f"{len(parts)} fields"
                )
            return GaussianTerm(
                float(parts[0]), tuple(float(p) for p in parts[1:]), width
            )

        def quart(parts):
            if len(parts) not in (2, 3):
                raise ValueError("expected axis:coeff[:center]")
            center = float(parts[2]) if len(parts) == 3 else 0.0
            return QuarticTerm(int(parts[0]), float(parts[1]), center)

        return make_potential(
            "custom",
            gaussians=_parse_terms(pc.gaussians, gauss, "gaussian"),
            quartics=_parse_terms(pc.quartics, quart, "quartic"),
            dim=pc.dim,
            period=pc.period,
        )
    return make_potential(pc.name)


def build_kernel(cfg, potential=None):
    """KernelSpec for a config (period taken from the potential)."""
    period = potential.period if potential is not None else cfg.potential.period
    return KernelSpec(
        epsilon=cfg.kernel.epsilon, alpha=cfg.kernel.alpha, period=period
    )


def validate_config(cfg):
    """Build the derived objects once so bad values fail early.

    Returns (potential, kernel_spec).
    """
    if cfg.seeds < 1:
        raise ConfigurationError(f"seeds must be >= 1, got {cfg.seeds}")
    if not 0 <= cfg.profile.burn_frac < 1:
        raise ConfigurationError(
            f"profile.burn_frac must be in [0, 1), got {cfg.profile.burn_frac}"
        )
    if cfg.profile.every < 1:
        raise ConfigurationError(
            f"profile.every must be >= 1, got {cfg.profile.every}"
        )
    if cfg.grid.m < 1:
        raise ConfigurationError(f"grid.m must be >= 1, got {cfg.grid.m}")
    if cfg.pde.m1 < 2 or cfg.pde.m2 < 2:
        raise ConfigurationError("pde.m1 and pde.m2 must be >= 2")
    if cfg.pde.bins < 1:
        raise ConfigurationError(f"pde.bins must be >= 1, got {cfg.pde.bins}")
    potential = build_potential(cfg.potential)
    kernel = build_kernel(cfg, potential)
    return potential, kernel
