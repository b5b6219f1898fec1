"""Simulation parameters and the ``key = value`` config format.

Omitted keys take the values of the wall-heating experiment (time step
0.1, horizon 120, ``mu = lambda = 0.15``, ``kappa = 1``, ``alpha = 0.005``,
``eps_B = 0.05``, ``L = 2 pi``, ``s = 0.05 pi``, ``s_b = 0.1 s``).
"""

import ast
import dataclasses
import math
import operator
from dataclasses import dataclass, fields

from .errors import ConfigError

# config-file key -> dataclass attribute, where they differ
_KEY_TO_ATTR = {"lambda": "lam"}
_ATTR_TO_KEY = {v: k for k, v in _KEY_TO_ATTR.items()}

_CHOICES = {
    "weight_convention": ("as_printed", "none_on_temperature"),
    "heating": ("ramp", "constant", "none"),
    "source": ("gaussian", "none"),
    "wall_gradient": ("one_sided", "zero"),
    "multiplier": ("euler", "expm"),
}


@dataclass(frozen=True)
class SimConfig:
    mu: float = 0.15
    lam: float = 0.15
    kappa: float = 1.0
    alpha: float = 0.005
    rho0: float = 1.0
    eps_B: float = 0.05
    eps_cutoff: float | None = None  # defaults to s
    L: float = 2.0 * math.pi
    s: float = 0.05 * math.pi
    s_b: float | None = None  # defaults to 0.1 * s
    dt: float = 0.1
    T: float = 120.0
    snapshot_times: tuple | None = None  # defaults to (0, 40, 80, 120) * T / 120
    N_copies: int = 1
    seed: int = 0
    freeze_rho: bool = False
    weight_convention: str = "as_printed"
    truncation: float = 100.0
    theta0: float = 0.01
    heating: str = "ramp"
    theta_b_const: float = 0.0
    heat_rate: float = 0.25
    heat_hold_time: float = 80.0
    source: str = "gaussian"
    source_rate: float = 0.05
    wall_gradient: str = "zero"
    multiplier: str = "euler"
    picard: int = 1
    paired_noise: bool = True
    strip_points: int = 10
    freeze_velocity: bool = False

    def __post_init__(self):
        if self.snapshot_times is not None:
            object.__setattr__(self, "snapshot_times",
                               tuple(float(t) for t in self.snapshot_times))
        validate(self)

    @property
    def eps(self):
        """Thickness of the cut-off layer."""
        return self.s if self.eps_cutoff is None else self.eps_cutoff

    @property
    def sb(self):
        return 0.1 * self.s if self.s_b is None else self.s_b

    @property
    def n_refine(self):
        """Number of wall sub-intervals per coarse cell (``s / s_b``)."""
        return int(round(self.s / self.sb))

    @property
    def n_half(self):
        """Coarse cells per half-width ``L / s``."""
        return int(round(self.L / self.s))

    @property
    def n_steps(self):
        return int(round(self.T / self.dt))

    @property
    def snapshots(self):
        if self.snapshot_times is not None:
            return self.snapshot_times
        return tuple(t * self.T / 120.0 for t in (0.0, 40.0, 80.0, 120.0))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


_POSITIVE = ("kappa", "rho0", "eps_B", "L", "s", "dt", "truncation")
_NON_NEGATIVE = ("mu", "lam", "T", "seed", "heat_hold_time")


def _is_multiple(a, b):
    k = a / b
    return abs(k - round(k)) < 1e-9 * max(1.0, k) and round(k) >= 1


def validate(cfg):
    for name in _POSITIVE:
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{key_of(name)} must be positive", key=key_of(name))
    for name in _NON_NEGATIVE:
        if not getattr(cfg, name) >= 0:
            raise ConfigError(f"{key_of(name)} must be non-negative", key=key_of(name))
    if cfg.eps_cutoff is not None and not cfg.eps_cutoff > 0:
        raise ConfigError("eps_cutoff must be positive", key="eps_cutoff")
    if cfg.s_b is not None and not cfg.s_b > 0:
        raise ConfigError("s_b must be positive", key="s_b")
    if not _is_multiple(cfg.s, cfg.sb):
        raise ConfigError("s_b must divide s", key="s_b")
    if not _is_multiple(cfg.L, cfg.s):
        raise ConfigError("s must divide L", key="s")
    if not _is_multiple(cfg.T, cfg.dt) and cfg.T != 0:
        raise ConfigError("dt must divide T", key="dt")
    for name in ("N_copies", "picard", "strip_points"):
        if int(getattr(cfg, name)) < 1:
            raise ConfigError(f"{name} must be at least 1", key=name)
    for name, allowed in _CHOICES.items():
        if getattr(cfg, name) not in allowed:
            raise ConfigError(f"{name} must be one of {allowed}", key=name)
    if cfg.snapshot_times is not None:
        if any(t < 0 or t > cfg.T + 1e-9 for t in cfg.snapshot_times):
            raise ConfigError("snapshot_times must lie in [0, T]", key="snapshot_times")


def key_of(attr):
    return _ATTR_TO_KEY.get(attr, attr)


# --- text format -----------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub,
           ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}


def _eval_number(text):
    """Evaluate a numeric literal; ``pi`` and + - * / ** are allowed."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return node.value
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError(text)
    return ev(ast.parse(text.strip(), mode="eval"))


def _parse_value(f, raw):
    raw = raw.strip()
    kind = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    if "None" in kind and raw.lower() in ("auto", "none", ""):
        return None
    if kind.startswith("bool"):
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(raw)
    if kind.startswith("int"):
        v = _eval_number(raw)
        if float(v) != int(v):
            raise ValueError(raw)
        return int(v)
    if kind.startswith("float"):
        return float(_eval_number(raw))
    if kind.startswith("tuple"):
        parts = [p for p in raw.replace(";", ",").split(",") if p.strip()]
        return tuple(float(_eval_number(p)) for p in parts)
    return raw


def parse_config_text(text):
    attrs = {f.name: f for f in fields(SimConfig)}
    values = {}
    lines = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", line=lineno)
        key, raw = (part.strip() for part in body.split("=", 1))
        attr = _KEY_TO_ATTR.get(key, key)
        if attr not in attrs:
            raise ConfigError(f"unknown key {key!r}", key=key, line=lineno)
        if attr in values:
            raise ConfigError(f"duplicate key {key!r}", key=key, line=lineno)
        try:
            values[attr] = _parse_value(attrs[attr], raw)
        except (ValueError, SyntaxError, ZeroDivisionError):
            raise ConfigError(f"cannot parse value {raw!r} for {key}", key=key,
                              line=lineno) from None
        lines[attr] = lineno
    try:
        return SimConfig(**values)
    except ConfigError as err:
        attr = _KEY_TO_ATTR.get(err.key, err.key)
        raise ConfigError(str(err), key=err.key, line=lines.get(attr)) from None


def parse_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def _format_value(v):
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(repr(float(t)) for t in v)
    return str(v)


def format_config(cfg):
    """Render ``cfg`` so that :func:`parse_config_text` reproduces it exactly."""
    out = []
    for f in fields(cfg):
        out.append(f"{key_of(f.name)} = {_format_value(getattr(cfg, f.name))}")
    return "\n".join(out) + "\n"


def config_dict(cfg):
    return {key_of(f.name): getattr(cfg, f.name) for f in fields(cfg)}


# the reduced desk-scale run used by the acceptance suite
REDUCED = dict(s=0.2 * math.pi, dt=0.1, T=12.0, N_copies=4)
