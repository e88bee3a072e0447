"""Plain key-value experiment configuration.

One ``key = value`` per line, ``#`` comments, dotted keys for blocks
(``model.field = decay(lambda=1.0, delta=2.0)``).  Every key has a default,
unknown keys are rejected, and render/parse round-trips exactly, so the
resolved config echoed into an output directory is bit-stable.
"""

import re
from dataclasses import dataclass, field as dc_field

from . import model
from .errors import ConfigurationError

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def _fmt(x):
    """Render a float losslessly but without trailing noise for round values."""
    if float(x) == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


# ---------------------------------------------------------------------------
# field and coupling textual forms

def render_field(fld):
    if isinstance(fld, model.Zero):
        return "zero"
    if isinstance(fld, model.WallOnly):
        return f"wall(lambda={_fmt(fld.lam)})"
    if isinstance(fld, model.DecayHat):
        return f"decay(lambda={_fmt(fld.lam)}, delta={_fmt(fld.delta)})"
    if isinstance(fld, model.CenteredDecay):
        return f"centered(h={_fmt(fld.h)}, delta={_fmt(fld.delta)})"
    if isinstance(fld, model.LayerSequence):
        return "layers(" + ", ".join(_fmt(x) for x in fld.seq) + ")"
    if isinstance(fld, model.SumField):
        return "sum(" + "; ".join(render_field(p) for p in fld.parts) + ")"
    raise ConfigurationError(f"field {fld!r} has no textual form")


def _call_args(text, key):
    m = re.fullmatch(r"(\w+)\((.*)\)", text.strip())
    if not m:
        raise ConfigurationError(f"{key}: malformed spec {text!r}")
    name, body = m.group(1), m.group(2)
    kwargs = {}
    args = []
    if body.strip():
        for part in body.split(","):
            part = part.strip()
            kv = re.fullmatch(rf"(\w+)\s*=\s*({_NUM})", part)
            if kv:
                kwargs[kv.group(1)] = float(kv.group(2))
            elif re.fullmatch(_NUM, part):
                args.append(float(part))
            else:
                raise ConfigurationError(f"{key}: bad argument {part!r}")
    return name, args, kwargs


def parse_field(text, key="model.field"):
    text = text.strip()
    if text == "zero":
        return model.Zero()
    if text.startswith("sum(") and text.endswith(")"):
        parts = [p.strip() for p in text[4:-1].split(";")]
        return model.SumField(*[parse_field(p, key) for p in parts])
    name, args, kw = _call_args(text, key)
    try:
        if name == "wall":
            return model.WallOnly(kw.pop("lambda"))
        if name == "decay":
            fld = model.DecayHat(kw.pop("lambda"), kw.pop("delta"))
            if fld.delta <= 0:
                raise ConfigurationError(f"{key}: delta must be positive")
            return fld
        if name == "centered":
            return model.CenteredDecay(kw.pop("h"), kw.pop("delta"))
        if name == "layers":
            return model.LayerSequence(args)
    except KeyError as exc:
        raise ConfigurationError(f"{key}: missing argument {exc.args[0]}")
    raise ConfigurationError(f"{key}: unknown field kind {name!r}")


def render_coupling(coup):
    if isinstance(coup, model.Uniform):
        return f"uniform(J={_fmt(coup.J)})"
    if isinstance(coup, model.LayerWeakened):
        return f"layer_weakened(J={_fmt(coup.J)}, lambda={_fmt(coup.lam)})"
    raise ConfigurationError(f"coupling {coup!r} has no textual form")


def parse_coupling(text, key="model.coupling"):
    name, _, kw = _call_args(text, key)
    try:
        if name == "uniform":
            c = model.Uniform(kw.pop("J"))
        elif name == "layer_weakened":
            c = model.LayerWeakened(kw.pop("J"), kw.pop("lambda"))
        else:
            raise ConfigurationError(f"{key}: unknown coupling kind {name!r}")
    except KeyError as exc:
        raise ConfigurationError(f"{key}: missing argument {exc.args[0]}")
    if c.J < 0:
        raise ConfigurationError(f"{key}: J must be non-negative")
    return c


# ---------------------------------------------------------------------------
# the config object

_BC_NAMES = ("plus", "minus", "minus_plus", "free")


@dataclass
class ExperimentConfig:
    d: int = 2
    n: int = 4
    m: int = 4
    bc: str = "minus"
    coupling: object = dc_field(default_factory=lambda: model.Uniform(1.0))
    field: object = dc_field(
        default_factory=lambda: model.DecayHat(1.0, 2.0))
    beta: float = 1.0
    sweeps: int = 2000
    burn_in: int = 500
    thin: int = 1
    seed: int = 0
    chains: int = 1
    directory: str = "out"
    formats: str = "csv,pgm"
    identity_tol: float = 1e-6
    tv_tol: float = 1e-12
    slack: float = 1e-12
    vanish: float = 1e-3


def _check_range(cfg):
    checks = [
        ("model.d", cfg.d >= 2),
        ("model.n", cfg.n >= 0),
        ("model.m", cfg.m >= 1),
        ("model.beta", cfg.beta > 0),
        ("model.bc", cfg.bc in _BC_NAMES),
        ("run.sweeps", cfg.sweeps >= 1),
        ("run.burn_in", 0 <= cfg.burn_in < cfg.sweeps),
        ("run.thin", cfg.thin >= 1),
        ("run.chains", cfg.chains >= 1),
        ("tolerance.identity", cfg.identity_tol > 0),
        ("tolerance.tv", cfg.tv_tol > 0),
        ("tolerance.slack", cfg.slack > 0),
        ("tolerance.vanish", cfg.vanish > 0),
    ]
    for key, ok in checks:
        if not ok:
            raise ConfigurationError(f"{key}: value out of range")


# key -> (attribute, parse, render)
_KEYS = {
    "model.d": ("d", int, str),
    "model.n": ("n", int, str),
    "model.m": ("m", int, str),
    "model.bc": ("bc", str, str),
    "model.coupling": ("coupling", parse_coupling, render_coupling),
    "model.field": ("field", parse_field, render_field),
    "model.beta": ("beta", float, _fmt),
    "run.sweeps": ("sweeps", int, str),
    "run.burn_in": ("burn_in", int, str),
    "run.thin": ("thin", int, str),
    "run.seed": ("seed", int, str),
    "run.chains": ("chains", int, str),
    "output.directory": ("directory", str, str),
    "output.formats": ("formats", str, str),
    "tolerance.identity": ("identity_tol", float, _fmt),
    "tolerance.tv": ("tv_tol", float, _fmt),
    "tolerance.slack": ("slack", float, _fmt),
    "tolerance.vanish": ("vanish", float, _fmt),
}


def parse_config(text):
    """Resolve key-value text into an ExperimentConfig; the first bad line
    raises a ConfigurationError naming the line number and key."""
    cfg = ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KEYS:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        attr, parse, _ = _KEYS[key]
        try:
            setattr(cfg, attr, parse(value))
        except ConfigurationError:
            raise
        except (ValueError, TypeError):
            raise ConfigurationError(
                f"line {lineno}: malformed value for {key}: {value!r}"
            )
    _check_range(cfg)
    return cfg


def render_config(cfg):
    lines = []
    for key, (attr, _, render) in _KEYS.items():
        lines.append(f"{key} = {render(getattr(cfg, attr))}")
    return "\n".join(lines) + "\n"
