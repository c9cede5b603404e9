"""Line-oriented experiment configuration.

::

    # comment
    graph.type = triangulation
    graph.q = 7
    graph.radius = 5
    model.n = 1, 2
    model.beta = 0.25, 1.5
    mc.seed = 12345

Every key lives in ``SCHEMA``; unknown keys, bad values and missing required
keys raise :class:`ConfigError` carrying the line number.
"""
from __future__ import annotations

from dataclasses import dataclass

GRAPH_TYPES = ("triangulation", "ringed_tree", "tree", "path", "cycle", "grid", "complete")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def _bool(text: str) -> bool:
    t = text.lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _list(conv):
    def parse(text):
        items = [t.strip() for t in text.split(",") if t.strip()]
        if not items:
            raise ValueError("empty list")
        return tuple(conv(t) for t in items)
    parse.__name__ = f"list of {conv.__name__}"
    return parse


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    parse.__name__ = "choice"
    return parse


def _positive(x):
    return x > 0


def _non_negative(x):
    return x >= 0


# key -> (parser, default or REQUIRED, constraint, constraint description)
REQUIRED = object()
SCHEMA = {
    "graph.type": (_choice(*GRAPH_TYPES), REQUIRED, None, ""),
    "graph.q": (int, 7, lambda q: q >= 7, "q >= 7"),
    "graph.radius": (int, 5, _non_negative, "radius >= 0"),
    "graph.depth": (int, 6, _non_negative, "depth >= 0"),
    "graph.branching": (int, 2, _positive, "branching >= 1"),
    "graph.size": (int, 10, _positive, "size >= 1"),
    "graph.cycle": (_bool, False, None, ""),
    "model.n": (_list(int), REQUIRED, lambda ns: all(n >= 1 for n in ns), "every n >= 1"),
    "model.beta": (_list(float), REQUIRED, lambda bs: all(b > 0 for b in bs),
                   "every beta > 0"),
    "model.bc": (_choice("free", "wired"), "free", None, ""),
    "mc.algorithm": (_choice("metropolis", "wolff", "mixed"), "wolff", None, ""),
    "mc.burn_in": (int, 500, _positive, "burn_in >= 1"),
    "mc.sweeps": (int, 4000, _positive, "sweeps >= 1"),
    "mc.stride": (int, 1, _positive, "stride >= 1"),
    "mc.replicas": (int, 4, _positive, "replicas >= 1"),
    "mc.seed": (int, REQUIRED, lambda s: 0 <= s < 2 ** 64, "0 <= seed < 2^64"),
    "mc.center": (int, 0, _non_negative, "center >= 0"),
    "analysis.rate_min": (float, 0.05, _non_negative, "rate_min >= 0"),
    "analysis.r2_min": (float, 0.9, lambda r: 0 <= r <= 1, "0 <= r2_min <= 1"),
    "analysis.level_min": (float, 0.2, _positive, "level_min > 0"),
    "electrical.tolerance": (float, 1e-10, _positive, "tolerance > 0"),
    "output.dir": (str, "results", None, ""),
}


@dataclass(frozen=True)
class ExperimentConfig:
    values: tuple  # sorted (key, value) pairs, every schema key present

    def __getitem__(self, key):
        return dict(self.values)[key]

    def section(self, name: str) -> dict:
        prefix = name + "."
        return {k[len(prefix):]: v for k, v in self.values if k.startswith(prefix)}

    def replace(self, **updates) -> "ExperimentConfig":
        """``replace(mc__seed=3)`` style overrides, re-validated."""
        d = dict(self.values)
        for k, v in updates.items():
            key = k.replace("__", ".")
            if key not in SCHEMA:
                raise ConfigError(f"unknown key {key!r}")
            d[key] = v
        _validate(d, {})
        return ExperimentConfig(tuple(sorted(d.items())))


def _validate(values: dict, lines: dict):
    for key, (_, default, check, desc) in SCHEMA.items():
        if key not in values:
            if default is REQUIRED:
                raise ConfigError(f"missing required key {key!r}")
            values[key] = default
        elif check is not None and not check(values[key]):
            raise ConfigError(f"{key} = {values[key]!r} violates {desc}", lines.get(key))
    if values["graph.type"] == "cycle" and values["graph.size"] < 3:
        raise ConfigError("graph.size must be >= 3 for a cycle", lines.get("graph.size"))


def parse_config(text: str) -> ExperimentConfig:
    values: dict = {}
    lines: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'section.key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        conv = SCHEMA[key][0]
        try:
            values[key] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"{key}: type mismatch ({exc})", lineno) from None
        lines[key] = lineno
    _validate(values, lines)
    return ExperimentConfig(tuple(sorted(values.items())))


def _render(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_render(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialise(cfg: ExperimentConfig) -> str:
    """Every key with its resolved value, in schema order."""
    d = dict(cfg.values)
    return "".join(f"{key} = {_render(d[key])}\n" for key in SCHEMA)
