"""Flat key=value run configuration.

One key per line, '#' starts a comment, values are typed per key.  The
same keys are accepted by the command line as --set key=value overrides,
applied after the file.  Errors carry the offending line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import UsageError


class ConfigError(UsageError):
    pass


_IC_TYPES = ("taylor_green", "abc", "random_bandlimited")
_FORMS = ("convective", "rotational")


@dataclass
class RunConfig:
    # grid
    n: int = 64
    box_length: float = 2.0 * math.pi
    # simulation
    dt: float | None = None          # None = one CFL evaluation at t=0
    cfl_safety: float = 0.5
    t_end: float = 1.0
    record_interval: float = 0.05
    nonlinear_form: str = "convective"
    hs_ceiling: float | None = None
    # diagnostics
    delta: float = 0.5
    cutoff_l: float | None = None    # None = box length
    s: float | None = None           # None = 5/2 + delta
    s_overridden: bool = False
    pair_budget: int = 10_000
    upsample: int = 2
    extra_deltas: tuple = ()
    # monitor
    c_delta: float | None = None     # step-recursion constant; enables the estimate
    c_delta_growth: float | None = None  # separate growth-bound constant (see README)
    t_star: float | None = None
    # initial condition
    ic_type: str = "taylor_green"
    seed: int | None = None
    band: tuple = (1, 3)
    amplitude: float = 1.0
    # output
    out_dir: str = "out"
    snapshot_every: int = 0          # every k-th record; 0 = no snapshots
    formats: tuple = ("csv", "json", "svg")

    def resolved_s(self) -> float:
        return self.s if self.s is not None else 2.5 + self.delta

    def validate(self):
        if self.n < 8 or self.n % 2:
            raise ConfigError(f"grid.n must be an even integer >= 8, got {self.n}")
        if self.box_length <= 0:
            raise ConfigError("grid.box_length must be positive")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError("sim.dt must be positive or auto")
        if not (0 < self.cfl_safety <= 1):
            raise ConfigError("sim.cfl_safety must lie in (0, 1]")
        if self.t_end < 0:
            raise ConfigError("sim.t_end must be nonnegative")
        if self.record_interval <= 0:
            raise ConfigError("sim.record_interval must be positive")
        if self.dt is not None and self.record_interval < self.dt - 1e-15:
            raise ConfigError("sim.record_interval must be at least sim.dt")
        if self.nonlinear_form not in _FORMS:
            raise ConfigError(f"sim.nonlinear_form must be one of {_FORMS}")
        if self.delta <= 0:
            raise ConfigError("diag.delta must be positive")
        if self.cutoff_l is not None and self.cutoff_l <= 0:
            raise ConfigError("diag.L must be positive")
        if self.pair_budget < 1000:
            raise ConfigError("diag.pair_budget must be at least 1000")
        if self.upsample < 1:
            raise ConfigError("diag.upsample must be at least 1")
        if self.ic_type not in _IC_TYPES:
            raise ConfigError(f"ic.type must be one of {_IC_TYPES}")
        if self.ic_type == "random_bandlimited" and self.seed is None:
            raise ConfigError("ic.seed is mandatory for the random initial condition")
        if len(self.band) != 2 or not (0 < self.band[0] <= self.band[1]):
            raise ConfigError("ic.band must be kmin:kmax with 0 < kmin <= kmax")
        if self.amplitude <= 0:
            raise ConfigError("ic.amplitude must be positive")
        if self.c_delta is not None and self.c_delta <= 0:
            raise ConfigError("monitor.C_delta must be positive")
        if self.t_star is not None and self.t_star <= self.t_end:
            raise ConfigError("monitor.T_star must exceed sim.t_end")
        if self.snapshot_every < 0:
            raise ConfigError("output.snapshot_every must be nonnegative")
        bad = [f for f in self.formats if f not in ("csv", "json", "svg")]
        if bad:
            raise ConfigError(f"output.formats: unknown {bad}")
        return self


def _parse_float(text: str, key: str, line: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"line {line}: {key} expects a number, got {text!r}") from None


def _parse_int(text: str, key: str, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"line {line}: {key} expects an integer, got {text!r}") from None


def _apply(cfg: RunConfig, key: str, value: str, line: int):
    v = value.strip()
    if key == "grid.n":
        cfg.n = _parse_int(v, key, line)
    elif key == "grid.box_length":
        cfg.box_length = _parse_float(v, key, line)
    elif key == "sim.dt":
        cfg.dt = None if v.lower() == "auto" else _parse_float(v, key, line)
    elif key == "sim.cfl_safety":
        cfg.cfl_safety = _parse_float(v, key, line)
    elif key == "sim.t_end":
        cfg.t_end = _parse_float(v, key, line)
    elif key == "sim.record_interval":
        cfg.record_interval = _parse_float(v, key, line)
    elif key == "sim.nonlinear_form":
        cfg.nonlinear_form = v
    elif key == "sim.hs_ceiling":
        cfg.hs_ceiling = None if v.lower() == "none" else _parse_float(v, key, line)
    elif key == "diag.delta":
        cfg.delta = _parse_float(v, key, line)
    elif key == "diag.L":
        cfg.cutoff_l = _parse_float(v, key, line)
    elif key == "diag.s":
        cfg.s = _parse_float(v, key, line)
        cfg.s_overridden = True
    elif key == "diag.pair_budget":
        cfg.pair_budget = _parse_int(v, key, line)
    elif key == "diag.upsample":
        cfg.upsample = _parse_int(v, key, line)
    elif key == "diag.extra_deltas":
        try:
            cfg.extra_deltas = tuple(float(x) for x in v.split(",") if x.strip())
        except ValueError:
            raise ConfigError(f"line {line}: diag.extra_deltas expects numbers") from None
    elif key == "monitor.C_delta":
        cfg.c_delta = _parse_float(v, key, line)
    elif key == "monitor.C_delta_growth":
        cfg.c_delta_growth = _parse_float(v, key, line)
    elif key == "monitor.T_star":
        cfg.t_star = None if v.lower() == "none" else _parse_float(v, key, line)
    elif key == "ic.type":
        cfg.ic_type = v
    elif key == "ic.seed":
        cfg.seed = _parse_int(v, key, line)
    elif key == "ic.band":
        sep = ":" if ":" in v else ","
        parts = [p for p in v.split(sep) if p.strip()]
        if len(parts) != 2:
            raise ConfigError(f"line {line}: ic.band expects kmin:kmax")
        cfg.band = (_parse_int(parts[0], key, line), _parse_int(parts[1], key, line))
    elif key == "ic.amplitude":
        cfg.amplitude = _parse_float(v, key, line)
    elif key == "output.dir":
        cfg.out_dir = v
    elif key == "output.snapshot_every":
        cfg.snapshot_every = _parse_int(v, key, line)
    elif key == "output.formats":
        cfg.formats = tuple(x.strip() for x in v.split(",") if x.strip())
    else:
        raise ConfigError(f"line {line}: unknown key {key!r}")


def parse_config(text: str, overrides: list | None = None) -> RunConfig:
    """Parse config text, apply --set overrides, validate."""
    cfg = RunConfig()
    for i, raw in enumerate(text.splitlines(), start=1):
        ln = raw.split("#", 1)[0].strip()
        if not ln:
            continue
        if "=" not in ln:
            raise ConfigError(f"line {i}: expected key = value, got {raw.strip()!r}")
        key, value = ln.split("=", 1)
        _apply(cfg, key.strip(), value, i)
    for j, ov in enumerate(overrides or [], start=1):
        if "=" not in ov:
            raise ConfigError(f"--set #{j}: expected key=value, got {ov!r}")
        key, value = ov.split("=", 1)
        _apply(cfg, key.strip(), value, 0)
    return cfg.validate()


def load_config(path, overrides: list | None = None) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, overrides)
