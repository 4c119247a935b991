"""Regularity monitoring: trace records, fitted growth bounds, blowup rates.

A trace is a time-ordered list of samples of the quantities the theory
relates: sup and L2 vorticity norms, the Holder seminorm and the length
scale built from it, Sobolev/shell norms of the velocity, and the sup
norms of the velocity-gradient tensor and its symmetric/antisymmetric
halves.  Two running integrals accumulate alongside: the sup-vorticity
time integral and the time integral of ell^(-5/2).

Every "check_*" routine fits the smallest constant that makes its
inequality hold across the whole trace and reports where the bound is
tightest.  Constants are fitted, never asserted: the periodic-box data
decides their size, and refinement or resampling stability is the
evidence they mean something.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BlowupDetected, UsageError
from .gradients import du_by_differentiation, tensor_linf_from_entries
from .norms import (
    HolderConfig,
    besov_norm,
    holder_seminorm_from_values,
    length_scale_from_seminorm,
    linf_from_values,
    sobolev_norm,
)
from .spectral import (
    SpectralField3,
    curl,
    inverse_real,
    l2_norm,
    to_physical,
    to_spectral,
    upsample_coefficients,
)

SAMPLE_COLUMNS = (
    "t",
    "energy",
    "omega_linf",
    "omega_l2",
    "holder",
    "ell",
    "hs",
    "besov",
    "du_linf",
    "dup_linf",
    "dum_linf",
    "bkm_int",
    "const_int",
)


@dataclass(frozen=True)
class RegularitySample:
    """One trace row; field order matches the trace file column order."""

    t: float
    energy: float
    omega_linf: float
    omega_l2: float
    holder: float
    ell: float
    hs: float
    besov: float
    du_linf: float
    dup_linf: float
    dum_linf: float
    bkm_int: float = 0.0
    const_int: float = 0.0

    def as_row(self):
        return tuple(getattr(self, name) for name in SAMPLE_COLUMNS)


@dataclass
class RegularityTrace:
    """Ordered samples plus run metadata."""

    samples: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        if name not in SAMPLE_COLUMNS:
            raise UsageError(f"unknown trace column {name!r}")
        return np.array([getattr(s, name) for s in self.samples], dtype=np.float64)

    @property
    def times(self) -> np.ndarray:
        return self.column("t")

    def __len__(self):
        return len(self.samples)

    @classmethod
    def from_columns(cls, metadata=None, **cols) -> "RegularityTrace":
        """Build a trace from per-column arrays; missing columns become 0,
        missing integrals are recomputed by trapezoid accumulation."""
        if "t" not in cols:
            raise UsageError("from_columns requires a 't' column")
        ts = np.asarray(cols["t"], dtype=np.float64)
        m = len(ts)
        given_integrals = "bkm_int" in cols and "const_int" in cols
        data = {}
        for name in SAMPLE_COLUMNS:
            if name in cols:
                arr = np.asarray(cols[name], dtype=np.float64)
                if arr.shape != (m,):
                    raise UsageError(f"column {name!r} has wrong length")
                data[name] = arr
            else:
                data[name] = np.zeros(m)
        trace = cls(metadata=dict(metadata or {}))
        for i in range(m):
            s = RegularitySample(**{name: float(data[name][i]) for name in SAMPLE_COLUMNS})
            if given_integrals:
                trace.samples.append(s)
            else:
                accumulate(trace, s)
        return trace


def _ell_rate(ell: float) -> float:
    return ell ** (-2.5) if ell > 0 else 0.0


def accumulate(trace: RegularityTrace, sample: RegularitySample) -> RegularitySample:
    """Append a sample, extending both running integrals by trapezoid rule.

    The instantaneous fields of ``sample`` are kept as given; its integral
    fields are overwritten with the accumulated values.  Returns the stored
    sample.
    """
    if trace.samples:
        prev = trace.samples[-1]
        dt = sample.t - prev.t
        if dt < 0:
            raise UsageError("samples must be appended in time order")
        bkm = prev.bkm_int + 0.5 * dt * (prev.omega_linf + sample.omega_linf)
        # ell = 0 marks an unpopulated column (synthetic traces); it adds
        # nothing rather than dividing by zero
        const = prev.const_int + 0.5 * dt * (_ell_rate(prev.ell) + _ell_rate(sample.ell))
    else:
        bkm = 0.0
        const = 0.0
    stored = replace(sample, bkm_int=bkm, const_int=const)
    trace.samples.append(stored)
    return stored


def resample(trace: RegularityTrace, stride: int) -> RegularityTrace:
    """Keep every stride-th sample (always keeping the first and last) and
    rebuild the running integrals at the coarser cadence."""
    if stride < 1:
        raise UsageError("stride must be >= 1")
    idx = list(range(0, len(trace.samples), stride))
    if idx and idx[-1] != len(trace.samples) - 1:
        idx.append(len(trace.samples) - 1)
    out = RegularityTrace(metadata=dict(trace.metadata))
    for i in idx:
        accumulate(out, trace.samples[i])
    return out


def cumulative_trapezoid(ts: np.ndarray, vals: np.ndarray) -> np.ndarray:
    out = np.zeros_like(vals, dtype=np.float64)
    if len(vals) > 1:
        dt = np.diff(ts)
        out[1:] = np.cumsum(0.5 * dt * (vals[1:] + vals[:-1]))
    return out


# --------------------------------------------------------------------------
# Sample evaluation from a velocity state.
# --------------------------------------------------------------------------

class SampleEvaluator:
    """Maps (t, velocity) to a RegularitySample.

    All quantities are computed from the physical-space representation of
    the state (one transform round trip), so a stored physical snapshot
    reproduces the in-run sample exactly, byte for byte.

    ``delta`` drives the Holder seminorm and length scale; exponents above
    one are evaluated at delta_eff = 1 and the substitution is recorded.
    ``extra_deltas`` adds side records (seminorm, length scale) per extra
    exponent, retrievable from ``sweep``.
    """

    def __init__(
        self,
        delta: float = 0.5,
        cutoff_l: float | None = None,
        pair_budget: int = 10_000,
        upsample: int = 2,
        s: float | None = None,
        extra_deltas: tuple = (),
    ):
        if delta <= 0:
            raise UsageError(f"delta must be positive, got {delta}")
        self.delta = float(delta)
        self.delta_eff = min(self.delta, 1.0)
        self.cutoff_l = cutoff_l
        self.pair_budget = int(pair_budget)
        self.upsample = int(upsample)
        self.s = float(s) if s is not None else 2.5 + self.delta
        self.extra_deltas = tuple(float(d) for d in extra_deltas)
        self.u0_l2 = None
        self._sweep = {d: {"holder": [], "ell": []} for d in self.extra_deltas}
        self._resolution_decades = []

    @property
    def sweep(self) -> dict:
        return {
            d: {"holder": np.array(v["holder"]), "ell": np.array(v["ell"])}
            for d, v in self._sweep.items()
        }

    @property
    def min_resolution_decades(self) -> float:
        return min(self._resolution_decades) if self._resolution_decades else math.inf

    def extra_metadata(self) -> dict:
        decades = self.min_resolution_decades
        meta = {
            "delta": self.delta,
            "delta_eff": self.delta_eff,
            "s": self.s,
            "pair_budget": self.pair_budget,
            "upsample": self.upsample,
            "min_resolution_decades": decades if math.isfinite(decades) else None,
            "resolved_proxy": bool(decades >= 6.0),
        }
        if self.delta_eff != self.delta:
            meta["delta_substituted"] = True
        if self.extra_deltas:
            meta["delta_sweep"] = {
                str(d): {
                    "holder": [float(x) for x in v["holder"]],
                    "ell": [float(x) for x in v["ell"]],
                }
                for d, v in self._sweep.items()
            }
        return meta

    def _holder_cfg(self, delta_eff: float, box: float) -> HolderConfig:
        cutoff = self.cutoff_l if self.cutoff_l is not None else box
        return HolderConfig(
            delta=delta_eff,
            cutoff_l=cutoff,
            pair_budget=self.pair_budget,
            upsample=self.upsample,
        )

    def __call__(self, t: float, u: SpectralField3) -> RegularitySample:
        return self.evaluate_physical(t, to_physical(u))

    def evaluate_physical(self, t: float, u_phys: SpectralField3) -> RegularitySample:
        if not np.all(np.isfinite(u_phys.data)):
            raise BlowupDetected(f"non-finite velocity at t={t:.6g}", t)
        with np.errstate(over="ignore", invalid="ignore"):
            sample = self._evaluate(t, u_phys)
        if not all(math.isfinite(v) for v in sample.as_row()):
            raise BlowupDetected(f"diagnostics overflowed at t={t:.6g}", t)
        return sample

    def _evaluate(self, t: float, u_phys: SpectralField3) -> RegularitySample:
        g = u_phys.grid
        u = to_spectral(u_phys)
        if self.u0_l2 is None:
            self.u0_l2 = l2_norm(u)
        u0_l2 = self.u0_l2
        w = curl(u)
        # One refined vorticity inverse feeds the sup norm and every
        # Holder exponent; one refined entry batch feeds all three tensor
        # norms (the halves are linear images of the full entries).
        wc = w.data if self.upsample == 1 else upsample_coefficients(
            w.data, g.n, self.upsample
        )
        w_vals = inverse_real(wc)
        omega_linf = linf_from_values(w_vals)
        omega_l2 = l2_norm(w)
        cfg = self._holder_cfg(self.delta_eff, g.box_length)
        holder = holder_seminorm_from_values(w_vals, g.box_length, cfg)
        ell = length_scale_from_seminorm(holder, u0_l2, cfg.delta, cfg.cutoff_l)
        for d in self.extra_deltas:
            dcfg = self._holder_cfg(min(d, 1.0), g.box_length)
            hd = holder_seminorm_from_values(w_vals, g.box_length, dcfg)
            self._sweep[d]["holder"].append(hd)
            self._sweep[d]["ell"].append(
                length_scale_from_seminorm(hd, u0_l2, dcfg.delta, dcfg.cutoff_l)
            )
        ent = du_by_differentiation(u).to_physical_entries(self.upsample)
        sample = RegularitySample(
            t=float(t),
            energy=l2_norm(u) ** 2,
            omega_linf=omega_linf,
            omega_l2=omega_l2,
            holder=holder,
            ell=ell,
            hs=sobolev_norm(u, self.s),
            besov=besov_norm(u, self.s),
            du_linf=tensor_linf_from_entries(ent, "general"),
            dup_linf=tensor_linf_from_entries(
                0.5 * (ent + ent.transpose(1, 0, 2, 3, 4)), "symmetric"
            ),
            dum_linf=tensor_linf_from_entries(ent, "antisymmetric"),
        )
        self._resolution_decades.append(_resolution_decades(u))
        return sample


def _resolution_decades(u: SpectralField3) -> float:
    """Decades between the peak and the tail of the radial energy spectrum."""
    g = u.grid
    power = np.abs(to_spectral(u).data) ** 2
    if power.ndim == 4:
        power = power.sum(axis=0)
    kk = np.sqrt(g.k_sq).ravel()
    bins = np.rint(kk * g.box_length / (2.0 * np.pi)).astype(np.int64)
    spec = np.bincount(bins, weights=power.ravel())
    top = g.n // 3  # last complete radial bin inside the dealiased band
    spec = spec[: top + 1]
    peak = spec.max()
    if peak <= 0:
        return math.inf
    tail = spec[-1]
    if tail <= 0:
        return math.inf
    return float(np.log10(peak / tail))


# --------------------------------------------------------------------------
# Fitted growth bounds.
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundRecord:
    bound_id: str
    fitted_constant: float
    max_slack_time: float  # sample time where the bound is tightest
    holds: bool
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {
            "bound_id": self.bound_id,
            "fitted_constant": self.fitted_constant,
            "max_slack_time": self.max_slack_time,
            "holds": self.holds,
        }
        out.update(self.details)
        return out


@dataclass
class BoundLedger:
    records: list = field(default_factory=list)
    context: dict = field(default_factory=dict)

    def record(self, bound_id: str) -> BoundRecord:
        for r in self.records:
            if r.bound_id == bound_id:
                return r
        raise UsageError(f"no record for bound {bound_id!r}")

    def as_dict(self) -> dict:
        return {
            "context": self.context,
            "bounds": [r.as_dict() for r in self.records],
        }


def _require_samples(trace: RegularityTrace, minimum: int = 2):
    if len(trace) < minimum:
        raise UsageError(f"check requires at least {minimum} samples, got {len(trace)}")


def _fit_exponential_constant(ts, values, base, integrals):
    """Smallest C with values(t) <= base * exp(C * integral(t)) everywhere.

    Returns (C, tightest_time, degenerate).  No growth anywhere fits C = 0
    (this absorbs the all-zero trajectory).  Growth against a vanishing
    integral is degenerate: C = infinity, flagged.
    """
    growth = values > base
    if not np.any(growth):
        return 0.0, float(ts[0]), False
    if base <= 0:
        i = int(np.argmax(growth))
        return math.inf, float(ts[i]), True
    stuck = growth & (integrals <= 0)
    if np.any(stuck):
        return math.inf, float(ts[int(np.argmax(stuck))]), True
    vals = np.full(len(ts), -math.inf)
    vals[growth] = np.log(values[growth] / base) / integrals[growth]
    i = int(np.argmax(vals))
    return float(vals[i]), float(ts[i]), False


def check_single_exp(
    trace: RegularityTrace, u0_hs: float | None = None, u0_l2: float | None = None
) -> BoundRecord:
    """hs(t) <= hs(0) * exp(C * u0_l2 * integral ell^(-5/2)); fit C."""
    _require_samples(trace)
    ts = trace.times
    hs = trace.column("hs")
    ci = trace.column("const_int")
    u0_hs = float(hs[0]) if u0_hs is None else float(u0_hs)
    u0_l2 = float(np.sqrt(trace.column("energy")[0])) if u0_l2 is None else float(u0_l2)
    if u0_hs < 0 or u0_l2 < 0:
        raise UsageError("single-exp check requires nonnegative initial norms")
    c, t_tight, degenerate = _fit_exponential_constant(ts, hs, u0_hs, u0_l2 * ci)
    if np.isfinite(c):
        bound = u0_hs * np.exp(np.minimum(c * u0_l2 * ci, 700.0))
    else:
        bound = np.full_like(hs, math.inf)
    holds = bool(np.all(hs <= bound * (1 + 1e-12)))
    return BoundRecord(
        "single_exp",
        c,
        t_tight,
        holds,
        {"degenerate": degenerate, "u0_hs": u0_hs, "u0_l2": u0_l2},
    )


def single_exp_holds_at(
    trace: RegularityTrace,
    c: float,
    u0_hs: float | None = None,
    u0_l2: float | None = None,
) -> BoundRecord:
    """Evaluate (not fit) the single-exponential bound at a configured
    constant; the holds flag says whether the curve dominates hs."""
    _require_samples(trace)
    if c <= 0:
        raise UsageError("configured constant must be positive")
    ts = trace.times
    hs = trace.column("hs")
    ci = trace.column("const_int")
    u0_hs = float(hs[0]) if u0_hs is None else float(u0_hs)
    u0_l2 = float(np.sqrt(trace.column("energy")[0])) if u0_l2 is None else float(u0_l2)
    bound = u0_hs * np.exp(np.minimum(c * u0_l2 * ci, 700.0))
    slack = np.where(bound > 0, hs / np.where(bound > 0, bound, 1.0), math.inf)
    i = int(np.argmax(slack))
    holds = bool(np.all(hs <= bound * (1 + 1e-12)))
    return BoundRecord(
        "single_exp_configured", float(c), float(ts[i]), holds,
        {"u0_hs": u0_hs, "u0_l2": u0_l2, "max_ratio": float(slack[i])},
    )


def check_gronwall_hs(trace: RegularityTrace, u0_hs: float | None = None) -> BoundRecord:
    """hs(t) <= hs(0) * exp(C * integral ||Du||_inf); fit C."""
    _require_samples(trace)
    ts = trace.times
    hs = trace.column("hs")
    u0_hs = float(hs[0]) if u0_hs is None else float(u0_hs)
    if u0_hs < 0:
        raise UsageError("gronwall check requires a nonnegative initial norm")
    integral = cumulative_trapezoid(ts, trace.column("du_linf"))
    c, t_tight, degenerate = _fit_exponential_constant(ts, hs, u0_hs, integral)
    return BoundRecord("gronwall_hs", c, t_tight, True, {"degenerate": degenerate})


def check_vorticity_l2(trace: RegularityTrace) -> BoundRecord:
    """omega_l2(t) <= omega_l2(0) * exp(C * integral omega_linf); fit C."""
    _require_samples(trace)
    ts = trace.times
    wl2 = trace.column("omega_l2")
    c, t_tight, degenerate = _fit_exponential_constant(
        ts, wl2, float(wl2[0]), trace.column("bkm_int")
    )
    return BoundRecord("vorticity_l2", c, t_tight, True, {"degenerate": degenerate})


def check_double_exp(trace: RegularityTrace, u0_hs: float | None = None) -> BoundRecord:
    """hs(t) <= hs(0) * exp(exp(C * integral omega_linf)); fit C.

    Samples with hs <= e * hs(0) impose no constraint (the bound exceeds
    them for every nonnegative C), so only stronger growth is fitted.
    """
    _require_samples(trace)
    ts = trace.times
    hs = trace.column("hs")
    bkm = trace.column("bkm_int")
    u0_hs = float(hs[0]) if u0_hs is None else float(u0_hs)
    if u0_hs < 0:
        raise UsageError("double-exp check requires a nonnegative initial norm")
    active = hs > math.e * u0_hs
    if np.any(active) and u0_hs <= 0:
        i = int(np.argmax(active))
        return BoundRecord(
            "double_exp", math.inf, float(ts[i]), True, {"degenerate": True, "u0_hs": u0_hs}
        )
    stuck = active & (bkm <= 0)
    if np.any(stuck):
        i = int(np.argmax(stuck))
        return BoundRecord(
            "double_exp", math.inf, float(ts[i]), True, {"degenerate": True, "u0_hs": u0_hs}
        )
    if not np.any(active):
        return BoundRecord(
            "double_exp", 0.0, float(ts[0]), True, {"degenerate": False, "u0_hs": u0_hs}
        )
    vals = np.full(len(ts), -math.inf)
    vals[active] = np.log(np.log(hs[active] / u0_hs)) / bkm[active]
    i = int(np.argmax(vals))
    return BoundRecord(
        "double_exp", float(vals[i]), float(ts[i]), True, {"degenerate": False, "u0_hs": u0_hs}
    )


def check_constantin(trace: RegularityTrace, u0_l2: float | None = None) -> BoundRecord:
    """omega_linf(t) <= C * u0_l2 * ell(t)^(-5/2); fit C and report spread."""
    _require_samples(trace, 1)
    ts = trace.times
    wl = trace.column("omega_linf")
    ell = trace.column("ell")
    u0_l2 = float(np.sqrt(trace.column("energy")[0])) if u0_l2 is None else float(u0_l2)
    if u0_l2 < 0:
        raise UsageError("length-scale check requires a nonnegative initial L2 norm")
    with np.errstate(divide="ignore"):
        ratios = _ratio_convention(wl, u0_l2 * ell ** (-2.5))
    i = int(np.argmax(ratios))
    pos = ratios[(ratios > 0) & np.isfinite(ratios)]
    spread = float(pos.max() / pos.min()) if len(pos) else math.inf
    return BoundRecord(
        "constantin",
        float(ratios[i]),
        float(ts[i]),
        True,
        {"ratio_spread": spread},
    )


def _ratio_convention(numer: np.ndarray, denom: np.ndarray) -> np.ndarray:
    """Pointwise numer/denom with 0/anything = 0 and positive/0 = inf."""
    out = np.zeros_like(numer, dtype=np.float64)
    pos = numer > 0
    out[pos & (denom > 0)] = numer[pos & (denom > 0)] / denom[pos & (denom > 0)]
    out[pos & (denom <= 0)] = math.inf
    return out


def check_du_length_scale(
    trace: RegularityTrace,
    u0_l2: float | None = None,
    ell: np.ndarray | None = None,
    label: str = "du_length_scale",
) -> BoundRecord:
    """dup_linf + dum_linf <= C * u0_l2 * ell^(-5/2); fit C.

    ``ell`` overrides the trace column (used for sweep exponents).
    """
    _require_samples(trace, 1)
    ts = trace.times
    total = trace.column("dup_linf") + trace.column("dum_linf")
    ell = trace.column("ell") if ell is None else np.asarray(ell, dtype=np.float64)
    u0_l2 = float(np.sqrt(trace.column("energy")[0])) if u0_l2 is None else float(u0_l2)
    if u0_l2 < 0:
        raise UsageError("gradient length-scale check requires nonnegative u0_l2")
    with np.errstate(divide="ignore"):
        ratios = _ratio_convention(total, u0_l2 * ell ** (-2.5))
    i = int(np.argmax(ratios))
    return BoundRecord(label, float(ratios[i]), float(ts[i]), True, {})


def check_besov_diff_inequality(trace: RegularityTrace) -> BoundRecord:
    """(1/2) d/dt besov^2 <= C * du_linf * besov^2; fit C from the positive
    part of centered differences at the interior samples."""
    _require_samples(trace, 3)
    ts = trace.times
    b2 = trace.column("besov") ** 2
    du = trace.column("du_linf")
    deriv = (b2[2:] - b2[:-2]) / (ts[2:] - ts[:-2])
    denom = 2.0 * du[1:-1] * b2[1:-1]
    growing = deriv > 0
    if np.any(growing & (denom <= 0)):
        i = int(np.argmax(growing & (denom <= 0)))
        return BoundRecord("besov_diff", math.inf, float(ts[i + 1]), True, {"degenerate": True})
    if not np.any(growing):
        return BoundRecord("besov_diff", 0.0, float(ts[1]), True, {"degenerate": False})
    vals = np.full(len(deriv), -math.inf)
    vals[growing] = deriv[growing] / denom[growing]
    i = int(np.argmax(vals))
    return BoundRecord("besov_diff", float(vals[i]), float(ts[i + 1]), True, {"degenerate": False})


def build_ledger(
    trace: RegularityTrace,
    u0_hs: float | None = None,
    u0_l2: float | None = None,
) -> BoundLedger:
    """Fit all tracked inequalities on one trace."""
    ledger = BoundLedger()
    ledger.context = {
        "samples": len(trace),
        "t_final": float(trace.times[-1]) if len(trace) else 0.0,
    }
    ledger.records.append(check_gronwall_hs(trace, u0_hs))
    ledger.records.append(check_vorticity_l2(trace))
    ledger.records.append(check_double_exp(trace, u0_hs))
    ledger.records.append(check_single_exp(trace, u0_hs, u0_l2))
    ledger.records.append(check_du_length_scale(trace, u0_l2))
    ledger.records.append(check_besov_diff_inequality(trace))
    ledger.records.append(check_constantin(trace, u0_l2))
    return ledger


def single_exp_curve(trace: RegularityTrace, record: BoundRecord) -> np.ndarray:
    u0_hs = record.details["u0_hs"] if "u0_hs" in record.details else trace.column("hs")[0]
    u0_l2 = record.details.get("u0_l2", float(np.sqrt(trace.column("energy")[0])))
    arg = record.fitted_constant * u0_l2 * trace.column("const_int")
    return u0_hs * np.exp(np.minimum(arg, 700.0))


def double_exp_curve(trace: RegularityTrace, record: BoundRecord) -> np.ndarray:
    u0_hs = record.details.get("u0_hs", float(trace.column("hs")[0]))
    inner = np.minimum(record.fitted_constant * trace.column("bkm_int"), 700.0)
    return u0_hs * np.exp(np.minimum(np.exp(inner), 700.0))


def fit_power_law(x: np.ndarray, y: np.ndarray):
    """Least-squares slope and intercept of log y against log x."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(x <= 0) or np.any(y <= 0):
        raise UsageError("power-law fit requires positive data")
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(intercept)


def delta_scaling(trace: RegularityTrace, sweep: dict, u0_l2: float | None = None):
    """Fitted gradient/length-scale constants across Holder exponents.

    ``sweep`` maps each exponent to its per-sample length scales (the
    evaluator's ``sweep`` output).  Returns (deltas, constants, slope).
    """
    deltas = sorted(sweep)
    consts = []
    for d in deltas:
        rec = check_du_length_scale(
            trace, u0_l2, ell=np.asarray(sweep[d]["ell"]), label=f"du_length_scale[{d}]"
        )
        consts.append(rec.fitted_constant)
    slope, _ = fit_power_law(np.array(deltas), np.array(consts))
    return np.array(deltas), np.array(consts), slope


# --------------------------------------------------------------------------
# Blowup-rate machinery.
# --------------------------------------------------------------------------

def delta_tilde(delta: float) -> float:
    if delta <= 0:
        raise UsageError(f"delta must be positive, got {delta}")
    return 2.0 * delta / (5.0 + 2.0 * delta)


def b_delta(delta: float, c_delta: float) -> float:
    if c_delta <= 0:
        raise UsageError(f"c_delta must be positive, got {c_delta}")
    dt = delta_tilde(delta)
    return (1.0 / dt) * c_delta ** (1.0 - dt)


@dataclass
class BlowupEstimate:
    """Output of the iterated-step blowup analysis on one trace."""

    delta: float
    delta_tilde: float
    b_delta: float
    c_delta: float
    u0_l2: float
    times: np.ndarray          # greedy step times t_j
    hs_at_times: np.ndarray
    rhos: np.ndarray           # amplification factors
    rhos_exceed_one: bool      # every rho_j > 1
    bjs: np.ndarray            # per-step lower bounds B_j on t_{j+1} - t_j
    smallness: float           # b_delta * (u0_l2 / hs(t_0))^delta_tilde
    smallness_ok: bool         # < 0.1
    min_norm_ratio: float      # min_j hs(t_j) / hs(t_0); < 1 flags oscillation
    rho_recursion_checked: int
    rho_recursion_ok: bool
    geometric_ok: bool
    step_cap_hit: bool = False
    t_star: float | None = None
    sample_times: np.ndarray | None = None
    apriori_curve: np.ndarray | None = None
    rate_curve: np.ndarray | None = None
    rate_constant: float | None = None
    fitted_exponent: float | None = None
    rate_curve_holds: bool | None = None

    def as_dict(self) -> dict:
        def arr(a):
            return None if a is None else [float(x) for x in np.asarray(a)]

        return {
            "delta": self.delta,
            "delta_tilde": self.delta_tilde,
            "b_delta": self.b_delta,
            "c_delta": self.c_delta,
            "u0_l2": self.u0_l2,
            "times": arr(self.times),
            "hs_at_times": arr(self.hs_at_times),
            "rhos": arr(self.rhos),
            "rhos_exceed_one": self.rhos_exceed_one,
            "bjs": arr(self.bjs),
            "smallness": self.smallness,
            "smallness_ok": self.smallness_ok,
            "min_norm_ratio": self.min_norm_ratio,
            "rho_recursion_checked": self.rho_recursion_checked,
            "rho_recursion_ok": self.rho_recursion_ok,
            "geometric_ok": self.geometric_ok,
            "step_cap_hit": self.step_cap_hit,
            "t_star": self.t_star,
            "sample_times": arr(self.sample_times),
            "apriori_curve": arr(self.apriori_curve),
            "rate_curve": arr(self.rate_curve),
            "rate_constant": self.rate_constant,
            "fitted_exponent": self.fitted_exponent,
            "rate_curve_holds": self.rate_curve_holds,
        }


def blowup_machinery(
    trace: RegularityTrace,
    c_delta: float,
    delta: float = 0.5,
    t_star: float | None = None,
    t0: float | None = None,
    max_steps: int = 100_000,
) -> BlowupEstimate:
    """Greedy step construction t_{j+1} = t_j + 1/(c_delta * hs(t_j)).

    Uses linear interpolation of hs between samples and never steps past
    the trace.  With a hypothesized blowup time the a priori curve
    1/(c_delta (T*-t)), the calibrated rate curve, and a log-log fitted
    exponent are added.  max_steps stops the walk on traces whose norms
    are so large the steps become microscopic (a post-blowup artifact);
    hitting it is recorded in ``step_cap_hit``.
    """
    _require_samples(trace)
    ts = trace.times
    hs = trace.column("hs")
    if np.any(hs <= 0):
        raise UsageError("blowup machinery requires strictly positive hs samples")
    if c_delta <= 0:
        raise UsageError(f"c_delta must be positive, got {c_delta}")
    if t_star is not None and t_star <= ts[-1]:
        raise UsageError(
            f"hypothesized blowup time {t_star} must exceed the last sample {ts[-1]}"
        )
    u0_l2 = float(np.sqrt(trace.column("energy")[0]))
    if u0_l2 <= 0:
        # Synthetic traces may omit the energy column; fall back to hs(0).
        u0_l2 = float(hs[0])
    dt_ = delta_tilde(delta)
    bd = b_delta(delta, c_delta)

    def hs_at(t):
        return float(np.interp(t, ts, hs))

    times = [float(ts[0]) if t0 is None else float(t0)]
    if times[0] < ts[0] or times[0] > ts[-1]:
        raise UsageError("t0 lies outside the trace")
    step_cap_hit = False
    while True:
        t_next = times[-1] + 1.0 / (c_delta * hs_at(times[-1]))
        if t_next > ts[-1] or t_next <= times[-1]:
            break
        if len(times) >= max_steps:
            step_cap_hit = True
            break
        times.append(t_next)
    times = np.array(times)
    hs_j = np.array([hs_at(t) for t in times])
    rhos = np.exp(bd * (u0_l2 / hs_j) ** dt_)
    bjs = bd * (u0_l2 / hs_j) ** dt_ / (c_delta * u0_l2)
    smallness = float(bd * (u0_l2 / hs_j[0]) ** dt_)
    min_ratio = float(np.min(hs_j / hs_j[0]))

    # Recursive amplification check: where hs(t_j) <= rho_{j-1} hs(t_{j-1})
    # holds, rho_j must be at least exp(rho_{j-1}^(-dt) * log rho_{j-1}).
    checked = 0
    rec_ok = True
    for j in range(1, len(times)):
        if hs_j[j] <= rhos[j - 1] * hs_j[j - 1] * (1 + 1e-12):
            checked += 1
            floor_ = math.exp(rhos[j - 1] ** (-dt_) * math.log(rhos[j - 1]))
            if rhos[j] < floor_ * (1 - 1e-12):
                rec_ok = False

    # Geometric domination: the partial sums of prod_{i<k} rho_i^-1 (empty
    # product = 1) must dominate the pure geometric series in rho_0.
    m = len(rhos)
    inv_cum = np.cumprod(1.0 / rhos)
    lhs = 1.0 + float(np.sum(inv_cum[: m - 1]))
    rhs = float(np.sum(rhos[0] ** (-np.arange(m, dtype=np.float64))))
    geometric_ok = bool(lhs >= rhs * (1 - 1e-12))

    est = BlowupEstimate(
        delta=float(delta),
        delta_tilde=dt_,
        b_delta=bd,
        c_delta=float(c_delta),
        u0_l2=u0_l2,
        times=times,
        hs_at_times=hs_j,
        rhos=rhos,
        rhos_exceed_one=bool(np.all(rhos > 1.0)),
        bjs=bjs,
        smallness=smallness,
        smallness_ok=smallness < 0.1,
        min_norm_ratio=min_ratio,
        rho_recursion_checked=checked,
        rho_recursion_ok=rec_ok,
        geometric_ok=geometric_ok,
        step_cap_hit=step_cap_hit,
    )
    if t_star is not None:
        est.t_star = float(t_star)
        est.sample_times = ts.copy()
        est.apriori_curve = 1.0 / (c_delta * (t_star - ts))
        exponent = 1.0 + 2.0 * delta / 5.0
        rate_c = float(np.min(hs * (t_star - ts) ** exponent))
        est.rate_constant = rate_c
        est.rate_curve = rate_c * (1.0 / (t_star - ts)) ** exponent
        est.rate_curve_holds = bool(np.all(est.rate_curve <= hs * (1 + 1e-9)))
        slope, _ = fit_power_law(1.0 / (t_star - ts), hs)
        est.fitted_exponent = slope
    return est
