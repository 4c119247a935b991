"""Trace accumulation, the sample evaluator, fitted growth bounds, and
the iterated-step blowup analysis."""

import math

import numpy as np
import pytest
from scipy.integrate import simpson

from euler_lab import (
    BlowupDetected,
    Grid3,
    RegularitySample,
    RegularityTrace,
    SampleEvaluator,
    SolverConfig,
    SpectralField3,
    UsageError,
    accumulate,
    besov_norm,
    blowup_machinery,
    build_ledger,
    check_besov_diff_inequality,
    check_constantin,
    check_double_exp,
    check_du_length_scale,
    check_gronwall_hs,
    check_single_exp,
    check_vorticity_l2,
    curl,
    delta_scaling,
    l2_norm,
    run,
    sobolev_norm,
)
from euler_lab.ic import taylor_green
from euler_lab.monitor import (
    cumulative_trapezoid,
    delta_tilde,
    b_delta,
    double_exp_curve,
    fit_power_law,
    resample,
    single_exp_curve,
    single_exp_holds_at,
)
from euler_lab.norms import linf_norm
from euler_lab.spectral import to_spectral


def _sample(t, **kw):
    base = dict(
        t=t, energy=0.0, omega_linf=0.0, omega_l2=0.0, holder=0.0,
        ell=0.0, hs=0.0, besov=0.0, du_linf=0.0, dup_linf=0.0, dum_linf=0.0,
    )
    base.update(kw)
    return RegularitySample(**base)


def _zero_trace(m=5, dt=0.1):
    tr = RegularityTrace()
    for i in range(m):
        accumulate(tr, _sample(i * dt))
    return tr


@pytest.fixture(scope="module")
def tg_mini_trace():
    """Short cellular-flow run used by several fit checks."""
    cfg = SolverConfig(t_end=0.2, record_interval=0.01, dt=0.005)
    ev = SampleEvaluator(pair_budget=2000, upsample=1)
    return run(taylor_green(Grid3(32)), cfg, evaluate=ev)


class TestAccumulate:
    def test_constant_integrand_exact(self):
        tr = RegularityTrace()
        for i in range(6):
            s = accumulate(tr, _sample(0.1 * i, omega_linf=3.0, ell=1.0))
        assert s.bkm_int == pytest.approx(3.0 * 0.5, rel=1e-14)
        assert s.const_int == pytest.approx(0.5, rel=1e-14)

    def test_linear_ramp_exact(self):
        """Trapezoid integrates a linear function without error."""
        tr = RegularityTrace()
        for i in range(11):
            t = 0.05 * i
            s = accumulate(tr, _sample(t, omega_linf=4.0 * t))
        assert s.bkm_int == pytest.approx(2.0 * 0.5**2, rel=1e-14)

    def test_zero_ell_contributes_nothing(self):
        tr = RegularityTrace()
        accumulate(tr, _sample(0.0, ell=0.0))
        s = accumulate(tr, _sample(1.0, ell=0.0))
        assert s.const_int == 0.0

    def test_time_order_enforced(self):
        tr = RegularityTrace()
        accumulate(tr, _sample(1.0))
        with pytest.raises(UsageError):
            accumulate(tr, _sample(0.5))

    def test_against_refined_quadrature(self, tg_mini_trace):
        """Trapezoid at 0.01 cadence vs Simpson on the same samples."""
        ts = tg_mini_trace.times
        wl = tg_mini_trace.column("omega_linf")
        ref = simpson(wl, x=ts)
        got = tg_mini_trace.column("bkm_int")[-1]
        assert abs(got - ref) < 1e-3 * abs(ref)

    def test_cumulative_trapezoid_matches_numpy(self):
        ts = np.array([0.0, 0.1, 0.3, 0.35, 0.6])
        vals = np.array([1.0, 2.0, 1.5, 0.5, 3.0])
        got = cumulative_trapezoid(ts, vals)
        assert got[0] == 0.0
        assert got[-1] == pytest.approx(np.trapezoid(vals, ts), rel=1e-14)


class TestTraceContainer:
    def test_from_columns_recomputes_integrals(self):
        ts = np.linspace(0, 1, 11)
        tr = RegularityTrace.from_columns(t=ts, omega_linf=np.full(11, 2.0))
        assert tr.column("bkm_int")[-1] == pytest.approx(2.0, rel=1e-14)

    def test_from_columns_keeps_given_integrals(self):
        ts = np.linspace(0, 1, 5)
        tr = RegularityTrace.from_columns(
            t=ts, bkm_int=np.full(5, 7.0), const_int=np.zeros(5)
        )
        assert np.all(tr.column("bkm_int") == 7.0)

    def test_from_columns_validation(self):
        with pytest.raises(UsageError):
            RegularityTrace.from_columns(omega_linf=np.ones(3))
        with pytest.raises(UsageError):
            RegularityTrace.from_columns(t=np.ones(3), hs=np.ones(4))
        tr = _zero_trace()
        with pytest.raises(UsageError):
            tr.column("enstrophy")

    def test_resample_keeps_endpoints(self, tg_mini_trace):
        coarse = resample(tg_mini_trace, 2)
        assert coarse.times[0] == tg_mini_trace.times[0]
        assert coarse.times[-1] == tg_mini_trace.times[-1]
        assert len(coarse) == 11
        with pytest.raises(UsageError):
            resample(tg_mini_trace, 0)

    def test_resample_integral_consistency(self, tg_mini_trace):
        coarse = resample(tg_mini_trace, 2)
        a = tg_mini_trace.column("bkm_int")[-1]
        b = coarse.column("bkm_int")[-1]
        assert abs(a - b) < 1e-2 * abs(a)


class TestEvaluator:
    def test_sample_matches_norm_functions(self, tg32):
        ev = SampleEvaluator(pair_budget=1000, upsample=1)
        s = ev(0.0, to_spectral(tg32))
        u = to_spectral(tg32)
        assert s.energy == pytest.approx(l2_norm(u) ** 2, rel=1e-12)
        assert s.omega_l2 == pytest.approx(l2_norm(curl(u)), rel=1e-12)
        assert s.hs == pytest.approx(sobolev_norm(u, 3.0), rel=1e-12)
        assert s.besov == pytest.approx(besov_norm(u, 3.0), rel=1e-12)
        assert s.omega_linf == pytest.approx(linf_norm(curl(u)), rel=1e-12)

    def test_antisymmetric_sup_is_half_vorticity(self, tg32):
        ev = SampleEvaluator(pair_budget=1000, upsample=2)
        s = ev(0.0, to_spectral(tg32))
        assert s.dum_linf == pytest.approx(0.5 * s.omega_linf, rel=1e-12)
        assert s.du_linf >= s.dup_linf - 1e-12
        assert s.du_linf >= s.dum_linf - 1e-12

    def test_u0_pinned_at_first_call(self, tg32):
        ev = SampleEvaluator(pair_budget=1000, upsample=1)
        ev(0.0, to_spectral(tg32))
        pinned = ev.u0_l2
        scaled = SpectralField3.from_coefficients(
            tg32.grid, to_spectral(tg32).data * 2.0
        )
        ev(0.1, scaled)
        assert ev.u0_l2 == pinned

    def test_overflow_raises(self, g16):
        ev = SampleEvaluator(pair_budget=1000, upsample=1)
        c = np.zeros((3, 16, 16, 16), dtype=np.complex128)
        c[1, 0, 1, 0] = 1e308
        c[1, 0, 15, 0] = 1e308
        with pytest.raises(BlowupDetected):
            ev(0.0, SpectralField3.from_coefficients(g16, c))

    def test_extra_deltas_sweep(self, tg32):
        ev = SampleEvaluator(pair_budget=1000, upsample=1, extra_deltas=(0.25, 1.0))
        ev(0.0, to_spectral(tg32))
        ev(0.1, to_spectral(tg32))
        sweep = ev.sweep
        assert set(sweep) == {0.25, 1.0}
        assert len(sweep[0.25]["ell"]) == 2
        assert np.all(sweep[0.25]["ell"] > 0)

    def test_large_delta_substituted(self, tg32):
        ev = SampleEvaluator(delta=2.5, pair_budget=1000, upsample=1)
        assert ev.delta_eff == 1.0
        assert ev.s == 5.0
        md = ev.extra_metadata()
        assert md["delta_substituted"] is True

    def test_s_override(self):
        ev = SampleEvaluator(delta=0.5, s=4.0, pair_budget=1000)
        assert ev.s == 4.0

    def test_resolution_metadata(self, tg32):
        ev = SampleEvaluator(pair_budget=1000, upsample=1)
        ev(0.0, to_spectral(tg32))
        md = ev.extra_metadata()
        # the cellular field has no tail energy at all
        assert md["resolved_proxy"] is True


def _exp_trace(alpha, u0_hs=2.0, u0_l2=3.0, m=21, t_end=1.0):
    """hs grows exactly as the single-exponential curve with constant alpha."""
    ts = np.linspace(0.0, t_end, m)
    ell = np.full(m, 0.7)
    ci = cumulative_trapezoid(ts, ell**-2.5)
    hs = u0_hs * np.exp(alpha * u0_l2 * ci)
    return RegularityTrace.from_columns(
        t=ts, hs=hs, ell=ell, energy=np.full(m, u0_l2**2)
    )


class TestSingleExp:
    def test_constant_norm_fits_zero(self):
        tr = RegularityTrace.from_columns(
            t=np.linspace(0, 1, 5), hs=np.full(5, 2.0), ell=np.full(5, 1.0),
            energy=np.ones(5),
        )
        rec = check_single_exp(tr)
        assert rec.fitted_constant == 0.0
        assert rec.holds

    def test_synthetic_recovery(self):
        rec = check_single_exp(_exp_trace(alpha=1.7))
        assert rec.fitted_constant == pytest.approx(1.7, abs=1e-10)
        assert rec.holds
        assert not rec.details["degenerate"]

    def test_degenerate_growth_without_integral(self):
        tr = RegularityTrace.from_columns(
            t=np.linspace(0, 1, 4), hs=np.array([1.0, 2.0, 3.0, 4.0]),
            energy=np.ones(4),
        )
        rec = check_single_exp(tr)
        assert math.isinf(rec.fitted_constant)
        assert rec.details["degenerate"]

    def test_curve_dominates(self):
        tr = _exp_trace(alpha=0.9)
        rec = check_single_exp(tr)
        curve = single_exp_curve(tr, rec)
        assert np.all(tr.column("hs") <= curve * (1 + 1e-12))

    def test_configured_constant(self):
        tr = _exp_trace(alpha=1.0)
        assert single_exp_holds_at(tr, 1.5).holds
        assert not single_exp_holds_at(tr, 0.5).holds
        with pytest.raises(UsageError):
            single_exp_holds_at(tr, 0.0)

    def test_needs_two_samples(self):
        tr = RegularityTrace()
        accumulate(tr, _sample(0.0, hs=1.0))
        with pytest.raises(UsageError):
            check_single_exp(tr)


class TestOtherExponentials:
    def test_gronwall_recovery(self):
        ts = np.linspace(0, 1, 31)
        beta, c = 2.0, 1.3
        tr = RegularityTrace.from_columns(
            t=ts, du_linf=np.full(31, beta), hs=1.5 * np.exp(c * beta * ts)
        )
        rec = check_gronwall_hs(tr)
        assert rec.fitted_constant == pytest.approx(c, abs=1e-10)

    def test_vorticity_l2_recovery(self):
        ts = np.linspace(0, 1, 31)
        beta, c = 1.1, 0.8
        tr = RegularityTrace.from_columns(
            t=ts, omega_linf=np.full(31, beta),
            omega_l2=0.7 * np.exp(c * beta * ts),
        )
        rec = check_vorticity_l2(tr)
        assert rec.fitted_constant == pytest.approx(c, abs=1e-10)

    def test_double_exp_zero_trajectory(self):
        rec = check_double_exp(_zero_trace())
        assert rec.fitted_constant == 0.0
        assert rec.holds

    def test_double_exp_synthetic_recovery(self):
        ts = np.linspace(0, 1, 41)
        beta, c, u0 = 3.0, 1.9, 0.4
        bkm = beta * ts
        tr = RegularityTrace.from_columns(
            t=ts, omega_linf=np.full(41, beta),
            hs=u0 * np.exp(np.exp(c * bkm)),
        )
        rec = check_double_exp(tr, u0_hs=u0)
        assert rec.fitted_constant == pytest.approx(c, abs=1e-8)
        curve = double_exp_curve(tr, rec)
        assert np.all(tr.column("hs") <= curve * (1 + 1e-10))

    def test_double_exp_inactive_below_threshold(self):
        """Samples under e * hs(0) don't constrain the nested exponential."""
        ts = np.linspace(0, 1, 5)
        tr = RegularityTrace.from_columns(
            t=ts, omega_linf=np.ones(5), hs=np.full(5, 2.0)
        )
        rec = check_double_exp(tr, u0_hs=1.0)
        assert rec.fitted_constant == 0.0


class TestRatioBounds:
    def test_constantin_zero_trace(self):
        rec = check_constantin(_zero_trace(), u0_l2=1.0)
        assert rec.fitted_constant == 0.0

    def test_constantin_synthetic(self):
        ts = np.linspace(0, 1, 11)
        ell = np.linspace(1.0, 0.25, 11)
        c, u0 = 0.42, 2.0
        tr = RegularityTrace.from_columns(
            t=ts, ell=ell, omega_linf=c * u0 * ell**-2.5,
            energy=np.full(11, u0**2),
        )
        rec = check_constantin(tr)
        assert rec.fitted_constant == pytest.approx(c, rel=1e-12)
        assert rec.details["ratio_spread"] == pytest.approx(1.0, rel=1e-12)

    def test_constantin_vanishing_scale_is_vacuous(self):
        """A zero length scale makes the bound infinitely weak at that
        sample, so it cannot drive the fitted constant."""
        ts = np.linspace(0, 1, 3)
        tr = RegularityTrace.from_columns(
            t=ts, ell=np.array([1.0, 0.0, 1.0]),
            omega_linf=np.array([2.0, 5.0, 2.0]), energy=np.ones(3),
        )
        rec = check_constantin(tr)
        assert rec.fitted_constant == pytest.approx(2.0, rel=1e-12)

    def test_constantin_zero_denominator(self):
        tr = RegularityTrace.from_columns(
            t=np.linspace(0, 1, 3), ell=np.ones(3), omega_linf=np.ones(3),
            energy=np.zeros(3),
        )
        rec = check_constantin(tr)
        assert math.isinf(rec.fitted_constant)

    def test_du_length_scale_synthetic(self):
        ts = np.linspace(0, 1, 11)
        ell = np.linspace(2.0, 0.5, 11)
        c, u0 = 1.21, 3.0
        total = c * u0 * ell**-2.5
        tr = RegularityTrace.from_columns(
            t=ts, ell=ell, dup_linf=0.25 * total, dum_linf=0.75 * total,
            energy=np.full(11, u0**2),
        )
        rec = check_du_length_scale(tr)
        assert rec.fitted_constant == pytest.approx(c, rel=1e-12)

    def test_du_length_scale_override_column(self):
        ts = np.linspace(0, 1, 5)
        tr = RegularityTrace.from_columns(
            t=ts, ell=np.ones(5), dup_linf=np.ones(5), dum_linf=np.zeros(5),
            energy=np.ones(5),
        )
        base = check_du_length_scale(tr).fitted_constant
        halved = check_du_length_scale(tr, ell=np.full(5, 0.5)).fitted_constant
        assert halved == pytest.approx(base * 0.5**2.5, rel=1e-12)

    def test_zero_over_zero_is_zero(self):
        rec = check_du_length_scale(_zero_trace(), u0_l2=1.0)
        assert rec.fitted_constant == 0.0


class TestBesovDiff:
    def test_constant_norm_fits_zero(self):
        ts = np.linspace(0, 1, 9)
        tr = RegularityTrace.from_columns(
            t=ts, besov=np.full(9, 3.0), du_linf=np.ones(9)
        )
        assert check_besov_diff_inequality(tr).fitted_constant == 0.0

    def _fitted(self, h, beta=1.0):
        ts = np.arange(0.0, 0.5 + h / 2, h)
        tr = RegularityTrace.from_columns(
            t=ts, besov=np.exp(beta * ts), du_linf=np.full(len(ts), beta)
        )
        return check_besov_diff_inequality(tr).fitted_constant

    def test_synthetic_near_one(self):
        assert self._fitted(0.01) == pytest.approx(1.0, abs=1e-4)

    def test_second_order_in_cadence(self):
        e1 = abs(self._fitted(0.02) - 1.0)
        e2 = abs(self._fitted(0.01) - 1.0)
        assert e1 / e2 == pytest.approx(4.0, rel=0.25)

    def test_needs_three_samples(self):
        tr = RegularityTrace.from_columns(t=np.array([0.0, 1.0]), besov=np.ones(2))
        with pytest.raises(UsageError):
            check_besov_diff_inequality(tr)

    def test_degenerate_growth_without_gradient(self):
        ts = np.linspace(0, 1, 5)
        tr = RegularityTrace.from_columns(
            t=ts, besov=np.exp(ts), du_linf=np.zeros(5)
        )
        rec = check_besov_diff_inequality(tr)
        assert math.isinf(rec.fitted_constant)
        assert rec.details["degenerate"]


class TestLedger:
    def test_all_bounds_present(self, tg_mini_trace):
        ledger = build_ledger(tg_mini_trace)
        ids = [r.bound_id for r in ledger.records]
        assert ids == [
            "gronwall_hs", "vorticity_l2", "double_exp", "single_exp",
            "du_length_scale", "besov_diff", "constantin",
        ]
        assert all(r.holds for r in ledger.records)
        d = ledger.as_dict()
        assert d["context"]["samples"] == len(tg_mini_trace)
        assert len(d["bounds"]) == 7

    def test_fits_stable_under_cadence_halving(self, tg_mini_trace):
        coarse = resample(tg_mini_trace, 2)
        for check in (check_single_exp, check_constantin):
            a = check(tg_mini_trace).fitted_constant
            b = check(coarse).fitted_constant
            if a == b == 0.0:
                continue
            assert abs(a - b) <= 0.01 * max(abs(a), abs(b))

    def test_integral_shadow(self, tg_mini_trace):
        """The vorticity-sup integral is dominated by the fitted ratio
        constant times the length-scale integral."""
        c = check_constantin(tg_mini_trace).fitted_constant
        u0 = float(np.sqrt(tg_mini_trace.column("energy")[0]))
        bkm = tg_mini_trace.column("bkm_int")[-1]
        ci = tg_mini_trace.column("const_int")[-1]
        assert bkm <= c * u0 * ci * (1 + 1e-12)


class TestBlowupMachinery:
    def test_constant_norm_uniform_steps(self):
        a, c = 4.0, 2.0
        ts = np.linspace(0, 3, 61)
        tr = RegularityTrace.from_columns(
            t=ts, hs=np.full(61, a), energy=np.ones(61)
        )
        est = blowup_machinery(tr, c_delta=c)
        gaps = np.diff(est.times)
        assert np.allclose(gaps, 1.0 / (c * a), rtol=1e-12)
        assert len(est.times) == int(np.floor(3.0 * c * a)) + 1
        assert np.allclose(est.rhos, est.rhos[0], rtol=1e-12)

    def test_unit_ratio_rho_is_e(self):
        """With hs identically the starting L2 norm and the step constant
        tuned so the amplification prefactor is one, every rho is e."""
        delta = 0.5
        c = (delta_tilde(delta)) ** (1.0 / (1.0 - delta_tilde(delta)))
        assert b_delta(delta, c) == pytest.approx(1.0, rel=1e-12)
        ts = np.linspace(0, 2, 41)
        tr = RegularityTrace.from_columns(
            t=ts, hs=np.full(41, 5.0), energy=np.full(41, 25.0)
        )
        est = blowup_machinery(tr, c_delta=c, delta=delta)
        assert np.allclose(est.rhos, math.e, rtol=1e-12)
        assert est.rhos_exceed_one

    def test_planted_power_law(self):
        """hs = (T* - t)^(-6/5) must be recognized with the right exponent
        and lower-bounded by the calibrated rate curve."""
        t_star = 1.0
        ts = np.linspace(0.0, 0.9, 1801)
        hs = (t_star - ts) ** (-1.2)
        tr = RegularityTrace.from_columns(t=ts, hs=hs, energy=np.ones(len(ts)))
        est = blowup_machinery(tr, c_delta=20.0, delta=0.5, t_star=t_star)
        assert est.fitted_exponent == pytest.approx(1.2, abs=0.06)
        assert np.all(est.rate_curve <= hs * (1 + 1e-9))
        assert est.rate_curve_holds
        assert len(est.times) > 20
        assert np.all(np.diff(est.times) > 0)
        assert np.all(np.diff(est.hs_at_times) > 0)
        assert est.geometric_ok
        assert est.rho_recursion_ok
        assert est.rhos_exceed_one

    def test_smallness_flag(self):
        """delta = 1/2 gives exponent 1/6, so the norm must beat the
        starting L2 norm by 60^6 before the prefactor drops under 0.1."""
        ts = np.linspace(0, 1, 11)
        tr = RegularityTrace.from_columns(
            t=ts, hs=np.full(11, 1e12), energy=np.ones(11)
        )
        est = blowup_machinery(tr, c_delta=1.0, max_steps=50)
        assert est.smallness == pytest.approx(6.0 * 1e-2, rel=1e-10)
        assert est.smallness_ok
        small = blowup_machinery(
            RegularityTrace.from_columns(t=ts, hs=np.ones(11), energy=np.ones(11)),
            c_delta=1.0,
        )
        assert not small.smallness_ok

    def test_step_cap(self):
        ts = np.linspace(0, 10, 101)
        tr = RegularityTrace.from_columns(
            t=ts, hs=np.full(101, 50.0), energy=np.ones(101)
        )
        est = blowup_machinery(tr, c_delta=10.0, max_steps=5)
        assert est.step_cap_hit
        assert len(est.times) == 5

    def test_validation(self):
        tr = RegularityTrace.from_columns(
            t=np.linspace(0, 1, 5), hs=np.ones(5), energy=np.ones(5)
        )
        with pytest.raises(UsageError):
            blowup_machinery(tr, c_delta=0.0)
        with pytest.raises(UsageError):
            blowup_machinery(tr, c_delta=1.0, t_star=0.5)
        with pytest.raises(UsageError):
            blowup_machinery(tr, c_delta=1.0, t0=2.0)
        bad = RegularityTrace.from_columns(
            t=np.linspace(0, 1, 5), hs=np.zeros(5), energy=np.ones(5)
        )
        with pytest.raises(UsageError):
            blowup_machinery(bad, c_delta=1.0)

    def test_delta_tilde_values(self):
        assert delta_tilde(2.5) == pytest.approx(0.5, rel=1e-15)
        for d in np.linspace(0.05, 5.0, 40):
            assert 0.0 < delta_tilde(d) < 1.0
        with pytest.raises(UsageError):
            delta_tilde(0.0)
        with pytest.raises(UsageError):
            b_delta(0.5, 0.0)

    def test_fit_power_law_exact(self):
        x = np.array([0.25, 0.5, 1.0, 2.0])
        y = 3.0 * x**-1.2
        slope, intercept = fit_power_law(x, y)
        assert slope == pytest.approx(-1.2, abs=1e-12)
        assert math.exp(intercept) == pytest.approx(3.0, rel=1e-12)
        with pytest.raises(UsageError):
            fit_power_law(np.array([1.0, -1.0]), np.array([1.0, 1.0]))


class TestDeltaScaling:
    def test_synthetic_sweep_slope(self):
        """Length scales planted to scale like delta^(2/5) per exponent give
        fitted constants scaling like delta^-1."""
        ts = np.linspace(0, 1, 11)
        u0 = 1.0
        deltas = (0.25, 0.5, 1.0)
        total = np.full(11, 2.0)
        sweep = {}
        for d in deltas:
            ell = np.full(11, (2.0 / (1.0 / d * u0)) ** (-1.0 / 2.5))
            sweep[d] = {"ell": ell, "holder": np.zeros(11)}
        tr = RegularityTrace.from_columns(
            t=ts, dup_linf=0.5 * total, dum_linf=0.5 * total,
            energy=np.full(11, u0**2),
        )
        ds, consts, slope = delta_scaling(tr, sweep)
        assert np.allclose(consts, [1.0 / d for d in deltas], rtol=1e-12)
        assert slope == pytest.approx(-1.0, abs=1e-10)
