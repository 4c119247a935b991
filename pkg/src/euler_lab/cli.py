"""Command line: run | verify | diagnose | report.

Exit codes: 0 success, 1 check failure, 2 usage or config error,
3 run terminated by blowup detection, 4 corrupt input file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import gradients, ic, norms, spectral
from .config import ConfigError, RunConfig, load_config, parse_config
from .errors import BlowupDetected, CorruptSnapshotError, UsageError
from .io import (
    ensure_dir,
    read_snapshot,
    read_trace_csv,
    snapshot_sample,
    write_json,
    write_snapshot,
    write_trace_csv,
)
from .monitor import (
    SAMPLE_COLUMNS,
    SampleEvaluator,
    blowup_machinery,
    build_ledger,
    single_exp_holds_at,
)
from .solver import SolverConfig, run as run_trajectory

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_BLOWUP = 3
EXIT_CORRUPT = 4


def _evaluator_from(cfg: RunConfig) -> SampleEvaluator:
    return SampleEvaluator(
        delta=cfg.delta,
        cutoff_l=cfg.cutoff_l,
        pair_budget=cfg.pair_budget,
        upsample=cfg.upsample,
        s=cfg.resolved_s(),
        extra_deltas=cfg.extra_deltas,
    )


def _initial_field(cfg: RunConfig):
    grid = spectral.Grid3(n=cfg.n, box_length=cfg.box_length)
    params = {"amplitude": cfg.amplitude}
    if cfg.ic_type in ("random", "random_bandlimited"):
        params.update(seed=cfg.seed, k_min=cfg.band[0], k_max=cfg.band[1])
    return ic.make_initial(cfg.ic_type, grid, **params)


def cmd_run(args) -> int:
    cfg = load_config(args.config, args.set or [])
    ensure_dir(cfg.out_dir)
    u0 = _initial_field(cfg)
    evaluator = _evaluator_from(cfg)
    solver_cfg = SolverConfig(
        t_end=cfg.t_end,
        record_interval=cfg.record_interval,
        dt=cfg.dt,
        cfl_safety=cfg.cfl_safety,
        nonlinear_form=cfg.nonlinear_form,
        hs_ceiling=cfg.hs_ceiling,
    )

    record_counter = {"i": 0}

    def sink(state, sample):
        i = record_counter["i"]
        record_counter["i"] += 1
        if cfg.snapshot_every > 0 and i % cfg.snapshot_every == 0:
            diag = {
                "delta": evaluator.delta,
                "cutoff_l": evaluator.cutoff_l,
                "pair_budget": evaluator.pair_budget,
                "upsample": evaluator.upsample,
                "s": evaluator.s,
                "u0_l2": evaluator.u0_l2,
            }
            write_snapshot(
                os.path.join(cfg.out_dir, f"snapshot_{i:06d}.snap"),
                state.u,
                state.t,
                sample=sample,
                diag=diag,
            )

    trace = run_trajectory(u0, solver_cfg, evaluate=evaluator, sink=sink)

    if "csv" in cfg.formats:
        write_trace_csv(os.path.join(cfg.out_dir, "trace.csv"), trace)
    if "json" in cfg.formats:
        write_json(os.path.join(cfg.out_dir, "trace_meta.json"), trace.metadata)
        if len(trace) >= 3:
            ledger = build_ledger(trace)
            if cfg.c_delta_growth is not None:
                ledger.records.append(single_exp_holds_at(trace, cfg.c_delta_growth))
            write_json(os.path.join(cfg.out_dir, "ledger.json"), ledger.as_dict())
        else:
            ledger = None
        if cfg.c_delta is not None and len(trace) >= 2:
            est = blowup_machinery(trace, cfg.c_delta, cfg.delta, cfg.t_star)
            write_json(os.path.join(cfg.out_dir, "estimate.json"), est.as_dict())
    else:
        ledger = build_ledger(trace) if len(trace) >= 3 else None
    if "svg" in cfg.formats and ledger is not None:
        from .plots import render_all

        render_all(trace, ledger, cfg.out_dir)

    if trace.metadata.get("terminated") == "blowup":
        print(
            f"run terminated: {trace.metadata.get('termination_reason', 'blowup')}",
            file=sys.stderr,
        )
        return EXIT_BLOWUP
    print(f"run complete: {len(trace)} samples -> {cfg.out_dir}")
    return EXIT_OK


# --------------------------------------------------------------------------
# verify
# --------------------------------------------------------------------------

def _check(name, residual, threshold, lines) -> bool:
    ok = residual <= threshold
    lines.append(
        f"{'PASS' if ok else 'FAIL'}  {name:44s} residual={residual:.3e} (<= {threshold:.1e})"
    )
    return ok


def _verify_kernels(lines) -> bool:
    ok = True
    g = spectral.Grid3(n=32)
    u = ic.random_band_limited(g, seed=7, k_min=1, k_max=5)
    w = spectral.curl(u)
    dev = gradients.gradient_tensor_of_vorticity_check(w)
    ok &= _check("multiplier vs spectral differentiation", dev, 1e-10, lines)

    tg = ic.taylor_green(g)
    res = gradients.verify_antisymmetric_identity(tg, samples=10_000, seed=0)
    ok &= _check("rotation part acts as half curl wedge", res, 1e-9, lines)

    du = gradients.du_by_differentiation(tg)
    _, dminus = gradients.split_symmetric(du)
    ratio = dminus.frobenius_l2() / spectral.l2_norm(spectral.curl(tg))
    ok &= _check("antisymmetric Frobenius/vorticity ratio", abs(ratio - 0.5 ** 0.5), 5e-3, lines)

    worst = 0.0
    base = gradients.spherical_mean_sigma(component=None)
    worst = max(worst, abs(base["mean"]))
    for i in range(3):
        for j in range(3):
            for ell in range(3):
                got = gradients.spherical_mean_sigma(component=(i, j, ell))
                worst = max(worst, abs(got["mean"]))
    ok &= _check("spherical means of angular symbols", worst, 1e-8, lines)

    tr = np.max(np.abs(gradients.split_symmetric(du)[0].trace_field().data))
    ok &= _check("symmetric part is trace-free", tr, 1e-10, lines)
    return ok


def _verify_norms(lines) -> bool:
    ok = True
    g = spectral.Grid3(n=16)
    w = spectral.curl(ic.taylor_green(g))
    cfg = norms.HolderConfig(delta=0.5, cutoff_l=g.box_length, pair_budget=20_000, upsample=1)
    est = norms.holder_seminorm(w, cfg)
    exact = norms.holder_seminorm_all_pairs(w, 0.5, g.box_length)
    ok &= _check("sampled Holder vs all-pairs oracle", abs(est - exact) / exact, 1e-2, lines)

    u = ic.random_band_limited(g, seed=11, k_min=1, k_max=4)
    s = 1.7
    lo, hi = norms.besov_sobolev_window(u, s)
    ratio = norms.besov_norm(u, s) / norms.sobolev_norm(u, s)
    contained = (lo <= ratio * (1 + 1e-12)) and (ratio <= hi * (1 + 1e-12))
    ok &= _check("shell/Sobolev ratio inside sharp window", 0.0 if contained else 1.0, 0.5, lines)

    hs0 = norms.sobolev_norm(u, 0.0)
    ok &= _check("order-zero Sobolev equals L2", abs(hs0 - spectral.l2_norm(u)), 1e-12, lines)

    phys = spectral.to_physical(u)
    ok &= _check(
        "Parseval: L2 agrees across spaces",
        abs(spectral.l2_norm(phys) - spectral.l2_norm(u)),
        1e-10,
        lines,
    )

    ell = norms.length_scale(w, u0_l2=spectral.l2_norm(u), cfg=cfg)
    ok &= _check("length scale clamped by cutoff", max(0.0, ell - g.box_length), 0.0, lines)
    return ok


def cmd_verify(args) -> int:
    suite = args.suite
    if suite not in ("kernels", "norms", "all"):
        print(f"unknown suite {suite!r}; choose kernels, norms, or all", file=sys.stderr)
        return EXIT_USAGE
    lines: list = []
    ok = True
    if suite in ("kernels", "all"):
        ok &= _verify_kernels(lines)
    if suite in ("norms", "all"):
        ok &= _verify_norms(lines)
    print("\n".join(lines))
    if suite in ("kernels", "all") and args.tables:
        print()
        print(gradients.transcription_table())
    print(f"{'all checks passed' if ok else 'CHECK FAILURES PRESENT'}")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# --------------------------------------------------------------------------
# diagnose
# --------------------------------------------------------------------------

def cmd_diagnose(args) -> int:
    field, header = read_snapshot(args.snapshot)
    diag = dict(header.get("diag") or {})
    overrides = args.set or []
    cfg = parse_config("", overrides) if overrides else None
    evaluator = SampleEvaluator(
        delta=(cfg.delta if cfg else diag.get("delta", 0.5)),
        cutoff_l=(cfg.cutoff_l if cfg else diag.get("cutoff_l")),
        pair_budget=(cfg.pair_budget if cfg else diag.get("pair_budget", 10_000)),
        upsample=(cfg.upsample if cfg else diag.get("upsample", 2)),
        s=(cfg.resolved_s() if cfg else diag.get("s")),
    )
    if not overrides and diag.get("u0_l2") is not None:
        evaluator.u0_l2 = float(diag["u0_l2"])
    sample = evaluator.evaluate_physical(header["time"], field)
    embedded = snapshot_sample(header)
    out = {name: getattr(sample, name) for name in SAMPLE_COLUMNS}
    matches = None
    if embedded is not None:
        # integrals are run-history quantities; carry them over
        out["bkm_int"] = embedded.bkm_int
        out["const_int"] = embedded.const_int
        instantaneous = [c for c in SAMPLE_COLUMNS if c not in ("bkm_int", "const_int")]
        matches = all(out[c] == getattr(embedded, c) for c in instantaneous)
    print(json.dumps({"sample": out, "matches_embedded": matches}, indent=2, sort_keys=True))
    if matches is False:
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_report(args) -> int:
    trace = read_trace_csv(args.trace)
    out_dir = args.out or os.path.dirname(os.path.abspath(args.trace))
    ensure_dir(out_dir)
    if len(trace) < 3:
        print("trace too short for bound fitting; nothing to render", file=sys.stderr)
        return EXIT_USAGE
    ledger = build_ledger(trace)
    write_json(os.path.join(out_dir, "ledger.json"), ledger.as_dict())
    from .plots import render_all

    paths = render_all(trace, ledger, out_dir)
    print("\n".join(paths))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="euler-lab",
        description="periodic-box Euler solver with regularity diagnostics",
    )
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="integrate a configuration and write artifacts")
    pr.add_argument("config", help="path to key=value config file")
    pr.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    pr.set_defaults(fn=cmd_run)

    pv = sub.add_parser("verify", help="run the built-in kernel/norm check suites")
    pv.add_argument("suite", nargs="?", default="all", help="kernels | norms | all")
    pv.add_argument("--tables", action="store_true", help="print the multiplier tables")
    pv.set_defaults(fn=cmd_verify)

    pd = sub.add_parser("diagnose", help="evaluate all diagnostics on a stored snapshot")
    pd.add_argument("snapshot", help="path to a snapshot file")
    pd.add_argument("--set", action="append", metavar="KEY=VALUE", help="override diag.* keys")
    pd.set_defaults(fn=cmd_diagnose)

    pp = sub.add_parser("report", help="re-render plots and ledger from an existing trace")
    pp.add_argument("trace", help="path to trace.csv")
    pp.add_argument("--out", help="output directory (default: alongside the trace)")
    pp.set_defaults(fn=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize other codes
        return EXIT_USAGE if exc.code not in (0,) else 0
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CorruptSnapshotError as exc:
        print(f"corrupt input: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except BlowupDetected as exc:
        print(f"blowup detected: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
