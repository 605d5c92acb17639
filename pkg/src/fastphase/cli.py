"""Command-line interface: instance generation, solving, winding
inspection, direct initialization, and the experiment sweeps.

Exit codes: 0 success, 2 I/O or file-format failure, 3 solver did not
converge, 64 usage error.  Shapes are written ``AxB`` and multi-indices
``a,b``; the ``FASTPHASE_SEED`` environment variable supplies the
default seed.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .instance import (
    DomainError,
    Instance,
    InfeasibleMaskError,
    ParameterError,
    SchwarzSpec,
    add_gaussian_noise,
    generate_schwarz_object,
    load_instance,
    measure,
    save_instance,
)
from .pipeline import (
    NoiseSweepConfig,
    align,
    fast_phase_retrieve,
    median_rmse_by_snr,
    noise_sweep,
    quadrature_study,
    rmse_db,
    rows_to_csv,
    wf_comparison,
)
from .schwarz import SchwarzConfig, schwarz_init
from .tensor import ShapeError, TensorFormatError, write_tensor
from .trustregion import TrustRegionConfig
from .winding import winding_from_measurement
from .wirtinger import basin_check, condition_study

_USAGE_ERRORS = (ParameterError, DomainError, InfeasibleMaskError)
_IO_ERRORS = (TensorFormatError, ShapeError, OSError, json.JSONDecodeError, KeyError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(64)


def _parse_shape(text: str) -> tuple:
    try:
        dims = tuple(int(v) for v in text.lower().split("x"))
    except ValueError as exc:
        raise ParameterError(f"bad shape {text!r}; expected e.g. 8x8") from exc
    if not dims or any(v < 1 for v in dims):
        raise ParameterError(f"shape entries must be positive, got {text!r}")
    return dims


def _parse_index(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise ParameterError(f"bad multi-index {text!r}; expected e.g. 1,1") from exc


def _parse_floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(","))


def _parse_ints(text: str) -> tuple:
    return tuple(int(v) for v in text.split(","))


def _default_seed() -> int:
    return int(os.environ.get("FASTPHASE_SEED", "0"))


def _build_parser() -> _Parser:
    p = _Parser(prog="fastphase", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance directory", parents=[])
    g.add_argument("--shape", required=True, type=_parse_shape, help="support, e.g. 8x8")
    g.add_argument("--w", type=_parse_index, default=None, help="anchor index, e.g. 1,1 (default 0,..,0)")
    g.add_argument("--rho", type=float, default=2.0, help="dominance ratio, must be >= 2 (default 2)")
    g.add_argument("--seed", type=int, default=None, help="RNG seed (default $FASTPHASE_SEED or 0)")
    g.add_argument("--snr-db", type=float, default=math.inf, help="measurement SNR in dB (default inf = noiseless)")
    g.add_argument("--m-factor", type=int, default=2, help="measurement grid factor per axis (default 2)")
    g.add_argument("--out", required=True, help="output instance directory")

    s = sub.add_parser("solve", help="run the full pipeline on an instance directory")
    s.add_argument("--instance", required=True, help="instance directory")
    s.add_argument("--out", default=None, help="output directory (default: the instance directory)")
    s.add_argument("--epsilon", type=float, default=0.0, help="stop when cost <= epsilon (default 0: gradient test only)")
    s.add_argument("--grad-tol", type=float, default=None, help="stacked gradient tolerance (default 1e-14*|y|)")
    s.add_argument("--max-outer", type=int, default=500, help="outer iteration cap (default 500)")
    s.add_argument("--factor", type=int, default=1, help="transform resampling factor (default 1)")

    wcmd = sub.add_parser("winding", help="estimate the winding index of an instance")
    wcmd.add_argument("--instance", required=True, help="instance directory")

    si = sub.add_parser("schwarz-init", help="write the direct initializer of an instance")
    si.add_argument("--instance", required=True, help="instance directory")
    si.add_argument("--w", type=_parse_index, default=None, help="anchor override (default: estimate)")
    si.add_argument("--factor", type=int, default=1, help="transform resampling factor (default 1)")
    si.add_argument("--out", required=True, help="output .fpt path")

    sweep = sub.add_parser("sweep", help="experiment sweeps emitting CSV/JSON")
    ssub = sweep.add_subparsers(dest="sweep_kind", required=True)

    sn = ssub.add_parser("noise", help="RMSE vs SNR study")
    sn.add_argument("--config", default=None, help="JSON config file (overrides flags)")
    sn.add_argument("--shape", type=_parse_shape, default=(32, 32), help="object shape (default 32x32)")
    sn.add_argument("--impulse-position", type=_parse_index, default=(0, 0), help="impulse index (default 0,0)")
    sn.add_argument("--brightness", type=float, default=1024.0, help="impulse brightness (default 1024 = 32^2)")
    sn.add_argument("--snr-list", type=_parse_floats, default=(10, 20, 30, 40, 50, 60), help="SNR values in dB (default 10..60)")
    sn.add_argument("--trials", type=int, default=25, help="trials per SNR (default 25)")
    sn.add_argument("--seed", type=int, default=None, help="base seed (default $FASTPHASE_SEED or 0)")
    sn.add_argument("--m-factor", type=int, default=2, help="measurement grid factor (default 2)")
    sn.add_argument("--jobs", type=int, default=1, help="parallel workers; results independent of K (default 1)")
    sn.add_argument("--out", required=True, help="output CSV path")
    sn.add_argument("--summary", default=None, help="optional summary JSON path")

    sq = ssub.add_parser("quadrature", help="transform exactness vs resampling factor")
    sq.add_argument("--shape", type=_parse_shape, default=(16, 16), help="object shape (default 16x16)")
    sq.add_argument("--factors", type=_parse_ints, default=(1, 2, 4, 8), help="resampling factors (default 1,2,4,8)")
    sq.add_argument("--trials", type=int, default=10, help="instances per factor (default 10)")
    sq.add_argument("--rho", type=float, default=100.0, help="dominance ratio of the instances (default 100)")
    sq.add_argument("--seed", type=int, default=None, help="base seed (default $FASTPHASE_SEED or 0)")
    sq.add_argument("--out", required=True, help="output CSV path")

    sw = ssub.add_parser("wf", help="gradient-descent baseline vs the pipeline")
    sw.add_argument("--sides", type=_parse_ints, default=(2, 3, 4, 5), help="square side lengths (default 2,3,4,5)")
    sw.add_argument("--trials", type=int, default=1000, help="random starts per side (default 1000)")
    sw.add_argument("--seed", type=int, default=None, help="base seed (default $FASTPHASE_SEED or 0)")
    sw.add_argument("--instances-per-side", type=int, default=20, help="instances per side (default 20)")
    sw.add_argument("--wf-iters", type=int, default=2000, help="gradient-descent iteration cap (default 2000)")
    sw.add_argument("--out", required=True, help="output summary JSON path")

    sc = ssub.add_parser("condition", help="Hessian conditioning vs dominance ratio")
    sc.add_argument("--ratios", type=_parse_floats, default=(2, 10, 100, 1e4, 1e6), help="dominance ratios (default 2,10,100,1e4,1e6)")
    sc.add_argument("--shape", type=_parse_shape, default=(4, 4), help="object shape, N <= 256 (default 4x4)")
    sc.add_argument("--seed", type=int, default=None, help="base seed (default $FASTPHASE_SEED or 0)")
    sc.add_argument("--out", required=True, help="output CSV path")

    return p


def _cmd_gen(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    w = args.w if args.w is not None else (0,) * len(args.shape)
    spec = SchwarzSpec(args.shape, w, args.rho, seed)
    truth = generate_schwarz_object(spec)
    m = tuple(args.m_factor * s for s in args.shape)
    y = measure(truth, m)
    meta = {"seed": seed, "rho": args.rho, "w": list(w), "snr_db": _json_float(args.snr_db)}
    noise_sigma = None
    if not (math.isinf(args.snr_db) and args.snr_db > 0):
        tn = float(np.vdot(truth, truth).real)
        y = add_gaussian_noise(y, args.snr_db, tn, seed)
        noise_sigma = math.sqrt(tn / 10.0 ** (args.snr_db / 10.0))
    save_instance(args.out, Instance(y=y, support=args.shape, truth=truth,
                                     noise_sigma=noise_sigma, meta=meta))
    return 0


def _json_float(v: float):
    return "inf" if math.isinf(v) and v > 0 else v


def _cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    out_dir = args.out or args.instance
    os.makedirs(out_dir, exist_ok=True)
    cfg_tr = TrustRegionConfig(cost_tol=args.epsilon, grad_tol=args.grad_tol,
                               max_outer=args.max_outer)
    cfg_s = SchwarzConfig(args.factor)
    x_hat, report, w = fast_phase_retrieve(inst.y, inst.support, cfg_s, cfg_tr)
    write_tensor(os.path.join(out_dir, "xhat.fpt"), x_hat)
    payload = {
        "w": list(w),
        "converged": report.converged,
        "iterations": report.iterations,
        "cg_iters_total": report.cg_iters_total,
        "final_cost": report.cost_trace[-1],
        "cost_trace": report.cost_trace,
        "wall_seconds": report.wall_seconds,
        "warnings": report.warnings,
    }
    if inst.truth is not None:
        x0 = schwarz_init(inst.y, w, inst.support, cfg_s)
        ref = align(inst.truth, x0).aligned
        payload["basin_inside"] = basin_check(x0, ref, inst.y, w).inside
        payload["rmse_db"] = rmse_db(x_hat, inst.truth)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0 if report.converged else 3


def _cmd_winding(args) -> int:
    inst = load_instance(args.instance)
    res = winding_from_measurement(inst.y, inst.support)
    print("w=" + ",".join(str(v) for v in res.w) + (" (tie)" if res.tie else ""))
    return 0


def _cmd_schwarz_init(args) -> int:
    inst = load_instance(args.instance)
    w = args.w or winding_from_measurement(inst.y, inst.support).w
    x0 = schwarz_init(inst.y, w, inst.support, SchwarzConfig(args.factor))
    write_tensor(args.out, x0)
    return 0


def _cmd_sweep_noise(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        cfg = NoiseSweepConfig(
            shape=tuple(raw["shape"]),
            impulse_position=tuple(raw.get("impulse_position", (0,) * len(raw["shape"]))),
            impulse_brightness=float(raw.get("impulse_brightness", 1024.0)),
            snr_db_list=tuple(float("inf") if v == "inf" else float(v)
                              for v in raw.get("snr_db_list", (10, 20, 30, 40, 50, 60))),
            trials=int(raw.get("trials", 25)),
            seed=int(raw.get("seed", seed)),
            m_factor=int(raw.get("m_factor", 2)),
        )
    else:
        cfg = NoiseSweepConfig(
            shape=args.shape,
            impulse_position=args.impulse_position,
            impulse_brightness=args.brightness,
            snr_db_list=args.snr_list,
            trials=args.trials,
            seed=seed,
            m_factor=args.m_factor,
        )
    rows = noise_sweep(cfg, jobs=args.jobs)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows))
    if args.summary:
        medians = median_rmse_by_snr(rows)
        summary = {
            "median_rmse_db_by_snr": {_format_snr_key(k): v for k, v in medians.items()},
            "rows": len(rows),
            "failed_rows": sum(1 for r in rows if r.status != "ok"),
        }
        with open(args.summary, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _format_snr_key(v: float) -> str:
    return "inf" if math.isinf(v) else repr(float(v))


def _cmd_sweep_quadrature(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    rows = quadrature_study(args.shape, args.factors, args.trials, args.rho, seed)
    lines = ["factor,max_rel_err,mean_rel_err"]
    lines += [f"{r['factor']},{r['max_rel_err']!r},{r['mean_rel_err']!r}" for r in rows]
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


def _cmd_sweep_wf(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    summary = wf_comparison(
        args.sides,
        args.trials,
        seed=seed,
        instances_per_side=args.instances_per_side,
        wf_max_iter=args.wf_iters,
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def _cmd_sweep_condition(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    plain = condition_study(args.ratios, args.shape, precond=False, seed=seed)
    pre = condition_study(args.ratios, args.shape, precond=True, seed=seed)
    lines = ["ratio,cond_unpreconditioned,cond_preconditioned"]
    lines += [f"{r!r},{cu!r},{cp!r}" for (r, cu), (_, cp) in zip(plain, pre)]
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "winding":
            return _cmd_winding(args)
        if args.command == "schwarz-init":
            return _cmd_schwarz_init(args)
        if args.command == "sweep":
            if args.sweep_kind == "noise":
                return _cmd_sweep_noise(args)
            if args.sweep_kind == "quadrature":
                return _cmd_sweep_quadrature(args)
            if args.sweep_kind == "wf":
                return _cmd_sweep_wf(args)
            if args.sweep_kind == "condition":
                return _cmd_sweep_condition(args)
        parser.error(f"unknown command {args.command!r}")
    except SystemExit:
        raise
    except _USAGE_ERRORS as exc:
        print(f"fastphase: error: {exc}", file=sys.stderr)
        return 64
    except _IO_ERRORS as exc:
        print(f"fastphase: i/o error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
