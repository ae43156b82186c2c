"""Command-line front end.

Subcommands: gen, encode, transmit, decode, sweep, optimize, bounds.
Exit codes: 0 success, 2 invalid configuration, 3 I/O error, 4 description
parse error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import harness, io, pipeline
from .channel import LossModel, transmit
from .codecs import Scheme, parse, serialize
from .config import DEFAULT_LLOYD_ITERS, ExperimentConfig, load_config
from .core import (
    SEED_PURPOSE_MATRIX,
    SEED_PURPOSE_SIGNAL,
    GenConfig,
    derive_seed,
    gen_sensing_matrix,
    gen_sparse_signal,
    relative_distortion,
    sense,
)
from .errors import CsmdcError, DescriptionParseError, InvalidConfigError
from .solvers import SolverOptions

EXIT_OK = 0
EXIT_INVALID_CONFIG = 2
EXIT_IO = 3
EXIT_PARSE = 4


def _parse_rates(text: str) -> list[int]:
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) == 2:
            start, stop = parts
            step = 1
        elif len(parts) == 3:
            start, stop, step = parts
        else:
            raise InvalidConfigError(f"bad rate range {text!r}")
        if step < 1 or stop < start:
            raise InvalidConfigError(f"bad rate range {text!r}")
        return list(range(start, stop + 1, step))
    return [int(text)]


def _cmd_gen(args: argparse.Namespace) -> int:
    signal_seed = derive_seed(args.seed, 0, SEED_PURPOSE_SIGNAL)
    matrix_seed = derive_seed(args.seed, 0, SEED_PURPOSE_MATRIX)
    signal = gen_sparse_signal(GenConfig(n=args.n, k=args.k, sigma_x2=args.sigma2, seed=signal_seed))
    phi = gen_sensing_matrix(args.m, args.n, matrix_seed)
    inst = io.Instance(
        signal=signal,
        measurements=sense(phi, signal),
        sigma_x2=args.sigma2,
        signal_seed=signal_seed,
    )
    io.save_instance(args.out, inst)
    print(f"wrote instance n={args.n} k={args.k} m={args.m} -> {args.out}")
    return EXIT_OK


def _mdsq_context_from_args(args, scale: float, side_bits: int, matrix_seed: int):
    return pipeline.mdsq_context_for(scale, side_bits, args.spread, args.lloyd_iters, matrix_seed)


def _cmd_encode(args: argparse.Namespace) -> int:
    inst = io.load_instance(args.measurements)
    y = inst.measurements
    if args.scheme == "gq":
        if args.B is None:
            raise InvalidConfigError("gq encoding needs --B (and optionally --b)")
        from .codecs import gq_encode

        d1, d2 = gq_encode(y, args.B, args.b)
    elif args.scheme == "split":
        if args.R is None:
            raise InvalidConfigError("split encoding needs --R")
        from .codecs import split_encode

        d1, d2 = split_encode(y, args.R)
    else:
        if args.side_bits is None:
            raise InvalidConfigError("mdsq encoding needs --side-bits")
        sigma_y = math.sqrt(inst.sigma_x2 * inst.signal.k / y.m)
        scale = float(np.float32(4.0 * sigma_y))
        ctx = _mdsq_context_from_args(args, scale, args.side_bits, y.matrix_seed)
        from .codecs import mdsq_encode_vec
        from .quantizers import codebook_to_bytes

        d1, d2 = mdsq_encode_vec(y, ctx.codebook)
        cb_path = Path(args.out_prefix + ".mdcb")
        cb_path.write_bytes(codebook_to_bytes(ctx.codebook))
    out1 = Path(args.out_prefix + ".desc1")
    out2 = Path(args.out_prefix + ".desc2")
    out1.write_bytes(serialize(d1))
    out2.write_bytes(serialize(d2))
    print(f"wrote {out1} ({len(serialize(d1))} bytes) and {out2} ({len(serialize(d2))} bytes)")
    return EXIT_OK


def _cmd_transmit(args: argparse.Namespace) -> int:
    descs = []
    for path in args.descriptions:
        descs.append(parse(Path(path).read_bytes()))
    if len(descs) != 2:
        raise InvalidConfigError("transmit expects exactly two description files")
    received, mask = transmit((descs[0], descs[1]), LossModel(p=args.p, seed=args.seed), args.trial)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    names = []
    for d in received:
        name = outdir / f"received.desc{d.desc_id}"
        name.write_bytes(serialize(d))
        names.append(str(name))
    print(json.dumps({"mask": f"{int(mask[0])}{int(mask[1])}", "received": names}))
    return EXIT_OK


def _solver_options(args: argparse.Namespace) -> SolverOptions:
    return SolverOptions(max_iters=args.max_iters, abs_tol=args.abs_tol, rel_tol=args.rel_tol)


def _cmd_decode(args: argparse.Namespace) -> int:
    descs = [parse(Path(path).read_bytes()) for path in args.descriptions]
    if not 1 <= len(descs) <= 2:
        raise InvalidConfigError("decode expects one or two description files")
    matrix_seed = descs[0].matrix_seed
    phi = gen_sensing_matrix(descs[0].m, descs[0].n, matrix_seed)
    opts = _solver_options(args)
    mdsq = None
    if descs[0].scheme == Scheme.MDSQ:
        if args.codebook:
            from .quantizers import codebook_from_bytes

            cb = codebook_from_bytes(Path(args.codebook).read_bytes())
            mdsq = pipeline.context_from_codebook(cb, matrix_seed)
        else:
            mdsq = _mdsq_context_from_args(args, descs[0].scale, descs[0].fine_bits, matrix_seed)
    if len(descs) == 2:
        result = pipeline.reconstruct_central(descs[0], descs[1], phi, args.kappa, opts, mdsq)
        case = "central"
    else:
        result = pipeline.reconstruct_side(descs[0], phi, args.kappa, opts, mdsq)
        case = f"side{descs[0].desc_id}"
    report = {"case": case, "iterations": result.iterations, "status": result.status}
    if args.ref:
        ref = io.load_instance(args.ref)
        report["rd"] = relative_distortion(ref.signal.theta, result.theta_hat)
    if args.out:
        np.savez_compressed(Path(args.out), theta_hat=result.theta_hat)
        report["out"] = args.out
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def _apply_common_overrides(cfg: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    from dataclasses import replace

    updates = {}
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.trials is not None:
        updates["trials"] = args.trials
    return replace(cfg, **updates) if updates else cfg


def _out_path(cfg: ExperimentConfig, args: argparse.Namespace, fallback: str) -> Path:
    if args.out:
        return Path(args.out)
    if cfg.out:
        return Path(cfg.out)
    return Path(fallback)


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _apply_common_overrides(load_config(args.config), args)
    records = harness.run_sweep(cfg)
    summary = harness.summarize(records)
    out = _out_path(cfg, args, "sweep.csv")
    harness.write_text(out, harness.records_to_csv(records))
    summary_path = out.with_name(out.stem + "_summary.csv")
    harness.write_text(summary_path, harness.summary_to_csv(summary))
    written = [str(out), str(summary_path)]
    if args.json:
        json_path = out.with_suffix(".json")
        harness.write_text(json_path, harness.records_to_json(records))
        written.append(str(json_path))
    if args.plot:
        from .plotting import render_sweep_figure

        written.append(str(render_sweep_figure(summary, out.with_suffix(".png"))))
    print(json.dumps({"records": len(records), "written": written}))
    return EXIT_OK


def _cmd_optimize(args: argparse.Namespace) -> int:
    cfg = _apply_common_overrides(load_config(args.config), args)
    report = harness.run_optimizer(cfg, args.p, args.rate)
    out = _out_path(cfg, args, "curve.csv")
    harness.write_text(out, harness.curve_to_csv(report))
    written = [str(out)]
    if args.plot:
        from .plotting import render_tradeoff_figure

        written.append(str(render_tradeoff_figure(report, out.with_suffix(".png"))))
    payload = {
        "p": args.p,
        "rate": args.rate,
        "selected_B": report.selected.fine_bits,
        "selected_b": report.selected.coarse_bits,
        "d_side": report.selected.d_side,
        "d_central": report.selected.d_central,
        "written": written,
    }
    if args.json:
        curve_payload = dict(payload)
        curve_payload["curve"] = [
            {
                "scheme": pt.scheme.name.lower(), "B": pt.fine_bits, "b": pt.coarse_bits,
                "d_side": pt.d_side, "d_central": pt.d_central,
                "trials": pt.trials, "failures": pt.failures,
            }
            for pt in report.curve
        ]
        json_path = out.with_suffix(".json")
        harness.write_text(json_path, json.dumps(curve_payload, indent=1, sort_keys=True) + "\n")
        written.append(str(json_path))
        payload["written"] = written
    print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def _cmd_bounds(args: argparse.Namespace) -> int:
    rates = _parse_rates(args.R)
    rows = harness.run_bounds(
        n=args.n,
        m=args.m,
        k=args.k,
        sigma_x2=args.sigma2,
        rates=rates,
        mu=args.mu,
        d_sm_side=args.d_sm_side,
        spread=args.spread,
        lloyd_iters=args.lloyd_iters,
        seed=args.seed,
    )
    out = Path(args.out) if args.out else Path("bounds.csv")
    harness.write_text(out, harness.bounds_to_csv(rows))
    written = [str(out)]
    if args.plot:
        from .plotting import render_bounds_figure

        written.append(str(render_bounds_figure(rows, out.with_suffix(".png"))))
    if args.json:
        payload = []
        for row in rows:
            payload.append(
                {
                    "R": row.rate,
                    "gamma_d": row.gamma,
                    "d_sm_side": row.d_sm_side,
                    "t1_side": [row.t1_side.lower, row.t1_side.upper],
                    "t1_central": [row.t1_central.lower, row.t1_central.upper],
                    "t2_side": [row.t2_side.lower, row.t2_side.upper],
                    "t2_central": [row.t2_central.lower, row.t2_central.upper],
                    "hypotheses": {c.name: c.passed for c in row.checks},
                }
            )
        json_path = out.with_suffix(".json")
        harness.write_text(json_path, json.dumps(payload, indent=1, sort_keys=True) + "\n")
        written.append(str(json_path))
    print(json.dumps({"rows": len(rows), "written": written}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csmdc",
        description="Two-description coding of compressed-sensing measurements.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a signal + measurements instance file")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--sigma2", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen)

    e = sub.add_parser("encode", help="encode a measurements file into two descriptions")
    e.add_argument("measurements", help="instance file written by `gen`")
    e.add_argument("--scheme", choices=["gq", "split", "mdsq"], required=True)
    e.add_argument("--B", type=int)
    e.add_argument("--b", type=int, default=0)
    e.add_argument("--R", type=int)
    e.add_argument("--side-bits", dest="side_bits", type=int)
    e.add_argument("--spread", type=int, default=1)
    e.add_argument("--lloyd-iters", dest="lloyd_iters", type=int, default=DEFAULT_LLOYD_ITERS)
    e.add_argument("--out-prefix", dest="out_prefix", required=True)
    e.set_defaults(func=_cmd_encode)

    t = sub.add_parser("transmit", help="pass two descriptions through the loss channel")
    t.add_argument("descriptions", nargs="+")
    t.add_argument("--p", type=float, required=True)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--trial", type=int, default=0)
    t.add_argument("--out", required=True, help="directory for surviving descriptions")
    t.set_defaults(func=_cmd_transmit)

    d = sub.add_parser("decode", help="reconstruct from one or two descriptions")
    d.add_argument("descriptions", nargs="+")
    d.add_argument("--ref", help="instance file for distortion reporting")
    d.add_argument("--out", help="npz path for the reconstruction")
    d.add_argument("--kappa", type=float, default=1.0)
    d.add_argument("--codebook", help="MDSQ codebook blob written by `encode`")
    d.add_argument("--spread", type=int, default=1, help="MDSQ band half-width")
    d.add_argument("--lloyd-iters", dest="lloyd_iters", type=int, default=DEFAULT_LLOYD_ITERS)
    d.add_argument("--max-iters", dest="max_iters", type=int, default=5000)
    d.add_argument("--abs-tol", dest="abs_tol", type=float, default=1e-6)
    d.add_argument("--rel-tol", dest="rel_tol", type=float, default=1e-4)
    d.set_defaults(func=_cmd_decode)

    s = sub.add_parser("sweep", help="run the Monte Carlo sweep of a config file")
    s.add_argument("config")
    s.add_argument("--seed", type=int)
    s.add_argument("--trials", type=int)
    s.add_argument("--out")
    s.add_argument("--json", action="store_true")
    s.add_argument("--plot", action="store_true")
    s.set_defaults(func=_cmd_sweep)

    o = sub.add_parser("optimize", help="select the rate split for a loss probability")
    o.add_argument("config")
    o.add_argument("--p", type=float, required=True)
    o.add_argument("--rate", type=int, default=8, help="total bits per measurement (B + b)")
    o.add_argument("--seed", type=int)
    o.add_argument("--trials", type=int)
    o.add_argument("--out")
    o.add_argument("--json", action="store_true")
    o.add_argument("--plot", action="store_true")
    o.set_defaults(func=_cmd_optimize)

    b = sub.add_parser("bounds", help="evaluate the rate-distortion bound calculator")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--m", type=int, required=True)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--sigma2", type=float, default=1.0)
    b.add_argument("--R", required=True, help="rate or start:stop[:step] range")
    b.add_argument("--mu", type=float)
    b.add_argument("--d-sm-side", dest="d_sm_side", type=float)
    b.add_argument("--spread", type=int, default=1)
    b.add_argument("--lloyd-iters", dest="lloyd_iters", type=int, default=DEFAULT_LLOYD_ITERS)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out")
    b.add_argument("--json", action="store_true")
    b.add_argument("--plot", action="store_true")
    b.set_defaults(func=_cmd_bounds)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DescriptionParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (InvalidConfigError, CsmdcError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
