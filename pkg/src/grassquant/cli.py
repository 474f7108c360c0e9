"""Command-line front-end: every computation as a subcommand emitting CSV or JSON.

Exit status: 0 success, 2 usage, 3 every row flagged invalid, 4 I/O or schema.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from typing import Callable, Optional

import numpy as np

from . import bounds as bd
from .codebook import Codebook, estimate_distortion, maxmin_design, min_distance, random_codebook
from .core import Field, SeededRng, format_float, json_dumps
from .mimo import (MimoConfig, eta_from_distortion, eta_interval, perfect_csit_rate, predict_rate,
                   selected_distortion, simulate_rate)
from .volume import (ManifoldParams, barg_volume, volume_bounds, volume_main_order,
                     volume_monte_carlo, volume_quadrature_oracle)

SEED_ENV = "GRASSQUANT_SEED"
DEFAULT_SEED = 314159

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_IO = 0, 2, 3, 4


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- list syntax

def parse_int_list(text: str) -> list[int]:
    """Comma-separated items; each is ``k``, ``a..b``, ``a..b:step`` or ``a..b*factor``."""
    out: list[int] = []
    for item in filter(None, (t.strip() for t in text.split(","))):
        try:
            if ".." not in item:
                out.append(int(item))
                continue
            a, rest = item.split("..", 1)
            if "*" in rest:
                b, f = rest.split("*", 1)
                a, b, f = int(a), int(b), int(f)
                if f < 2 or a < 1:
                    raise ValueError
                k = a
                while k <= b:
                    out.append(k)
                    k *= f
                continue
            b, step = rest.split(":", 1) if ":" in rest else (rest, "1")
            a, b, step = int(a), int(b), int(step)
            if step < 1:
                raise ValueError
            out.extend(range(a, b + 1, step))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad integer list item {item!r}") from None
    return out


def parse_float_list(text: str) -> list[float]:
    """Comma-separated items; each is ``x``, ``a..b`` (10 points), ``a..b/N`` (N points) or ``a..b:step``."""
    out: list[float] = []
    for item in filter(None, (t.strip() for t in text.split(","))):
        try:
            if ".." not in item:
                out.append(float(item))
                continue
            a, rest = item.split("..", 1)
            if "/" in rest:
                b, num = rest.split("/", 1)
                num = int(num)
            elif ":" in rest:
                b, step = rest.split(":", 1)
                step = float(step)
                if step <= 0:
                    raise ValueError
                num = int(math.floor((float(b) - float(a)) / step + 1e-9)) + 1
                out.extend(float(a) + i * step for i in range(max(num, 0)))
                continue
            else:
                b, num = rest, 10
            if num < 1:
                raise ValueError
            out.extend(float(x) for x in np.linspace(float(a), float(b), num))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad real list item {item!r}") from None
    return out


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _positive_int_list(text: str) -> list[int]:
    vals = parse_int_list(text)
    if any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("all entries must be positive")
    return vals


# ---------------------------------------------------------------- output

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def render(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json_dumps(rows) + "\n"
    buf = io.StringIO()
    if rows:
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(rows[0].keys())
        for r in rows:
            w.writerow([_cell(v) for v in r.values()])
    return buf.getvalue()


def _manifold(args) -> ManifoldParams:
    q = args.p if args.q is None else args.q
    return ManifoldParams(args.n, args.p, q, Field.parse(args.field))


def _echo(mp: ManifoldParams, args) -> dict:
    return {"n": mp.n, "p": mp.p, "q": mp.q, "field": mp.field.value, "seed": args.seed}


# ---------------------------------------------------------------- subcommands

def cmd_volume(args) -> list[dict]:
    mp = _manifold(args)
    note = None
    if mp.q < mp.p:
        mp, note = mp.normalized(), f"q<p: swapped to p={mp.q} q={mp.p}"
    rows = []
    for delta in args.delta:
        main = volume_main_order(mp, delta)
        lower = upper = quad = None
        if delta <= 1:
            lo, hi = volume_bounds(mp, delta)
            lower, upper = lo.value, hi.value
            try:
                quad = volume_quadrature_oracle(mp, delta).value
            except ValueError:
                quad = None
        mc = mc_err = None
        if args.samples > 0:
            r = volume_monte_carlo(mp, delta, args.samples, SeededRng(args.seed), workers=args.threads)
            mc, mc_err = r.value, r.stderr
        row = _echo(mp, args) | {
            "samples": args.samples, "delta": delta, "main_order": main.value,
            "lower": lower, "upper": upper, "mc_estimate": mc, "mc_stderr": mc_err,
            "barg": barg_volume(mp, delta) if mp.p == mp.q else None,
            "quadrature": quad, "valid": bool(main.valid and delta <= 1)}
        if note is not None:
            row["note"] = note
        rows.append(row)
    return rows


def _flags(rep: bd.BoundReport) -> str:
    return rep.validity.describe()


def cmd_bounds(args) -> list[dict]:
    mp = _manifold(args)
    rows = []
    if args.kind == "packing":
        if not args.delta:
            raise UsageError("bounds packing needs --delta")
        for delta in args.delta:
            row = _echo(mp, args) | {"delta": delta}
            gv = bd.gv_code_size(mp, delta) if delta <= 1 else None
            hm = bd.hamming_code_size(mp, delta) if delta <= 2 else None
            row |= {"gv": gv.value if gv else None, "hamming": hm.value if hm else None,
                    "gv_flags": _flags(gv) if gv else "radius>1",
                    "hamming_flags": _flags(hm) if hm else "radius>2",
                    "valid": bool((gv and gv.validity.ok) or (hm and hm.validity.ok))}
            rows.append(row)
    elif args.kind == "drf":
        if not args.K:
            raise UsageError("bounds drf needs --K")
        dp = bd.DetailParams(args.a)
        heath = mp.field is Field.COMPLEX and mp.p == 1 and mp.q == 1
        for K in args.K:
            lo, hi = bd.drf_lower(mp, K), bd.drf_upper(mp, K)
            dlo, dhi = bd.drf_detailed(mp, K, dp)
            rows.append(_echo(mp, args) | {
                "a": args.a, "K": K, "lower": lo.value, "upper": hi.value,
                "detailed_lower": dlo, "detailed_upper": dhi,
                "heath": bd.heath_approx(mp.n, K) if heath else None,
                "flags": _flags(hi), "valid": bool(lo.validity.ok and hi.validity.ok)})
    else:
        if not args.D:
            raise UsageError("bounds rdf needs --D")
        for D in args.D:
            lo, hi = bd.rdf_lower(mp, D), bd.rdf_upper(mp, D)
            rows.append(_echo(mp, args) | {
                "D": D, "lower": lo.value, "upper": hi.value,
                "asymptotic": bd.rdf_asymptotic(mp.p, mp.beta, D) if mp.p == mp.q else None,
                "flags": _flags(lo), "valid": bool(lo.validity.ok and hi.validity.ok)})
    return rows


def cmd_design(args) -> list[dict]:
    mp = ManifoldParams(args.n, args.p, args.p, Field.parse(args.field))
    if args.method == "maxmin":
        C = maxmin_design(mp, args.K, iters=args.iters, restarts=args.restarts,
                          rng=SeededRng(args.seed), workers=args.threads)
    else:
        C = random_codebook(mp, args.K, SeededRng(args.seed))
    try:
        C.save(args.codebook)
    except OSError as exc:
        raise IOError(f"cannot write {args.codebook}: {exc.strerror}") from None
    return [{"n": mp.n, "p": mp.p, "field": mp.field.value, "seed": args.seed, "K": args.K,
             "method": args.method, "iters": args.iters, "restarts": args.restarts,
             "min_distance": min_distance(C) if args.K > 1 else None, "codebook": args.codebook}]


def cmd_distortion(args) -> list[dict]:
    try:
        C = Codebook.load(args.codebook)
    except FileNotFoundError:
        raise IOError(f"file-not-found: {args.codebook}") from None
    q = C.p if args.q is None else args.q
    mp = ManifoldParams(C.n, C.p, q, C.field)
    est = estimate_distortion(C, q=q, samples=args.samples, rng=SeededRng(args.seed), workers=args.threads)
    lo, hi = bd.drf_lower(mp, C.K), bd.drf_upper(mp, C.K)
    dlo, dhi = bd.drf_detailed(mp, C.K, bd.DetailParams(args.a))
    return [_echo(mp, args) | {
        "K": C.K, "method": C.method, "samples": args.samples, "a": args.a,
        "min_distance": min_distance(C) if C.K > 1 else None,
        "distortion": est.mean, "stderr": est.stderr,
        "drf_lower": lo.value, "drf_upper": hi.value,
        "detailed_lower": dlo, "detailed_upper": dhi, "codebook": args.codebook}]


def cmd_mimo(args) -> list[dict]:
    scale = 1.0 / math.log(2.0) if args.units == "bits" else 1.0
    rows = []
    for rfb in args.rfb:
        base = MimoConfig.from_db(args.lt, args.lr, args.s, 0.0, rfb, trials=args.trials, seed=args.seed)
        if base.s == base.lt:
            raise UsageError("degenerate-manifold: s = Lt leaves nothing to quantize")
        design_rng = SeededRng(args.seed, 1000 + rfb)
        if args.design == "maxmin":
            B = maxmin_design(base.manifold, base.codebook_size, iters=args.iters,
                              restarts=args.restarts, rng=design_rng, workers=args.threads)
        else:
            B = random_codebook(base.manifold, base.codebook_size, design_rng)
        eta_lo, eta_hi = eta_interval(base)
        eta_meas = eta_from_distortion(selected_distortion(base, B, args.threads).mean, base.s)
        for rho_db in args.rho_db:
            cfg = MimoConfig.from_db(args.lt, args.lr, args.s, rho_db, rfb, trials=args.trials, seed=args.seed)
            sim = simulate_rate(cfg, B, args.threads)
            perfect = perfect_csit_rate(cfg, args.threads)
            lo, hi = predict_rate(cfg, args.threads)
            rows.append({
                "lt": cfg.lt, "lr": cfg.lr, "s": cfg.s, "seed": args.seed, "trials": cfg.trials,
                "design": args.design, "units": args.units,
                "rho_db": rho_db, "Rfb": rfb, "K": cfg.codebook_size,
                "simulated": sim.mean * scale, "stderr": sim.stderr * scale,
                "predicted_lower": lo * scale, "predicted_upper": hi * scale,
                "perfect_csit": perfect.mean * scale, "perfect_stderr": perfect.stderr * scale,
                "eta_lower": eta_lo, "eta_upper": eta_hi, "eta_measured": eta_meas})
    return rows


# ---------------------------------------------------------------- parser

def _default_seed() -> int:
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def build_parser(default_seed: int = DEFAULT_SEED) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("output and reproducibility")
    g.add_argument("--format", choices=("csv", "json"), default="csv", help="table format (default csv)")
    g.add_argument("--out", help="write the table here instead of stdout")
    g.add_argument("--seed", type=int, default=default_seed,
                   help=f"global seed (default ${SEED_ENV} or {DEFAULT_SEED})")
    g.add_argument("--threads", type=_positive_int, default=1, help="worker threads for Monte Carlo")

    manifold = argparse.ArgumentParser(add_help=False)
    m = manifold.add_argument_group("manifold")
    m.add_argument("--n", type=_positive_int, required=True, help="ambient dimension")
    m.add_argument("--p", type=_positive_int, required=True, help="plane dimension")
    m.add_argument("--q", type=_positive_int, help="source plane dimension (default p)")
    m.add_argument("--field", choices=("real", "complex"), default="complex")

    parser = argparse.ArgumentParser(
        prog="grassquant", description="Grassmann manifold volumes, quantization bounds and MIMO feedback.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("volume", parents=[common, manifold], help="metric-ball volumes")
    p.add_argument("--delta", type=parse_float_list, required=True, help="radii, e.g. 0.1..1.0")
    p.add_argument("--samples", type=int, default=100_000, help="Monte Carlo samples (0 disables)")
    p.set_defaults(run=cmd_volume)

    p = sub.add_parser("bounds", parents=[common, manifold], help="packing, distortion-rate, rate-distortion bounds")
    p.add_argument("kind", choices=("packing", "drf", "rdf"))
    p.add_argument("--delta", type=parse_float_list, help="minimum distances (packing)")
    p.add_argument("--K", type=_positive_int_list, help="codebook sizes (drf), e.g. 2..4096*2")
    p.add_argument("--D", type=parse_float_list, help="distortions (rdf)")
    p.add_argument("--a", type=float, default=0.5, help="detail parameter in (0, 1)")
    p.set_defaults(run=cmd_bounds)

    p = sub.add_parser("design", parents=[common], help="design a codebook and write it as JSON")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--p", type=_positive_int, required=True)
    p.add_argument("--field", choices=("real", "complex"), default="complex")
    p.add_argument("--K", type=_positive_int, required=True, help="codebook size")
    p.add_argument("--method", choices=("maxmin", "random"), default="maxmin")
    p.add_argument("--iters", type=_positive_int, default=2000)
    p.add_argument("--restarts", type=_positive_int, default=8)
    p.add_argument("--codebook", required=True, help="output JSON path")
    p.set_defaults(run=cmd_design)

    p = sub.add_parser("distortion", parents=[common], help="estimate a codebook's distortion")
    p.add_argument("--codebook", required=True, help="codebook JSON path")
    p.add_argument("--q", type=_positive_int, help="source plane dimension (default p)")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--a", type=float, default=0.5, help="detail parameter in (0, 1)")
    p.set_defaults(run=cmd_distortion)

    p = sub.add_parser("mimo", parents=[common], help="MIMO rate with finite-rate beamforming feedback")
    p.add_argument("--lt", type=_positive_int, required=True, help="transmit antennas")
    p.add_argument("--lr", type=_positive_int, required=True, help="receive antennas")
    p.add_argument("--s", type=_positive_int, required=True, help="on-beams")
    p.add_argument("--rho-db", type=parse_float_list, required=True, help="SNRs in dB")
    p.add_argument("--rfb", type=parse_int_list, required=True, help="feedback bits, e.g. 4..12:2")
    p.add_argument("--trials", type=_positive_int, default=100_000)
    p.add_argument("--design", choices=("maxmin", "random"), default="maxmin")
    p.add_argument("--iters", type=_positive_int, default=2000)
    p.add_argument("--restarts", type=_positive_int, default=8)
    p.add_argument("--units", choices=("bits", "nats"), default="bits")
    p.set_defaults(run=cmd_mimo)
    return parser


def _error(msg: str) -> None:
    print(f"grassquant: error: {msg}", file=sys.stderr)


def main(argv: Optional[list[str]] = None) -> int:
    try:
        parser = build_parser(_default_seed())
    except UsageError as exc:
        _error(str(exc))
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        rows = args.run(args)
    except (UsageError, ValueError) as exc:
        msg = str(exc)
        _error(msg)
        return EXIT_IO if msg.startswith("schema-mismatch") else EXIT_USAGE
    except OSError as exc:
        _error(str(exc))
        return EXIT_IO
    text = render(rows, args.format)
    if args.out:
        try:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            _error(f"cannot write {args.out}: {exc.strerror}")
            return EXIT_IO
    else:
        sys.stdout.write(text)
    if rows and not any(r.get("valid", True) for r in rows):
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
