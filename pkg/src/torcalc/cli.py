"""``torcalc`` command line: transform, fieldlines, verify, spectrum, thintorus.

All commands write a table to stdout, as CSV (header row, LF line endings)
or JSON (``{"meta": ..., "records": [...]}``). Numbers are printed with 17
significant digits; failed points carry an error code instead of values.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import platform
import re
import sys
import time
import warnings
from typing import Any, Sequence

import numpy as np
import scipy

from . import __version__, coords, spectral, verify
from .coords import CartPoint, CylPoint, NatK12, NatKU, ScaleConfig
from .errors import DomainError, OnAxis, TorcalcError

CHARTS = ("cart", "cyl", "nat", "k12")
CHART_AXES = {"cart": ("x", "y", "z"), "cyl": ("rho", "z", "phi"),
              "nat": ("k", "u", "phi"), "k12": ("k1", "k2", "u")}


class _Parser(argparse.ArgumentParser):
    """Treats tokens such as ``-1,0,0`` and ``-2..2`` as values, not flags."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._negative_number_matcher = re.compile(r"^-\.?\d")


# -- output ---------------------------------------------------------------------


def fmt_num(x) -> str:
    return format(float(x), ".17g")


def _clean(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    return v


def _json_value(v) -> str:
    v = _clean(v)
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return fmt_num(v)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    return json.dumps(str(v), ensure_ascii=False)


def render(records: list[dict], columns: Sequence[str], fmt: str, meta: dict) -> str:
    if fmt == "json":
        body = ",\n    ".join(_json_value({c: r.get(c) for c in columns}) for r in records)
        recs = f"[\n    {body}\n  ]" if records else "[]"
        return "{\n  \"meta\": " + _json_value(meta) + ",\n  \"records\": " + recs + "\n}\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in records:
        row = []
        for c in columns:
            v = _clean(r.get(c))
            if v is None:
                row.append("")
            elif isinstance(v, bool):
                row.append("true" if v else "false")
            elif isinstance(v, float):
                row.append(fmt_num(v))
            else:
                row.append(str(v))
        w.writerow(row)
    return buf.getvalue()


def _meta(command: str, args, cfg: ScaleConfig, **extra) -> dict:
    meta = {"command": command,
            "config": {"s": cfg.s, "hbar": cfg.hbar, "mass": cfg.mass, "c": cfg.c, "seed": args.seed},
            "versions": {"torcalc": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                         "python": platform.python_version()}}
    meta.update(extra)
    return meta


def _emit(out, records, columns, args, cfg, command, **extra) -> None:
    out.write(render(records, columns, args.format, _meta(command, args, cfg, **extra)))


# -- parsing helpers ------------------------------------------------------------


def parse_point(text: str, dim: int = 3) -> tuple[float, ...]:
    parts = text.split(",")
    if len(parts) != dim:
        raise ValueError(f"expected {dim} comma-separated numbers, got {text!r}")
    vals = tuple(float(p) for p in parts)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError(f"non-finite coordinate in {text!r}")
    return vals


def parse_range(text: str) -> range:
    m = re.fullmatch(r"\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*", text)
    if not m:
        raise ValueError(f"expected a..b, got {text!r}")
    lo, hi = int(m.group(1)), int(m.group(2))
    if hi < lo:
        raise ValueError(f"empty range {text!r}")
    return range(lo, hi + 1)


# -- transform ------------------------------------------------------------------


def to_cart(chart: str, v, cfg: ScaleConfig) -> CartPoint:
    if chart == "cart":
        return CartPoint(*v)
    if chart == "cyl":
        if v[0] < 0:
            raise DomainError("rho must be >= 0")
        return coords.cyl_to_cart(CylPoint(*v))
    if chart == "nat":
        return coords.nat_to_cart(NatKU(*v), cfg)
    return coords.k12_to_cart(NatK12(*v), cfg)


def from_cart(chart: str, p: CartPoint, cfg: ScaleConfig) -> tuple[float, float, float]:
    if chart == "cart":
        return tuple(p)
    if chart == "cyl":
        return tuple(coords.cart_to_cyl(p))
    if chart == "nat":
        return tuple(coords.cart_to_nat(p, cfg))
    return tuple(coords.cart_to_k12(p, cfg))


def convert(src: str, dst: str, v, cfg: ScaleConfig) -> tuple[float, float, float]:
    if src == dst:
        return tuple(v)
    if {src, dst} == {"cyl", "nat"}:
        if src == "cyl":
            return tuple(coords.cyl_to_nat(CylPoint(*v), cfg))
        return tuple(coords.nat_to_cyl(NatKU(*v), cfg))
    return from_cart(dst, to_cart(src, v, cfg), cfg)


def _angle_axis(chart: str) -> int | None:
    return CHART_AXES[chart].index("phi") if "phi" in CHART_AXES[chart] else None


def roundtrip_residual(src: str, dst: str, v, out, cfg: ScaleConfig) -> float:
    """Max abs difference between the input and its image mapped back (angles mod 2 pi)."""
    back = convert(dst, src, out, cfg)
    ax = _angle_axis(src)
    diffs = []
    for i, (a, b) in enumerate(zip(v, back)):
        d = a - b
        if i == ax:
            d = math.remainder(d, 2 * math.pi)
        diffs.append(abs(d))
    return max(diffs)


def cmd_transform(args, cfg, out) -> int:
    try:
        pts = [parse_point(t) for t in args.points]
    except ValueError as exc:
        args._parser.error(str(exc))

    def run(v):
        rec = {f"in_{ax}": x for ax, x in zip(CHART_AXES[args.src], v)}
        try:
            res = convert(args.src, args.dst, v, cfg)
            rec.update({f"out_{ax}": x for ax, x in zip(CHART_AXES[args.dst], res)})
            rec["rt"] = roundtrip_residual(args.src, args.dst, v, res, cfg)
            rec["error"] = ""
        except TorcalcError as exc:
            rec["error"] = exc.code
        return rec

    records = verify.parallel_map(run, pts)
    for i, r in enumerate(records):
        r["index"] = i
    cols = (["index"] + [f"in_{a}" for a in CHART_AXES[args.src]]
            + [f"out_{a}" for a in CHART_AXES[args.dst]] + ["rt", "error"])
    _emit(out, records, cols, args, cfg, "transform", **{"from": args.src, "to": args.dst})
    return 0


# -- fieldlines -----------------------------------------------------------------


def _grid_seeds(text: str) -> list[tuple[float, float]]:
    parts = text.split(",")
    if len(parts) != 6:
        raise ValueError("grid is RHO_MIN,RHO_MAX,N_RHO,Z_MIN,Z_MAX,N_Z")
    r0, r1, z0, z1 = float(parts[0]), float(parts[1]), float(parts[3]), float(parts[4])
    nr, nz = int(parts[2]), int(parts[5])
    if nr < 1 or nz < 1:
        raise ValueError("grid counts must be >= 1")
    return [(float(r), float(z)) for r in np.linspace(r0, r1, nr) for z in np.linspace(z0, z1, nz)]


def cmd_fieldlines(args, cfg, out) -> int:
    try:
        seeds = [parse_point(t, 2) for t in (args.start or [])]
        if args.grid:
            seeds += _grid_seeds(args.grid)
    except ValueError as exc:
        args._parser.error(str(exc))
    if not seeds:
        seeds = list(verify.T3_SEEDS if args.field == "t3" else verify.PK_SEEDS)

    def run(seed):
        try:
            if not seed[0] > 0:
                raise OnAxis("seed on the z axis")
            pts, drift = verify.field_line(args.field, seed, cfg, args.step, args.steps)
            return [{"rho": p[0], "z": p[1], "drift": d, "error": ""} for p, d in zip(pts, drift)]
        except TorcalcError as exc:
            return [{"rho": seed[0], "z": seed[1], "drift": None, "error": exc.code}]

    records = []
    for line_id, rows in enumerate(verify.parallel_map(run, seeds)):
        for j, r in enumerate(rows):
            r.update(line_id=line_id, point=j, arclength=j * args.step if not r["error"] else None)
            records.append(r)
    conserved = "k" if args.field == "t3" else "u"
    _emit(out, records, ["line_id", "point", "arclength", "rho", "z", "drift", "error"], args, cfg,
          "fieldlines", field=args.field, conserved=conserved, step=args.step, steps=args.steps)
    return 0


# -- verify ---------------------------------------------------------------------


def cmd_verify(args, cfg, out) -> int:
    names = None
    if args.only:
        names = [n.strip() for item in args.only for n in item.split(",") if n.strip()]
        unknown = [n for n in names if n not in verify.CHECKS]
        if unknown:
            args._parser.error(f"unknown check(s): {', '.join(unknown)}; "
                               f"choose from {', '.join(verify.CHECKS)}")
    t0 = time.perf_counter()
    results = verify.run_checks(names, cfg, seed=args.seed, tol=args.tol)
    records = [{"name": r.name, "residual": r.residual, "tol": r.tol, "passed": r.passed, "n": r.n}
               for r in results]
    _emit(out, records, ["name", "residual", "tol", "passed", "n"], args, cfg, "verify")
    ok = all(r.passed for r in results)
    print(f"verify: {sum(r.passed for r in results)}/{len(results)} passed "
          f"in {time.perf_counter() - t0:.1f} s", file=sys.stderr)
    return 0 if ok else 1


# -- spectrum -------------------------------------------------------------------


def cmd_spectrum(args, cfg, out) -> int:
    try:
        nr = parse_range(args.n)
    except ValueError as exc:
        args._parser.error(str(exc))
    bc = spectral.ExtensionBC(args.theta)
    try:
        spec = spectral.extension_spectrum(args.k0, bc, nr, cfg)
    except DomainError as exc:
        print(f"torcalc spectrum: {exc}", file=sys.stderr)
        return 2
    records = [{"n": n, "t": t, "phase_residual": spectral.bc_phase_residual(t, args.k0, bc, cfg)}
               for n, t in spec]
    _emit(out, records, ["n", "t", "phase_residual"], args, cfg, "spectrum",
          k0=args.k0, theta=args.theta, a=coords.a_of_k(args.k0, cfg))
    return 0


# -- thintorus ------------------------------------------------------------------


def cmd_thintorus(args, cfg, out) -> int:
    try:
        geom = spectral.ThinTorusGeom(args.R, args.r)
    except DomainError as exc:
        print(f"torcalc thintorus: {exc}", file=sys.stderr)
        return 2
    if not geom.valid:
        print(f"torcalc thintorus: warning: r_T/R_T = {geom.r_T / geom.R_T:.3g} >= 0.1, "
              f"thin-torus approximation not valid", file=sys.stderr)
    records = []

    def add(table, index, rho, z, quantity, value, ratio=None, error=""):
        records.append(dict(table=table, index=index, rho=rho, z=z, quantity=quantity,
                            value=value, ratio=ratio, error=error))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        levels = max(2, args.levels)
        for i, (z, e, ratio) in enumerate(verify.thin_u_ratios(geom, cfg, levels)):
            add("u_error", i, geom.R_T, z, "u_rel_err", e, ratio)
        ops = verify.thin_operator_ratios(geom, cfg, levels)
        for name, rows in ops.items():
            for i, (z, e, ratio) in enumerate(rows):
                add("operator", i, geom.R_T, z, name, e, ratio)

        rng = np.random.default_rng(args.seed)
        f = spectral.torus_bump(geom, cfg)
        scale = cfg.hbar ** 2 / (2.0 * cfg.mass * (geom.r_T / 3.0) ** 2)
        skipped = 0
        h0_max = 0.0
        for i in range(args.samples):
            # sample a slightly larger box so that boundary handling is exercised
            rho = geom.R_T + rng.uniform(-1.2, 1.2) * geom.r_T
            z = rng.uniform(-1.2, 1.2) * geom.r_T
            p = CylPoint(rho, z, float(rng.uniform(0, 2 * math.pi)))
            if not geom.contains(rho, z):
                skipped += 1
                add("h0", i, rho, z, "h0_rel_err", None, error="outside_torus")
                continue
            gap = abs(spectral.h0_apply(f, p, geom, cfg)
                      - spectral.h0_cartesian(f, p, cfg, h=2e-3 * geom.r_T)) / scale
            h0_max = max(h0_max, gap)
            add("h0", i, rho, z, "h0_rel_err", gap)
            if z != 0.0:
                add("h0", i, rho, z, "u_rel_err", spectral.u_thin_error(p, geom, cfg))

    u_rows = [r for r in records if r["table"] == "u_error"]
    add("summary", 0, None, None, "u_table_max_rel_err", max(r["value"] for r in u_rows))
    add("summary", 1, None, None, "u_mean_ratio", float(np.mean([r["ratio"] for r in u_rows[1:]])))
    for j, name in enumerate(ops):
        add("summary", 2 + j, None, None, f"{name}_mean_ratio",
            float(np.mean([r[2] for r in ops[name][1:]])))
    add("summary", 5, None, None, "h0_max_rel_err", h0_max)
    add("summary", 6, None, None, "h0_target", (geom.r_T / geom.R_T) ** 2)
    add("summary", 7, None, None, "skipped_outside", skipped)
    _emit(out, records, ["table", "index", "rho", "z", "quantity", "value", "ratio", "error"],
          args, cfg, "thintorus", R_T=geom.R_T, r_T=geom.r_T, valid=geom.valid, skipped=skipped)
    return 0


# -- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--s", type=float, default=1.0, help="scale s = 10 m c (default 1)")
    common.add_argument("--hbar", type=float, default=1.0)
    common.add_argument("--mass", type=float, default=1.0)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=0, help="seed for random sweeps")

    parser = _Parser(prog="torcalc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"torcalc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", parents=[common], help="map points between charts")
    p.add_argument("--from", dest="src", choices=CHARTS, required=True)
    p.add_argument("--to", dest="dst", choices=CHARTS, required=True)
    p.add_argument("points", nargs="+", help="points as a,b,c")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("fieldlines", parents=[common], help="export T3 or P(k) streamlines")
    p.add_argument("--field", choices=("t3", "pk"), default="t3")
    p.add_argument("--start", action="append", metavar="RHO,Z", help="seed point (repeatable)")
    p.add_argument("--grid", metavar="R0,R1,NR,Z0,Z1,NZ", help="rectangular seed grid")
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--steps", type=int, default=100)
    p.set_defaults(func=cmd_fieldlines)

    p = sub.add_parser("verify", parents=[common], help="run the invariant suites")
    p.add_argument("--tol", type=float, default=None, help="override every tolerance")
    p.add_argument("--only", action="append", metavar="NAMES",
                   help=f"comma-separated subset of: {', '.join(verify.CHECKS)}")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("spectrum", parents=[common], help="self-adjoint extension spectrum on a k fibre")
    p.add_argument("--k0", type=float, required=True)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--n", default="-2..2", metavar="A..B")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("thintorus", parents=[common], help="thin-torus approximation report")
    p.add_argument("--R", type=float, default=1.0, help="major radius R_T")
    p.add_argument("--r", type=float, default=0.01, help="minor radius r_T")
    p.add_argument("--samples", type=int, default=16)
    p.add_argument("--levels", type=int, default=4, help="z-halving levels")
    p.set_defaults(func=cmd_thintorus)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._parser = parser
    out = out or sys.stdout
    if not (args.s > 0 and args.hbar > 0 and args.mass > 0):
        parser.error("--s, --hbar and --mass must be positive")
    if args.command == "fieldlines" and not (args.step > 0 and args.steps >= 1):
        parser.error("--step must be > 0 and --steps >= 1")
    cfg = ScaleConfig(args.s, args.hbar, args.mass)
    return args.func(args, cfg, out)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
