"""Command-line interface.

Exit codes: 0 success, 1 domain or data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys

import numpy as np

from . import __version__
from .colorimetry import (
    CMF_ENV_VAR,
    DEFAULT_EPS,
    Tristimulus,
    UnitRgb,
    integrate_tristimulus,
    load_cmf,
    read_spd_csv,
    srgb_to_xyz,
    xyz_to_srgb,
)
from .errors import ChromaError
from .ingest import groups_from_summaries, ingest_directory, read_summaries, write_summaries
from .mvstat import TRANSFORMS, apply_transform, hotelling_t2, pairwise_t2, write_matrix_csv
from .perceptual import PositiveTriple, check_axioms

NUM = ".10g"
DEFAULT_SEED = 20240601


def _fmt(values) -> str:
    return " ".join(format(float(v), NUM) for v in values)


def _eps(text):
    v = float(text)
    if not 0.0 < v < 0.5:
        raise argparse.ArgumentTypeError("eps must lie in (0, 0.5)")
    return v


def _roi(text):
    v = float(text)
    if not 0.0 < v <= 1.0:
        raise argparse.ArgumentTypeError("ROI fraction must lie in (0, 1]")
    return v


def _positive_triple(text):
    try:
        parts = [float(p) for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError("need exactly three comma-separated values")
        return PositiveTriple(*parts)
    except (ValueError, ChromaError) as exc:
        raise argparse.ArgumentTypeError(f"invalid triple {text!r}: {exc}") from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_convert(args) -> int:
    if args.direction == "spectral2xyz":
        if not args.spd:
            raise _Usage("--spd is required for spectral2xyz")
        spd = read_spd_csv(args.spd)
        cmf = load_cmf(args.cmf)
        t = integrate_tristimulus(spd, cmf, k=args.k, normalization="Y100" if args.y100 else "unit")
        print(_fmt(t))
        return 0
    if len(args.values) != 3:
        raise _Usage(f"{args.direction} takes exactly three values")
    if args.direction == "xyz2srgb":
        c = xyz_to_srgb(Tristimulus(*args.values), eps=args.eps)
        print(_fmt(c))
        if c.clamped:
            print("warning: out of gamut, result clamped", file=sys.stderr)
    else:
        c = UnitRgb.from_values(*args.values, eps=args.eps)
        if c.clamped:
            print("warning: input clamped into (0, 1)", file=sys.stderr)
        print(_fmt(srgb_to_xyz(c)))
    return 0


def cmd_ingest(args) -> int:
    result = ingest_directory(args.root, roi=args.roi, linearize=args.linearize, eps=args.eps)
    for d in result.diagnostics:
        print(f"warning: {d}", file=sys.stderr)
    if not result.groups:
        print("error: no group has at least two usable images", file=sys.stderr)
        return 1
    write_summaries(result.summaries, args.out)
    stats_rows = []
    for g in result.groups:
        mean = g.observations.mean(axis=0)
        var = g.observations.var(axis=0, ddof=1)
        print(f"group {g.label}: n={g.n}")
        print(f"  mean {_fmt(mean)}")
        print(f"  var  {_fmt(var)}")
        stats_rows.append([g.label, g.n, *(format(v, NUM) for v in (*mean, *var))])
    if args.stats_out:
        with open(args.stats_out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["group", "n", "r_mean", "g_mean", "b_mean", "r_var", "g_var", "b_var"])
            w.writerows(stats_rows)
    print(f"wrote {sum(g.n for g in result.groups)} summaries in {len(result.groups)} groups to {args.out}")
    return 0


def cmd_transform(args) -> int:
    summaries = read_summaries(args.summaries, eps=args.eps)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["group", "file", "c1", "c2", "c3"])
        for label, items in summaries.items():
            raw = np.array([s.mean_rgb_255 for s in items])
            for s, row in zip(items, apply_transform(raw, args.transform, eps=args.eps)):
                w.writerow([label, s.source, *(format(v, NUM) for v in row)])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _load_groups(args):
    groups = groups_from_summaries(read_summaries(args.summaries, eps=args.eps))
    if len(groups) < 2:
        raise ChromaError(f"{args.summaries}: need at least two groups")
    return groups


def cmd_test(args) -> int:
    groups = {g.label: g for g in _load_groups(args)}
    try:
        a, b = groups[args.group_a], groups[args.group_b]
    except KeyError as exc:
        raise ChromaError(f"unknown group {exc.args[0]!r}") from None
    a, b = (g.map(lambda o: apply_transform(o, args.transform, eps=args.eps)) for g in (a, b))
    r = hotelling_t2(a, b, fallback=args.fallback)
    print(f"groups {a.label} vs {b.label} (transform {args.transform})")
    print(f"T2 {r.t2:{NUM}}")
    print(f"F {r.f_stat:{NUM}} df ({r.df[0]}, {r.df[1]})")
    print(f"p {r.p_value:{NUM}}")
    if r.singular_fallback:
        print("warning: singular pooled covariance, ridge fallback used", file=sys.stderr)
    return 0


def cmd_pairwise(args) -> int:
    m = pairwise_t2(_load_groups(args), transform=args.transform, fallback=args.fallback, eps=args.eps)
    write_matrix_csv(m.labels, m.t2, args.t2_out or sys.stdout)
    if args.p_out:
        write_matrix_csv(m.labels, m.p_values, args.p_out)
    for (i, j), reason in sorted(m.failures.items()):
        print(f"warning: cell ({m.labels[i]}, {m.labels[j]}): {reason}", file=sys.stderr)
    if m.fallbacks:
        print(f"warning: ridge fallback used in {m.fallbacks} cell(s)", file=sys.stderr)
    if m.failures:
        print(f"{len(m.failures)} cell(s) could not be computed", file=sys.stderr)
    return 0


def cmd_axioms(args) -> int:
    rng = np.random.default_rng(args.seed)
    sample = [PositiveTriple(*np.exp(rng.normal(size=3))) for _ in range(args.n)]
    sample += args.triple or []
    scalars = 10.0 * (1.0 - rng.random(args.n))  # (0, 10]
    report = check_axioms(sample, scalars)
    print(f"seed {args.seed}, {len(sample)} points, {len(scalars)} scalars")
    for line in report.lines():
        print(line)
    print("all axioms hold" if report.passed else "axiom check FAILED")
    return 0 if report.passed else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


class _Usage(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chromastat",
        description="Color conversion and Hotelling T^2 tests on groups of images.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def eps_opt(p):
        p.add_argument("--eps", type=_eps, default=DEFAULT_EPS, help="open-interval clamp margin")

    p = sub.add_parser("convert", help="spectral -> XYZ, XYZ <-> sRGB")
    p.add_argument("--direction", choices=("spectral2xyz", "xyz2srgb", "srgb2xyz"), required=True)
    p.add_argument("values", nargs="*", type=float, help="X Y Z, or encoded r g b in [0, 1]")
    p.add_argument("--spd", help="spectrum CSV (wavelength_nm,value)")
    p.add_argument("--cmf", help=f"CMF CSV; default ${CMF_ENV_VAR} or the bundled CIE 1931 2-degree table")
    p.add_argument("--k", type=float, default=1.0, help="tristimulus scale (default 1)")
    p.add_argument("--y100", action="store_true", help="normalize so that Y = 100")
    eps_opt(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("ingest", help="reduce a directory of image groups to mean colors")
    p.add_argument("root", help="directory with one subdirectory per group")
    p.add_argument("-o", "--out", required=True, help="summaries CSV to write")
    p.add_argument("--stats-out", help="per-group mean/variance CSV")
    p.add_argument("--roi", type=_roi, default=1.0, help="central crop fraction (default 1)")
    p.add_argument("--linearize", action="store_true", help="average in linear light")
    eps_opt(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("transform", help="write transformed per-image coordinates")
    p.add_argument("summaries")
    p.add_argument("--transform", choices=TRANSFORMS, default="loglog")
    p.add_argument("-o", "--out")
    eps_opt(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("test", help="Hotelling T^2 between two groups")
    p.add_argument("summaries")
    p.add_argument("group_a")
    p.add_argument("group_b")
    p.add_argument("--transform", choices=TRANSFORMS, default="loglog")
    p.add_argument("--fallback", action="store_true", help="ridge fallback on singular covariance")
    eps_opt(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("pairwise", help="T^2 and p-value matrices for all group pairs")
    p.add_argument("summaries")
    p.add_argument("--transform", choices=TRANSFORMS, default="loglog")
    p.add_argument("--fallback", action="store_true", help="ridge fallback on singular covariance")
    p.add_argument("--t2-out", help="T^2 matrix CSV (default: stdout)")
    p.add_argument("--p-out", help="p-value matrix CSV")
    eps_opt(p)
    p.set_defaults(func=cmd_pairwise)

    p = sub.add_parser("axioms", help="check the group-model axioms on random samples")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("-n", type=int, default=20, help="random sample size")
    p.add_argument("--triple", type=_positive_triple, action="append", help="extra point X,Y,Z")
    p.set_defaults(func=cmd_axioms)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(message)s")
    try:
        return args.func(args)
    except _Usage as exc:
        parser.error(str(exc))
    except (ChromaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
