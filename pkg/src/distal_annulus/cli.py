"""Command-line entry point: ``distal-annulus <command> [options]``.

Exit codes: 0 success, 2 usage or configuration error, 3 a mathematical
precondition failed (no transversal, periodic orbit, degenerate fold).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import export
from .annulus_core import (
    TWO_PI,
    AnnulusPoint,
    CurveSample,
    DegenerateCrossingError,
    DegenerateOverlapError,
    UndersamplingError,
    drawdown_mfa,
    radial_arc,
    read_curve_csv,
    self_intersections,
    write_curve_csv,
)
from .distal_example import Alpha, AlphaError, GMap, band_report, build_g, fold_witness
from .dynamics import (
    gmap_handle,
    orbit,
    rigid_rotation,
    rotation_number,
    transversal_report,
)
from .folding_map import (
    FoldConstructionError,
    FoldSpecError,
    GeometryError,
    angular_lipschitz_ratio,
    build_fold_map,
    check_commutation,
    folded_circle,
    mfa_expected,
    validate_fold_map,
)
from .linearizer import (
    LinearizationGapError,
    MonotonicityError,
    NotTransversalError,
    Transversal,
    build_linearization,
    consistency_check,
    synthetic_linearizable,
)

EXIT_OK, EXIT_USAGE, EXIT_MATH = 0, 2, 3
MFA_BOUND = math.pi / 3
LIPSCHITZ_PAIRS = 100_000
DEFAULT_ITERS = {"linearize": 10_000, "orbit": 1_000}


class UsageError(Exception):
    pass


class PreconditionError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    alpha: Alpha
    levels: int = 3
    samples: int = 4096
    iters: int = 100_000
    seed: tuple = (0.1, 1.55)
    out: Path = Path(".")
    rng_seed: int = 0

    def __post_init__(self):
        if self.levels < 0:
            raise UsageError("levels must be >= 0")
        if self.samples < 64:
            raise UsageError("samples must be >= 64")
        if self.iters < 1:
            raise UsageError("iters must be >= 1")


def _parse_cf(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"malformed continued fraction {text!r}") from exc


def _parse_seed(text: str) -> tuple[float, float]:
    try:
        a, r = (float(t) for t in text.split(","))
    except ValueError as exc:
        raise UsageError(f"seed must be 'angle,radius', got {text!r}") from exc
    return a, r


def load_config(args) -> RunConfig:
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        unknown = set(cfg) - {"alpha", "alpha_cf", "levels", "samples", "iters", "seed", "rng_seed"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
    try:
        if args.alpha_cf is not None:
            alpha = Alpha.from_cf(_parse_cf(args.alpha_cf))
        elif args.alpha is not None:
            alpha = Alpha.from_decimal(args.alpha)
        elif "alpha_cf" in cfg:
            alpha = Alpha.from_cf(cfg["alpha_cf"])
        elif "alpha" in cfg:
            alpha = Alpha.from_decimal(str(cfg["alpha"]))
        else:
            alpha = Alpha.from_decimal("golden")
    except (AlphaError, TypeError) as exc:
        raise UsageError(str(exc)) from exc

    def pick(name, default):
        val = getattr(args, name, None)
        return val if val is not None else cfg.get(name, default)

    seed = pick("seed", "0.1,1.55")
    seed = _parse_seed(seed) if isinstance(seed, str) else tuple(float(s) for s in seed)
    try:
        iters = int(pick("iters", DEFAULT_ITERS.get(args.command, 100_000)))
        return RunConfig(alpha, int(pick("levels", 3)), int(pick("samples", 4096)), iters, seed,
                         Path(args.out), int(pick("rng_seed", 0)))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _seed_point(seed) -> AnnulusPoint:
    try:
        return AnnulusPoint(*seed)
    except ValueError as exc:
        raise UsageError(f"bad seed: {exc}") from exc


def _make_g(cfg: RunConfig) -> GMap:
    return build_g(cfg.alpha, cfg.levels) if cfg.levels > 0 else GMap.rigid(cfg.alpha)


def _make_map(args, cfg: RunConfig):
    if args.map == "rigid":
        return rigid_rotation(args.beta if args.beta is not None else cfg.alpha.value)
    if args.map == "synthetic":
        return synthetic_linearizable(cfg.alpha.value, args.amplitude)[0]
    return gmap_handle(_make_g(cfg))


# --- commands -----------------------------------------------------------------------

def cmd_fold(args, cfg: RunConfig) -> dict:
    try:
        fmap = build_fold_map(args.p, args.q)
    except FoldSpecError as exc:
        raise UsageError(str(exc)) from exc
    validate_fold_map(fmap)
    curve = folded_circle(fmap, max(cfg.samples, 16 * fmap.q))
    mfa = drawdown_mfa(curve)
    report = {
        "p": fmap.p,
        "q": fmap.q,
        "commutation_residual": check_commutation(fmap),
        "lipschitz_ratio": angular_lipschitz_ratio(fmap, LIPSCHITZ_PAIRS, cfg.rng_seed),
        "lipschitz_bound": 5 * fmap.q,
        "mfa": mfa,
        "mfa_expected": mfa_expected(fmap.q),
        "mfa_bound": MFA_BOUND,
        "simple": self_intersections(curve) == 0,
    }
    export.write_report(cfg.out / "fold_report.json", report)
    write_curve_csv(cfg.out / "folded_circle.csv", curve)
    export.write_svg(cfg.out / "folded_circle.svg", [curve])
    print(f"fold {fmap.p}/{fmap.q}: mfa={mfa:.6f} (bound {MFA_BOUND:.6f}) "
          f"residual={report['commutation_residual']:.3g} lipschitz={report['lipschitz_ratio']:.4g}")
    return report


def cmd_gmap(args, cfg: RunConfig) -> dict:
    g = _make_g(cfg)
    alpha = cfg.alpha.value
    if cfg.levels == 0:
        rng = np.random.default_rng(cfg.rng_seed)
        x, y = rng.uniform(0, 1, cfg.samples), rng.uniform(1, 2, cfg.samples)
        X, _ = g.forward_xy(x, y)
        disp = TWO_PI * (X - x)
        report = {"alpha": alpha, "levels": 0, "bands": [],
                  "displacement": TWO_PI * alpha,
                  "displacement_min": float(disp.min()), "displacement_max": float(disp.max())}
    else:
        rows = band_report(g, cfg.samples)
        for k, row in enumerate(rows):
            a = g.approximants[k]
            write_curve_csv(cfg.out / f"witness_band{row['n']}.csv", fold_witness(g, k, 16 * a.q))
        report = {"alpha": alpha, "levels": cfg.levels, "bands": rows}
        for row in rows:
            print(f"band {row['n']}: p/q={row['p']}/{row['q']} mfa={row['mfa']:.6f} "
                  f"continuity {row['continuity_measured']:.4g} <= {row['continuity_bound']:.4g}")
    report["alpha_source"] = cfg.alpha.source
    export.write_report(cfg.out / "gmap_report.json", report)
    return report


def cmd_rotnum(args, cfg: RunConfig) -> dict:
    if cfg.iters < 1000:
        raise UsageError("rotnum needs --iters >= 1000")
    fmap = _make_map(args, cfg)
    seed = _seed_point(cfg.seed)
    rho = rotation_number(fmap, seed, cfg.iters)
    report = {"map": fmap.label, "seed": list(cfg.seed), "iters": cfg.iters,
              "rotation_number": rho, "error_bound": 1.0 / cfg.iters}
    export.write_report(cfg.out / "rotnum_report.json", report)
    print(f"{rho:.12f} +/- {1.0 / cfg.iters:.3g}")
    return report


def cmd_orbit(args, cfg: RunConfig) -> dict:
    fmap = _make_map(args, cfg)
    rec = orbit(fmap, _seed_point(cfg.seed), cfg.iters)
    k = np.arange(len(rec))
    export.write_rows_csv(cfg.out / "orbit.csv", ["k", "x", "y", "theta_lifted"],
                          [k, rec.x, rec.y, rec.lifted_angles], ["%d", "%.17g", "%.17g", "%.17g"])
    report = {"map": fmap.label, "seed": list(cfg.seed), "iters": cfg.iters,
              "mean_displacement": float((rec.x[-1] - rec.x[0]) / cfg.iters)}
    export.write_report(cfg.out / "orbit_report.json", report)
    print(f"wrote {len(rec)} orbit points")
    return report


def cmd_mfa(args, cfg: RunConfig) -> dict:
    expected = None
    if args.curve:
        curve = _read_curve(args.curve)
    elif args.band is not None:
        g = _make_g(cfg)
        if not 1 <= args.band <= g.levels:
            raise UsageError(f"band must lie in 1..{g.levels}")
        q = g.approximants[args.band - 1].q
        curve, expected = fold_witness(g, args.band - 1, max(cfg.samples, 16 * q)), mfa_expected(q)
    else:
        try:
            fmap = build_fold_map(args.p, args.q)
        except FoldSpecError as exc:
            raise UsageError(str(exc)) from exc
        curve, expected = folded_circle(fmap, max(cfg.samples, 16 * fmap.q)), mfa_expected(fmap.q)
    if not curve.closed:
        raise UsageError("mfa needs a closed essential curve")
    mfa = drawdown_mfa(curve)
    report = {"curve": curve.label, "mfa": mfa, "mfa_expected": expected, "mfa_bound": MFA_BOUND,
              "exceeds_bound": mfa > MFA_BOUND}
    export.write_report(cfg.out / "mfa_report.json", report)
    print(f"mfa={mfa:.9f}")
    return report


def _read_curve(path) -> CurveSample:
    try:
        return read_curve_csv(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read curve {path}: {exc}") from exc


def parse_arc(text: str, g: GMap | None) -> CurveSample:
    """``radial:<theta>``, ``iterate:<k>[@<theta>]`` (g^k of a radial arc) or a CSV path."""
    try:
        if text.startswith("radial:"):
            return radial_arc(float(text[len("radial:"):]))
        if text.startswith("iterate:"):
            body = text[len("iterate:"):]
            k, _, th = body.partition("@")
            arc = radial_arc(float(th) if th else 0.0)
            if g is None:
                raise UsageError("iterate arcs need the map g")
            return gmap_handle(g).image_of_curve(arc, int(k))
    except ValueError as exc:
        raise UsageError(f"malformed arc {text!r}") from exc
    return _read_curve(text)


def cmd_transversal(args, cfg: RunConfig) -> dict:
    if args.map == "g":
        g = _make_g(cfg)
        family = g
    else:
        g = None
        family = _make_map(args, cfg)
    arc = parse_arc(args.arc, g)
    try:
        rep = transversal_report(family, arc, args.circles)
    except (DegenerateOverlapError, DegenerateCrossingError) as exc:
        raise UsageError(f"degenerate arc: {exc}") from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    report = {"arc": args.arc, **rep.as_dict()}
    export.write_report(cfg.out / "transversal_report.json", report)
    print(f"{rep.verdict} counts={rep.crossing_counts}")
    return report


def cmd_linearize(args, cfg: RunConfig) -> dict:
    theta = cfg.alpha.value
    grid = _parse_grid(args.grid)
    if args.map == "g":
        g = _make_g(cfg)
        violating = []
        for j in range(args.candidates):
            arc = radial_arc(TWO_PI * j / args.candidates)
            rep = transversal_report(g, arc, 8)
            if rep.verdict == "TRANSVERSAL":
                raise UsageError("linearize --map g: found a transversal; "
                                 "this map has no implemented linearization")
            violating.append({"arc": arc.label, "violating": rep.violating})
        export.write_report(cfg.out / "linearize_report.json",
                            {"map": "g", "transversal_found": False, "candidates": violating})
        raise PreconditionError(f"no transversal among {args.candidates} radial candidates; "
                                f"first violating circles: {violating[0]['violating'][:4]}")
    fmap, gamma = synthetic_linearizable(theta, args.amplitude)
    if args.arc:
        gamma = Transversal(parse_arc(args.arc, None))
    table = build_linearization(fmap, gamma, theta, cfg.iters, grid, rng_seed=cfg.rng_seed,
                                residual_samples=cfg.samples)
    check = consistency_check(fmap, gamma, theta, cfg.iters, grid)
    n_l, n_a = grid
    alpha_col = np.repeat(table.labels, n_a)
    n_col = np.tile(np.arange(n_a), n_l)
    src_col = TWO_PI * np.tile(np.arange(n_a) / n_a, n_l)
    tgt_col = TWO_PI * table.grid.ravel()
    export.write_rows_csv(cfg.out / "psi_table.csv", ["alpha", "n", "angle_source", "angle_target"],
                          [alpha_col, n_col, src_col, tgt_col], ["%.17g", "%d", "%.17g", "%.17g"])
    report = {"N": cfg.iters, "grid": list(grid), "residual": table.residual,
              "worst_gap": table.worst_gap, "consistency": check}
    export.write_report(cfg.out / "linearize_report.json", report)
    print(f"residual={table.residual:.3g} worst_gap={table.worst_gap:.3g} "
          f"consistency={'ok' if check['passed'] else 'FAILED'}")
    return report


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        a, b = (int(t) for t in text.lower().split("x"))
    except ValueError as exc:
        raise UsageError(f"grid must look like 64x64, got {text!r}") from exc
    if a < 2 or b < 2:
        raise UsageError("grid dimensions must be >= 2")
    return a, b


# --- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--rng-seed", type=int, dest="rng_seed")
    common.add_argument("--samples", type=int)
    common.add_argument("--iters", type=int)
    grp = common.add_mutually_exclusive_group()
    grp.add_argument("--alpha", help="decimal rotation number, or 'golden'")
    grp.add_argument("--alpha-cf", dest="alpha_cf", help="continued fraction a0,a1,...")
    common.add_argument("--levels", type=int)
    common.add_argument("--seed", help="orbit seed 'angle,radius' (radians, radius in [1,2])")
    common.add_argument("--config", help="JSON config file")

    def with_map(p, choices=("g", "rigid", "synthetic"), default="g"):
        p.add_argument("--map", choices=choices, default=default)
        p.add_argument("--beta", type=float, help="rotation for --map rigid")
        p.add_argument("--amplitude", type=float, default=0.3, help="twist for --map synthetic")

    ap = argparse.ArgumentParser(prog="distal-annulus", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fold", parents=[common], help="build and check one fold map")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)

    sub.add_parser("gmap", parents=[common], help="band reports and fold witnesses of g")
    with_map(sub.add_parser("rotnum", parents=[common], help="rotation number estimate"))
    with_map(sub.add_parser("orbit", parents=[common], help="export an orbit"))

    p = sub.add_parser("mfa", parents=[common], help="maximal folding angle of a curve")
    p.add_argument("--curve")
    p.add_argument("--band", type=int)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--q", type=int, default=7)

    p = sub.add_parser("transversal", parents=[common], help="crossing counts of an arc")
    with_map(p)
    p.add_argument("--arc", required=True)
    p.add_argument("--circles", type=int, default=8, help="circles per region")

    p = sub.add_parser("linearize", parents=[common], help="numerical linearization")
    with_map(p, ("synthetic", "g"), "synthetic")
    p.add_argument("--grid", default="64x64")
    p.add_argument("--arc", help="transversal for the synthetic map (default: the built-in one)")
    p.add_argument("--candidates", type=int, default=16, help="radial arcs tried for --map g")
    return ap


COMMANDS = {
    "fold": cmd_fold,
    "gmap": cmd_gmap,
    "rotnum": cmd_rotnum,
    "orbit": cmd_orbit,
    "mfa": cmd_mfa,
    "transversal": cmd_transversal,
    "linearize": cmd_linearize,
}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args)
        COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UndersamplingError, AlphaError, DegenerateOverlapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PreconditionError, NotTransversalError, MonotonicityError, LinearizationGapError,
            FoldConstructionError, GeometryError, DegenerateCrossingError) as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_MATH
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
