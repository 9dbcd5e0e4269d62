"""Orbits and the measurable diagnostics for annulus maps.

Maps act on lifted strip coordinates, so angles are lifted by construction
and the rotation number is a plain displacement average.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .annulus_core import (
    TWO_PI,
    AnnulusPoint,
    CurveSample,
    count_crossings,
    cover_lift,
    planar_distance,
    project_xy,
)
from .distal_example import GMap, fold_witness, gap_regions
from .folding_map import FoldMap

XYMap = Callable[[np.ndarray, np.ndarray], tuple]


@dataclass(frozen=True, eq=False)
class MapHandle:
    """Forward/inverse lifts of an annulus homeomorphism.

    ``power(x, y, k)`` is an optional closed form for the k-th iterate and
    ``curve_power(curve, k)`` an optional exact image of polylines.
    ``circles(n)`` returns sampled members of the invariant-circle family.
    """

    forward: XYMap
    inverse: XYMap
    label: str = ""
    power: Optional[Callable] = field(default=None, repr=False)
    curve_power: Optional[Callable] = field(default=None, repr=False)
    circles: Optional[Callable] = field(default=None, repr=False)
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        if not self.check:
            return
        rng = np.random.default_rng(12345)
        x = rng.uniform(0.0, 1.0, 256)
        y = rng.uniform(1.0, 2.0, 256)
        a, b = self.forward(*self.inverse(x, y))
        err = float(planar_distance(a, b, x, y).max())
        if err > 1e-9:
            raise ValueError(f"{self.label}: forward o inverse differs from identity by {err:.3g}")

    def step(self, x, y, k: int):
        if self.power is not None:
            return self.power(x, y, k)
        fn = self.forward if k >= 0 else self.inverse
        for _ in range(abs(k)):
            x, y = fn(x, y)
        return x, y

    def image_of_curve(self, curve: CurveSample, k: int = 1) -> CurveSample:
        if self.curve_power is not None:
            return self.curve_power(curve, k)
        x, y = self.step(curve.x, curve.y, k)
        pts = np.column_stack([x, y])
        if curve.closed:
            pts[-1] = pts[0] + np.array([curve.winding, 0.0])
        return CurveSample(pts, curve.closed, curve.winding, curve.label)


def rigid_rotation(beta: float) -> MapHandle:
    def power(x, y, k):
        return np.asarray(x, dtype=float) + k * beta, np.asarray(y, dtype=float)

    def curve_power(curve, k):
        return curve.translated(k * beta)

    return MapHandle(lambda x, y: power(x, y, 1), lambda x, y: power(x, y, -1), f"R_{beta:g}",
                     power=power, curve_power=curve_power, circles=_round_family)


def identity_map() -> MapHandle:
    return rigid_rotation(0.0)


def conjugated_rotation(fmap: FoldMap, alpha: float) -> MapHandle:
    """H R_alpha H^{-1} for a single fold map."""
    def power(x, y, k):
        return fmap.conjugated_rotation_xy(x, y, alpha, k)

    return MapHandle(lambda x, y: power(x, y, 1), lambda x, y: power(x, y, -1),
                     f"H_{fmap.p}/{fmap.q} R_{alpha:g} H^-1", power=power)


def gmap_handle(g: GMap) -> MapHandle:
    return MapHandle(g.forward_xy, g.inverse_xy, f"g(alpha={g.alpha_value:.12g}, levels={g.levels})",
                     power=g.power_xy, curve_power=g.power_curve,
                     circles=lambda n: [c for _, c in sample_circles(g, n)])


def _round_family(n: int) -> list[CurveSample]:
    from .annulus_core import round_circle

    return [round_circle(1.0 + (i + 0.5) / n, 1) for i in range(n)]


# --- orbits ------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OrbitRecord:
    seed: AnnulusPoint
    x: np.ndarray
    y: np.ndarray

    @property
    def lifted_angles(self) -> np.ndarray:
        return TWO_PI * self.x

    @property
    def points(self) -> list[AnnulusPoint]:
        th, r = project_xy(self.x, self.y)
        return [AnnulusPoint(a, b) for a, b in zip(th, r)]

    def __len__(self):
        return len(self.x)


def _seed_xy(seed) -> tuple[float, float]:
    if isinstance(seed, AnnulusPoint):
        s = cover_lift(seed)
        return s.x, s.y
    return float(seed[0]), float(seed[1])


def orbit(fmap: MapHandle, seed, n: int, method: str = "auto") -> OrbitRecord:
    """Points seed, f(seed), ..., f^n(seed) on the lift.

    ``method='iterate'`` applies the forward map n times; ``'power'`` (the
    default when available) evaluates every iterate from its closed form,
    which avoids accumulating round-off.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    x0, y0 = _seed_xy(seed)
    if method == "power" or (method == "auto" and fmap.power is not None):
        xs, ys = _power_many(fmap, x0, y0, np.arange(n + 1))
    elif method in ("iterate", "auto"):
        xs = np.empty(n + 1)
        ys = np.empty(n + 1)
        xs[0], ys[0] = x0, y0
        x, y = np.array([x0]), np.array([y0])
        for k in range(1, n + 1):
            x, y = fmap.forward(x, y)
            xs[k], ys[k] = x[0], y[0]
    else:
        raise ValueError(f"unknown method {method!r}")
    seed_pt = seed if isinstance(seed, AnnulusPoint) else AnnulusPoint(TWO_PI * x0, y0)
    return OrbitRecord(seed_pt, xs, ys)


def _power_many(fmap: MapHandle, x0: float, y0: float, ks: np.ndarray):
    """f^k(x0, y0) for every k in ``ks``, in chunks."""
    xs = np.empty(len(ks))
    ys = np.empty(len(ks))
    for start in range(0, len(ks), 65536):
        kk = ks[start:start + 65536]
        X, Y = fmap.power(np.full(len(kk), x0), np.full(len(kk), y0), kk)
        xs[start:start + len(kk)], ys[start:start + len(kk)] = X, Y
    return xs, ys


def rotation_number(fmap: MapHandle, seed, n: int) -> float:
    """(lifted angle after n steps - initial lifted angle) / (2 pi n)."""
    if n < 1000:
        raise ValueError("rotation_number needs n >= 1000")
    x0, y0 = _seed_xy(seed)
    X, _ = fmap.step(np.array([x0]), np.array([y0]), n)
    return float((X[0] - x0) / n)


def proximality_probe(fmap: MapHandle, x, y, n: int, symmetric: bool = False) -> float:
    """min over 0 <= k <= n (or |k| <= n) of the distance between f^k x and f^k y."""
    if n < 1:
        raise ValueError("n must be at least 1")
    x0, x1 = _seed_xy(x)
    y0, y1 = _seed_xy(y)
    lo = -n if symmetric else 0
    ks = np.arange(lo, n + 1)
    if fmap.power is None:
        raise ValueError("proximality_probe needs a map with a closed-form power")
    best = math.inf
    for start in range(0, len(ks), 65536):
        kk = ks[start:start + 65536]
        ax, ay = _power_many(fmap, x0, x1, kk)
        bx, by = _power_many(fmap, y0, y1, kk)
        best = min(best, float(planar_distance(ax, ay, bx, by).min()))
    return best


# --- transversals ---------------------------------------------------------------------

def sample_circles(g: GMap, per_region: int = 8, n_samples: int = 0):
    """Invariant circles of g: ``per_region`` per gap annulus and per band,
    plus each band's maximal-fold witness.  Returns (label, curve) pairs."""
    from .annulus_core import round_circle

    out = []
    regions = gap_regions(g)
    for i, (a, b) in enumerate(regions):
        for j in range(per_region):
            r = a + (b - a) * (j + 0.5) / per_region
            out.append((f"gap{i}:r={r:.6g}", round_circle(r, max(n_samples, 1))))
        if i < g.levels:
            for j in range(per_region):
                rho = 1.0 + (j + 0.5) / per_region
                out.append((f"band{g.bands[i].n}:rho={rho:.6g}", g.band_circle(i, rho, n_samples)))
            out.append((f"band{g.bands[i].n}:witness", fold_witness(g, i, n_samples)))
    return out


@dataclass
class TransversalReport:
    labels: list
    crossing_counts: list
    violating: list

    @property
    def verdict(self) -> str:
        return "TRANSVERSAL" if not self.violating else "NOT"

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "crossing_counts": list(self.crossing_counts),
            "circles": list(self.labels),
            "violating": list(self.violating),
        }


def _check_arc_ends(arc: CurveSample) -> None:
    ends = sorted([arc.y[0], arc.y[-1]])
    if abs(ends[0] - 1.0) > 1e-9 or abs(ends[1] - 2.0) > 1e-9:
        raise ValueError("arc must join C_1 to C_2")


def crossing_report(circles: Sequence[tuple[str, CurveSample]], arc: CurveSample) -> TransversalReport:
    _check_arc_ends(arc)
    labels, counts, bad = [], [], []
    for label, curve in circles:
        c = count_crossings(arc, curve)
        labels.append(label)
        counts.append(c)
        if c != 1:
            bad.append(label)
    return TransversalReport(labels, counts, bad)


def transversal_report(family, arc: CurveSample, n_circles: int = 8) -> TransversalReport:
    """Crossing counts of ``arc`` with sampled invariant circles.

    ``family`` is a GMap (circles per gap, per band and the fold witnesses)
    or a MapHandle exposing ``circles``.
    """
    if isinstance(family, GMap):
        circles = sample_circles(family, n_circles)
    else:
        if family.circles is None:
            raise ValueError(f"{family.label}: no invariant-circle family available")
        circles = [(c.label or f"circle{i}", c) for i, c in enumerate(family.circles(n_circles))]
    return crossing_report(circles, arc)
