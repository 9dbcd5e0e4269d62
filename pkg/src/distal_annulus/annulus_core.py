"""Coordinates on the closed annulus 1 <= |z| <= 2 and its strip cover.

Strip points ``(x, y)`` carry the angle in turns (``x = 1`` is a full
revolution) and the radius in ``y``; annulus points carry ``(theta, r)`` with
``theta`` in radians.  Curves are polylines in the strip, which makes every
lifted quantity (winding, angular drawdown, crossings) exact.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

TWO_PI = 2.0 * math.pi
R_MIN, R_MAX = 1.0, 2.0
RADIUS_TOL = 1e-12

# sampling-density contract for curves that will be angle-lifted
MAX_LIFT_GAP = math.pi / 8

VERTEX_TOL = 1e-12
PERTURB_EPS = (1e-9, 2e-9)


class UndersamplingError(ValueError):
    """Consecutive samples are too far apart to lift the angle unambiguously."""


class DegenerateOverlapError(ValueError):
    """Two polylines share a subsegment; crossings are not countable."""


class DegenerateCrossingError(ValueError):
    """A crossing could not be resolved by the symbolic perturbation rule."""


def _check_radius(r: float) -> float:
    if not (R_MIN - RADIUS_TOL <= r <= R_MAX + RADIUS_TOL):
        raise ValueError(f"radius {r!r} outside [1, 2]")
    return min(max(r, R_MIN), R_MAX)


@dataclass(frozen=True)
class AnnulusPoint:
    theta: float
    r: float

    def __post_init__(self):
        object.__setattr__(self, "r", _check_radius(float(self.r)))
        t = math.fmod(float(self.theta), TWO_PI)
        if t < 0:
            t += TWO_PI
        if t >= TWO_PI:
            t = 0.0
        object.__setattr__(self, "theta", t)

    def to_complex(self) -> complex:
        return self.r * complex(math.cos(self.theta), math.sin(self.theta))


@dataclass(frozen=True)
class StripPoint:
    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", _check_radius(float(self.y)))


@dataclass(frozen=True, eq=False)
class CurveSample:
    """Ordered polyline of strip points.

    A closed curve stores its last point explicitly: it equals the first
    point shifted by ``winding`` turns in x.
    """

    points: np.ndarray
    closed: bool = False
    winding: int = 0
    label: str = field(default="", compare=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ValueError("a curve needs at least two (x, y) points")
        if np.any(pts[:, 1] < R_MIN - 1e-9) or np.any(pts[:, 1] > R_MAX + 1e-9):
            raise ValueError("curve leaves the strip 1 <= y <= 2")
        step = np.abs(np.diff(pts, axis=0)).max(axis=1)
        if np.any(step == 0.0):
            raise ValueError("consecutive curve points must be distinct")
        if self.closed:
            shift = pts[-1] - pts[0]
            if abs(shift[0] - self.winding) > 1e-9 or abs(shift[1]) > 1e-9:
                raise ValueError("closed curve must end at its start shifted by the winding")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    def __len__(self):
        return len(self.points)

    def translated(self, dx: float) -> "CurveSample":
        pts = self.points + np.array([dx, 0.0])
        return CurveSample(pts, self.closed, self.winding, self.label)

    def segments(self) -> np.ndarray:
        return np.stack([self.points[:-1], self.points[1:]], axis=1)


def round_circle(r: float, n: int = 256) -> CurveSample:
    """The circle C_r as the horizontal line y = r, sampled at n + 1 points."""
    x = np.linspace(0.0, 1.0, n + 1)
    return CurveSample(np.column_stack([x, np.full_like(x, r)]), closed=True, winding=1,
                       label=f"C_{r:g}")


def radial_arc(theta: float, n: int = 2) -> CurveSample:
    """The radial segment at angle ``theta`` from C_1 to C_2."""
    y = np.linspace(R_MIN, R_MAX, max(n, 2))
    x = np.full_like(y, theta / TWO_PI)
    return CurveSample(np.column_stack([x, y]), label=f"radial:{theta:g}")


# --- covering map -----------------------------------------------------------

def project_xy(x, y):
    """Vectorised covering map: strip (x, y) -> (theta in [0, 2pi), r)."""
    theta = TWO_PI * np.mod(x, 1.0)
    theta = np.where(theta >= TWO_PI, 0.0, theta)
    return theta, np.asarray(y, dtype=float)


def cover_project(p: StripPoint) -> AnnulusPoint:
    if not (R_MIN <= p.y <= R_MAX):
        raise ValueError("point outside the strip")
    return AnnulusPoint(TWO_PI * (p.x - math.floor(p.x)), p.y)


def cover_lift(a: AnnulusPoint, branch_hint: float = 0.0) -> StripPoint:
    """Lift with x in (branch_hint - 1/2, branch_hint + 1/2]."""
    x0 = a.theta / TWO_PI
    k = math.floor(branch_hint + 0.5 - x0)
    return StripPoint(x0 + k, a.r)


def planar(x, y) -> np.ndarray:
    """Strip coordinates to points of the plane, shape (..., 2)."""
    ang = TWO_PI * np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.stack([y * np.cos(ang), y * np.sin(ang)], axis=-1)


def planar_distance(x1, y1, x2, y2) -> np.ndarray:
    """Euclidean distance in the plane between projected strip points."""
    d = planar(x1, y1) - planar(x2, y2)
    return np.hypot(d[..., 0], d[..., 1])


def wrap_angle(a):
    """Reduce radians into (-pi, pi]."""
    w = np.mod(np.asarray(a, dtype=float) + math.pi, TWO_PI) - math.pi
    return np.where(w == -math.pi, math.pi, w)


def angular_distance(a, b):
    return np.abs(wrap_angle(np.asarray(a) - np.asarray(b)))


def lift_angle_path(samples: Sequence[AnnulusPoint] | np.ndarray, max_gap: float = math.pi) -> np.ndarray:
    """Continuous lift of the angles along a discrete path.

    ``samples`` are AnnulusPoints or raw angles.  A wrapped step of size
    ``max_gap`` or more is reported as undersampling.
    """
    if len(samples) and isinstance(samples[0], AnnulusPoint):
        theta = np.array([s.theta for s in samples], dtype=float)
    else:
        theta = np.asarray(samples, dtype=float)
    if theta.size == 0:
        return theta.copy()
    steps = wrap_angle(np.diff(theta))
    if steps.size and np.max(np.abs(steps)) >= max_gap:
        k = int(np.argmax(np.abs(steps)))
        raise UndersamplingError(f"angular step {steps[k]:.4g} at index {k} is not below {max_gap:.4g}")
    out = np.empty_like(theta)
    out[0] = theta[0]
    out[1:] = theta[0] + np.cumsum(steps)
    # snap back onto the exact residues to avoid drift from the cumulative sum
    turns = np.round((out - theta) / TWO_PI)
    return theta + TWO_PI * turns


def drawdown_mfa(loop: CurveSample) -> float:
    """Largest backtrack of the lifted angle along a closed winding-1 curve.

    Computed over a doubled copy of the loop, so the value does not depend on
    where sampling starts.
    """
    if not loop.closed or loop.winding != 1:
        raise ValueError("drawdown_mfa needs a closed curve of winding 1")
    theta, _ = project_xy(loop.x, loop.y)
    lifted = lift_angle_path(theta, max_gap=MAX_LIFT_GAP)
    doubled = np.concatenate([lifted, lifted[1:] + TWO_PI])
    peak = np.maximum.accumulate(doubled)
    return float(np.max(peak - doubled))


# --- distances --------------------------------------------------------------

def hausdorff_distance(a: CurveSample, b: CurveSample) -> float:
    """Symmetric Hausdorff distance between the projected sample sets."""
    pa, pb = planar(a.x, a.y), planar(b.x, b.y)
    d_ab = cKDTree(pb).query(pa)[0].max()
    d_ba = cKDTree(pa).query(pb)[0].max()
    return float(max(d_ab, d_ba))


_METRIC_SCALE = np.array([2.0 * TWO_PI, 1.0])


def distance_to_curve(x, y, curve: CurveSample) -> np.ndarray:
    """Distance from strip points to the polyline of ``curve``.

    Measured in the strip with x scaled by 4*pi, which bounds the planar
    distance to the nearest curve point from above.  Integer translates of the
    curve are taken into account.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    seg = curve.segments()
    best = np.full(x.shape, np.inf)
    lo = math.floor(x.min() - curve.x.max()) - 1
    hi = math.ceil(x.max() - curve.x.min()) + 1
    p = np.column_stack([x, y]) * _METRIC_SCALE
    a0 = seg[:, 0] * _METRIC_SCALE
    a1 = seg[:, 1] * _METRIC_SCALE
    d = a1 - a0
    dd = np.einsum("ij,ij->i", d, d)
    for k in range(lo, hi + 1):
        shift = np.array([k * _METRIC_SCALE[0], 0.0])
        for start in range(0, len(p), 2048):
            q = p[start:start + 2048, None, :] - (a0 + shift)[None]
            t = np.clip(np.einsum("pij,ij->pi", q, d) / dd, 0.0, 1.0)
            r = q - t[..., None] * d[None]
            dist = np.sqrt(np.einsum("pij,pij->pi", r, r)).min(axis=1)
            best[start:start + 2048] = np.minimum(best[start:start + 2048], dist)
    return best


def curve_deviation(a: CurveSample, b: CurveSample) -> float:
    """Symmetric vertex-to-polyline deviation between two curves."""
    return float(max(distance_to_curve(a.x, a.y, b).max(), distance_to_curve(b.x, b.y, a).max()))


# --- crossings --------------------------------------------------------------

def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def _segment_hits(sa: np.ndarray, sb: np.ndarray):
    """Intersections between every segment of ``sa`` and every one of ``sb``.

    Returns (proper, degenerate) counts; raises on collinear overlap.
    """
    if len(sa) == 0 or len(sb) == 0:
        return 0, 0
    # bounding-box prefilter
    amin = np.minimum(sa[:, 0], sa[:, 1])
    amax = np.maximum(sa[:, 0], sa[:, 1])
    bmin = np.minimum(sb[:, 0], sb[:, 1])
    bmax = np.maximum(sb[:, 0], sb[:, 1])
    proper = degenerate = 0
    for start in range(0, len(sa), 1024):
        A = sa[start:start + 1024]
        lo, hi = amin[start:start + 1024], amax[start:start + 1024]
        ov = ((lo[:, None, 0] <= bmax[None, :, 0] + VERTEX_TOL)
              & (bmin[None, :, 0] <= hi[:, None, 0] + VERTEX_TOL)
              & (lo[:, None, 1] <= bmax[None, :, 1] + VERTEX_TOL)
              & (bmin[None, :, 1] <= hi[:, None, 1] + VERTEX_TOL))
        ia, ib = np.nonzero(ov)
        if ia.size == 0:
            continue
        p0, p1 = A[ia, 0], A[ia, 1]
        q0, q1 = sb[ib, 0], sb[ib, 1]
        r = p1 - p0
        s = q1 - q0
        w = q0 - p0
        den = _cross(r[:, 0], r[:, 1], s[:, 0], s[:, 1])
        num_t = _cross(w[:, 0], w[:, 1], s[:, 0], s[:, 1])
        num_u = _cross(w[:, 0], w[:, 1], r[:, 0], r[:, 1])
        lr = np.hypot(r[:, 0], r[:, 1])
        ls = np.hypot(s[:, 0], s[:, 1])
        par = np.abs(den) <= 1e-15 * lr * ls
        if np.any(par):
            # parallel pairs: collinear ones either overlap or touch at a vertex
            col = par & (np.abs(num_u) <= VERTEX_TOL * lr)
            if np.any(col):
                rr = np.einsum("ij,ij->i", r[col], r[col])
                t0 = np.einsum("ij,ij->i", w[col], r[col]) / rr
                t1 = np.einsum("ij,ij->i", (q1 - p0)[col], r[col]) / rr
                tlo, thi = np.minimum(t0, t1), np.maximum(t0, t1)
                olap = np.minimum(thi, 1.0) - np.maximum(tlo, 0.0)
                if np.any(olap * lr[col] > VERTEX_TOL):
                    raise DegenerateOverlapError("polylines share a subsegment")
                degenerate += int(np.count_nonzero(olap * lr[col] >= -VERTEX_TOL))
        ok = ~par
        t = num_t[ok] / den[ok]
        u = num_u[ok] / den[ok]
        ta, tb = VERTEX_TOL / lr[ok], VERTEX_TOL / ls[ok]
        hit = (t >= -ta) & (t <= 1 + ta) & (u >= -tb) & (u <= 1 + tb)
        near = hit & ((t <= ta) | (t >= 1 - ta) | (u <= tb) | (u >= 1 - tb))
        proper += int(np.count_nonzero(hit & ~near))
        degenerate += int(np.count_nonzero(near))
    return proper, degenerate


def _translates(a: CurveSample, b: CurveSample) -> np.ndarray:
    """Segments of all integer translates of b that can meet a."""
    seg = b.segments()
    lo = math.floor(a.x.min() - b.x.max()) - 1
    hi = math.ceil(a.x.max() - b.x.min()) + 1
    out = [seg + np.array([k, 0.0]) for k in range(lo, hi + 1)]
    return np.concatenate(out)


def _raw_crossings(a: CurveSample, b: CurveSample):
    return _segment_hits(a.segments(), _translates(a, b))


def count_crossings(arc: CurveSample, loop: CurveSample) -> int:
    """Number of transversal intersection points of two curves in the annulus.

    Hits within 1e-12 of a vertex are resolved by shifting ``arc`` by a small
    positive angle and, so that vertices on horizontal segments also clear,
    by the same small amount in radius; two shifts must agree.
    """
    proper, degenerate = _raw_crossings(arc, loop)
    if degenerate == 0:
        return proper
    counts = []
    for eps in PERTURB_EPS:
        moved = CurveSample(arc.points + np.array([eps / TWO_PI, 0.5 * eps]), arc.closed,
                            arc.winding, arc.label)
        p, d = _raw_crossings(moved, loop)
        if d:
            raise DegenerateCrossingError("crossing stays degenerate under perturbation")
        counts.append(p)
    if counts[0] != counts[1]:
        raise DegenerateCrossingError(f"perturbed counts disagree: {counts}")
    return counts[0]


def self_intersections(loop: CurveSample) -> int:
    """Intersection points between non-adjacent segments of a curve in the annulus."""
    seg = loop.segments()
    n = len(seg)
    span = int(math.ceil(loop.x.max() - loop.x.min())) + 1
    ks = range(0, span + 1) if loop.closed else range(0, 1)
    total = 0
    j = np.arange(n)
    for i in range(n):
        for k in ks:
            # unordered pairs: (i, j, k) ~ (j, i, -k), so only k >= 0 is scanned
            if k == 0:
                keep = (j > i) & (j != i + 1)
            else:
                keep = np.ones(n, dtype=bool)
                if k == 1 and i == n - 1:
                    keep[0] = False
            if not np.any(keep):
                continue
            p, d = _segment_hits(seg[i:i + 1], seg[keep] + np.array([k * loop.winding, 0.0]))
            total += p + d
    return total


# --- CSV curve format --------------------------------------------------------

def curve_to_csv_text(curve: CurveSample) -> str:
    lines = ["x,y"]
    lines += [f"{x:.17g},{y:.17g}" for x, y in curve.points]
    return "\n".join(lines) + "\n"


def write_curve_csv(path: str | Path, curve: CurveSample) -> None:
    from .export import atomic_write_text

    atomic_write_text(path, curve_to_csv_text(curve))


def read_curve_csv(path: str | Path) -> CurveSample:
    """Read an ``x,y`` curve; closure is inferred from an integer x-shift."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or set(rows[0]) != {"x", "y"}:
        raise ValueError(f"{path}: expected header 'x,y'")
    pts = np.array([[float(r["x"]), float(r["y"])] for r in rows])
    shift = pts[-1] - pts[0]
    w = round(shift[0])
    closed = len(pts) > 2 and w != 0 and abs(shift[0] - w) < 1e-12 and abs(shift[1]) < 1e-12
    return CurveSample(pts, closed=closed, winding=int(w) if closed else 0)


def concat_curves(parts: Iterable[np.ndarray]) -> np.ndarray:
    """Join polyline pieces that share end/start points."""
    out = []
    for part in parts:
        if out:
            part = part[1:]
        out.append(part)
    return np.concatenate(out)
