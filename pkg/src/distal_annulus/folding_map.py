"""The periodic folding homeomorphism H = H_{p/q} of the annulus.

H is piecewise affine on the strip.  On the fundamental rectangle
``[0, 1/q] x [1, 2]`` it is given by two triangle fans around the centre
``(1/(2q), 3/2)``, whose image is the point w2 of the fold; the map is then
repeated with period 1/q in x.  The bottom edge is fixed and the top edge moves
by one full turn, so H fixes both boundary circles pointwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .annulus_core import (
    TWO_PI,
    AnnulusPoint,
    CurveSample,
    angular_distance,
    cover_lift,
    planar_distance,
    project_xy,
)


class FoldSpecError(ValueError):
    pass


class FoldConstructionError(RuntimeError):
    pass


class GeometryError(RuntimeError):
    pass


BARY_TOL = 1e-12
# barycentric slack accepted from reduction round-off before giving up
BARY_FALLBACK = 1e-9

# vertex order: bottom-left, bottom-right, centre, mid-left, mid-right, top-left, top-right
TRIANGLES = np.array([
    (2, 0, 1),
    (2, 1, 4),
    (2, 3, 0),
    (2, 4, 6),
    (2, 6, 5),
    (2, 5, 3),
])
# spokes from the centre plus the left cell wall, as vertex index pairs
CELL_EDGES = [(2, 0), (2, 1), (2, 4), (2, 6), (2, 5), (2, 3), (0, 5)]


@dataclass(frozen=True)
class FoldSpec:
    p: int
    q: int

    def __post_init__(self):
        p, q = int(self.p), int(self.q)
        if p < 1 or q < 1:
            raise FoldSpecError("p and q must be positive integers")
        if math.gcd(p, q) != 1:
            raise FoldSpecError("p,q must be coprime")
        if q <= 6:
            raise FoldSpecError("q must exceed 6")

    @property
    def z(self) -> np.ndarray:
        """z0..z3, the corners of the target parallelogram B0'."""
        q = self.q
        return np.array([[0.0, 1.0], [1.0, 2.0], [1.0 + 1.0 / q, 2.0], [1.0 / q, 1.0]])

    @property
    def w(self) -> np.ndarray:
        """w1, w2, w3: the fold polyline L0."""
        q = self.q
        return np.array([[0.5, 1.5], [0.75 + 0.5 / q, 1.75], [0.5 + 1.0 / q, 1.5]])

    @property
    def source_vertices(self) -> np.ndarray:
        h = 1.0 / self.q
        return np.array([[0, 1], [h, 1], [h / 2, 1.5], [0, 1.5], [h, 1.5], [0, 2], [h, 2]], float)

    @property
    def target_vertices(self) -> np.ndarray:
        z, w = self.z, self.w
        return np.array([z[0], z[3], w[1], w[0], w[2], z[1], z[2]])


def _bary_inverse(tris: np.ndarray) -> np.ndarray:
    m = np.stack([tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0]], axis=-1)
    return np.linalg.inv(m)


def _orient(t: np.ndarray) -> np.ndarray:
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    return (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])


def _triangles_overlap(t1: np.ndarray, t2: np.ndarray, tol: float = 1e-12) -> bool:
    """Separating-axis test; touching along an edge or vertex is not overlap."""
    for tri in (t1, t2):
        for i in range(3):
            e = tri[(i + 1) % 3] - tri[i]
            n = np.array([-e[1], e[0]])
            p1, p2 = t1 @ n, t2 @ n
            if p1.max() <= p2.min() + tol or p2.max() <= p1.min() + tol:
                return False
    return True


@dataclass(frozen=True, eq=False)
class FoldMap:
    spec: FoldSpec
    src: np.ndarray = field(repr=False)
    dst: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_src_inv", _bary_inverse(self.src))
        object.__setattr__(self, "_dst_inv", _bary_inverse(self.dst))

    @property
    def p(self) -> int:
        return self.spec.p

    @property
    def q(self) -> int:
        return self.spec.q

    @property
    def triangulation(self):
        return [(s.copy(), d.copy()) for s, d in zip(self.src, self.dst)]

    # -- point location ------------------------------------------------------

    @staticmethod
    def _locate(pts: np.ndarray, tris: np.ndarray, inv: np.ndarray):
        rel = pts[:, None, :] - tris[None, :, 0, :]
        l12 = np.einsum("tij,ptj->pti", inv, rel)
        lam = np.concatenate([1.0 - l12.sum(-1, keepdims=True), l12], axis=-1)
        worst = lam.min(-1)
        inside = worst >= -BARY_TOL
        idx = np.where(inside.any(1), np.argmax(inside, axis=1), np.argmax(worst, axis=1))
        chosen = lam[np.arange(len(pts)), idx]
        if len(pts) and chosen.min() < -BARY_FALLBACK:
            bad = int(np.argmin(chosen.min(-1)))
            raise GeometryError(f"point {pts[bad]} not located in the fold triangulation")
        return idx, chosen

    def _cell_forward(self, pts: np.ndarray) -> np.ndarray:
        idx, lam = self._locate(pts, self.src, self._src_inv)
        return np.einsum("pi,pij->pj", lam, self.dst[idx])

    def _cell_inverse(self, pts: np.ndarray) -> np.ndarray:
        idx, lam = self._locate(pts, self.dst, self._dst_inv)
        return np.einsum("pi,pij->pj", lam, self.src[idx])

    # -- evaluation on the strip ------------------------------------------------

    def forward_xy(self, x, y):
        """Lift H~ on strip coordinates."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        x, y = np.broadcast_to(x, shape).ravel(), np.broadcast_to(y, shape).ravel()
        k = np.floor(x * self.q)
        shift = k / self.q
        out = self._cell_forward(np.column_stack([x - shift, y]))
        return (out[:, 0] + shift).reshape(shape), out[:, 1].reshape(shape)

    def inverse_xy(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        x, y = np.broadcast_to(x, shape).ravel(), np.broadcast_to(y, shape).ravel()
        k = np.floor((x - (y - 1.0)) * self.q)
        shift = k / self.q
        out = self._cell_inverse(np.column_stack([x - shift, y]))
        return (out[:, 0] + shift).reshape(shape), out[:, 1].reshape(shape)

    def conjugated_rotation_xy(self, x, y, alpha: float, k: int = 1):
        """Lift of H R_{k alpha} H^{-1} (k scalar or array); whole turns are added last."""
        u, v = self.inverse_xy(x, y)
        shift = np.asarray(k) * alpha
        whole = np.floor(shift)
        X, Y = self.forward_xy(u + (shift - whole), v)
        return X + whole, Y

    # -- exact images of polylines -----------------------------------------------

    def refine(self, points: np.ndarray, side: str = "source") -> np.ndarray:
        """Insert the points where a strip polyline crosses triangulation edges.

        ``side='source'`` uses the domain triangulation of H, ``'target'`` the
        image triangulation (the domain of H^{-1}).  Afterwards the image of the
        polyline under the corresponding map is the polyline of vertex images.
        """
        pts = np.asarray(points, dtype=float)
        verts = self.spec.source_vertices if side == "source" else self.spec.target_vertices
        shear = side != "source"
        edges = np.array([[verts[a], verts[b]] for a, b in CELL_EDGES])
        P, Q = pts[:-1], pts[1:]

        def cell(p):
            return p[:, 0] - (p[:, 1] - 1.0 if shear else 0.0)

        cp, cq = cell(P), cell(Q)
        klo = np.floor(np.minimum(cp, cq) * self.q).astype(np.int64) - 1
        khi = np.floor(np.maximum(cp, cq) * self.q).astype(np.int64) + 1
        counts = khi - klo + 1
        seg = np.repeat(np.arange(len(P)), counts)
        offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        kk = klo[seg] + offs
        shift = kk / self.q

        ts, ss = [], []
        r = Q[seg] - P[seg]
        for e0, e1 in edges:
            E0 = np.column_stack([e0[0] + shift, np.full_like(shift, e0[1])])
            s = e1 - e0
            w = E0 - P[seg]
            den = r[:, 0] * s[1] - r[:, 1] * s[0]
            ok = np.abs(den) > 1e-15
            t = np.where(ok, (w[:, 0] * s[1] - w[:, 1] * s[0]) / np.where(ok, den, 1.0), -1.0)
            u = np.where(ok, (w[:, 0] * r[:, 1] - w[:, 1] * r[:, 0]) / np.where(ok, den, 1.0), -1.0)
            hit = ok & (t > 1e-12) & (t < 1 - 1e-12) & (u >= -1e-12) & (u <= 1 + 1e-12)
            ts.append(t[hit])
            ss.append(seg[hit])
        t_all = np.concatenate(ts + [np.zeros(len(P))])
        s_all = np.concatenate(ss + [np.arange(len(P))])
        order = np.lexsort((t_all, s_all))
        t_all, s_all = t_all[order], s_all[order]
        keep = np.ones(len(t_all), dtype=bool)
        keep[1:] = ~((s_all[1:] == s_all[:-1]) & (t_all[1:] - t_all[:-1] < 1e-12))
        t_all, s_all = t_all[keep], s_all[keep]
        new = P[s_all] + t_all[:, None] * (Q[s_all] - P[s_all])
        return np.vstack([new, pts[-1:]])

    def image_of_curve(self, curve: CurveSample, inverse: bool = False) -> CurveSample:
        """Exact image of a polyline under H (or H^{-1})."""
        fine = self.refine(curve.points, "target" if inverse else "source")
        fn = self.inverse_xy if inverse else self.forward_xy
        X, Y = fn(fine[:, 0], fine[:, 1])
        out = np.column_stack([X, Y])
        if curve.closed:
            out[-1] = out[0] + np.array([curve.winding, 0.0])
        return CurveSample(out, curve.closed, curve.winding, curve.label)

    def level_circle(self, rho: float, n_samples: int = 0) -> CurveSample:
        """H(C_rho): the image of the round circle at radius rho."""
        x = np.linspace(0.0, 1.0, max(n_samples, 1) + 1)
        base = CurveSample(np.column_stack([x, np.full_like(x, rho)]), closed=True, winding=1)
        img = self.image_of_curve(base)
        return CurveSample(img.points, True, 1, f"H_{self.p}/{self.q}(C_{rho:g})")


def build_fold_map(p: int, q: int) -> FoldMap:
    spec = FoldSpec(p, q)
    src = spec.source_vertices[TRIANGLES]
    dst = spec.target_vertices[TRIANGLES]
    fmap = FoldMap(spec, src, dst)
    validate_fold_map(fmap)
    return fmap


def validate_fold_map(fmap: FoldMap) -> None:
    """Orientation, tiling and gluing checks; raises FoldConstructionError."""
    q = fmap.q
    for name, tris in (("source", fmap.src), ("target", fmap.dst)):
        areas = _orient(tris) / 2.0
        if np.any(areas <= 0):
            raise FoldConstructionError(f"{name} triangle with non-positive orientation")
        if abs(areas.sum() - 1.0 / q) > 1e-12:
            raise FoldConstructionError(f"{name} triangles do not cover area 1/q")
        for i in range(len(tris)):
            for j in range(i + 1, len(tris)):
                if _triangles_overlap(tris[i], tris[j]):
                    raise FoldConstructionError(f"{name} triangles {i} and {j} overlap")
    # every triangle inside its region (with the area sum this gives a tiling)
    s = fmap.src.reshape(-1, 2)
    if s[:, 0].min() < -1e-15 or s[:, 0].max() > 1.0 / q + 1e-15:
        raise FoldConstructionError("source triangle leaves B0")
    d = fmap.dst.reshape(-1, 2)
    u = d[:, 0] - (d[:, 1] - 1.0)
    if u.min() < -1e-12 or u.max() > 1.0 / q + 1e-12 or d[:, 1].min() < 1 or d[:, 1].max() > 2:
        raise FoldConstructionError("target triangle leaves B0'")
    # the right wall maps to the left wall's image shifted by 1/q
    ys = np.linspace(1.0, 2.0, 33)
    left = fmap._cell_forward(np.column_stack([np.zeros_like(ys), ys]))
    right = fmap._cell_forward(np.column_stack([np.full_like(ys, 1.0 / q), ys]))
    if np.abs(right - left - np.array([1.0 / q, 0.0])).max() > 1e-12:
        raise FoldConstructionError("cell walls do not glue under translation by 1/q")


# --- annulus-level evaluation ------------------------------------------------------

def eval_H(fmap: FoldMap, z: AnnulusPoint) -> AnnulusPoint:
    s = cover_lift(z)
    X, Y = fmap.forward_xy(s.x, s.y)
    th, r = project_xy(X, Y)
    return AnnulusPoint(float(th), float(r))


def eval_H_inv(fmap: FoldMap, z: AnnulusPoint) -> AnnulusPoint:
    s = cover_lift(z)
    X, Y = fmap.inverse_xy(s.x, s.y)
    th, r = project_xy(X, Y)
    return AnnulusPoint(float(th), float(r))


# --- property checks ------------------------------------------------------------------

def check_commutation(fmap: FoldMap, n_theta: int = 256, n_r: int = 64) -> float:
    """sup |H R_{p/q} H^{-1} z - R_{p/q} z| over a theta x r grid."""
    th = np.arange(n_theta) / n_theta
    r = np.linspace(1.0, 2.0, n_r)
    X, Y = np.meshgrid(th, r, indexing="ij")
    X, Y = X.ravel(), Y.ravel()
    shift = fmap.p / fmap.q
    u, v = fmap.inverse_xy(X, Y)
    a, b = fmap.forward_xy(u + shift, v)
    return float(planar_distance(a, b, X + shift, Y).max())


def sharp_lipschitz_bound(q: int) -> float:
    return 2.0 * q * math.sqrt(1.0 + (1.0 + 1.0 / q) ** 2)


def angular_lipschitz_ratio(fmap: FoldMap, n_pairs: int, rng_seed: int = 0) -> float:
    """Largest angular stretch of H over same-radius pairs.

    Pairs are drawn at random radii with gaps spread log-uniformly between
    1e-6 rad and pi.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be positive")
    rng = np.random.default_rng(rng_seed)
    r = rng.uniform(1.0, 2.0, n_pairs)
    r[: min(n_pairs, 8)] = np.linspace(1.0, 2.0, min(n_pairs, 8))
    x = rng.uniform(0.0, 1.0, n_pairs)
    gap = np.exp(rng.uniform(math.log(1e-6), math.log(math.pi), n_pairs))
    gap *= rng.choice([-1.0, 1.0], n_pairs)
    x2 = x + gap / TWO_PI
    a, _ = fmap.forward_xy(x, r)
    b, _ = fmap.forward_xy(x2, r)
    before = angular_distance(TWO_PI * x, TWO_PI * x2)
    after = angular_distance(TWO_PI * a, TWO_PI * b)
    ok = before > 0
    return float((after[ok] / before[ok]).max()) if ok.any() else 0.0


def folded_circle(fmap: FoldMap, n_samples: int) -> CurveSample:
    """The fold witness H(C_{3/2}), i.e. the projected periodic polyline L~."""
    if n_samples < 16 * fmap.q:
        raise ValueError("n_samples must be at least 16 q")
    return fmap.level_circle(1.5, n_samples)


def mfa_expected(q: int) -> float:
    """Backtrack of H(C_{3/2}) over one fold: 2 pi (1/4 - 1/(2q))."""
    return TWO_PI * (0.25 - 0.5 / q)


def rotation_gap_xy(fmap: FoldMap, alpha: float, x, y) -> np.ndarray:
    """Angular distance between H R_alpha H^{-1} z and R_{p/q} z (radians)."""
    X, _ = fmap.conjugated_rotation_xy(x, y, alpha)
    ref = Fraction(fmap.p, fmap.q)
    return angular_distance(TWO_PI * X, TWO_PI * (np.asarray(x) + float(ref)))


def conjugated_rotation_gap(fmap: FoldMap, alpha: float, z: AnnulusPoint) -> float:
    s = cover_lift(z)
    return float(rotation_gap_xy(fmap, alpha, s.x, s.y))


def rotation_gap_bound(q: int, alpha: float, p: int) -> float:
    return 5.0 * q * math.pi * abs(alpha - p / q)
