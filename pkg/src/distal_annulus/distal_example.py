"""The non-linearizable distal homeomorphism g with rotation number alpha.

g is the rotation R_alpha except on the nested bands
``A_n = {2 - 1/(2n) <= |z| <= 2 - 1/(2n+1)}``.  On A_n it is the radially
squeezed copy of ``H_n R_alpha H_n^{-1}``, where H_n is the fold map for the
n-th Dirichlet approximant of alpha.  Only the first ``levels`` bands are
kept; beyond them g is replaced by R_alpha.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Sequence

import numpy as np

from .annulus_core import (
    TWO_PI,
    AnnulusPoint,
    CurveSample,
    concat_curves,
    cover_lift,
    project_xy,
    round_circle,
)
from .folding_map import FoldMap, build_fold_map, mfa_expected

GOLDEN_CF = (0,) + (1,) * 80


class AlphaError(ValueError):
    pass


@dataclass(frozen=True)
class Alpha:
    """An irrational rotation number known through a rational representative.

    ``uncertainty`` bounds |alpha - exact|; it is zero for a continued-fraction
    prefix, whose convergents (except the last) are exact for every
    continuation.
    """

    exact: Fraction
    cf: tuple
    uncertainty: Fraction
    source: str

    @property
    def value(self) -> float:
        return float(self.exact)

    @classmethod
    def from_decimal(cls, text: str) -> "Alpha":
        text = text.strip()
        if text.lower() in ("golden", "phi"):
            return cls.from_cf(GOLDEN_CF)
        try:
            dec = Decimal(text)
        except InvalidOperation as exc:
            raise AlphaError(f"malformed alpha {text!r}") from exc
        if not dec.is_finite():
            raise AlphaError(f"malformed alpha {text!r}")
        exact = Fraction(dec)
        if not (0 < exact < 1):
            raise AlphaError("alpha must lie in (0, 1)")
        digits = max(0, -dec.as_tuple().exponent)
        return cls(exact, tuple(continued_fraction(exact)), Fraction(1, 2 * 10 ** digits), text)

    @classmethod
    def from_cf(cls, terms: Sequence[int]) -> "Alpha":
        terms = tuple(int(a) for a in terms)
        if len(terms) < 2 or any(a < 1 for a in terms[1:]):
            raise AlphaError("continued fraction needs a0 and positive partial quotients")
        exact = Fraction(terms[-1])
        for a in reversed(terms[:-1]):
            exact = a + 1 / exact
        if not (0 < exact < 1):
            raise AlphaError("alpha must lie in (0, 1)")
        return cls(exact, terms, Fraction(0), "cf:" + ",".join(map(str, terms)))

    @classmethod
    def parse(cls, value) -> "Alpha":
        if isinstance(value, Alpha):
            return value
        if isinstance(value, (list, tuple)):
            return cls.from_cf(value)
        if isinstance(value, float):
            return cls.from_decimal(repr(value))
        if isinstance(value, Fraction):
            return cls(value, tuple(continued_fraction(value)), Fraction(0), str(value))
        return cls.from_decimal(str(value))


def continued_fraction(x: Fraction) -> list[int]:
    terms = []
    while True:
        a = x.numerator // x.denominator
        terms.append(a)
        x -= a
        if x == 0:
            return terms
        x = 1 / x


def convergents(terms: Sequence[int]):
    p0, q0, p1, q1 = 1, 0, terms[0], 1
    yield p1, q1
    for a in terms[1:]:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        yield p1, q1


@dataclass(frozen=True)
class Approximant:
    p: int
    q: int
    gap: float


def dirichlet_approximants(alpha, count: int) -> list[Approximant]:
    """First ``count`` convergents of alpha with q > 6.

    Each satisfies |alpha - p/q| < 1/q^2 for every alpha compatible with the
    input, checked in exact rational arithmetic.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    alpha = Alpha.parse(alpha)
    terms = alpha.cf
    out = []
    # the final convergent is the representative itself, not an approximant
    for i, (p, q) in enumerate(convergents(terms)):
        if i == len(terms) - 1:
            break
        if q <= 6:
            continue
        err = abs(alpha.exact - Fraction(p, q)) + alpha.uncertainty
        if err * q * q >= 1:
            raise AlphaError(f"alpha {alpha.source!r} is not precise enough for {count} approximants")
        out.append(Approximant(p, q, float(abs(alpha.exact - Fraction(p, q)))))
        if len(out) == count:
            return out
    raise AlphaError(f"alpha {alpha.source!r} is rational to working precision "
                     f"(continued fraction ends after {len(out)} usable approximants)")


@dataclass(frozen=True)
class BandSpec:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("band index starts at 1")

    @property
    def r_in(self) -> float:
        return 2.0 - 1.0 / (2 * self.n)

    @property
    def r_out(self) -> float:
        return 2.0 - 1.0 / (2 * self.n + 1)

    def contains(self, r):
        return (np.asarray(r) >= self.r_in) & (np.asarray(r) <= self.r_out)


def squeeze_r(band: BandSpec, r):
    r = np.asarray(r, dtype=float)
    out = 1.0 + (r - band.r_in) / (band.r_out - band.r_in)
    return np.clip(out, 1.0, 2.0)


def unsqueeze_r(band: BandSpec, s):
    s = np.asarray(s, dtype=float)
    out = band.r_in + (s - 1.0) * (band.r_out - band.r_in)
    return np.where(s >= 2.0, band.r_out, np.where(s <= 1.0, band.r_in, out))


def squeeze(band: BandSpec, z: AnnulusPoint) -> AnnulusPoint:
    if not (band.r_in <= z.r <= band.r_out):
        raise ValueError(f"radius {z.r} outside band {band.n}")
    return AnnulusPoint(z.theta, float(squeeze_r(band, z.r)))


def unsqueeze(band: BandSpec, z: AnnulusPoint) -> AnnulusPoint:
    return AnnulusPoint(z.theta, float(unsqueeze_r(band, z.r)))


def continuity_bound(q: int) -> float:
    """5 pi / q + 2 pi / q^2: the angular deviation allowed on band q."""
    return 5.0 * math.pi / q + TWO_PI / q ** 2


@dataclass(frozen=True, eq=False)
class GMap:
    alpha: Alpha
    approximants: tuple = ()
    bands: tuple = ()
    fold_maps: tuple = field(default=(), repr=False)

    @property
    def levels(self) -> int:
        return len(self.bands)

    @property
    def alpha_value(self) -> float:
        return self.alpha.value

    @classmethod
    def rigid(cls, alpha) -> "GMap":
        """The level-0 substitute: the plain rotation R_alpha."""
        return cls(Alpha.parse(alpha))

    def band_index(self, y) -> np.ndarray:
        """Index of the retained band containing each radius, -1 outside."""
        y = np.asarray(y, dtype=float)
        idx = np.full(y.shape, -1, dtype=np.int64)
        for k, band in enumerate(self.bands):
            idx[band.contains(y)] = k
        return idx

    def power_xy(self, x, y, k: int = 1):
        """Lift of g^k on strip coordinates; k is an integer or an integer array."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        x = np.broadcast_to(x, shape).ravel().copy()
        y = np.broadcast_to(y, shape).ravel().copy()
        k = np.broadcast_to(np.asarray(k), shape).ravel()
        out_x, out_y = x + k * self.alpha_value, y.copy()
        idx = self.band_index(y)
        for b, (band, fmap) in enumerate(zip(self.bands, self.fold_maps)):
            m = idx == b
            if not m.any():
                continue
            X, S = fmap.conjugated_rotation_xy(x[m], squeeze_r(band, y[m]), self.alpha_value, k[m])
            out_x[m] = X
            out_y[m] = unsqueeze_r(band, S)
        return out_x.reshape(shape), out_y.reshape(shape)

    def forward_xy(self, x, y):
        return self.power_xy(x, y, 1)

    def inverse_xy(self, x, y):
        return self.power_xy(x, y, -1)

    # -- curves ----------------------------------------------------------------

    def _split_at_bands(self, pts: np.ndarray) -> np.ndarray:
        """Insert the points where a polyline crosses band boundary circles."""
        levels = sorted({b.r_in for b in self.bands} | {b.r_out for b in self.bands})
        out = [pts[0]]
        for p, q in zip(pts[:-1], pts[1:]):
            ts = []
            if p[1] != q[1]:
                for r in levels:
                    t = (r - p[1]) / (q[1] - p[1])
                    if 1e-12 < t < 1 - 1e-12:
                        ts.append(t)
            for t in sorted(ts):
                out.append(p + t * (q - p))
            out.append(q)
        return np.array(out)

    def power_curve(self, curve: CurveSample, k: int) -> CurveSample:
        """Exact image of a strip polyline under g^k."""
        pts = self._split_at_bands(curve.points)
        mid = 0.5 * (pts[:-1, 1] + pts[1:, 1])
        seg_band = self.band_index(mid)
        pieces = []
        start = 0
        for i in range(1, len(seg_band) + 1):
            if i < len(seg_band) and seg_band[i] == seg_band[start]:
                continue
            run = pts[start:i + 1]
            b = seg_band[start]
            if b < 0:
                pieces.append(run + np.array([k * self.alpha_value, 0.0]))
            else:
                pieces.append(self._band_power_polyline(b, run, k))
            start = i
        out = concat_curves(pieces)
        keep = np.ones(len(out), dtype=bool)
        keep[1:] = np.abs(np.diff(out, axis=0)).max(axis=1) > 0
        out = out[keep]
        if curve.closed:
            out[-1] = out[0] + np.array([curve.winding, 0.0])
        return CurveSample(out, curve.closed, curve.winding, curve.label)

    def _band_power_polyline(self, b: int, run: np.ndarray, k: int) -> np.ndarray:
        band, fmap = self.bands[b], self.fold_maps[b]
        sq = np.column_stack([run[:, 0], squeeze_r(band, run[:, 1])])
        sq = fmap.refine(sq, "target")
        u, v = fmap.inverse_xy(sq[:, 0], sq[:, 1])
        shift = k * self.alpha_value
        whole = math.floor(shift)
        mid = fmap.refine(np.column_stack([u + (shift - whole), v]), "source")
        X, S = fmap.forward_xy(mid[:, 0], mid[:, 1])
        return np.column_stack([X + whole, unsqueeze_r(band, S)])

    def band_circle(self, b: int, rho: float, n_samples: int = 0) -> CurveSample:
        """Invariant circle of band b through squeezed radius rho of H^{-1}."""
        band, fmap = self.bands[b], self.fold_maps[b]
        c = fmap.level_circle(rho, n_samples)
        pts = np.column_stack([c.x, unsqueeze_r(band, c.y)])
        return CurveSample(pts, True, 1, f"band{band.n}:rho={rho:g}")


def build_g(alpha, levels: int = 8) -> GMap:
    if levels < 1:
        raise ValueError("levels must be at least 1 (use GMap.rigid for the pure rotation)")
    alpha = Alpha.parse(alpha)
    approx = dirichlet_approximants(alpha, levels)
    bands = tuple(BandSpec(n) for n in range(1, levels + 1))
    folds = tuple(build_fold_map(a.p, a.q) for a in approx)
    return GMap(alpha, tuple(approx), bands, folds)


def eval_g(g: GMap, z: AnnulusPoint) -> AnnulusPoint:
    s = cover_lift(z)
    X, Y = g.forward_xy(s.x, s.y)
    th, r = project_xy(X, Y)
    return AnnulusPoint(float(th), float(r))


def eval_g_inv(g: GMap, z: AnnulusPoint) -> AnnulusPoint:
    s = cover_lift(z)
    X, Y = g.inverse_xy(s.x, s.y)
    th, r = project_xy(X, Y)
    return AnnulusPoint(float(th), float(r))


def circle_parameter(g: GMap, x: float, y: float):
    """(band index, squeezed radius rho) labelling the invariant circle through (x, y)."""
    b = int(g.band_index(y))
    if b < 0:
        return b, float(y)
    band, fmap = g.bands[b], g.fold_maps[b]
    _, rho = fmap.inverse_xy(x, squeeze_r(band, y))
    return b, float(rho)


def invariant_circle_through(g: GMap, z: AnnulusPoint, n_samples: int = 256) -> CurveSample:
    s = cover_lift(z)
    b, rho = circle_parameter(g, s.x, s.y)
    if b < 0:
        return round_circle(s.y, n_samples)
    if n_samples < 16 * g.fold_maps[b].q:
        raise ValueError("n_samples must be at least 16 q for the local band")
    return g.band_circle(b, rho, n_samples)


def fold_witness(g: GMap, b: int, n_samples: int = 0) -> CurveSample:
    """The band's maximal-fold circle: the squeezed image of H_b(C_{3/2})."""
    return g.band_circle(b, 1.5, n_samples)


def _band_grid(band: BandSpec, n_samples: int):
    n_t = max(int(math.sqrt(n_samples)) * 4, 4)
    n_r = max(n_samples // n_t, 2)
    th = np.arange(n_t) / n_t
    r = np.linspace(band.r_in, band.r_out, n_r)
    X, Y = np.meshgrid(th, r, indexing="ij")
    return X.ravel(), Y.ravel()


def continuity_modulus_check(g: GMap, level: int, n_samples: int = 4096) -> float:
    """max |angular displacement of g - 2 pi alpha| over a grid in band ``level``."""
    if not 1 <= level <= g.levels:
        raise ValueError(f"level must lie in 1..{g.levels}")
    x, y = _band_grid(g.bands[level - 1], n_samples)
    X, _ = g.forward_xy(x, y)
    return float(np.abs(TWO_PI * ((X - x) - g.alpha_value)).max())


def band_report(g: GMap, n_samples: int = 4096) -> list[dict]:
    from .annulus_core import drawdown_mfa

    rows = []
    for k, (a, band) in enumerate(zip(g.approximants, g.bands)):
        witness = fold_witness(g, k, 16 * a.q)
        rows.append({
            "n": band.n,
            "p": a.p,
            "q": a.q,
            "gap": a.gap,
            "r_in": band.r_in,
            "r_out": band.r_out,
            "mfa": drawdown_mfa(witness),
            "mfa_expected": mfa_expected(a.q),
            "continuity_bound": continuity_bound(a.q),
            "continuity_measured": continuity_modulus_check(g, k + 1, n_samples),
        })
    return rows


def gap_regions(g: GMap) -> list[tuple[float, float]]:
    """Radius intervals where g is the rigid rotation."""
    edges = [1.0]
    for band in g.bands:
        edges += [band.r_in, band.r_out]
    edges.append(2.0)
    return [(edges[i], edges[i + 1]) for i in range(0, len(edges), 2)]
