"""Numerical linearization of a map whose invariant circles admit a section.

Given a transversal gamma and the rotation number theta, the conjugacy Psi
sends the orbit point f^n(gamma(c)) on circle c to the angle n*theta on the
round circle of radius c.  Between orbit points Psi is extended by monotone
circular interpolation, one table per circle label.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .annulus_core import TWO_PI, CurveSample, planar_distance
from .dynamics import MapHandle, TransversalReport, transversal_report, _round_family


class NotTransversalError(ValueError):
    def __init__(self, report: TransversalReport):
        self.report = report
        super().__init__(f"arc is not a transversal; violating circles: {report.violating}")


class MonotonicityError(ValueError):
    """Orbit order on a circle does not match the order of n*theta."""


class LinearizationGapError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Transversal:
    """An arc from C_1 to C_2 meeting each round invariant circle once.

    The circle label c in [1, 2] is the radius; ``point_at`` returns the
    x-coordinate where the arc crosses y = c.
    """

    curve: CurveSample

    def __post_init__(self):
        dy = np.diff(self.curve.y)
        if not (np.all(dy > 0) or np.all(dy < 0)):
            raise ValueError("transversal parametrization needs y strictly monotone along the arc")

    def point_at(self, labels) -> np.ndarray:
        y, x = self.curve.y, self.curve.x
        if y[0] > y[-1]:
            y, x = y[::-1], x[::-1]
        return np.interp(labels, y, x)


# --- the synthetic linearizable map -----------------------------------------------

def _twist_inverse(x, y, amp: float):
    """Solve u + b sin(2 pi u) = x with b = amp (y - 1) / (2 pi)."""
    x = np.asarray(x, dtype=float)
    b = amp * (np.asarray(y, dtype=float) - 1.0) / TWO_PI
    u = x.copy()
    for _ in range(50):
        step = (u + b * np.sin(TWO_PI * u) - x) / (1.0 + TWO_PI * b * np.cos(TWO_PI * u))
        u = u - step
        if np.max(np.abs(step), initial=0.0) < 1e-16:
            break
    return u


def _twist(u, y, amp: float):
    return u + amp * (np.asarray(y) - 1.0) / TWO_PI * np.sin(TWO_PI * np.asarray(u))


def synthetic_linearizable(alpha: float, twist_amplitude: float):
    """f = Phi R_alpha Phi^{-1} with Phi(theta, r) = (theta + a (r - 1) sin theta, r).

    Returns the map and the transversal Phi({theta = 0}).
    """
    a = float(twist_amplitude)
    if not 0.0 <= a < 1.0:
        raise ValueError("twist amplitude must lie in [0, 1)")

    def power(x, y, k):
        y = np.asarray(y, dtype=float)
        u = _twist_inverse(x, y, a)
        shift = np.asarray(k) * alpha
        whole = np.floor(shift)
        return _twist(u + (shift - whole), y, a) + whole, y.copy()

    f = MapHandle(lambda x, y: power(x, y, 1), lambda x, y: power(x, y, -1),
                  f"Phi R_{alpha:.12g} Phi^-1 (a={a:g})", power=power, circles=_round_family)
    ys = np.linspace(1.0, 2.0, 65)
    gamma = CurveSample(np.column_stack([_twist(np.zeros_like(ys), ys, a), ys]), label="Phi(radial:0)")
    return f, Transversal(gamma)


# --- tables -----------------------------------------------------------------------

def _frac_multiples(theta: float, ks: np.ndarray) -> np.ndarray:
    """frac(k * theta) computed exactly from the binary value of theta."""
    fr = Fraction(theta)
    num, den = fr.numerator, fr.denominator
    return np.array([((int(k) * num) % den) / den for k in ks])


def _orbit_window(fmap: MapHandle, x0: np.ndarray, y0: np.ndarray, lo: int, hi: int):
    """Reduced angles x_k in [0, 1) of f^k(x0, y0) for lo <= k <= hi, by iteration."""
    n_fwd, n_bwd = max(hi, 0), max(-lo, 0)
    xs = np.empty((hi - lo + 1, len(x0)))
    base = -lo
    for sign, count, fn in ((1, n_fwd, fmap.forward), (-1, n_bwd, fmap.inverse)):
        x, y = np.mod(x0, 1.0), y0.copy()
        xs[base] = x
        for k in range(1, count + 1):
            x, y = fn(x, y)
            x = x - np.floor(x)
            xs[base + sign * k] = x
    return xs


@dataclass(frozen=True, eq=False)
class CircleTable:
    """Monotone pairing of orbit angles (turns) with targets k*theta on one circle."""

    source: np.ndarray
    target: np.ndarray
    gap_source: float
    gap_target: float

    def __call__(self, s) -> np.ndarray:
        s = np.mod(np.asarray(s, dtype=float), 1.0)
        S = np.concatenate([self.source - 1.0, self.source, self.source + 1.0])
        T = np.concatenate([self.target - 1.0, self.target, self.target + 1.0])
        return np.mod(np.interp(s, S, T), 1.0)


def _make_table(source: np.ndarray, target: np.ndarray) -> CircleTable:
    order = np.argsort(source, kind="stable")
    s, t = source[order], target[order]
    if np.any(np.diff(s) <= 0) or np.any(np.diff(np.sort(t)) <= 1e-15):
        raise MonotonicityError("repeated orbit point: periodic orbit detected (rational theta?)")
    desc = np.diff(t) < 0
    wraps = int(desc.sum()) + int(t[0] < t[-1])
    if wraps != 1:
        raise MonotonicityError(f"orbit order disagrees with rotation order ({wraps} wraps)")
    T = t + np.concatenate([[0], np.cumsum(desc)])
    gs = float(max(np.diff(s).max(initial=0.0), s[0] + 1.0 - s[-1]))
    gt = float(max(np.diff(T).max(initial=0.0), T[0] + 1.0 - T[-1]))
    return CircleTable(s, T, gs, gt)


def circle_conjugacy(fmap: MapHandle, label: float, base_x: float, theta: float, n: int,
                     window: str = "both") -> CircleTable:
    """Table of f^k(base) against k*theta (mod 1) for the k in the window."""
    if n < 100:
        raise ValueError("circle_conjugacy needs n >= 100")
    return _circle_tables(fmap, np.array([label]), np.array([base_x]), theta, n, window)[0]


def _window(n: int, window: str) -> tuple[int, int]:
    return {"both": (-n, n), "forward": (0, n), "backward": (-n, 0)}[window]


def _circle_tables(fmap, labels, base_x, theta, n, window="both") -> list[CircleTable]:
    lo, hi = _window(n, window)
    xs = _orbit_window(fmap, np.asarray(base_x, float), np.asarray(labels, float), lo, hi)
    targets = _frac_multiples(theta, np.arange(lo, hi + 1))
    return [_make_table(xs[:, j], targets) for j in range(len(labels))]


@dataclass(frozen=True, eq=False)
class LinearizationTable:
    theta: float
    labels: np.ndarray
    base_x: np.ndarray
    tables: tuple = field(repr=False)
    grid: np.ndarray = field(repr=False)
    N: int = 0
    residual: float = math.nan

    @property
    def worst_gap(self) -> float:
        return max(t.gap_source for t in self.tables)

    @property
    def worst_target_gap(self) -> float:
        return max(t.gap_target for t in self.tables)

    def psi_xy(self, x, y):
        """Psi on strip points; angles in turns, radius = circle label.

        Points between tabulated labels blend the two neighbouring tables.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        j = np.clip(np.searchsorted(self.labels, y) - 1, 0, len(self.labels) - 2)
        lo, hi = self.labels[j], self.labels[j + 1]
        w = np.clip((y - lo) / (hi - lo), 0.0, 1.0)
        out = np.empty_like(x)
        for jj in np.unique(j):
            m = j == jj
            a = self.tables[jj](x[m])
            b = self.tables[jj + 1](x[m])
            d = np.mod(b - a + 0.5, 1.0) - 0.5
            out[m] = np.mod(a + w[m] * d, 1.0)
        return out, y.copy()

    def with_residual(self, residual: float) -> "LinearizationTable":
        return LinearizationTable(self.theta, self.labels, self.base_x, self.tables, self.grid,
                                  self.N, residual)


def build_linearization(fmap: MapHandle, gamma: Transversal, theta: float, N: int,
                        grid: Sequence[int] = (64, 64), window: str = "both",
                        max_gap: float | None = None, precheck: bool = True,
                        residual_samples: int = 4096, rng_seed: int = 0) -> LinearizationTable:
    """Conjugacy table Psi with Psi f = R_theta Psi, normalised by Psi(gamma(c)) = (0, c)."""
    if N < 100:
        raise ValueError("N must be at least 100")
    if precheck:
        report = transversal_report(fmap, gamma.curve, 16)
        if report.verdict != "TRANSVERSAL":
            raise NotTransversalError(report)
    n_labels, n_angles = int(grid[0]), int(grid[1])
    labels = np.linspace(1.0, 2.0, n_labels)
    base_x = gamma.point_at(labels)
    tables = tuple(_circle_tables(fmap, labels, base_x, theta, N, window))
    limit = 1.0 / n_angles if max_gap is None else max_gap
    worst = max(t.gap_source for t in tables)
    if worst > limit:
        raise LinearizationGapError(f"orbit leaves an angular gap of {worst:.4g} turns "
                                    f"(limit {limit:.4g}); increase N")
    angles = np.arange(n_angles) / n_angles
    values = np.stack([t(angles) for t in tables])
    table = LinearizationTable(theta, labels, base_x, tables, values, N)
    return table.with_residual(conjugacy_residual(table, fmap, theta, residual_samples, rng_seed))


def conjugacy_residual(table: LinearizationTable, fmap: MapHandle, theta: float,
                       samples: int = 4096, rng_seed: int = 0) -> float:
    """sup over sample points x of |Psi(f(x)) - R_theta(Psi(x))| in the plane."""
    rng = np.random.default_rng(rng_seed)
    j = np.arange(samples) % len(table.labels)
    y = table.labels[j]
    x = rng.uniform(0.0, 1.0, samples)
    fx, fy = fmap.forward(x, y)
    a, ra = table.psi_xy(fx, fy)
    b, rb = table.psi_xy(x, y)
    return float(planar_distance(a, ra, b + theta, rb).max())


def consistency_check(fmap: MapHandle, gamma: Transversal, theta: float, N: int,
                      grid: Sequence[int] = (64, 64)) -> dict:
    """Compare Psi built from the backward window [-N, 0] with the forward one [0, N].

    Each window's interpolant is within its target gap of the true conjugacy,
    so the two agree to twice the larger gap.
    """
    back = build_linearization(fmap, gamma, theta, N, grid, window="backward", max_gap=1.0,
                               precheck=False, residual_samples=16)
    fwd = build_linearization(fmap, gamma, theta, N, grid, window="forward", max_gap=1.0,
                              precheck=False, residual_samples=16)
    diff = np.abs(np.mod(back.grid - fwd.grid + 0.5, 1.0) - 0.5).max()
    bound = 2.0 * max(back.worst_target_gap, fwd.worst_target_gap)
    return {"max_diff": float(diff), "bound": float(bound), "passed": bool(diff <= bound)}


def section_images(fmap: MapHandle, gamma: Transversal, n: int) -> list[CurveSample]:
    """L_k = f^k(gamma) for k = -n..n."""
    return [fmap.image_of_curve(gamma.curve, k) if k else gamma.curve for k in range(-n, n + 1)]


def psi_injective(table: LinearizationTable) -> bool:
    """Per-circle tables strictly increasing and labels strictly increasing."""
    ok_labels = bool(np.all(np.diff(table.labels) > 0))
    ok_tables = all(np.all(np.diff(t.source) > 0) and np.all(np.diff(t.target) > 0) for t in table.tables)
    return ok_labels and ok_tables
