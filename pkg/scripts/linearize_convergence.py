"""Conjugacy residual of the synthetic linearization as the orbit window grows."""
import argparse

from distal_annulus.distal_example import Alpha
from distal_annulus.linearizer import build_linearization, consistency_check, synthetic_linearizable

ap = argparse.ArgumentParser()
ap.add_argument("--alpha", default="golden")
ap.add_argument("--amplitude", type=float, default=0.3)
ap.add_argument("--grid", type=int, default=64)
args = ap.parse_args()

theta = Alpha.parse(args.alpha).value
f, gamma = synthetic_linearizable(theta, args.amplitude)
print("N,residual,worst_gap,consistency_diff,consistency_bound")
for n in (100, 1_000, 10_000, 30_000):
    t = build_linearization(f, gamma, theta, n, (args.grid, args.grid), max_gap=1.0)
    c = consistency_check(f, gamma, theta, n, (args.grid, args.grid))
    print(f"{n},{t.residual:.3e},{t.worst_gap:.3e},{c['max_diff']:.3e},{c['bound']:.3e}")
