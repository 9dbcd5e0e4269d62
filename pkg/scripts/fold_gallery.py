"""Render the folded circles of g's bands and of single fold maps to SVG."""
import argparse
from pathlib import Path

from distal_annulus.annulus_core import round_circle
from distal_annulus.distal_example import build_g, fold_witness, gap_regions
from distal_annulus.export import write_svg
from distal_annulus.folding_map import build_fold_map, folded_circle

ap = argparse.ArgumentParser()
ap.add_argument("--out", default="out/gallery")
ap.add_argument("--alpha", default="golden")
ap.add_argument("--levels", type=int, default=4)
args = ap.parse_args()
out = Path(args.out)

for q in (7, 8, 13, 21):
    write_svg(out / f"fold_q{q}.svg", [folded_circle(build_fold_map(1, q), 16 * q)])

g = build_g(args.alpha, args.levels)
curves = [fold_witness(g, k, 16 * a.q) for k, a in enumerate(g.approximants)]
curves += [round_circle(0.5 * (lo + hi), 512) for lo, hi in gap_regions(g)]
colors = ["#c0392b"] * g.levels + ["#2c3e50"] * (len(curves) - g.levels)
write_svg(out / "g_witnesses.svg", curves, colors)
print(f"wrote {len(list(out.glob('*.svg')))} SVG files to {out}")
