"""Distal, periodic-point-free annulus homeomorphisms built from folding maps."""
from .annulus_core import (
    AnnulusPoint,
    CurveSample,
    count_crossings,
    drawdown_mfa,
    hausdorff_distance,
    radial_arc,
    round_circle,
)
from .distal_example import Alpha, GMap, build_g, dirichlet_approximants
from .dynamics import orbit, proximality_probe, rotation_number, transversal_report
from .folding_map import FoldMap, build_fold_map, folded_circle
from .linearizer import build_linearization, synthetic_linearizable

__all__ = [
    "Alpha", "AnnulusPoint", "CurveSample", "FoldMap", "GMap",
    "build_fold_map", "build_g", "build_linearization", "count_crossings",
    "dirichlet_approximants", "drawdown_mfa", "folded_circle", "hausdorff_distance",
    "orbit", "proximality_probe", "radial_arc", "rotation_number", "round_circle",
    "synthetic_linearizable", "transversal_report",
]
