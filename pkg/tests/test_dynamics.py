import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from distal_annulus.annulus_core import TWO_PI, AnnulusPoint, CurveSample, radial_arc, round_circle
from distal_annulus.distal_example import Alpha, GMap, build_g, fold_witness
from distal_annulus.dynamics import (
    MapHandle,
    conjugated_rotation,
    crossing_report,
    gmap_handle,
    identity_map,
    orbit,
    proximality_probe,
    rigid_rotation,
    rotation_number,
    sample_circles,
    transversal_report,
)
from distal_annulus.folding_map import build_fold_map

GOLDEN = Alpha.parse("golden")


@pytest.fixture(scope="module")
def g3():
    return build_g(GOLDEN, 3)


@pytest.fixture(scope="module")
def h3(g3):
    return gmap_handle(g3)


class TestHandles:
    def test_bad_inverse_rejected(self):
        with pytest.raises(ValueError):
            MapHandle(lambda x, y: (x + 0.1, y), lambda x, y: (x, y), "broken")

    def test_conjugated_rotation_rational(self):
        f = conjugated_rotation(build_fold_map(1, 7), 1 / 7)
        x = np.linspace(0, 1, 33)
        X, _ = f.step(x, np.full_like(x, 1.3), 7)
        assert np.allclose(X, x + 1, atol=1e-12)


class TestOrbit:
    def test_methods_agree(self, h3):
        seed = AnnulusPoint(1.0, 1.6)
        a = orbit(h3, seed, 500, "power")
        b = orbit(h3, seed, 500, "iterate")
        assert np.allclose(a.x, b.x, atol=1e-9) and np.allclose(a.y, b.y, atol=1e-9)

    def test_rigid_exact(self):
        rec = orbit(rigid_rotation(0.25), (0.0, 1.5), 8)
        assert np.array_equal(rec.x, 0.25 * np.arange(9))
        assert len(rec.points) == 9

    def test_lifted_angles(self, h3):
        rec = orbit(h3, (0.1, 1.55), 100)
        assert np.allclose(rec.lifted_angles, TWO_PI * rec.x)


class TestRotationNumber:
    def test_rigid(self):
        assert rotation_number(rigid_rotation(0.25), (0.0, 1.5), 1000) == 0.25

    def test_identity(self):
        assert rotation_number(identity_map(), (0.3, 1.2), 1000) == 0.0

    def test_needs_iterations(self):
        with pytest.raises(ValueError):
            rotation_number(identity_map(), (0.3, 1.2), 10)

    @given(st.floats(0.0, 1.0), st.floats(1.0, 2.0))
    def test_g_common_value(self, x, y):
        g = build_g(GOLDEN, 3)
        rho = rotation_number(gmap_handle(g), (x, y), 10_000)
        assert abs(rho - g.alpha_value) <= 1.0 / 10_000 + 1e-12


class TestProximality:
    def test_rigid_is_isometry(self):
        f = rigid_rotation(0.3)
        d = proximality_probe(f, (0.0, 1.5), (0.1, 1.5), 200)
        assert d == pytest.approx(2 * 1.5 * math.sin(math.pi * 0.1), rel=1e-12)

    def test_g_floor_positive_and_stable(self, h3, g3):
        c = fold_witness(g3, 0, 0)
        p, q = c.points[3], c.points[11]
        d1 = proximality_probe(h3, p, q, 20_000)
        d2 = proximality_probe(h3, p, q, 40_000, symmetric=True)
        assert d1 > 1e-6 and abs(d2 - d1) <= 0.1 * d1


class TestTransversal:
    def test_rigid_family(self):
        rep = transversal_report(GMap.rigid(GOLDEN), radial_arc(0.7))
        assert rep.verdict == "TRANSVERSAL" and set(rep.crossing_counts) == {1}

    def test_g_not_transversal(self, g3):
        rep = transversal_report(g3, radial_arc(0.7))
        assert rep.verdict == "NOT"
        wit = [c for l, c in zip(rep.labels, rep.crossing_counts) if "witness" in l]
        assert max(wit) >= 3

    def test_counts_are_odd(self, g3):
        # an arc from C_1 to C_2 crosses each essential simple loop an odd number of times
        rep = transversal_report(g3, radial_arc(2.2))
        assert all(c % 2 == 1 for c in rep.crossing_counts)

    def test_iterated_arc(self, h3, g3):
        arc = h3.image_of_curve(radial_arc(0.0), 5)
        assert transversal_report(g3, arc).verdict == "NOT"

    def test_arc_must_join_boundaries(self):
        half = CurveSample(np.array([[0.0, 1.0], [0.0, 1.5]]))
        with pytest.raises(ValueError):
            crossing_report([("c", round_circle(1.2, 8))], half)

    def test_sample_circles_labels(self, g3):
        labels = [l for l, _ in sample_circles(g3, 4)]
        assert sum("witness" in l for l in labels) == 3
        assert sum(l.startswith("gap") for l in labels) == 16
