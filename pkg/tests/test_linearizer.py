import numpy as np
import pytest
from hypothesis import given, strategies as st

from distal_annulus.annulus_core import CurveSample, count_crossings, radial_arc
from distal_annulus.distal_example import Alpha
from distal_annulus.dynamics import orbit, rigid_rotation, rotation_number, transversal_report
from distal_annulus.linearizer import (
    LinearizationGapError,
    MonotonicityError,
    NotTransversalError,
    Transversal,
    _twist_inverse,
    build_linearization,
    circle_conjugacy,
    consistency_check,
    conjugacy_residual,
    psi_injective,
    section_images,
    synthetic_linearizable,
)

ALPHA = Alpha.parse("golden").value


@pytest.fixture(scope="module")
def synth():
    return synthetic_linearizable(ALPHA, 0.3)


@pytest.fixture(scope="module")
def table(synth):
    f, gamma = synth
    return build_linearization(f, gamma, ALPHA, 2000, (32, 64))


class TestSynthetic:
    def test_amplitude_zero_is_rotation(self):
        f, gamma = synthetic_linearizable(ALPHA, 0.0)
        x = np.linspace(0, 1, 20)
        X, _ = f.forward(x, np.full(20, 1.4))
        assert np.allclose(X, x + ALPHA, atol=1e-15)
        assert np.allclose(gamma.curve.x, 0.0)

    def test_rejects_large_twist(self):
        with pytest.raises(ValueError):
            synthetic_linearizable(ALPHA, 1.0)

    @given(st.floats(0, 1), st.floats(1, 2), st.floats(0, 0.95))
    def test_twist_inverse(self, x, y, a):
        u = _twist_inverse(np.array([x]), np.array([y]), a)
        assert abs(u + a * (y - 1) / (2 * np.pi) * np.sin(2 * np.pi * u) - x)[0] < 1e-13

    @pytest.mark.parametrize("r", [1.0, 1.3, 1.77, 2.0])
    def test_rotation_number_on_circles(self, synth, r):
        f, _ = synth
        assert abs(rotation_number(f, (0.2, r), 10_000) - ALPHA) <= 1e-4

    def test_transversal_passes(self, synth):
        f, gamma = synth
        rep = transversal_report(f, gamma.curve, 16)
        assert rep.verdict == "TRANSVERSAL"

    def test_sections_disjoint(self, synth):
        f, gamma = synth
        secs = section_images(f, gamma, 3)
        for i in range(len(secs)):
            for j in range(i + 1, len(secs)):
                assert count_crossings(secs[i], secs[j]) == 0
        for s in secs:
            assert transversal_report(f, s, 8).verdict == "TRANSVERSAL"


class TestTables:
    def test_normalization(self, table):
        psi, r = table.psi_xy(table.base_x, table.labels)
        assert np.allclose(np.minimum(psi, 1 - psi), 0.0, atol=1e-12)
        assert np.array_equal(r, table.labels)

    def test_injective(self, table):
        assert psi_injective(table)

    def test_against_true_conjugacy(self, table):
        y = np.repeat(table.labels, 8)
        x = np.tile(np.linspace(0, 1, 8, endpoint=False) + 0.03, len(table.labels))
        psi, _ = table.psi_xy(x, y)
        truth = np.mod(_twist_inverse(x, y, 0.3), 1.0)
        err = np.abs(np.mod(psi - truth + 0.5, 1) - 0.5)
        assert err.max() <= table.worst_target_gap

    def test_residual_small(self, table, synth):
        f, _ = synth
        assert table.residual < 1e-2
        assert conjugacy_residual(table, f, ALPHA, 256, rng_seed=3) < 1e-2

    def test_residual_decreases(self, synth):
        f, gamma = synth
        res = [build_linearization(f, gamma, ALPHA, n, (16, 16), residual_samples=1024).residual
               for n in (100, 1000, 10_000)]
        assert res[0] > res[1] > res[2]

    def test_consistency(self, synth):
        f, gamma = synth
        out = consistency_check(f, gamma, ALPHA, 2000, (16, 32))
        assert out["passed"] and out["max_diff"] <= out["bound"]

    def test_rational_theta_is_periodic(self):
        f = rigid_rotation(0.25)
        with pytest.raises(MonotonicityError):
            circle_conjugacy(f, 1.5, 0.0, 0.25, 100)

    def test_wrong_theta_detected(self, synth):
        f, _ = synth
        with pytest.raises(MonotonicityError):
            circle_conjugacy(f, 1.5, 0.0, 0.4, 500)

    def test_gap_limit(self, synth):
        f, gamma = synth
        with pytest.raises(LinearizationGapError):
            build_linearization(f, gamma, ALPHA, 100, (8, 512))

    def test_folded_arc_fails_precheck(self, synth):
        f, _ = synth
        zig = CurveSample(np.array([[0.0, 1.0], [0.05, 1.6], [0.1, 1.4], [0.15, 2.0]]))
        with pytest.raises(ValueError):
            Transversal(zig)   # not a graph over the radius
        with pytest.raises(NotTransversalError):
            build_linearization(f, _ZigTransversal(zig), ALPHA, 200)


class _ZigTransversal:
    """Duck-typed arc that skips the monotone-radius check, to exercise the precheck."""

    def __init__(self, curve):
        self.curve = curve

    def point_at(self, labels):
        return np.zeros_like(labels)


def test_amplitude_zero_residual():
    f, gamma = synthetic_linearizable(ALPHA, 0.0)
    assert build_linearization(f, gamma, ALPHA, 1000).residual < 1e-12
