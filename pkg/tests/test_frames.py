import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resilient_cdc.errors import DegenerateFrameError, NumericalError
from resilient_cdc.frames import (
    FrameVectorSet,
    expected_mismatch,
    fp_r_gradient,
    frame_operator,
    frame_potential,
    minimize_fp_r,
    mismatch_samples,
    modified_frame_potential,
    tightness_bounds,
)

MERCEDES = FrameVectorSet.from_vectors(
    [[np.cos(a), np.sin(a)] for a in np.deg2rad([90.0, 210.0, 330.0])]
)
BASIS = FrameVectorSet.from_vectors(np.eye(2))


def random_unit_frame(n, d, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, d))
    return FrameVectorSet.from_vectors(v / np.linalg.norm(v, axis=1, keepdims=True))


def fd_gradient(frame, h=1e-6, **kw):
    v = frame.vectors.copy()
    g = np.zeros_like(v)
    for a in range(v.shape[0]):
        for k in range(v.shape[1]):
            vp, vm = v.copy(), v.copy()
            vp[a, k] += h
            vm[a, k] -= h
            g[a, k] = (
                modified_frame_potential(frame.with_vectors(vp), **kw)
                - modified_frame_potential(frame.with_vectors(vm), **kw)
            ) / (2 * h)
    return g


class TestFrameVectorSet:
    def test_vectors_are_read_only(self):
        with pytest.raises(ValueError):
            BASIS.vectors[0, 0] = 3.0

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError):
            FrameVectorSet(np.eye(2), (0, 0), (1, 1))

    def test_dims(self):
        assert MERCEDES.n == 3 and MERCEDES.dim == 2


class TestFrameOperator:
    def test_basis_gives_identity(self):
        np.testing.assert_allclose(frame_operator(BASIS), np.eye(2))

    def test_mercedes(self):
        np.testing.assert_allclose(frame_operator(MERCEDES), 1.5 * np.eye(2), atol=1e-12)

    def test_rank_one(self):
        f = FrameVectorSet.from_vectors([[1.0, 0.0]])
        np.testing.assert_allclose(frame_operator(f), [[1, 0], [0, 0]])

    def test_empty(self):
        with pytest.raises(ValueError, match="empty frame"):
            frame_operator(FrameVectorSet(np.zeros((0, 2)), (), ()))


class TestTightness:
    def test_basis(self):
        r = tightness_bounds(BASIS)
        assert r.lower_A == pytest.approx(1) and r.upper_B == pytest.approx(1)
        assert r.is_tight and r.is_normalized

    def test_mercedes(self):
        r = tightness_bounds(MERCEDES)
        assert r.lower_A == pytest.approx(1.5) and r.upper_B == pytest.approx(1.5)
        assert r.is_tight and r.is_normalized

    def test_repeated_vector_not_tight(self):
        r = tightness_bounds(FrameVectorSet.from_vectors([[1.0, 0.0], [1.0, 0.0]]))
        assert r.lower_A == pytest.approx(0, abs=1e-12)
        assert r.upper_B == pytest.approx(2)
        assert not r.is_tight


class TestPotentials:
    def test_basis(self):
        assert frame_potential(BASIS) == pytest.approx(2)
        assert modified_frame_potential(BASIS) == pytest.approx(2)

    def test_mercedes(self):
        assert frame_potential(MERCEDES) == pytest.approx(4.5)
        assert modified_frame_potential(MERCEDES) == pytest.approx(4.5)

    def test_mercedes_same_for_both_norm_powers(self):
        assert frame_potential(MERCEDES, norm_power=1) == pytest.approx(4.5)

    def test_hand_example_first_power_denominator(self):
        f = FrameVectorSet.from_vectors([[2.0, 0.0], [0.0, 1.0]])
        assert modified_frame_potential(f, norm_power=1) == pytest.approx(14)

    def test_hand_example_squared_denominator(self):
        f = FrameVectorSet.from_vectors([[2.0, 0.0], [0.0, 1.0]])
        assert modified_frame_potential(f) == pytest.approx(1 + 1 + 9)

    def test_zero_vector_is_degenerate(self):
        f = FrameVectorSet((np.array([[1.0, 0.0], [0.0, 0.0]])), (0, 0), (0, 1))
        with pytest.raises(DegenerateFrameError) as info:
            frame_potential(f)
        assert "(0, 1)" in str(info.value)

    def test_regularization_avoids_error(self):
        f = FrameVectorSet.from_vectors([[1.0, 0.0], [0.0, 0.0]])
        assert np.isfinite(modified_frame_potential(f, eps=1e-9))

    def test_twelve_optimized_vectors(self):
        out = minimize_fp_r(random_unit_frame(12, 2, 3), tol=1e-9)
        assert frame_potential(out) == pytest.approx(72, abs=1e-6)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0, 2 * np.pi))
    def test_rotation_invariance(self, seed, angle):
        rng = np.random.default_rng(seed)
        v = rng.normal(size=(5, 2))
        c, s = np.cos(angle), np.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        f = FrameVectorSet.from_vectors(v)
        g = FrameVectorSet.from_vectors(v @ rot.T)
        assert frame_potential(g) == pytest.approx(frame_potential(f), rel=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.integers(2, 8), st.integers(2, 4))
    def test_lower_bound(self, seed, n, d):
        # FP of unit vectors is at least max(n, n^2/d)
        f = random_unit_frame(n, d, seed)
        assert frame_potential(f) >= max(n, n * n / d) - 1e-9


class TestGradient:
    def test_vanishes_at_fntf(self):
        assert np.abs(fp_r_gradient(MERCEDES)).max() < 1e-10
        assert np.abs(fp_r_gradient(BASIS)).max() < 1e-10

    @pytest.mark.parametrize("norm_power", [1, 2])
    def test_matches_finite_differences(self, norm_power):
        rng = np.random.default_rng(4)
        f = FrameVectorSet.from_vectors(rng.normal(size=(4, 2)))
        g = fp_r_gradient(f, norm_power=norm_power)
        fd = fd_gradient(f, norm_power=norm_power)
        assert np.abs(g - fd).max() / np.abs(fd).max() < 1e-5


class TestMinimize:
    def test_twelve_in_plane(self):
        out = minimize_fp_r(random_unit_frame(12, 2, 0))
        assert modified_frame_potential(out) == pytest.approx(72, abs=1e-4)
        r = tightness_bounds(out, tol=1e-4)
        assert r.lower_A == pytest.approx(6, abs=1e-4) and r.upper_B == pytest.approx(6, abs=1e-4)

    def test_starting_at_minimum(self):
        out, iters = minimize_fp_r(MERCEDES, return_iterations=True)
        assert iters == 0
        np.testing.assert_allclose(out.vectors, MERCEDES.vectors)

    def test_orthonormal_in_three_dims(self):
        out = minimize_fp_r(FrameVectorSet.from_vectors(np.eye(3)))
        assert modified_frame_potential(out) == pytest.approx(3)

    def test_keeps_labels(self):
        f = random_unit_frame(4, 2, 1)
        out = minimize_fp_r(f)
        assert out.owners == f.owners and out.columns == f.columns

    def test_non_finite_start(self):
        f = FrameVectorSet.from_vectors([[np.nan, 0.0], [0.0, 1.0]])
        with pytest.raises((NumericalError, ValueError)):
            minimize_fp_r(f)


class TestMismatch:
    def test_basis_exact(self):
        s = mismatch_samples(np.eye(2), 1000, seed=0)
        np.testing.assert_allclose(s, 1.0, atol=1e-12)

    def test_mercedes(self):
        assert expected_mismatch(MERCEDES.vectors, 100_000, seed=0) == pytest.approx(1.5, rel=0.02)

    def test_single_vector(self):
        assert expected_mismatch([[1.0, 0.0]], 100_000, seed=0) == pytest.approx(0.5, abs=0.02)

    def test_seeded(self):
        a = mismatch_samples([[1.0, 0.3]], 100, seed=5)
        b = mismatch_samples([[1.0, 0.3]], 100, seed=5)
        np.testing.assert_array_equal(a, b)
