"""Loss kernel: worked fixtures, boundedness/scale properties, gradient checks."""

import math

import numpy as np
import pytest

from affectkit.errors import (
    AllAnchorsSkipped,
    DimensionMismatch,
    EmptyInput,
    LengthMismatch,
    NonFiniteComponent,
    WeightOutOfRange,
    ZeroVector,
)
from affectkit.losses import (
    DEFAULT_WEIGHTS,
    LossWeights,
    diffusion_loss,
    diffusion_loss_grad,
    directional_alignment,
    directional_alignment_grad,
    effect_hinge,
    effect_hinge_grad,
    embedding_consistency,
    embedding_consistency_grad,
    injector_preservation,
    injector_preservation_grad,
    magnitude_reg,
    magnitude_reg_grad,
    pack_supervision,
    pairwise_alignment,
    pairwise_alignment_grad,
    perceptual_loss,
    perceptual_loss_grad,
    smooth_l1,
    supervised_contrast,
    supervised_contrast_grad,
    total_loss,
    vad_geometry,
    vad_geometry_grad,
)
from affectkit.metrics import circular_hue_distance, color_mae, vad_mae
from affectkit.schema import HsvSummary, VadVector

GRAD_POINTS = 100
STEP = 1e-5


def central_diff(f, x, step=STEP):
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        plus = x.copy()
        plus[idx] += step
        minus = x.copy()
        minus[idx] -= step
        grad[idx] = (f(plus) - f(minus)) / (2 * step)
        it.iternext()
    return grad


def assert_grad_close(analytic, numeric):
    np.testing.assert_allclose(analytic, numeric, rtol=1e-3, atol=1e-6)


# ------------------------------------------------------------------ packing

class TestPackSupervision:
    def test_midpoint_maps_to_zero(self):
        s = pack_supervision([0.5] * 3, [0.5] * 3)
        assert np.allclose(s, 0.0)

    def test_endpoint_maps_to_one(self):
        s = pack_supervision([1.0] * 3, [1.0] * 3)
        assert np.allclose(s, 1.0)

    def test_mixed_affine_values(self):
        s = pack_supervision([0.0, 1.0, 0.5], [0.25, 0.75, 1.0])
        assert np.allclose(s, [-1.0, 1.0, 0.0, -0.5, 0.5, 1.0])

    def test_range_bound_holds_for_any_valid_weights(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            w = LossWeights(w_vad=rng.uniform(0.05, 1.0), w_col=rng.uniform(0.05, 1.0))
            s = pack_supervision(rng.uniform(0, 1, 3), rng.uniform(0, 1, 3), w)
            assert np.all(s >= -1.0) and np.all(s <= 1.0)

    def test_weight_out_of_range(self):
        with pytest.raises(WeightOutOfRange):
            pack_supervision([0.5] * 3, [0.5] * 3, LossWeights(w_vad=1.5))


# -------------------------------------------------------------- hue distance

class TestCircularHueDistance:
    def test_wraparound(self):
        assert circular_hue_distance(0.1, 0.9) == pytest.approx(0.2, abs=1e-12)

    def test_identity(self):
        assert circular_hue_distance(0.37, 0.37) == 0.0

    def test_antipodal_maximum(self):
        assert circular_hue_distance(0.0, 0.5) == 0.5

    def test_symmetry_and_triangle_inequality(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            a, b, c = rng.uniform(0, 1, 3)
            assert circular_hue_distance(a, b) == circular_hue_distance(b, a)
            assert circular_hue_distance(a, b) <= 0.5
            assert (
                circular_hue_distance(a, c)
                <= circular_hue_distance(a, b) + circular_hue_distance(b, c) + 1e-12
            )


# ---------------------------------------------------------------- perceptual

class TestPerceptualLoss:
    def test_zero_at_target(self):
        assert perceptual_loss((0.3, 0.4, 0.5), (0.3, 0.4, 0.5)) == 0.0

    def test_gate_kills_hue_term_at_zero_saturation(self):
        assert perceptual_loss((0.9, 0.0, 0.5), (0.1, 0.0, 0.5)) == 0.0

    def test_worked_hue_fixture(self):
        got = perceptual_loss((0.9, 1.0, 1.0), (0.1, 1.0, 1.0))
        assert got == pytest.approx(0.16, abs=1e-12)


# -------------------------------------------------------------- vad/color mae

class TestMaeMetrics:
    def test_identical_lists_zero(self):
        vads = [VadVector(3, 4, 5), VadVector(9, 1, 7)]
        assert vad_mae(vads, vads) == (0.0, 0.0, 0.0)
        hsvs = [HsvSummary(10, 20, 30)]
        assert color_mae(hsvs, hsvs) == (0.0, 0.0, 0.0)

    def test_maximum_error_endpoint(self):
        ones = [VadVector(1, 1, 1)] * 3
        nines = [VadVector(9, 9, 9)] * 3
        assert vad_mae(ones, nines) == (8.0, 8.0, 8.0)

    def test_hand_summation_fixture(self):
        pred = [VadVector(v, 5, 5) for v in (1, 3, 5, 7, 9)]
        target = [VadVector(v, 5, 5) for v in (2, 3, 4, 9, 8)]
        mae_v, mae_a, mae_d = vad_mae(pred, target)
        assert mae_v == pytest.approx((1 + 0 + 1 + 2 + 1) / 5, abs=1e-12)
        assert mae_a == 0.0 and mae_d == 0.0

    def test_hue_wraparound(self):
        pred = [HsvSummary(359.0, 50.0, 50.0)]
        target = [HsvSummary(1.0, 50.0, 50.0)]
        mae_h, _, _ = color_mae(pred, target)
        assert mae_h == pytest.approx(2.0 / 360.0, abs=1e-12)

    def test_color_mae_four_pair_oracle(self):
        pred = [HsvSummary(10, 0, 100), HsvSummary(350, 50, 50), HsvSummary(180, 100, 0), HsvSummary(0, 25, 75)]
        target = [HsvSummary(20, 10, 90), HsvSummary(10, 60, 40), HsvSummary(0, 90, 10), HsvSummary(180, 20, 80)]
        mae_h, mae_s, mae_v = color_mae(pred, target)
        hues = [10 / 360, 20 / 360, 180 / 360, 180 / 360]
        assert mae_h == pytest.approx(sum(hues) / 4, abs=1e-12)
        assert mae_s == pytest.approx((0.1 + 0.1 + 0.1 + 0.05) / 4, abs=1e-12)
        assert mae_v == pytest.approx((0.1 + 0.1 + 0.1 + 0.05) / 4, abs=1e-12)

    def test_shared_permutation_invariance(self):
        rng = np.random.default_rng(2)
        pred = [VadVector(*rng.uniform(1, 9, 3)) for _ in range(10)]
        target = [VadVector(*rng.uniform(1, 9, 3)) for _ in range(10)]
        pred_hsv = [HsvSummary(rng.uniform(0, 359.9), rng.uniform(0, 100), rng.uniform(0, 100)) for _ in range(10)]
        target_hsv = [HsvSummary(rng.uniform(0, 359.9), rng.uniform(0, 100), rng.uniform(0, 100)) for _ in range(10)]
        perm = rng.permutation(10)
        assert vad_mae(pred, target) == pytest.approx(
            vad_mae([pred[i] for i in perm], [target[i] for i in perm]), abs=1e-12
        )
        assert color_mae(pred_hsv, target_hsv) == pytest.approx(
            color_mae([pred_hsv[i] for i in perm], [target_hsv[i] for i in perm]), abs=1e-12
        )

    def test_errors(self):
        with pytest.raises(LengthMismatch):
            vad_mae([VadVector(1, 1, 1)], [])
        with pytest.raises(EmptyInput):
            vad_mae([], [])


# -------------------------------------------------------------------- hinges

class TestEffectHinge:
    def test_zero_margin(self):
        assert effect_hinge([1.0, 2.0], [1.0, 2.0], 0.0) == 0.0

    def test_fully_active(self):
        assert effect_hinge([1.0, 2.0], [1.0, 2.0], 1.0) == 1.0

    def test_partial(self):
        assert effect_hinge([0.2, 0.2], [0.0, 0.0], 1.0) == pytest.approx(0.6, abs=1e-12)

    def test_continuity_at_margin(self):
        base = np.zeros(3)
        pred = np.array([0.3, 0.4, 0.3])  # L1 = 1.0
        eps = 1e-9
        below = effect_hinge(pred, base, 1.0 - eps)
        above = effect_hinge(pred, base, 1.0 + eps)
        assert below == 0.0 and above == pytest.approx(eps, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            effect_hinge([1.0], [1.0, 2.0], 0.5)


class TestEmbeddingConsistency:
    def test_identical(self):
        assert embedding_consistency([1.0, 2.0], [1.0, 2.0]) == pytest.approx(0.0, abs=1e-12)

    def test_opposite(self):
        assert embedding_consistency([1.0, 0.0], [-1.0, 0.0]) == pytest.approx(2.0, abs=1e-12)

    def test_orthogonal(self):
        assert embedding_consistency([1.0, 0.0], [0.0, 3.0]) == pytest.approx(1.0, abs=1e-12)

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            embedding_consistency([0.0, 0.0], [1.0, 0.0])


# ------------------------------------------------------------------ pairwise

class TestPairwiseAlignment:
    def test_identical_distance_matrices(self):
        rng = np.random.default_rng(3)
        base = rng.normal(size=(5, 6))
        assert pairwise_alignment(base, base) == pytest.approx(0.0, abs=1e-12)

    def test_linear_branch_fixture(self):
        deltas = np.array([[0.0], [3.0]])
        sups = np.array([[0.0] * 6, [1.0, 0, 0, 0, 0, 0]])
        assert pairwise_alignment(deltas, sups, beta=1.0) == pytest.approx(1.5, abs=1e-12)

    def test_quadratic_branch_fixture(self):
        deltas = np.array([[0.0], [1.5]])
        sups = np.array([[0.0] * 6, [1.0, 0, 0, 0, 0, 0]])
        assert pairwise_alignment(deltas, sups, beta=1.0) == pytest.approx(0.125, abs=1e-12)

    def test_smooth_l1_continuity_at_beta(self):
        beta = 1.0
        eps = 1e-9
        assert smooth_l1(beta - eps, beta) == pytest.approx(smooth_l1(beta + eps, beta), abs=1e-8)

    def test_sampling_is_seeded_and_capped(self):
        rng = np.random.default_rng(4)
        deltas = rng.normal(size=(40, 3))
        sups = rng.normal(size=(40, 6))
        a = pairwise_alignment(deltas, sups, sample_limit=10, seed=7)
        b = pairwise_alignment(deltas, sups, sample_limit=10, seed=7)
        c = pairwise_alignment(deltas, sups, sample_limit=10, seed=8)
        assert a == b
        assert a != c  # different sampled pair set

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            pairwise_alignment(np.zeros((3, 2)), np.zeros((4, 6)))

    def test_large_batch_rejection_sampling_path(self):
        # n(n-1)/2 > 5e6 forces the set-based sampler; must stay seeded.
        rng = np.random.default_rng(10)
        n = 3300
        deltas = rng.normal(size=(n, 2))
        sups = rng.normal(size=(n, 6))
        a = pairwise_alignment(deltas, sups, sample_limit=10, seed=3)
        b = pairwise_alignment(deltas, sups, sample_limit=10, seed=3)
        assert a == b and np.isfinite(a)


class TestDirectionalAlignment:
    def test_parallel(self):
        s = np.array([1.0, 0, 0, 0, 0, 0])
        delta = np.array([2.0, 0, 0, 0, 0, 0])
        assert directional_alignment(delta, s) == pytest.approx(0.0, abs=1e-12)

    def test_antiparallel(self):
        s = np.array([1.0, 0, 0, 0, 0, 0])
        delta = np.array([-5.0, 0, 0, 0, 0, 0])
        assert directional_alignment(delta, s) == pytest.approx(2.0, abs=1e-12)

    def test_fixed_pair_matches_dot_product_oracle(self):
        delta = np.array([0.3, -1.2, 0.8, 2.0, -0.5, 0.1])
        s = np.array([1.0, 0.5, -0.25, 0.75, -1.0, 0.4])
        expected = 1.0 - float(np.dot(delta, s) / (np.linalg.norm(delta) * np.linalg.norm(s)))
        assert directional_alignment(delta, s) == pytest.approx(expected, abs=1e-12)

    def test_zero_padding_projection(self):
        delta = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0])
        s = np.array([1.0, 0, 0, 0, 0, 0])
        # s zero-pads to 8 dims; cosine with delta uses only the first entry.
        expected = 1.0 - 1.0 / np.linalg.norm(delta)
        assert directional_alignment(delta, s) == pytest.approx(expected, abs=1e-12)

    def test_projection_matrix(self):
        proj = np.zeros((4, 6))
        proj[0, 0] = 1.0
        delta = np.array([3.0, 0, 0, 0])
        s = np.array([0.5, 0, 0, 0, 0, 0])
        assert directional_alignment(delta, s, projection=proj) == pytest.approx(0.0, abs=1e-12)

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            directional_alignment(np.zeros(6), np.ones(6))


# -------------------------------------------------------------------- supcon

def supcon_oracle(deltas, mask, temperature):
    """Explicit per-anchor softmax enumeration."""
    z = [np.asarray(d) / np.linalg.norm(d) for d in deltas]
    n = len(z)
    anchors = [i for i in range(n) if any(mask[i][j] for j in range(n))]
    total = 0.0
    for i in anchors:
        denom = sum(math.exp(float(np.dot(z[i], z[a])) / temperature) for a in range(n) if a != i)
        positives = [j for j in range(n) if mask[i][j]]
        term = 0.0
        for p in positives:
            term += -math.log(math.exp(float(np.dot(z[i], z[p])) / temperature) / denom)
        total += term / len(positives)
    return total / len(anchors)


class TestSupervisedContrast:
    def test_identical_positive_pair_zero(self):
        deltas = np.array([[1.0, 1.0], [1.0, 1.0]])
        mask = np.array([[False, True], [True, False]])
        assert supervised_contrast(deltas, mask) == pytest.approx(0.0, abs=1e-12)

    def test_four_batch_matches_enumeration_oracle(self):
        rng = np.random.default_rng(5)
        deltas = rng.normal(size=(4, 3))
        mask = np.array(
            [
                [False, True, False, True],
                [True, False, False, False],
                [False, False, False, True],
                [True, False, True, False],
            ]
        )
        got = supervised_contrast(deltas, mask, temperature=0.07)
        expected = supcon_oracle(deltas, mask, 0.07)
        assert got == pytest.approx(expected, abs=1e-9)

    def test_scale_invariance(self):
        rng = np.random.default_rng(6)
        deltas = rng.normal(size=(5, 4))
        mask = np.zeros((5, 5), dtype=bool)
        mask[0, 1] = mask[1, 0] = mask[2, 3] = mask[3, 2] = True
        a = supervised_contrast(deltas, mask)
        b = supervised_contrast(2.0 * deltas, mask)
        assert a == pytest.approx(b, abs=1e-12)

    def test_all_anchors_skipped(self):
        with pytest.raises(AllAnchorsSkipped):
            supervised_contrast(np.ones((3, 2)), np.zeros((3, 3), dtype=bool))

    def test_mask_validation(self):
        deltas = np.ones((2, 2))
        bad_diag = np.array([[True, True], [True, False]])
        with pytest.raises(ValueError):
            supervised_contrast(deltas, bad_diag)
        asym = np.array([[False, True], [False, False]])
        with pytest.raises(ValueError):
            supervised_contrast(deltas, asym)


# ------------------------------------------------------------------ geometry

class TestVadGeometry:
    def test_identical_single_pair(self):
        deltas = np.array([[1.0, 0.5], [1.0, 0.5]])
        us = np.array([[0.5, 0.5, 0.5], [0.5, 0.5, 0.5]])
        terms = vad_geometry(deltas, us)
        assert terms["align"] == pytest.approx(0.0, abs=1e-12)
        assert terms["same"] == pytest.approx(0.0, abs=1e-12)
        assert terms["pull"] == pytest.approx(0.0, abs=1e-12)

    def test_du_endpoint_normalization(self):
        deltas = np.array([[1.0, 0.0], [0.0, 1.0]])
        us = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
        # d_u = sqrt(3)/sqrt(3) = 1; d_cos for orthogonal unit deltas = 0.5.
        terms = vad_geometry(deltas, us)
        assert terms["align"] == pytest.approx((0.5 - 1.0) ** 2, abs=1e-12)

    def test_antiparallel_saturates_both_metrics(self):
        deltas = np.array([[1.0, 0.0], [-1.0, 0.0]])
        us = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
        terms = vad_geometry(deltas, us)
        assert terms["align"] == pytest.approx(0.0, abs=1e-12)

    def test_metric_bounds_hold_everywhere(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            n = int(rng.integers(2, 7))
            deltas = rng.normal(size=(n, 4))
            us = rng.uniform(0, 1, size=(n, 3))
            terms = vad_geometry(deltas, us)
            assert 0.0 <= terms["align"] <= 1.0
            assert terms["push"] >= 0.0 and terms["pull"] >= 0.0 and terms["same"] >= 0.0

    def test_empty_same_set_returns_zero(self):
        deltas = np.array([[1.0, 0.0], [0.5, 1.0]])
        us = np.array([[0.0, 0.0, 0.0], [1.0, 0.5, 0.25]])
        assert vad_geometry(deltas, us)["same"] == 0.0

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVector):
            vad_geometry(np.array([[0.0, 0.0], [1.0, 0.0]]), np.zeros((2, 3)))


class TestMagnitudeAndInjector:
    def test_on_target_radius(self):
        assert magnitude_reg([3.0, 4.0], 5.0) == pytest.approx(0.0, abs=1e-12)

    def test_near_zero_delta_approaches_r0_squared(self):
        assert magnitude_reg([1e-12, 0.0], 1.0) == pytest.approx(1.0, abs=1e-9)

    def test_identity_injector_zero(self):
        rng = np.random.default_rng(8)
        a = rng.normal(size=(6, 4))
        b = rng.normal(size=(6, 4))
        assert injector_preservation((a, b), (a, b)) == pytest.approx(0.0, abs=1e-12)

    def test_cosine_mse_fixture(self):
        a = np.array([[1.0, 0.0]])
        b = np.array([[0.0, 1.0]])
        ia = np.array([[1.0, 0.0]])
        ib = np.array([[1.0, 0.0]])
        # cos pre = 0, cos post = 1 -> MSE 1.
        assert injector_preservation((a, b), (ia, ib)) == pytest.approx(1.0, abs=1e-12)


class TestTotalLoss:
    def test_all_zero(self):
        total, breakdown = total_loss({})
        assert total == 0.0 and breakdown["total"] == 0.0

    def test_single_active_term(self):
        total, _ = total_loss({"diff": 1.0})
        assert total == 1.0

    def test_additivity_over_fixture_bundle(self):
        rng = np.random.default_rng(9)
        components = {k: float(rng.uniform(0, 2)) for k in (
            "diff", "img", "effect", "pair", "dir", "supcon",
            "vad_align", "push", "pull", "same", "perc", "mag", "inj",
        )}
        w = LossWeights(
            lambda_img=0.5, lambda_eff=2.0, lambda_pair=0.1, lambda_dir=0.2,
            lambda_con=0.3, alpha=1.5, beta=0.25, gamma=0.75, eta=1.25,
            lambda_mag=0.01, lambda_inj=0.02,
        )
        total, breakdown = total_loss(components, w)
        expected = (
            components["diff"] + 0.5 * components["img"] + 2.0 * components["effect"]
            + 0.1 * components["pair"] + 0.2 * components["dir"] + 0.3 * components["supcon"]
            + 1.5 * components["vad_align"] + 0.25 * components["push"]
            + 0.75 * components["pull"] + 1.25 * components["same"]
            + components["perc"] + 0.01 * components["mag"] + 0.02 * components["inj"]
        )
        assert total == pytest.approx(expected, abs=1e-12)
        assert breakdown["gen"] + breakdown["align"] + breakdown["aff"] + breakdown[
            "perc_group"
        ] + breakdown["reg"] == pytest.approx(total, abs=1e-12)

    def test_non_finite_component(self):
        with pytest.raises(NonFiniteComponent):
            total_loss({"diff": float("nan")})


# ------------------------------------------------------------ gradient checks

class TestGradients:
    """Analytic gradients against central finite differences at seeded
    differentiable points (step 1e-5, rel tol 1e-3)."""

    def test_diffusion(self):
        rng = np.random.default_rng(100)
        for _ in range(GRAD_POINTS):
            pred = rng.normal(size=6)
            noise = rng.normal(size=6)
            analytic = diffusion_loss_grad(pred, noise)
            numeric = central_diff(lambda p: diffusion_loss(p, noise), pred)
            assert_grad_close(analytic, numeric)

    def test_embedding_consistency(self):
        rng = np.random.default_rng(101)
        for _ in range(GRAD_POINTS):
            e1 = rng.normal(size=5)
            e2 = rng.normal(size=5)
            if np.linalg.norm(e1) < 0.3 or np.linalg.norm(e2) < 0.3:
                continue
            analytic = embedding_consistency_grad(e1, e2)
            numeric = central_diff(lambda p: embedding_consistency(p, e2), e1)
            assert_grad_close(analytic, numeric)

    def test_effect_hinge(self):
        rng = np.random.default_rng(102)
        checked = 0
        while checked < GRAD_POINTS:
            pred = rng.normal(size=4)
            base = rng.normal(size=4)
            l1 = float(np.sum(np.abs(pred - base)))
            margin = l1 + rng.uniform(-1.0, 1.0)
            if margin < 0 or abs(margin - l1) < 1e-3 or np.min(np.abs(pred - base)) < 1e-3:
                continue
            analytic = effect_hinge_grad(pred, base, margin)
            numeric = central_diff(lambda p: effect_hinge(p, base, margin), pred)
            assert_grad_close(analytic, numeric)
            checked += 1

    def test_pairwise_alignment(self):
        rng = np.random.default_rng(103)
        checked = 0
        while checked < GRAD_POINTS:
            deltas = rng.normal(size=(5, 4))
            sups = rng.normal(size=(5, 6))
            ii, jj = np.triu_indices(5, k=1)
            dd = np.linalg.norm(deltas[ii] - deltas[jj], axis=1)
            ds = np.linalg.norm(sups[ii] - sups[jj], axis=1)
            if np.min(dd) < 1e-2 or np.min(np.abs(np.abs(dd - ds) - 1.0)) < 1e-3:
                continue
            analytic = pairwise_alignment_grad(deltas, sups)
            numeric = central_diff(lambda d: pairwise_alignment(d.reshape(5, 4), sups), deltas.ravel()).reshape(5, 4)
            assert_grad_close(analytic, numeric)
            checked += 1

    def test_directional_alignment(self):
        rng = np.random.default_rng(104)
        for _ in range(GRAD_POINTS):
            delta = rng.normal(size=6)
            s = rng.normal(size=6)
            if np.linalg.norm(delta) < 0.3 or np.linalg.norm(s) < 0.3:
                continue
            analytic = directional_alignment_grad(delta, s)
            numeric = central_diff(lambda d: directional_alignment(d, s), delta)
            assert_grad_close(analytic, numeric)

    def test_supervised_contrast(self):
        rng = np.random.default_rng(105)
        mask = np.zeros((5, 5), dtype=bool)
        mask[0, 1] = mask[1, 0] = True
        mask[2, 3] = mask[3, 2] = True
        mask[0, 4] = mask[4, 0] = True
        for _ in range(GRAD_POINTS):
            deltas = rng.normal(size=(5, 4))
            if np.min(np.linalg.norm(deltas, axis=1)) < 0.3:
                continue
            analytic = supervised_contrast_grad(deltas, mask)
            numeric = central_diff(
                lambda d: supervised_contrast(d.reshape(5, 4), mask), deltas.ravel()
            ).reshape(5, 4)
            assert_grad_close(analytic, numeric)

    def test_vad_geometry(self):
        rng = np.random.default_rng(106)
        weights = LossWeights(top_k=4)
        checked = 0
        while checked < GRAD_POINTS:
            n = 6
            deltas = rng.normal(size=(n, 4))
            us = rng.uniform(0, 1, size=(n, 3))
            if rng.random() < 0.3:
                us[1] = us[0]  # exercise the same-VAD set
            norms = np.linalg.norm(deltas, axis=1)
            if np.min(norms) < 0.3:
                continue
            z = deltas / norms[:, None]
            ii, jj = np.triu_indices(n, k=1)
            d_cos = (1.0 - np.sum(z[ii] * z[jj], axis=1)) / 2.0
            if np.min(np.abs(d_cos - weights.m_far)) < 1e-3:
                continue
            if np.min(np.abs(d_cos - weights.m_near)) < 1e-3:
                continue
            analytic = vad_geometry_grad(deltas, us, weights)
            for term in ("align", "push", "pull", "same"):
                numeric = central_diff(
                    lambda d, t=term: vad_geometry(d.reshape(n, 4), us, weights)[t],
                    deltas.ravel(),
                ).reshape(n, 4)
                assert_grad_close(analytic[term], numeric)
            checked += 1

    def test_magnitude_reg(self):
        rng = np.random.default_rng(107)
        for _ in range(GRAD_POINTS):
            delta = rng.normal(size=5)
            if np.linalg.norm(delta) < 0.3:
                continue
            analytic = magnitude_reg_grad(delta, 1.0)
            numeric = central_diff(lambda d: magnitude_reg(d, 1.0), delta)
            assert_grad_close(analytic, numeric)

    def test_injector_preservation(self):
        rng = np.random.default_rng(108)
        for _ in range(GRAD_POINTS):
            a = rng.normal(size=(3, 4))
            b = rng.normal(size=(3, 4))
            ia = rng.normal(size=(3, 2))
            ib = rng.normal(size=(3, 2))
            if min(
                np.min(np.linalg.norm(a, axis=1)),
                np.min(np.linalg.norm(b, axis=1)),
                np.min(np.linalg.norm(ia, axis=1)),
                np.min(np.linalg.norm(ib, axis=1)),
            ) < 0.3:
                continue
            ga, gb = injector_preservation_grad((a, b), (ia, ib))
            numeric_a = central_diff(
                lambda x: injector_preservation((x.reshape(3, 4), b), (ia, ib)), a.ravel()
            ).reshape(3, 4)
            numeric_b = central_diff(
                lambda x: injector_preservation((a, x.reshape(3, 4)), (ia, ib)), b.ravel()
            ).reshape(3, 4)
            assert_grad_close(ga, numeric_a)
            assert_grad_close(gb, numeric_b)

    def test_perceptual_loss(self):
        rng = np.random.default_rng(109)
        checked = 0
        while checked < GRAD_POINTS:
            pred = rng.uniform(0.05, 0.95, size=3)
            target = rng.uniform(0.05, 0.95, size=3)
            pred[1] = rng.uniform(0.2, 0.95)
            target[1] = rng.uniform(0.2, 0.95)
            e = abs(target[0] - pred[0])
            if e < 0.02 or abs(e - 0.5) < 0.02:
                continue
            analytic = perceptual_loss_grad(pred, target)
            numeric = central_diff(lambda p: perceptual_loss(p, target), pred)
            assert_grad_close(analytic, numeric)
            checked += 1
