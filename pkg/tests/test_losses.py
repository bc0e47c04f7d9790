"""Objective terms: frozen-value checks, identities, and gradient oracles."""

import numpy as np
import pytest
from helpers import fd_grad, rel_err

from fedzge.errors import ShapeError
from fedzge.losses import (
    EnsembleWeights,
    LossWeights,
    adversarial_loss,
    aux_distill_loss,
    class_frequency,
    diversity_grad,
    diversity_loss,
    ensemble,
    fidelity_loss,
    full_mask,
    generator_loss,
    global_distill_loss,
    info_entropy_grad,
    info_entropy_loss,
    local_distill_loss,
)

TOL = 1e-5


def rng(seed=0):
    return np.random.default_rng(seed)


class TestEnsembleWeights:
    def test_from_counts(self):
        w = EnsembleWeights.from_counts([30, 10])
        assert np.allclose(w.values, [0.75, 0.25])

    def test_rejects_bad_sum(self):
        with pytest.raises(ShapeError):
            EnsembleWeights(np.array([0.5, 0.6]))

    def test_rejects_negative(self):
        with pytest.raises(ShapeError):
            EnsembleWeights(np.array([1.5, -0.5]))


class TestEnsemble:
    def test_identical_logits_fixed_point(self):
        logits = rng(1).standard_normal((4, 3))
        w = EnsembleWeights.from_counts([1, 2, 3])
        out = ensemble([logits, logits, logits], w)
        assert np.allclose(out, logits, atol=1e-12)

    def test_degenerate_weight(self):
        a = rng(2).standard_normal((4, 3))
        b = rng(3).standard_normal((4, 3))
        out = ensemble([a, b], EnsembleWeights(np.array([1.0, 0.0])))
        assert np.array_equal(out, a)

    def test_weighted_mean_value(self):
        a = np.zeros((2, 2))
        b = np.full((2, 2), 4.0)
        out = ensemble([a, b], EnsembleWeights(np.array([0.25, 0.75])))
        assert np.allclose(out, 3.0)

    def test_count_mismatch(self):
        with pytest.raises(ShapeError):
            ensemble([np.zeros((2, 2))], EnsembleWeights(np.array([0.5, 0.5])))

    def test_permutation_equivariance(self):
        batches = [rng(i).standard_normal((3, 4)) for i in range(3)]
        w = EnsembleWeights.from_counts([5, 2, 3])
        out = ensemble(batches, w)
        perm = [2, 0, 1]
        out_p = ensemble([batches[i] for i in perm],
                         EnsembleWeights(w.values[perm]))
        assert np.allclose(out, out_p, atol=1e-12)


class TestFidelity:
    def test_peaked_at_label_is_zero(self):
        logits = np.zeros((3, 4))
        logits[:, 0] = 50.0
        assert fidelity_loss(logits, np.ones(3, dtype=int)) <= 1e-12

    def test_zero_logits(self):
        assert abs(fidelity_loss(np.zeros((2, 10)), np.array([1, 5])) - np.log(10)) <= 1e-12

    def test_known_value(self):
        assert abs(fidelity_loss(np.array([[1.0, 0.0]]), np.array([1]))
                   - 0.31326168751822286) <= 1e-12


class TestDistillLosses:
    def test_equal_distributions_zero(self):
        logits = rng(4).standard_normal((3, 5))
        assert global_distill_loss(logits, logits.copy(), 5.0) == 0.0
        assert local_distill_loss(logits, logits.copy(), 5.0) == 0.0
        assert aux_distill_loss(logits, logits.copy(), 5.0) == 0.0

    def test_rowwise_shift_invariance(self):
        ens = rng(5).standard_normal((4, 3))
        glob = rng(6).standard_normal((4, 3))
        shift = rng(7).standard_normal((4, 1))
        a = global_distill_loss(ens, glob, 5.0)
        b = global_distill_loss(ens + shift, glob + shift, 5.0)
        assert abs(a - b) <= 1e-12

    def test_known_value(self):
        ens = np.array([[1.0, 0.0]])
        glob = np.array([[0.0, 1.0]])
        val = global_distill_loss(ens, glob, 1.0)
        assert abs(val - 0.4621171572600098) <= 1e-12
        assert abs(adversarial_loss(ens, glob, 1.0) + 0.4621171572600098) <= 1e-12

    def test_adversarial_is_exact_negation(self):
        for seed in range(5):
            ens = rng(seed).standard_normal((6, 4))
            glob = rng(seed + 50).standard_normal((6, 4))
            assert adversarial_loss(ens, glob, 5.0) == -global_distill_loss(ens, glob, 5.0)

    def test_local_matches_global_form(self):
        ens = rng(8).standard_normal((4, 3))
        student = rng(9).standard_normal((4, 3))
        assert local_distill_loss(ens, student, 5.0) == global_distill_loss(ens, student, 5.0)


class TestDiversity:
    def test_identical_rows_give_one(self):
        x = np.tile(rng(10).standard_normal((1, 4)), (5, 1))
        z = rng(11).standard_normal((5, 3))
        assert diversity_loss(x, z) == 1.0

    def test_two_pair_closed_form(self):
        x = np.array([[0.0, 0.0], [2.0, 0.0]])
        z = np.array([[0.0], [1.0]])
        # exponent: 2 off-diagonal pairs, each -(2*1), over B^2=4
        assert abs(diversity_loss(x, z) - np.exp(-1.0)) <= 1e-12
        assert abs(diversity_loss(x, z) - 0.36787944117144233) <= 1e-12

    def test_in_unit_interval(self):
        for seed in range(5):
            x = rng(seed).standard_normal((6, 4))
            z = rng(seed + 100).standard_normal((6, 3))
            val = diversity_loss(x, z)
            assert 0.0 < val <= 1.0

    def test_scaling_x_decreases_loss(self):
        x = rng(12).standard_normal((6, 4))
        z = rng(13).standard_normal((6, 3))
        assert diversity_loss(2 * x, z) < diversity_loss(x, z)

    def test_batch_mismatch(self):
        with pytest.raises(ShapeError):
            diversity_loss(np.zeros((3, 2)), np.zeros((4, 2)))

    def test_gradient_matches_fd(self):
        x = rng(14).standard_normal((5, 3))
        z = rng(15).standard_normal((5, 2))
        fd = fd_grad(lambda v: diversity_loss(v, z), x.copy())
        assert rel_err(diversity_grad(x, z), fd) <= TOL

    def test_gradient_zero_for_identical_rows(self):
        x = np.tile(rng(16).standard_normal((1, 3)), (4, 1))
        z = rng(17).standard_normal((4, 2))
        assert np.array_equal(diversity_grad(x, z), np.zeros_like(x))


class TestClassFrequencyAndInfo:
    def test_uniform_from_zero_logits(self):
        p = class_frequency(np.zeros((4, 5)))
        assert np.allclose(p, 0.2, atol=1e-12)

    def test_peaked_rows(self):
        logits = np.zeros((3, 4))
        logits[:, 0] = 60.0
        p = class_frequency(logits)
        assert p[0] > 0.999
        assert abs(p.sum() - 1.0) <= 1e-12

    def test_known_average(self):
        logits = np.array([[np.log(3.0), 0.0], [0.0, np.log(3.0)]])
        p = class_frequency(logits)
        assert np.allclose(p, [0.5, 0.5], atol=1e-12)

    def test_info_bounds_and_values(self):
        C = 7
        uniform = np.full(C, 1 / C)
        assert abs(info_entropy_loss(uniform) + np.log(C)) <= 1e-12
        onehot = np.zeros(C)
        onehot[2] = 1.0
        assert abs(info_entropy_loss(onehot)) <= 1e-9

    def test_info_known_value(self):
        assert abs(info_entropy_loss(np.array([0.75, 0.25]))
                   + 0.5623351446188083) <= 1e-12

    def test_info_grad_matches_fd(self):
        logits = rng(18).standard_normal((5, 4))
        fd = fd_grad(lambda l: info_entropy_loss(class_frequency(l)), logits.copy())
        assert rel_err(info_entropy_grad(logits), fd) <= TOL


class TestGeneratorLoss:
    def parts(self):
        return {"fid": 1.5, "adv": -0.25, "div": 0.5, "info": -1.0}

    def test_plain_sum_at_unit_betas(self):
        val = generator_loss(self.parts(), LossWeights())
        assert abs(val - (1.5 - 0.25 + 0.5 - 1.0)) <= 1e-12

    def test_mask_keeps_fidelity_only(self):
        mask = {"fid": True, "adv": False, "div": False, "info": False}
        assert generator_loss(self.parts(), LossWeights(), mask) == 1.5

    def test_linear_in_each_beta(self):
        parts = self.parts()
        base = generator_loss(parts, LossWeights(beta_div=0.0))
        bumped = generator_loss(parts, LossWeights(beta_div=2.0))
        assert abs(bumped - base - 2.0 * parts["div"]) <= 1e-12

    def test_unknown_term_rejected(self):
        with pytest.raises(ShapeError):
            generator_loss({"fid": 1.0, "bogus": 2.0}, LossWeights())

    def test_default_weights(self):
        w = LossWeights()
        assert (w.beta_adv, w.beta_div, w.beta_info) == (1.0, 1.0, 1.0)
        assert w.temperature == 5.0
        assert w.tau_sq_correction is False

    def test_full_mask_enables_everything(self):
        assert full_mask() == {"fid": True, "adv": True, "div": True, "info": True}
