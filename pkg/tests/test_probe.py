import numpy as np
import pytest

from syncontrast.data import Dataset, toy_generate
from syncontrast.encoder import encoder_init
from syncontrast.errors import BadLabelsError, ShapeMismatchError, UnlabeledError
from syncontrast.mathops import make_rng
from syncontrast.probe import cross_entropy, embed_dataset, evaluate, fit_linear

from conftest import random_unit_rows
from oracles import central_difference, relative_error, top_k_hits


class TestEmbedDataset:
    def make(self):
        ds = toy_generate(3, 8, 6, 2.0, 0.5, make_rng(0))
        params = encoder_init([6, 5, 4], make_rng(1))
        return params, ds

    def test_pure_and_repeatable(self):
        params, ds = self.make()
        before = params.checksum()
        z1, y1 = embed_dataset(params, ds)
        z2, _ = embed_dataset(params, ds)
        np.testing.assert_array_equal(z1, z2)
        assert params.checksum() == before

    def test_unit_rows_and_count(self):
        params, ds = self.make()
        z, labels = embed_dataset(params, ds, batch_size=5)
        assert z.shape == (len(ds), 4)
        np.testing.assert_allclose(np.linalg.norm(z, axis=1), 1.0, atol=1e-10)
        np.testing.assert_array_equal(labels, ds.labels)

    def test_rejects_unlabeled(self):
        params, ds = self.make()
        ds.labels[0] = -1
        with pytest.raises(UnlabeledError):
            embed_dataset(params, ds)


class TestFitLinear:
    def test_separable_classes_reach_perfect_top1(self):
        rng = make_rng(2)
        emb = np.vstack(
            [
                random_unit_rows(rng, 20, 4) * 0.1 + np.array([1.0, 0, 0, 0]),
                random_unit_rows(rng, 20, 4) * 0.1 + np.array([-1.0, 0, 0, 0]),
            ]
        )
        emb /= np.linalg.norm(emb, axis=1, keepdims=True)
        labels = np.array([0] * 20 + [1] * 20)
        fit = fit_linear(emb, labels, 2, lr=0.5, steps=500)
        result = evaluate(fit.weights, fit.bias, emb, labels, fit.final_loss)
        assert result.top1 == 1.0

    def test_zero_steps_ties_to_class_zero(self):
        rng = make_rng(3)
        emb = random_unit_rows(rng, 60, 5)
        labels = np.repeat(np.arange(3), 20)
        fit = fit_linear(emb, labels, 3, steps=0)
        result = evaluate(fit.weights, fit.bias, emb, labels)
        assert result.top1 == pytest.approx(np.mean(labels == 0))

    def test_loss_history_non_increasing(self):
        rng = make_rng(4)
        emb = random_unit_rows(rng, 50, 6)
        labels = rng.integers(0, 4, size=50)
        fit = fit_linear(emb, labels, 4, lr=0.5, steps=300)
        losses = np.array(fit.train_losses)
        assert np.all(losses[1:] <= losses[:-1] + 1e-9)
        # and over every 50-step window
        for start in range(0, 250, 50):
            assert losses[start + 50] <= losses[start] + 1e-9

    def test_gradient_matches_finite_differences(self):
        rng = make_rng(5)
        emb = random_unit_rows(rng, 12, 4)
        labels = rng.integers(0, 3, size=12)
        weights = rng.normal(size=(3, 4)) * 0.2
        bias = rng.normal(size=3) * 0.1
        _, grad_w, grad_b = cross_entropy(weights, bias, emb, labels)

        def loss_at_w(w):
            return cross_entropy(w, bias, emb, labels)[0]

        def loss_at_b(b):
            return cross_entropy(weights, b, emb, labels)[0]

        assert relative_error(grad_w, central_difference(loss_at_w, weights, h=1e-6)) <= 1e-6
        assert relative_error(grad_b, central_difference(loss_at_b, bias, h=1e-6)) <= 1e-6

    def test_rejects_out_of_range_labels(self):
        rng = make_rng(6)
        emb = random_unit_rows(rng, 5, 3)
        with pytest.raises(BadLabelsError):
            fit_linear(emb, np.array([0, 1, 2, 3, 9]), 4)


class TestEvaluate:
    def test_one_hot_logits_are_perfect(self):
        labels = np.array([0, 1, 2, 1])
        emb = np.eye(3)[labels]
        weights = np.eye(3)
        bias = np.zeros(3)
        result = evaluate(weights, bias, emb, labels)
        assert result.top1 == 1.0
        assert result.top5 == 1.0
        assert result.n_eval == 4

    def test_zero_logits_tie_break_to_class_zero(self):
        rng = make_rng(7)
        emb = random_unit_rows(rng, 30, 4)
        labels = np.repeat(np.arange(10), 3)
        weights = np.zeros((10, 4))
        result = evaluate(weights, np.zeros(10), emb, labels)
        assert result.top1 == pytest.approx(np.mean(labels == 0))
        # top5 ties resolve to classes 0..4
        assert result.top5 == pytest.approx(np.mean(labels < 5))

    def test_matches_per_sample_oracle(self):
        rng = make_rng(8)
        emb = random_unit_rows(rng, 25, 6)
        labels = rng.integers(0, 7, size=25)
        weights = rng.normal(size=(7, 6))
        bias = rng.normal(size=7)
        result = evaluate(weights, bias, emb, labels)
        logits = emb @ weights.T + bias
        assert result.top1 == pytest.approx(np.mean(top_k_hits(logits, labels, 1)))
        assert result.top5 == pytest.approx(np.mean(top_k_hits(logits, labels, 5)))

    def test_permutation_invariance(self):
        rng = make_rng(9)
        emb = random_unit_rows(rng, 20, 5)
        labels = rng.integers(0, 4, size=20)
        weights = rng.normal(size=(4, 5))
        bias = rng.normal(size=4)
        base = evaluate(weights, bias, emb, labels)
        perm = rng.permutation(20)
        shuffled = evaluate(weights, bias, emb[perm], labels[perm])
        assert base.top1 == shuffled.top1
        assert base.top5 == shuffled.top5

    def test_top5_at_least_top1(self):
        rng = make_rng(10)
        for _ in range(20):
            emb = random_unit_rows(rng, 15, 4)
            labels = rng.integers(0, 6, size=15)
            weights = rng.normal(size=(6, 4))
            result = evaluate(weights, np.zeros(6), emb, labels)
            assert result.top5 >= result.top1

    def test_few_classes_top5_degrades_gracefully(self):
        rng = make_rng(11)
        emb = random_unit_rows(rng, 10, 3)
        labels = rng.integers(0, 2, size=10)
        weights = rng.normal(size=(2, 3))
        result = evaluate(weights, np.zeros(2), emb, labels)
        assert result.top5 == 1.0  # min(5, 2) = both classes always hit

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            evaluate(np.zeros((3, 4)), np.zeros(3), np.zeros((2, 5)), np.zeros(2, dtype=int))
