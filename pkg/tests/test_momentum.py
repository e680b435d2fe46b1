import numpy as np
import pytest

from syncontrast.encoder import EncoderParams, encoder_init
from syncontrast.errors import EmptyQueueError, NotNormalizedError, ShapeMismatchError
from syncontrast.mathops import make_rng
from syncontrast.momentum import EncoderPair, NegativeQueue, ema_update, make_pair

from conftest import random_unit_rows
from oracles import replay_fifo


def scalar_pair(target_value, online_value, momentum):
    online = EncoderParams(weights=[np.array([[online_value]])], biases=[np.array([0.0])])
    target = EncoderParams(weights=[np.array([[target_value]])], biases=[np.array([0.0])])
    return EncoderPair(online=online, target=target, momentum=momentum)


class TestEmaUpdate:
    def test_momentum_one_keeps_target(self):
        rng = make_rng(0)
        pair = make_pair(encoder_init([4, 3], rng), momentum=1.0)
        pair.target.weights[0][:] += 0.5
        before = [w.copy() for w in pair.target.weights]
        updated = ema_update(pair)
        for a, b in zip(updated.target.weights, before):
            np.testing.assert_array_equal(a, b)

    def test_momentum_zero_copies_online(self):
        rng = make_rng(1)
        pair = make_pair(encoder_init([4, 3], rng), momentum=0.0)
        pair.target.weights[0][:] += 0.5
        updated = ema_update(pair)
        for a, b in zip(updated.target.weights, pair.online.weights):
            np.testing.assert_array_equal(a, b)

    def test_arithmetic(self):
        updated = ema_update(scalar_pair(target_value=1.0, online_value=0.0, momentum=0.99))
        assert updated.target.weights[0][0, 0] == pytest.approx(0.99)

    def test_fixed_point(self):
        # m*x + (1-m)*x equals x up to one rounding step for fractional m.
        rng = make_rng(2)
        online = encoder_init([5, 4], rng)
        for m in (0.0, 0.3, 0.99, 1.0):
            pair = make_pair(online, momentum=m)
            updated = ema_update(pair)
            for a, b in zip(updated.target.weights, online.weights):
                np.testing.assert_allclose(a, b, rtol=1e-15, atol=0)

    def test_convexity_bounds(self):
        rng = make_rng(3)
        pair = make_pair(encoder_init([6, 4], rng), momentum=0.7)
        pair.target.weights[0][:] = rng.normal(size=pair.target.weights[0].shape)
        lo = np.minimum(pair.target.weights[0], pair.online.weights[0])
        hi = np.maximum(pair.target.weights[0], pair.online.weights[0])
        updated = ema_update(pair)
        assert np.all(updated.target.weights[0] >= lo - 1e-15)
        assert np.all(updated.target.weights[0] <= hi + 1e-15)

    def test_shape_mismatch(self):
        rng = make_rng(4)
        pair = EncoderPair(
            online=encoder_init([4, 3], rng),
            target=encoder_init([4, 2], rng),
            momentum=0.5,
        )
        with pytest.raises(ShapeMismatchError):
            ema_update(pair)

    def test_momentum_out_of_range(self):
        rng = make_rng(5)
        with pytest.raises(ValueError):
            make_pair(encoder_init([3, 2], rng), momentum=1.5)


class TestNegativeQueue:
    def test_fifo_eviction(self, rng):
        q = NegativeQueue(capacity=4, dim=3)
        batches = [random_unit_rows(rng, 2, 3), random_unit_rows(rng, 2, 3), random_unit_rows(rng, 1, 3)]
        for b in batches:
            q.enqueue(b)
        assert q.fill == 4
        snap = q.snapshot()
        expected = replay_fifo(4, batches)
        assert len(expected) == 4
        np.testing.assert_array_equal(snap, np.stack(expected))
        # the very first key must be gone
        assert not any(np.array_equal(batches[0][0], row) for row in snap)

    def test_exact_capacity_batch(self, rng):
        keys = random_unit_rows(rng, 5, 4)
        q = NegativeQueue(capacity=5, dim=4)
        q.enqueue(keys)
        np.testing.assert_array_equal(q.snapshot(), keys)

    def test_replay_oracle_random_sequence(self):
        rng = make_rng(99)
        q = NegativeQueue(capacity=128, dim=4)
        batches = []
        total = 0
        while total < 1000:
            n = int(rng.integers(1, 32))
            batch = random_unit_rows(rng, n, 4)
            batches.append(batch)
            q.enqueue(batch)
            total += n
            assert q.fill <= 128
        expected = np.stack(replay_fifo(128, batches))
        np.testing.assert_array_equal(q.snapshot(), expected)

    def test_rejects_unnormalized(self, rng):
        q = NegativeQueue(capacity=4, dim=3)
        bad = random_unit_rows(rng, 2, 3) * 1.01
        with pytest.raises(NotNormalizedError):
            q.enqueue(bad)

    def test_rejects_wrong_dim(self, rng):
        q = NegativeQueue(capacity=4, dim=3)
        with pytest.raises(ShapeMismatchError):
            q.enqueue(random_unit_rows(rng, 2, 5))

    def test_rejects_oversized_batch(self, rng):
        q = NegativeQueue(capacity=4, dim=3)
        with pytest.raises(ShapeMismatchError):
            q.enqueue(random_unit_rows(rng, 5, 3))

    def test_snapshot_is_a_copy(self, rng):
        q = NegativeQueue(capacity=4, dim=3)
        first = random_unit_rows(rng, 2, 3)
        q.enqueue(first)
        snap = q.snapshot()
        q.enqueue(random_unit_rows(rng, 2, 3))
        q.enqueue(random_unit_rows(rng, 2, 3))
        np.testing.assert_array_equal(snap, first)

    def test_snapshot_row_count_tracks_fill(self, rng):
        q = NegativeQueue(capacity=8, dim=2)
        for n in (1, 3, 2):
            q.enqueue(random_unit_rows(rng, n, 2))
            assert q.snapshot().shape == (q.fill, 2)

    def test_empty_snapshot_rejected(self):
        with pytest.raises(EmptyQueueError):
            NegativeQueue(capacity=4, dim=3).snapshot()

    def test_entries_stay_unit_norm(self, rng):
        q = NegativeQueue(capacity=16, dim=5)
        for _ in range(50):
            q.enqueue(random_unit_rows(rng, int(rng.integers(1, 8)), 5))
            norms = np.linalg.norm(q.snapshot(), axis=1)
            np.testing.assert_allclose(norms, 1.0, atol=1e-10)
