import numpy as np
import pytest
from scipy.stats import chisquare

from timegci.replay import ReplayBuffer


def tagged(k, T=4, D=2):
    # trajectory whose every entry equals its insertion index
    return np.full((T, D), float(k))


def test_fifo_eviction():
    buf = ReplayBuffer(2, 4, 2)
    for k in (1, 2, 3):
        buf.push(tagged(k))
    assert [tr[0, 0] for tr in buf.contents()] == [2.0, 3.0]


def test_size_never_exceeds_capacity():
    buf = ReplayBuffer(7, 1, 1)
    for k in range(100_000):
        buf.push(np.array([[k]]))
        assert len(buf) <= 7
    assert len(buf) == 7


def test_shape_mismatch():
    buf = ReplayBuffer(3, 4, 2)
    with pytest.raises(ValueError):
        buf.push(np.zeros((5, 2)))


def test_model_based_equivalence():
    rng = np.random.default_rng(0)
    for prog in range(1000):
        cap = int(rng.integers(1, 8))
        buf, oracle = ReplayBuffer(cap, 4, 2), []
        counter = 0
        seed = int(rng.integers(1 << 30))
        for _ in range(int(rng.integers(1, 40))):
            op = rng.integers(3)
            if op == 0 or not oracle:
                counter += 1
                buf.push(tagged(counter))
                oracle.append(counter)
                oracle = oracle[-cap:]
            elif op == 1:
                m = int(rng.integers(1, len(oracle) + 1))
                got = buf.sample_trajectories(m, np.random.default_rng(seed))[:, 0, 0]
                want = np.array(oracle)[np.random.default_rng(seed).choice(len(oracle), size=m, replace=False)]
                np.testing.assert_array_equal(got, want)
            else:
                got = buf.sample_transitions(5, np.random.default_rng(seed))
                r = np.random.default_rng(seed)
                want = np.array(oracle)[r.integers(0, len(oracle), size=5)]
                np.testing.assert_array_equal(got.trajectories[:, 0, 0], want)
            assert [tr[0, 0] for tr in buf.contents()] == oracle


def test_full_draw_is_a_permutation():
    buf = ReplayBuffer(10, 4, 2)
    buf.push_many([tagged(k) for k in range(12)])
    got = buf.sample_trajectories(10, np.random.default_rng(1))[:, 0, 0]
    assert sorted(got) == list(range(2, 12))
    with pytest.raises(ValueError):
        buf.sample_trajectories(11, np.random.default_rng(1))


def test_trajectory_sampling_is_uniform():
    buf = ReplayBuffer(10, 4, 2)
    buf.push_many([tagged(k) for k in range(10)])
    rng = np.random.default_rng(2)
    draws = np.concatenate([buf.sample_trajectories(1, rng)[:, 0, 0] for _ in range(10_000)])
    counts = np.bincount(draws.astype(int), minlength=10)
    assert chisquare(counts).pvalue > 0.001
    assert (counts > 0).all()


def test_history_cutoffs():
    T = 6
    buf = ReplayBuffer(5, T, 2)
    buf.push_many(np.random.default_rng(0).uniform(size=(5, T, 2)))
    hb = buf.sample_histories(10_000, np.random.default_rng(3))
    assert hb.cutoffs.min() == 1 and hb.cutoffs.max() == T
    assert chisquare(np.bincount(hb.cutoffs, minlength=T + 1)[1:]).pvalue > 0.001
    for pre, t in zip(hb.prefixes[:200], hb.cutoffs[:200]):
        assert len(pre) == t - 1
    assert any(len(p) == 0 for p in hb.prefixes)


def test_transitions():
    T = 8
    buf = ReplayBuffer(20, T, 2)
    data = np.random.default_rng(1).uniform(size=(20, T, 2))
    buf.push_many(data)
    tb = buf.sample_transitions(10_000, np.random.default_rng(4))
    np.testing.assert_array_equal(tb.terminal, tb.cutoffs == T)
    np.testing.assert_array_equal(tb.actions, tb.trajectories[np.arange(10_000), tb.cutoffs - 1])
    p = 1 / T
    sd = np.sqrt(p * (1 - p) * 10_000)
    assert abs(tb.terminal.sum() - 10_000 * p) <= 4 * sd


def test_empty_buffer_errors_and_determinism():
    buf = ReplayBuffer(3, 2, 1)
    with pytest.raises(ValueError):
        buf.sample_histories(1, np.random.default_rng(0))
    with pytest.raises(ValueError):
        buf.sample_transitions(1, np.random.default_rng(0))
    buf.push_many(np.random.default_rng(0).uniform(size=(3, 2, 1)))
    a = buf.sample_transitions(9, np.random.default_rng(5))
    b = buf.sample_transitions(9, np.random.default_rng(5))
    np.testing.assert_array_equal(a.trajectories, b.trajectories)
    np.testing.assert_array_equal(a.cutoffs, b.cutoffs)


def test_state_dict_round_trip():
    buf = ReplayBuffer(3, 2, 1)
    buf.push_many([np.full((2, 1), k) for k in range(5)])
    back = ReplayBuffer.from_state_dict(buf.state_dict())
    np.testing.assert_array_equal(back.contents(), buf.contents())
    back.push(np.full((2, 1), 9.0))
    buf.push(np.full((2, 1), 9.0))
    np.testing.assert_array_equal(back.contents(), buf.contents())
