import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from kicked_circle.noise import KickStream, NoiseConfig, make_stream

N = 10**6


def test_same_seed_same_kicks():
    cfg = NoiseConfig(0.3, 42)
    a = make_stream(cfg, 5).kicks(N)
    b = make_stream(cfg, 5).kicks(N)
    assert np.array_equal(a, b)


def test_zero_epsilon_gives_zero_kicks():
    k = make_stream(NoiseConfig(0.0, 1), 0).kicks(1000)
    assert np.all(k == 0.0)


def test_streams_uncorrelated():
    cfg = NoiseConfig(0.5, 7)
    a = make_stream(cfg, 0).kicks(N)
    b = make_stream(cfg, 1).kicks(N)
    assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(N)


def test_substreams_uncorrelated():
    cfg = NoiseConfig(0.5, 7)
    a = KickStream(cfg, 3, substream=0).kicks(N)
    b = KickStream(cfg, 3, substream=1).kicks(N)
    assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(N)
    assert not np.array_equal(a[:10], b[:10])


def test_seeds_differ():
    a = make_stream(NoiseConfig(0.5, 1), 0).kicks(16)
    b = make_stream(NoiseConfig(0.5, 2), 0).kicks(16)
    assert not np.array_equal(a, b)


@pytest.mark.parametrize("eps", [1e-6, 0.01, 0.25, 0.5])
def test_mean_range_and_ks(eps):
    k = make_stream(NoiseConfig(eps, 11), 2).kicks(N)
    assert k.max() <= eps and k.min() >= -eps
    assert abs(k.mean()) <= 4 * eps / math.sqrt(3 * N)
    d = stats.kstest(k[:10**5], stats.uniform(loc=-eps, scale=2 * eps).cdf).statistic
    assert d < 1.95 / math.sqrt(10**5)


@given(st.integers(0, 5000), st.integers(1, 300), st.integers(0, 2**63 - 1), st.integers(0, 2**40))
def test_seek_is_position_addressed(pos, n, seed, sid):
    cfg = NoiseConfig(0.5, seed)
    whole = KickStream(cfg, sid).kicks(pos + n)
    s = KickStream(cfg, sid, position=pos)
    assert np.array_equal(s.kicks(n), whole[pos:])
    assert s.position == pos + n


def test_chunked_draws_match_single_draw():
    cfg = NoiseConfig(0.2, 3)
    s = make_stream(cfg, 9)
    parts = np.concatenate([s.kicks(3), s.kicks(5), [s.next_kick()], s.kicks(7)])
    assert np.array_equal(parts, make_stream(cfg, 9).kicks(16))


def test_uniforms_are_53_bit():
    u = make_stream(NoiseConfig(0.5, 0), 0).uniforms(10000)
    assert np.all((u >= 0) & (u < 1))
    assert np.all(u * 2**53 == np.floor(u * 2**53))


def test_config_validation():
    with pytest.raises(ValueError):
        NoiseConfig(0.6)
    with pytest.raises(ValueError):
        NoiseConfig(-0.1)
    with pytest.raises(ValueError):
        KickStream(NoiseConfig(0.1), 0, position=-1)
