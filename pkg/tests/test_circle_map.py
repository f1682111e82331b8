import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kicked_circle.arcs import ArcSet
from kicked_circle.circle_map import (
    MapParams,
    PsiSpec,
    compute_I_K,
    eval_tau,
    eval_tau_prime,
    image_arcset,
    largest_component_length,
    lift,
    preimage_arc,
    psi_critical_points,
    sublevel_set,
    tau_critical_points,
)
from kicked_circle.errors import DegenerateCritical, TangentRoot

PSI = PsiSpec.default()
TWO_HARMONIC = PsiSpec(sin_coeffs=(1 / (2 * math.pi), 0.2 / (4 * math.pi)))


def P(a, L, psi=PSI):
    return MapParams(a, L, psi)


# -- evaluation -------------------------------------------------------------

def test_eval_tau_values():
    assert eval_tau(P(0, 10), 0.0) == 0.0
    assert eval_tau(P(0.3, 10), 0.5) == pytest.approx(0.8, abs=1e-12)
    # 0.55 + 10/(2 pi) mod 1, evaluated with mpmath-level care
    assert eval_tau(P(0.3, 10), 0.25) == pytest.approx(0.141549430918953, abs=1e-13)


def test_eval_tau_range():
    x = np.linspace(0, 1, 1001, endpoint=False)
    y = eval_tau(P(0.77, 123.4), x)
    assert np.all((0 <= y) & (y < 1))


def test_eval_tau_prime():
    assert eval_tau_prime(P(0.1, 10), 0.0) == pytest.approx(11.0)
    for c in PSI.critical_points:
        assert eval_tau_prime(P(0.4, 37.0), c.location) == pytest.approx(1.0, abs=1e-9)
    x0 = math.acos(-0.1) / (2 * math.pi)
    assert eval_tau_prime(P(0, 10), x0) == pytest.approx(0.0, abs=1e-12)


@given(st.floats(0, 1, exclude_max=True), st.floats(0.1, 1e3), st.floats(0, 1, exclude_max=True))
def test_tau_prime_matches_finite_difference(a, L, x):
    p = P(a, L)
    h = 1e-6
    fd = (lift(p, x + h) - lift(p, x - h)) / (2 * h)
    assert float(eval_tau_prime(p, x)) == pytest.approx(fd, rel=1e-5, abs=1e-5 * L)


def test_mapparams_validation():
    assert MapParams(1.25, 1.0, PSI).a == pytest.approx(0.25)
    with pytest.raises(ValueError):
        MapParams(0.0, 0.0, PSI)


# -- critical structure -------------------------------------------------------

def test_critical_points_default():
    cps = psi_critical_points(PSI)
    assert [round(c.location, 12) for c in cps] == [0.25, 0.75]
    assert cps[0].second_derivative == pytest.approx(-2 * math.pi)
    assert cps[1].second_derivative == pytest.approx(2 * math.pi)


def test_critical_points_cos():
    psi = PsiSpec(cos_coeffs=(1 / (2 * math.pi),))
    cps = psi_critical_points(psi)
    assert cps[0].location == pytest.approx(0.0, abs=1e-12)
    assert cps[1].location == pytest.approx(0.5)
    assert cps[0].second_derivative == pytest.approx(-2 * math.pi)
    assert cps[1].second_derivative == pytest.approx(2 * math.pi)


def test_critical_points_two_harmonics():
    cps = psi_critical_points(TWO_HARMONIC)
    assert len(cps) == 2
    # dense scan oracle
    x = (np.arange(10**6) + 0.5) / 10**6
    d = TWO_HARMONIC.d1(x)
    changes = np.flatnonzero(np.sign(d) != np.sign(np.roll(d, -1)))
    assert len(changes) == 2
    for c, i in zip(cps, changes):
        assert abs(c.location - x[i]) < 2e-6
        assert abs(TWO_HARMONIC.d1(c.location)) < 1e-10


def test_degenerate_profile_rejected():
    # psi' = cos(2 pi x)^3 has triple zeros
    with pytest.raises(DegenerateCritical):
        PsiSpec(sin_coeffs=(3 / (8 * math.pi), 0.0, 1 / (24 * math.pi)))


def test_flat_profile_allowed():
    flat = PsiSpec()
    assert flat.is_flat
    assert tau_critical_points(P(0.2, 5.0, flat)) == []
    assert compute_I_K(P(0.2, 5.0, flat), 1.0).is_full


def test_psi_json_roundtrip():
    assert PsiSpec.from_json(TWO_HARMONIC.to_json()) == TWO_HARMONIC
    assert PSI.to_dict() == {"cos": [0.0], "sin": [1 / (2 * math.pi)]}


def test_sup_norms():
    assert PSI.sup_abs_d1 == pytest.approx(1.0)
    assert PSI.sup_abs_d2 == pytest.approx(2 * math.pi)


def test_folds():
    assert tau_critical_points(P(0, 0.9)) == []
    z = tau_critical_points(P(0, 10))
    assert z == pytest.approx([math.acos(-0.1) / (2 * math.pi), 1 - math.acos(-0.1) / (2 * math.pi)], abs=1e-11)
    assert z[0] == pytest.approx(0.26594, abs=1e-5)
    z = tau_critical_points(P(0, 1e7))
    assert z == pytest.approx([0.25, 0.75], abs=1e-7)


def test_tangent_fold_rejected():
    # at L = 1 the fold sits on the minimum of psi', where psi'' = 0
    with pytest.raises(TangentRoot):
        tau_critical_points(P(0, 1.0))


# -- sublevel sets ------------------------------------------------------------

def test_I1_at_L100():
    I = compute_I_K(P(0, 100), 1.0)
    x1 = math.acos(-0.02) / (2 * math.pi)
    np.testing.assert_allclose(I.intervals, [[0.25, x1], [1 - x1, 0.75]], atol=1e-11)
    assert x1 == pytest.approx(0.253183, abs=1e-6)
    assert largest_component_length(I) == pytest.approx(0.003183, abs=1e-6)
    assert largest_component_length(ArcSet.empty()) == 0.0


def test_I_K_requires_K_at_least_one():
    with pytest.raises(ValueError):
        compute_I_K(P(0, 10), 0.5)


@pytest.mark.parametrize("L", [1e2, 1e3, 1e4, 1e5])
@pytest.mark.parametrize("K", [1.0, 2.0, 3.0])
def test_I_K_asymptotics(L, K):
    I = compute_I_K(P(0, L), K)
    ratio = K / L
    # fitted constants are well below 1 on this grid
    assert abs(I.measure() - 2 * ratio * 2 / (2 * math.pi)) <= 1.0 * ratio**2
    assert abs(largest_component_length(I) - 2 * ratio / (2 * math.pi)) <= 1.0 * ratio**2


def test_I_K_contains_critical_points_and_is_monotone():
    p = P(0.0, 50.0, TWO_HARMONIC)
    prev = None
    for K in (1.0, 1.5, 2.0, 4.0, 10.0):
        I = compute_I_K(p, K)
        for c in TWO_HARMONIC.critical_points:
            assert I.contains(c.location)
        if prev is not None:
            assert prev.issubset(I)
        prev = I


def test_I_K_independent_of_a():
    assert compute_I_K(P(0.0, 40.0), 2.0) == compute_I_K(P(0.613, 40.0), 2.0)


@given(st.floats(1.0, 200.0), st.floats(0.05, 8.0))
def test_sublevel_set_matches_sampling(L, K):
    p = P(0.0, L, TWO_HARMONIC)
    S = sublevel_set(p, K)
    x = (np.arange(200_000) + 0.5) / 200_000
    inside = np.abs(eval_tau_prime(p, x)) <= K
    assert S.measure() == pytest.approx(inside.mean(), abs=2e-5 * (1 + len(S)))


# -- images and preimages -----------------------------------------------------

def test_image_of_full_and_point():
    p = P(0.2, 10)
    assert image_arcset(p, ArcSet.full(), 0.01).is_full
    # a point is represented by an arc far below the kick scale
    img = image_arcset(p, ArcSet.ball(0.4, 1e-10), 0.05)
    assert img.measure() == pytest.approx(0.1, abs=1e-7)
    assert img.contains(eval_tau(p, 0.4))


def test_image_measure_against_sampling():
    p = P(0.0, 10)
    img = image_arcset(p, ArcSet.from_arcs([(0.2, 0.3)]), 0.0)
    np.testing.assert_allclose(img.intervals, [[0.713653, 0.849514]], atol=1e-6)
    x = 0.2 + 0.1 * (np.arange(10**5) + 0.5) / 10**5
    y = eval_tau(p, x)
    assert np.all(img.contains(y))
    lo, hi = y.min(), y.max()
    assert img.measure() == pytest.approx(hi - lo, abs=1e-5)


@given(st.floats(0, 1, exclude_max=True), st.floats(2, 60), st.floats(0, 1, exclude_max=True),
       st.floats(1e-3, 0.2))
def test_image_covers_sampled_images(a, L, s, ell):
    p = P(a, L)
    A = ArcSet.from_lifted([s], [ell])
    img = image_arcset(p, A, 0.0)
    x = s + ell * np.linspace(0, 1, 4001)
    assert np.all(img.dilate(1e-9).contains(eval_tau(p, x)))
    # every component of the image is hit by the sampled orbit
    y = eval_tau(p, x)
    for c0, cl in img.components():
        assert np.any(ArcSet.from_lifted([c0], [cl]).dilate(1e-9).contains(y))


def test_preimage_counting_oracle():
    p = P(0.0, 10)
    target = (0.31, 0.02)
    pre = preimage_arc(p, target)
    n = 10**6
    x = (np.arange(n) + 0.5) / n
    y = eval_tau(p, x)
    hits = np.mod(y - target[0], 1.0) <= target[1]
    assert pre.measure() == pytest.approx(hits.mean(), abs=1e-4)
    assert preimage_arc(p, ArcSet.full()).is_full


@given(st.floats(0, 1, exclude_max=True), st.floats(2, 60), st.floats(0, 1, exclude_max=True),
       st.floats(1e-4, 0.05))
def test_preimage_maps_into_target(a, L, s, ell):
    p = P(a, L)
    pre = preimage_arc(p, (s, ell))
    T = ArcSet.from_lifted([s], [ell])
    for c0, cl in pre.components():
        x = c0 + cl * np.linspace(0, 1, 257)
        assert np.all(T.dilate(1e-8).contains(eval_tau(p, x)))
    assert image_arcset(p, pre, 0.0).issubset(T, tol=1e-8)


def test_preimage_branch_count():
    # winding number 1: a short arc away from fold values has an odd number of
    # preimage components, one per crossing of the lift through its start
    p = P(0.0, 10)
    n = 10**6
    x = (np.arange(n + 1)) / n
    t = lift(p, x)
    for s in np.linspace(0.013, 0.99, 23):
        k = np.floor(t - s)
        crossings = int(np.count_nonzero(k[1:] != k[:-1]))
        comps = len(preimage_arc(p, (s, 1e-4)))
        assert comps == crossings
        assert comps % 2 == 1
