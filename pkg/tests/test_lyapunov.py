import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from kicked_circle.arcs import circle_distance
from kicked_circle.circle_map import MapParams, PsiSpec, compute_I_K, eval_tau, tau_critical_points
from kicked_circle.errors import ComponentMerge, TrapEscape, TrapViolation
from kicked_circle.lyapunov import (
    LyapunovEstimate,
    birkhoff_lyapunov,
    cell_abs_dpsi_integrals,
    cell_log_integrals,
    construct_sink,
    inf_abs_d2_on,
    jensen_upper_check,
    log_integral_I1,
    quadrature_lyapunov,
    verify_sink,
)
from kicked_circle.transfer_operator import DensityVector, build_ulam, stationary_density

PSI = PsiSpec.default()
# reference integrals hit the log singularity at an endpoint on purpose
pytestmark = pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
TWO_HARMONIC = PsiSpec(sin_coeffs=(1 / (2 * math.pi), 0.2 / (4 * math.pi)))
LOG5 = math.log(5.0)


def P(a, L, psi=PSI):
    return MapParams(a, L, psi)


def uniform(n):
    return DensityVector(np.ones(n), 0.0)


def closed_form(L):
    # int_0^1 log|1 + L cos 2 pi x| dx
    return math.log((1 + math.sqrt(1 - L * L)) / 2) if L < 1 else math.log(L / 2)


def test_closed_form_oracle_by_adaptive_quadrature():
    z = math.acos(-0.1) / (2 * math.pi)
    f = lambda x: math.log(abs(1 + 10 * math.cos(2 * math.pi * x)))  # noqa: E731
    val = sum(integrate.quad(f, lo, hi, epsabs=1e-13, limit=200)[0]
              for lo, hi in ((0, z), (z, 1 - z), (1 - z, 1)))
    assert val == pytest.approx(LOG5, abs=1e-9)


# -- quadrature ----------------------------------------------------------------

def test_quadrature_half_width_is_log5():
    p = P(0.3, 10)
    d = stationary_density(build_ulam(p, 0.5, 512))
    est = quadrature_lyapunov(p, d, 0.5)
    assert est.method == "quadrature"
    assert est.value == pytest.approx(LOG5, abs=1e-3)
    assert est.value == pytest.approx(LOG5, abs=1e-10)


def test_quadrature_without_folds_matches_adaptive():
    p = P(0.0, 0.5)
    ref = integrate.quad(lambda x: math.log(1 + 0.5 * math.cos(2 * math.pi * x)), 0, 1, epsabs=1e-14)[0]
    assert quadrature_lyapunov(p, uniform(256)).value == pytest.approx(ref, abs=1e-8)
    assert ref == pytest.approx(closed_form(0.5), abs=1e-12)


@pytest.mark.parametrize("L", [0.3, 0.99, 1.01, 2.0, 7.0, 10.0, 333.0, 1e4, 1e6])
@pytest.mark.parametrize("n", [64, 1000])
def test_cell_integrals_sum_to_closed_form(L, n):
    assert cell_log_integrals(P(0, L), n).sum() == pytest.approx(closed_form(L), abs=1e-9)


@pytest.mark.parametrize("L", [3.0, 25.0, 400.0])
def test_cell_integrals_two_harmonics_vs_adaptive(L):
    p = P(0, L, TWO_HARMONIC)
    n = 16
    cells = cell_log_integrals(p, n)
    z = tau_critical_points(p)
    f = lambda x: math.log(abs(1 + L * TWO_HARMONIC.d1(x)))  # noqa: E731
    for j in (0, 3, 4, 11, 12):
        lo, hi = j / n, (j + 1) / n
        pts = [x for x in z if lo < x < hi]
        ref = integrate.quad(f, lo, hi, points=pts or None, epsabs=1e-13, limit=400)[0]
        assert cells[j] == pytest.approx(ref, abs=1e-8)


def test_abs_dpsi_integrals():
    assert cell_abs_dpsi_integrals(P(0, 10), 128).sum() == pytest.approx(2 / math.pi, abs=1e-12)


def test_flat_profile_gives_zero():
    flat = PsiSpec()
    assert quadrature_lyapunov(P(0.4, 3.0, flat), uniform(64)).value == 0.0
    est = birkhoff_lyapunov(P(0.4, 3.0, flat), 0.1, seed=1, n_steps=1000, burn_in=10, n_replicas=3)
    assert est.value == 0.0


# -- the I_1 integral --------------------------------------------------------------

def adaptive_I1(L, psi=PSI):
    p = P(0, L, psi)
    z = tau_critical_points(p)
    f = lambda x: math.log(abs(1 + L * psi.d1(x)))  # noqa: E731
    tot = 0.0
    for s, ln in compute_I_K(p, 1.0).components():
        zz = next(x for x in (*z, *(v + 1 for v in z)) if s < x < s + ln)
        for lo, hi in ((s, zz), (zz, s + ln)):
            tot += integrate.quad(f, lo, hi, epsabs=1e-15, epsrel=1e-12, limit=400)[0]
    return tot


@pytest.mark.parametrize("L", [1e2, 1e3, 1e4])
def test_I1_matches_adaptive(L):
    assert log_integral_I1(P(0, L)) == pytest.approx(adaptive_I1(L), abs=1e-6)
    assert log_integral_I1(P(0, L)) == pytest.approx(adaptive_I1(L), abs=1e-10)


def test_I1_scaling_window_at_L100():
    p = P(0, 100)
    val = log_integral_I1(p)
    inf2 = inf_abs_d2_on(PSI, compute_I_K(p, 1.0))
    assert -2 * 2 / (100 * inf2) <= val < 0
    # frozen value
    assert val == pytest.approx(-0.006366551442077332, rel=1e-9)


def test_I1_scaling():
    scaled = [log_integral_I1(P(0, L)) * L for L in (1e2, 1e3, 1e4, 1e5)]
    gaps = np.abs(np.diff(scaled))
    assert np.all(gaps[1:] < gaps[:-1])
    # the limit is -2N/(2 pi) for the default profile
    assert scaled[-1] == pytest.approx(-4 / (2 * math.pi), rel=1e-6)


def test_I1_two_harmonics():
    assert log_integral_I1(P(0, 500, TWO_HARMONIC)) == pytest.approx(adaptive_I1(500, TWO_HARMONIC), abs=1e-10)


def test_I1_requires_separated_components():
    # at L = 1.5 the two I_1 pieces are still separate, at L slightly above 1 the
    # fold interval contains a turning point of psi'
    with pytest.raises(ComponentMerge):
        log_integral_I1(P(0, 1.2))


# -- Monte Carlo ----------------------------------------------------------------

def test_mc_half_width_log5():
    est = birkhoff_lyapunov(P(0.3, 10), 0.5, seed=3, n_steps=200_000, burn_in=1000, n_replicas=8)
    assert est.std_error > 0
    assert abs(est.value - LOG5) <= 3 * est.std_error
    assert len(est.replica_values) == 8
    assert est.mean_abs_dpsi == pytest.approx(2 / math.pi, abs=0.01)


def test_mc_is_bit_reproducible():
    kw = dict(seed=9, n_steps=20_000, burn_in=100, n_replicas=4)
    a = birkhoff_lyapunov(P(0.1, 50), 0.02, **kw)
    b = birkhoff_lyapunov(P(0.1, 50), 0.02, **kw)
    assert a == b
    c = birkhoff_lyapunov(P(0.1, 50), 0.02, **{**kw, "seed": 10})
    assert c.value != a.value


def test_mc_preconditions():
    with pytest.raises(ValueError):
        birkhoff_lyapunov(P(0.1, 50), 0.02, seed=0, n_steps=999, burn_in=100)
    with pytest.raises(ValueError):
        birkhoff_lyapunov(P(0.1, 50), 0.02, seed=0, n_steps=1000, burn_in=10, n_replicas=0)


def test_csv_row():
    est = LyapunovEstimate(1.5, "monte_carlo", 0.01, 1000, 100, 4, 0.25, 10.0, 0.5, 7)
    assert est.csv_row() == ["0.25", "10.0", "0.5", "monte_carlo", "1.5", "0.01", "1000", "100", "4", "7"]


@settings(max_examples=8)
@given(st.floats(0, 1, exclude_max=True), st.floats(2.0, 60.0), st.floats(0.15, 0.5))
def test_mc_agrees_with_quadrature(a, L, eps):
    p = P(a, L)
    q = quadrature_lyapunov(p, stationary_density(build_ulam(p, eps, 512)), eps).value
    m = birkhoff_lyapunov(p, eps, seed=1, n_steps=100_000, burn_in=1000, n_replicas=8)
    assert abs(m.value - q) <= 3 * m.std_error + 0.01


# -- sinks ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def cert():
    return construct_sink(PSI, 1e3)


def test_sink_certificate_values(cert):
    assert cert.z == pytest.approx(math.acos(-1e-3) / (2 * math.pi), abs=1e-13)
    assert cert.nu == pytest.approx(1 / (4000 * math.pi), rel=1e-8)
    assert cert.eps == pytest.approx(cert.nu / 3)
    assert cert.trap_margin == pytest.approx(11 / 12, abs=1e-12)
    assert cert.contraction <= 0.5
    assert cert.M >= PSI.sup_abs_d2
    # z is a fixed point of tau_{a_z}
    assert circle_distance(eval_tau(cert.params(), cert.z), cert.z) < 1e-9


@pytest.mark.parametrize("L", [2.0, 10.0, 1e3, 1e5])
@pytest.mark.parametrize("fold", [0, 1])
def test_sink_margin_independent_of_L(L, fold):
    c = construct_sink(PSI, L, fold)
    assert c.trap_margin == pytest.approx(11 / 12, abs=1e-12)
    assert c.contraction <= 0.5


def test_sink_needs_folds():
    with pytest.raises(ValueError):
        construct_sink(PSI, 0.5)


def test_sink_interval_check_catches_bad_constant():
    psi = PsiSpec(sin_coeffs=(1 / (2 * math.pi),))
    # pretend sup|psi''| is half its true value: nu doubles and the check must fail
    psi.__dict__["sup_abs_d2"] = math.pi
    with pytest.raises(TrapViolation):
        construct_sink(psi, 1e3)


@pytest.mark.parametrize("offset", [0.0, -1 / 3, 1 / 3])
def test_sink_orbits_confined(cert, offset):
    est = verify_sink(cert, (cert.a_z + offset * cert.nu) % 1.0, seed=4, n_steps=200_000)
    assert est.value <= -math.log(2)


def test_sink_start_anywhere_in_trap(cert):
    for x0 in (cert.z - 0.99 * cert.nu, cert.z + 0.99 * cert.nu):
        est = verify_sink(cert, cert.a_z, seed=1, n_steps=50_000, x0=x0)
        assert est.value <= -math.log(2)


def test_sink_escapes_with_larger_kicks(cert):
    with pytest.raises(TrapEscape) as exc:
        verify_sink(cert, cert.a_z, seed=4, n_steps=100_000, eps=3 * cert.eps)
    assert exc.value.step < 100_000
    with pytest.raises(TrapEscape):
        verify_sink(cert, (cert.a_z - cert.nu / 3) % 1.0, seed=4, n_steps=100_000, eps=2 * cert.eps)


def test_sink_rejects_parameter_outside_window(cert):
    with pytest.raises(ValueError):
        verify_sink(cert, cert.a_z + cert.nu, seed=0, n_steps=10)


def test_certificate_serializes(cert):
    d = cert.to_dict()
    assert d["psi"] == PSI.to_dict() and d["nu"] == cert.nu


# -- Jensen --------------------------------------------------------------------------

def test_jensen_checks():
    p = P(0.3, 10)
    est = quadrature_lyapunov(p, uniform(256), 0.5)
    rep = jensen_upper_check(est, p)
    assert rep.passed
    assert rep.jensen_bound == pytest.approx(math.log(1 + 20 / math.pi), abs=1e-10)
    assert rep.crude_bound == pytest.approx(math.log(11))
    flat = P(0.3, 10, PsiSpec())
    assert jensen_upper_check(quadrature_lyapunov(flat, uniform(16)), flat).jensen_bound == 0.0


def test_jensen_flags_impossible_value():
    p = P(0.3, 10)
    bogus = LyapunovEstimate(3.0, "monte_carlo", 0.01, 10, 1, 2, 0.3, 10.0, 0.5, mean_abs_dpsi=2 / math.pi)
    assert not jensen_upper_check(bogus, p).passed
