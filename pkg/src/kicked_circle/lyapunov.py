"""Lyapunov exponents of the kicked circle map and random-sink certificates.

Two independent estimators are provided:

* ``birkhoff_lyapunov`` averages log|tau'| along kicked orbits (replicas on
  independent substreams, error bar from the replica spread);
* ``quadrature_lyapunov`` integrates log|tau'| against a stationary density
  from the Ulam discretization.

log|tau'| has integrable log singularities at the folds.  Near a fold z the
quadrature uses the substitution t = |tau'(x)| on each monotone half, where
dx = dt / |tau''|, and subtracts the leading term so that

    int_{t_a}^{t_b} log(t) g(t) dt = g(0) [t log t - t]_{t_a}^{t_b}
                                    + int_{t_a}^{t_b} (g(t) - g(0)) log(t) dt,

with g = 1/|tau''(x(t))|.  The remainder is smooth in s = sqrt(t).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _kernels
from .arcs import ArcSet, circle_distance
from .circle_map import (
    MapParams,
    PsiSpec,
    bisect_increasing,
    compute_I_K,
    eval_tau_prime,
    image_arcset,
    lift,
    sublevel_set,
    tau_critical_points,
)
from .errors import ComponentMerge, TrapEscape, TrapViolation
from .noise import KickStream, NoiseConfig
from .transfer_operator import DensityVector

SINGULAR_DELTA = 0.1
LOG_FLOOR = _kernels.LOG_FLOOR

CSV_FIELDS = ("a", "L", "eps", "method", "value", "std_error", "n_steps", "burn_in", "n_replicas", "seed")


@dataclass(frozen=True)
class LyapunovEstimate:
    value: float
    method: str
    std_error: float
    n_steps: int
    burn_in: int
    n_replicas: int
    a: float
    L: float
    eps: float
    seed: int | None = None
    mean_abs_dpsi: float = float("nan")
    replica_values: tuple = field(default=(), repr=False)

    def csv_row(self) -> list[str]:
        vals = [self.a, self.L, self.eps, self.method, self.value, self.std_error,
                self.n_steps, self.burn_in, self.n_replicas, self.seed]
        return [repr(float(v)) if isinstance(v, float) else ("" if v is None else str(v)) for v in vals]


def _psi_arrays(psi: PsiSpec):
    k = np.arange(1, psi.k_max + 1, dtype=np.float64)
    return k, np.asarray(psi.cos_coeffs, dtype=np.float64), np.asarray(psi.sin_coeffs, dtype=np.float64)


def birkhoff_lyapunov(p: MapParams, eps: float, seed: int = 0, n_steps: int = 1_000_000,
                      burn_in: int = 10_000, n_replicas: int = 16, stream_id: int = 0) -> LyapunovEstimate:
    """Monte Carlo Birkhoff average of log|tau'| over independent kicked orbits.

    Replica r draws its start point and kicks from substream r of stream
    ``stream_id``; the estimate is the replica mean and the error bar the
    replica standard deviation over sqrt(n_replicas).
    """
    if n_steps < 10 * burn_in:
        raise ValueError("n_steps must be at least 10 * burn_in")
    if n_replicas < 1:
        raise ValueError("need at least one replica")
    cfg = NoiseConfig(eps, seed)
    k, c, s = _psi_arrays(p.psi)
    vals = np.empty(n_replicas)
    absd = np.empty(n_replicas)
    for r in range(n_replicas):
        stream = KickStream(cfg, stream_id, substream=r)
        x0 = float(stream.uniforms(1)[0])
        kicks = stream.kicks(burn_in + n_steps)
        vals[r], absd[r] = _kernels.orbit_log_derivative(x0, p.a, p.L, k, c, s, kicks, burn_in)
    se = float(np.std(vals, ddof=1) / math.sqrt(n_replicas)) if n_replicas > 1 else float("nan")
    return LyapunovEstimate(
        value=float(np.mean(vals)), method="monte_carlo", std_error=se, n_steps=n_steps,
        burn_in=burn_in, n_replicas=n_replicas, a=p.a, L=p.L, eps=eps, seed=seed,
        mean_abs_dpsi=float(np.mean(absd)), replica_values=tuple(vals.tolist()),
    )


# ---------------------------------------------------------------------------
# quadrature of log|tau'|


def _gl(order):
    t, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (t + 1.0), 0.5 * w


def _fold_segment_integrals(p: MapParams, z, u, v, sigma, order=16):
    """int_u^v log|tau'| dx on segments of a fold half where |tau'| is monotone.

    z is the fold adjacent to the segment's half, sigma the sign of tau' there.
    """
    psi, L = p.psi, p.L
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    z = np.asarray(z, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    tu = np.abs(eval_tau_prime(p, u))
    tv = np.abs(eval_tau_prime(p, v))
    # the fold itself has |tau'| = 0 up to root tolerance
    tu = np.where(np.abs(u - z) < 1e-11, 0.0, tu)
    tv = np.where(np.abs(v - z) < 1e-11, 0.0, tv)
    ta = np.minimum(tu, tv)
    tb = np.maximum(tu, tv)
    g0 = 1.0 / (L * np.abs(psi.d2(z)))

    def F(t):
        return np.where(t > 0, t * np.log(np.where(t > 0, t, 1.0)) - t, 0.0)

    main = g0 * (F(tb) - F(ta))
    sn, sw = _gl(order)
    sa, sb = np.sqrt(ta), np.sqrt(tb)
    s = sa[:, None] + (sb - sa)[:, None] * sn[None, :]
    t = s * s
    # x(t): solve psi'(x) = (sigma t - 1)/L on [u, v]; psi' is monotone there
    level = (sigma[:, None] * t - 1.0) / L
    xm = 0.5 * (u + v)
    inc = psi.d2(xm) > 0
    lo = np.broadcast_to(np.minimum(u, v)[:, None], t.shape)
    hi = np.broadcast_to(np.maximum(u, v)[:, None], t.shape)
    sgn = np.where(inc, 1.0, -1.0)[:, None]
    x = bisect_increasing(lambda y: sgn * psi.d1(y), lo, hi, sgn * level)
    g = 1.0 / (L * np.abs(psi.d2(x)))
    integrand = (g - g0[:, None]) * np.log(np.where(t > 0, t, 1.0)) * 2.0 * s
    rem = (integrand * sw[None, :]).sum(axis=1) * (sb - sa)
    return main + rem


def _gl_segments(f, u, v, pieces, order, chunk=1 << 21):
    """int_u^v f for each segment, split into ``pieces`` equal parts."""
    tn, tw = _gl(order)
    out = np.zeros(u.size)
    idx = np.repeat(np.arange(u.size), pieces)
    start = np.concatenate([[0], np.cumsum(pieces)[:-1]])
    local = np.arange(idx.size) - np.repeat(start, pieces)
    h = (v - u) / pieces
    step = max(1, chunk // order)
    for b in range(0, idx.size, step):
        ii = idx[b:b + step]
        a0 = u[ii] + local[b:b + step] * h[ii]
        x = a0[:, None] + h[ii][:, None] * tn[None, :]
        vals = (f(x) * tw[None, :]).sum(axis=1) * h[ii]
        out += np.bincount(ii, weights=vals, minlength=u.size)
    return out


def _graded_regular(f, radius, u, v, order, max_rounds=400):
    """Segment integrals of f where log|tau'| is smooth.

    radius(x) = |tau'(x)| / (L sup|psi''|) is a lower bound for the distance
    from x to the nearest zero of tau', so Gauss-Legendre panels of half that
    width converge geometrically.  The panels grow away from the folds, which
    keeps the count logarithmic in L.
    """
    out = np.zeros(u.size)
    x = u.copy()
    active = np.arange(u.size)
    for _ in range(max_rounds):
        if active.size == 0:
            return out
        h = np.minimum(0.5 * radius(x[active]), v[active] - x[active])
        b = x[active] + h
        out += np.bincount(active, weights=_gl_segments(f, x[active], b, np.ones(active.size, dtype=np.int64), order),
                           minlength=u.size)
        x[active] = b
        active = active[b < v[active]]
    raise RuntimeError("graded quadrature did not reach the segment ends")


def _graded_segments(f, u, v, at_left, order, levels=48):
    """Integrals with a geometric mesh towards a log-singular endpoint."""
    out = np.zeros(u.size)
    r = 0.5 ** np.arange(levels + 1)
    for i in range(u.size):
        w = v[i] - u[i]
        if at_left[i]:
            pts = u[i] + w * r[::-1]
            pts = np.concatenate([[u[i]], pts])
        else:
            pts = v[i] - w * r
            pts = np.concatenate([pts, [v[i]]])
        a, b = pts[:-1], pts[1:]
        out[i] = _gl_segments(f, a, b, np.ones(a.size, dtype=int), order).sum()
    return out


@lru_cache(maxsize=64)
def _cell_integrals_cached(psi: PsiSpec, L: float, n: int, delta: float, order: int):
    p = MapParams(0.0, L, psi)
    sup2 = psi.sup_abs_d2
    zeros = np.array(tau_critical_points(p))
    extrema = psi.d1_extrema
    Id = sublevel_set(p, delta) if zeros.size or L * psi.sup_abs_d1 >= 1 - delta else ArcSet.empty()

    # fold halves (linear pieces in [0, 1] with their fold and tau' sign)
    half_lo, half_hi, half_z, half_sig = [], [], [], []
    irregular = []
    for s0, ln in Id.components():
        e0 = s0 + ln
        zs = [zz for zz in np.concatenate([zeros, zeros + 1.0]) if s0 <= zz <= e0]
        ex = [ee for ee in np.concatenate([extrema, extrema + 1.0]) if s0 <= ee <= e0]
        if len(zs) == 1 and not ex:
            z = zs[0]
            for lo, hi in ((s0, z), (z, e0)):
                sig = math.copysign(1.0, float(eval_tau_prime(p, 0.5 * (lo + hi))))
                for a_, b_, zz in _split_unit(lo, hi, z):
                    half_lo.append(a_)
                    half_hi.append(b_)
                    half_z.append(zz)
                    half_sig.append(sig)
        else:
            irregular.append((s0, e0, ex))

    breaks = [np.arange(n + 1) / n, np.mod(zeros, 1.0)]
    for s0, ln in Id.components():
        breaks.append(np.mod([s0, s0 + ln], 1.0))
    for s0, e0, ex in irregular:
        breaks.append(np.mod(ex, 1.0))
    b = np.unique(np.clip(np.concatenate(breaks), 0.0, 1.0))
    u, v = b[:-1], b[1:]
    keep = v - u > 0
    u, v = u[keep], v[keep]
    mid = 0.5 * (u + v)
    cell = np.minimum((mid * n).astype(np.int64), n - 1)

    kind = np.zeros(u.size, dtype=np.int8)  # 0 regular, 1 fold half, 2 irregular
    seg_z = np.zeros(u.size)
    seg_sig = np.zeros(u.size)
    if half_lo:
        hl = np.array(half_lo)
        hh = np.array(half_hi)
        order_h = np.argsort(hl)
        hl, hh = hl[order_h], hh[order_h]
        hz = np.array(half_z)[order_h]
        hs = np.array(half_sig)[order_h]
        j = np.searchsorted(hl, mid, side="right") - 1
        jj = np.clip(j, 0, None)
        inside = (j >= 0) & (mid <= hh[jj])
        kind[inside] = 1
        seg_z[inside] = hz[jj[inside]]
        seg_sig[inside] = hs[jj[inside]]
    for s0, e0, ex in irregular:
        m_in = ((mid >= s0) & (mid <= e0)) | ((mid + 1.0 >= s0) & (mid + 1.0 <= e0))
        kind[m_in & (kind == 0)] = 2

    def logabs(x):
        return np.log(np.maximum(np.abs(1.0 + L * psi.d1(x)), LOG_FLOOR))

    res = np.zeros(u.size)
    m1 = kind == 1
    if np.any(m1):
        res[m1] = _fold_segment_integrals(p, seg_z[m1], u[m1], v[m1], seg_sig[m1])
    h_reg = delta / (L * sup2) if sup2 > 0 else np.inf
    m0 = kind == 0
    if np.any(m0):
        res[m0] = _graded_regular(logabs, lambda x: np.abs(1.0 + L * psi.d1(x)) / (L * sup2) if sup2 > 0
                                  else np.full(np.shape(x), np.inf), u[m0], v[m0], order)
    m2 = np.flatnonzero(kind == 2)
    if m2.size:
        zz = np.mod(zeros, 1.0)
        near_l = np.array([zz.size > 0 and np.min(circle_distance(zz, u[i])) < 1e-11 for i in m2])
        near_r = np.array([zz.size > 0 and np.min(circle_distance(zz, v[i])) < 1e-11 for i in m2])
        graded = near_l | near_r
        if np.any(graded):
            gi = m2[graded]
            res[gi] = _graded_segments(logabs, u[gi], v[gi], near_l[graded], order)
        if np.any(~graded):
            gi = m2[~graded]
            pieces = np.maximum(1, np.ceil(16 * (v[gi] - u[gi]) / h_reg)).astype(np.int64)
            res[gi] = _gl_segments(logabs, u[gi], v[gi], pieces, order)

    log_cells = np.bincount(cell, weights=res, minlength=n)

    # int |psi'| per cell, split at the critical points of psi (kinks of |psi'|)
    if psi.is_flat:
        abs_cells = np.zeros(n)
    else:
        crit = np.array([c.location for c in psi.critical_points])
        b2 = np.unique(np.concatenate([np.arange(n + 1) / n, crit]))
        u2, v2 = b2[:-1], b2[1:]
        cell2 = np.minimum((0.5 * (u2 + v2) * n).astype(np.int64), n - 1)
        vals = _gl_segments(lambda x: np.abs(psi.d1(x)), u2, v2, np.ones(u2.size, dtype=np.int64), 8)
        abs_cells = np.bincount(cell2, weights=vals, minlength=n)
    log_cells.setflags(write=False)
    abs_cells.setflags(write=False)
    return log_cells, abs_cells


def _split_unit(lo, hi, z):
    """Split a lifted interval into pieces inside [0, 1], shifting z alongside."""
    out = []
    for shift in (-1.0, 0.0, 1.0):
        a_ = max(lo + shift, 0.0)
        b_ = min(hi + shift, 1.0)
        if b_ > a_:
            out.append((a_, b_, z + shift))
    return out


def cell_log_integrals(p: MapParams, n: int, delta: float = SINGULAR_DELTA, order: int = 12) -> np.ndarray:
    """int over each grid cell C_j of log|tau'(x)| dx (independent of a)."""
    return _cell_integrals_cached(p.psi, p.L, n, delta, order)[0]


def cell_abs_dpsi_integrals(p: MapParams, n: int) -> np.ndarray:
    return _cell_integrals_cached(p.psi, p.L, n, SINGULAR_DELTA, 12)[1]


def quadrature_lyapunov(p: MapParams, d: DensityVector, eps: float = float("nan")) -> LyapunovEstimate:
    """sum_j rho_j int_{C_j} log|tau'| dx for a piecewise-constant density."""
    logs = cell_log_integrals(p, d.n)
    absd = cell_abs_dpsi_integrals(p, d.n)
    value = math.fsum((d.rho * logs).tolist())
    mean_abs = math.fsum((d.rho * absd).tolist())
    return LyapunovEstimate(
        value=value, method="quadrature", std_error=0.0, n_steps=0, burn_in=0, n_replicas=0,
        a=p.a, L=p.L, eps=eps, seed=None, mean_abs_dpsi=mean_abs,
    )


def log_integral_I1(p: MapParams) -> float:
    """int over I_1 of log|tau'| dm via t = |tau'| on each of the 2N fold halves."""
    psi = p.psi
    N = psi.n_critical
    I1 = compute_I_K(p, 1.0)
    comps = I1.components()
    if len(comps) != N:
        raise ComponentMerge(f"I_1 has {len(comps)} components, expected {N}")
    zeros = np.array(tau_critical_points(p))
    extrema = psi.d1_extrema
    z_list, u_list, v_list, sig_list = [], [], [], []
    for s0, ln in comps:
        e0 = s0 + ln
        zs = [zz for zz in np.concatenate([zeros, zeros + 1.0]) if s0 < zz < e0]
        ex = [ee for ee in np.concatenate([extrema, extrema + 1.0]) if s0 <= ee <= e0]
        if len(zs) != 1 or ex:
            raise ComponentMerge("an I_1 component is not a single nondegenerate fold interval")
        z = zs[0]
        for lo, hi in ((s0, z), (z, e0)):
            z_list.append(z)
            u_list.append(lo)
            v_list.append(hi)
            sig_list.append(math.copysign(1.0, float(eval_tau_prime(p, 0.5 * (lo + hi)))))
    vals = _fold_segment_integrals(p, np.array(z_list), np.array(u_list), np.array(v_list),
                                   np.array(sig_list), order=32)
    return math.fsum(vals.tolist())


def inf_abs_d2_on(psi: PsiSpec, A: ArcSet, samples: int = 4097) -> float:
    """min |psi''| over the arcs of A (dense sampling, endpoints included)."""
    best = math.inf
    for s0, ln in A.components():
        x = s0 + ln * np.linspace(0.0, 1.0, samples)
        best = min(best, float(np.min(np.abs(psi.d2(x)))))
    return best


# ---------------------------------------------------------------------------
# random sinks


@dataclass(frozen=True)
class SinkCertificate:
    """Trapping region B_nu(z) around a fold z for parameters |a - a_z| <= nu/3."""

    z: float
    a_z: float
    nu: float
    eps: float
    M: float
    contraction: float
    trap_margin: float
    L: float
    psi: PsiSpec
    fold_index: int = 0

    def params(self, a: float | None = None) -> MapParams:
        return MapParams(self.a_z if a is None else a, self.L, self.psi)

    def trap(self) -> ArcSet:
        return ArcSet.ball(self.z, self.nu)

    def to_dict(self) -> dict:
        return {
            "z": self.z, "a_z": self.a_z, "nu": self.nu, "eps": self.eps, "M": self.M,
            "contraction": self.contraction, "trap_margin": self.trap_margin, "L": self.L,
            "psi": self.psi.to_dict(), "fold_index": self.fold_index,
        }


def check_trapping(cert: SinkCertificate, a: float, eps: float | None = None) -> bool:
    """B_eps(tau_a(B_nu(z))) ⊆ B_nu(z), checked with exact arc images."""
    eps = cert.eps if eps is None else eps
    img = image_arcset(cert.params(a), cert.trap(), eps)
    return img.issubset(cert.trap())


def _polish_fold(psi: PsiSpec, L: float, z: float, steps: int = 3) -> float:
    # Newton on psi'(z) = -1/L; bisection leaves |tau'(z)| ~ L * 1e-12
    for _ in range(steps):
        z = z - (psi.d1(z) + 1.0 / L) / psi.d2(z)
    return float(z % 1.0)


def construct_sink(psi: PsiSpec, L: float, fold_index: int = 0) -> SinkCertificate:
    p = MapParams(0.0, L, psi)
    folds = tau_critical_points(p)
    if not folds:
        raise ValueError(f"tau has no folds for L={L}")
    z = _polish_fold(psi, L, folds[fold_index])
    a_z = float((-L * psi.value(z)) % 1.0)
    # rounded up so that psi'' <= M holds despite the numerical sup
    M = psi.sup_abs_d2 * (1.0 + 1e-9)
    nu = 1.0 / (2.0 * M * L)
    eps = nu / 3.0
    margin = (eps + nu / 3.0 + 0.5 * L * M * nu * nu) / nu
    if margin > 1.0:
        raise TrapViolation(f"trapping inequality fails: margin {margin}")
    # mean-value enclosure of tau' on B_nu(z)
    d2lo, d2hi = psi.d2_enclosure(z - nu, z + nu)
    sup_d2 = max(abs(d2lo), abs(d2hi))
    contraction = abs(float(eval_tau_prime(p, z))) + L * sup_d2 * nu
    if contraction > 0.5:
        raise TrapViolation(f"sup |tau'| on B_nu(z) enclosure {contraction} exceeds 1/2")
    cert = SinkCertificate(z=float(z), a_z=a_z, nu=nu, eps=eps, M=M, contraction=contraction,
                           trap_margin=margin, L=float(L), psi=psi, fold_index=fold_index)
    for da in (-nu / 3.0, 0.0, nu / 3.0):
        if not check_trapping(cert, a_z + da):
            raise TrapViolation(f"B_nu(z) not mapped into itself at a = a_z{da:+.3g}")
    return cert


def verify_sink(cert: SinkCertificate, a: float, seed: int = 0, n_steps: int = 1_000_000,
                eps: float | None = None, stream_id: int = 0, x0: float | None = None) -> LyapunovEstimate:
    """Run a kicked orbit from inside B_nu(z); raise TrapEscape if it ever leaves."""
    if circle_distance(a, cert.a_z) > cert.nu / 3.0 * (1 + 1e-12):
        raise ValueError("a must satisfy |a - a_z| <= nu/3")
    eps = cert.eps if eps is None else eps
    p = cert.params(a)
    k, c, s = _psi_arrays(cert.psi)
    stream = KickStream(NoiseConfig(eps, seed), stream_id)
    kicks = stream.kicks(n_steps)
    start = cert.z if x0 is None else x0
    value, step = _kernels.sink_orbit(start, cert.z, cert.nu * (1 + 1e-12), p.a, p.L, k, c, s, kicks)
    if step >= 0:
        raise TrapEscape(f"orbit left B_nu(z) at step {step}", step=int(step))
    return LyapunovEstimate(value=float(value), method="monte_carlo", std_error=float("nan"),
                            n_steps=n_steps, burn_in=0, n_replicas=1, a=p.a, L=p.L, eps=eps, seed=seed)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JensenReport:
    passed: bool
    value: float
    jensen_bound: float
    crude_bound: float


def jensen_upper_check(est: LyapunovEstimate, p: MapParams) -> JensenReport:
    """value <= log(1 + L <|psi'|>) and value <= log(1 + L sup|psi'|), with a 3 SE collar."""
    se = est.std_error if math.isfinite(est.std_error) else 0.0
    collar = 3.0 * se
    mean_abs = est.mean_abs_dpsi if math.isfinite(est.mean_abs_dpsi) else p.psi.sup_abs_d1
    jb = math.log1p(p.L * mean_abs)
    cb = math.log1p(p.L * p.psi.sup_abs_d1)
    ok = est.value <= jb + collar and est.value <= cb + collar
    return JensenReport(ok, est.value, jb, cb)
