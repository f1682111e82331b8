"""The circle-map family x -> a + x + L*psi(x) (mod 1) and its arc geometry.

The forcing profile psi is a finite trigonometric polynomial, so every
derivative is available in closed form.  Root finding never scans in L:
the extrema of psi' are located once per profile (scan + bisection on psi''),
after which psi' is monotone on each piece between consecutive extrema and
every level set {psi' = v} is found by bracketed bisection on those pieces.
The same idea applied to the lift T(x) = a + x + L*psi(x) (monotone between
the folds of the map) gives images and preimages of arcs.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .arcs import ArcSet
from .errors import DegenerateCritical, ScanTooCoarse, TangentRoot

TWO_PI = 2.0 * math.pi
ROOT_TOL = 1e-12


def bisect_increasing(f, lo, hi, target, tol=ROOT_TOL):
    """Vectorized bisection for f(x) = target with f increasing on each [lo, hi]."""
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    target = np.broadcast_to(np.asarray(target, dtype=float), lo.shape)
    if lo.size == 0:
        return lo
    width = float(np.max(hi - lo))
    n_iter = max(1, int(math.ceil(math.log2(max(width, tol) / tol))) + 1)
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        below = f(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _bisect_sign(f, lo, hi, tol=ROOT_TOL):
    """Root of f in each [lo, hi] given a sign change across the bracket."""
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    if lo.size == 0:
        return lo
    s_lo = np.sign(f(lo))
    width = float(np.max(hi - lo))
    n_iter = max(1, int(math.ceil(math.log2(max(width, tol) / tol))) + 1)
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        same = np.sign(f(mid)) == s_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def scan_roots(f, df, n_grid, tol=ROOT_TOL):
    """All roots in [0, 1) of a smooth 1-periodic f by sign-change scan + bisection.

    Raises ScanTooCoarse when a grid cell without a sign change hides an
    extremum of f that crosses zero (two roots in one cell).
    """
    xs = np.arange(n_grid) / n_grid
    fv = f(xs)
    fn = np.roll(fv, -1)
    roots = list(xs[fv == 0.0])
    change = fv * fn < 0
    idx = np.flatnonzero(change)
    if idx.size:
        lo = xs[idx]
        roots.extend(_bisect_sign(f, lo, lo + 1.0 / n_grid, tol).tolist())
    dv = df(xs)
    dn = np.roll(dv, -1)
    hidden = np.flatnonzero(~change & (fv != 0) & (fn != 0) & (dv * dn < 0))
    if hidden.size:
        lo = xs[hidden]
        ext = _bisect_sign(df, lo, lo + 1.0 / n_grid, tol)
        fe = f(ext)
        if np.any(np.sign(fe) == -np.sign(fv[hidden])):
            raise ScanTooCoarse(f"two roots inside one scan cell of width 1/{n_grid}")
    roots = np.sort(np.mod(roots, 1.0))
    if roots.size > 1:
        keep = np.concatenate([[True], np.diff(roots) > 10 * tol])
        roots = roots[keep]
        if roots.size > 1 and roots[0] + 1.0 - roots[-1] <= 10 * tol:
            roots = roots[:-1]
    return roots


@dataclass(frozen=True)
class CriticalPoint:
    location: float
    second_derivative: float


@dataclass(frozen=True)
class PsiSpec:
    """psi(x) = sum_k cos_coeffs[k-1] cos(2 pi k x) + sin_coeffs[k-1] sin(2 pi k x)."""

    cos_coeffs: tuple = ()
    sin_coeffs: tuple = ()

    def __post_init__(self):
        c = tuple(float(v) for v in self.cos_coeffs)
        s = tuple(float(v) for v in self.sin_coeffs)
        k = max(len(c), len(s))
        c = c + (0.0,) * (k - len(c))
        s = s + (0.0,) * (k - len(s))
        object.__setattr__(self, "cos_coeffs", c)
        object.__setattr__(self, "sin_coeffs", s)
        if not self.is_flat:
            self.critical_points  # noqa: B018  (validates nondegeneracy)

    @classmethod
    def default(cls) -> "PsiSpec":
        return cls(sin_coeffs=(1.0 / TWO_PI,))

    @classmethod
    def from_dict(cls, d: dict) -> "PsiSpec":
        return cls(cos_coeffs=tuple(d.get("cos", ())), sin_coeffs=tuple(d.get("sin", ())))

    def to_dict(self) -> dict:
        return {"cos": list(self.cos_coeffs), "sin": list(self.sin_coeffs)}

    @classmethod
    def from_json(cls, text: str) -> "PsiSpec":
        return cls.from_dict(json.loads(text))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @property
    def k_max(self) -> int:
        return len(self.cos_coeffs)

    @property
    def is_flat(self) -> bool:
        return all(v == 0.0 for v in self.cos_coeffs + self.sin_coeffs)

    @cached_property
    def _arrays(self):
        k = np.arange(1, self.k_max + 1, dtype=float)
        return k, np.array(self.cos_coeffs), np.array(self.sin_coeffs)

    def derivative(self, x, order: int = 0):
        """order-th derivative of psi, vectorized over x."""
        x = np.asarray(x, dtype=float)
        k, c, s = self._arrays
        if k.size == 0:
            return np.zeros_like(x)
        w = TWO_PI * k
        theta = np.multiply.outer(x, w) + order * (math.pi / 2)
        return (np.cos(theta) * (c * w**order) + np.sin(theta) * (s * w**order)).sum(axis=-1)

    def value(self, x):
        return self.derivative(x, 0)

    def d1(self, x):
        return self.derivative(x, 1)

    def d2(self, x):
        return self.derivative(x, 2)

    @property
    def scan_size(self) -> int:
        return max(4096, 64 * self.k_max)

    @cached_property
    def d1_extrema(self) -> np.ndarray:
        """Sorted roots of psi'' in [0, 1): the turning points of psi'."""
        if self.is_flat:
            return np.empty(0)
        return scan_roots(lambda x: self.derivative(x, 2), lambda x: self.derivative(x, 3), self.scan_size)

    @cached_property
    def sup_abs_d1(self) -> float:
        if self.is_flat:
            return 0.0
        return float(np.max(np.abs(self.d1(self.d1_extrema))))

    @cached_property
    def sup_abs_d2(self) -> float:
        if self.is_flat:
            return 0.0
        ext = scan_roots(lambda x: self.derivative(x, 3), lambda x: self.derivative(x, 4), self.scan_size)
        return float(np.max(np.abs(self.d2(ext))))

    @property
    def nondegeneracy_floor(self) -> float:
        return 1e-6 * self.sup_abs_d2

    def d1_level_roots(self, level: float) -> np.ndarray:
        """Sorted solutions in [0, 1) of psi'(x) = level."""
        if self.is_flat:
            return np.empty(0)
        e = self.d1_extrema
        if e.size == 0:
            return np.empty(0)
        lo = e
        hi = np.concatenate([e[1:], [e[0] + 1.0]])
        flo, fhi = self.d1(lo), self.d1(hi)
        inc = fhi > flo
        hit = (level >= np.minimum(flo, fhi)) & (level <= np.maximum(flo, fhi))
        roots = []
        if np.any(hit & inc):
            m = hit & inc
            roots.append(bisect_increasing(self.d1, lo[m], hi[m], level))
        if np.any(hit & ~inc):
            m = hit & ~inc
            roots.append(bisect_increasing(lambda x: -self.d1(x), lo[m], hi[m], -level))
        if not roots:
            return np.empty(0)
        r = np.sort(np.mod(np.concatenate(roots), 1.0))
        if r.size > 1:
            keep = np.concatenate([[True], np.diff(r) > 1e-11])
            r = r[keep]
            if r.size > 1 and r[0] + 1.0 - r[-1] <= 1e-11:
                r = r[:-1]
        return r

    @cached_property
    def critical_points(self) -> tuple:
        if self.is_flat:
            raise DegenerateCritical("a flat profile has no isolated critical points")
        roots = self.d1_level_roots(0.0)
        floor = self.nondegeneracy_floor
        out = []
        for r in roots:
            d2 = float(self.d2(r))
            if abs(d2) < floor:
                raise DegenerateCritical(f"psi''({r:.12g}) = {d2:.3g} below floor {floor:.3g}")
            out.append(CriticalPoint(float(r), d2))
        return tuple(out)

    @property
    def n_critical(self) -> int:
        return len(self.critical_points)

    def d2_enclosure(self, lo: float, hi: float) -> tuple[float, float]:
        """Rigorous range of psi'' on [lo, hi] (up to rounding), term by term."""
        k, c, s = self._arrays
        tot_lo = tot_hi = 0.0
        for kk, ck, sk in zip(k, c, s):
            amp = (TWO_PI * kk) ** 2 * math.hypot(ck, sk)
            if amp == 0.0:
                continue
            # psi''_k = -amp * cos(theta - phi)
            phi = math.atan2(sk, ck)
            clo, chi = _cos_range(TWO_PI * kk * lo - phi, TWO_PI * kk * hi - phi)
            tot_lo += -amp * chi
            tot_hi += -amp * clo
        return tot_lo, tot_hi


def _cos_range(t0: float, t1: float) -> tuple[float, float]:
    """Exact min and max of cos on [t0, t1]."""
    if t1 - t0 >= TWO_PI:
        return -1.0, 1.0
    vals = [math.cos(t0), math.cos(t1)]
    lo = min(vals)
    hi = max(vals)
    # an interior multiple of 2*pi gives the max 1, an odd multiple of pi the min -1
    if math.floor(t1 / TWO_PI) > math.floor(t0 / TWO_PI) or t0 % TWO_PI == 0.0:
        hi = 1.0
    if math.floor((t1 - math.pi) / TWO_PI) > math.floor((t0 - math.pi) / TWO_PI):
        lo = -1.0
    return lo, hi


@dataclass(frozen=True)
class MapParams:
    a: float
    L: float
    psi: PsiSpec = field(default_factory=PsiSpec.default)

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be positive")
        object.__setattr__(self, "a", float(self.a) % 1.0)
        object.__setattr__(self, "L", float(self.L))

    def with_a(self, a: float) -> "MapParams":
        return MapParams(a, self.L, self.psi)


def lift(p: MapParams, x):
    """Lift a + x + L psi(x) of the circle map to the real line."""
    x = np.asarray(x, dtype=float)
    return p.a + x + p.L * p.psi.value(x)


def eval_tau(p: MapParams, x):
    return np.mod(lift(p, x), 1.0)


def eval_tau_prime(p: MapParams, x):
    return 1.0 + p.L * p.psi.d1(x)


def psi_critical_points(psi: PsiSpec, root_tol: float = ROOT_TOL) -> list[CriticalPoint]:
    return list(psi.critical_points)


@lru_cache(maxsize=256)
def _tau_zeros(psi: PsiSpec, L: float) -> tuple:
    roots = psi.d1_level_roots(-1.0 / L)
    floor = psi.nondegeneracy_floor
    for r in roots:
        if abs(float(psi.d2(r))) < floor:
            raise TangentRoot(f"degenerate fold at x={r:.12g} for L={L}")
    return tuple(float(r) for r in roots)


def tau_critical_points(p: MapParams) -> list[float]:
    """Folds of the map: zeros of tau' = 1 + L psi'."""
    return list(_tau_zeros(p.psi, p.L))


def sublevel_set(p: MapParams, K: float) -> ArcSet:
    """{x : |tau'(x)| <= K} for any K > 0, as merged closed arcs."""
    psi, L = p.psi, p.L
    lo_level = -(K + 1.0) / L
    hi_level = (K - 1.0) / L

    def member(x):
        v = psi.d1(x)
        return (v >= lo_level) & (v <= hi_level)

    b = np.sort(np.concatenate([psi.d1_level_roots(lo_level), psi.d1_level_roots(hi_level)]))
    if b.size == 0:
        return ArcSet.full() if bool(member(0.0)) else ArcSet.empty()
    nxt = np.concatenate([b[1:], [b[0] + 1.0]])
    gaps = nxt - b
    mids = b + 0.5 * gaps
    inside = member(np.mod(mids, 1.0))
    if not np.any(inside):
        # only isolated touching points
        return ArcSet.empty()
    return ArcSet.from_lifted(b[inside], gaps[inside])


def compute_I_K(p: MapParams, K: float) -> ArcSet:
    """The non-expanding set I_K = {|tau'| <= K}; independent of a."""
    if K < 1:
        raise ValueError("K must be >= 1")
    return sublevel_set(p, K)


def largest_component_length(A: ArcSet) -> float:
    return A.largest_component_length()


def _monotone_pieces(p: MapParams):
    """Lifted pieces [u, v] of the circle on which the lift is monotone."""
    z = np.array(tau_critical_points(p))
    if z.size == 0:
        return np.array([0.0]), np.array([1.0])
    return z, np.concatenate([z[1:], [z[0] + 1.0]])


def image_arcset(p: MapParams, A: ArcSet, r: float = 0.0) -> ArcSet:
    """B_r(tau_a(A)): split at folds, map monotone pieces by their endpoints, dilate."""
    if A.is_empty:
        return ArcSet.empty()
    if A.is_full:
        return ArcSet.full()
    z = np.array(tau_critical_points(p))
    starts, lengths = [], []
    for s, l in A.components():
        cuts = [s]
        if z.size:
            zz = np.concatenate([z - 1.0, z, z + 1.0])
            cuts.extend(sorted(zz[(zz > s) & (zz < s + l)].tolist()))
        cuts.append(s + l)
        cuts = np.array(cuts)
        t = lift(p, cuts)
        lo = np.minimum(t[:-1], t[1:])
        hi = np.maximum(t[:-1], t[1:])
        starts.append(lo - r)
        lengths.append(hi - lo + 2.0 * r)
    return ArcSet.from_lifted(np.concatenate(starts), np.concatenate(lengths))


def preimage_arc(p: MapParams, target) -> ArcSet:
    """Full preimage tau_a^{-1}(target) of a single arc.

    target is an ArcSet with one component or a ``(start, length)`` pair.
    """
    if isinstance(target, ArcSet):
        if target.is_full:
            return ArcSet.full()
        comps = target.components()
        if len(comps) != 1:
            raise ValueError("target must be a single arc")
        s, ell = comps[0]
    else:
        s, ell = map(float, target)
    if ell >= 1.0:
        return ArcSet.full()
    us, vs = _monotone_pieces(p)
    out_lo, out_hi = [], []
    for u, v in zip(us, vs):
        tu, tv = lift(p, [u, v])
        inc = tv >= tu
        tmin, tmax = (tu, tv) if inc else (tv, tu)
        k = np.arange(math.floor(tmin - s - ell), math.floor(tmax - s) + 1, dtype=float)
        y0 = np.maximum(s + k, tmin)
        y1 = np.minimum(s + ell + k, tmax)
        ok = y0 <= y1
        if not np.any(ok):
            continue
        y0, y1 = y0[ok], y1[ok]
        lo_b = np.full(y0.shape, u)
        hi_b = np.full(y0.shape, v)
        if inc:
            f = lambda x: lift(p, x)  # noqa: E731
            x0 = bisect_increasing(f, lo_b, hi_b, y0)
            x1 = bisect_increasing(f, lo_b, hi_b, y1)
        else:
            f = lambda x: -lift(p, x)  # noqa: E731
            x1 = bisect_increasing(f, lo_b, hi_b, -y0)
            x0 = bisect_increasing(f, lo_b, hi_b, -y1)
        out_lo.append(x0)
        out_hi.append(x1)
    if not out_lo:
        return ArcSet.empty()
    lo = np.concatenate(out_lo)
    hi = np.concatenate(out_hi)
    return ArcSet.from_lifted(lo, hi - lo)
