"""Admissible rotation parameters and ergodicity thresholds.

For K1, K2 >= 1 and eps > 0 the window

    A = {a : B_eps(I_K2) ∩ tau_a(I_K1) = ∅}

is computed exactly.  Since tau_a = tau_0 + a, the excluded set is the
Minkowski difference of B_eps(I_K2) and tau_0(I_K1): for arcs [b, b + lb] and
[t, t + lt] the rotation a hits exactly when a ∈ [b - t - lt, b + lb - t].
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .arcs import ArcSet
from .circle_map import MapParams, PsiSpec, compute_I_K, image_arcset, largest_component_length
from .errors import EmptyAtlas

SCHEDULE_L_RANGE = (1e2, 1e8)


@dataclass(frozen=True)
class ScheduleSpec:
    L: float
    eps0: float
    K1: float
    K2: float
    rule: str = "eps0=L^-1/2, K1=(L/log L)^1/2, K2=L^1/2/log L"


def default_schedule(L: float) -> ScheduleSpec:
    lo, hi = SCHEDULE_L_RANGE
    if not lo <= L <= hi:
        raise ValueError(f"schedule supported for L in [{lo:g}, {hi:g}], got {L}")
    lg = math.log(L)
    return ScheduleSpec(L=float(L), eps0=L**-0.5, K1=math.sqrt(L / lg), K2=math.sqrt(L) / lg)


@dataclass(frozen=True)
class ParameterWindow:
    L: float
    eps0: float
    K1: float
    K2: float
    A: ArcSet
    component_count: int

    @property
    def measure(self) -> float:
        return self.A.measure()

    def contains(self, a):
        return self.A.contains(a)

    def to_dict(self) -> dict:
        return {
            "L": self.L, "eps0": self.eps0, "K1": self.K1, "K2": self.K2,
            "arcs": self.A.to_list(), "measure": self.measure,
            "component_count": self.component_count,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "ParameterWindow":
        A = ArcSet.from_arcs([tuple(x) for x in d["arcs"]]) if d["arcs"] else ArcSet.empty()
        return cls(d["L"], d["eps0"], d["K1"], d["K2"], A, int(d["component_count"]))


def excluded_parameters(psi: PsiSpec, L: float, eps: float, K1: float, K2: float) -> ArcSet:
    """{a : B_eps(I_K2) meets tau_a(I_K1)} as an exact union of arcs."""
    p0 = MapParams(0.0, L, psi)
    B = compute_I_K(p0, K2).dilate(eps)
    T = image_arcset(p0, compute_I_K(p0, K1), 0.0)
    if B.is_empty or T.is_empty:
        return ArcSet.empty()
    if B.is_full or T.is_full:
        return ArcSet.full()
    bc = np.array(B.components())
    tc = np.array(T.components())
    starts = (bc[:, None, 0] - tc[None, :, 0] - tc[None, :, 1]).ravel()
    lengths = (bc[:, None, 1] + tc[None, :, 1]).ravel()
    return ArcSet.from_lifted(starts, lengths)


def compute_A_set(psi: PsiSpec, L: float, eps: float, K1: float, K2: float) -> ParameterWindow:
    if K1 < 1 or K2 < 1:
        raise ValueError("K1 and K2 must be >= 1")
    if eps <= 0:
        raise ValueError("eps must be positive")
    A = excluded_parameters(psi, L, eps, K1, K2).complement()
    if A.is_empty or A.measure() <= 0.0:
        raise EmptyAtlas(f"A is empty at L={L}, eps={eps}, K1={K1}, K2={K2}")
    return ParameterWindow(float(L), float(eps), float(K1), float(K2), A, A.component_count)


def scheduled_window(psi: PsiSpec, L: float) -> ParameterWindow:
    s = default_schedule(L)
    return compute_A_set(psi, L, s.eps0, s.K1, s.K2)


def direct_membership(psi: PsiSpec, w: ParameterWindow, a: float) -> bool:
    """Definition check: tau_a(I_K1) ∩ B_eps(I_K2) = ∅ from scratch."""
    p = MapParams(a, w.L, psi)
    img = image_arcset(p, compute_I_K(p, w.K1), 0.0)
    B = compute_I_K(p, w.K2).dilate(w.eps0)
    return img.intersection(B).is_empty


@dataclass(frozen=True)
class MeasureReport:
    L: float
    measure: float
    deficit: float
    k1_term: float
    k2_term: float
    eps_term: float
    c_hat: float

    def to_dict(self) -> dict:
        return asdict(self)


def measure_report(w: ParameterWindow) -> MeasureReport:
    """m(A) with the structural deficit terms K1^2/L, K2/L, 2 eps0.

    c_hat is the smallest c with 1 - m(A) <= c (K1^2/L + K2/L) + 2 eps0.
    """
    m = w.measure
    deficit = 1.0 - m
    t1 = w.K1**2 / w.L
    t2 = w.K2 / w.L
    t3 = 2.0 * w.eps0
    c_hat = max(0.0, (deficit - t3) / (t1 + t2))
    return MeasureReport(w.L, m, deficit, t1, t2, t3, c_hat)


def fit_c_hat(reports) -> float:
    """Sweep-wide constant: the max of the per-L values."""
    return max((r.c_hat for r in reports), default=0.0)


def ergodicity_thresholds(psi: PsiSpec, L: float) -> tuple[float, float]:
    """(m(I_{N+1})/2, b_2/2): kick half-widths above which the measure is unique."""
    if L <= 0:
        raise ValueError("L must be positive")
    p = MapParams(0.0, L, psi)
    general = compute_I_K(p, psi.n_critical + 1.0).measure() / 2.0
    large_l = largest_component_length(compute_I_K(p, 2.0)) / 2.0
    return general, large_l
