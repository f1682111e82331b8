"""Finite unions of closed arcs on the circle R/Z.

An :class:`ArcSet` is stored as a sorted array of disjoint, non-touching
intervals ``[lo, hi]`` inside ``[0, 1]``.  An arc passing through 0 is stored
as two pieces ``[lo, 1]`` and ``[0, hi]``; :meth:`ArcSet.components` glues them
back together.
"""
from __future__ import annotations

import json
import math
from typing import Iterable

import numpy as np

# arcs and gaps shorter than this are below double resolution on [0, 1)
MIN_LENGTH = 1e-14


def circle_distance(x, y):
    """Distance between points of R/Z."""
    d = np.mod(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), 1.0)
    return np.minimum(d, 1.0 - d)


def _normalize(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    if lo.size == 0:
        return np.empty((0, 2))
    order = np.argsort(lo, kind="stable")
    lo, hi = lo[order], hi[order]
    reach = np.maximum.accumulate(hi)
    new = np.empty(lo.size, dtype=bool)
    new[0] = True
    new[1:] = lo[1:] > reach[:-1] + MIN_LENGTH
    starts = np.flatnonzero(new)
    arr = np.column_stack([lo[starts], np.maximum.reduceat(hi, starts)])
    np.clip(arr, 0.0, 1.0, out=arr)
    if arr[0, 0] <= MIN_LENGTH:
        arr[0, 0] = 0.0
    if arr[-1, 1] >= 1.0 - MIN_LENGTH:
        arr[-1, 1] = 1.0
    keep = arr[:, 1] - arr[:, 0] >= MIN_LENGTH
    return arr[keep]


class ArcSet:
    """Closed subset of the circle made of finitely many arcs."""

    __slots__ = ("_iv",)

    def __init__(self, intervals=None):
        if intervals is None:
            self._iv = np.empty((0, 2))
            return
        iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
        if np.any(iv[:, 1] < iv[:, 0]) or np.any(iv < 0) or np.any(iv > 1):
            raise ValueError("intervals must satisfy 0 <= lo <= hi <= 1")
        self._iv = _normalize(iv[:, 0].copy(), iv[:, 1].copy())

    # construction -------------------------------------------------------

    @classmethod
    def empty(cls) -> "ArcSet":
        return cls()

    @classmethod
    def full(cls) -> "ArcSet":
        s = cls()
        s._iv = np.array([[0.0, 1.0]])
        return s

    @classmethod
    def _raw(cls, lo, hi) -> "ArcSet":
        s = cls()
        s._iv = _normalize(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
        return s

    @classmethod
    def from_lifted(cls, starts, lengths) -> "ArcSet":
        """Union of arcs ``[s, s + length]`` with ``s`` any real number."""
        starts = np.atleast_1d(np.asarray(starts, dtype=float))
        lengths = np.atleast_1d(np.asarray(lengths, dtype=float))
        if starts.size == 0:
            return cls.empty()
        if np.any(lengths >= 1.0):
            return cls.full()
        lo = np.mod(starts, 1.0)
        lo = np.where(lo >= 1.0, 0.0, lo)
        hi = lo + np.maximum(lengths, 0.0)
        wrap = hi > 1.0
        all_lo = np.concatenate([lo, np.zeros(wrap.sum())])
        all_hi = np.concatenate([np.minimum(hi, 1.0), hi[wrap] - 1.0])
        return cls._raw(all_lo, all_hi)

    @classmethod
    def from_arcs(cls, arcs: Iterable) -> "ArcSet":
        """From circular ``(lo, hi)`` pairs; ``lo > hi`` denotes an arc through 0."""
        arcs = [tuple(map(float, a)) for a in arcs]
        if not arcs:
            return cls.empty()
        starts = []
        lengths = []
        for lo, hi in arcs:
            if lo == 0.0 and hi == 1.0:
                return cls.full()
            starts.append(lo)
            lengths.append(hi - lo if hi >= lo else hi + 1.0 - lo)
        return cls.from_lifted(starts, lengths)

    @classmethod
    def ball(cls, x: float, r: float) -> "ArcSet":
        """Closed r-neighbourhood of the point x."""
        return cls.from_lifted([x - r], [2.0 * r])

    # basic queries ------------------------------------------------------

    @property
    def intervals(self) -> np.ndarray:
        return self._iv.copy()

    def __len__(self):
        return self.component_count

    @property
    def is_empty(self) -> bool:
        return self._iv.shape[0] == 0

    @property
    def is_full(self) -> bool:
        return self._iv.shape[0] == 1 and self._iv[0, 0] == 0.0 and self._iv[0, 1] == 1.0

    def measure(self) -> float:
        return math.fsum((self._iv[:, 1] - self._iv[:, 0]).tolist())

    def components(self) -> list[tuple[float, float]]:
        """Connected components as ``(start, length)``; starts lie in [0, 1)."""
        iv = self._iv
        if iv.shape[0] == 0:
            return []
        if self.is_full:
            return [(0.0, 1.0)]
        comps = [(float(a), float(b - a)) for a, b in iv]
        if iv.shape[0] > 1 and iv[0, 0] == 0.0 and iv[-1, 1] == 1.0:
            first = comps.pop(0)
            last = comps.pop()
            comps.append((last[0], last[1] + first[1]))
        return comps

    @property
    def component_count(self) -> int:
        return len(self.components())

    def largest_component_length(self) -> float:
        comps = self.components()
        return max((c[1] for c in comps), default=0.0)

    def contains(self, x):
        x = np.mod(np.asarray(x, dtype=float), 1.0)
        if self.is_empty:
            return np.zeros(np.shape(x), dtype=bool)
        idx = np.searchsorted(self._iv[:, 0], x, side="right") - 1
        ok = idx >= 0
        idxc = np.clip(idx, 0, None)
        res = ok & (x <= self._iv[idxc, 1])
        # x == 1.0 cannot occur after mod; the point 0 may sit in a piece [lo, 1]
        res = res | ((x == 0.0) & (self._iv[-1, 1] == 1.0))
        return res

    def cumulative(self, t):
        """m(A ∩ [0, t]) extended to all real t (plus m(A) per full turn)."""
        t = np.asarray(t, dtype=float)
        turns = np.floor(t)
        frac = t - turns
        if self.is_empty:
            return np.zeros_like(t)
        lo = self._iv[:, 0]
        lengths = self._iv[:, 1] - lo
        before = np.concatenate([[0.0], np.cumsum(lengths)[:-1]])
        idx = np.searchsorted(lo, frac, side="right") - 1
        k = np.clip(idx, 0, None)
        inside = np.where(idx >= 0, before[k] + np.clip(frac - lo[k], 0.0, lengths[k]), 0.0)
        return turns * self.measure() + inside

    # algebra ------------------------------------------------------------

    def complement(self) -> "ArcSet":
        iv = self._iv
        if iv.shape[0] == 0:
            return ArcSet.full()
        lo = np.concatenate([[0.0], iv[:, 1]])
        hi = np.concatenate([iv[:, 0], [1.0]])
        keep = hi - lo > 0
        return ArcSet._raw(lo[keep], hi[keep])

    def union(self, other: "ArcSet") -> "ArcSet":
        iv = np.vstack([self._iv, other._iv])
        return ArcSet._raw(iv[:, 0], iv[:, 1])

    __or__ = union

    def intersection(self, other: "ArcSet") -> "ArcSet":
        a, b = self._iv, other._iv
        if a.shape[0] == 0 or b.shape[0] == 0:
            return ArcSet.empty()
        out_lo, out_hi = [], []
        i = j = 0
        while i < a.shape[0] and j < b.shape[0]:
            lo = max(a[i, 0], b[j, 0])
            hi = min(a[i, 1], b[j, 1])
            if lo <= hi:
                out_lo.append(lo)
                out_hi.append(hi)
            if a[i, 1] < b[j, 1]:
                i += 1
            else:
                j += 1
        return ArcSet._raw(np.array(out_lo), np.array(out_hi))

    __and__ = intersection

    def difference(self, other: "ArcSet") -> "ArcSet":
        return self.intersection(other.complement())

    def dilate(self, r: float) -> "ArcSet":
        """Closed r-neighbourhood B_r(A)."""
        if r < 0:
            raise ValueError("r must be nonnegative")
        if self.is_empty or r == 0:
            return self.copy()
        comps = self.components()
        starts = np.array([c[0] for c in comps]) - r
        lengths = np.array([c[1] for c in comps]) + 2.0 * r
        return ArcSet.from_lifted(starts, lengths)

    def rotate(self, a: float) -> "ArcSet":
        comps = self.components()
        if not comps or self.is_full:
            return self.copy()
        return ArcSet.from_lifted([c[0] + a for c in comps], [c[1] for c in comps])

    def issubset(self, other: "ArcSet", tol: float = 0.0) -> bool:
        if tol > 0:
            other = other.dilate(tol)
        return self.difference(other).measure() <= MIN_LENGTH * max(1, self._iv.shape[0])

    def copy(self) -> "ArcSet":
        s = ArcSet()
        s._iv = self._iv.copy()
        return s

    def sample(self, u):
        """Map uniforms in [0, 1) to points of the set, uniformly w.r.t. length."""
        u = np.asarray(u, dtype=float)
        if self.is_empty:
            raise ValueError("cannot sample from an empty set")
        lengths = self._iv[:, 1] - self._iv[:, 0]
        csum = np.cumsum(lengths)
        target = u * csum[-1]
        idx = np.clip(np.searchsorted(csum, target, side="right"), 0, lengths.size - 1)
        prev = np.where(idx > 0, csum[idx - 1], 0.0)
        return np.mod(self._iv[idx, 0] + (target - prev), 1.0)

    # comparison / serialization -----------------------------------------

    def __eq__(self, other):
        if not isinstance(other, ArcSet):
            return NotImplemented
        return self._iv.shape == other._iv.shape and bool(np.all(self._iv == other._iv))

    def isclose(self, other: "ArcSet", atol: float = 1e-12) -> bool:
        return self._iv.shape == other._iv.shape and bool(np.allclose(self._iv, other._iv, rtol=0, atol=atol))

    def __repr__(self):
        comps = ", ".join(f"[{s:.6g}, {s + l:.6g}]" for s, l in self.components())
        return f"ArcSet({comps})"

    def to_list(self) -> list[list[float]]:
        """Circular ``[lo, hi]`` pairs with lo, hi in [0, 1); full circle is ``[[0, 1]]``."""
        if self.is_full:
            return [[0.0, 1.0]]
        out = []
        for s, l in self.components():
            hi = s + l
            if hi >= 1.0:
                hi -= 1.0
            out.append([float(s), float(hi)])
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_list())

    @classmethod
    def from_json(cls, text: str) -> "ArcSet":
        return cls.from_arcs(json.loads(text))
