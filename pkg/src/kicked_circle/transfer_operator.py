"""Ulam discretization of the kicked circle map and its stationary density.

The random map x -> tau_a(x) + omega, omega ~ U[-eps, eps], is the Markov
chain with kernel p(x, A) = m(A ∩ B_eps(tau_a(x))) / (2 eps).  On the uniform
grid of n cells the Ulam matrix is

    P[i, j] = n * integral over C_i of p(x, C_j) dx,

with p(x, C_j) evaluated exactly (overlap of the kick window with the cell)
and the outer integral done by Gauss-Legendre on equal sub-cells.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .arcs import ArcSet
from .circle_map import MapParams, PsiSpec, eval_tau, image_arcset, preimage_arc
from .errors import EpsilonZero, KernelUnderresolved, NoConvergence

# sup rho may exceed 1/(2 eps) by one cell of smearing on each side
DENSITY_COLLAR = 2.0
MAX_SUBCELLS = 64
_CHUNK_ENTRIES = 1 << 22


@dataclass(frozen=True)
class Grid:
    n_cells: int

    def __post_init__(self):
        if self.n_cells < 2:
            raise ValueError("need at least two cells")

    @property
    def width(self) -> float:
        return 1.0 / self.n_cells

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) / self.n_cells

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) / self.n_cells

    def cell_of(self, x):
        idx = np.floor(np.mod(x, 1.0) * self.n_cells).astype(np.int64)
        return np.minimum(idx, self.n_cells - 1)


@dataclass
class UlamMatrix:
    P: sp.csr_matrix
    params: MapParams
    eps: float
    quad_order: int
    subcells: int = 1

    @property
    def n(self) -> int:
        return self.P.shape[0]

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.P.sum(axis=1)).ravel()

    def header(self) -> dict:
        return {
            "n": self.n,
            "nnz": int(self.P.nnz),
            "a": self.params.a,
            "L": self.params.L,
            "psi": self.params.psi.to_dict(),
            "eps": self.eps,
            "quad_order": self.quad_order,
            "subcells": self.subcells,
            "layout": ["indptr:<i8[n+1]", "indices:<i8[nnz]", "data:<f8[nnz]"],
        }

    def save(self, path) -> tuple[Path, Path]:
        """Write CSR triples to ``path`` (binary) plus a ``.json`` sidecar header."""
        path = Path(path)
        P = self.P.tocsr()
        with open(path, "wb") as fh:
            fh.write(P.indptr.astype("<i8").tobytes())
            fh.write(P.indices.astype("<i8").tobytes())
            fh.write(P.data.astype("<f8").tobytes())
        side = path.with_suffix(path.suffix + ".json")
        side.write_text(json.dumps(self.header(), indent=2))
        return path, side

    @classmethod
    def load(cls, path) -> "UlamMatrix":
        path = Path(path)
        hdr = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        n, nnz = hdr["n"], hdr["nnz"]
        buf = path.read_bytes()
        indptr = np.frombuffer(buf, dtype="<i8", count=n + 1)
        off = 8 * (n + 1)
        indices = np.frombuffer(buf, dtype="<i8", count=nnz, offset=off)
        data = np.frombuffer(buf, dtype="<f8", count=nnz, offset=off + 8 * nnz)
        P = sp.csr_matrix((data.copy(), indices.copy(), indptr.copy()), shape=(n, n))
        params = MapParams(hdr["a"], hdr["L"], PsiSpec.from_dict(hdr["psi"]))
        return cls(P, params, hdr["eps"], hdr["quad_order"], hdr.get("subcells", 1))


@dataclass
class DensityVector:
    rho: np.ndarray
    residual: float
    iterations: int = 0
    history: list = field(default_factory=list, repr=False)

    @property
    def n(self) -> int:
        return self.rho.size

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) / self.n

    def integral(self) -> float:
        return math.fsum(self.rho.tolist()) / self.n

    def to_csv(self, path, header: str | None = None) -> None:
        with open(path, "w") as fh:
            if header:
                fh.write(f"# {header}\n")
            fh.write("cell_index,cell_midpoint,density\n")
            for j, (m, r) in enumerate(zip(self.midpoints, self.rho)):
                fh.write(f"{j},{float(m)!r},{float(r)!r}\n")


def _subcells(p: MapParams, eps: float, n: int) -> int:
    # keep the image of each sub-cell within one kick half-width
    sup_slope = 1.0 + p.L * p.psi.sup_abs_d1
    return int(min(MAX_SUBCELLS, max(1, math.ceil(sup_slope / (n * eps)))))


def build_ulam(p: MapParams, eps: float, g: Grid | int, quad_order: int = 8,
               subcells: int | None = None) -> UlamMatrix:
    """Row-stochastic Ulam matrix of the kicked map on grid ``g``."""
    if isinstance(g, int):
        g = Grid(g)
    n = g.n_cells
    if eps == 0:
        raise EpsilonZero("the kernel is singular at eps = 0")
    if not 0 < eps <= 0.5:
        raise ValueError("eps must lie in (0, 1/2]")
    if quad_order < 1:
        raise ValueError("quad_order must be >= 1")
    if eps >= 0.5:
        # B_{1/2}(y) is the whole circle: every row is uniform
        indptr = np.arange(n + 1, dtype=np.int64) * n
        indices = np.tile(np.arange(n, dtype=np.int64), n)
        data = np.full(n * n, 1.0 / n)
        return UlamMatrix(sp.csr_matrix((data, indices, indptr), shape=(n, n)), p, eps, quad_order, 1)
    if eps * n < 4:
        raise KernelUnderresolved(f"eps*n = {eps * n:.3g} < 4: kick window spans too few cells")

    m = subcells if subcells is not None else _subcells(p, eps, n)
    t, w = np.polynomial.legendre.leggauss(quad_order)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    # local node offsets and weights inside one cell, in cell units
    sub = (np.arange(m)[:, None] + t[None, :]).ravel() / m
    wts = np.tile(w, m) / m
    q = sub.size
    kmax = int(math.ceil(2 * eps * n)) + 2
    rows_per_chunk = max(1, _CHUNK_ENTRIES // (q * kmax))
    offs = np.arange(kmax)
    blocks = []
    for r0 in range(0, n, rows_per_chunk):
        rows = np.arange(r0, min(n, r0 + rows_per_chunk))
        x = (rows[:, None] + sub[None, :]) / n
        y = eval_tau(p, x) * n
        lo = y - eps * n
        hi = y + eps * n
        j0 = np.floor(lo)
        j = j0[..., None] + offs
        ov = np.minimum(hi[..., None], j + 1.0) - np.maximum(lo[..., None], j)
        np.clip(ov, 0.0, None, out=ov)
        vals = ov * (wts[None, :, None] / (2.0 * eps * n))
        rr = np.broadcast_to(rows[:, None, None], vals.shape)
        cols = np.mod(j.astype(np.int64), n)
        keep = vals > 0
        blk = sp.coo_matrix((vals[keep], (rr[keep] - r0, cols[keep])), shape=(rows.size, n)).tocsr()
        blk.sum_duplicates()
        blocks.append(blk)
    P = sp.vstack(blocks, format="csr")
    P.eliminate_zeros()
    return UlamMatrix(P, p, eps, quad_order, m)


def stationary_density(U: UlamMatrix, tol: float = 1e-10, max_iter: int = 100_000,
                       initial=None, raise_on_failure: bool = True) -> DensityVector:
    """Left fixed vector of P by power iteration on the transpose action.

    The residual is the L1 distance between successive normalized densities.
    """
    n = U.n
    PT = U.P.T.tocsr()
    v = np.full(n, 1.0 / n) if initial is None else np.asarray(initial, dtype=float) / np.sum(initial)
    history = []
    res = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        w = PT @ v
        np.maximum(w, 0.0, out=w)
        w /= w.sum()
        res = float(np.abs(w - v).sum())
        history.append(res)
        v = w
        if res <= tol:
            break
    d = DensityVector(v * n, res, it, history)
    if res > tol and raise_on_failure:
        raise NoConvergence(f"residual {res:.3g} > tol {tol:.3g} after {max_iter} iterations", d)
    return d


@dataclass(frozen=True)
class DensityBoundReport:
    max_density: float
    bound: float
    collar_bound: float
    passed: bool


def check_density_sup_bound(d: DensityVector, eps: float, collar: float = DENSITY_COLLAR) -> DensityBoundReport:
    """Compare max rho with 1/(2 eps), allowing a (1 + collar/(n eps)) grid collar."""
    mx = float(np.max(d.rho))
    bound = 1.0 / (2.0 * eps)
    cb = (1.0 + collar / (d.n * eps)) * bound
    return DensityBoundReport(mx, bound, cb, mx <= cb)


def refined_density_bound(p: MapParams, eps: float, x0: float) -> float:
    """(1/(4 eps^2)) * max_z m(B_eps(z) ∩ tau^{-1} B_eps(x0)).

    The window overlap z -> m([z - eps, z + eps] ∩ S) is piecewise linear with
    kinks where a window end meets an endpoint of S, so the maximum is taken
    over those finitely many offsets.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if 2 * eps >= 1.0:
        return 1.0 / (4.0 * eps * eps)  # window covers the circle; m(S) = 1
    S = preimage_arc(p, (x0 - eps, 2 * eps))
    if S.is_empty:
        return 0.0
    ends = S.intervals.ravel()
    z = np.concatenate([ends - eps, ends + eps])
    overlap = S.cumulative(z + eps) - S.cumulative(z - eps)
    return float(np.max(overlap)) / (4.0 * eps * eps)


@dataclass(frozen=True)
class CoverResult:
    covered: bool
    steps: int
    measures: tuple

    @property
    def final_measure(self) -> float:
        return self.measures[-1]


def ergodic_cover_check(p: MapParams, eps: float, J0: ArcSet, max_steps: int = 100) -> CoverResult:
    """Iterate J_{i+1} = B_eps(tau_a(J_i)) until J_i is the whole circle."""
    if J0.is_empty:
        raise ValueError("J0 must be nonempty")
    J = J0
    measures = [J.measure()]
    if J.is_full:
        return CoverResult(True, 0, tuple(measures))
    for i in range(1, max_steps + 1):
        J = image_arcset(p, J, eps)
        measures.append(J.measure())
        if J.is_full:
            return CoverResult(True, i, tuple(measures))
    return CoverResult(False, max_steps, tuple(measures))
