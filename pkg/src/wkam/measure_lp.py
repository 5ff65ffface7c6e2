"""Alpha, beta and minimizing measures from an occupation-measure LP.

Unknowns are nonnegative weights ``mu_ij`` on the product of an x-grid and a
velocity grid.  Closedness of the measure is imposed weakly: for every
trigonometric test function ``phi_k`` with ``|k| <= K_test``

    sum_ij mu_ij <v_j, grad phi_k(x_i)> = 0.

To keep the constraint matrix sparse the per-node fluxes
``f_i = sum_j mu_ij v_j`` are introduced as free auxiliary variables; the
Fourier constraints then only touch the ``nx^n`` flux variables instead of
every cell.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy import ndimage

from .dynamics import SystemSpec
from .simplex import LPError, solve_lp


class CutoffError(ValueError):
    """The velocity box is too small for the requested class or rotation."""


@dataclass(frozen=True)
class MeasureGrid:
    nx: int = 256
    nv: int = 129
    vmax: float = 4.0
    n: int = 1

    def __post_init__(self):
        if self.nx < 16:
            raise ValueError("nx must be at least 16")
        if self.nv < 3 or self.nv % 2 == 0:
            raise ValueError("nv must be odd (so that v = 0 is a node)")
        if not self.vmax > 0:
            raise ValueError("vmax must be positive")
        if self.n not in (1, 2):
            raise ValueError("n must be 1 or 2")

    @property
    def x1(self) -> np.ndarray:
        return np.arange(self.nx) / self.nx

    @property
    def v1(self) -> np.ndarray:
        return np.linspace(-self.vmax, self.vmax, self.nv)

    @property
    def dv(self) -> float:
        return 2.0 * self.vmax / (self.nv - 1)

    @property
    def x_nodes(self) -> np.ndarray:
        """(nx^n, n) array of positions."""
        return _product(self.x1, self.n)

    @property
    def v_nodes(self) -> np.ndarray:
        """(nv^n, n) array of velocities."""
        return _product(self.v1, self.n)

    @property
    def shape(self) -> tuple[int, int]:
        return self.nx**self.n, self.nv**self.n

    def check_system(self, sys: SystemSpec) -> None:
        if sys.n != self.n:
            raise ValueError(f"grid dimension {self.n} does not match system dimension {sys.n}")
        need = math.sqrt(2.0 * (sys.max_potential() - sys.min_potential()) / sys.m)
        if self.vmax <= need:
            raise CutoffError(f"vmax={self.vmax} must exceed {need:.6g} to contain the separatrix energies")

    def refine(self) -> "MeasureGrid":
        """Grid with every node of this one kept: ``nx -> 2nx`` and ``nv -> 2nv - 1``."""
        return MeasureGrid(2 * self.nx, 2 * self.nv - 1, self.vmax, self.n)


def _product(t: np.ndarray, n: int) -> np.ndarray:
    if n == 1:
        return t[:, None]
    A, B = np.meshgrid(t, t, indexing="ij")
    return np.stack([A.ravel(), B.ravel()], axis=1)


def default_vmax(sys: SystemSpec, cmax: float) -> float:
    """Superlinearity bound ``sqrt(2 (max U - min U + |c|^2)) + 2`` on the relevant speeds."""
    return math.sqrt(2.0 * (sys.max_potential() - sys.min_potential() + cmax**2)) + 2.0


def holonomy_wavevectors(n: int, K: int) -> np.ndarray:
    """Half-lattice of nonzero wave vectors with sup-norm at most K."""
    if n == 1:
        return np.arange(1, K + 1)[:, None]
    ks = [
        (a, b)
        for a in range(0, K + 1)
        for b in range(-K, K + 1)
        if (a > 0 or b > 0)
    ]
    return np.array(ks)


@lru_cache(maxsize=8)
def _constraint_blocks(n: int, nx: int, nv: int, vmax: float, K: int):
    grid = MeasureGrid(nx, nv, vmax, n)
    Nx, Nv = grid.shape
    N = Nx * Nv
    X, V = grid.x_nodes, grid.v_nodes
    rows, cols, vals = [], [], []
    # flux definition: f_{i,d} - sum_j v_{j,d} mu_ij = 0 ; flux index = N + i*n + d
    cell = np.arange(N)
    ix = np.repeat(np.arange(Nx), Nv)
    for d in range(n):
        vd = np.tile(V[:, d], Nx)
        rows.append(ix * n + d)
        cols.append(cell)
        vals.append(vd)
    flux_rows = np.concatenate(rows)
    flux_cols = np.concatenate(cols)
    flux_vals = np.concatenate(vals)
    F = sp.csr_matrix((flux_vals, (flux_rows, flux_cols)), shape=(Nx * n, N))
    F = sp.hstack([F, -sp.eye(Nx * n)], format="csr")
    mass = sp.hstack([sp.csr_matrix(np.ones((1, N))), sp.csr_matrix((1, Nx * n))], format="csr")
    ks = holonomy_wavevectors(n, K)
    phase = 2.0 * np.pi * (X @ ks.T)  # (Nx, nk)
    C, S = np.cos(phase), np.sin(phase)
    # d/dx sin = k cos, d/dx cos = -k sin (2 pi dropped); each block row couples k.f_i
    blocks = []
    for basis in (C, S):
        M = np.zeros((ks.shape[0], Nx * n))
        for d in range(n):
            M[:, d::n] = (basis * ks[:, d][None, :]).T
        blocks.append(M)
    four = sp.hstack([sp.csr_matrix((2 * len(ks), N)), sp.csr_matrix(np.vstack(blocks))], format="csr")
    return F, mass, four, N, Nx * n


@dataclass
class OccupationMeasure:
    grid: MeasureGrid
    weights: np.ndarray  # (nx^n, nv^n)
    holonomy_residual: np.ndarray
    value: float
    rotation: np.ndarray

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def x_marginal(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    def energy_spread(self, sys: SystemSpec, level: float) -> float:
        """``sum mu |E(x, v) - level|`` over the grid cells."""
        X, V = self.grid.x_nodes, self.grid.v_nodes
        Ux = sys.U(X[:, 0]) if sys.n == 1 else sys.U(X)
        E = 0.5 * sys.m * np.sum(V * V, axis=1)[None, :] + Ux[:, None]
        return float(np.sum(self.weights * np.abs(E - level)))


@dataclass
class AlphaResult:
    c: np.ndarray
    alpha: float
    measure: OccupationMeasure
    K_test: int

    @property
    def rotation(self) -> np.ndarray:
        return self.measure.rotation


@dataclass
class BetaResult:
    h: np.ndarray
    beta: float
    measure: OccupationMeasure
    K_test: int

    @property
    def rotation(self) -> np.ndarray:
        return self.measure.rotation


def _vec(c, n: int) -> np.ndarray:
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if c.shape != (n,):
        raise ValueError(f"expected a vector with {n} components, got {c.shape}")
    return c


def _cell_lagrangian(sys: SystemSpec, grid: MeasureGrid) -> np.ndarray:
    X, V = grid.x_nodes, grid.v_nodes
    Ux = sys.U(X[:, 0]) if sys.n == 1 else sys.U(X)
    return 0.5 * sys.m * np.sum(V * V, axis=1)[None, :] - Ux[:, None]


def _solve(sys, grid, c, h, K_test, backend):
    grid.check_system(sys)
    K = grid.nx // 4 if K_test is None else int(K_test)
    if K < 1:
        raise ValueError("K_test must be at least 1")
    if K > (grid.nx - 1) // 2:
        raise ValueError("K_test must stay below the Nyquist index nx/2")
    F, mass, four, N, nf = _constraint_blocks(grid.n, grid.nx, grid.nv, float(grid.vmax), K)
    Lc = _cell_lagrangian(sys, grid) - (grid.v_nodes @ c)[None, :]
    cost = np.concatenate([Lc.ravel(), np.zeros(nf)])
    blocks = [mass, F, four]
    rhs = [np.ones(1), np.zeros(F.shape[0]), np.zeros(four.shape[0])]
    if h is not None:
        # total flux equals the prescribed rotation vector
        R = sp.csr_matrix(
            (np.ones(nf), (np.tile(np.arange(grid.n), nf // grid.n), N + np.arange(nf))), shape=(grid.n, N + nf)
        )
        blocks.append(R)
        rhs.append(np.asarray(h, dtype=float))
    A = sp.vstack(blocks, format="csr")
    b = np.concatenate(rhs)
    free = np.concatenate([np.zeros(N, dtype=bool), np.ones(nf, dtype=bool)])
    res = solve_lp(cost, A, b, free=free, backend=backend)
    w = np.maximum(res.x[:N], 0.0).reshape(grid.shape)
    V = grid.v_nodes
    flux = w @ V  # (Nx, n)
    ks = holonomy_wavevectors(grid.n, K)
    phase = 2.0 * np.pi * (grid.x_nodes @ ks.T)
    kf = flux @ ks.T  # (Nx, nk): k . f_i
    hol = np.concatenate([np.sum(np.cos(phase) * kf, axis=0), np.sum(np.sin(phase) * kf, axis=0)])
    rot = flux.sum(axis=0)
    value = float(np.sum(w * Lc))
    _check_boundary(grid, w)
    meas = OccupationMeasure(grid, w, hol, value, rot)
    return meas, K


def _check_boundary(grid: MeasureGrid, w: np.ndarray, tol: float = 1e-6) -> None:
    V = grid.v_nodes
    edge = np.any(np.abs(np.abs(V) - grid.vmax) < 1e-12, axis=1)
    m = float(w[:, edge].sum())
    if m > tol:
        raise CutoffError(
            f"minimizing measure puts mass {m:.3g} on the velocity cutoff |v| = {grid.vmax}; increase vmax"
        )


def solve_alpha(sys: SystemSpec, grid: MeasureGrid, c, K_test: int | None = None, backend: str = "highs") -> AlphaResult:
    """Mather's alpha at class ``c`` and one minimizing measure."""
    c = _vec(c, sys.n)
    meas, K = _solve(sys, grid, c, None, K_test, backend)
    return AlphaResult(c, -meas.value, meas, K)


def solve_beta(sys: SystemSpec, grid: MeasureGrid, h, K_test: int | None = None, backend: str = "highs") -> BetaResult:
    """Mather's beta at rotation vector ``h`` (the alpha LP plus a rotation constraint)."""
    h = _vec(h, sys.n)
    if np.any(np.abs(h) >= grid.vmax):
        raise CutoffError(f"|h| must stay below the velocity cutoff {grid.vmax}")
    try:
        meas, K = _solve(sys, grid, np.zeros(sys.n), h, K_test, backend)
    except LPError as exc:
        if exc.status == "infeasible":
            raise CutoffError(f"rotation {h.tolist()} not reachable inside the velocity box") from exc
        raise
    return BetaResult(h, meas.value, meas, K)


def scan_alpha(sys, grid, cs: Sequence, K_test=None, backend="highs", threads: int = 1) -> list[AlphaResult]:
    """``solve_alpha`` over a list of classes, results in input order."""
    def work(c):
        return solve_alpha(sys, grid, c, K_test, backend)

    if threads <= 1:
        return [work(c) for c in cs]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(work, cs))


def scan_beta(sys, grid, hs: Sequence, K_test=None, backend="highs", threads: int = 1) -> list[BetaResult]:
    def work(h):
        return solve_beta(sys, grid, h, K_test, backend)

    if threads <= 1:
        return [work(h) for h in hs]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(work, hs))


# ------------------------------------------------------------------ supports
def measure_support(m: OccupationMeasure, mass_threshold: float = 1e-3) -> frozenset:
    """Smallest set of cells ``(x_index, v_index)`` holding at least ``1 - mass_threshold``."""
    if not (0.0 < mass_threshold < 1.0):
        raise ValueError("mass_threshold must lie in (0, 1)")
    w = m.weights.ravel()
    order = np.argsort(-w, kind="stable")
    cum = np.cumsum(w[order])
    k = int(np.searchsorted(cum, (1.0 - mass_threshold) * cum[-1])) + 1
    Nv = m.weights.shape[1]
    return frozenset((int(i // Nv), int(i % Nv)) for i in order[:k])


def projected_support(cells: Iterable) -> np.ndarray:
    """Sorted x-indices of a cell set (the projected Mather set estimate)."""
    return np.array(sorted({i for i, _ in cells}), dtype=int)


def _cells_mask(grid: MeasureGrid, cells) -> np.ndarray:
    mask = np.zeros(grid.shape, dtype=bool)
    for i, j in cells:
        mask[i, j] = True
    return mask.reshape((grid.nx,) * grid.n + (grid.nv,) * grid.n)


def _dilate(grid: MeasureGrid, mask: np.ndarray, radius: int) -> np.ndarray:
    if radius <= 0:
        return mask
    modes = ["wrap"] * grid.n + ["constant"] * grid.n
    out = ndimage.maximum_filter(mask.astype(np.uint8), size=2 * radius + 1, mode=modes, cval=0)
    return out.astype(bool)


def support_overlap(m1: OccupationMeasure, m2: OccupationMeasure, radius: int = 1, mass_threshold: float = 1e-3) -> float:
    """Symmetrized mass of one measure within ``radius`` cells of the other's support."""
    if m1.grid != m2.grid:
        raise ValueError("measures live on different grids")
    g = m1.grid
    shp = (g.nx,) * g.n + (g.nv,) * g.n

    def one(a, b):
        near = _dilate(g, _cells_mask(g, measure_support(b, mass_threshold)), radius)
        return float(a.weights.reshape(shp)[near].sum())

    return max(one(m1, m2), one(m2, m1))
