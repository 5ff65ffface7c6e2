"""Mañé potential on a circle grid via shortest paths in an action graph.

Nodes are the points ``x_i = i/nx``; each node has out-edges to its
neighbours ``i +- 1, ..., i +- Hmax``.  The edge cost is the least twisted
action of a chord over all travel times,

    w(i -> j) = min_tau  tau (m (d/tau)^2 / 2 - Ubar + alpha) - c d,

so shortest paths approximate ``phi(x, y)`` once ``alpha`` is critical.
Below the critical value some cycle has negative cost; bisecting on the
presence of such cycles gives an independent estimate of alpha.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import shortest_path

from .dynamics import SystemSpec


class NegativeCycleError(RuntimeError):
    """alpha is below the critical value: a cycle of negative action exists."""

    def __init__(self, alpha: float, cycle: list, cost: float, duration: float):
        self.alpha = alpha
        self.cycle = cycle
        self.cost = cost
        self.duration = duration
        self.mean_action = cost / duration if duration > 0 else -math.inf
        super().__init__(
            f"alpha {alpha:.12g} below critical value: cycle of {len(cycle)} edges has action {cost:.3g} "
            f"over time {duration:.3g} (mean {self.mean_action:.3g})"
        )


@dataclass(frozen=True)
class ManeParams:
    nx: int = 256
    hmax: int = 3
    tau_min: float | None = None  # default 0.1 / (nx * vmax)
    tau_max: float = 50.0
    tau_points: int = 40
    tau_cap: float = 1e4
    vmax: float = 4.0
    quadrature: str = "simpson"  # or "departure"
    eps_aubry: float | None = None  # default 5 / nx^2

    def __post_init__(self):
        if self.nx < 16:
            raise ValueError("nx must be at least 16")
        if self.hmax < 1 or 2 * self.hmax >= self.nx:
            raise ValueError("hop limit must satisfy 1 <= Hmax < nx/2")
        if self.quadrature not in ("simpson", "departure"):
            raise ValueError("quadrature must be 'simpson' or 'departure'")

    def tau_grid(self) -> np.ndarray:
        lo = self.tau_min if self.tau_min is not None else 0.1 / (self.nx * self.vmax)
        return np.geomspace(lo, self.tau_max, self.tau_points)

    @property
    def aubry_threshold(self) -> float:
        return self.eps_aubry if self.eps_aubry is not None else 5.0 / self.nx**2


@dataclass
class ActionGraph:
    nx: int
    c: float
    alpha: float
    offsets: np.ndarray  # (2H,) hop offsets
    weight: np.ndarray  # (2H, nx): cost of edge i -> i + offsets[k]
    tau: np.ndarray  # (2H, nx): optimal travel time of each edge
    boundary_hits: int  # edges whose optimum still sits at the extended tau cap

    def edges(self):
        src = np.tile(np.arange(self.nx), len(self.offsets))
        dst = (src + np.repeat(self.offsets, self.nx)) % self.nx
        return src, dst, self.weight.ravel(), self.tau.ravel()

    def matrix(self) -> sp.csr_matrix:
        s, d, w, _ = self.edges()
        # explicit zeros would be dropped as missing edges; nudge them
        w = np.where(w == 0.0, 1e-300, w)
        return sp.csr_matrix((w, (s, d)), shape=(self.nx, self.nx))


def _edge_cost(tau, d, Ubar, alpha, c, m):
    return tau * (0.5 * m * (d / tau) ** 2 - Ubar + alpha) - c * d


def build_action_graph(sys: SystemSpec, c: float, alpha: float, params: ManeParams) -> ActionGraph:
    """Edge costs minimized over the travel time.

    The coarse geometric grid locates a bracket for each edge, the bracket is
    widened while the minimizer sits on an end of the grid (up to
    ``tau_cap``), and golden-section search finishes the job; the cost is
    convex in ``tau``, so the search converges to the true minimum.
    """
    if sys.n != 1:
        raise ValueError("Mañé potentials are computed on the circle (n = 1)")
    nx, H = params.nx, params.hmax
    x = np.arange(nx) / nx
    offsets = np.concatenate([np.arange(-H, 0), np.arange(1, H + 1)])
    U = sys.potential
    W = np.empty((len(offsets), nx))
    T = np.empty_like(W)
    hits = 0
    grid = params.tau_grid()
    ratio = grid[1] / grid[0]
    for r, k in enumerate(offsets):
        d = k / nx
        if params.quadrature == "simpson":
            Ub = (U(x) + 4.0 * U(x + 0.5 * d) + U(x + d)) / 6.0
        else:
            Ub = U(x)
        g = grid.copy()
        while True:
            vals = _edge_cost(g[:, None], d, Ub[None, :], alpha, c, sys.m)
            j = np.argmin(vals, axis=0)
            top = j == len(g) - 1
            bot = j == 0
            if top.any() and g[-1] < params.tau_cap:
                g = np.concatenate([g, g[-1] * ratio ** np.arange(1, 9)])
                g = g[g <= params.tau_cap * (1 + 1e-12)]
                if g[-1] < params.tau_cap:
                    g = np.append(g, params.tau_cap)
                continue
            if bot.any() and g[0] > 1e-12:
                g = np.concatenate([g[0] / ratio ** np.arange(8, 0, -1), g])
                continue
            break
        lo = g[np.maximum(j - 1, 0)]
        hi = g[np.minimum(j + 1, len(g) - 1)]
        hits += int(np.sum(j == len(g) - 1))
        # golden-section refinement on [lo, hi], vectorized over the nodes
        gr = (math.sqrt(5.0) - 1.0) / 2.0
        a, b = lo.copy(), hi.copy()
        c1 = b - gr * (b - a)
        c2 = a + gr * (b - a)
        f1 = _edge_cost(c1, d, Ub, alpha, c, sys.m)
        f2 = _edge_cost(c2, d, Ub, alpha, c, sys.m)
        for _ in range(80):
            left = f1 < f2
            a, b = np.where(left, a, c1), np.where(left, c2, b)
            c1n = np.where(left, b - gr * (b - a), c2)
            c2n = np.where(left, c1, a + gr * (b - a))
            c1, c2 = c1n, c2n
            f1 = _edge_cost(c1, d, Ub, alpha, c, sys.m)
            f2 = _edge_cost(c2, d, Ub, alpha, c, sys.m)
        tb = 0.5 * (a + b)
        cand = np.stack([tb, lo, hi, g[j]])
        cv = _edge_cost(cand, d, Ub[None, :], alpha, c, sys.m)
        best = np.argmin(cv, axis=0)
        W[r] = cv[best, np.arange(nx)]
        T[r] = cand[best, np.arange(nx)]
    return ActionGraph(nx, float(c), float(alpha), offsets, W, T, hits)


def find_negative_cycle(g: ActionGraph):
    """Bellman-Ford from a virtual source; returns ``None`` or ``(cycle, cost, duration)``."""
    nx, offs = g.nx, g.offsets
    dist = np.zeros(nx)
    pred = np.full(nx, -1)
    # in-edges of node j come from j - k with weight weight[k, j - k]
    srcs = (np.arange(nx)[None, :] - offs[:, None]) % nx
    win = g.weight[np.arange(len(offs))[:, None], srcs]
    last = -1
    for _ in range(nx + 1):
        cand = dist[srcs] + win
        k = np.argmin(cand, axis=0)
        best = cand[k, np.arange(nx)]
        upd = best < dist - 1e-14 * (1.0 + np.abs(dist))
        if not upd.any():
            return None
        dist = np.where(upd, best, dist)
        pred = np.where(upd, srcs[k, np.arange(nx)], pred)
        last = int(np.flatnonzero(upd)[0])
    v = last
    for _ in range(nx):
        v = int(pred[v])
    cycle = [v]
    u = int(pred[v])
    while u != v:
        cycle.append(u)
        u = int(pred[u])
    cycle = cycle[::-1]
    cost = dur = 0.0
    for a, b in zip(cycle, cycle[1:] + cycle[:1]):
        off = ((b - a + nx // 2) % nx) - nx // 2
        r = int(np.flatnonzero(offs == off)[0])
        cost += g.weight[r, a]
        dur += g.tau[r, a]
    return cycle, cost, dur


@dataclass
class PotentialMatrix:
    c: float
    alpha: float
    phi: np.ndarray  # phi[i, j] ~ potential from x_i to x_j; diagonal holds loop values
    loops: np.ndarray

    @property
    def nx(self) -> int:
        return len(self.loops)


def mane_potential_matrix(sys: SystemSpec, c: float, alpha: float, params: ManeParams | None = None) -> PotentialMatrix:
    """All-pairs potential at ``alpha``; raises :class:`NegativeCycleError` below criticality."""
    params = params or ManeParams()
    g = build_action_graph(sys, c, alpha, params)
    neg = find_negative_cycle(g)
    if neg is not None:
        raise NegativeCycleError(alpha, *neg)
    D = shortest_path(g.matrix(), method="J", directed=True)
    s, d, w, _ = g.edges()
    loops = np.full(g.nx, np.inf)
    np.minimum.at(loops, s, w + D[d, s])
    phi = D.copy()
    np.fill_diagonal(phi, loops)
    return PotentialMatrix(float(c), float(alpha), phi, loops)


def symmetrized_distance(pm: PotentialMatrix) -> np.ndarray:
    return pm.phi + pm.phi.T


def has_negative_cycle(sys: SystemSpec, c: float, alpha: float, params: ManeParams) -> bool:
    return find_negative_cycle(build_action_graph(sys, c, alpha, params)) is not None


def critical_value_probe(
    sys: SystemSpec, c: float, params: ManeParams | None = None, tol: float = 1e-10, bracket=None
) -> float:
    """Smallest alpha (to ``tol``) at which the graph has no negative cycle."""
    params = params or ManeParams()
    if bracket is None:
        umax, umin = sys.potential.extrema()
        lo = umin - 1.0
        hi = umax + c * c / (2.0 * sys.m) + 1.0
    else:
        lo, hi = bracket
    while has_negative_cycle(sys, c, hi, params):
        hi += 2.0 * (hi - lo)
    while not has_negative_cycle(sys, c, lo, params):
        lo -= 2.0 * (hi - lo)
    while hi - lo > tol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if has_negative_cycle(sys, c, mid, params):
            lo = mid
        else:
            hi = mid
    return hi


@dataclass
class AubryEstimate:
    indices: np.ndarray
    loops: np.ndarray
    alpha: float
    threshold: float
    matrix: PotentialMatrix

    @property
    def fraction(self) -> float:
        return len(self.indices) / len(self.loops)


def projected_aubry_estimate(
    sys: SystemSpec, c: float, alpha: float | None = None, params: ManeParams | None = None
) -> AubryEstimate:
    """Nodes whose cheapest nontrivial loop costs less than ``eps_aubry``.

    With ``alpha=None`` the critical value is located by the negative-cycle
    probe first, which makes the loop criterion insensitive to small errors
    in an externally supplied alpha.
    """
    params = params or ManeParams()
    a = critical_value_probe(sys, c, params) if alpha is None else float(alpha)
    pm = mane_potential_matrix(sys, c, a, params)
    thr = params.aubry_threshold
    return AubryEstimate(np.flatnonzero(pm.loops < thr), pm.loops, a, thr, pm)
