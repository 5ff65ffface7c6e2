"""Discrete Lax-Oleinik semigroups on the circle and weak KAM fixed points.

One negative step over time ``tau`` is the min-plus convolution

    (T u)(x_i) = min_{|j - i| <= W} u(x_j) + A_tau(x_j -> x_i) - c (x_i - x_j)

where ``A_tau`` approximates the action of the straight chord traversed in
time ``tau``.  The positive step is the max-plus mirror.  Fixed points are
found by damped iteration, since plain min-plus iteration can cycle with a
period larger than one on grids.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import SystemSpec

NEGATIVE = "negative"
POSITIVE = "positive"
QUADRATURES = ("departure", "midpoint", "simpson", "corrected")


class WindowError(RuntimeError):
    """A minimizing index sits on the edge of the search window."""


class ConvergenceError(RuntimeError):
    def __init__(self, span: float, iters: int, partial: "ValueFunction | None" = None):
        super().__init__(f"fixed-point iteration stopped after {iters} steps with span {span:.3g}")
        self.span = span
        self.iters = iters
        self.partial = partial


@dataclass(frozen=True)
class SemigroupConfig:
    """Step parameters.

    ``window=None`` picks ``ceil(vmax * tau * nx)`` offsets, enough for every
    chord with speed up to ``vmax``.  ``quadrature`` selects how the potential
    is averaged along a chord: ``"departure"`` samples the start point,
    ``"midpoint"`` the middle, ``"simpson"`` uses Simpson's rule, and
    ``"corrected"`` adds to Simpson the leading curvature term
    ``tau^2 |U'|^2 / (24 m)`` by which the true extremal beats the chord.
    """

    tau: float = 0.1
    window: int | None = None
    vmax: float = 4.0
    span_tol: float = 1e-10
    max_iters: int = 20000
    damping: float = 0.5
    quadrature: str = "corrected"

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.window is not None and self.window < 1:
            raise ValueError("window must be at least 1")
        if not self.span_tol > 0:
            raise ValueError("span_tol must be positive")
        if not (0 < self.damping <= 1):
            raise ValueError("damping must lie in (0, 1]")
        if self.quadrature not in QUADRATURES:
            raise ValueError(f"quadrature must be one of {QUADRATURES}")

    def window_for(self, nx: int) -> int:
        W = self.window if self.window is not None else int(math.ceil(self.vmax * self.tau * nx))
        if 2 * W >= nx:
            raise ValueError(
                f"window {W} reaches half the circle (nx={nx}); the nearest lift would be ambiguous"
            )
        return W


@dataclass(frozen=True)
class ValueFunction:
    samples: np.ndarray
    c: float
    alpha_estimate: float = float("nan")
    sign: str = NEGATIVE
    iters: int = 0
    span: float = float("nan")

    @property
    def nx(self) -> int:
        return len(self.samples)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) / self.nx

    def __add__(self, a: float) -> "ValueFunction":
        return replace(self, samples=self.samples + a)

    def normalized(self) -> "ValueFunction":
        return replace(self, samples=self.samples - self.samples.min())

    def derivative(self) -> np.ndarray:
        """Centered difference quotient."""
        u = self.samples
        return (np.roll(u, -1) - np.roll(u, 1)) * (self.nx / 2.0)


@dataclass
class ConjugatePair:
    u_minus: ValueFunction
    u_plus: ValueFunction
    gap: np.ndarray  # u_minus - u_plus shifted so that its minimum is 0

    def coincidence(self, eps_set: float) -> np.ndarray:
        return self.gap < eps_set


# --------------------------------------------------------------- step kernels
def _chord_potential(sys: SystemSpec, x0: np.ndarray, d: np.ndarray, tau: float, rule: str) -> np.ndarray:
    U = sys.potential
    if rule == "departure":
        return U(x0)
    if rule == "midpoint":
        return U(x0 + 0.5 * d)
    avg = (U(x0) + 4.0 * U(x0 + 0.5 * d) + U(x0 + d)) / 6.0
    if rule == "simpson":
        return avg
    g = U.grad(x0 + 0.5 * d)
    return avg + tau**2 * g * g / (24.0 * sys.m)


@dataclass(frozen=True)
class _Kernel:
    src: np.ndarray  # (nx, 2W+1) source index for each target and offset
    cost: np.ndarray  # (nx, 2W+1) action of the chord
    W: int


def _kernel(sys: SystemSpec, nx: int, c: float, cfg: SemigroupConfig, sign: str, W: int) -> _Kernel:
    if sys.n != 1:
        raise ValueError("Lax-Oleinik steps are implemented on the circle (n = 1)")
    x = np.arange(nx) / nx
    offs = np.arange(-W, W + 1)
    d = offs / nx  # displacement from source to target (negative) or target to source (positive)
    tau = cfg.tau
    i = np.arange(nx)[:, None]
    if sign == NEGATIVE:
        src = (i - offs[None, :]) % nx
        x0 = x[src]
        Ubar = _chord_potential(sys, x0, np.broadcast_to(d, x0.shape), tau, cfg.quadrature)
        cost = tau * (0.5 * sys.m * (d / tau) ** 2 - Ubar) - c * d
    elif sign == POSITIVE:
        src = (i + offs[None, :]) % nx
        x0 = np.broadcast_to(x[:, None], src.shape)
        Ubar = _chord_potential(sys, x0, np.broadcast_to(d, x0.shape), tau, cfg.quadrature)
        cost = tau * (0.5 * sys.m * (d / tau) ** 2 - Ubar) - c * d
    else:
        raise ValueError("sign must be 'negative' or 'positive'")
    return _Kernel(src, cost, W)


def _apply(k: _Kernel, u: np.ndarray, sign: str, check: bool = True) -> np.ndarray:
    if sign == NEGATIVE:
        vals = u[k.src] + k.cost
        arg = np.argmin(vals, axis=1)
    else:
        vals = u[k.src] - k.cost
        arg = np.argmax(vals, axis=1)
    if check and (np.any(arg == 0) or np.any(arg == 2 * k.W)):
        raise WindowError(f"optimal chord reaches the window edge W={k.W}")
    return vals[np.arange(len(u)), arg]


def lax_oleinik_step(sys: SystemSpec, u: ValueFunction, c: float, cfg: SemigroupConfig, sign: str = NEGATIVE) -> ValueFunction:
    """One undamped semigroup step of duration ``cfg.tau``."""
    nx = u.nx
    k = _kernel(sys, nx, float(c), cfg, sign, cfg.window_for(nx))
    return replace(u, samples=_apply(k, np.asarray(u.samples, float), sign), c=float(c), sign=sign)


def brute_force_step(sys: SystemSpec, u: np.ndarray, c: float, cfg: SemigroupConfig, sign: str = NEGATIVE) -> np.ndarray:
    """Reference implementation of one step by explicit loops (slow; for tests)."""
    nx = len(u)
    W = cfg.window_for(nx)
    out = np.empty(nx)
    for i in range(nx):
        best = math.inf if sign == NEGATIVE else -math.inf
        for off in range(-W, W + 1):
            d = off / nx
            if sign == NEGATIVE:
                j = (i - off) % nx
                x0 = j / nx
            else:
                j = (i + off) % nx
                x0 = i / nx
            Ub = float(_chord_potential(sys, np.array(x0), np.array(d), cfg.tau, cfg.quadrature))
            a = cfg.tau * (0.5 * sys.m * (d / cfg.tau) ** 2 - Ub) - c * d
            if sign == NEGATIVE:
                best = min(best, u[j] + a)
            else:
                best = max(best, u[j] - a)
        out[i] = best
    return out


# ------------------------------------------------------------ fixed points
def weak_kam_fixed_point(
    sys: SystemSpec, c: float, cfg: SemigroupConfig, u0: ValueFunction | np.ndarray, sign: str = NEGATIVE
) -> tuple[ValueFunction, float]:
    """Iterate ``u <- theta T u + (1 - theta) u`` until the increment is constant.

    The increment of the damped map at a fixed point of ``T + alpha tau`` is
    ``-theta tau alpha`` for the negative semigroup and ``+theta tau alpha``
    for the positive one, which gives the alpha estimate.  A window hit
    doubles the window once per occurrence and is recorded in the result.
    """
    u = np.array(u0.samples if isinstance(u0, ValueFunction) else u0, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("initial function must be finite")
    nx = len(u)
    W = cfg.window_for(nx)
    k = _kernel(sys, nx, float(c), cfg, sign, W)
    th = cfg.damping
    span = math.inf
    inc = np.zeros(nx)
    for it in range(1, cfg.max_iters + 1):
        try:
            Tu = _apply(k, u, sign)
        except WindowError:
            W2 = min(2 * W, (nx - 1) // 2)
            if W2 == W:
                raise
            W = W2
            k = _kernel(sys, nx, float(c), cfg, sign, W)
            Tu = _apply(k, u, sign)
        un = th * Tu + (1.0 - th) * u
        inc = un - u
        span = float(inc.max() - inc.min())
        u = un - un.min()
        if span <= cfg.span_tol:
            break
    else:
        partial = ValueFunction(u, float(c), _alpha_from(inc, cfg, sign), sign, cfg.max_iters, span)
        raise ConvergenceError(span, cfg.max_iters, partial)
    a = _alpha_from(inc, cfg, sign)
    return ValueFunction(u, float(c), a, sign, it, span), a


def _alpha_from(inc: np.ndarray, cfg: SemigroupConfig, sign: str) -> float:
    s = float(inc.mean()) / (cfg.tau * cfg.damping)
    return -s if sign == NEGATIVE else s


def conjugate_solution(sys: SystemSpec, u_minus: ValueFunction, c: float, cfg: SemigroupConfig) -> ConjugatePair:
    """Positive fixed point reached from ``u_minus``, paired and aligned with it."""
    u_plus, _ = weak_kam_fixed_point(sys, c, cfg, u_minus, POSITIVE)
    gap = u_minus.samples - u_plus.samples
    shift = gap.min()
    u_plus = replace(u_plus, samples=u_plus.samples + shift)
    return ConjugatePair(u_minus, u_plus, gap - shift)


def coincidence_set(pair: ConjugatePair, eps_set: float) -> np.ndarray:
    """Indices where the aligned pair agrees to within ``eps_set``."""
    return np.flatnonzero(pair.gap < eps_set)


def random_seed_function(nx: int, rng: np.random.Generator, modes: int = 4, scale: float = 0.2) -> np.ndarray:
    """Smooth random periodic function with Fourier coefficients decaying like 1/k^2."""
    x = np.arange(nx) / nx
    u = np.zeros(nx)
    for k in range(1, modes + 1):
        a, b = rng.normal(size=2) * scale / k**2
        u += a * np.cos(2 * np.pi * k * x) + b * np.sin(2 * np.pi * k * x)
    return u


@dataclass
class SetEstimates:
    mane: np.ndarray
    aubry: np.ndarray
    pairs: list = field(default_factory=list)
    skipped: list = field(default_factory=list)  # (seed index, message)


def default_eps_set(nx: int) -> float:
    """Coincidence threshold; the u-/u+ gap on the Aubry set shrinks like the squared spacing."""
    return 40.0 / nx**2


def mane_aubry_estimates(
    sys: SystemSpec,
    c: float,
    cfg: SemigroupConfig,
    num_seeds: int,
    nx: int = 256,
    eps_set: float | None = None,
    rng_seed: int = 0,
) -> SetEstimates:
    """Union and intersection of coincidence sets over randomly seeded pairs.

    Seeds whose iteration fails to converge are skipped and listed in the
    result; if every seed fails the last error is raised.
    """
    if num_seeds < 1:
        raise ValueError("num_seeds must be at least 1")
    if eps_set is None:
        eps_set = default_eps_set(nx)
    rng = np.random.default_rng(rng_seed)
    union = np.zeros(nx, dtype=bool)
    inter = np.ones(nx, dtype=bool)
    pairs, skipped = [], []
    last = None
    for s in range(num_seeds):
        u0 = np.zeros(nx) if s == 0 else random_seed_function(nx, rng)
        try:
            um, _ = weak_kam_fixed_point(sys, c, cfg, u0, NEGATIVE)
            pair = conjugate_solution(sys, um, c, cfg)
        except ConvergenceError as exc:
            skipped.append((s, str(exc)))
            last = exc
            continue
        mask = pair.coincidence(eps_set)
        union |= mask
        inter &= mask
        pairs.append(pair)
    if not pairs:
        raise last
    return SetEstimates(np.flatnonzero(union), np.flatnonzero(inter), pairs, skipped)


# --------------------------------------------------------------- residuals
def hj_residual_profile(sys: SystemSpec, u: ValueFunction, c: float, alpha: float | None = None) -> np.ndarray:
    """Per-node ``min over {left, right, centered}`` of ``|H(x, c + Du) - alpha|``."""
    a = u.alpha_estimate if alpha is None else alpha
    s = u.samples
    nx = u.nx
    Dp = (np.roll(s, -1) - s) * nx
    Dm = (s - np.roll(s, 1)) * nx
    Dc = 0.5 * (Dp + Dm)
    x = u.x
    res = [np.abs(sys.hamiltonian(x, c + D) - a) for D in (Dp, Dm, Dc)]
    return np.min(np.stack(res), axis=0)


def hj_residual(sys: SystemSpec, u: ValueFunction, c: float, alpha: float | None = None) -> float:
    return float(hj_residual_profile(sys, u, c, alpha).max())


def derivative_kinks(u: ValueFunction, stencil: int = 4, jump_tol: float = 4.0) -> np.ndarray:
    """Positions where the derivative of u has a corner.

    The slope of ``du`` is estimated on each side of a node over ``stencil``
    cells; where the jump between the two exceeds ``jump_tol`` the node is
    flagged, and runs of adjacent flagged nodes are reported once, at the
    position of their largest jump.
    """
    du = u.derivative()
    k, nx = stencil, u.nx
    right = (np.roll(du, -k) - du) * nx / k
    left = (du - np.roll(du, k)) * nx / k
    J = right - left
    flag = np.abs(J) > jump_tol
    if not flag.any():
        return np.array([])
    if flag.all():
        return np.array([u.x[int(np.argmax(np.abs(J)))]])
    # rotate so that the scan starts outside a flagged run
    start = int(np.flatnonzero(~flag)[0])
    order = (start + np.arange(nx)) % nx
    out, run = [], []
    for i in order:
        if flag[i]:
            run.append(i)
        elif run:
            out.append(run[int(np.argmax(np.abs(J[run])))])
            run = []
    if run:
        out.append(run[int(np.argmax(np.abs(J[run])))])
    return np.sort(u.x[np.array(out)])
