"""Closed-form ground truth for one-degree-of-freedom mechanical systems.

For ``H(x, p) = p^2/(2m) + U(x)`` on the circle every quantity of interest
reduces to one-dimensional quadratures over the potential:

* ``c* = int_0^1 sqrt(2m (max U - U))``, the half-width of the flat part of alpha;
* ``c+(E) = int_0^1 sqrt(2m (E - U))`` for ``E >= max U``, inverted by bisection;
* ``alpha(c) = max U`` on ``[-c*, c*]`` and ``E+(|c|)`` outside;
* ``alpha'(c) = 1 / T(E)`` with ``T(E) = int_0^1 m / sqrt(2m (E - U))``.

The flat value is ``max U`` (a rest point at a maximum of U is an invariant
measure with action ``-max U``).  ``normalized=True`` subtracts it, the
convention in which the flat part sits at zero.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate

from .dynamics import FourierPotential, SystemSpec

FLAT_INTERIOR = "FlatInterior"
EXTREME_NOT_EXPOSED = "ExtremeNotExposed"
EXPOSED = "Exposed"


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleSpec:
    potential: FourierPotential = field(default_factory=lambda: FourierPotential.pendulum())
    m: float = 1.0
    qtol: float = 1e-10
    rtol: float = 1e-12

    def __post_init__(self):
        if self.potential.n != 1:
            raise ValueError("the closed-form oracle is one-dimensional")
        if not self.m > 0:
            raise ValueError("m must be positive")

    @classmethod
    def from_system(cls, sys: SystemSpec, **kw) -> "PendulumOracle":
        return PendulumOracle(cls(sys.potential, sys.m, **kw))


class PendulumOracle:
    """Quadrature/root-finding oracle bound to one :class:`OracleSpec`."""

    def __init__(self, spec: OracleSpec | None = None):
        self.spec = spec or OracleSpec()
        self.U = self.spec.potential
        self.m = self.spec.m

    # ---------------------------------------------------------------- maxima
    @cached_property
    def _argmax(self) -> tuple[float, np.ndarray]:
        n = 4096
        t = np.arange(n) / n
        vals = self.U(t)
        vmax = vals.max()
        if np.ptp(vals) < 1e-14:
            return float(vmax), np.array([0.0])
        # candidate local maxima near the global one, polished by Newton
        cand = np.flatnonzero((vals >= np.roll(vals, 1)) & (vals >= np.roll(vals, -1)))
        roots = []
        for i in cand:
            x = t[i]
            for _ in range(50):
                g = float(self.U.grad(x))
                h = float(self.U.second_derivative(x))
                if h >= 0:
                    break
                step = g / h
                x -= step
                if abs(step) < 1e-15:
                    break
            roots.append(x % 1.0)
        roots = np.array(roots)
        umax = float(self.U(roots).max())
        keep = roots[self.U(roots) >= umax - 1e-12]
        keep = np.unique(np.round(keep, 12))
        return umax, np.sort(keep)

    @property
    def max_u(self) -> float:
        return self._argmax[0]

    @property
    def argmax_u(self) -> np.ndarray:
        """Points of the circle where U attains its maximum (the set C)."""
        return self._argmax[1]

    # ---------------------------------------------------------- quadratures
    def _integrate(self, f) -> float:
        """Integral over one period, split at the maxima of U and started at one of them."""
        x0 = float(self.argmax_u[0])
        pts = np.sort(np.mod(self.argmax_u - x0, 1.0))
        edges = np.unique(np.concatenate([pts, [1.0]]))
        if edges[0] > 0:
            edges = np.concatenate([[0.0], edges])
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            val, err = integrate.quad(
                lambda s: f(s + x0), a, b, epsabs=self.spec.qtol, epsrel=self.spec.qtol, limit=500
            )
            if not math.isfinite(val):
                raise OracleError("quadrature did not converge")
            total += val
        return total

    def c_plus(self, E: float) -> float:
        """Average momentum on the energy level E >= max U (velocity branch v > 0)."""
        if E < self.max_u - 1e-12:
            raise ValueError("energy level below max U does not carry a rotational orbit")
        m = self.m
        return self._integrate(lambda s: math.sqrt(max(2.0 * m * (E - float(self.U(s))), 0.0)))

    @cached_property
    def c_star(self) -> float:
        return self.c_plus(self.max_u)

    def period(self, E: float) -> float:
        """Time to go once around the circle on the level E > max U."""
        if E <= self.max_u:
            return math.inf
        m = self.m
        return self._integrate(lambda s: m / math.sqrt(2.0 * m * (E - float(self.U(s)))))

    def rotation(self, E: float) -> float:
        T = self.period(E)
        return 0.0 if math.isinf(T) else 1.0 / T

    def E_plus(self, c: float) -> float:
        """Energy level with ``c+(E) = |c|`` by bisection, for ``|c| >= c*``."""
        c = abs(float(c))
        if c < self.c_star - self.spec.rtol:
            raise ValueError("c lies in the flat part; no rotational level matches it")
        lo = self.max_u
        hi = self.max_u + (c + 1.0) ** 2 / (2.0 * self.m)
        for _ in range(100):
            if self.c_plus(hi) >= c:
                break
            hi = self.max_u + 2.0 * (hi - self.max_u)
        else:
            raise OracleError("could not bracket E+(c)")
        while hi - lo > self.spec.rtol * max(1.0, abs(hi)):
            mid = 0.5 * (lo + hi)
            if self.c_plus(mid) < c:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    # ---------------------------------------------------------------- alpha
    def alpha(self, c: float, normalized: bool = False) -> float:
        shift = self.max_u if normalized else 0.0
        if abs(c) <= self.c_star:
            return self.max_u - shift
        return self.E_plus(c) - shift

    def alpha_slope(self, c: float) -> float:
        """Derivative of alpha: ``sign(c) / T(E+(c))`` outside the flat part, 0 inside."""
        if abs(c) <= self.c_star:
            return 0.0
        return math.copysign(self.rotation(self.E_plus(c)), c)

    def beta(self, h: float, normalized: bool = False) -> float:
        """Conjugate of alpha: ``beta(0) = -max U`` and ``c h - E`` on the level with rotation |h|."""
        shift = -self.max_u if normalized else 0.0
        h = abs(float(h))
        if h == 0.0:
            return -self.max_u - shift
        lo, hi = self.max_u, self.max_u + 1.0
        while self.rotation(hi) < h:
            hi = self.max_u + 2.0 * (hi - self.max_u)
        while hi - lo > self.spec.rtol * max(1.0, hi):
            mid = 0.5 * (lo + hi)
            if self.rotation(mid) < h:
                lo = mid
            else:
                hi = mid
        E = 0.5 * (lo + hi)
        return self.c_plus(E) * h - E - shift

    # ------------------------------------------------------- weak KAM data
    def weak_kam_derivative(self, c: float, nx: int) -> np.ndarray:
        """du at the nodes i/nx of the classical solution, ``|c| >= c*`` only."""
        if abs(c) < self.c_star - self.spec.rtol:
            raise ValueError("no classical solution: |c| < c*, the weak KAM solution is not C^1")
        E = self.E_plus(c)
        x = np.arange(nx) / nx
        p = np.sqrt(np.maximum(2.0 * self.m * (E - self.U(x)), 0.0))
        return math.copysign(1.0, c) * p - c

    def weak_kam_solution(self, c: float, nx: int) -> np.ndarray:
        """u at the nodes, obtained by integrating du exactly by quadrature; u(0) = 0."""
        if abs(c) < self.c_star - self.spec.rtol:
            raise ValueError("no classical solution: |c| < c*, the weak KAM solution is not C^1")
        E = self.E_plus(c)
        sgn = math.copysign(1.0, c)
        m = self.m

        def du(s):
            return sgn * math.sqrt(max(2.0 * m * (E - float(self.U(s))), 0.0)) - c

        x = np.arange(nx) / nx
        u = np.zeros(nx)
        with warnings.catch_warnings():
            # cells touching a maximum of U at E = max U have a square-root cusp
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            for i in range(1, nx):
                val, _ = integrate.quad(du, x[i - 1], x[i], epsabs=self.spec.qtol, epsrel=self.spec.qtol)
                u[i] = u[i - 1] + val
        return u

    def aubry_projection(self, c: float) -> np.ndarray | None:
        """Projected Aubry set: the maxima of U for ``|c| < c*``; None means the whole circle."""
        if abs(c) < self.c_star - self.spec.rtol:
            return self.argmax_u
        return None

    def classify(self, c: float) -> str:
        cs = self.c_star
        if cs <= self.spec.rtol:
            return EXPOSED
        d = abs(c) - cs
        if abs(d) <= self.spec.rtol * max(1.0, cs):
            return EXTREME_NOT_EXPOSED
        return FLAT_INTERIOR if d < 0 else EXPOSED


def jacobi_distance(oracle: PendulumOracle, x: float, y: float) -> float:
    """Shorter-arc length between x and y in the metric ``sqrt(2m (max U - U)) |dx|``."""
    m, umax = oracle.m, oracle.max_u

    def f(s):
        return math.sqrt(max(2.0 * m * (umax - float(oracle.U(s))), 0.0))

    a, b = sorted((x % 1.0, y % 1.0))
    inner, _ = integrate.quad(f, a, b, epsabs=1e-12, epsrel=1e-12, limit=200)
    return min(inner, oracle.c_star - inner)


def c_star(spec: OracleSpec) -> float:
    return PendulumOracle(spec).c_star


def alpha_closed(spec: OracleSpec, c: float, normalized: bool = False) -> float:
    return PendulumOracle(spec).alpha(c, normalized=normalized)


def weak_kam_closed(spec: OracleSpec, c: float, nx: int) -> np.ndarray:
    return PendulumOracle(spec).weak_kam_derivative(c, nx)


def classify_closed(spec: OracleSpec, c: float) -> str:
    return PendulumOracle(spec).classify(c)
