"""Diagnostics for sampled convex functions of one real parameter.

The profiles handled here are samples of alpha along a cohomology line or of
beta along a homology line.  Everything works on the sorted samples directly:
the Legendre-Fenchel transform is computed from the lower convex hull, and
subdifferentials come from one-sided slopes at the nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .pendulum import EXPOSED, EXTREME_NOT_EXPOSED, FLAT_INTERIOR


class NonConvexError(ValueError):
    """Raised when samples violate convexity by more than the tolerance."""

    def __init__(self, index: int, excess: float):
        super().__init__(f"samples are not convex at index {index} (slope decrease {excess:.3g})")
        self.index = index
        self.excess = excess


def _one_sided_quadratic(t0, t1, t2, f0, f1, f2) -> float:
    """Derivative at t0 of the quadratic through three points (any spacing)."""
    d1, d2 = t1 - t0, t2 - t0
    # Lagrange basis derivatives evaluated at t0
    w0 = -(d1 + d2) / (d1 * d2)
    w1 = d2 / (d1 * (d2 - d1))
    w2 = -d1 / (d2 * (d2 - d1))
    return w0 * f0 + w1 * f1 + w2 * f2


@dataclass
class ConvexProfile:
    """Sorted samples ``(t_i, f_i)`` of a convex function with node slopes.

    ``slope_method`` decides how the one-sided slopes at the nodes are built:

    * ``"richardson"`` (default): the one-sided quadratic through three
      samples, clipped into the bracket allowed by convexity;
    * ``"secant"``: the adjacent secants, exact for piecewise-linear data;
    * ``"given"``: both one-sided slopes taken from ``slopes``.
    """

    t: np.ndarray
    f: np.ndarray
    slope_method: str = "richardson"
    slopes: np.ndarray | None = None
    tol: float = 1e-6
    left: np.ndarray = field(init=False, repr=False)
    right: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if t.ndim != 1 or t.shape != f.shape or len(t) < 3:
            raise ValueError("need at least three samples in matching 1-d arrays")
        order = np.argsort(t, kind="stable")
        t, f = t[order], f[order]
        if np.any(np.diff(t) <= 0):
            raise ValueError("sample parameters must be distinct")
        self.t, self.f = t, f
        sec = self.secants
        dec = np.diff(sec)
        if len(dec) and dec.min() < -self.tol:
            i = int(np.argmin(dec))
            raise NonConvexError(i + 1, float(-dec[i]))
        if self.slope_method == "given":
            if self.slopes is None:
                raise ValueError("slope_method='given' needs slopes")
            s = np.asarray(self.slopes, dtype=float)[order]
            self.left, self.right = s.copy(), s.copy()
        elif self.slope_method == "secant":
            self.left = np.concatenate([[sec[0]], sec])
            self.right = np.concatenate([sec, [sec[-1]]])
        elif self.slope_method == "richardson":
            self.left, self.right = self._richardson(sec)
        else:
            raise ValueError(f"unknown slope_method {self.slope_method!r}")

    def _richardson(self, sec):
        t, f, N = self.t, self.f, len(self.t)
        left = np.empty(N)
        right = np.empty(N)
        for i in range(N):
            lo = sec[i - 1] if i > 0 else -np.inf
            hi = sec[i] if i < N - 1 else np.inf
            # next to an end there is one sample short for a one-sided
            # fit; the centred quadratic is the best available there
            if i >= 2:
                est = _one_sided_quadratic(t[i], t[i - 1], t[i - 2], f[i], f[i - 1], f[i - 2])
            elif i == 1:
                est = _one_sided_quadratic(t[1], t[0], t[2], f[1], f[0], f[2])
            else:
                est = sec[0]
            left[i] = np.clip(est, lo, hi)
            if i <= N - 3:
                est = _one_sided_quadratic(t[i], t[i + 1], t[i + 2], f[i], f[i + 1], f[i + 2])
            elif i == N - 2:
                est = _one_sided_quadratic(t[i], t[i + 1], t[i - 1], f[i], f[i + 1], f[i - 1])
            else:
                est = sec[N - 2]
            right[i] = np.clip(est, max(lo, left[i]), hi)
        return left, right

    @property
    def secants(self) -> np.ndarray:
        return np.diff(self.f) / np.diff(self.t)

    @property
    def spacing(self) -> float:
        return float(np.max(np.diff(self.t)))

    def node_slope(self) -> np.ndarray:
        return 0.5 * (self.left + self.right)

    def __len__(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class SubdifferentialInterval:
    t: float
    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, s: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= s <= self.hi + tol


@dataclass(frozen=True)
class FlatSegment:
    """Maximal run of samples on which the profile is affine within ``flat_tol``."""

    i0: int
    i1: int
    t0: float
    t1: float
    slope: float
    is_constant: bool


@dataclass(frozen=True)
class PointClass:
    label: str
    segment: FlatSegment | None = None


# --------------------------------------------------------------------- hull
def lower_hull(t: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Indices of the vertices of the lower convex hull of sorted points."""
    idx: list[int] = []
    for i in range(len(t)):
        while len(idx) >= 2:
            a, b = idx[-2], idx[-1]
            # drop b when it lies on or above the chord a -> i
            cross = (t[b] - t[a]) * (f[i] - f[a]) - (f[b] - f[a]) * (t[i] - t[a])
            if cross <= 0:
                idx.pop()
            else:
                break
        idx.append(i)
    return np.array(idx)


def convex_envelope(p: ConvexProfile) -> np.ndarray:
    """Lower convex envelope of the samples, evaluated at the sample nodes."""
    h = lower_hull(p.t, p.f)
    return np.interp(p.t, p.t[h], p.f[h])


def default_dual_grid(p: ConvexProfile, n: int | None = None) -> np.ndarray:
    """Hull secant slopes, a uniform grid between them, and 0 when it is in range."""
    h = lower_hull(p.t, p.f)
    sec = np.diff(p.f[h]) / np.diff(p.t[h])
    n = n or 4 * len(p)
    lo, hi = sec[0], sec[-1]
    if hi - lo <= 1e-6 * (1.0 + abs(lo)):
        # (nearly) affine data would leave a single dual node after the
        # near-duplicate filtering below; the conjugate is finite everywhere,
        # so pick a unit margin
        lo, hi = lo - 1.0, hi + 1.0
    extra = np.linspace(lo, hi, n)
    if lo < 0 < hi:
        extra = np.concatenate([extra, [0.0]])
    # keep exact hull slopes; drop uniform nodes that nearly duplicate one
    knots = np.unique(sec)
    if len(knots) > 1:
        # nearly equal hull slopes make the conjugate's secants ill-conditioned
        keep = np.concatenate([[True], np.diff(knots) > 1e-9 * (1.0 + np.abs(knots[1:]))])
        knots = knots[keep]
    gap = 1e-7 * (1.0 + np.abs(extra))
    pos = np.clip(np.searchsorted(knots, extra), 1, len(knots) - 1) if len(knots) > 1 else np.zeros(len(extra), int)
    near = np.minimum(np.abs(extra - knots[pos]), np.abs(extra - knots[pos - 1]) if len(knots) > 1 else np.inf)
    return np.unique(np.concatenate([knots, extra[near > gap]]))


def conjugate_values(t: np.ndarray, f: np.ndarray, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``max_i (s t_i - f_i)`` for each sorted ``s`` and the maximizing index.

    Only hull vertices can maximize, and the maximizer moves monotonically to
    the right as ``s`` increases, so a merge of the sorted dual nodes with the
    sorted hull secants finds every argmax in linear time.
    """
    h = lower_hull(t, f)
    sec = np.diff(f[h]) / np.diff(t[h])
    s = np.asarray(s, dtype=float)
    arg = np.empty(len(s), dtype=int)
    j = 0
    for k, sk in enumerate(s):
        while j < len(sec) and sec[j] < sk:
            j += 1
        arg[k] = h[j]
    return s * t[arg] - f[arg], arg


def discrete_conjugate(p: ConvexProfile, dual_grid=None) -> ConvexProfile:
    """Legendre-Fenchel transform of the samples on ``dual_grid`` (sorted)."""
    s = default_dual_grid(p) if dual_grid is None else np.sort(np.asarray(dual_grid, dtype=float))
    vals, _ = conjugate_values(p.t, p.f, s)
    return ConvexProfile(s, vals, slope_method="secant", tol=max(p.tol, 1e-9))


def biconjugate(p: ConvexProfile, dual_grid=None) -> np.ndarray:
    q = discrete_conjugate(p, dual_grid)
    vals, _ = conjugate_values(q.t, q.f, p.t)
    return vals


# ---------------------------------------------------------- subdifferential
def _cluster(p: ConvexProfile, t: float, atol: float) -> tuple[int, int] | None:
    near = np.flatnonzero(np.abs(p.t - t) <= atol)
    if len(near) == 0:
        return None
    return int(near[0]), int(near[-1])


def subdifferential_at(p: ConvexProfile, t: float, atol: float = 1e-6) -> SubdifferentialInterval:
    """Interval of supporting slopes at ``t`` (interior of the sample range).

    Nodes closer than ``atol`` to ``t`` are merged, so a cluster of nearly
    coincident dual nodes reports the slopes on either side of the cluster.
    Between nodes the profile is treated as an affine interpolant.
    """
    if not (p.t[0] < t < p.t[-1]):
        raise ValueError(f"t={t} is outside the interior of the sample range")
    cl = _cluster(p, t, atol)
    if cl is None:
        j = int(np.searchsorted(p.t, t)) - 1
        sl = p.secants[j]
        return SubdifferentialInterval(float(t), float(sl), float(sl))
    a, b = cl
    lo = p.left[a]
    hi = p.right[b]
    return SubdifferentialInterval(float(t), float(min(lo, hi)), float(max(lo, hi)))


# ----------------------------------------------------------- flat segments
def flat_segments(p: ConvexProfile, flat_tol: float = 1e-3, min_secants: int = 2) -> list[FlatSegment]:
    """Maximal runs of consecutive secants whose slopes differ by at most ``flat_tol``."""
    sec = p.secants
    out: list[FlatSegment] = []
    i = 0
    n = len(sec)
    while i < n:
        j = i
        lo = hi = sec[i]
        while j + 1 < n and max(hi, sec[j + 1]) - min(lo, sec[j + 1]) <= flat_tol:
            j += 1
            lo, hi = min(lo, sec[j]), max(hi, sec[j])
        if j - i + 1 >= min_secants:
            slope = (p.f[j + 1] - p.f[i]) / (p.t[j + 1] - p.t[i])
            out.append(
                FlatSegment(i, j + 1, float(p.t[i]), float(p.t[j + 1]), float(slope), bool(abs(slope) <= flat_tol))
            )
        i = j + 1
    return out


def classify_point(p: ConvexProfile, t: float, flat_tol: float = 1e-3, margin: int = 2) -> PointClass:
    """Exposed / extreme-not-exposed / flat-interior label for a parameter value.

    With samples the endpoints of an affine segment are only known to within
    one sample spacing, so any ``t`` that close to an endpoint is reported as
    extreme but not exposed.
    """
    if not (p.t[margin] <= t <= p.t[-1 - margin]):
        raise ValueError(f"t={t} needs at least {margin} samples of margin on both sides")
    segs = flat_segments(p, flat_tol)
    h = p.spacing
    for seg in segs:
        if seg.t0 - h <= t <= seg.t1 + h:
            if min(abs(t - seg.t0), abs(t - seg.t1)) <= h:
                return PointClass(EXTREME_NOT_EXPOSED, seg)
            return PointClass(FLAT_INTERIOR, seg)
    return PointClass(EXPOSED, None)


# ------------------------------------------------------ differentiability
@dataclass
class DifferentiabilityReport:
    slope_tol: float
    kinks: list  # (t, width) where the subdifferential is at least slope_tol wide
    differentiable: bool
    strictly_convex: bool
    segments: list
    conjugate_kinks: list
    conjugate_differentiable: bool
    cross_check_pass: bool


def _kinks(p: ConvexProfile, slope_tol: float, atol: float = 1e-6) -> list[tuple[float, float]]:
    out = []
    i = 1
    N = len(p)
    while i < N - 1:
        j = i
        while j + 1 < N - 1 and p.t[j + 1] - p.t[i] <= atol:
            j += 1
        width = p.right[j] - p.left[i]
        if width >= slope_tol:
            out.append((float(0.5 * (p.t[i] + p.t[j])), float(width)))
        i = j + 1
    return out


def differentiability_scan(
    p: ConvexProfile, slope_tol: float | None = None, flat_tol: float = 1e-3
) -> DifferentiabilityReport:
    """Kinks of p, its strictness, and the matching check on its conjugate.

    The conjugate of a strictly convex function is differentiable and vice
    versa; the report recomputes both sides from the same samples and states
    whether they agree.  ``slope_tol`` defaults to five sample spacings, the
    largest slope jump the conjugate of exact samples can show without a
    genuine affine piece being present.
    """
    if slope_tol is None:
        slope_tol = 5.0 * p.spacing
    kinks = _kinks(p, slope_tol)
    segs = flat_segments(p, flat_tol)
    q = discrete_conjugate(p)
    qk = _kinks(q, slope_tol)
    strictly = len(segs) == 0
    qdiff = len(qk) == 0
    return DifferentiabilityReport(
        slope_tol=float(slope_tol),
        kinks=kinks,
        differentiable=len(kinks) == 0,
        strictly_convex=strictly,
        segments=segs,
        conjugate_kinks=qk,
        conjugate_differentiable=qdiff,
        cross_check_pass=(strictly == qdiff),
    )


# -------------------------------------------------------- gradient inverse
@dataclass
class GradientInverseReport:
    max_deviation: float
    tested: int
    skipped_out_of_range: int
    skipped_nondifferentiable: int


def _slope_at(p: ConvexProfile, t: float, atol: float = 1e-6) -> tuple[float, float]:
    """(slope, width) at t: node slopes interpolated linearly between nodes."""
    cl = _cluster(p, t, atol)
    if cl is not None:
        a, b = cl
        return 0.5 * (p.left[a] + p.right[b]), p.right[b] - p.left[a]
    mid = p.node_slope()
    return float(np.interp(t, p.t, mid)), 0.0


def gradient_inverse_check(
    pa: ConvexProfile, pb: ConvexProfile, slope_tol: float | None = None, atol: float = 1e-6
) -> GradientInverseReport:
    """Round trip ``c -> h = alpha'(c) -> beta'(h)`` compared with the identity."""
    if slope_tol is None:
        slope_tol = 5.0 * max(pa.spacing, pb.spacing)
    dev = 0.0
    tested = out = nd = 0
    for i in range(1, len(pa) - 1):
        if pa.right[i] - pa.left[i] >= slope_tol:
            nd += 1
            continue
        h = 0.5 * (pa.left[i] + pa.right[i])
        if not (pb.t[0] < h < pb.t[-1]):
            out += 1
            continue
        sb, wb = _slope_at(pb, h, atol)
        if wb >= slope_tol:
            nd += 1
            continue
        dev = max(dev, abs(sb - pa.t[i]))
        tested += 1
    return GradientInverseReport(float(dev), tested, out, nd)


# ---------------------------------------------------------------- C0 report
@dataclass
class C0Verdict:
    verdict: str  # "Blocked", "C0-consistent" or "Fails-at"
    failing: list
    threshold: float | None
    reason: str


def c0_report(n: int, b1: int, aubry_fullness: Mapping[float, float], nx: int) -> C0Verdict:
    """C0-integrability verdict from per-class Aubry coverage fractions."""
    if not aubry_fullness:
        raise ValueError("aubry_fullness is empty")
    if b1 != n:
        return C0Verdict("Blocked", [], None, f"first Betti number {b1} differs from dimension {n}")
    thr = 1.0 - 2.0 / nx
    failing = sorted(float(c) for c, frac in aubry_fullness.items() if frac < thr)
    if failing:
        return C0Verdict("Fails-at", failing, thr, "projected Aubry set misses part of the torus")
    return C0Verdict("C0-consistent", [], thr, "projected Aubry set covers the torus at every scanned class")
