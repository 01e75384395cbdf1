"""Closed-form performance bounds in the (Ps, Ps*F) plane.

A protocol's performance is the pair (success probability Ps, average
singlet fraction F). Mixing two protocols is linear in (Ps, Ps*F), so all
geometry below lives in that plane and F is recovered as a derived view.

Functions taking ``Ps`` accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES


def _power(base, exponent):
    """base**exponent for base in [0, 1], computed in log space; 0**e is 0 for e > 0."""
    base = np.asarray(base, dtype=float)
    with np.errstate(divide="ignore"):
        logs = np.log(base)
    if exponent == 0:
        out = np.ones_like(base)
    else:
        out = np.where(base > 0, np.exp(exponent * logs), 0.0 if exponent > 0 else np.inf)
    return out if out.ndim else float(out)


def _check_T(T: float) -> None:
    if not 0.0 < T < 1.0:
        raise ValueError(f"T must lie in (0, 1), got {T!r}")


def _check_u(u: float) -> None:
    if not 0.0 < u <= 1.0:
        raise ValueError(f"overlap magnitude must lie in (0, 1], got {u!r}")


@dataclass(frozen=True)
class PerformancePoint:
    """Success probability and average singlet fraction; F is None when Ps == 0."""

    Ps: float
    F: float | None

    def __post_init__(self):
        if not -1e-12 <= self.Ps <= 1.0 + 1e-12:
            raise ValueError(f"Ps must lie in [0, 1], got {self.Ps!r}")
        if self.F is None and self.Ps > 0:
            raise ValueError("F is required when Ps > 0")

    @property
    def vacuous(self) -> bool:
        return self.F is None

    @property
    def plane(self) -> tuple[float, float]:
        return (self.Ps, 0.0 if self.F is None else self.Ps * self.F)

    @classmethod
    def from_plane(cls, x: float, y: float) -> "PerformancePoint":
        if x == 0:
            return cls(0.0, None)
        return cls(x, y / x)


VACUOUS = PerformancePoint(0.0, None)


@dataclass(frozen=True)
class TriangleBound:
    """Region of the (Ps, Ps*F) plane reachable at fixed overlap u and transmittance T."""

    X0: tuple[float, float]
    X1: tuple[float, float]
    X2: tuple[float, float]
    X3: tuple[float, float]
    u: float
    T: float

    def margin(self, point: tuple[float, float] | PerformancePoint) -> float:
        """Signed distance into the triangle X0 X1 X2; negative means outside.

        For a degenerate triangle (X1 on the segment X0 X2) the margin is minus
        the distance to that segment.
        """
        p = np.asarray(point.plane if isinstance(point, PerformancePoint) else point, dtype=float)
        verts = [np.asarray(v, dtype=float) for v in (self.X0, self.X1, self.X2)]
        area2 = _cross(verts[1] - verts[0], verts[2] - verts[0])
        if abs(area2) < 1e-15:
            return -_segment_distance(p, verts[0], verts[2])
        orient = 1.0 if area2 > 0 else -1.0
        margins = []
        for a, b in ((verts[0], verts[1]), (verts[1], verts[2]), (verts[2], verts[0])):
            edge = b - a
            margins.append(orient * _cross(edge, p - a) / np.hypot(*edge))
        return float(min(margins))

    def contains(self, point, tol: float = DEFAULT_TOLERANCES.geometry) -> bool:
        return self.margin(point) >= -tol


def _cross(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def _segment_distance(p, a, b) -> float:
    ab = b - a
    t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
    return float(np.hypot(*(p - (a + t * ab))))


def fidelity_cap(u: float, T: float) -> float:
    """Largest average singlet fraction compatible with Bob's overlap u."""
    _check_u(u)
    _check_T(T)
    return 0.5 * (1.0 + _power(u, (1.0 - T) / T))


def triangle(u: float, T: float) -> TriangleBound:
    _check_u(u)
    _check_T(T)
    x1 = 1.0 - u
    return TriangleBound(
        X0=(0.0, 0.0),
        X1=(x1, x1 * fidelity_cap(u, T)),
        X2=(1.0, 0.5),
        X3=(1.0 - u * u, 0.5 * (1.0 - u * u)),
        u=u,
        T=T,
    )


def g_polynomial(Ps, z0: float, zs: float, u: float):
    """Quadratic in Ps that is non-negative for every realizable protocol.

    z0 is the z-component of Alice's initial memory marginal and zs the
    success-averaged z-component after Bob's measurement.
    """
    Ps = np.asarray(Ps, dtype=float)
    out = Ps ** 2 * (1.0 - zs ** 2) - 2.0 * Ps * (1.0 - z0 * zs) + (1.0 - u ** 2) * (1.0 - z0 ** 2)
    return out if out.ndim else float(out)


def success_cap(u: float, zs: float) -> float:
    """Upper limit on Ps given the success-averaged memory z-component zs."""
    return (1.0 - u * u) / (1.0 + u * math.sqrt(max(0.0, 1.0 - zs * zs)))


def tradeoff_max_PsF(Ps, u: float, T: float):
    """Upper bound on Ps*F along the line through X1 and X3.

    Written as Ps/2 + w (1 - u^2 - Ps)/2 with w = u^((1-2T)/T); this form avoids
    the cancellation between two large terms when w is big (small u, T > 1/2).
    """
    _check_u(u)
    _check_T(T)
    w = _power(u, (1.0 - 2.0 * T) / T)
    Ps = np.asarray(Ps, dtype=float)
    out = 0.5 * Ps + 0.5 * w * (1.0 - u * u - Ps)
    return out if out.ndim else float(out)


def f_sym(Ps, T: float):
    """Singlet fraction reached by the symmetric protocol at success probability Ps."""
    _check_T(T)
    Ps = np.asarray(Ps, dtype=float)
    out = 0.5 * (1.0 + _power(np.clip(1.0 - Ps, 0.0, 1.0), (1.0 - T) / T))
    return out if np.ndim(out) else float(out)


def ps_star(T: float) -> float | None:
    """Tangent point T/(1-T) of the optimal envelope; None when T >= 1/2 (no kink)."""
    _check_T(T)
    return T / (1.0 - T) if T < 0.5 else None


def f_opt(Ps, T: float):
    """Tight upper envelope of the average singlet fraction at transmittance T."""
    _check_T(T)
    sym = f_sym(Ps, T)
    kink = ps_star(T)
    if kink is None:
        return sym
    Ps = np.asarray(Ps, dtype=float)
    expo = (1.0 - T) / T
    # line from the tangent point to X2, written as F = 1/2 + slope_term (1 - Ps) / Ps
    slope_term = 0.5 * T / (1.0 - 2.0 * T) * math.exp(expo * math.log((1.0 - 2.0 * T) / (1.0 - T)))
    with np.errstate(divide="ignore", invalid="ignore"):
        linear = 0.5 + slope_term * (1.0 - Ps) / Ps
    out = np.where(Ps > kink, linear, sym)
    return out if out.ndim else float(out)


def fsym_curve_derivatives(Ps, T: float):
    """First and second derivatives of Ps * f_sym(Ps) with respect to Ps (Ps < 1)."""
    _check_T(T)
    Ps = np.asarray(Ps, dtype=float)
    rest = 1.0 - Ps
    first = 0.5 * (1.0 + (1.0 - Ps / T) * _power(rest, (1.0 - 2.0 * T) / T))
    second = 0.5 * (1.0 - T) / T * (Ps / T - 2.0) * _power(rest, (1.0 - 3.0 * T) / T)
    if np.ndim(first) == 0:
        return float(first), float(second)
    return first, second


def mix(p1: PerformancePoint, p2: PerformancePoint, r: float) -> PerformancePoint:
    """Run p1 with probability r and p2 otherwise."""
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"mixing weight must lie in [0, 1], got {r!r}")
    x1, y1 = p1.plane
    x2, y2 = p2.plane
    return PerformancePoint.from_plane(r * x1 + (1 - r) * x2, r * y1 + (1 - r) * y2)


def upper_convex_hull(points: Sequence[Sequence[float]] | np.ndarray) -> np.ndarray:
    """Upper boundary of the convex hull, as vertices sorted by abscissa.

    Monotone chain over the points reduced to the highest ordinate per
    abscissa; collinear interior points are dropped.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValueError("need at least two plane points")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    xs, first = np.unique(pts[:, 0], return_index=True)
    ys = np.maximum.reduceat(pts[:, 1], first)

    hull: list[tuple[float, float]] = []
    for x, y in zip(xs.tolist(), ys.tolist()):
        while len(hull) >= 2:
            (ox, oy), (ax, ay) = hull[-2], hull[-1]
            if (ax - ox) * (y - oy) - (ay - oy) * (x - ox) >= 0:
                hull.pop()
            else:
                break
        hull.append((x, y))
    return np.array(hull)


def hull_ordinate(hull: np.ndarray, x):
    """Height of the hull polyline at abscissa x."""
    return np.interp(x, hull[:, 0], hull[:, 1])
