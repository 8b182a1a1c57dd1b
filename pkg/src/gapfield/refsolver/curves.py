"""Closed boundary curves for the reference solver.

Both boundaries are star-shaped about the common center (0, yc):

* matrix boundary: the graph x_n = h(x') for |x'| <= 2R, blended (C^2, quintic
  smoothstep in angle) into a sphere of radius ``outer_radius``;
* inclusion boundary: the graph x_n = eps + h1(x') for |x'| <= 2R, blended into
  a cap of radius ``cap_radius``.

Angles tau are measured from the downward vertical at the center, direction
d(tau) = (sin tau, -cos tau), so tau = 0 points at the contact patch.  The
same construction serves the planar case (tau in (-pi, pi]) and the
axisymmetric meridian (tau in [0, pi]).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..geometry import GapGeometry, SingularGeometryError

__all__ = ["smoothstep", "CurvePair"]


def smoothstep(u):
    """Quintic C^2 smoothstep: 0 for u <= 0, 1 for u >= 1."""
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10.0 + u * (-15.0 + 6.0 * u))


class _StarCurve:
    """One star-shaped closed curve: graph part + blend + cap."""

    def __init__(self, graph_fn, yc: float, x_patch: float, x_blend: float,
                 target_fn, label: str):
        self.graph = graph_fn
        self.yc = yc
        self.target = target_fn
        self.label = label
        self.tau_patch = self._graph_angle(x_patch)
        self.tau_blend = self._graph_angle(x_blend)
        if not 0.0 < self.tau_patch < self.tau_blend < 0.45 * np.pi:
            raise SingularGeometryError(
                f"{label}: blend window [{self.tau_patch:.3f}, {self.tau_blend:.3f}] "
                "is not inside (0, 0.45*pi); raise the closure center"
            )

    def _graph_angle(self, x: float) -> float:
        y = float(self.graph(x))
        if y >= self.yc:
            raise SingularGeometryError(
                f"{self.label}: graph height {y} at |x'|={x} reaches the closure "
                f"center height {self.yc}"
            )
        return float(np.arctan2(x, self.yc - y))

    def _graph_radius(self, tau: float) -> float:
        # solve yc - rho*cos(tau) = graph(rho*sin(tau)) for rho
        c, s = np.cos(tau), np.sin(tau)

        def f(rho):
            return self.yc - rho * c - float(self.graph(rho * s))

        hi = 4.0 * self.yc / max(c, 1e-3)
        return float(brentq(f, 1e-9 * self.yc, hi, xtol=1e-14 * self.yc, rtol=8.9e-16))

    def radius(self, tau: float) -> float:
        """Polar radius about the center; tau may be any value in (-pi, pi]."""
        a = abs(float(tau))
        if a <= self.tau_patch:
            return self._graph_radius(tau)
        if a >= self.tau_blend:
            return float(self.target(tau))
        w = smoothstep((a - self.tau_patch) / (self.tau_blend - self.tau_patch))
        return (1.0 - w) * self._graph_radius(tau) + w * float(self.target(tau))

    def point(self, tau: float) -> np.ndarray:
        r = self.radius(tau)
        return np.array([r * np.sin(tau), self.yc - r * np.cos(tau)])


@dataclass
class CurvePair:
    """The two closed boundary curves for a geometry (optionally with the
    gap offset overridden, e.g. to zero for the touching domain)."""

    geom: GapGeometry
    eps_eff: float
    outer: _StarCurve
    inner: _StarCurve
    yc: float

    @staticmethod
    def build(geom: GapGeometry, eps_override: float | None = None) -> "CurvePair":
        od = geom.outer
        eps = geom.epsilon if eps_override is None else float(eps_override)
        if eps < 0.0:
            raise ValueError("gap offset cannot be negative")
        yc = od.center_height
        xp = 2.0 * geom.R

        def h_graph(x):
            return geom.h(x)

        def h1_graph(x):
            return eps + geom.h1(x)

        ramp_lo = None  # set after outer tau_blend is known

        def outer_target(tau):
            base = od.outer_radius
            if od.asymmetry:
                w = smoothstep((abs(tau) - ramp_lo) / max(0.5 * (np.pi - ramp_lo), 1e-9))
                base = base * (1.0 + od.asymmetry * np.sin(tau) * w)
            return base

        outer = _StarCurve(h_graph, yc, xp, od.blend_x, outer_target, "matrix boundary")
        ramp_lo = outer.tau_blend
        inner = _StarCurve(
            h1_graph, yc, xp, od.blend_x, lambda tau: od.cap_radius, "inclusion boundary"
        )
        pair = CurvePair(geom=geom, eps_eff=eps, outer=outer, inner=inner, yc=yc)
        pair._validate()
        return pair

    def _validate(self) -> None:
        taus = np.linspace(-np.pi, np.pi, 721)
        gap = np.array([self.outer.radius(t) - self.inner.radius(t) for t in taus])
        floor = 0.5 * self.eps_eff if self.eps_eff > 0 else -1e-12
        if np.min(gap) < floor:
            raise SingularGeometryError(
                "closure curves intersect: min radial separation "
                f"{np.min(gap):.3e} (at tau={taus[np.argmin(gap)]:.3f})"
            )
        if self.inner.target(np.pi) >= self.outer.target(np.pi):
            raise SingularGeometryError("inclusion cap radius reaches the outer sphere")

    def center(self) -> np.ndarray:
        return np.array([0.0, self.yc])

    def angle_of(self, pt) -> float:
        """Angle tau of an ambient meridian/planar point about the center."""
        d = np.asarray(pt, dtype=float) - self.center()
        return float(np.arctan2(d[0], -d[1]))
