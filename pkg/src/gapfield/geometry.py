"""Inclusion/matrix geometry near the contact point.

The matrix boundary and the inclusion boundary are graphs x_n = h(x') and
x_n = eps + h1(x') over the patch |x'| <= 2R, with h1 - h = lambda*|x'|^m to
leading order.  Away from the patch both surfaces close up smoothly; the
closure is parameterized by :class:`OuterDomain` and only needs to be smooth
and fixed across an eps-sweep (see :mod:`gapfield.refsolver.curves`).

All evaluations are pure; geometry objects are treated as immutable and are
safe to share across concurrent solver workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "OutOfPatchError",
    "SingularGeometryError",
    "RadialProfile",
    "FunctionProfile",
    "ZERO_PROFILE",
    "OuterDomain",
    "GapGeometry",
    "HypothesisReport",
    "gap_delta",
    "boundary_normal",
    "in_gap",
    "check_hypotheses",
]


class OutOfPatchError(ValueError):
    """A point was requested outside the graph patch |x'| <= 2R."""


class SingularGeometryError(ValueError):
    """The gap width is non-positive somewhere it must be positive."""


# ---------------------------------------------------------------------------
# Radial profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialProfile:
    """Polynomial radial height profile p(s) = c*s^order + corrections.

    ``correction[j]`` multiplies s**(order+1+j), so every correction term is
    O(s^{m+1}) as required near the contact point.
    """

    leading_coefficient: float
    order: int
    correction: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.leading_coefficient <= 0:
            raise ValueError("leading_coefficient must be positive")
        if self.order < 2:
            raise ValueError("order must be >= 2")
        object.__setattr__(self, "correction", tuple(float(c) for c in self.correction))

    def _powers(self) -> list[tuple[float, int]]:
        terms = [(float(self.leading_coefficient), self.order)]
        terms += [(c, self.order + 1 + j) for j, c in enumerate(self.correction) if c]
        return terms

    def val(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for c, p in self._powers():
            out += c * s**p
        return out if out.ndim else float(out)

    def d1(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for c, p in self._powers():
            out += c * p * s ** (p - 1)
        return out if out.ndim else float(out)

    def d2(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for c, p in self._powers():
            out += c * p * (p - 1) * s ** (p - 2)
        return out if out.ndim else float(out)

    def to_json(self) -> dict:
        return {
            "leading": self.leading_coefficient,
            "order": self.order,
            "correction": list(self.correction),
        }

    @staticmethod
    def from_json(d: dict) -> "RadialProfile":
        return RadialProfile(
            float(d["leading"]), int(d["order"]), tuple(d.get("correction", ()))
        )


class FunctionProfile:
    """Radial profile given by a callable p(s); derivatives by central FD
    unless supplied."""

    def __init__(self, fn: Callable, d1: Callable | None = None, d2: Callable | None = None):
        self._fn = fn
        self._d1 = d1
        self._d2 = d2

    def val(self, s):
        s = np.asarray(s, dtype=float)
        out = np.asarray(self._fn(s), dtype=float)
        return out if out.ndim else float(out)

    def _step(self, s):
        return 1e-6 * np.maximum(np.abs(s), 1e-3)

    def d1(self, s):
        if self._d1 is not None:
            out = np.asarray(self._d1(np.asarray(s, dtype=float)), dtype=float)
            return out if out.ndim else float(out)
        s = np.asarray(s, dtype=float)
        hstep = self._step(s)
        out = (self.val(s + hstep) - self.val(np.maximum(s - hstep, 0.0))) / (
            hstep + np.minimum(s, hstep)
        )
        return out if out.ndim else float(out)

    def d2(self, s):
        if self._d2 is not None:
            out = np.asarray(self._d2(np.asarray(s, dtype=float)), dtype=float)
            return out if out.ndim else float(out)
        s = np.asarray(s, dtype=float)
        hstep = self._step(s)
        sm = np.maximum(s - hstep, 0.0)
        out = (self.val(s + hstep) - 2.0 * self.val(s) + self.val(sm)) / hstep**2
        return out if out.ndim else float(out)


class _ZeroProfile:
    """The flat profile h = 0."""

    def val(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        return out if out.ndim else 0.0

    d1 = val
    d2 = val

    def to_json(self):
        return None


ZERO_PROFILE = _ZeroProfile()


# ---------------------------------------------------------------------------
# Outer-domain closure descriptor
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OuterDomain:
    """Parameters of the smooth closure away from the contact patch.

    Both boundary curves are star-shaped about the common center
    (0', center_height): the matrix boundary blends from the graph x_n = h(x')
    into a sphere of radius ``outer_radius``; the inclusion blends from
    x_n = eps + h1(x') into a cap of radius ``cap_radius``.  ``blend_x`` is the
    |x'| at which blending completes (the graphs are used verbatim up to
    |x'| = 2R and the profile formulas must stay evaluable up to blend_x).
    ``asymmetry`` modulates the outer sphere radius by (1 + a*sin(angle)) away
    from the patch, which breaks the mirror symmetry (used to produce nonzero
    flux functionals for odd boundary data).
    """

    center_height: float
    outer_radius: float
    cap_radius: float
    blend_x: float
    asymmetry: float = 0.0

    def to_json(self) -> dict:
        return {
            "center_height": self.center_height,
            "outer_radius": self.outer_radius,
            "cap_radius": self.cap_radius,
            "blend_x": self.blend_x,
            "asymmetry": self.asymmetry,
        }

    @staticmethod
    def from_json(d: dict) -> "OuterDomain":
        return OuterDomain(
            float(d["center_height"]),
            float(d["outer_radius"]),
            float(d["cap_radius"]),
            float(d["blend_x"]),
            float(d.get("asymmetry", 0.0)),
        )


# ---------------------------------------------------------------------------
# Gap geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GapGeometry:
    """Geometry of an m-convex inclusion at distance eps from the boundary.

    n is the ambient dimension (2, or 3 with rotational symmetry for the
    reference solver), m >= 2 the convexity order.  h/h1 are radial profiles
    of the matrix/inclusion boundary graphs; ``lam`` is the declared leading
    coefficient of h1 - h.
    """

    n: int
    m: int
    epsilon: float
    R: float
    lam: float
    h_profile: object = ZERO_PROFILE
    h1_profile: object | None = None
    kappa1: float | None = None
    kappa2: float | None = None
    outer: OuterDomain | None = None

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"ambient dimension must be >= 2, got {self.n}")
        if self.m < 2:
            raise ValueError(f"convexity order must be >= 2, got {self.m}")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.R <= 0 or self.lam <= 0:
            raise ValueError("R and lambda must be positive")
        if self.epsilon >= 0.5 * self.R:
            raise SingularGeometryError(
                f"gap offset eps={self.epsilon} is not small against R={self.R}"
            )
        if self.h1_profile is None:
            object.__setattr__(
                self, "h1_profile", RadialProfile(self.lam, self.m)
            )
        if self.outer is None:
            object.__setattr__(self, "outer", self._default_outer())
        if self.kappa1 is None or self.kappa2 is None:
            k1, k2 = self._auto_kappas()
            if self.kappa1 is None:
                object.__setattr__(self, "kappa1", k1)
            if self.kappa2 is None:
                object.__setattr__(self, "kappa2", k2)

    # -- closure defaults ---------------------------------------------------

    def _default_outer(self) -> OuterDomain:
        xp = 2.0 * self.R
        blend_x = 1.25 * xp
        s = np.linspace(0.0, blend_x, 257)
        top = float(np.max(self.epsilon + np.asarray(self.h1_profile.val(s))))
        bot = float(np.min(np.asarray(self.h_profile.val(s))))
        yc = top + max(xp, 1.0 * self.R) * 1.25
        return OuterDomain(
            center_height=yc,
            outer_radius=2.2 * (yc - bot),
            cap_radius=0.5 * yc,
            blend_x=blend_x,
        )

    def _auto_kappas(self) -> tuple[float, float]:
        s = np.geomspace(2e-5 * self.R, 2.0 * self.R, 64)
        worst1 = 0.0
        worst2 = 0.0
        for p in (self.h_profile, self.h1_profile):
            d1 = np.abs(np.asarray(p.d1(s)))
            d2 = np.abs(np.asarray(p.d2(s)))
            worst1 = max(
                worst1,
                float(np.max(d1 / s ** (self.m - 1))),
                float(np.max(d2 / s ** (self.m - 2))),
            )
            worst2 = max(worst2, float(np.max(np.abs(np.asarray(p.val(s))))),
                         float(np.max(d1)), float(np.max(d2)))
        return 1.1 * max(worst1, 1e-12), 1.1 * max(worst2, 1e-12)

    # -- point helpers --------------------------------------------------------

    def _radial(self, z_prime) -> float:
        z = np.atleast_1d(np.asarray(z_prime, dtype=float))
        if z.size != self.n - 1:
            raise ValueError(
                f"expected a point in R^{self.n - 1}, got shape {z.shape}"
            )
        return float(np.linalg.norm(z))

    def h(self, s):
        return self.h_profile.val(np.abs(s))

    def h1(self, s):
        return self.h1_profile.val(np.abs(s))

    def delta(self, s):
        """Gap width as a function of the radial coordinate s = |z'|."""
        return self.epsilon + self.h1(s) - self.h(s)

    def to_json(self) -> dict:
        d = {
            "n": self.n,
            "m": self.m,
            "epsilon": self.epsilon,
            "R": self.R,
            "lambda": self.lam,
            "kappa1": self.kappa1,
            "kappa2": self.kappa2,
            "outer": self.outer.to_json(),
        }
        d["h"] = self.h_profile.to_json() if hasattr(self.h_profile, "to_json") else None
        d["h1"] = (
            self.h1_profile.to_json() if hasattr(self.h1_profile, "to_json") else None
        )
        return d

    @staticmethod
    def from_json(d: dict) -> "GapGeometry":
        h = d.get("h")
        h1 = d.get("h1")
        outer = d.get("outer")
        return GapGeometry(
            n=int(d["n"]),
            m=int(d["m"]),
            epsilon=float(d["epsilon"]),
            R=float(d["R"]),
            lam=float(d["lambda"]),
            h_profile=ZERO_PROFILE if h is None else RadialProfile.from_json(h),
            h1_profile=None if h1 is None else RadialProfile.from_json(h1),
            kappa1=d.get("kappa1"),
            kappa2=d.get("kappa2"),
            outer=None if outer is None else OuterDomain.from_json(outer),
        )

    @staticmethod
    def from_json_file(path) -> "GapGeometry":
        with open(path) as f:
            return GapGeometry.from_json(json.load(f))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def gap_delta(geom: GapGeometry, z_prime) -> float:
    """Vertical gap width eps + h1(z') - h(z') above z', for |z'| <= 2R."""
    s = geom._radial(z_prime)
    if s > 2.0 * geom.R * (1.0 + 1e-12):
        raise OutOfPatchError(f"|z'| = {s} exceeds the patch radius {2 * geom.R}")
    d = float(geom.delta(s))
    if d <= 0.0:
        raise SingularGeometryError(f"non-positive gap width {d} at |z'| = {s}")
    return d


def boundary_normal(geom: GapGeometry, x_prime) -> np.ndarray:
    """Unit outward normal of the inclusion boundary above x' (points down
    into the gap: its last component is negative)."""
    z = np.atleast_1d(np.asarray(x_prime, dtype=float))
    s = geom._radial(x_prime)
    if s > geom.R * (1.0 + 1e-12):
        raise OutOfPatchError(f"|x'| = {s} exceeds the patch radius {geom.R}")
    if s == 0.0:
        grad = np.zeros(geom.n - 1)
    else:
        grad = float(geom.h1_profile.d1(s)) * z / s
    nu = np.concatenate([grad, [-1.0]])
    return nu / np.linalg.norm(nu)


def in_gap(geom: GapGeometry, x, t: float) -> bool:
    """True iff x lies strictly inside the gap strip of radius t."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != geom.n:
        raise ValueError(f"expected a point in R^{geom.n}, got shape {x.shape}")
    if t > 2.0 * geom.R * (1.0 + 1e-12):
        raise OutOfPatchError(f"radius t = {t} exceeds the patch radius {2 * geom.R}")
    s = float(np.linalg.norm(x[:-1]))
    if s >= t:
        return False
    return bool(geom.h(s) < x[-1] < geom.epsilon + geom.h1(s))


# ---------------------------------------------------------------------------
# Hypothesis checks
# ---------------------------------------------------------------------------


@dataclass
class HypothesisEntry:
    name: str
    worst: float
    bound: float
    passed: bool
    note: str = ""


@dataclass
class HypothesisReport:
    entries: list[HypothesisEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def __str__(self) -> str:
        lines = []
        for e in self.entries:
            status = "PASS" if e.passed else "FAIL"
            lines.append(
                f"{e.name:32s} worst={e.worst:.6e} bound={e.bound:.6e} {status}"
                + (f"  ({e.note})" if e.note else "")
            )
        return "\n".join(lines)


def check_hypotheses(geom: GapGeometry, sample_count: int = 64) -> HypothesisReport:
    """Verify the structural hypotheses on sampled radii.

    Checks, on a log-spaced radial grid over (0, 2R]:
    the m-convex leading term of h1 - h with an O(s^{m+1}) correction,
    the derivative envelopes |d^i p| <= kappa1 * s^{m-i} (i = 1, 2),
    and the C^2-norm proxy (sup of |p|, |p'|, |p''| and a sampled Hoelder
    quotient of p'') against kappa2.
    """
    if sample_count < 8:
        raise ValueError("need at least 8 samples")
    report = HypothesisReport()
    xp = 2.0 * geom.R
    s = np.geomspace(xp * 1e-5, xp, sample_count)

    # leading-term structure of the gap profile
    diff = np.asarray(geom.h1_profile.val(s)) - np.asarray(geom.h_profile.val(s))
    lam_hat = diff / s**geom.m
    corr_ratio = np.abs(diff - geom.lam * s**geom.m) / s ** (geom.m + 1)
    mid = corr_ratio[sample_count // 3 : 2 * sample_count // 3]
    mid_level = float(np.median(mid))
    divergent = corr_ratio[0] > 4.0 * mid_level + 1e-9 * max(geom.lam, 1.0)
    lam_ok = abs(float(lam_hat[0]) - geom.lam) <= 0.05 * geom.lam
    report.entries.append(
        HypothesisEntry(
            "m-convex leading term",
            worst=float(np.max(corr_ratio)),
            bound=float(4.0 * mid_level + 1e-9),
            passed=bool(lam_ok and not divergent),
            note=f"lambda_hat(s->0)={float(lam_hat[0]):.6g} vs {geom.lam:.6g}",
        )
    )

    # derivative envelopes
    worst_env = 0.0
    for p in (geom.h_profile, geom.h1_profile):
        d1 = np.abs(np.asarray(p.d1(s)))
        d2 = np.abs(np.asarray(p.d2(s)))
        worst_env = max(
            worst_env,
            float(np.max(d1 / s ** (geom.m - 1))),
            float(np.max(d2 / s ** (geom.m - 2))),
        )
    report.entries.append(
        HypothesisEntry(
            "derivative envelope",
            worst=worst_env,
            bound=geom.kappa1,
            passed=bool(worst_env <= geom.kappa1 * (1.0 + 1e-9)),
        )
    )

    # C^2-norm proxy
    worst_c2 = 0.0
    for p in (geom.h_profile, geom.h1_profile):
        v = np.abs(np.asarray(p.val(s)))
        d1 = np.abs(np.asarray(p.d1(s)))
        d2 = np.asarray(p.d2(s))
        hq = np.abs(np.diff(d2)) / np.sqrt(np.diff(s))
        worst_c2 = max(
            worst_c2,
            float(np.max(v)),
            float(np.max(d1)),
            float(np.max(np.abs(d2))),
            float(np.max(hq)) if hq.size else 0.0,
        )
    report.entries.append(
        HypothesisEntry(
            "C2-norm proxy",
            worst=worst_c2,
            bound=geom.kappa2,
            passed=bool(worst_c2 <= geom.kappa2 * (1.0 + 1e-9)),
        )
    )

    # positivity of the gap on the patch
    dmin = float(np.min(geom.delta(np.linspace(0.0, geom.R, 513))))
    report.entries.append(
        HypothesisEntry(
            "gap positivity (min delta vs eps)",
            worst=dmin,
            bound=geom.epsilon * (1.0 - 1e-12),
            passed=bool(dmin >= geom.epsilon * (1.0 - 1e-12)),
        )
    )
    return report
