"""Closed-form blow-up rates, special-function constants and regime selection.

Everything in this module is exact arithmetic on top of the Gamma function:
rate powers are stored as rational epsilon-exponents plus an integer power of
|ln eps| so that fitted slopes can be compared against exact targets without
floating-point drift in the target itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING

if TYPE_CHECKING:  # pragma: no cover
    from .auxfields import BoundaryData

__all__ = [
    "RatePower",
    "RegimeCase",
    "rho",
    "gamma_const",
    "sphere_factor",
    "remainder_rate",
    "remainder_rate_odd",
    "classify",
]


@dataclass(frozen=True)
class RatePower:
    """A factor of the form eps**p * |ln eps|**q with exact exponents.

    ``epsilon_exponent`` is a rational number, ``log_exponent`` an integer.
    Multiplication/division act on the exponents exactly; ``value`` evaluates
    the factor at a concrete eps in (0, 1).
    """

    epsilon_exponent: Fraction
    log_exponent: int = 0

    def value(self, eps: float) -> float:
        if not 0.0 < eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {eps}")
        v = eps ** float(self.epsilon_exponent)
        if self.log_exponent:
            v *= abs(math.log(eps)) ** self.log_exponent
        return v

    def __mul__(self, other: "RatePower") -> "RatePower":
        return RatePower(
            self.epsilon_exponent + other.epsilon_exponent,
            self.log_exponent + other.log_exponent,
        )

    def __truediv__(self, other: "RatePower") -> "RatePower":
        return RatePower(
            self.epsilon_exponent - other.epsilon_exponent,
            self.log_exponent - other.log_exponent,
        )

    def __str__(self) -> str:
        parts = []
        if self.epsilon_exponent:
            parts.append(f"eps^({self.epsilon_exponent})")
        if self.log_exponent:
            parts.append(f"|ln eps|^{self.log_exponent}")
        return " * ".join(parts) if parts else "1"

    def to_json(self) -> dict:
        return {
            "eps_exponent_num": self.epsilon_exponent.numerator,
            "eps_exponent_den": self.epsilon_exponent.denominator,
            "log_exponent": self.log_exponent,
        }


ONE = RatePower(Fraction(0), 0)
LOG = RatePower(Fraction(0), 1)
INV_LOG = RatePower(Fraction(0), -1)


@dataclass(frozen=True)
class RegimeCase:
    """Which asymptotic branch applies for given (n, m, boundary data)."""

    theorem: str  # "T1.1" (k-order growth data) or "T1.4" (odd data)
    branch: str  # "i", "ii" or "iii"
    boundary_kind: str  # "S1" or "S2"
    k: int | None = None
    odd_index: int | None = None
    tie: bool = False  # m sits exactly on a branch threshold


def _check_nm(n: int, m: int) -> None:
    if n < 2 or m < 2:
        raise ValueError(f"need n >= 2 and m >= 2, got n={n}, m={m}")
    if n != int(n) or m != int(m):
        raise ValueError("n and m must be integers")


def rho(n: int, m: int, i: int, eps: float) -> tuple[RatePower, float]:
    """Blow-up rate rho_i(n, m; eps).

    Returns (symbolic power, numeric value):
    eps^{(n+i-1)/m - 1} when m > n+i-1, |ln eps| when m = n+i-1, 1 otherwise.
    """
    _check_nm(n, m)
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    a = n + i - 1
    if m > a:
        power = RatePower(Fraction(a, m) - 1)
    elif m == a:
        power = LOG
    else:
        power = ONE
    return power, power.value(eps)


def gamma_const(n: int, m: int, i: int) -> float:
    """Gamma-product constant: Gamma(1-s) * Gamma(s) with s = (n+i-1)/m.

    Defined for m >= n+i-1 only; equals 1 at the threshold m = n+i-1.
    """
    _check_nm(n, m)
    a = n + i - 1
    if m < a:
        raise ValueError(f"gamma_const undefined for m < n+i-1 (m={m}, n+i-1={a})")
    if m == a:
        return 1.0
    s = a / m
    return math.gamma(1.0 - s) * math.gamma(s)


def sphere_factor(n: int) -> float:
    """The radial-integral factor (n-1)*omega_{n-1}.

    Normalized so that for radial f on R^{n-1},
    integral over |x'| < R of f(|x'|) dx'  =  sphere_factor(n) * int_0^R f(s) s^{n-2} ds,
    i.e. the surface measure of the unit sphere in R^{n-1}:
    2 for n=2, 2*pi for n=3, 4*pi for n=4, ...
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    d = n - 1  # dimension of the x' space
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _max_power(p1: RatePower, p2: RatePower, eps: float) -> tuple[RatePower, float]:
    # For pure powers with eps < 1 the larger value has the smaller exponent,
    # so the selection is eps-independent.
    chosen = p1 if p1.epsilon_exponent <= p2.epsilon_exponent else p2
    return chosen, chosen.value(eps)


def remainder_rate(n: int, m: int, k: int, eps: float) -> tuple[RatePower, float]:
    """Relative remainder r_eps for the k-order growth data (six-case table)."""
    _check_nm(n, m)
    if k <= 1:
        raise ValueError(f"growth order k must exceed 1, got {k}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if m > n + k:
        power = RatePower(Fraction(1, m))
    elif m == n + k:
        power = RatePower(Fraction(1, m), 1)
    elif m == n + k - 1:
        power = INV_LOG
    elif n - 1 < m < n + k - 1:
        power = RatePower(Fraction(n + k - 1 - m, (n + k - 1) * (m + 1)))
    elif m == n - 1:
        power = INV_LOG
    else:  # m < n - 1
        p1 = RatePower(Fraction(n + k - 1 - m, (n + k - 1) * (m + 1)))
        return _max_power(p1, RatePower(Fraction(1, 6)), eps)
    return power, power.value(eps)


def remainder_rate_odd(n: int, m: int, eps: float) -> tuple[RatePower, float]:
    """Relative remainder r~_eps for odd boundary data (three-case table)."""
    _check_nm(n, m)
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    frac = Fraction(m + n - 2, (m + 1) * (2 * m + n - 2))
    if m > n - 1:
        power = RatePower(frac)
    elif m == n - 1:
        power = INV_LOG
    else:  # m < n - 1
        return _max_power(RatePower(frac), RatePower(Fraction(1, 6)), eps)
    return power, power.value(eps)


def classify(n: int, m: int, boundary: "BoundaryData") -> RegimeCase:
    """Select the asymptotic branch for the given data class.

    k-order growth data: branch (i) for m >= n+k-1, (ii) for n-1 <= m < n+k-1,
    (iii) for m < n-1.  Odd data: branch (i) for m >= n-1, (ii) for m < n-1.
    """
    _check_nm(n, m)
    kind = boundary.kind
    if kind == "S1":
        k = boundary.k
        if k is None or k <= 1:
            raise ValueError("k-order growth data needs integer k > 1")
        if m >= n + k - 1:
            branch = "i"
        elif m >= n - 1:
            branch = "ii"
        else:
            branch = "iii"
        tie = m in (n + k - 1, n - 1)
        return RegimeCase("T1.1", branch, "S1", k=k, tie=tie)
    if kind == "S2":
        branch = "i" if m >= n - 1 else "ii"
        return RegimeCase(
            "T1.4", branch, "S2", odd_index=boundary.odd_index, tie=(m == n - 1)
        )
    raise ValueError(
        f"classification needs k-order-growth or odd data, got kind={kind!r}"
    )
