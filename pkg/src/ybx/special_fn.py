"""Scalar special functions: theta functions with characteristics, the
Kronecker function, E1, the Weierstrass p-function and the Baxter-Belavin
sections, in the rational, trigonometric and elliptic cases.

Every elliptic quantity is built from one primitive, the symmetric q-series of
a theta function with characteristics.  Derivatives in z are taken term by
term, so ``deriv_order`` never goes through finite differences.
"""
from __future__ import annotations

import cmath
import contextvars
import enum
import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .errors import (
    InvalidModulus,
    SingularArgument,
    TruncationFailure,
    UnsupportedCase,
    UnsupportedOrder,
)

__all__ = [
    "CaseKind",
    "Case",
    "Modulus",
    "TruncationPolicy",
    "Characteristic",
    "RATIONAL",
    "TRIGONOMETRIC",
    "elliptic",
    "MIN_IM_TAU",
    "DELTA_SING",
    "theta_char",
    "theta",
    "theta_derivatives",
    "kronecker",
    "eisenstein_e1",
    "weierstrass_p",
    "phi_section",
    "lattice_distance",
    "sampling_guard",
    "guard",
]

MIN_IM_TAU = 0.05
DELTA_SING = 1e-6
MAX_P_ORDER = 6

_TWO_PI_I = 2j * math.pi


class CaseKind(enum.Enum):
    RATIONAL = "rational"
    TRIGONOMETRIC = "trigonometric"
    ELLIPTIC = "elliptic"


@dataclass(frozen=True)
class Modulus:
    tau: complex

    def __post_init__(self):
        tau = complex(self.tau)
        object.__setattr__(self, "tau", tau)
        if not tau.imag >= MIN_IM_TAU:
            raise InvalidModulus(f"Im(tau) must be >= {MIN_IM_TAU}, got tau={tau}")

    @property
    def q_nome(self) -> complex:
        return cmath.exp(_TWO_PI_I * self.tau)

    def scaled(self, n: int) -> "Modulus":
        return Modulus(n * self.tau)


@dataclass(frozen=True)
class TruncationPolicy:
    abs_floor: float = 1e-16
    max_terms: int = 500

    def __post_init__(self):
        if not self.abs_floor > 0:
            raise ValueError("abs_floor must be positive")
        if self.max_terms < 3:
            raise ValueError("max_terms must be at least 3")


DEFAULT_POLICY = TruncationPolicy()


@dataclass(frozen=True)
class Characteristic:
    """Characteristic [a, b] of a theta function, a and b in (1/N)Z."""

    a: Fraction
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))
        # float copies for the series; not dataclass fields
        object.__setattr__(self, "af", float(self.a))
        object.__setattr__(self, "bf", float(self.b))

    def check_level(self, n: int) -> None:
        if (self.a * n).denominator != 1 or (self.b * n).denominator != 1:
            raise ValueError(f"characteristic {self} is not in (1/{n})Z")


ODD = Characteristic(Fraction(1, 2), Fraction(1, 2))


@dataclass(frozen=True)
class Case:
    """A degeneration of the Kronecker function; elliptic carries a modulus."""

    kind: CaseKind
    modulus: Modulus | None = field(default=None)

    def __post_init__(self):
        if self.kind is CaseKind.ELLIPTIC and self.modulus is None:
            raise InvalidModulus("elliptic case needs a modulus")
        if self.kind is not CaseKind.ELLIPTIC and self.modulus is not None:
            raise UnsupportedCase(f"{self.kind.value} case takes no modulus")

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def is_elliptic(self) -> bool:
        return self.kind is CaseKind.ELLIPTIC

    @property
    def tau(self) -> complex | None:
        return None if self.modulus is None else self.modulus.tau

    def __str__(self):
        if self.modulus is None:
            return self.name
        return f"elliptic(tau={self.modulus.tau})"


RATIONAL = Case(CaseKind.RATIONAL)
TRIGONOMETRIC = Case(CaseKind.TRIGONOMETRIC)


def elliptic(tau) -> Case:
    m = tau if isinstance(tau, Modulus) else Modulus(tau)
    return Case(CaseKind.ELLIPTIC, m)


# --- singularity guard -------------------------------------------------------

# When set, every guarded argument must also stay this far (in lattice
# distance) from the singular set.  Used by the sampler to reject points.
_sample_delta: contextvars.ContextVar[float | None] = contextvars.ContextVar(
    "ybx_sample_delta", default=None
)


@contextmanager
def sampling_guard(delta: float | None):
    """Reject guarded arguments closer than ``delta`` to the singular set.

    ``None`` switches the check off, e.g. for deliberate near-pole probes.
    """
    token = _sample_delta.set(delta)
    try:
        yield
    finally:
        _sample_delta.reset(token)


def lattice_distance(case: Case, x: complex) -> float:
    """Distance from x to the singular set of the case (0, i*pi*Z, or the lattice)."""
    x = complex(x)
    if case.kind is CaseKind.RATIONAL:
        return abs(x)
    if case.kind is CaseKind.TRIGONOMETRIC:
        n = round(x.imag / math.pi)
        return abs(x - 1j * math.pi * n)
    tau = case.modulus.tau
    n0 = round(x.imag / tau.imag)
    best = math.inf
    for n in (n0 - 1, n0, n0 + 1):
        y = x - n * tau
        # for fixed n the nearest lattice point lies at the rounded real part
        best = min(best, abs(y - round(y.real)))
    return best


def guard(case: Case, x: complex, what: str = "argument") -> None:
    """Raise SingularArgument if x is too close to the case's singular set.

    Only the sampling threshold is checked here; the kernel threshold on
    theta values is applied where the theta value is computed.
    """
    delta = _sample_delta.get()
    if delta is not None and lattice_distance(case, x) < delta:
        raise SingularArgument(f"{what} within {delta} of singular set", x)


def _kernel_check(case: Case, x: complex, denom: complex, what: str) -> None:
    guard(case, x, what)
    if abs(denom) < DELTA_SING:
        raise SingularArgument(f"{what}: vanishing denominator", x)


# --- theta series ------------------------------------------------------------


def _theta_series(a: float, b: float, z: complex, tau: complex, max_order: int,
                  policy: TruncationPolicy) -> tuple[complex, ...]:
    return _theta_series_cached(a, b, z, tau, max_order, policy)


@lru_cache(maxsize=8192)
def _theta_series_cached(a: float, b: float, z: complex, tau: complex, max_order: int,
                         policy: TruncationPolicy) -> tuple[complex, ...]:
    # Terms exp(i pi k^2 tau + 2 pi i k (z + b)), k = a + j, summed in rings
    # j = 0, +-1, +-2, ...; consecutive terms on each side are related by a
    # ratio that itself advances by exp(2 pi i tau).
    out = [0j] * (max_order + 1)
    peak = [0.0] * (max_order + 1)
    zb = z + b
    step = cmath.exp(_TWO_PI_I * tau)
    t_up = t_dn = cmath.exp(1j * math.pi * a * a * tau + _TWO_PI_I * a * zb)
    r_up = cmath.exp(1j * math.pi * (2 * a + 1) * tau + _TWO_PI_I * zb)
    r_dn = cmath.exp(1j * math.pi * (1 - 2 * a) * tau - _TWO_PI_I * zb)
    for ring in range(policy.max_terms):
        if ring == 0:
            pairs = ((t_up, a),)
        else:
            t_up *= r_up
            r_up *= step
            t_dn *= r_dn
            r_dn *= step
            pairs = ((t_up, a + ring), (t_dn, a - ring))
        mags = [0.0] * (max_order + 1)
        for term, k in pairs:
            w = _TWO_PI_I * k
            for d in range(max_order + 1):
                out[d] += term
                mags[d] += abs(term)
                term *= w
        done = ring > 0
        for d in range(max_order + 1):
            if mags[d] > peak[d]:
                peak[d] = mags[d]
            if not mags[d] < policy.abs_floor * peak[d]:
                done = False
        if done:
            return tuple(out)
    raise TruncationFailure(
        f"theta series not converged after {policy.max_terms} rings (z={z}, tau={tau})"
    )


def theta_derivatives(chr: Characteristic, z: complex, m: Modulus, max_order: int,
                      policy: TruncationPolicy = DEFAULT_POLICY) -> list[complex]:
    """[theta, theta', ..., theta^(max_order)] of theta[a, b](z | tau)."""
    if max_order < 0:
        raise UnsupportedOrder("derivative order must be non-negative")
    return list(_theta_series(chr.af, chr.bf, complex(z), m.tau, max_order, policy))


def theta_char(chr: Characteristic, z: complex, m: Modulus, deriv_order: int = 0,
               policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """The deriv_order-th z-derivative of theta[a, b](z | tau)."""
    return theta_derivatives(chr, z, m, deriv_order, policy)[deriv_order]


def theta(z: complex, m: Modulus, deriv_order: int = 0) -> complex:
    """Odd theta function, characteristic [1/2, 1/2]."""
    return theta_char(ODD, z, m, deriv_order)


@lru_cache(maxsize=256)
def _theta_constants(tau: complex) -> tuple[complex, complex]:
    d = _theta_series(0.5, 0.5, 0j, tau, 3, DEFAULT_POLICY)
    return d[1], d[3]


def theta_prime0(m: Modulus) -> complex:
    return _theta_constants(m.tau)[0]


# --- Kronecker function and its relatives -------------------------------------


def kronecker(case: Case, eta: complex, z: complex) -> complex:
    """phi(eta, z): 1/eta + 1/z, coth eta + coth z, or the theta ratio."""
    eta = complex(eta)
    z = complex(z)
    kind = case.kind
    if kind is CaseKind.RATIONAL:
        _kernel_check(case, eta, eta, "phi: eta")
        _kernel_check(case, z, z, "phi: z")
        return 1 / eta + 1 / z
    if kind is CaseKind.TRIGONOMETRIC:
        se, sz = cmath.sinh(eta), cmath.sinh(z)
        _kernel_check(case, eta, se, "phi: eta")
        _kernel_check(case, z, sz, "phi: z")
        return cmath.cosh(eta) / se + cmath.cosh(z) / sz
    m = case.modulus
    te = theta(eta, m)
    _kernel_check(case, eta, te, "phi: eta")
    tz = theta(z, m)
    _kernel_check(case, z, tz, "phi: z")
    return theta_prime0(m) * theta(eta + z, m) / (te * tz)


def _log_derivatives(f: list[complex], order: int) -> list[complex]:
    """Derivatives 0..order of h = f'/f from derivatives 0..order+1 of f.

    Uses f^(m+1) = sum_k C(m, k) h^(k) f^(m-k).
    """
    h: list[complex] = []
    for mm in range(order + 1):
        acc = f[mm + 1]
        for k in range(mm):
            acc -= math.comb(mm, k) * h[k] * f[mm - k]
        h.append(acc / f[0])
    return h


def _base_derivatives(case: Case, z: complex, order: int, what: str) -> list[complex]:
    """Derivatives of z, sinh z or theta(z), whose log-derivative is E1."""
    kind = case.kind
    if kind is CaseKind.RATIONAL:
        f = [z, 1 + 0j] + [0j] * (order - 1)
    elif kind is CaseKind.TRIGONOMETRIC:
        s, c = cmath.sinh(z), cmath.cosh(z)
        f = [s if d % 2 == 0 else c for d in range(order + 1)]
    else:
        f = theta_derivatives(ODD, z, case.modulus, order)
    _kernel_check(case, z, f[0], what)
    return f


def eisenstein_e1(case: Case, z: complex, deriv_order: int = 0) -> complex:
    """E1(z) = 1/z, coth z or theta'(z)/theta(z); optionally its z-derivative."""
    if deriv_order < 0:
        raise UnsupportedOrder("derivative order must be non-negative")
    z = complex(z)
    f = _base_derivatives(case, z, deriv_order + 1, "E1")
    return _log_derivatives(f, deriv_order)[deriv_order]


def weierstrass_p(case: Case, z: complex, deriv_order: int = 0) -> complex:
    """Weierstrass p (1/z^2, 1/sinh^2 z, elliptic) and derivatives up to order 6.

    In every case p = -E1' plus, in the elliptic case, the constant
    theta'''(0) / (3 theta'(0)).
    """
    if not 0 <= deriv_order <= MAX_P_ORDER:
        raise UnsupportedOrder(f"p-function derivative order {deriv_order} not in 0..{MAX_P_ORDER}")
    z = complex(z)
    f = _base_derivatives(case, z, deriv_order + 2, "p")
    val = -_log_derivatives(f, deriv_order + 1)[deriv_order + 1]
    if deriv_order == 0 and case.is_elliptic:
        t1, t3 = _theta_constants(case.modulus.tau)
        val += t3 / (3 * t1)
    return val


def phi_section(a1: int, a2: int, N: int, hbar: complex, z: complex, m: Modulus) -> complex:
    """exp(2 pi i a2 z / N) * phi(z, (hbar + a1 + a2 tau) / N)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    case = Case(CaseKind.ELLIPTIC, m)
    w = (hbar + a1 + a2 * m.tau) / N
    return cmath.exp(_TWO_PI_I * a2 * z / N) * kronecker(case, z, w)
