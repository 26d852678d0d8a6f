"""IRF-Vertex intertwiner g(z, u), residues at z = 0, and dynamical shifts.

A shift u -> u + s^{(k)} conditioned on leg k is realized as
sum_m builder(u + s e_m) on the acting legs times E_mm on leg k.  No
difference operators are ever materialized.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import special_fn as sf
from .errors import ExtrapolationUnstable, LegError
from .rmatrices import DynVector
from .special_fn import Characteristic, Modulus
from .tensor_alg import TensorOperator, embed, inverse

__all__ = [
    "IntertwinerSpec",
    "g_matrix",
    "g_inverse",
    "g_breve_residue",
    "residue",
    "embed_dyn",
    "embed_with_dyn_shift",
    "RESIDUE_RADII",
]

RESIDUE_RADII = (1e-4, 5e-5)
RESIDUE_TOL = 1e-8


@dataclass(frozen=True)
class IntertwinerSpec:
    N: int
    z: complex
    u: DynVector
    m: Modulus


def g_matrix(N: int, z: complex, u, m: Modulus, char_b: Fraction | None = None) -> np.ndarray:
    """g_ij = theta[1/2 - i/N, b](z + N u_j - sum u | N tau) / prod_{k != j} theta(u_k - u_j).

    The second characteristic defaults to b = N/2.  For odd N this differs
    from b = 1/2 by a constant diagonal factor (a power of the clock matrix Q)
    which drops out of every gauge relation; for even N only b = N/2 gives
    det g proportional to theta(z).
    """
    b = Fraction(N, 2) if char_b is None else Fraction(char_b)
    u = u if isinstance(u, DynVector) else DynVector(u)
    case = sf.elliptic(m)
    u.check(case)
    mN = m.scaled(N)
    total = sum(u)
    g = np.empty((N, N), dtype=complex)
    denom = []
    for j in range(N):
        d = 1 + 0j
        for k in range(N):
            if k != j:
                d *= sf.theta(u[k] - u[j], m)
        denom.append(d)
    for i in range(N):
        chr = Characteristic(Fraction(1, 2) - Fraction(i + 1, N), b)
        for j in range(N):
            g[i, j] = sf.theta_char(chr, z + N * u[j] - total, mN) / denom[j]
    return g


def g_inverse(N: int, z: complex, u, m: Modulus) -> np.ndarray:
    # det g is proportional to theta(z), so z itself is the singular argument
    sf.guard(sf.elliptic(m), z, "g^-1: z")
    return inverse(g_matrix(N, z, u, m))


def residue(f: Callable[[complex], np.ndarray], z0: complex = 0j,
            radii: Sequence[float] = RESIDUE_RADII, tol: float = RESIDUE_TOL) -> np.ndarray:
    """Residue of f at z0 from (z - z0) f(z) near z0.

    s(r) averages (z - z0) f(z) at z0 +- r, which removes the odd powers of r
    (a double-pole term included); two radii then cancel the r^2 term.  The
    same estimate taken along the imaginary direction must agree to ``tol``
    (relative), else the pole order is higher or the radii are too large.
    """
    r1, r2 = radii

    def sym(h):
        # the probe radii sit well inside any sampling margin on purpose
        with sf.sampling_guard(None):
            return 0.5 * (h * f(z0 + h) + (-h) * f(z0 - h))

    def richardson(direction):
        s1, s2 = sym(r1 * direction), sym(r2 * direction)
        w = (r1 / r2) ** 2
        return (w * s2 - s1) / (w - 1)

    est_re = richardson(1)
    est_im = richardson(1j)
    scale = 1 + np.max(np.abs(est_re))
    if np.max(np.abs(est_re - est_im)) / scale > tol:
        raise ExtrapolationUnstable(
            f"residue estimates disagree by {np.max(np.abs(est_re - est_im)):.3g}"
        )
    return 0.5 * (est_re + est_im)


def g_breve_residue(N: int, u, m: Modulus) -> np.ndarray:
    """Res_{z=0} g^{-1}(z, u)."""
    u = u if isinstance(u, DynVector) else DynVector(u)
    return residue(lambda z: inverse(g_matrix(N, z, u, m)))


def embed_dyn(builder: Callable[[DynVector], object], act_legs, shifts, u, n: int,
              N: int) -> TensorOperator:
    """Embed builder(u) on ``act_legs`` with dynamical shifts conditioned on legs.

    ``shifts`` is a sequence of (cond_leg, s) pairs; the result is
    sum over m_1.. of builder(u + s_1 e_{m_1} + ...) on act_legs times
    E_{m_1 m_1} on cond_leg_1 and so on; shifts on the same leg add.  A conditioning leg may be one of the
    acting legs only when the operator never mixes basis states carrying
    different total shifts (twist matrix on its second leg, weight-zero
    Felder matrix on both legs); otherwise the conjugation leaves shift
    operators behind and LegError is raised.
    """
    u = u if isinstance(u, DynVector) else DynVector(u)
    if isinstance(act_legs, int):
        act_legs = [act_legs]
    act_legs = list(act_legs)
    merged: dict[int, complex] = {}
    for c, s in shifts:
        merged[int(c)] = merged.get(int(c), 0j) + s
    shifts = [(c, s) for c, s in merged.items() if s != 0]
    cond = [c for c, _ in shifts]
    overlap = bool(set(cond) & set(act_legs))
    if any(not 1 <= c <= n for c in cond):
        raise LegError(f"conditioning legs {cond} out of range 1..{n}")
    if not shifts:
        return embed(_as_operator(builder(u), N), act_legs, n)

    dim = N ** n
    acc = np.zeros((dim, dim), dtype=complex)
    flat = np.arange(dim)
    comps = [(flat // N ** (n - c)) % N for c in cond]
    # basis states whose conditioning components produce the same total shift
    # of u see the same shifted operator
    groups: dict[tuple, np.ndarray] = {}
    for ms in itertools.product(range(N), repeat=len(shifts)):
        delta = [0j] * u.N
        mask = np.ones(dim, dtype=bool)
        for (_, s), mk, comp in zip(shifts, ms, comps):
            delta[mk] += s
            mask &= comp == mk
        key = tuple(delta)
        groups[key] = groups[key] | mask if key in groups else mask
    for delta, mask in groups.items():
        v = DynVector([x + d for x, d in zip(u, delta)])
        op = embed(_as_operator(builder(v), N), act_legs, n).matrix
        if overlap:
            # the conjugation is a plain matrix only if op preserves the group
            leak = np.abs(op[~mask][:, mask]).max(initial=0.0)
            if leak > 1e-12 * (1 + np.abs(op).max()):
                raise LegError("operator mixes states with different dynamical shifts")
        acc[mask, :] += op[mask, :]
    return TensorOperator(acc, N, n)


def embed_with_dyn_shift(builder: Callable[[DynVector], object], act_leg, cond_leg: int,
                         shift: complex, u, n: int, N: int) -> TensorOperator:
    """Single-shift form of :func:`embed_dyn`: builder(u + shift^{(cond_leg)}) on act_leg."""
    return embed_dyn(builder, act_leg, [(cond_leg, shift)], u, n, N)


def _as_operator(x, N: int) -> TensorOperator:
    if isinstance(x, TensorOperator):
        return x
    return TensorOperator(np.asarray(x, dtype=complex), N)
