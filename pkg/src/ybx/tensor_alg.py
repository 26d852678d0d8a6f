"""Dense operators on tensor powers of C^N.

Leg convention: for an n-leg operator the basis vector e_{i1} x ... x e_{in}
has flat index i1*N^(n-1) + ... + in, i.e. leg 1 is the slowest index.  This
is the ordering of ``numpy.kron``.
"""
from __future__ import annotations

import cmath
import math
import warnings
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import LegError, ShapeMismatch

__all__ = [
    "TensorOperator",
    "heisenberg_T",
    "kappa",
    "clock_shift",
    "E",
    "identity",
    "permutation_P",
    "permutation_P_heisenberg",
    "embed",
    "apply_left",
    "residual_norm",
    "inverse",
    "tensor",
    "PIVOT_RATIO_WARN",
]

PIVOT_RATIO_WARN = 1e12


def _legs_for(dim: int, leg_dim: int) -> int:
    n = round(math.log(dim) / math.log(leg_dim)) if leg_dim > 1 else 1
    if leg_dim ** n != dim:
        raise ShapeMismatch(f"dimension {dim} is not a power of {leg_dim}")
    return n


class TensorOperator:
    """An operator on (C^N)^{x n}, stored as a read-only dense matrix."""

    __slots__ = ("matrix", "n_legs", "leg_dim")

    def __init__(self, matrix, leg_dim: int, n_legs: int | None = None):
        mat = np.array(matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
            raise ShapeMismatch(f"expected a square matrix, got shape {mat.shape}")
        if n_legs is None:
            n_legs = _legs_for(mat.shape[0], leg_dim)
        if leg_dim ** n_legs != mat.shape[0]:
            raise ShapeMismatch(f"dim {mat.shape[0]} != {leg_dim}^{n_legs}")
        mat.flags.writeable = False
        self.matrix = mat
        self.leg_dim = leg_dim
        self.n_legs = n_legs

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def _wrap(self, mat) -> "TensorOperator":
        return TensorOperator(mat, self.leg_dim, self.n_legs)

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, TensorOperator):
            if (other.n_legs, other.leg_dim) != (self.n_legs, self.leg_dim):
                raise ShapeMismatch(
                    f"operator shapes differ: {self.n_legs}x{self.leg_dim} vs "
                    f"{other.n_legs}x{other.leg_dim}"
                )
            return other.matrix
        raise TypeError(f"cannot combine TensorOperator with {type(other).__name__}")

    def __matmul__(self, other):
        return self._wrap(self.matrix @ self._coerce(other))

    def __add__(self, other):
        return self._wrap(self.matrix + self._coerce(other))

    def __sub__(self, other):
        return self._wrap(self.matrix - self._coerce(other))

    def __neg__(self):
        return self._wrap(-self.matrix)

    def __mul__(self, scalar):
        if isinstance(scalar, TensorOperator):
            raise TypeError("use @ for operator products")
        return self._wrap(self.matrix * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self._wrap(self.matrix / complex(scalar))

    def inverse(self) -> "TensorOperator":
        return self._wrap(inverse(self.matrix))

    def __repr__(self):
        return f"TensorOperator(n_legs={self.n_legs}, leg_dim={self.leg_dim})"


def identity(N: int, n_legs: int = 1) -> TensorOperator:
    return TensorOperator(np.eye(N ** n_legs, dtype=complex), N, n_legs)


def E(i: int, j: int, N: int) -> np.ndarray:
    """Matrix unit E_ij, 0-based indices."""
    m = np.zeros((N, N), dtype=complex)
    m[i, j] = 1
    return m


def tensor(*ops) -> TensorOperator:
    """Kronecker product of N x N matrices or TensorOperators, leg order as given."""
    mats = [op.matrix if isinstance(op, TensorOperator) else np.asarray(op, dtype=complex)
            for op in ops]
    N = ops[0].leg_dim if isinstance(ops[0], TensorOperator) else mats[0].shape[0]
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return TensorOperator(out, N)


def clock_shift(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Q = diag(exp(2 pi i k / N)), k = 1..N, and the cyclic shift Lambda with
    Lambda_{k, k+1} = 1."""
    Q = np.diag([cmath.exp(2j * math.pi * k / N) for k in range(1, N + 1)])
    Lam = np.zeros((N, N), dtype=complex)
    for k in range(N):
        Lam[k, (k + 1) % N] = 1
    return Q, Lam


def heisenberg_T(a1: int, a2: int, N: int) -> np.ndarray:
    """T_a = exp(pi i a1 a2 / N) Q^a1 Lambda^a2.

    The phase depends on the integer representative (it is 2N-periodic), so
    callers pass -a literally when they mean T_{-a}.
    """
    if N == 1:
        return np.eye(1, dtype=complex)
    Q, Lam = clock_shift(N)
    Qa = np.linalg.matrix_power(Q, a1 % N)
    La = np.linalg.matrix_power(Lam, a2 % N)
    return cmath.exp(1j * math.pi * a1 * a2 / N) * (Qa @ La)


def kappa(alpha: tuple[int, int], beta: tuple[int, int], N: int) -> complex:
    return cmath.exp(1j * math.pi * (beta[0] * alpha[1] - beta[1] * alpha[0]) / N)


def permutation_P(N: int) -> TensorOperator:
    """sum_ij E_ij x E_ji."""
    P = np.zeros((N * N, N * N), dtype=complex)
    for i in range(N):
        for j in range(N):
            P[j * N + i, i * N + j] = 1
    return TensorOperator(P, N, 2)


def permutation_P_heisenberg(N: int) -> TensorOperator:
    """(1/N) sum_a T_a x T_{-a}; equals permutation_P(N)."""
    acc = np.zeros((N * N, N * N), dtype=complex)
    for a1 in range(N):
        for a2 in range(N):
            acc += np.kron(heisenberg_T(a1, a2, N), heisenberg_T(-a1, -a2, N))
    return TensorOperator(acc / N, N, 2)


def embed(op, target_legs: Sequence[int], n: int, N: int | None = None) -> TensorOperator:
    """Place a k-leg operator on the given legs (1-based) of an n-leg space.

    Leg m of ``op`` acts on ``target_legs[m-1]``, so ``embed(R, [2, 1], 2)``
    is R_21.
    """
    if isinstance(op, TensorOperator):
        mat, N = op.matrix, op.leg_dim
        k = op.n_legs
    else:
        mat = np.asarray(op, dtype=complex)
        if N is None:
            if len(target_legs) != 1:
                raise ShapeMismatch("leg dimension needed for a raw multi-leg matrix")
            N = mat.shape[0]
        k = _legs_for(mat.shape[0], N)
    legs = [int(x) for x in target_legs]
    if len(legs) != k:
        raise LegError(f"operator has {k} legs, {len(legs)} targets given")
    if len(set(legs)) != len(legs):
        raise LegError(f"duplicate legs in {legs}")
    if any(not 1 <= x <= n for x in legs):
        raise LegError(f"legs {legs} out of range 1..{n}")
    rest = [x for x in range(1, n + 1) if x not in legs]
    full = np.kron(mat, np.eye(N ** len(rest), dtype=complex))
    order = legs + rest
    if order == list(range(1, n + 1)):
        return TensorOperator(full, N, n)
    inv = [order.index(p) for p in range(1, n + 1)]
    t = full.reshape((N,) * (2 * n)).transpose(inv + [n + x for x in inv])
    return TensorOperator(t.reshape(N ** n, N ** n), N, n)


def apply_left(op: TensorOperator, target_legs: Sequence[int], mat,
               n: int | None = None) -> TensorOperator:
    """embed(op, target_legs, n) @ mat without forming the embedded matrix."""
    m = mat.matrix if isinstance(mat, TensorOperator) else np.asarray(mat, dtype=complex)
    N, k = op.leg_dim, op.n_legs
    if n is None:
        n = mat.n_legs if isinstance(mat, TensorOperator) else _legs_for(m.shape[0], N)
    if N ** n != m.shape[0]:
        raise ShapeMismatch(f"matrix of size {m.shape[0]} is not {N}^{n}")
    legs = [int(x) - 1 for x in target_legs]
    if len(legs) != k or len(set(legs)) != k or any(not 0 <= x < n for x in legs):
        raise LegError(f"bad target legs {list(target_legs)} for a {k}-leg operator on {n} legs")
    t = m.reshape((N,) * n + (m.shape[1],))
    o = op.matrix.reshape((N,) * (2 * k))
    out = np.tensordot(o, t, axes=(list(range(k, 2 * k)), legs))
    out = np.moveaxis(out, list(range(k)), legs)
    return TensorOperator(out.reshape(m.shape), N, n)


def residual_norm(lhs, rhs) -> float:
    """max|lhs - rhs| / (1 + max|rhs|), entrywise."""
    a = lhs.matrix if isinstance(lhs, TensorOperator) else np.asarray(lhs, dtype=complex)
    b = rhs.matrix if isinstance(rhs, TensorOperator) else np.asarray(rhs, dtype=complex)
    if a.shape != b.shape:
        raise ShapeMismatch(f"residual of shapes {a.shape} and {b.shape}")
    if isinstance(lhs, TensorOperator) and isinstance(rhs, TensorOperator):
        if lhs.leg_dim != rhs.leg_dim:
            raise ShapeMismatch("leg dimensions differ")
    return float(np.max(np.abs(a - b)) / (1.0 + np.max(np.abs(b))))


def inverse(mat: np.ndarray) -> np.ndarray:
    """Inverse by LU with partial pivoting; warns on a pivot ratio above 1e12."""
    mat = np.asarray(mat, dtype=complex)
    lu, piv = scipy.linalg.lu_factor(mat, check_finite=True)
    d = np.abs(np.diag(lu))
    if d.min() == 0 or d.max() / d.min() > PIVOT_RATIO_WARN:
        warnings.warn(
            f"ill-conditioned inverse: pivot ratio {d.max() / max(d.min(), 1e-300):.3g}",
            RuntimeWarning,
            stacklevel=2,
        )
    return scipy.linalg.lu_solve((lu, piv), np.eye(mat.shape[0], dtype=complex))
