"""2x2 complex linear algebra, projective lines and the Hermitian model of H^3.

Matrices are plain ``numpy`` arrays of shape ``(..., 2, 2)``. Every function
that takes a matrix also accepts a stack of them, which is how the frame
integrator evaluates many spectral values at once.

The Pauli convention is fixed as

    sigma1 = [[0, 1], [1, 0]], sigma2 = [[0, -i], [i, 0]], sigma3 = [[1, 0], [0, -1]]

so that a Hermitian matrix X = x0*1 + x1*sigma1 + x2*sigma2 + x3*sigma3 has
det X = x0**2 - x1**2 - x2**2 - x3**2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

IDENTITY = np.eye(2, dtype=complex)

# Lie algebra basis of sl2(C)
EPS_MINUS = np.array([[0, 0], [-1, 0]], dtype=complex)
EPS_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
EPS = np.array([[1j, 0], [0, -1j]], dtype=complex)

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (IDENTITY, SIGMA1, SIGMA2, SIGMA3)

# J = eps_plus + eps_minus, used in M^{-1} = J M^t J^{-1}
J = EPS_PLUS + EPS_MINUS

_SINC_SERIES_CUTOFF = 1e-4


def det2(A):
    A = np.asarray(A)
    return A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]


def tr2(A):
    A = np.asarray(A)
    return A[..., 0, 0] + A[..., 1, 1]


def inv_sl2(A):
    """Inverse of a matrix of determinant one (adjugate, no division)."""
    A = np.asarray(A)
    out = np.empty_like(A)
    out[..., 0, 0] = A[..., 1, 1]
    out[..., 1, 1] = A[..., 0, 0]
    out[..., 0, 1] = -A[..., 0, 1]
    out[..., 1, 0] = -A[..., 1, 0]
    return out


def inv2(A):
    A = np.asarray(A)
    return inv_sl2(A) / det2(A)[..., None, None]


def dagger(A):
    return np.conj(np.swapaxes(np.asarray(A), -1, -2))


def opnorm(A):
    """Spectral norm (largest singular value), vectorized over stacks."""
    return np.linalg.norm(np.asarray(A, dtype=complex), ord=2, axis=(-2, -1))


def is_sl2(A, tol=1e-10):
    return bool(np.all(np.abs(det2(A) - 1.0) <= tol))


def is_hermitian(A, tol=1e-12):
    A = np.asarray(A)
    return bool(np.all(np.abs(A - dagger(A)) <= tol * max(1.0, float(np.max(np.abs(A))))))


def is_tracefree(A, tol=1e-12):
    A = np.asarray(A)
    scale = max(1.0, float(np.max(np.abs(A))))
    return bool(np.all(np.abs(tr2(A)) <= tol * scale))


def _cos_sinc(omega2):
    """cos(w) and sin(w)/w as functions of w**2 (both are even in w)."""
    omega2 = np.asarray(omega2, dtype=complex)
    w = np.sqrt(omega2)
    c = np.cos(w)
    small = np.abs(w) < _SINC_SERIES_CUTOFF
    if np.any(small):
        sinc = np.empty_like(w)
        big = ~small
        sinc[big] = np.sin(w[big]) / w[big]
        o = omega2[small]
        sinc[small] = 1.0 - o / 6.0 + o * o / 120.0
    else:
        sinc = np.sin(w) / w
    return c, sinc


def exp_tracefree(A, tol=1e-10):
    """Matrix exponential of a tracefree 2x2 matrix.

    Uses A @ A = -det(A) * 1, hence exp(A) = cos(w) 1 + sin(w)/w A with
    w**2 = det A. The result does not depend on the branch of w.
    """
    A = np.asarray(A, dtype=complex)
    scale = np.maximum(1.0, np.max(np.abs(A), axis=(-2, -1)))
    if np.any(np.abs(tr2(A)) > tol * scale):
        raise InputError("exp_tracefree: matrix is not tracefree")
    c, s = _cos_sinc(det2(A))
    return c[..., None, None] * IDENTITY + s[..., None, None] * A


def matmul2(A, B):
    """Explicit 2x2 product; faster than ``@`` on large stacks of tiny matrices."""
    out = np.empty(np.broadcast_shapes(A.shape, B.shape), dtype=complex)
    out[..., 0, 0] = A[..., 0, 0] * B[..., 0, 0] + A[..., 0, 1] * B[..., 1, 0]
    out[..., 0, 1] = A[..., 0, 0] * B[..., 0, 1] + A[..., 0, 1] * B[..., 1, 1]
    out[..., 1, 0] = A[..., 1, 0] * B[..., 0, 0] + A[..., 1, 1] * B[..., 1, 0]
    out[..., 1, 1] = A[..., 1, 0] * B[..., 0, 1] + A[..., 1, 1] * B[..., 1, 1]
    return out


@dataclass(frozen=True, eq=False)
class CPLine:
    """A point of CP^1, i.e. a complex line in C^2.

    Stored as a unit vector whose first nonzero component is real-positive.
    Equality ignores phase: two lines are equal iff |<v, w>| > 1 - tol.
    """

    v1: complex
    v2: complex

    EQ_TOL = 1e-9

    @classmethod
    def from_vector(cls, v) -> "CPLine":
        v = np.asarray(v, dtype=complex).reshape(2)
        n = np.linalg.norm(v)
        if not np.isfinite(n) or n == 0.0:
            raise InputError("CPLine: zero or non-finite vector")
        v = v / n
        lead = v[0] if abs(v[0]) > 1e-15 else v[1]
        v = v * (abs(lead) / lead)
        return cls(complex(v[0]), complex(v[1]))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.v1, self.v2], dtype=complex)

    def perp(self) -> "CPLine":
        """Hermitian-orthogonal line."""
        return CPLine.from_vector([-np.conj(self.v2), np.conj(self.v1)])

    def transform(self, G) -> "CPLine":
        """Image line G L."""
        return CPLine.from_vector(np.asarray(G) @ self.vector)

    def overlap(self, other: "CPLine") -> float:
        return float(abs(np.vdot(self.vector, other.vector)))

    def __eq__(self, other):
        if not isinstance(other, CPLine):
            return NotImplemented
        return self.overlap(other) > 1.0 - self.EQ_TOL

    __hash__ = None

    def is_real(self, tol=1e-9) -> bool:
        return bool(np.max(np.abs(self.vector.imag)) <= tol)

    def __repr__(self):
        return f"CPLine([{self.v1:.6g} : {self.v2:.6g}])"


def hermitian_projection(L: CPLine) -> np.ndarray:
    """Orthogonal projection v v* onto the line L."""
    v = L.vector
    return np.outer(v, np.conj(v))


@dataclass(frozen=True, eq=False)
class H3Point:
    """Point of H^3 as a positive-definite Hermitian matrix with det = 1."""

    X: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=complex).reshape(2, 2)
        object.__setattr__(self, "X", X)

    @classmethod
    def validated(cls, X, tol=1e-8) -> "H3Point":
        X = np.asarray(X, dtype=complex)
        if not is_hermitian(X, tol):
            raise InputError("H3Point: matrix is not Hermitian")
        if abs(det2(X) - 1.0) > tol or tr2(X).real <= 0.0:
            raise InputError("H3Point: matrix is not positive definite with det 1")
        return cls(X)

    @classmethod
    def from_hyperboloid(cls, x) -> "H3Point":
        return cls(hermitian_from_coordinates(x))


def hermitian_from_coordinates(x):
    """Assemble x0*1 + x1*sigma1 + x2*sigma2 + x3*sigma3 (vectorized over x[..., 4])."""
    x = np.asarray(x, dtype=float)
    X = np.empty(x.shape[:-1] + (2, 2), dtype=complex)
    X[..., 0, 0] = x[..., 0] + x[..., 3]
    X[..., 1, 1] = x[..., 0] - x[..., 3]
    X[..., 0, 1] = x[..., 1] - 1j * x[..., 2]
    X[..., 1, 0] = x[..., 1] + 1j * x[..., 2]
    return X


def hermitian_coordinates(X):
    """Pauli coordinates (x0, x1, x2, x3) of Hermitian matrices."""
    X = np.asarray(X, dtype=complex)
    return np.stack(
        [
            0.5 * (X[..., 0, 0] + X[..., 1, 1]).real,
            0.5 * (X[..., 0, 1] + X[..., 1, 0]).real,
            0.5 * (X[..., 1, 0] - X[..., 0, 1]).imag,
            0.5 * (X[..., 0, 0] - X[..., 1, 1]).real,
        ],
        axis=-1,
    )


def minkowski(x, y):
    """Lorentz form x0 y0 - x1 y1 - x2 y2 - x3 y3; equals det on the diagonal."""
    x = np.asarray(x)
    y = np.asarray(y)
    return x[..., 0] * y[..., 0] - np.sum(x[..., 1:] * y[..., 1:], axis=-1)


def hyperboloid_to_ball(x):
    x = np.asarray(x, dtype=float)
    return x[..., 1:] / (1.0 + x[..., :1])


def h3_coordinates(X, tol=1e-8):
    """Hyperboloid 4-vector and Poincare-ball 3-vector of a point of H^3.

    Parameters
    ----------
    X : H3Point or array_like
        Hermitian, positive-definite, det 1.

    Returns
    -------
    hyperboloid : ndarray, shape (4,)
        (x0, x1, x2, x3) with x0**2 - |x|**2 = 1 and x0 > 0.
    ball : ndarray, shape (3,)
        (x1, x2, x3) / (1 + x0), of norm < 1.
    """
    if isinstance(X, H3Point):
        X = X.X
    X = np.asarray(X, dtype=complex)
    if not is_hermitian(X, tol):
        raise InputError("h3_coordinates: matrix is not Hermitian")
    d = det2(X).real
    if d <= 0.0 or tr2(X).real <= 0.0:
        raise InputError("h3_coordinates: matrix is not positive definite")
    if abs(d - 1.0) > tol:
        raise InputError(f"h3_coordinates: det = {d} != 1")
    x = hermitian_coordinates(X)
    return x, hyperboloid_to_ball(x)
