"""Simple-factor dressing.

For a pole lambda* off the real axis and a line L in C^2 the simple factor is

    g(lambda) = s(lambda) [(1 - lambda*/lambda) pi_L + (1 - conj(lambda*)/lambda) pi_{L^perp}]

with s = ((1 - lambda*/lambda)(1 - conj(lambda*)/lambda))^{-1/2}, so that det g = 1
and g(inf) = 1. Dressing a frame F by g gives g F g_{L'(t)}^{-1} with
L'(t) = F(t, lambda*)^{-1} L, and the dressed potential is

    q + 2 i (lambda* - conj(lambda*)) (pi_{L'(t)})_{12}.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .config import resolve
from .errors import ClosureError, InputError, PoleError
from .frame import FrameResult, integrate_frame
from .potential import Potential
from .sl2core import IDENTITY, CPLine, hermitian_projection, inv_sl2, matmul2, opnorm


class NonPeriodicDressingWarning(UserWarning):
    """The dressing line is not an eigenline of M(lambda*); the result is not periodic."""


@dataclass(frozen=True)
class SimpleFactor:
    lambda_star: complex
    line: CPLine

    def __post_init__(self):
        lam = complex(self.lambda_star)
        if not np.isfinite(lam) or abs(lam.imag) < 1e-12:
            raise InputError("SimpleFactor: pole must have nonzero imaginary part")
        if not isinstance(self.line, CPLine):
            object.__setattr__(self, "line", CPLine.from_vector(self.line))
        object.__setattr__(self, "lambda_star", lam)

    def __call__(self, lam):
        return simple_factor_eval(self, lam)


def _factor_scalars(lam_star, lam):
    lam = np.asarray(lam, dtype=complex)
    a = 1.0 - lam_star / lam
    b = 1.0 - np.conj(lam_star) / lam
    s = 1.0 / np.sqrt(a * b)
    return a, b, s


def simple_factor_eval(sf: SimpleFactor, lam) -> np.ndarray:
    """g_{lambda*, L}(lambda); vectorized over ``lam``.

    Raises
    ------
    PoleError
        At lambda = 0, lambda* or conj(lambda*).
    """
    lam = np.asarray(lam, dtype=complex)
    ls = sf.lambda_star
    scale = 1e-14 * (1.0 + abs(ls))
    if np.any(np.abs(lam) <= scale) or np.any(np.abs(lam - ls) <= scale) or np.any(
        np.abs(lam - np.conj(ls)) <= scale
    ):
        raise PoleError("simple factor evaluated at a pole", stage="dressing", data={"lambda": lam})
    a, b, s = _factor_scalars(ls, lam)
    P = hermitian_projection(sf.line)
    Q = IDENTITY - P
    return (s * a)[..., None, None] * P + (s * b)[..., None, None] * Q


def invert_factor(sf: SimpleFactor) -> SimpleFactor:
    """g_{lambda*, L}^{-1} = g_{lambda*, L^perp}."""
    return SimpleFactor(sf.lambda_star, sf.line.perp())


def is_eigenline(M, line: CPLine, tol=1e-8) -> bool:
    """True when M v is parallel to v, measured by |det[Mv, v]| / ||M||."""
    v = line.vector
    Mv = np.asarray(M) @ v
    return bool(abs(Mv[0] * v[1] - Mv[1] * v[0]) <= tol * max(1.0, float(opnorm(M))))


def dressed_monodromy(M, sf: SimpleFactor, lam, eigen_check=False, M_star=None, tol=1e-8):
    """g(lambda) M(lambda) g(lambda)^{-1}.

    With ``eigen_check`` the monodromy ``M_star`` at lambda* must have the
    factor's line as an eigenline; otherwise the dressed flow is not periodic.
    """
    if eigen_check:
        if M_star is None:
            raise InputError("dressed_monodromy: eigen_check needs M_star")
        if not is_eigenline(M_star, sf.line, tol):
            raise ClosureError(
                "L not an eigenline of M(lambda*); dressed flow not periodic", stage="dressing"
            )
    g = simple_factor_eval(sf, lam)
    return matmul2(matmul2(g, np.asarray(M, dtype=complex)), inv_sl2(g))


def moving_lines(sf: SimpleFactor, frame_at_star: FrameResult) -> np.ndarray:
    """Unit vectors spanning L'(t_j) = F(t_j, lambda*)^{-1} L, shape (n+1, 2)."""
    v = np.einsum("tij,j->ti", inv_sl2(frame_at_star.frames), sf.line.vector)
    return v / np.linalg.norm(v, axis=1)[:, None]


def dressing_term(sf: SimpleFactor, frame_at_star: FrameResult) -> np.ndarray:
    """c(t_j) = 2 i (lambda* - conj lambda*) (pi_{L'(t_j)})_{12} on the frame grid."""
    v = moving_lines(sf, frame_at_star)
    ls = sf.lambda_star
    return 2j * (ls - np.conj(ls)) * v[:, 0] * np.conj(v[:, 1])


def _frame_at(q, lam, settings, frame):
    if frame is not None:
        if abs(frame.lam - lam) > 1e-12 * (1 + abs(lam)):
            raise InputError("frame_at_star was computed at a different spectral value")
        return frame
    return integrate_frame(q, lam, settings=settings)


def _mode_bound(spec, floor, tail_tol=1e-12):
    """Smallest K >= floor with every dropped mode below tail_tol * max |c_k|."""
    n = spec.size
    absk = np.abs(np.fft.fftfreq(n, 1.0 / n).astype(int))
    mag = np.abs(spec)
    peak = float(np.max(mag))
    if peak == 0.0:
        return floor
    big = absk[mag > tail_tol * peak]
    return max(floor, int(np.max(big)))


def dress_potential(q: Potential, sf: SimpleFactor, frame_at_star=None, K=None, settings=None,
                    warn=True) -> Potential:
    """Potential of the dressed frame, re-projected onto Fourier modes.

    Parameters
    ----------
    q : Potential
    sf : SimpleFactor
    frame_at_star : FrameResult, optional
        F(t, lambda*) of ``q``; integrated here when omitted.
    K : int, optional
        Mode bound of the result; by default the smallest bound whose dropped
        modes are below 1e-12 of the largest one, and at least ``q.K``.

    Warns
    -----
    NonPeriodicDressingWarning
        If the line is not an eigenline of M(lambda*). The result is then the
        FFT projection of the samples on [0, T).
    """
    s = resolve(settings)
    fr = _frame_at(q, sf.lambda_star, s, frame_at_star)
    c = dressing_term(sf, fr)
    if warn and not is_eigenline(fr.monodromy, sf.line, 1e-8):
        warnings.warn(
            "dressing line is not an eigenline of the monodromy; result is not periodic",
            NonPeriodicDressingWarning,
            stacklevel=2,
        )
    n = c.size - 1
    values = q.evaluate(fr.t[:-1]) + c[:-1]
    spec = np.fft.fft(values) / n
    if K is None:
        K = _mode_bound(spec, q.K)
    K = min(int(K), (n - 1) // 2)
    return Potential.from_samples(values, q.T, K, q.theta)


def dressed_frames(q: Potential, sf: SimpleFactor, lam, settings=None):
    """Dressed frame g(lambda) F(t, lambda) g_{L'(t)}(lambda)^{-1} on the grid."""
    s = resolve(settings)
    F = integrate_frame(q, lam, settings=s)
    Fs = integrate_frame(q, sf.lambda_star, settings=s)
    g = simple_factor_eval(sf, lam)
    v = moving_lines(sf, Fs)
    a, b, sc = _factor_scalars(sf.lambda_star, lam)
    P = v[:, :, None] * np.conj(v[:, None, :])
    ginv_t = (1.0 / (sc * a)) * P + (1.0 / (sc * b)) * (IDENTITY - P)
    return F.t, matmul2(matmul2(g[None], F.frames), ginv_t)
