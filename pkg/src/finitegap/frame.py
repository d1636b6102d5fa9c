"""Extended frame dF/dt = F alpha(t, lambda), monodromy and discriminant.

The integrator is the fourth-order commutator-free Magnus scheme with two
Gauss nodes per step. Each step is a product of two exponentials of
tracefree matrices, evaluated in closed form, so det F = 1 holds to rounding
without any renormalization.

All heavy entry points are batched over a stack of potentials sharing the
same period and over a vector of spectral values. The product of the step
matrices is formed by pairwise reduction, which keeps the Python loop length
logarithmic in the step count.
"""

from __future__ import annotations

import csv
import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import resolve
from .errors import InputError, IntegrationOverflowError
from .potential import Potential
from .sl2core import IDENTITY, _cos_sinc, dagger, det2, inv_sl2, matmul2, opnorm, tr2

# Gauss-Legendre nodes and the commutator-free weights built on them
_C1 = 0.5 - math.sqrt(3.0) / 6.0
_C2 = 0.5 + math.sqrt(3.0) / 6.0
_A1 = 0.25 + math.sqrt(3.0) / 6.0
_A2 = 0.25 - math.sqrt(3.0) / 6.0

_CHUNK = 1 << 18


def alpha(q: Potential, t, lam) -> np.ndarray:
    """alpha(t, lambda) = 1/2 [[i lambda, q(t)], [-conj q(t), -i lambda]]."""
    qt = complex(q.evaluate(float(t)))
    lam = complex(lam)
    return 0.5 * np.array([[1j * lam, qt], [-np.conj(qt), -1j * lam]], dtype=complex)


@functools.lru_cache(maxsize=32)
def _node_basis(K: int, n_steps: int):
    ks = np.arange(-K, K + 1)
    j = np.arange(n_steps)[:, None]
    e1 = np.exp(2j * np.pi * ks * (j + _C1) / n_steps)
    e2 = np.exp(2j * np.pi * ks * (j + _C2) / n_steps)
    e1.setflags(write=False)
    e2.setflags(write=False)
    return e1, e2


def _step_matrices(coeffs, T, lams, n_steps):
    """One-step propagators, shape (n_steps, B, L, 2, 2)."""
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    K = (coeffs.shape[1] - 1) // 2
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    h = T / n_steps
    e1, e2 = _node_basis(K, n_steps)
    # one matrix-vector product per potential: a batched gemm would round
    # differently depending on how many potentials share the call
    q1 = np.stack([e1 @ c for c in coeffs], axis=1)[:, :, None]  # (n, B, 1)
    q2 = np.stack([e2 @ c for c in coeffs], axis=1)[:, :, None]
    x = (0.25j * h) * lams[None, None, :]  # diagonal entry of each exponent

    def expo(y):
        c, s = _cos_sinc(-(x * x) + np.abs(y) ** 2 + 0 * x)
        E = np.empty(c.shape + (2, 2), dtype=complex)
        E[..., 0, 0] = c + s * x
        E[..., 1, 1] = c - s * x
        E[..., 0, 1] = s * y
        E[..., 1, 0] = -s * np.conj(y)
        return E

    # right multiplication: the factor weighted towards the earlier node acts first
    first = expo((0.5 * h) * (_A1 * q1 + _A2 * q2))
    second = expo((0.5 * h) * (_A2 * q1 + _A1 * q2))
    return matmul2(first, second)


def _tree_product(S):
    """Ordered product S[0] S[1] ... S[-1] along axis 0 by pairwise reduction."""
    while S.shape[0] > 1:
        if S.shape[0] % 2:
            tail = S[-1:]
            S = np.concatenate([matmul2(S[:-1:2], S[1::2]), tail], axis=0)
        else:
            S = matmul2(S[0::2], S[1::2])
    return S[0]


def _check_finite(A, lams):
    if not np.all(np.isfinite(A)):
        raise IntegrationOverflowError(
            "frame integration overflowed",
            stage="frame",
            data={"lambda": [complex(l) for l in np.atleast_1d(lams)]},
        )


def monodromy_batch(coeffs, T, lams, n_steps=None, settings=None) -> np.ndarray:
    """Monodromies for a stack of potentials and spectral values.

    Parameters
    ----------
    coeffs : array_like, shape (B, 2K+1)
        Fourier coefficients of B potentials with common period ``T``.
    lams : array_like, shape (L,)

    Returns
    -------
    ndarray, shape (B, L, 2, 2)
    """
    n_steps = resolve(settings).n_steps if n_steps is None else int(n_steps)
    if n_steps < 8:
        raise InputError("integrate: n_steps must be at least 8")
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    # bound the step-matrix workspace to about _CHUNK complex 2x2 entries
    per_lam = n_steps * coeffs.shape[0]
    width = max(1, _CHUNK // per_lam)
    parts = []
    with np.errstate(over="ignore", invalid="ignore"):
        for start in range(0, lams.size, width):
            sl = lams[start:start + width]
            parts.append(_tree_product(_step_matrices(coeffs, T, sl, n_steps)))
    M = np.concatenate(parts, axis=1) if len(parts) > 1 else parts[0]
    _check_finite(M, lams)
    return M


def monodromy(q: Potential, lams, n_steps=None, settings=None) -> np.ndarray:
    """M(lambda) for each entry of ``lams``; shape (L, 2, 2), or (2, 2) for scalar input."""
    scalar = np.ndim(lams) == 0
    M = monodromy_batch(q.coeffs[None, :], q.T, np.atleast_1d(lams), n_steps, settings)[0]
    return M[0] if scalar else M


@dataclass(frozen=True, eq=False)
class FrameResult:
    """Frame F(t_j, lambda) on a uniform grid and the monodromy M = F(T)."""

    lam: complex
    t: np.ndarray
    frames: np.ndarray
    monodromy: np.ndarray

    @property
    def det_drift(self) -> float:
        return float(np.max(np.abs(det2(self.frames) - 1.0)))

    @property
    def delta(self) -> complex:
        return complex(tr2(self.monodromy))


def integrate_frames_batch(coeffs, T, lams, n_steps, n_samples=None):
    """Frames on the grid t_j = j T / n_samples for every (potential, lambda).

    ``n_steps`` is rounded up to a multiple of ``n_samples``; each output
    interval is integrated with the same number of substeps.

    Returns
    -------
    t : ndarray, shape (n_samples + 1,)
    frames : ndarray, shape (n_samples + 1, B, L, 2, 2)
    """
    n_samples = n_steps if n_samples is None else int(n_samples)
    if n_samples < 1 or n_steps < 8:
        raise InputError("integrate: n_steps must be at least 8")
    sub = max(1, -(-n_steps // n_samples))
    total = sub * n_samples
    with np.errstate(over="ignore", invalid="ignore"):
        S = _step_matrices(coeffs, T, lams, total)
        blocks = S.reshape((n_samples, sub) + S.shape[1:])
        # reduce substeps inside each output interval, then scan
        while blocks.shape[1] > 1:
            if blocks.shape[1] % 2:
                tail = blocks[:, -1:]
                blocks = np.concatenate([matmul2(blocks[:, :-1:2], blocks[:, 1::2]), tail], axis=1)
            else:
                blocks = matmul2(blocks[:, 0::2], blocks[:, 1::2])
        blocks = blocks[:, 0]
        frames = np.empty((n_samples + 1,) + blocks.shape[1:], dtype=complex)
        frames[0] = IDENTITY
        for j in range(n_samples):
            frames[j + 1] = matmul2(frames[j], blocks[j])
    _check_finite(frames, lams)
    return np.arange(n_samples + 1) * (T / n_samples), frames


def integrate_frame(q: Potential, lam, n_steps=None, n_samples=None, settings=None) -> FrameResult:
    """Integrate dF/dt = F alpha with F(0) = 1 over one period.

    Parameters
    ----------
    q : Potential
        Periodic (gauged) potential.
    lam : complex
        Spectral value.
    n_steps : int, optional
        Integration steps; defaults to ``settings.n_steps``.
    n_samples : int, optional
        Number of output intervals; defaults to ``n_steps``.
    """
    n_steps = resolve(settings).n_steps if n_steps is None else int(n_steps)
    if n_steps < 8:
        raise InputError("integrate_frame: n_steps must be at least 8")
    t, frames = integrate_frames_batch(q.coeffs[None, :], q.T, [complex(lam)], n_steps, n_samples)
    frames = frames[:, 0, 0]
    return FrameResult(complex(lam), t, frames, frames[-1].copy())


def _stencil_lams(lam, h):
    return lam + h * np.array([-2, -1, 0, 1, 2], dtype=complex)


def _stencil_combine(values, h):
    """Value, first and second derivative from five equally spaced samples."""
    fm2, fm1, f0, f1, f2 = (values[..., i] for i in range(5))
    d1 = (fm2 - 8 * fm1 + 8 * f1 - f2) / (12 * h)
    d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * f1 - f2) / (12 * h * h)
    return f0, d1, d2


def stencil_step(lam, settings=None) -> float:
    return resolve(settings).lambda_stencil_h * (1.0 + abs(complex(lam)))


def discriminant_batch(coeffs, T, lam, settings=None, with_monodromy=False):
    """Delta, Delta', Delta'' at ``lam`` for a stack of potentials (arrays of shape (B,))."""
    h = stencil_step(lam, settings)
    M = monodromy_batch(coeffs, T, _stencil_lams(complex(lam), h), settings=settings)
    out = _stencil_combine(tr2(M), h)
    if with_monodromy:
        return out + (M[:, 2],)
    return out


def discriminant(q: Potential, lam, settings=None):
    """Return ``(Delta, Delta', Delta'')`` at ``lam``.

    Delta = tr M(lambda); the derivatives come from a five-point central
    stencil in lambda with step ``lambda_stencil_h * (1 + |lambda|)``.
    """
    d0, d1, d2 = discriminant_batch(q.coeffs[None, :], q.T, lam, settings)
    return complex(d0[0]), complex(d1[0]), complex(d2[0])


def monodromy_derivative(q: Potential, lam, settings=None):
    """M(lambda) and dM/dlambda from the same five-point stencil."""
    h = stencil_step(lam, settings)
    M = monodromy(q, _stencil_lams(complex(lam), h), settings=settings)
    M0, M1, _ = _stencil_combine(np.moveaxis(M, 0, -1), h)
    return M0, M1


def floquet_mu(delta, sheet=1) -> complex:
    """Floquet multiplier on the given sheet.

    mu^{+-1} = (Delta +- sqrt(Delta^2 - 4)) / 2. Sheet +1 carries the root with
    |mu| >= 1; on the unit circle the principal square root decides.
    """
    if sheet not in (1, -1):
        raise InputError("floquet_mu: sheet must be +1 or -1")
    delta = complex(delta)
    if delta in (2, -2):
        return delta / 2
    r = np.sqrt(delta * delta - 4)
    m = 0.5 * (delta + r)
    other = 0.5 * (delta - r)
    if abs(m) < abs(other) and not math.isclose(abs(m), abs(other), rel_tol=1e-14):
        m, other = other, m
    return complex(m if sheet == 1 else other)


def floquet_mu_path(deltas, sheet=1) -> np.ndarray:
    """Multipliers along a lambda-path, continued by nearest-neighbour tracking."""
    deltas = np.asarray(deltas, dtype=complex)
    if deltas.size == 0:
        return deltas.copy()
    out = np.empty_like(deltas)
    out[0] = floquet_mu(deltas[0], sheet)
    for j in range(1, deltas.size):
        a = floquet_mu(deltas[j], 1)
        b = 1.0 / a
        out[j] = a if abs(a - out[j - 1]) <= abs(b - out[j - 1]) else b
    return out


def reality_defect(q: Potential, lam, settings=None) -> float:
    """|| conj(M(conj lambda))^t M(lambda) - 1 ||."""
    M = monodromy(q, np.array([lam, np.conj(lam)]), settings=settings)
    return float(opnorm(matmul2(dagger(M[1]), M[0]) - IDENTITY))


def conjugated_frame(frames) -> np.ndarray:
    """F(t, conj lambda) from F(t, lambda) through conj(F(t, conj l))^t = F(t, l)^{-1}."""
    return dagger(inv_sl2(frames))


def parallel_map(fn, items, threads=1):
    """Ordered map; with ``threads > 1`` uses a thread pool (numpy releases the GIL)."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def lambda_map(q: Potential, lams, settings=None) -> np.ndarray:
    """Monodromies over a lambda-grid, split into chunks across ``settings.threads``."""
    s = resolve(settings)
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    if lams.size == 0:
        return np.zeros((0, 2, 2), dtype=complex)
    chunks = np.array_split(lams, min(s.threads, lams.size))
    parts = parallel_map(lambda c: monodromy(q, c, settings=s), chunks, s.threads)
    return np.concatenate(parts, axis=0)


def write_diagnostics(path, q: Potential, lams, settings=None):
    """CSV dump with columns lambda_re, lambda_im, delta_re, delta_im, det_drift."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    M = lambda_map(q, lams, settings)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda_re", "lambda_im", "delta_re", "delta_im", "det_drift"])
        for lam, m in zip(lams, M):
            d = tr2(m)
            w.writerow([f"{lam.real:.17g}", f"{lam.imag:.17g}", f"{d.real:.17g}",
                        f"{d.imag:.17g}", f"{abs(det2(m) - 1):.3e}"])
