"""Spectral data of the monodromy.

Roots lambda_k of a - d, perturbed Fourier coefficients z_k = 2 (-1)^k b(lambda_k),
eigenvectors and projectors of M, directional derivatives of the
discriminant, and zero orders at a spectral point.

Here a, b, d are the entries M = [[a, b], [c, d]].

Root labels follow the asymptotics lambda_k ~ 2 pi k / T: all roots in a strip
|Re lambda| < 2 pi (K + 1/2) / T are located, K is enlarged until the strip
holds exactly 2K + 1 of them, and the roots are then labelled -K..K in order
of real part (ties broken by imaginary part).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import resolve
from .errors import (
    IllConditionedEigenlineError,
    InputError,
    OrderDetectionError,
    RootLocalizationError,
)
from .frame import (
    _stencil_combine,
    _stencil_lams,
    discriminant,
    floquet_mu,
    integrate_frames_batch,
    monodromy,
    stencil_step,
)
from .potential import Potential
from .sl2core import IDENTITY, CPLine, det2, inv_sl2, matmul2, opnorm, tr2


@dataclass(frozen=True)
class SpectralSample:
    """Root ``lambda_k`` of a - d with its perturbed Fourier coefficient ``z_k``."""

    k: int
    lambda_k: complex
    z_k: complex = complex("nan")
    residual: float = 0.0

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "lambda_k": [self.lambda_k.real, self.lambda_k.imag],
            "z_k": [self.z_k.real, self.z_k.imag],
            "residual": self.residual,
        }


@dataclass(frozen=True, eq=False)
class EigenData:
    lam: complex
    mu: complex
    v: np.ndarray
    w: np.ndarray
    P: np.ndarray


@dataclass(frozen=True, eq=False)
class OrderReport:
    """Zero orders of Delta^2 - 4 and of N = M - Delta/2 at ``lambda_star``.

    ``N_tilde`` is the leading Taylor coefficient of N. ``degenerate`` marks
    n = 2 j0 with an invertible ``N_tilde``; there is no kernel line then.
    """

    lambda_star: complex
    n: int
    j0: int
    N_tilde: np.ndarray
    nilpotent: bool
    degenerate: bool
    ba_line: CPLine | None = None
    winding: float = 0.0
    noise_floor: float = 0.0
    taylor_N: np.ndarray = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {
            "lambda_star": [self.lambda_star.real, self.lambda_star.imag],
            "n": self.n,
            "j0": self.j0,
            "nilpotent": self.nilpotent,
            "degenerate": self.degenerate,
            "winding": self.winding,
        }
        if self.ba_line is not None:
            v = self.ba_line.vector
            out["ba_line"] = [[v[0].real, v[0].imag], [v[1].real, v[1].imag]]
        return out


# ---------------------------------------------------------------------------
# roots of a - d


def _ad(M):
    return M[..., 0, 0] - M[..., 1, 1]


def _f_and_df(q: Potential, lams, settings):
    """a - d, its lambda-derivative and the monodromy at each entry of ``lams``."""
    lams = np.asarray(lams, dtype=complex)
    if lams.size == 0:
        return lams.copy(), lams.copy(), np.zeros((0, 2, 2), dtype=complex)
    h = np.array([stencil_step(l, settings) for l in lams])
    grid = lams[:, None] + h[:, None] * np.arange(-2, 3)[None, :]
    M = monodromy(q, grid.reshape(-1), settings=settings).reshape(lams.size, 5, 2, 2)
    f = _ad(M)
    d1 = (f[:, 0] - 8 * f[:, 1] + 8 * f[:, 3] - f[:, 4]) / (12 * h)
    return f[:, 2], d1, M[:, 2]


def _newton_roots(q, lams, settings, max_iter=40, max_step=None):
    """Vectorized Newton on a - d. Returns (roots, converged mask)."""
    s = resolve(settings)
    lam = np.array(lams, dtype=complex)
    ok = np.zeros(lam.size, dtype=bool)
    for _ in range(max_iter):
        todo = ~ok
        if not np.any(todo):
            break
        f, df, _ = _f_and_df(q, lam[todo], s)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(df != 0, f / df, np.inf)
        if max_step is not None:
            big = np.abs(step) > max_step
            step[big] = step[big] / np.abs(step[big]) * max_step
        if not np.all(np.isfinite(step)):
            bad = ~np.isfinite(step)
            step[bad] = 0.0
            idx = np.flatnonzero(todo)[bad]
            lam[idx] = np.nan
        new = lam[todo] - step
        done = np.abs(step) <= s.root_tol * (1.0 + np.abs(new)) * 100
        lam[todo] = new
        idx = np.flatnonzero(todo)
        ok[idx[done]] = True
        ok &= np.isfinite(lam)
    return lam, ok & np.isfinite(lam)


def _deflated_search(q, known, missing, X, H, settings, max_iter=60):
    """Look for ``missing`` further roots with Newton on (a - d) / prod(lambda - r)."""
    s = resolve(settings)
    found = []
    xs = np.linspace(-min(X, 2.0), min(X, 2.0), 5)
    ys = H * np.array([-0.8, -0.5, -0.2, 0.2, 0.5, 0.8])
    seeds = (xs[:, None] + 1j * ys[None, :]).reshape(-1)
    for seed in seeds:
        if len(found) == missing:
            break
        roots = np.array(known + found, dtype=complex)
        lam = complex(seed)
        for _ in range(max_iter):
            f, df, _ = _f_and_df(q, [lam], s)
            if f[0] == 0:
                break
            denom = df[0] / f[0] - np.sum(1.0 / (lam - roots))
            if not np.isfinite(denom) or denom == 0:
                lam = complex("nan")
                break
            step = 1.0 / denom
            if abs(step) > 0.5:
                step *= 0.5 / abs(step)
            lam -= step
            if abs(step) <= s.root_tol * (1 + abs(lam)) * 100:
                break
        else:
            continue
        if not np.isfinite(lam) or abs(lam.real) >= X or abs(lam.imag) >= H:
            continue
        if np.all(np.abs(roots - lam) > 1e-7 * (1 + abs(lam))):
            found.append(complex(lam))
    return found


def _boundary(rect, s):
    """Point at parameter s in [0, 4) on the counter-clockwise boundary of rect."""
    x0, x1, y0, y1 = rect
    s = np.asarray(s, dtype=float)
    e = np.floor(s).astype(int) % 4
    u = s - np.floor(s)
    pts = np.empty(s.shape, dtype=complex)
    pts[e == 0] = (x0 + u[e == 0] * (x1 - x0)) + 1j * y0
    pts[e == 1] = x1 + 1j * (y0 + u[e == 1] * (y1 - y0))
    pts[e == 2] = (x1 - u[e == 2] * (x1 - x0)) + 1j * y1
    pts[e == 3] = x0 + 1j * (y1 - u[e == 3] * (y1 - y0))
    return pts


def _count_roots(q, rect, settings, T):
    """Number of zeros of a - d inside rect by the argument principle.

    The boundary is sampled densely enough that consecutive phase increments
    stay below 0.6 rad; returns ``(count, min |f| on boundary)``.
    """
    x0, x1, y0, y1 = rect
    w, hgt = x1 - x0, y1 - y0
    # phase speed of a - d is about T/2 per unit length along any edge
    dens = max(4.0, T)
    n = [max(8, int(math.ceil(dens * L))) for L in (w, hgt, w, hgt)]
    s = np.concatenate([e + np.arange(m) / m for e, m in enumerate(n)])
    f = _ad(monodromy(q, _boundary(rect, s), settings=settings))
    for _ in range(8):
        fn = np.roll(f, -1)
        dphi = np.angle(fn / f)
        bad = np.abs(dphi) > 0.6
        if not np.any(bad):
            break
        sn = np.roll(s, -1)
        sn = np.where(sn < s, sn + 4.0, sn)
        mids = 0.5 * (s[bad] + sn[bad]) % 4.0
        fm = _ad(monodromy(q, _boundary(rect, mids), settings=settings))
        s = np.concatenate([s, mids])
        f = np.concatenate([f, fm])
        order = np.argsort(s)
        s, f = s[order], f[order]
    dphi = np.angle(np.roll(f, -1) / f)
    wind = float(np.sum(dphi)) / (2 * np.pi)
    return int(round(wind)), float(np.min(np.abs(f))), abs(wind - round(wind))


def _roots_in_rect(q, rect, settings, T, depth=0, count=None):
    """All zeros of a - d in rect (with multiplicity) by bisection on the winding."""
    if count is None:
        count, _, _ = _count_roots(q, rect, settings, T)
    if count <= 0:
        return []
    x0, x1, y0, y1 = rect
    diam = max(x1 - x0, y1 - y0)
    centre = 0.5 * (x0 + x1) + 0.5j * (y0 + y1)
    if count == 1:
        root, ok = _newton_roots(q, [centre], settings, max_step=diam)
        z = root[0]
        pad = 1e-9 * (1 + diam)
        if ok[0] and x0 - pad <= z.real <= x1 + pad and y0 - pad <= z.imag <= y1 + pad:
            return [complex(z)]
    if diam < 1e-9 or depth > 60:
        if count == 1:
            return [complex(centre)]
        # cluster below resolution: report it with multiplicity
        return [complex(centre)] * count
    # split off-centre so that symmetric configurations never sit on the cut
    frac = 0.4871
    if x1 - x0 >= y1 - y0:
        xm = x0 + frac * (x1 - x0)
        parts = [(x0, xm, y0, y1), (xm, x1, y0, y1)]
    else:
        ym = y0 + frac * (y1 - y0)
        parts = [(x0, x1, y0, ym), (x0, x1, ym, y1)]
    c0, fmin, _ = _count_roots(q, parts[0], settings, T)
    roots = _roots_in_rect(q, parts[0], settings, T, depth + 1, c0)
    roots += _roots_in_rect(q, parts[1], settings, T, depth + 1, count - c0)
    return roots


def _ordered(roots, tol=1e-7):
    """Roots sorted by real part; ties broken so that the labels respect lambda -> -conj(lambda).

    Roots whose real parts agree within ``tol`` form a cluster. Clusters with
    nonnegative real part are ordered by increasing imaginary part, the others
    by decreasing imaginary part, so the mirror image of a cluster gets the
    mirrored labels.
    """
    roots = sorted(roots, key=lambda z: z.real)
    out, group = [], []
    for z in roots + [None]:
        if group and (z is None or abs(z.real - group[-1].real) > tol * (1 + abs(z.real))):
            centre = sum(w.real for w in group) / len(group)
            sign = 1.0 if centre >= -tol else -1.0
            out += sorted(group, key=lambda w: sign * w.imag)
            group = []
        if z is not None:
            group.append(z)
    return out


def _label(roots, Kbig):
    return {k: r for k, r in zip(range(-Kbig, Kbig + 1), _ordered(roots))}


def _strip_height(q: Potential) -> float:
    return 1.0 + 1.25 * q.sup_norm()


def _all_roots(q: Potential, Kbig, settings):
    """Roots in the strip for index bound Kbig; (roots, count)."""
    T = q.T
    X = 2 * np.pi * (Kbig + 0.5) / T
    H = _strip_height(q)
    rect = (-X, X, -H, H)
    count, fmin, frac = _count_roots(q, rect, settings, T)
    if frac > 0.05:
        raise RootLocalizationError(
            "winding number not an integer on the search strip",
            stage="roots",
            data={"rect": rect, "winding_defect": frac},
        )
    # fast path: Newton from the asymptotic seeds
    seeds = 2 * np.pi * np.arange(-Kbig, Kbig + 1) / T
    found, ok = _newton_roots(q, seeds, settings, max_step=np.pi / T)
    cand = [
        complex(z)
        for z, good in zip(found, ok)
        if good and abs(z.real) < X and abs(z.imag) < H
    ]
    distinct = []
    for z in cand:
        if all(abs(z - w) > 1e-7 * (1 + abs(z)) for w in distinct):
            distinct.append(z)
    if len(distinct) < count:
        distinct += _deflated_search(q, distinct, count - len(distinct), X, H, settings)
    if len(distinct) == count:
        return distinct, count
    return _roots_in_rect(q, rect, settings, T, count=count), count


def find_lambda_k(q: Potential, k_range, settings=None, guesses=None) -> list:
    """Roots lambda_k of a - d for every k in ``k_range``.

    Parameters
    ----------
    q : Potential
    k_range : iterable of int
    guesses : dict, optional
        Warm starts ``{k: lambda}``; used by Newton loops for continuity.
        Falls back to the global search when a warm start fails.

    Returns
    -------
    list of SpectralSample (``z_k`` left as NaN)
    """
    s = resolve(settings)
    ks = sorted({int(k) for k in k_range})
    if not ks:
        return []
    if guesses is not None and all(k in guesses for k in ks):
        lam0 = np.array([guesses[k] for k in ks], dtype=complex)
        found, ok = _newton_roots(q, lam0, s, max_iter=20)
        window = s.root_window if s.root_window is not None else np.pi / q.T
        near = np.abs(found - lam0) < window
        distinct = np.min(
            np.abs(found[:, None] - found[None, :]) + np.eye(found.size) * 1e9, axis=1, initial=1e9
        ) > 1e-7
        if np.all(ok & near & distinct):
            f, _, _ = _f_and_df(q, found, s)
            return [SpectralSample(k, complex(z), residual=float(abs(r))) for k, z, r in zip(ks, found, f)]
    Kreq = max(abs(k) for k in ks)
    Kbig = Kreq + 1
    for _ in range(8):
        roots, count = _all_roots(q, Kbig, s)
        if count == 2 * Kbig + 1 and len(roots) == count:
            labels = _label(roots, Kbig)
            lam = np.array([labels[k] for k in ks], dtype=complex)
            f, _, _ = _f_and_df(q, lam, s)
            return [SpectralSample(k, complex(z), residual=float(abs(r))) for k, z, r in zip(ks, lam, f)]
        Kbig += 2
    raise RootLocalizationError(
        "could not match the root count of a - d to its asymptotic labelling",
        stage="roots",
        data={"K": Kbig, "count": count, "found": len(roots)},
    )


def perturbed_coeffs(q: Potential, k_range, settings=None, guesses=None) -> list:
    """SpectralSamples with z_k = 2 (-1)^k b(lambda_k)."""
    samples = find_lambda_k(q, k_range, settings, guesses)
    if not samples:
        return []
    lam = np.array([sm.lambda_k for sm in samples])
    M = monodromy(q, lam, settings=settings)
    out = []
    for sm, m in zip(samples, M):
        z = 2.0 * (-1.0) ** sm.k * m[0, 1]
        out.append(SpectralSample(sm.k, sm.lambda_k, complex(z), sm.residual))
    return out


def spectral_report(q: Potential, k_max, theta=None, settings=None) -> dict:
    """Spectral data in the JSON layout of the analysis report."""
    samples = perturbed_coeffs(q, range(-k_max, k_max + 1), settings)
    theta = q.theta if theta is None else theta
    rep = zero_order_at(q, 1j + theta, settings)
    return {
        "lambda_k": [[sm.k, sm.lambda_k.real, sm.lambda_k.imag] for sm in samples],
        "z_k": [[sm.k, sm.z_k.real, sm.z_k.imag] for sm in samples],
        "order_reports": [rep.to_dict()],
    }


# ---------------------------------------------------------------------------
# eigen data


def eigen_projector(M, sheet=1, lam=complex("nan"), tol=1e-6) -> EigenData:
    """Eigenvalue, eigenvectors of M and M^t, and P = v w^t / (w^t v).

    Raises
    ------
    IllConditionedEigenlineError
        If |mu - 1/mu| < tol, where the two eigenlines merge.
    """
    M = np.asarray(M, dtype=complex)
    mu = floquet_mu(tr2(M), sheet)
    gap = mu - 1.0 / mu
    if abs(gap) < tol:
        raise IllConditionedEigenlineError(
            "eigenline ill-conditioned, use OrderReport path",
            stage="eigen",
            data={"mu": mu},
        )
    # (M - mu)(M - 1/mu) = 0, so columns of M - 1/mu span the mu-eigenline
    A = M - IDENTITY / mu
    j = int(np.argmax(np.linalg.norm(A, axis=0)))
    v = A[:, j] / np.linalg.norm(A[:, j])
    At = A.T
    j = int(np.argmax(np.linalg.norm(At, axis=0)))
    w = At[:, j] / np.linalg.norm(At[:, j])
    P = np.outer(v, w) / (w @ v)
    return EigenData(complex(lam), complex(mu), v, w, P)


# ---------------------------------------------------------------------------
# directional derivatives


def _as_coeff_stack(q: Potential, dqs):
    """Coefficient stack of perturbations, padded to a common mode bound."""
    if isinstance(dqs, Potential):
        dqs = [dqs]
    K = max([q.K] + [d.K for d in dqs])
    return K, np.array([d.with_K(K).coeffs for d in dqs])


def conjugated_monodromy(q: Potential, lams, settings=None):
    """G(t, lambda) = F(t)^{-1} M F(t) on the integration grid.

    Shape (n_steps + 1, L, 2, 2); G is periodic in t.
    """
    s = resolve(settings)
    t, F = integrate_frames_batch(q.coeffs[None, :], q.T, np.atleast_1d(lams), s.n_steps)
    F = F[:, 0]
    M = F[-1]
    G = matmul2(matmul2(inv_sl2(F), M[None]), F)
    return t, G, F


def _trace_pairing(G, dq_values, T):
    """(1/2) int (G10 dq - G01 conj dq) dt by the periodic trapezoid rule.

    G has shape (n+1, L, 2, 2); dq_values has shape (P, n+1). Returns (P, L).
    """
    n = G.shape[0] - 1
    g10 = G[:-1, :, 1, 0]
    g01 = G[:-1, :, 0, 1]
    dv = dq_values[:, :-1]
    return 0.5 * (T / n) * (dv @ g10 - np.conj(dv) @ g01)


def directional_derivative_delta(q: Potential, lam, dq, method="auto", settings=None):
    """Derivative of Delta(lambda) in the direction ``dq``.

    Parameters
    ----------
    method : {"auto", "eigen", "trace"}
        "eigen" uses the eigenvectors v, w of M and M^t:
        ((mu - 1/mu) / (w^t v)) int (F^t w)^t dalpha (F^{-1} v) dt.
        "trace" uses int tr(F^{-1} M F dalpha) dt, which stays valid when
        M(lambda) = +-1. "auto" picks "eigen" unless |mu - 1/mu| is small.

    Returns
    -------
    complex, or ndarray if ``dq`` is a list of perturbations.
    """
    s = resolve(settings)
    single = isinstance(dq, Potential)
    dqs = [dq] if single else list(dq)
    if not dqs:
        return np.zeros(0, dtype=complex)
    K, C = _as_coeff_stack(q, dqs)
    t, G, F = conjugated_monodromy(q, [complex(lam)], s)
    phases = np.exp(2j * np.pi * np.multiply.outer(np.arange(-K, K + 1), t) / q.T)
    dv = C @ phases
    M = F[-1, 0]
    if method == "auto":
        mu = floquet_mu(tr2(M), 1)
        method = "eigen" if abs(mu - 1 / mu) > s.eigen_cond_tol else "trace"
    if method == "trace":
        out = _trace_pairing(G, dv, q.T)[:, 0]
    elif method == "eigen":
        ed = eigen_projector(M, 1, lam, s.eigen_cond_tol)
        Fw = np.einsum("tji,j->ti", F[:, 0], ed.w)  # F(t)^t w
        Fv = np.einsum("tij,j->ti", inv_sl2(F[:, 0]), ed.v)  # F(t)^{-1} v
        n = t.size - 1
        # (F^t w)^t dalpha (F^{-1} v) with dalpha = 1/2 [[0, dq], [-conj dq, 0]]
        kern = 0.5 * (Fw[:-1, 0] * Fv[:-1, 1] * dv[:, :-1] - Fw[:-1, 1] * Fv[:-1, 0] * np.conj(dv[:, :-1]))
        out = (ed.mu - 1 / ed.mu) / (ed.w @ ed.v) * np.sum(kern, axis=1) * (q.T / n)
    else:
        raise InputError(f"unknown method {method!r}")
    return complex(out[0]) if single else out


def delta_gradients(q: Potential, lam, dqs, settings=None):
    """Derivatives of Delta and Delta' at ``lam`` along each perturbation.

    The trace form is evaluated at the five stencil points; the lambda
    derivative of the pairing gives the variation of Delta'.

    Returns
    -------
    d_delta, d_delta1 : ndarray, shape (P,)
    """
    s = resolve(settings)
    h = stencil_step(lam, s)
    lams = _stencil_lams(complex(lam), h)
    K, C = _as_coeff_stack(q, dqs)
    t, G, _ = conjugated_monodromy(q, lams, s)
    phases = np.exp(2j * np.pi * np.multiply.outer(np.arange(-K, K + 1), t) / q.T)
    vals = _trace_pairing(G, C @ phases, q.T)  # (P, 5)
    d0, d1, _ = _stencil_combine(vals, h)
    return d0, d1


# ---------------------------------------------------------------------------
# zero orders


def zero_order_at(q: Potential, lambda_star, settings=None, radius=None, nodes=None, tol=None) -> OrderReport:
    """Orders of the zeros of Delta^2 - 4 and of N = M - Delta/2 at ``lambda_star``.

    Taylor coefficients come from the trapezoid rule on the circle
    |lambda - lambda_star| = radius. A coefficient counts as nonzero when
    ||c_j|| radius^j exceeds ``tol`` times the largest value on the contour.
    """
    s = resolve(settings)
    r = s.order_radius if radius is None else radius
    m = s.order_nodes if nodes is None else nodes
    tol = s.order_tol if tol is None else tol
    lam_star = complex(lambda_star)
    u = np.exp(2j * np.pi * np.arange(m) / m)
    M = monodromy(q, lam_star + r * u, settings=s)
    delta = tr2(M)
    D = delta**2 - 4
    N = M - 0.5 * delta[:, None, None] * IDENTITY
    # scaled Taylor coefficients d_j r^j and c_j r^j
    Dh = np.fft.fft(D) / m
    Nh = np.fft.fft(N, axis=0) / m
    scaleD = float(np.max(np.abs(D)))
    scaleN = float(np.max(opnorm(N)))
    half = m // 2
    big_D = np.flatnonzero(np.abs(Dh[:half]) > tol * scaleD)
    big_N = np.flatnonzero(opnorm(Nh[:half]) > tol * scaleN)
    if big_D.size == 0 or big_N.size == 0:
        raise OrderDetectionError(
            "Delta^2 - 4 or N vanishes identically on the contour",
            stage="order",
            data={"lambda_star": lam_star},
        )
    n = int(big_D[0])
    j0 = int(big_N[0])
    # argument principle with the spectrally differentiated contour values
    jj = np.arange(m)
    dD = np.fft.ifft(np.where(jj < half, jj, 0) * Dh) * m  # = (lambda - lambda_star) D'
    wind = complex(np.mean(dD / D))
    if abs(wind - n) > 1e-3 or n >= half - 2:
        raise OrderDetectionError(
            "winding number disagrees with the Taylor order; adjust the contour radius",
            stage="order",
            data={"winding": wind, "n": n, "radius": r},
        )
    if j0 > n // 2:
        raise OrderDetectionError(
            f"order arithmetic violated: j0 = {j0} > floor(n/2) with n = {n}",
            stage="order",
            data={"n": n, "j0": j0},
        )
    Nt = Nh[j0] / r**j0
    nt = float(opnorm(Nt))
    nilpotent = abs(det2(Nt)) <= math.sqrt(tol) * nt * nt
    degenerate = (n == 2 * j0) and not nilpotent and n > 0
    line = None
    if nilpotent:
        line = _kernel_line(Nt)
    return OrderReport(
        lam_star, n, j0, Nt, bool(nilpotent), bool(degenerate), line,
        float(wind.real), tol * scaleN, Nh / (r ** np.arange(m))[:, None, None],
    )


def _kernel_line(A) -> CPLine:
    _, _, vh = np.linalg.svd(np.asarray(A, dtype=complex))
    return CPLine.from_vector(np.conj(vh[-1]))


def baker_akhiezer_line(report, noise=1e-12) -> CPLine:
    """Kernel of the leading Taylor coefficient N~ of N at the spectral point.

    Accepts an OrderReport or the 2x2 matrix itself. When N~ is invertible
    (the degenerate case n = 2 j0) there is no kernel; an eigenline of N~ is
    returned instead, the one whose eigenvalue is larger in (Re, Im) order,
    and the report's ``nilpotent`` flag stays false.
    """
    if isinstance(report, OrderReport):
        Nt = report.N_tilde
        degenerate = report.degenerate
    else:
        Nt = np.asarray(report, dtype=complex)
        nt = float(opnorm(Nt))
        degenerate = nt > noise and abs(det2(Nt)) > 1e-6 * nt * nt
    if float(opnorm(Nt)) <= noise:
        raise OrderDetectionError("leading coefficient below the noise floor", stage="ba_line")
    if degenerate:
        w, V = np.linalg.eig(Nt)
        j = max(range(2), key=lambda i: (round(w[i].real, 12), round(w[i].imag, 12)))
        return CPLine.from_vector(V[:, j])
    return _kernel_line(Nt)


def delta_and_derivative(q: Potential, lam, settings=None):
    d0, d1, _ = discriminant(q, lam, settings)
    return d0, d1
