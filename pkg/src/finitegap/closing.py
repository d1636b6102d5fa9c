"""Closing condition, Newton inversion of the spectral target map, pipeline.

The curve of a potential q with torsion rate theta closes exactly when
M(i + theta) = +-1. The pipeline approximates a closed q by closed finite-gap
potentials q_n:

1. undress: q~ = g_{L^perp} # q for a line L chosen so that the monodromy of
   q~ at lambda* = i + theta is +-1 plus a nonzero nilpotent with kernel L;
2. Newton: keep the modes |k| <= n of q~ (up to four low-mode directions),
   solve for the modes n < |k| <= K so that z_k = 0 there while
   Delta(lambda*) = +-2 and Delta'(lambda*) = 0;
3. re-dress with the Baker-Akhiezer line of the Newton output, which restores
   M(lambda*) = +-1.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .config import resolve
from .dressing import SimpleFactor, dress_potential
from .errors import (
    ClosureError,
    DirectionSelectionError,
    InputError,
    NewtonError,
    NumericalError,
    OrderDetectionError,
    SymmetryViolationError,
)
from .frame import (
    _stencil_combine,
    _stencil_lams,
    discriminant_batch,
    monodromy,
    monodromy_batch,
    parallel_map,
    stencil_step,
)
from .potential import Potential, l2_distance
from .sl2core import IDENTITY, CPLine, opnorm, tr2
from .spectral import (
    OrderReport,
    baker_akhiezer_line,
    delta_gradients,
    perturbed_coeffs,
    zero_order_at,
)

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# closure diagnostics


@dataclass(frozen=True, eq=False)
class ClosureReport:
    lambda_star: complex
    delta: complex
    delta1: complex
    sign: int
    m_residual: float
    n: int | None
    j0: int | None
    semisimple: bool
    order: OrderReport | None = None

    @property
    def closed(self) -> bool:
        return self.semisimple

    def to_dict(self) -> dict:
        return {
            "lambda_star": [self.lambda_star.real, self.lambda_star.imag],
            "delta": [self.delta.real, self.delta.imag],
            "delta1": [self.delta1.real, self.delta1.imag],
            "sign": self.sign,
            "m_residual": self.m_residual,
            "n": self.n,
            "j0": self.j0,
            "semisimple": self.semisimple,
        }


def closure_residual(q: Potential, theta=None, settings=None, with_order=True) -> ClosureReport:
    """Closing-condition diagnostics at lambda* = i + theta.

    ``m_residual`` is ||M(lambda*) - sign 1|| with sign = +-1 the nearer of the
    two; ``semisimple`` means m_residual <= settings.closure_tol.
    """
    s = resolve(settings)
    theta = q.theta if theta is None else float(theta)
    lam = 1j + theta
    d0, d1, _, M = discriminant_batch(q.coeffs[None, :], q.T, lam, s, with_monodromy=True)
    delta, delta1, M = complex(d0[0]), complex(d1[0]), M[0]
    sign = 1 if delta.real >= 0 else -1
    m_res = float(opnorm(M - sign * IDENTITY))
    order = None
    n = j0 = None
    if with_order:
        try:
            order = zero_order_at(q, lam, s)
            n, j0 = order.n, order.j0
        except OrderDetectionError as exc:
            log.warning("order detection failed: %s", exc)
    return ClosureReport(lam, delta, delta1, sign, m_res, n, j0, m_res <= s.closure_tol, order)


# ---------------------------------------------------------------------------
# perturbation directions


def _mode_vector(K, k, value=1.0):
    c = np.zeros(2 * K + 1, dtype=complex)
    c[k + K] = value
    return c


def candidate_directions(T, max_mode=6, real=False, K=None, exclude=()):
    """Unit low-frequency perturbations.

    Complex: exp(2 pi i k t/T) and i exp(2 pi i k t/T) for |k| <= max_mode.
    Real: 1, and for 1 <= k <= max_mode the real perturbations
    e_k + e_{-k} and i (e_k - e_{-k}).
    """
    K = max_mode if K is None else max(K, max_mode)
    exclude = {abs(int(k)) for k in exclude}
    out = []
    if real:
        if 0 not in exclude:
            out.append(Potential(T, _mode_vector(K, 0)))
        for k in range(1, max_mode + 1):
            if k in exclude:
                continue
            out.append(Potential(T, _mode_vector(K, k) + _mode_vector(K, -k)))
            out.append(Potential(T, 1j * (_mode_vector(K, k) - _mode_vector(K, -k))))
    else:
        for k in range(-max_mode, max_mode + 1):
            if abs(k) in exclude:
                continue
            out.append(Potential(T, _mode_vector(K, k)))
            out.append(Potential(T, _mode_vector(K, k, 1j)))
    return out


def eta_matrix(q: Potential, lam, dqs, real=False, settings=None) -> np.ndarray:
    """Real matrix of the linear forms Re/Im dDelta, Re/Im dDelta' on each perturbation.

    Complex potentials give rows (Re dDelta, Im dDelta, Re dDelta', Im dDelta');
    real potentials at a purely imaginary lambda give (dDelta, Im dDelta'),
    the other two vanishing by symmetry.
    """
    d0, d1 = delta_gradients(q, lam, dqs, settings)
    if real:
        return np.vstack([d0.real, d1.imag])
    return np.vstack([d0.real, d0.imag, d1.real, d1.imag])


@dataclass(frozen=True, eq=False)
class DirectionSet:
    directions: list
    matrix: np.ndarray
    singular_values: np.ndarray
    labels: list = field(default_factory=list)


def select_directions(q: Potential, theta=None, settings=None, max_mode=6, real=False,
                      candidates=None) -> DirectionSet:
    """Choose perturbations whose eta-matrix has full rank.

    Column-pivoted QR on the eta-values of all candidates picks the columns;
    the chosen square block must have smallest singular value above
    ``settings.direction_sigma_min``.
    """
    s = resolve(settings)
    theta = q.theta if theta is None else float(theta)
    lam = 1j + theta
    if candidates is None:
        candidates = candidate_directions(q.T, max_mode, real)
    rows = 2 if real else 4
    if len(candidates) < rows:
        raise DirectionSelectionError(
            f"need at least {rows} candidate directions, got {len(candidates)}", stage="directions"
        )
    A = eta_matrix(q, lam, candidates, real, s)
    _, _, piv = scipy.linalg.qr(A, pivoting=True, mode="economic")
    chosen = sorted(piv[:rows].tolist())
    sub = A[:, chosen]
    sv = np.linalg.svd(sub, compute_uv=False)
    all_sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= s.direction_sigma_min:
        raise DirectionSelectionError(
            "no full-rank set of directions among the candidates",
            stage="directions",
            data={"singular_values": all_sv.tolist()},
        )
    return DirectionSet([candidates[j] for j in chosen], sub, sv, chosen)


# ---------------------------------------------------------------------------
# Newton


@dataclass(frozen=True, eq=False)
class NewtonTarget:
    """Square system for the Newton solver.

    ``mode`` is "complex" (targets z_k for N < |k| <= K plus Delta and Delta'),
    "real" (z_k for N < k <= K, Delta and Im Delta') or "truncation"
    (z_k only). ``real_potential`` selects real unknowns for the truncation
    mode.
    """

    lambda_star: complex
    N: int
    K: int
    z_targets: dict
    delta_target: complex = 0j
    directions: tuple = ()
    mode: str = "complex"
    real_potential: bool = False

    def __post_init__(self):
        if self.mode not in ("complex", "real", "truncation"):
            raise InputError(f"unknown Newton mode {self.mode!r}")
        if self.K <= self.N and self.mode == "truncation":
            raise InputError("truncation target needs K > N")
        need = {"complex": 4, "real": 2, "truncation": 0}[self.mode]
        if len(self.directions) != need:
            raise InputError(f"mode {self.mode} needs {need} directions")
        missing = [k for k in self.target_ks if k not in self.z_targets]
        if missing:
            raise InputError(f"missing z targets for k = {missing}")

    @property
    def real(self) -> bool:
        return self.mode == "real" or (self.mode == "truncation" and self.real_potential)

    @property
    def target_ks(self) -> list:
        if self.real:
            return list(range(self.N + 1, self.K + 1))
        return [k for k in range(-self.K, self.K + 1) if abs(k) > self.N]


@dataclass(frozen=True, eq=False)
class NewtonResult:
    potential: Potential
    iterations: int
    residuals: list
    converged: bool
    amplitudes: np.ndarray
    lambda_k: dict


def _unknown_basis(target: NewtonTarget, T, Kf):
    basis = []
    for k in range(target.N + 1, target.K + 1):
        if target.real:
            basis.append(_mode_vector(Kf, k) + _mode_vector(Kf, -k))
            basis.append(1j * (_mode_vector(Kf, k) - _mode_vector(Kf, -k)))
        else:
            for kk in (-k, k):
                basis.append(_mode_vector(Kf, kk))
                basis.append(_mode_vector(Kf, kk, 1j))
    for d in target.directions:
        basis.append(d.with_K(Kf).coeffs)
    return np.array(basis)


def _pack(target: NewtonTarget, z, delta, delta1):
    """Residual vector from z_k (in target_ks order), Delta and Delta' (arrays over a batch)."""
    zt = np.array([target.z_targets[k] for k in target.target_ks])
    dz = z - zt[..., :]
    parts = [dz.real, dz.imag]
    if target.mode == "complex":
        dd = delta - target.delta_target
        parts += [dd.real[..., None], dd.imag[..., None], delta1.real[..., None], delta1.imag[..., None]]
    elif target.mode == "real":
        parts += [(delta - target.delta_target).real[..., None], delta1.imag[..., None]]
    return np.concatenate(parts, axis=-1)


class _SpectralMap:
    """Evaluates the target map and its forward-difference Jacobian."""

    def __init__(self, target: NewtonTarget, settings):
        self.t = target
        self.s = settings
        self.ks = target.target_ks
        self.guesses = None

    def _closure_parts(self):
        return self.t.mode in ("complex", "real")

    def evaluate(self, q: Potential):
        samples = perturbed_coeffs(q, self.ks, self.s, self.guesses)
        lam_k = np.array([sm.lambda_k for sm in samples])
        z = np.array([sm.z_k for sm in samples])
        self.guesses = {sm.k: sm.lambda_k for sm in samples}
        if self._closure_parts():
            d0, d1, _ = discriminant_batch(q.coeffs[None, :], q.T, self.t.lambda_star, self.s)
            delta, delta1 = d0[0], d1[0]
        else:
            delta = delta1 = np.zeros(())
        return _pack(self.t, z, delta, delta1), lam_k

    def jacobian(self, q: Potential, lam_k, basis, eps):
        """Forward differences; perturbed roots are linearized around ``lam_k``."""
        s = self.s
        nk = lam_k.size
        # base derivatives of a - d and b at the roots
        h = np.array([stencil_step(l, s) for l in lam_k])
        grid = (lam_k[:, None] + h[:, None] * np.arange(-2, 3)[None, :]).reshape(-1)
        Mb = monodromy(q, grid, settings=s).reshape(nk, 5, 2, 2)
        f_b = Mb[..., 0, 0] - Mb[..., 1, 1]
        b_b = Mb[..., 0, 1]
        _, fprime, _ = _stencil_combine(f_b, h)
        _, bprime, _ = _stencil_combine(b_b, h)
        coeffs = q.coeffs[None, :] + eps * basis
        coeffs = np.vstack([q.coeffs[None, :], coeffs])
        lams = lam_k
        if self._closure_parts():
            hs = stencil_step(self.t.lambda_star, s)
            lams = np.concatenate([lam_k, _stencil_lams(self.t.lambda_star, hs)])
        if s.threads > 1:
            chunks = np.array_split(coeffs, min(s.threads, coeffs.shape[0]))
            parts = parallel_map(lambda c: monodromy_batch(c, q.T, lams, settings=s), chunks, s.threads)
            M = np.concatenate(parts)
        else:
            M = monodromy_batch(coeffs, q.T, lams, settings=s)
        Mk = M[:, :nk]
        f = Mk[..., 0, 0] - Mk[..., 1, 1]
        b = Mk[..., 0, 1]
        sgn = (-1.0) ** np.array(self.ks)
        z = 2.0 * sgn * (b - bprime * f / fprime)
        if self._closure_parts():
            d0, d1, _ = _stencil_combine(tr2(M[:, nk:]), hs)
        else:
            d0 = d1 = np.zeros(coeffs.shape[0])
        R = _pack(self.t, z, d0, d1)
        return ((R[1:] - R[:1]) / eps).T


def newton_close(target: NewtonTarget, q0: Potential, max_iter=None, tol=None, settings=None,
                 cond_max=1e12) -> NewtonResult:
    """Damped Newton iteration for the target map.

    Unknowns are the modes N < |k| <= K (complex, or real pairs) and the
    amplitudes of ``target.directions``. All other Fourier modes of ``q0``
    are left untouched, so modes |k| <= N change only along the directions.

    Returns
    -------
    NewtonResult
        ``residuals[m]`` is the max-norm of the residual after m iterations.
    """
    s = resolve(settings)
    max_iter = s.max_iter if max_iter is None else max_iter
    tol = s.newton_tol if tol is None else tol
    Kf = max(q0.K, target.K, max((d.K for d in target.directions), default=0))
    q0 = q0.with_K(Kf)
    basis = _unknown_basis(target, q0.T, Kf)
    fmap = _SpectralMap(target, s)
    R, lam_k = fmap.evaluate(q0)
    if basis.shape[0] != R.size:
        raise NewtonError(
            f"Newton system is not square: {basis.shape[0]} unknowns, {R.size} equations",
            stage="newton",
        )
    x = np.zeros(basis.shape[0])
    q = q0
    history = [float(np.max(np.abs(R)))]
    eps = s.fd_step * max(1.0, float(np.max(np.abs(q0.coeffs))))
    it = 0
    while history[-1] > tol and it < max_iter:
        J = fmap.jacobian(q, lam_k, basis, eps)
        cond = np.linalg.cond(J)
        if not np.isfinite(cond) or cond > cond_max:
            raise NewtonError(
                f"Newton Jacobian is singular (condition {cond:.3e})",
                stage="newton",
                data={"condition": float(cond), "iteration": it},
            )
        step = np.linalg.solve(J, -R)
        t = 1.0
        guesses = fmap.guesses
        for _ in range(12):
            xn = x + t * step
            qn = Potential(q0.T, q0.coeffs + xn @ basis, q0.theta)
            fmap.guesses = guesses
            try:
                Rn, lam_n = fmap.evaluate(qn)
            except Exception as exc:  # a wild trial step may break root tracking
                log.debug("trial step rejected: %s", exc)
                t *= 0.5
                continue
            if np.max(np.abs(Rn)) < history[-1] or t < 1e-3:
                break
            t *= 0.5
        else:
            raise NewtonError("line search failed", stage="newton", data={"iteration": it})
        x, q, R, lam_k = xn, qn, Rn, lam_n
        it += 1
        history.append(float(np.max(np.abs(R))))
        log.info("newton iteration %d: residual %.3e (step %.3g)", it, history[-1], t)
    converged = history[-1] <= tol
    amps = x[basis.shape[0] - len(target.directions):] if target.directions else np.zeros(0)
    return NewtonResult(q, it, history, converged, amps, dict(zip(fmap.ks, lam_k)))


def newton_matrix_variational(q: Potential, target: NewtonTarget, settings=None) -> np.ndarray:
    """Delta and Delta' rows of the Jacobian from the trace-form variation.

    Cross-check for the forward differences used by ``newton_close``.
    """
    s = resolve(settings)
    Kf = max(q.K, target.K, max((d.K for d in target.directions), default=0))
    basis = _unknown_basis(target, q.T, Kf)
    dqs = [Potential(q.T, b) for b in basis]
    d0, d1 = delta_gradients(q.with_K(Kf), target.lambda_star, dqs, s)
    if target.mode == "complex":
        return np.vstack([d0.real, d0.imag, d1.real, d1.imag])
    return np.vstack([d0.real, d1.imag])


def truncate_coeffs(samples, n, real=False) -> dict:
    """Targets keeping z_k for |k| <= n and zero beyond.

    With ``real`` the targets are made conjugate-symmetric,
    z_{-k} = conj(z_k), taking the value at k >= 0 when both are present.
    """
    out = {sm.k: (complex(sm.z_k) if abs(sm.k) <= n else 0j) for sm in samples}
    if real:
        for k in [k for k in out if k > 0]:
            out[-k] = np.conj(out[k])
        if 0 in out:
            out[0] = complex(out[0].real)
    return out


def _target_sign(delta, policy):
    if policy == "plus":
        return 1
    if policy == "minus":
        return -1
    return 1 if complex(delta).real >= 0 else -1


def newton_target_for(q: Potential, theta, N, K, directions=(), mode="complex", z=None,
                      settings=None, real_potential=False):
    """Target that keeps the current z_k (or the given ones) and asks for Delta = +-2, Delta' = 0."""
    s = resolve(settings)
    lam = 1j + theta
    probe = NewtonTarget(lam, N, K, {k: 0j for k in range(-K, K + 1)}, 0j, tuple(directions), mode,
                         real_potential)
    if z is None:
        z = {sm.k: sm.z_k for sm in perturbed_coeffs(q, probe.target_ks, s)}
    d0, _, _ = discriminant_batch(q.coeffs[None, :], q.T, lam, s)
    sign = _target_sign(d0[0], s.sign_policy)
    return NewtonTarget(lam, N, K, dict(z), 2.0 * sign, tuple(directions), mode, real_potential)


# ---------------------------------------------------------------------------
# pipeline


def _line_vector(a, phi):
    return np.array([math.cos(a), np.exp(1j * phi) * math.sin(a)])


def undressing_line(N_tilde, real=False) -> CPLine:
    """Line L maximizing |<v_L, N_tilde v_{L^perp}>|.

    Dressing with the factor of L^perp turns a monodromy +-1 + (lambda - lambda*) N_tilde
    into +-1 plus a nilpotent whose kernel is L, with size proportional to
    this pairing. ``real`` restricts L to real lines.
    """
    A = np.asarray(N_tilde, dtype=complex)

    def score(v):
        v = v / np.linalg.norm(v)
        u = np.array([-np.conj(v[1]), np.conj(v[0])])
        return abs(np.conj(v) @ A @ u)

    if real:
        grid = np.linspace(0.0, np.pi, 361)[:-1]
        vals = [score(_line_vector(a, 0.0)) for a in grid]
        a0 = grid[int(np.argmax(vals))]
        res = scipy.optimize.minimize_scalar(
            lambda a: -score(_line_vector(a, 0.0)), bracket=(a0 - 0.01, a0, a0 + 0.01)
        )
        return CPLine.from_vector(_line_vector(float(res.x), 0.0))
    best, arg = -1.0, (0.0, 0.0)
    for a in np.linspace(0.0, np.pi / 2, 33):
        for phi in np.linspace(0.0, 2 * np.pi, 64, endpoint=False):
            val = score(_line_vector(a, phi))
            if val > best:
                best, arg = val, (a, phi)
    res = scipy.optimize.minimize(lambda p: -score(_line_vector(p[0], p[1])), np.array(arg),
                                  method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14})
    return CPLine.from_vector(_line_vector(*res.x))


@dataclass(frozen=True, eq=False)
class PipelineResult:
    potential: Potential
    n: int
    K: int
    closure: ClosureReport
    newton: NewtonResult
    l2_distance: float
    undressed: Potential
    undressing_line: CPLine | None
    ba_line: CPLine | None
    directions: DirectionSet | None
    runtime: float

    def provenance(self) -> dict:
        return {
            "n": self.n,
            "K": self.K,
            "iterations": self.newton.iterations,
            "newton_residuals": self.newton.residuals,
            "closure": self.closure.to_dict(),
            "l2_distance": self.l2_distance,
            "runtime_s": self.runtime,
        }


def _check_closed(q, theta, s):
    rep = closure_residual(q, theta, s)
    if not rep.semisimple:
        raise ClosureError(
            "input fails closing condition",
            stage="closing-check",
            data={"m_residual": rep.m_residual},
        )
    return rep


class _stage:
    """Context manager tagging untagged numerical errors with a pipeline stage."""

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, NumericalError) and exc.stage is None:
            exc.stage = self.name
        return False


def _initial_residual(q, lam, z, ks, delta_target, s):
    d0, d1, _ = discriminant_batch(q.coeffs[None, :], q.T, lam, s)
    zs = np.array([z[k] for k in ks])
    now = np.array([sm.z_k for sm in perturbed_coeffs(q, ks, s)])
    return max(float(np.max(np.abs(now - zs), initial=0.0)), abs(d0[0] - delta_target), abs(d1[0]))


def finite_gap_approximate(q: Potential, theta=None, n=2, settings=None, K_margin=None,
                           real=False) -> PipelineResult:
    """Closed finite-gap approximation q_n of a closed potential ``q``.

    See the module docstring for the three stages. ``real`` keeps every
    stage inside real potentials and real lines (curves in H^2). When the
    undressed potential already meets the targets, Newton is skipped and no
    directions are selected.
    """
    start = time.perf_counter()
    s = resolve(settings)
    theta = q.theta if theta is None else float(theta)
    if n < 0:
        raise InputError("n must be non-negative")
    K = n + (s.K_margin if K_margin is None else K_margin)
    lam = 1j + theta
    _check_closed(q, theta, s)
    with _stage("undress"):
        order = zero_order_at(q, lam, s)
        line = undressing_line(order.N_tilde, real=real)
        q_tilde = dress_potential(q, SimpleFactor(lam, line.perp()), settings=s)
        if real:
            q_tilde = q_tilde.real_part()
        q_tilde = q_tilde.with_K(max(q_tilde.K, K))
    mode = "real" if real else "complex"
    if real:
        ks = list(range(n + 1, K + 1))
    else:
        ks = [k for k in range(-K, K + 1) if abs(k) > n]
    with _stage("truncate"):
        z = truncate_coeffs(perturbed_coeffs(q_tilde, ks, s), n, real=real)
        d0, _, _ = discriminant_batch(q_tilde.coeffs[None, :], q_tilde.T, lam, s)
        sign = _target_sign(d0[0], s.sign_policy)
        r0 = _initial_residual(q_tilde, lam, z, ks, 2.0 * sign, s)
    dirs = None
    if r0 <= max(s.newton_tol, s.skip_tol):
        res = NewtonResult(q_tilde, 0, [float(r0)], True, np.zeros(0), {})
    else:
        with _stage("directions"):
            dirs = select_directions(q_tilde, theta, s, max_mode=min(6, n), real=real)
        target = NewtonTarget(lam, n, K, z, 2.0 * sign, tuple(dirs.directions), mode)
        with _stage("newton"):
            res = newton_close(target, q_tilde, settings=s)
        if not res.converged:
            raise NewtonError(
                f"Newton did not converge (residual {res.residuals[-1]:.3e}); try a larger n",
                stage="newton",
                data={"residuals": res.residuals},
            )
    qn_tilde = res.potential
    with _stage("redress"):
        order_n = zero_order_at(qn_tilde, lam, s)
        ba = baker_akhiezer_line(order_n)
        if real:
            v = ba.vector
            ba = CPLine.from_vector(v.real if np.max(np.abs(v.imag)) <= 1e-6 else v)
        q_n = dress_potential(qn_tilde, SimpleFactor(lam, ba), settings=s, warn=False)
    if real:
        drift = float(np.max(np.abs(q_n.coeffs - np.conj(q_n.coeffs[::-1]))))
        if drift > 1e-9:
            raise SymmetryViolationError(
                f"realness drift {drift:.3e}", stage="real-pipeline", data={"drift": drift}
            )
        q_n = q_n.real_part()
    rep = closure_residual(q_n, theta, s)
    if not rep.semisimple:
        raise ClosureError(
            f"output fails closing condition (m_residual {rep.m_residual:.3e})",
            stage="redress",
            data={"m_residual": rep.m_residual},
        )
    dist = l2_distance(q_n, q)
    return PipelineResult(q_n, n, K, rep, res, dist, q_tilde, line, ba, dirs,
                          time.perf_counter() - start)


def finite_gap_approximate_real(q: Potential, form="H2", n=2, settings=None, K_margin=None):
    """Real-potential variant for the space forms R^2, S^2 and H^2.

    H2 runs the full closing pipeline inside real potentials at lambda* = i.
    R2 and S2 only solve the truncation targets z_k = 0 for n < k <= K; their
    closing conditions are not part of this library.
    """
    s = resolve(settings)
    if form not in ("R2", "S2", "H2"):
        raise InputError(f"unknown form {form!r}")
    if not q.is_real(1e-9):
        raise InputError("finite_gap_approximate_real: potential is not real")
    q = q.real_part()
    if form == "H2":
        return finite_gap_approximate(q.with_theta(0.0), 0.0, n, s, K_margin, real=True)
    start = time.perf_counter()
    K = n + (s.K_margin if K_margin is None else K_margin)
    lam = 1j
    target = NewtonTarget(lam, n, K, {k: 0j for k in range(n + 1, K + 1)}, 0j, (), "truncation", True)
    res = newton_close(target, q.with_K(max(q.K, K)), settings=s)
    if not res.converged:
        raise NewtonError("Newton did not converge", stage="newton", data={"residuals": res.residuals})
    q_n = res.potential
    drift = float(np.max(np.abs(q_n.coeffs - np.conj(q_n.coeffs[::-1]))))
    if drift > 1e-9:
        raise SymmetryViolationError(f"realness drift {drift:.3e}", stage="real-pipeline")
    rep = closure_residual(q_n, 0.0, s, with_order=False)
    return PipelineResult(q_n, n, K, rep, res, l2_distance(q_n, q), q, None, None, None,
                          time.perf_counter() - start)


def close_by_dressing(q0: Potential, theta=None, N=2, K=None, settings=None, real=False, exclude=()):
    """Turn a potential near a closed one into a closed potential.

    Newton keeps z_k for N < |k| <= K and imposes Delta = +-2, Delta' = 0 at
    lambda* = i + theta; dressing with the Baker-Akhiezer line of the result
    then makes M(lambda*) = +-1. Modes in ``exclude`` are not used as
    directions; excluding the modes of a small perturbation of a closed
    potential keeps Newton from simply undoing it.

    Returns
    -------
    (closed potential, NewtonResult)
    """
    s = resolve(settings)
    theta = q0.theta if theta is None else float(theta)
    K = N + s.K_margin if K is None else K
    lam = 1j + theta
    cands = candidate_directions(q0.T, min(6, N), real, exclude=exclude)
    dirs = select_directions(q0, theta, s, real=real, candidates=cands)
    mode = "real" if real else "complex"
    target = newton_target_for(q0.with_K(max(q0.K, K)), theta, N, K, dirs.directions, mode, settings=s)
    res = newton_close(target, q0, settings=s)
    if not res.converged:
        raise NewtonError("Newton did not converge", stage="newton", data={"residuals": res.residuals})
    order = zero_order_at(res.potential, lam, s)
    ba = baker_akhiezer_line(order)
    return dress_potential(res.potential, SimpleFactor(lam, ba), settings=s, warn=False), res
