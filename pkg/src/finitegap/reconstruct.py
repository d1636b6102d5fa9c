"""Curves in H^3 from potentials, and numerical curvature and torsion.

A point of H^3 is a Hermitian matrix X > 0 with det X = 1; in Pauli
coordinates this is the upper sheet of the hyperboloid x0^2 - |x|^2 = 1.
With F = F(t, i + theta) and the reality condition, the Sym formula reads
gamma = F F^* and gamma' = F diag(-1, 1) F^*.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .config import resolve
from .errors import DegenerateCurveError, InputError
from .frame import integrate_frames_batch, monodromy
from .potential import CurveSamples, Potential
from .sl2core import IDENTITY, dagger, hermitian_coordinates, hyperboloid_to_ball, matmul2, minkowski, opnorm

I_EPS = np.diag([-1.0, 1.0]).astype(complex)


def sym_reconstruct(q: Potential, theta=None, n_samples=256, settings=None, initial=None) -> CurveSamples:
    """Sample the curve with periodic potential ``q`` and torsion rate ``theta``.

    Parameters
    ----------
    q : Potential
    theta : float, optional
        Defaults to ``q.theta``.
    n_samples : int
        Number of intervals of the output grid on [0, T]; the integration uses
        at least ``settings.n_steps`` steps, split evenly over the intervals.
    initial : (2, 2) array, optional
        Initial frame G in SL2(C); the curve is then moved by X -> G X G^*.
    """
    s = resolve(settings)
    if n_samples < 8:
        raise InputError("sym_reconstruct: need at least 8 samples")
    theta = q.theta if theta is None else float(theta)
    t, F = integrate_frames_batch(q.coeffs[None, :], q.T, [1j + theta], s.n_steps, n_samples)
    F = F[:, 0, 0]
    if initial is not None:
        F = matmul2(np.asarray(initial, dtype=complex)[None], F)
    Fd = dagger(F)
    pts = matmul2(F, Fd)
    vel = matmul2(matmul2(F, I_EPS[None]), Fd)
    return CurveSamples(t, pts, vel)


def curve_closure_gap(q: Potential, theta=None, settings=None) -> float:
    """min over s = +-1 of ||M(i + theta) - s 1||; zero exactly when the curve closes."""
    theta = q.theta if theta is None else float(theta)
    M = monodromy(q, 1j + theta, settings=settings)
    return float(min(opnorm(M - IDENTITY), opnorm(M + IDENTITY)))


def endpoint_gap(curve: CurveSamples) -> float:
    return float(opnorm(curve.points[-1] - curve.points[0]))


def hyperbolic_distance(X, Y) -> float:
    """Geodesic distance between two points of H^3 (unit curvature)."""
    x = hermitian_coordinates(X)
    y = hermitian_coordinates(Y)
    return float(math.acosh(max(1.0, float(minkowski(x, y)))))


# ---------------------------------------------------------------------------
# numerical Frenet data


def _fd_weights(offsets, order):
    """Finite-difference weights for the derivative of the given order (Vandermonde solve)."""
    offsets = np.asarray(offsets, dtype=float)
    m = offsets.size
    A = np.vander(offsets, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(A, rhs)


_PERIODIC = {
    1: (np.arange(-2, 3), _fd_weights(np.arange(-2, 3), 1)),
    2: (np.arange(-2, 3), _fd_weights(np.arange(-2, 3), 2)),
    3: (np.arange(-3, 4), _fd_weights(np.arange(-3, 4), 3)),
}


def _derivative(x, h, order, closed):
    """Fourth-order finite difference along axis 0."""
    n = x.shape[0]
    if closed:
        offs, w = _PERIODIC[order]
        out = sum(wi * np.roll(x, -o, axis=0) for o, wi in zip(offs, w))
        return out / h**order
    width = order + 4  # stencil points for fourth-order accuracy
    if n < width:
        raise InputError("frenet_data: too few samples for the difference stencils")
    out = np.empty_like(x)
    half = width // 2
    for j in range(n):
        lo = min(max(j - half, 0), n - width)
        offs = np.arange(lo, lo + width) - j
        w = _fd_weights(offs, order)
        out[j] = np.tensordot(w, x[lo:lo + width], axes=(0, 0))
    return out / h**order


@dataclass(frozen=True, eq=False)
class FrenetData:
    t: np.ndarray
    kappa: np.ndarray
    tau: np.ndarray
    phase0: float
    speed_defect: float


def frenet_data(curve: CurveSamples, closed=None) -> FrenetData:
    """Geodesic curvature and torsion of a unit-speed curve in H^3.

    Derivatives of the hyperboloid coordinates x(t) use fourth-order
    differences (periodic when the curve is closed). With B the Lorentz form,
    the covariant acceleration is x'' - x, kappa^2 = -B(x'' - x, x'' - x) and
    tau = det[x, x', x'', x'''] / kappa^2.

    ``phase0`` is the argument of x1 - i x2 of the acceleration at t = 0, the
    phase of the complex curvature for a curve with the standard initial frame.
    """
    t = np.asarray(curve.t, dtype=float)
    x = hermitian_coordinates(curve.points)
    if closed is None:
        closed = bool(np.max(np.abs(x[-1] - x[0])) <= 1e-6 * max(1.0, float(np.max(np.abs(x)))))
    h = t[1] - t[0]
    xs = x[:-1] if closed else x
    d1 = _derivative(xs, h, 1, closed)
    d2 = _derivative(xs, h, 2, closed)
    d3 = _derivative(xs, h, 3, closed)
    if closed:
        d1, d2, d3, xs = (np.concatenate([a, a[:1]]) for a in (d1, d2, d3, xs))
    speed_defect = float(np.max(np.abs(minkowski(d1, d1) + 1.0)))
    acc = d2 - xs
    k2 = -minkowski(acc, acc)
    if np.any(k2 <= 0.0):
        raise DegenerateCurveError("curvature vanishes; Frenet frame undefined", stage="frenet")
    kappa = np.sqrt(k2)
    if np.min(kappa) < 1e-6 * max(1.0, float(np.max(kappa))):
        raise DegenerateCurveError("curvature vanishes; Frenet frame undefined", stage="frenet")
    vol = np.linalg.det(np.stack([xs, d1, d2, d3], axis=1))
    tau = vol / k2
    phase0 = float(np.angle(acc[0, 1] - 1j * acc[0, 2]))
    return FrenetData(t, kappa, tau, phase0, speed_defect)


# ---------------------------------------------------------------------------
# export


def curve_rows(curve: CurveSamples, chart="hyperboloid"):
    x = hermitian_coordinates(curve.points)
    b = hyperboloid_to_ball(x)
    if chart == "hyperboloid":
        header = ["t", "x0", "x1", "x2", "x3"]
        data = np.column_stack([curve.t, x])
    elif chart == "ball":
        header = ["t", "b1", "b2", "b3"]
        data = np.column_stack([curve.t, b])
    elif chart == "both":
        header = ["t", "x0", "x1", "x2", "x3", "b1", "b2", "b3"]
        data = np.column_stack([curve.t, x, b])
    else:
        raise InputError(f"unknown chart {chart!r}")
    return header, data


def write_curve_csv(path, curve: CurveSamples, chart="hyperboloid"):
    header, data = curve_rows(curve, chart)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in data:
            w.writerow([f"{v:.17g}" for v in row])


def write_curve_json(path, curve: CurveSamples, chart="hyperboloid", extra=None):
    header, data = curve_rows(curve, chart)
    out = {"columns": header, "rows": data.tolist()}
    if extra:
        out.update(extra)
    with open(path, "w") as fh:
        json.dump(out, fh)
