"""Periodic complex curvature potentials.

A potential is a trigonometric polynomial

    q(t) = sum_{|k| <= K} c_k exp(2 pi i k t / T)

together with its period ``T`` and the total-torsion rate ``theta``. The
potential stored here is always the periodic (gauged) one; the quasi-periodic
complex curvature of the curve is exp(i theta t) q(t).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCurveError, InputError, NotQuasiPeriodicError


@dataclass(frozen=True, eq=False)
class Potential:
    """Trigonometric-polynomial potential.

    Parameters
    ----------
    T : float
        Period (length of the curve).
    coeffs : ndarray, shape (2K+1,)
        Fourier coefficients c_{-K}, ..., c_K.
    theta : float
        Total-torsion rate; the Sym points are +-i + theta.
    """

    T: float
    coeffs: np.ndarray
    theta: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        if c.size % 2 != 1:
            raise InputError("Potential: coefficient array must have odd length 2K+1")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise InputError("Potential: period must be positive")
        if not np.all(np.isfinite(c)):
            raise InputError("Potential: non-finite Fourier coefficient")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "theta", float(self.theta))

    # construction -----------------------------------------------------------

    @classmethod
    def from_modes(cls, T, modes, theta=0.0, K=None) -> "Potential":
        """Build from a mapping ``{k: c_k}``."""
        modes = {int(k): complex(v) for k, v in dict(modes).items()}
        kmax = max((abs(k) for k in modes), default=0)
        K = kmax if K is None else max(int(K), kmax)
        c = np.zeros(2 * K + 1, dtype=complex)
        for k, v in modes.items():
            c[k + K] += v
        return cls(T, c, theta)

    @classmethod
    def zero(cls, T, K=0, theta=0.0) -> "Potential":
        return cls(T, np.zeros(2 * K + 1, dtype=complex), theta)

    @classmethod
    def constant(cls, T, value, K=0, theta=0.0) -> "Potential":
        return cls.from_modes(T, {0: value}, theta, K)

    @classmethod
    def from_samples(cls, values, T, K, theta=0.0) -> "Potential":
        """Project uniform samples q(jT/n), j < n, onto modes |k| <= K by FFT."""
        values = np.asarray(values, dtype=complex).reshape(-1)
        n = values.size
        if n <= 2 * K:
            raise InputError(f"from_samples: {n} samples cannot resolve K = {K}")
        spec = np.fft.fft(values) / n
        ks = np.arange(-K, K + 1)
        return cls(T, spec[ks % n], theta)

    # access -----------------------------------------------------------------

    @property
    def K(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    def mode(self, k) -> complex:
        k = int(k)
        if abs(k) > self.K:
            return 0j
        return complex(self.coeffs[k + self.K])

    def modes(self, drop_zeros=True) -> dict:
        return {
            int(k): complex(c)
            for k, c in zip(self.ks, self.coeffs)
            if not (drop_zeros and c == 0)
        }

    def evaluate(self, t):
        return evaluate(self, t)

    def grid(self, n) -> np.ndarray:
        return np.arange(n) * (self.T / n)

    def samples(self, n) -> np.ndarray:
        return self.evaluate(self.grid(n))

    def sup_norm(self, n=512) -> float:
        return float(np.max(np.abs(self.samples(max(n, 4 * self.K + 4)))))

    # algebra ----------------------------------------------------------------

    def with_K(self, K) -> "Potential":
        """Zero-pad or truncate to modes |k| <= K."""
        K = int(K)
        c = np.zeros(2 * K + 1, dtype=complex)
        m = min(K, self.K)
        c[K - m:K + m + 1] = self.coeffs[self.K - m:self.K + m + 1]
        return Potential(self.T, c, self.theta)

    def with_coeffs(self, coeffs) -> "Potential":
        return Potential(self.T, coeffs, self.theta)

    def with_theta(self, theta) -> "Potential":
        return Potential(self.T, self.coeffs, theta)

    def plus(self, other: "Potential", scale=1.0) -> "Potential":
        """self + scale * other, with the period and theta of self."""
        if abs(other.T - self.T) > 1e-12 * self.T:
            raise InputError("Potential.plus: mismatched periods")
        K = max(self.K, other.K)
        c = self.with_K(K).coeffs + scale * other.with_K(K).coeffs
        return Potential(self.T, c, self.theta)

    def conj(self) -> "Potential":
        """The potential conj(q(t))."""
        return Potential(self.T, np.conj(self.coeffs[::-1]), self.theta)

    def is_real(self, tol=1e-12) -> bool:
        return bool(np.max(np.abs(self.coeffs - np.conj(self.coeffs[::-1])), initial=0.0) <= tol)

    def real_part(self) -> "Potential":
        """Projection onto real-valued potentials."""
        return Potential(self.T, 0.5 * (self.coeffs + np.conj(self.coeffs[::-1])), self.theta)

    # serialization ----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "theta": self.theta,
            "modes": [[int(k), c.real, c.imag] for k, c in zip(self.ks, self.coeffs)],
        }

    @classmethod
    def from_dict(cls, data) -> "Potential":
        try:
            T = float(data["T"])
            theta = float(data.get("theta", 0.0))
            modes = {}
            for entry in data["modes"]:
                k, re, im = entry
                if int(k) != k:
                    raise InputError(f"non-integer mode index {k!r}")
                modes[int(k)] = modes.get(int(k), 0j) + complex(float(re), float(im))
        except InputError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed potential: {exc}") from exc
        return cls.from_modes(T, modes, theta)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


@dataclass(frozen=True, eq=False)
class CurveSamples:
    """Sampled curve in H^3 on a uniform grid t_j, j = 0..n, covering [0, T].

    ``points`` and ``velocities`` are stacks of 2x2 Hermitian matrices.
    """

    t: np.ndarray
    points: np.ndarray
    velocities: np.ndarray | None = None

    @property
    def T(self) -> float:
        return float(self.t[-1] - self.t[0])

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def hyperboloid(self) -> np.ndarray:
        from .sl2core import hermitian_coordinates

        return hermitian_coordinates(self.points)

    def ball(self) -> np.ndarray:
        from .sl2core import hyperboloid_to_ball

        return hyperboloid_to_ball(self.hyperboloid())

    @classmethod
    def from_hyperboloid(cls, t, x) -> "CurveSamples":
        from .sl2core import hermitian_from_coordinates

        return cls(np.asarray(t, dtype=float), hermitian_from_coordinates(x))


def evaluate(q: Potential, t):
    """q(t) = sum_k c_k exp(2 pi i k t / T); accepts scalar or array t."""
    t = np.asarray(t, dtype=float)
    if q.K == 0:
        return np.full(t.shape, q.coeffs[0], dtype=complex) if t.ndim else complex(q.coeffs[0])
    phase = np.exp(2j * np.pi * np.multiply.outer(t, q.ks) / q.T)
    out = phase @ q.coeffs
    return out if t.ndim else complex(out)


def l2_distance(q1: Potential, q2: Potential) -> float:
    """L2 distance on [0, T] computed from the coefficients (Parseval)."""
    if abs(q1.T - q2.T) > 1e-12 * max(q1.T, q2.T):
        raise InputError("l2_distance: mismatched periods")
    K = max(q1.K, q2.K)
    diff = q1.with_K(K).coeffs - q2.with_K(K).coeffs
    return float(math.sqrt(q1.T * float(np.sum(np.abs(diff) ** 2))))


def estimate_theta(t, q_raw, T, tol=1e-6):
    """Total-torsion rate of quasi-periodic samples q(t + T) = exp(i theta T) q(t).

    The phase of <q(. + T), q> over the sample pairs one period apart fixes
    theta T modulo 2 pi; the unwrapped phase increment of q over one period
    picks the branch. Returns ``(theta, residual)``.
    """
    t = np.asarray(t, dtype=float)
    q_raw = np.asarray(q_raw, dtype=complex)
    dt = t[1] - t[0]
    shift = int(round(T / dt))
    if shift < 1 or shift >= t.size or abs(shift * dt - T) > 1e-9 * T:
        raise InputError("estimate_theta: grid must contain points exactly one period apart")
    a = q_raw[shift:]
    b = q_raw[: t.size - shift]
    norm2 = float(np.sum(np.abs(b) ** 2))
    if norm2 == 0.0:
        return 0.0, 0.0
    ratio = np.vdot(b, a) / norm2
    phi_ls = float(np.angle(ratio))
    # branch from the continuous phase increment, where q does not vanish
    mag = np.abs(q_raw[: shift + 1])
    if np.min(mag) > 1e-3 * np.max(mag):
        unwrapped = np.unwrap(np.angle(q_raw[: shift + 1]))
        increment = unwrapped[-1] - unwrapped[0]
        phi = phi_ls + 2 * np.pi * round((increment - phi_ls) / (2 * np.pi))
    else:
        phi = phi_ls
    theta = phi / T
    resid = float(np.max(np.abs(a - np.exp(1j * phi) * b)) / math.sqrt(norm2 / b.size))
    if resid > tol:
        raise NotQuasiPeriodicError(
            f"samples are not quasi-periodic (relative residual {resid:.3e})",
            stage="gauge",
            data={"residual": resid, "theta": theta},
        )
    return theta, resid


def gauge_periodic(t, q_raw, T, K=None, tol=1e-6, noise=1e-9) -> Potential:
    """Gauge a quasi-periodic complex curvature to a periodic potential.

    Parameters
    ----------
    t : array_like
        Uniform grid starting at 0 and containing T (and possibly more).
    q_raw : array_like
        Samples of the complex curvature on ``t``.
    T : float
        Period.
    K : int, optional
        Number of retained modes; by default every mode above ``noise`` times
        the largest one is kept.

    Returns
    -------
    Potential
        q~(t) = exp(-i theta t) q_raw(t) with the recovered ``theta``.
    """
    t = np.asarray(t, dtype=float)
    q_raw = np.asarray(q_raw, dtype=complex)
    if t.size < 3 or abs(t[0]) > 1e-12 * T:
        raise InputError("gauge_periodic: grid must start at 0")
    theta, _ = estimate_theta(t, q_raw, T, tol)
    n = int(round(T / (t[1] - t[0])))
    periodic = np.exp(-1j * theta * t[:n]) * q_raw[:n]
    if K is None:
        spec = np.abs(np.fft.fft(periodic)) / n
        absk = np.abs(np.fft.fftfreq(n, 1.0 / n)).astype(int)
        keep = absk[spec > noise * max(float(np.max(spec)), 1e-300)]
        K = min(int(np.max(keep)) if keep.size else 0, (n - 1) // 2)
    return Potential.from_samples(periodic, T, K, theta)


def hasimoto_curvature(curve: CurveSamples, K=None, closed_tol=1e-6) -> Potential:
    """Gauged complex curvature of a closed, unit-speed sampled curve in H^3.

    Curvature and torsion come from :func:`finitegap.reconstruct.frenet_data`;
    the complex curvature kappa * exp(i int tau) is then gauged periodic. The
    phase at t = 0 is measured against the (sigma1, -sigma2) directions, which
    reproduces the input potential for curves produced by ``sym_reconstruct``.
    """
    from .reconstruct import frenet_data

    pts = np.asarray(curve.points)
    if pts.shape[0] < 9:
        raise InputError("hasimoto_curvature: need at least 8 intervals")
    if np.max(np.abs(pts[-1] - pts[0])) > closed_tol:
        raise InputError("hasimoto_curvature: curve is not closed")
    fr = frenet_data(curve, closed=True)
    if np.min(fr.kappa) <= 1e-8 * max(1.0, float(np.max(fr.kappa))):
        raise DegenerateCurveError("curvature vanishes; Frenet frame undefined", stage="hasimoto")
    t = np.asarray(curve.t, dtype=float) - curve.t[0]
    tau = fr.tau
    dt = t[1] - t[0]
    # cumulative trapezoid with an end correction keeps O(dt^4) on smooth data
    phase = np.concatenate([[0.0], np.cumsum(0.5 * (tau[1:] + tau[:-1]) * dt)])
    dtau = np.gradient(tau, dt)
    phase -= (dt**2 / 12.0) * (dtau - dtau[0])
    q_raw = fr.kappa * np.exp(1j * (phase + fr.phase0))
    return gauge_periodic(t, q_raw, curve.T, K=K)
