import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finitegap import Potential, gauge_periodic, hasimoto_curvature, l2_distance, sym_reconstruct
from finitegap.errors import InputError, NotQuasiPeriodicError
from finitegap.potential import evaluate

from ._support import SQRT2, TWO_PI, circle, random_potential

coef = st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)


def test_evaluate_examples():
    assert evaluate(Potential.zero(TWO_PI), 0.7) == 0
    assert evaluate(Potential.constant(TWO_PI, SQRT2), 1.3) == SQRT2
    q = Potential.from_modes(TWO_PI, {1: 0.1})
    assert abs(evaluate(q, np.pi / 2) - 0.1j) < 1e-16


@given(st.lists(coef, min_size=1, max_size=9).filter(lambda c: len(c) % 2 == 1),
       st.floats(0, 10, allow_nan=False))
def test_evaluate_periodic(c, t):
    q = Potential(TWO_PI, np.array(c))
    assert abs(q.evaluate(t + q.T) - q.evaluate(t)) <= 1e-12


@given(st.lists(coef, min_size=3, max_size=9).filter(lambda c: len(c) % 2 == 1))
def test_is_real_matches_samples(c):
    q = Potential(TWO_PI, np.array(c)).real_part()
    assert q.is_real()
    assert np.max(np.abs(q.samples(64).imag)) <= 1e-12


def test_validation():
    with pytest.raises(InputError):
        Potential(TWO_PI, [1, 2])
    with pytest.raises(InputError):
        Potential(-1.0, [1])
    with pytest.raises(InputError):
        Potential(TWO_PI, [np.nan])


def test_l2_examples(rng):
    q = random_potential(rng, 4)
    assert l2_distance(q, q) == 0
    assert abs(l2_distance(Potential.constant(TWO_PI, 1), Potential.zero(TWO_PI)) - math.sqrt(TWO_PI)) < 1e-15
    with pytest.raises(InputError):
        l2_distance(q, Potential.zero(3.0))


def test_l2_matches_quadrature(rng):
    q1, q2 = random_potential(rng, 5), random_potential(rng, 3)
    n = 4096
    t = np.arange(n) * TWO_PI / n
    quad = math.sqrt(TWO_PI / n * np.sum(np.abs(q1.evaluate(t) - q2.evaluate(t)) ** 2))
    assert abs(quad - l2_distance(q1, q2)) <= 1e-10


def test_json_round_trip(rng):
    q = random_potential(rng, 3).with_theta(0.25)
    back = Potential.from_dict(json.loads(q.dumps()))
    assert np.array_equal(back.coeffs, q.coeffs) and back.theta == q.theta and back.T == q.T
    with pytest.raises(InputError):
        Potential.from_dict({"T": 1.0, "modes": [[0.5, 1, 0]]})
    with pytest.raises(InputError):
        Potential.from_dict({"modes": []})


def _grid(T, n, periods=1):
    return np.arange(periods * n + 1) * (T / n)


def test_gauge_periodic_is_identity_on_periodic(rng):
    q = random_potential(rng, 3)
    t = _grid(TWO_PI, 64)
    g = gauge_periodic(t, q.evaluate(t), TWO_PI, K=3)
    assert g.theta == 0.0
    assert np.allclose(g.coeffs, q.coeffs, atol=1e-13)


@pytest.mark.parametrize("rate", [1.0, 0.5, -0.3])
def test_gauge_recovers_theta(rate):
    t = _grid(TWO_PI, 128)
    g = gauge_periodic(t, np.exp(1j * rate * t), TWO_PI)
    assert abs(g.theta - rate) < 1e-12
    assert np.allclose(g.samples(16), 1.0, atol=1e-12)


def test_gauge_then_ungauge(rng):
    q = random_potential(rng, 4)
    t = _grid(TWO_PI, 128)
    raw = np.exp(0.7j * t) * q.evaluate(t)
    g = gauge_periodic(t, raw, TWO_PI)
    assert np.max(np.abs(np.exp(1j * g.theta * t) * g.evaluate(t) - raw)) <= 1e-10


def test_gauge_rejects_non_quasi_periodic():
    t = _grid(TWO_PI, 64)
    with pytest.raises(NotQuasiPeriodicError):
        gauge_periodic(t, 1 + 0.1 * t, TWO_PI)


def test_hasimoto_circle():
    q = hasimoto_curvature(sym_reconstruct(circle(), 0.0, 256))
    assert abs(q.theta) < 1e-8
    assert np.allclose(q.samples(32), SQRT2, atol=1e-6)


def test_hasimoto_real_curve_is_real(rng):
    from ._support import closed_perturbed_circle

    q = hasimoto_curvature(sym_reconstruct(closed_perturbed_circle(), 0.0, 512))
    assert np.max(np.abs(q.samples(64).imag)) <= 1e-6


def test_hasimoto_rejects_open_curve():
    q = Potential.from_modes(TWO_PI, {0: 1.0, 1: 0.2})
    with pytest.raises(InputError):
        hasimoto_curvature(sym_reconstruct(q, 0.0, 64))
