import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finitegap import (
    Potential,
    Settings,
    baker_akhiezer_line,
    directional_derivative_delta,
    discriminant,
    eigen_projector,
    find_lambda_k,
    monodromy,
    perturbed_coeffs,
    zero_order_at,
)
from finitegap.errors import IllConditionedEigenlineError, OrderDetectionError
from finitegap.sl2core import IDENTITY, CPLine, det2
from finitegap.spectral import delta_gradients, spectral_report

from ._support import SQRT2, TWO_PI, circle, random_potential


def test_vacuum_roots_are_integers():
    samples = find_lambda_k(Potential.zero(TWO_PI), range(-4, 5))
    for sm in samples:
        assert abs(sm.lambda_k - sm.k) < 1e-12


def test_circle_roots():
    lam = {sm.k: sm.lambda_k for sm in find_lambda_k(circle(), range(-3, 4))}
    assert abs(lam[0]) < 1e-10
    # the pair lambda^2 = -1 sits on the imaginary axis and takes labels +-1
    assert abs(lam[1] - 1j) < 1e-8 and abs(lam[-1] + 1j) < 1e-8
    assert abs(lam[2] - SQRT2) < 1e-10 and abs(lam[-2] + SQRT2) < 1e-10
    assert abs(lam[3] - np.sqrt(7)) < 1e-10


def test_roots_are_zeros_of_a_minus_d(rng):
    q = random_potential(rng, 4, amp=1.5)
    samples = find_lambda_k(q, range(-5, 6))
    lam = np.array([sm.lambda_k for sm in samples])
    M = monodromy(q, lam)
    assert np.max(np.abs(M[:, 0, 0] - M[:, 1, 1])) < 1e-9
    assert len({np.round(z, 6) for z in lam}) == lam.size


def test_root_shift_shrinks_with_amplitude():
    base = Potential.from_modes(TWO_PI, {0: 0.3, 1: 0.2j, -1: 0.1})
    shifts = []
    for s in (1.0, 0.5, 0.25, 0.125):
        samples = find_lambda_k(Potential(TWO_PI, s * base.coeffs), range(-3, 4))
        shifts.append(max(abs(sm.lambda_k - sm.k) for sm in samples))
    assert all(a > b for a, b in zip(shifts, shifts[1:]))


def test_conjugate_potential_root_symmetry(rng):
    q = random_potential(rng, 3, amp=1.2)
    a = {sm.k: sm.lambda_k for sm in find_lambda_k(q, range(-3, 4))}
    b = {sm.k: sm.lambda_k for sm in find_lambda_k(q.conj(), range(-3, 4))}
    for k in range(-3, 4):
        assert abs(b[-k] + np.conj(a[k])) < 1e-9


def test_warm_start_matches_global_search(rng):
    q = random_potential(rng, 3, amp=1.0)
    cold = find_lambda_k(q, range(-3, 4))
    warm = find_lambda_k(q, range(-3, 4), guesses={sm.k: sm.lambda_k + 1e-3 for sm in cold})
    for a, b in zip(cold, warm):
        assert abs(a.lambda_k - b.lambda_k) < 1e-10


def test_vacuum_z_vanish():
    assert all(abs(sm.z_k) < 1e-12 for sm in perturbed_coeffs(Potential.zero(TWO_PI), range(-3, 4)))


def _partner(lam, k):
    # label of the root sitting at -conj(lambda_k)
    target = -np.conj(lam[k])
    return min(lam, key=lambda j: abs(lam[j] - target))


def test_real_potential_z_symmetry(rng):
    for _ in range(3):
        q = random_potential(rng, 4, real=True)
        samples = perturbed_coeffs(q, range(-4, 5))
        lam = {sm.k: sm.lambda_k for sm in samples}
        z = {sm.k: sm.z_k for sm in samples}
        for k in lam:
            j = _partner(lam, k)
            assert abs(lam[j] + np.conj(lam[k])) < 1e-8
            assert abs(z[j] - np.conj(z[k])) < 1e-8
            # off the imaginary axis the partner is the mirrored label
            if abs(lam[k].real) > 1e-6:
                assert j == -k


def test_labels_mirror_colliding_pairs():
    from finitegap.spectral import _ordered

    pair = [1.5 + 0.2j, 1.5 - 0.2j]
    roots = pair + [-np.conj(z) for z in pair] + [0.3j, -0.3j, 0j]
    lab = dict(zip(range(-3, 4), _ordered(roots)))
    for k in range(-3, 4):
        if abs(lab[k].real) > 0:
            assert abs(lab[-k] + np.conj(lab[k])) < 1e-15
    assert lab[-1] == -0.3j and lab[1] == 0.3j


def test_real_small_potential_labels_pair_up(rng):
    q = random_potential(rng, 3, amp=0.3, real=True)
    samples = perturbed_coeffs(q, range(-3, 4))
    z = {sm.k: sm.z_k for sm in samples}
    for k in range(4):
        assert abs(z[-k] - np.conj(z[k])) < 1e-8


def test_imaginary_axis_roots_have_real_z():
    samples = perturbed_coeffs(circle().plus(Potential.from_modes(TWO_PI, {2: 0.1, -2: 0.1}), 1.0), [-1, 1])
    for sm in samples:
        assert abs(sm.lambda_k.real) < 1e-9
        assert abs(sm.z_k.imag) < 1e-8


def test_z1_step_refinement():
    q = Potential.from_modes(TWO_PI, {1: 0.1})
    a = perturbed_coeffs(q, [1], Settings(n_steps=1024))[0].z_k
    b = perturbed_coeffs(q, [1], Settings(n_steps=2048))[0].z_k
    assert abs(a - b) < 1e-8
    # first order: z_k is about T times the mode -k of q
    assert abs(perturbed_coeffs(q, [-1])[0].z_k) > 0.5 * TWO_PI * 0.1


def test_spectral_report_layout():
    rep = spectral_report(circle(), 2)
    assert set(rep) == {"lambda_k", "z_k", "order_reports"}
    assert rep["order_reports"][0]["n"] == 2


def test_eigen_projector_diagonal():
    ed = eigen_projector(np.diag([2.0, 0.5]))
    assert abs(ed.mu - 2) < 1e-15
    assert np.allclose(ed.P, [[1, 0], [0, 0]])


def test_eigen_projector_properties(rng):
    for _ in range(10):
        A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        M = A / np.sqrt(det2(A))
        p, m = eigen_projector(M, 1), eigen_projector(M, -1)
        assert np.allclose(p.P @ p.P, p.P, atol=1e-10)
        assert np.allclose(M @ p.v, p.mu * p.v, atol=1e-10)
        assert np.allclose(M.T @ p.w, p.mu * p.w, atol=1e-10)
        assert abs(np.trace(p.P @ M) - p.mu) < 1e-10
        assert np.allclose(p.P + m.P, IDENTITY, atol=1e-10)
        assert np.allclose(p.mu * p.P + m.mu * m.P, M, atol=1e-9)
        X = rng.normal(size=(2, 2))
        assert abs(np.trace(p.P @ X) - (p.w @ X @ p.v) / (p.w @ p.v)) < 1e-10


def test_eigen_projector_ill_conditioned():
    with pytest.raises(IllConditionedEigenlineError, match="use OrderReport path"):
        eigen_projector(-IDENTITY)


def _fd(q, lam, dq, s=1e-5):
    a = discriminant(q.plus(dq, s), lam)[0]
    b = discriminant(q.plus(dq, -s), lam)[0]
    return (a - b) / (2 * s)


@pytest.mark.parametrize("method", ["eigen", "trace"])
def test_gradient_matches_finite_differences(rng, method):
    q = random_potential(rng, 3, amp=1.5)
    dq = random_potential(rng, 2, amp=1.0)
    lam = 0.6 + 0.4j
    g = directional_derivative_delta(q, lam, dq, method=method)
    ref = _fd(q, lam, dq)
    assert abs(g - ref) <= 1e-5 * abs(ref)


def test_gradient_zero_and_linear(rng):
    q = random_potential(rng, 3)
    d1, d2 = random_potential(rng, 2), random_potential(rng, 3)
    lam = 0.3 + 0.9j
    assert directional_derivative_delta(q, lam, Potential.zero(TWO_PI)) == 0
    g = directional_derivative_delta(q, lam, [d1, d2, d1.plus(d2, -2.5)])
    assert abs(g[2] - (g[0] - 2.5 * g[1])) <= 1e-10 * max(1, abs(g).max())


def test_gradient_at_closed_point_vanishes():
    # M(i) = -1 for the circle, so every first variation of Delta(i) is zero
    dq = Potential.from_modes(TWO_PI, {0: 1.0, 1: 0.3j, -2: 0.2})
    assert abs(directional_derivative_delta(circle(), 1j, dq)) < 1e-9


def test_delta_gradients_match_stencil_of_fd(rng):
    q = random_potential(rng, 2, amp=1.2)
    dq = random_potential(rng, 2, amp=1.0)
    lam = 0.5 + 1.0j
    d0, d1 = delta_gradients(q, lam, [dq])
    s = 1e-5
    a = discriminant(q.plus(dq, s), lam)
    b = discriminant(q.plus(dq, -s), lam)
    assert abs(d0[0] - (a[0] - b[0]) / (2 * s)) <= 1e-5 * abs(d0[0])
    assert abs(d1[0] - (a[1] - b[1]) / (2 * s)) <= 1e-4 * abs(d1[0])


def test_order_circle():
    rep = zero_order_at(circle(), 1j)
    assert (rep.n, rep.j0) == (2, 1)
    assert rep.degenerate and not rep.nilpotent


def test_order_vacuum():
    rep = zero_order_at(Potential.zero(TWO_PI), 1j)
    assert (rep.n, rep.j0) == (0, 0)


def test_order_nilpotent_case():
    # dressing the circle at i with a non-eigen direction leaves M(i) = -1 + nilpotent
    from finitegap import SimpleFactor, dress_potential

    qd = dress_potential(circle(), SimpleFactor(1j, CPLine.from_vector([1, 0.3 + 0.2j])), warn=False)
    rep = zero_order_at(qd, 1j)
    assert rep.j0 == 0 and rep.n >= 2 and rep.nilpotent
    assert abs(det2(rep.N_tilde)) < 1e-6 * np.linalg.norm(rep.N_tilde) ** 2
    assert rep.j0 <= rep.n // 2


@given(st.floats(0.1, 0.6), st.floats(-0.4, 0.4))
def test_order_invariant(a, b):
    q = Potential.from_modes(TWO_PI, {0: 1.0 + a, 1: b})
    try:
        rep = zero_order_at(q, 1j + b)
    except OrderDetectionError:
        # a neighbouring zero inside the contour is reported, not guessed
        return
    assert 0 <= rep.j0 <= rep.n // 2


def test_ba_line_examples():
    assert baker_akhiezer_line(np.array([[0, 1], [0, 0]])) == CPLine.from_vector([1, 0])
    assert baker_akhiezer_line(np.array([[1, -1], [1, -1]])) == CPLine.from_vector([1, 1])
    with pytest.raises(OrderDetectionError):
        baker_akhiezer_line(np.zeros((2, 2)))


def test_ba_line_degenerate_report_gives_eigenline():
    rep = zero_order_at(circle(), 1j)
    L = baker_akhiezer_line(rep)
    v = L.vector
    w = rep.N_tilde @ v
    assert abs(w[0] * v[1] - w[1] * v[0]) < 1e-8 * np.linalg.norm(rep.N_tilde)
