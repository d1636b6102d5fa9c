import numpy as np
import pytest

from finitegap import (
    Potential,
    Settings,
    closure_residual,
    finite_gap_approximate,
    finite_gap_approximate_real,
    l2_distance,
    newton_close,
    perturbed_coeffs,
    select_directions,
)
from finitegap.closing import (
    NewtonTarget,
    _SpectralMap,
    _unknown_basis,
    candidate_directions,
    eta_matrix,
    newton_matrix_variational,
    newton_target_for,
    truncate_coeffs,
    undressing_line,
)
from finitegap.errors import ClosureError, DirectionSelectionError, InputError
from finitegap.spectral import SpectralSample

from ._support import TWO_PI, circle, closed_perturbed_circle, random_potential


@pytest.fixture(scope="module")
def closed_input():
    return closed_perturbed_circle()


@pytest.fixture(scope="module")
def run2(closed_input):
    return finite_gap_approximate(closed_input, 0.0, 2)


def test_closure_circle():
    rep = closure_residual(circle(), 0.0)
    assert abs(rep.delta + 2) < 1e-10 and abs(rep.delta1) < 1e-8
    assert rep.sign == -1 and rep.m_residual < 1e-10 and rep.semisimple
    assert (rep.n, rep.j0) == (2, 1)


def test_closure_vacuum():
    rep = closure_residual(Potential.zero(TWO_PI), 0.0)
    assert abs(rep.delta - 23.18391) < 1e-5
    assert not rep.closed


def test_closed_input_oracle(closed_input):
    rep = closure_residual(closed_input, 0.0)
    assert rep.m_residual < 1e-10 and (rep.n, rep.j0) == (2, 1)


def test_select_directions_full_rank(rng):
    q = random_potential(rng, 3, amp=1.5)
    ds = select_directions(q, 0.0)
    assert len(ds.directions) == 4 and ds.singular_values[-1] > 1e-6


def test_eta_linearity(rng):
    q = random_potential(rng, 2, amp=1.0)
    d = candidate_directions(TWO_PI, 2)[3]
    A = eta_matrix(q, 1j, [d, Potential(TWO_PI, 2 * d.coeffs)])
    assert np.allclose(A[:, 1], 2 * A[:, 0], rtol=1e-10, atol=1e-14)


def test_vacuum_directions_fail_gracefully():
    # every eta value vanishes for q = 0 at these candidates; either outcome is allowed, a crash is not
    try:
        ds = select_directions(Potential.zero(TWO_PI), 0.0)
    except DirectionSelectionError as exc:
        assert "singular_values" in exc.data
    else:
        assert ds.singular_values[-1] > 1e-6


def test_candidates():
    assert len(candidate_directions(TWO_PI, 2)) == 10
    assert len(candidate_directions(TWO_PI, 2, real=True)) == 5
    assert len(candidate_directions(TWO_PI, 2, exclude=(1,))) == 6
    assert all(c.is_real() for c in candidate_directions(TWO_PI, 3, real=True))


def test_target_validation():
    with pytest.raises(InputError):
        NewtonTarget(1j, 2, 4, {}, -2, (), "complex")
    with pytest.raises(InputError):
        NewtonTarget(1j, 2, 3, {3: 0j}, 0j, (), "truncation")


def test_newton_fixed_point(rng):
    q = random_potential(rng, 3, amp=1.0)
    target = newton_target_for(q, 0.0, 1, 3, mode="truncation")
    res = newton_close(target, q)
    assert res.iterations == 0 and res.converged
    assert np.array_equal(res.potential.coeffs, q.coeffs)


def test_truncation_newton(rng):
    q = random_potential(rng, 3, amp=0.5)
    target = NewtonTarget(1j, 1, 4, {k: 0j for k in range(-4, 5) if abs(k) > 1}, 0j, (), "truncation")
    res = newton_close(target, q)
    assert res.converged and res.residuals[-1] <= 1e-10
    assert np.array_equal(res.potential.with_K(4).coeffs[3:6], q.with_K(4).coeffs[3:6])
    z = [sm.z_k for sm in perturbed_coeffs(res.potential, [2, -3, 4])]
    assert max(abs(np.array(z))) < 1e-9


def test_truncate_coeffs():
    samples = [SpectralSample(k, float(k), 0.1 * k + 0.2j) for k in range(-3, 4)]
    z = truncate_coeffs(samples, 1)
    assert z[2] == 0 and z[-3] == 0 and z[1] == 0.1 + 0.2j
    zr = truncate_coeffs(samples, 2, real=True)
    assert zr[-2] == np.conj(zr[2]) and zr[0].imag == 0 and zr[3] == 0


def test_variational_rows_match_jacobian(rng):
    q = random_potential(rng, 2, amp=1.0)
    ds = select_directions(q, 0.0, max_mode=2)
    target = newton_target_for(q.with_K(4), 0.0, 2, 4, ds.directions)
    s = Settings()
    fmap = _SpectralMap(target, s)
    _, lam_k = fmap.evaluate(q.with_K(4))
    J = fmap.jacobian(q.with_K(4), lam_k, _unknown_basis(target, TWO_PI, 4), 1e-7)
    V = newton_matrix_variational(q, target)
    # Delta rows are sharp; Delta' rows carry the lambda-stencil round-off divided by the step
    assert np.max(np.abs(J[-4:-2] - V[:2])) <= 1e-5 * np.max(np.abs(V[:2]))
    assert np.max(np.abs(J[-2:] - V[2:])) <= 1e-3 * np.max(np.abs(V[2:]))


def test_undressing_line_picks_off_diagonal():
    L = undressing_line(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert abs(abs(L.vector[0]) - 1) < 1e-6
    Lr = undressing_line(np.array([[0.0, 1.0], [0.0, 0.0]]), real=True)
    assert np.max(np.abs(Lr.vector.imag)) == 0


def test_pipeline_closes(run2, closed_input):
    assert run2.closure.semisimple and run2.closure.m_residual <= 1e-7
    assert abs(abs(run2.closure.delta) - 2) <= 1e-7
    assert run2.newton.converged
    assert abs(run2.l2_distance - l2_distance(run2.potential, closed_input)) < 1e-14
    assert run2.l2_distance < 0.1


def test_pipeline_low_modes_move_only_along_directions(run2):
    n = run2.n
    before = run2.undressed.with_K(run2.newton.potential.K).coeffs
    after = run2.newton.potential.coeffs
    Kf = run2.newton.potential.K
    low = np.abs(np.arange(-Kf, Kf + 1)) <= n
    shift = sum(a * d.with_K(Kf).coeffs for a, d in zip(run2.newton.amplitudes, run2.directions.directions))
    assert np.max(np.abs((after - before - shift)[low])) <= 1e-14
    # real and imaginary parts are separate unknowns
    support_re = np.zeros(2 * Kf + 1, bool)
    support_im = np.zeros(2 * Kf + 1, bool)
    for d in run2.directions.directions:
        support_re |= d.with_K(Kf).coeffs.real != 0
        support_im |= d.with_K(Kf).coeffs.imag != 0
    assert np.array_equal(after.real[low & ~support_re], before.real[low & ~support_re])
    assert np.array_equal(after.imag[low & ~support_im], before.imag[low & ~support_im])
    assert np.count_nonzero(low & ~support_re) + np.count_nonzero(low & ~support_im) > 0


def test_pipeline_idempotent(run2):
    again = finite_gap_approximate(run2.potential, 0.0, 2)
    assert l2_distance(again.potential, run2.potential) <= 1e-8


def test_circle_is_fixed_point():
    res = finite_gap_approximate(circle(), 0.0, 2)
    assert l2_distance(res.potential, circle()) <= 1e-8
    assert res.newton.iterations == 0


def test_open_input_rejected():
    with pytest.raises(ClosureError, match="input fails closing condition") as info:
        finite_gap_approximate(circle(), 0.3, 2)
    assert info.value.stage == "closing-check"


def test_h2_pipeline(closed_input, run2):
    res = finite_gap_approximate_real(closed_input, "H2", 2)
    q = res.potential
    assert q.is_real(1e-12) and res.closure.m_residual <= 1e-7
    assert abs(res.l2_distance - run2.l2_distance) < 1e-6
    samples = perturbed_coeffs(q, range(-4, 5))
    lam = {sm.k: sm.lambda_k for sm in samples}
    z = {sm.k: sm.z_k for sm in samples}
    for k in lam:
        j = min(lam, key=lambda m: abs(lam[m] + np.conj(lam[k])))
        assert abs(z[j] - np.conj(z[k])) < 1e-8


def test_r2_truncation(rng):
    q = random_potential(rng, 3, amp=0.5, real=True)
    res = finite_gap_approximate_real(q, "R2", 1, K_margin=3)
    assert res.potential.is_real(1e-12) and res.newton.converged
    z = {sm.k: sm.z_k for sm in perturbed_coeffs(res.potential, range(2, 5))}
    assert max(abs(v) for v in z.values()) < 1e-9


def test_real_variant_rejects_complex_input(rng):
    with pytest.raises(InputError):
        finite_gap_approximate_real(random_potential(rng, 2), "H2", 2)
    with pytest.raises(InputError):
        finite_gap_approximate_real(circle(), "E3", 2)


def test_newton_from_perturbed_circle():
    # Delta(i) + 2 is quadratic in the perturbation here, so convergence is only linear
    # and the solution found is the circle itself
    q0 = Potential.from_modes(TWO_PI, {0: np.sqrt(2), 1: 0.025, -1: 0.025})
    ds = select_directions(q0, 0.0, max_mode=2)
    target = newton_target_for(q0.with_K(10), 0.0, 2, 10, ds.directions)
    res = newton_close(target, q0, max_iter=30)
    assert res.converged and res.residuals[-1] <= 1e-9
    assert l2_distance(res.potential, circle()) < 1e-4
