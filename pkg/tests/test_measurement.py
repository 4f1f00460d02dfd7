import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from squeezed_zeno import analytic
from squeezed_zeno.liouvillian import BathParams, build_single_qubit, build_two_qubit
from squeezed_zeno.measurement import (
    BlochDirection,
    MeasurementBasis,
    TwoQubitBasisParams,
    ZenoSchedule,
    bloch_basis,
    nonselective_batch,
    nonselective_project,
    power_survival,
    selective_step_batch,
    survival_nonselective,
    survival_selective,
    two_qubit_basis,
)
from squeezed_zeno.qmath import SIGMA_X, SIGMA_Y, SIGMA_Z, devectorize, projector, vectorize

from conftest import random_density_matrix, random_unitary

FIG = BathParams(gamma=1.0, N=1.0, eta=0.0)


def same_ray(a, b):
    return abs(abs(np.vdot(a, b)) - 1) < 1e-12


def test_bloch_direction_normalizes():
    d = BlochDirection(3.5, -0.5)
    assert d.theta == math.pi
    assert abs(d.phi - (2 * math.pi - 0.5)) < 1e-15
    with pytest.raises(ValueError):
        BlochDirection(math.nan, 0)


def test_bloch_basis_poles_and_equator():
    b = bloch_basis(BlochDirection(0, 0.7))
    assert same_ray(b.state(1), [1, 0]) and same_ray(b.state(2), [0, 1])
    b = bloch_basis(BlochDirection(math.pi / 2, 0))
    s = 1 / math.sqrt(2)
    assert np.abs(b.state(1) - [s, s]).max() < 1e-15
    assert np.abs(b.state(2) - [-s, s]).max() < 1e-15


def test_bloch_basis_reconstructs_observable(rng):
    for _ in range(50):
        theta, phi = rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi)
        b = bloch_basis(BlochDirection(theta, phi))
        sigma = projector(b.state(1)) - projector(b.state(2))
        n = [math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)]
        oracle = n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z
        assert np.abs(sigma - oracle).max() < 1e-12


def test_two_qubit_basis_examples():
    b = two_qubit_basis(TwoQubitBasisParams(0, 0.4, 0, 1.1))
    for k, ket in enumerate(([1, 0, 0, 0], [0, 0, 0, 1], [0, 1, 0, 0], [0, 0, 1, 0]), start=1):
        assert same_ray(b.state(k), ket)
    b = two_qubit_basis(TwoQubitBasisParams(0.3, 0.2, math.pi / 2, math.pi))
    assert same_ray(b.state(3), np.array([0, 1, -1, 0]) / math.sqrt(2))


def test_two_qubit_basis_complete(rng):
    for _ in range(50):
        p = TwoQubitBasisParams(rng.uniform(0, math.pi), rng.uniform(-1.5, 4.7), rng.uniform(0, math.pi), rng.uniform(-1.5, 4.7))
        b = two_qubit_basis(p)
        assert np.abs(sum(b.projectors) - np.eye(4)).max() < 1e-12
        assert np.abs(b.states.conj().T @ b.states - np.eye(4)).max() < 1e-12


def test_two_qubit_params_ranges():
    p = TwoQubitBasisParams(1.0, -math.pi, 2.0, 3 * math.pi / 2)
    assert -math.pi / 2 <= p.beta < 3 * math.pi / 2
    assert abs(p.beta - math.pi) < 1e-15
    assert abs(p.chi + math.pi / 2) < 1e-15
    with pytest.raises(ValueError):
        TwoQubitBasisParams(4.0, 0, 0, 0)


def test_basis_rejects_non_orthonormal():
    with pytest.raises(ValueError):
        MeasurementBasis(np.array([[1, 1], [0, 1]]))


def test_schedule_validation():
    assert ZenoSchedule(10, 1000).tau == 0.01
    for bad in ((0, 10), (10, 0), (10, 2.5), (math.inf, 3)):
        with pytest.raises(ValueError):
            ZenoSchedule(*bad)
    with pytest.raises(ValueError):
        ZenoSchedule(1, 1, "weak")


def test_project_examples():
    z = bloch_basis(BlochDirection(0, 0))
    diag = np.diag([0.3, 0.7]).astype(complex)
    assert np.abs(nonselective_project(z, diag) - diag).max() == 0
    plus = projector(np.array([1, 1]) / math.sqrt(2))
    assert np.abs(nonselective_project(z, plus) - np.eye(2) / 2).max() < 1e-15


@pytest.mark.parametrize("dim", [2, 4])
def test_project_random(rng, dim):
    for _ in range(20):
        basis = MeasurementBasis(random_unitary(rng, dim))
        rho = random_density_matrix(rng, dim)
        out = nonselective_project(basis, rho)
        assert abs(np.trace(out) - 1) < 1e-14
        in_basis = basis.states.conj().T @ out @ basis.states
        assert np.abs(in_basis - np.diag(np.diag(in_basis))).max() < 1e-14
        assert np.abs(nonselective_project(basis, out) - out).max() < 1e-14


def test_project_dimension_mismatch():
    with pytest.raises(ValueError):
        nonselective_project(bloch_basis(BlochDirection(0, 0)), np.eye(4) / 4)


def _oracle_nonselective(gen, basis, index, t, n):
    prop = scipy.linalg.expm(gen.matrix * t / n)
    rho = projector(basis.states[:, index - 1])
    for _ in range(n):
        rho = devectorize(prop @ vectorize(rho))
        rho = sum(P @ rho @ P for P in basis.projectors)
    return np.real(basis.states[:, index - 1].conj() @ rho @ basis.states[:, index - 1]), rho


def _oracle_selective(gen, basis, index, t, n):
    prop = scipy.linalg.expm(gen.matrix * t / n)
    psi = basis.states[:, index - 1]
    s = np.real(psi.conj() @ devectorize(prop @ vectorize(projector(psi))) @ psi)
    return s**n


@pytest.mark.parametrize("n", [1, 3, 17])
@pytest.mark.parametrize("two", [False, True])
def test_against_direct_iteration(rng, n, two):
    p = BathParams(N=rng.uniform(0, 2), eta=rng.uniform(0, 6))
    gen = build_two_qubit(p) if two else build_single_qubit(p)
    for _ in range(5):
        basis = MeasurementBasis(random_unitary(rng, gen.dim))
        index = int(rng.integers(1, gen.dim + 1))
        sched = ZenoSchedule(2.0, n)
        want, rho = _oracle_nonselective(gen, basis, index, 2.0, n)
        got = survival_nonselective(gen, basis, index, sched)
        assert abs(got.probability - want) < 1e-12
        assert np.abs(got.final_state - rho).max() < 1e-12
        assert abs(survival_selective(gen, basis, index, sched).probability - _oracle_selective(gen, basis, index, 2.0, n)) < 1e-12


def test_n1_modes_identical(rng):
    gen = build_single_qubit(FIG)
    for _ in range(20):
        basis = bloch_basis(BlochDirection(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi)))
        sched = ZenoSchedule(10.0, 1)
        a = survival_selective(gen, basis, 1, sched).probability
        b = survival_nonselective(gen, basis, 1, sched).probability
        assert a == b


def test_per_step():
    gen = build_single_qubit(FIG)
    basis = bloch_basis(BlochDirection(1.0, 0.5))
    sched = ZenoSchedule(1.0, 8)
    sel = survival_selective(gen, basis, 1, sched, per_step=True)
    s = sel.per_step[0]
    assert np.abs(sel.per_step - s ** np.arange(1, 9)).max() < 1e-15
    assert sel.per_step[-1] == sel.probability
    non = survival_nonselective(gen, basis, 1, sched, per_step=True)
    assert non.per_step.shape == (8,)
    assert non.per_step[0] == s
    assert non.per_step[-1] == non.probability
    for k in (1, 4):
        shorter = survival_nonselective(gen, basis, 1, ZenoSchedule(k / 8, k))
        assert abs(shorter.probability - non.per_step[k - 1]) < 1e-12


def test_power_survival():
    s = np.array([0.5, 0.0, 1.0, 1e-5])
    out = power_survival(s, 100)
    assert abs(out[0] - 0.5**100) < 1e-40
    assert out[1] == 0.0
    assert out[2] == 1.0
    assert out[3] == 0.0  # underflows cleanly
    assert np.array_equal(power_survival(s, 1), s)


def test_invalid_index_and_dims():
    gen = build_single_qubit(FIG)
    basis = bloch_basis(BlochDirection(0, 0))
    sched = ZenoSchedule(1.0, 2)
    for idx in (0, 3, 1.5):
        with pytest.raises(ValueError):
            survival_selective(gen, basis, idx, sched)
        with pytest.raises(ValueError):
            survival_nonselective(gen, basis, idx, sched)
    with pytest.raises(ValueError):
        survival_nonselective(build_two_qubit(FIG), basis, 1, sched)


def test_zeno_point_selective():
    z = analytic.zeno_points(FIG)[0]
    res = survival_selective(build_single_qubit(FIG), bloch_basis(z.direction), 1, ZenoSchedule(10.0, 1000))
    assert res.probability >= 0.99


def test_sigma_z_selective_limit():
    gen = build_single_qubit(FIG)
    basis = bloch_basis(BlochDirection(0, 0))
    res = survival_selective(gen, basis, 1, ZenoSchedule(10.0, 1000))
    assert abs(res.probability - math.exp(-20)) < 0.02
    # per-step survival of |0> from the population rate equation: (N + (N+1) e^{-(2N+1) tau}) / (2N+1)
    s = (1 + 2 * math.exp(-3 * 0.01)) / 3
    assert abs(res.probability / s**1000 - 1) < 1e-10
    # the O(tau) correction n tau^2 / 2 * ... vanishes as n grows
    fine = survival_selective(gen, basis, 1, ZenoSchedule(10.0, 100_000))
    assert abs(fine.probability / math.exp(-20) - 1) < 0.002


def test_sigma_z_nonselective_stationary():
    res = survival_nonselective(build_single_qubit(FIG), bloch_basis(BlochDirection(0, 0)), 1, ZenoSchedule(10.0, 1000))
    assert abs(res.probability - 1 / 3) < 0.02 / 3


def test_anti_zeno_point_follows_closed_form():
    # at c2 = 0 the Zeno-limit survival is exp(-(c2 - c1) t), not yet zero at t = 10
    a = analytic.zeno_points(FIG)[2]
    res = survival_nonselective(build_single_qubit(FIG), bloch_basis(a.direction), 1, ZenoSchedule(10.0, 1000))
    want = analytic.survival_nonselective_limit(FIG, a.direction, 10.0)
    assert abs(want - math.exp(-analytic.rates(FIG, a.direction).gap * 10)) < 1e-12
    assert abs(res.probability - want) < 0.01
    long = survival_nonselective(build_single_qubit(FIG), bloch_basis(a.direction), 1, ZenoSchedule(60.0, 6000))
    assert long.probability < 0.01


@settings(max_examples=30, deadline=None)
@given(
    theta=st.floats(0, math.pi),
    phi=st.floats(0, 2 * math.pi),
    N=st.floats(0, 3),
    eta=st.floats(0, 2 * math.pi),
    n=st.integers(1, 60),
    t=st.floats(0.1, 20),
)
def test_dominance(theta, phi, N, eta, n, t):
    p = BathParams(N=N, eta=eta)
    gen = build_single_qubit(p)
    basis = bloch_basis(BlochDirection(theta, phi))
    sched = ZenoSchedule(t, n)
    sel = survival_selective(gen, basis, 1, sched).probability
    non = survival_nonselective(gen, basis, 1, sched).probability
    assert non >= sel - 1e-9


def test_convergence_is_monotone(rng):
    gen = build_single_qubit(FIG)
    dirs = [BlochDirection(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi)) for _ in range(20)]
    ns = (10, 30, 100, 300, 1000)
    for d in dirs:
        basis = bloch_basis(d)
        for fn, limit in (
            (survival_selective, analytic.survival_selective_limit),
            (survival_nonselective, analytic.survival_nonselective_limit),
        ):
            ref = limit(FIG, d, 10.0)
            err = [abs(fn(gen, basis, 1, ZenoSchedule(10.0, n)).probability - ref) for n in ns]
            assert all(b <= a + 1e-6 for a, b in zip(err, err[1:])), err


def test_inversion_covariance(rng):
    gen = build_single_qubit(FIG)
    sched = ZenoSchedule(60.0, 1000)
    for _ in range(10):
        d = BlochDirection(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
        a = survival_nonselective(gen, bloch_basis(d), 1, sched).probability
        b = survival_nonselective(gen, bloch_basis(d.inverted()), 1, sched).probability
        assert abs(a + b - 1) < 0.02


def test_batch_matches_single_point_bitwise(rng):
    gen = build_two_qubit(FIG)
    prop = gen.propagator(0.05)
    U = np.stack([random_unitary(rng, 4) for _ in range(300)])
    s_all = selective_step_batch(prop, U, 2)
    n_all = nonselective_batch(prop, U, 2, 7)[0]
    for k in (0, 1, 255, 256, 299):
        assert s_all[k] == selective_step_batch(prop, U[k : k + 1], 2)[0]
        assert n_all[k] == nonselective_batch(prop, U[k : k + 1], 2, 7)[0][0]


def test_two_qubit_dfzs_selective():
    gen = build_two_qubit(FIG)
    alpha, beta = analytic.q1_maximizer(FIG)
    sched = ZenoSchedule(10.0, 1000)
    b1 = two_qubit_basis(TwoQubitBasisParams(alpha, beta, math.pi / 2, 0))
    b3 = two_qubit_basis(TwoQubitBasisParams(math.pi / 2, 0, math.pi / 2, math.pi))
    assert survival_selective(gen, b1, 1, sched).probability > 0.99
    assert survival_selective(gen, b3, 3, sched).probability > 0.99
