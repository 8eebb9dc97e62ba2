import math

import numpy as np
import pytest

from hardystab.exponents import Parameters, derive
from hardystab.ode import IntegratorConfig
from hardystab.phase import (
    DynamicsError,
    PhaseState,
    constant_trajectory,
    energy,
    equilibria,
    kelvin_exponent,
    kelvin_transform,
    positive_node_discriminant,
    radial_residual,
    shoot_solution,
    shoot_unstable_manifold,
    singular_solution,
    to_radial,
    unstable_eigenvalue,
    vector_field,
)
from hardystab.quadrature import integrate as quad

C12 = derive(Parameters(12, 0, 0, 5))


@pytest.fixture(scope="module")
def shot12():
    return shoot_solution(Parameters(12, 0, 0, 5))


def test_vector_field_values():
    assert vector_field((0.0, 0.0), C12) == (0.0, 0.0)
    w0 = C12.w0
    v, dv = vector_field(PhaseState(0.0, w0, 0.0), C12)
    assert v == 0 and abs(dv) < 1e-14
    assert vector_field((1.0, 1.0), C12) == (1.0, -9 + 4.75 - 1)


def test_energy_at_w0():
    assert energy((C12.w0, 0.0), C12) == pytest.approx(-(4.75 ** 1.5) / 3, rel=1e-14)
    assert energy((C12.w0, 0.0), C12) == pytest.approx(-3.45079, abs=1e-5)


def test_equilibria_types():
    origin, plus, minus = equilibria(C12)
    assert origin.kind == "Saddle"
    assert sorted(z.real for z in origin.eigenvalues) == pytest.approx([-9.5, 0.5])
    assert plus.location == (C12.w0, 0.0) and minus.location == (-C12.w0, 0.0)
    assert plus.kind == "StableNode"
    assert positive_node_discriminant(C12) == pytest.approx(5.0)
    assert plus.discriminant == pytest.approx(5.0)


def test_only_origin_when_mu_above_L():
    eq = equilibria(derive(Parameters(11, 0, 20.0, 3.0)))
    assert len(eq) == 1 and eq[0].kind == "StableNode"


def test_spiral_equilibrium():
    eq = equilibria(derive(Parameters(11, 0, 0, 5)))
    assert eq[1].kind == "StableSpiral"
    assert positive_node_discriminant(derive(Parameters(11, 0, 0, 5))) == pytest.approx(-4)


def test_unstable_eigenvalue_identity():
    for prm in [Parameters(12, 0, 0, 5), Parameters(9, 1, 3.0, 4.0), Parameters(20, 2, -6.0, 3.3)]:
        c = derive(prm)
        assert unstable_eigenvalue(c) + c.nu_minus == pytest.approx(c.m, rel=1e-12)


def test_shoot_converges_inside_envelope(shot12):
    traj, sol = shot12
    assert traj.converged_to == "w0"
    assert traj.envelope_ok()
    assert traj.max_energy_violation < 1e-10
    assert abs(sol.decay_slope_fit) < 1e-3
    assert sol.lambda_fit == pytest.approx(1.0, rel=1e-4)
    assert traj.sign_changes_of_w_minus_w0 == 0


def test_energy_monotone_along_shot(shot12):
    traj, _ = shot12
    assert np.all(np.diff(traj.energies()) <= 1e-12)


def test_energy_identity(shot12):
    traj, _ = shot12
    t0, t1 = -10.0, 5.0
    w, v = traj.at(np.array([t0, t1]))
    lhs = energy((w[1], v[1]), C12) - energy((w[0], v[0]), C12)
    diss = quad(lambda t: traj.at(t)[1] ** 2, t0, t1, rtol=1e-12,
                breakpoints=[x for x in traj.t if t0 < x < t1][::8]).value
    assert lhs == pytest.approx(-C12.A * diss, rel=1e-7)


def test_reconstructed_solution_satisfies_ode(shot12):
    _, sol = shot12
    # below r ~ 0.1, u' = r^{-m-1}(v - m w) cancels and the relative error grows like rtol/r^2
    r = np.geomspace(1e-1, 1e2, 41)
    assert np.max(radial_residual(sol, r, h=1e-4)) < 1e-6
    u, _ = sol.evaluate(np.array([1e-6]))
    assert u[0] == pytest.approx(1.0, rel=1e-4)  # nu_- = 0, so u(0) = 1


def test_halving_offset_shifts_time():
    lam = unstable_eigenvalue(C12)
    a = shoot_unstable_manifold(C12, offset=1e-8, anchor=False, t_max=120)
    b = shoot_unstable_manifold(C12, offset=5e-9, anchor=False, t_max=120)
    shift = math.log(2) / lam
    t = np.linspace(30, 45, 61)
    wa, _ = a.at(t)
    wb, _ = b.at(t + shift)
    assert np.max(np.abs(wa - wb)) < 1e-4 * C12.w0


def test_negative_branch_is_mirror():
    a = shoot_unstable_manifold(C12)
    b = shoot_unstable_manifold(C12, branch=-1)
    assert b.branch == -1 and b.envelope_ok()
    t = np.linspace(-5, 5, 21)
    assert np.allclose(a.at(t)[0], -b.at(t)[0], atol=1e-9)


def test_spiral_tuple_oscillates():
    # scan for a strongly damped-oscillating node and check the shot winds around it
    for prm in [Parameters(11, 0, 5.0, 1.5), Parameters(11, 0, 0, 5)]:
        c = derive(prm)
        assert positive_node_discriminant(c) < 0
    traj = shoot_unstable_manifold(derive(Parameters(11, 0, 5.0, 1.5)))
    assert traj.sign_changes_of_w_minus_w0 >= 2
    assert traj.converged_to == "w0"


def test_shoot_requires_saddle():
    with pytest.raises(DynamicsError):
        shoot_unstable_manifold(derive(Parameters(11, 0, 20.0, 3.0)))


def test_shoot_rejects_t_max_before_start():
    with pytest.raises(ValueError):
        shoot_unstable_manifold(C12, t_max=-1e6)


def test_fixed_step_config_accepted():
    traj = shoot_unstable_manifold(C12, t_max=10.0,
                                   integrator_cfg=IntegratorConfig(fixed_step=0.01))
    assert traj.status == "t_end" and traj.converged_to is None


def test_constant_trajectory_is_singular_solution():
    t = np.linspace(-3, 3, 13)
    traj = constant_trajectory(C12, t)
    sol = to_radial(traj, C12)
    us = singular_solution(C12)
    assert np.allclose(sol.u, us.evaluate(sol.r)[0], rtol=1e-14)


def test_singular_solution_residual():
    sol = singular_solution(C12)
    r = np.geomspace(1e-3, 1e3, 25)
    assert np.max(radial_residual(sol, r, method="exact")) < 1e-12


def test_kelvin_transform_of_singular_solution():
    prm = Parameters(12, 0, 0, 5)
    assert kelvin_exponent(prm) == 36
    v, new = kelvin_transform(singular_solution(C12))
    assert new.l == 36
    r = np.geomspace(1e-2, 1e2, 21)
    assert np.max(radial_residual(v, r, method="exact")) < 1e-12
    vv, back = kelvin_transform(v)
    assert back.l == pytest.approx(0.0, abs=1e-12)
    u0 = singular_solution(C12).evaluate(r)[0]
    assert np.allclose(vv.evaluate(r)[0], u0, rtol=1e-10)


def test_kelvin_of_shot_solves_transformed_equation(shot12):
    _, sol = shot12
    v, _ = kelvin_transform(sol)
    r = np.geomspace(1e-2, 10.0, 21)
    assert np.max(radial_residual(v, r, h=1e-5)) < 1e-6
