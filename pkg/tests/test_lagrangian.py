import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geomech import calc, geometry, lagrangian as lag
from geomech.errors import ArityError, BlowUpError, ConvexityError, InputError, KindMismatchError
from geomech.states import PHASE, TangentState, Trajectory
from conftest import kepler_samples


def semicircle(n, sign=1.0):
    t = np.linspace(0.0, np.pi, n)
    return np.column_stack([np.cos(t), sign * np.sin(t)])


SWIRL = calc.VectorMap(lambda x: np.array([-x[1], x[0]]), 2, 2)


class TestNaturalLagrangian:
    def test_pendulum(self, pendulum):
        L, _ = pendulum
        th, w = 0.7, -1.3
        assert L.value([th], [w]) == pytest.approx(0.5 * w * w - 9.8 * (1 - math.cos(th)), rel=1e-15)
        assert L.strongly_convex

    def test_free_particle(self):
        L = lag.natural_lagrangian(geometry.euclidean(3), None, 2.0)
        assert L.value([1.0, 2.0, 3.0], [1.0, -1.0, 2.0]) == pytest.approx(6.0)

    def test_kepler(self, kepler, kepler_plain):
        for L in (kepler[0], kepler_plain[0]):
            x, v = np.array([1.0, 2.0, 2.0]), np.array([0.5, 0.0, 1.0])
            assert L.value(x, v) == pytest.approx(0.5 * 1.25 + 1.0 / 3.0, rel=1e-14)

    def test_rejects_non_positive_mass(self):
        with pytest.raises(InputError):
            lag.natural_lagrangian(geometry.euclidean(1), None, 0.0)

    def test_constant_metric_rules_match_automatic(self, kepler, kepler_plain, rng):
        for z in kepler_samples(rng, 10):
            npt.assert_allclose(calc.gradient(kepler[0].field, z), calc.gradient(kepler_plain[0].field, z),
                                rtol=1e-12, atol=1e-14)
            npt.assert_allclose(calc.hessian(kepler[0].field, z), calc.hessian(kepler_plain[0].field, z),
                                rtol=1e-12, atol=1e-14)

    def test_closed_form_acceleration_matches_general_solve(self, rng):
        G = np.array([[2.0, 0.5], [0.5, 1.0]])

        def U(x):
            return x[0] * x[0] * x[1] + np.cos(x[1])

        ruled = calc.ScalarField(
            U, 2,
            grad=lambda x: np.array([2 * x[0] * x[1], x[0] * x[0] - np.sin(x[1])]),
            hess=lambda x: np.array([[2 * x[1], 2 * x[0]], [2 * x[0], -np.cos(x[1])]]),
        )
        fast = lag.natural_lagrangian(geometry.constant(G), ruled, 1.5)
        general = lag.natural_lagrangian(geometry.constant(G), U, 1.5)
        assert fast.accel_rule is not None and general.accel_rule is None
        for _ in range(10):
            s = TangentState(rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2))
            npt.assert_allclose(lag.el_accel(fast, s), lag.el_accel(general, s), rtol=1e-12, atol=1e-14)


class TestElAccel:
    @pytest.mark.parametrize("w", [-2.0, 0.0, 0.5, 3.0])
    def test_pendulum(self, pendulum, w):
        L, _ = pendulum
        npt.assert_allclose(lag.el_accel(L, TangentState([0.3], [w])), [-9.8 * math.sin(0.3)], rtol=1e-14)

    def test_free(self):
        L = lag.natural_lagrangian(geometry.euclidean(3))
        npt.assert_array_equal(lag.el_accel(L, TangentState([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])), 0.0)

    def test_polar_free_particle(self):
        L = lag.natural_lagrangian(geometry.polar())
        npt.assert_allclose(lag.el_accel(L, TangentState([2.0, 0.0], [0.0, 1.0])), [2.0, 0.0], atol=1e-14)

    def test_kepler_inverse_square(self, kepler_plain, rng):
        L = kepler_plain[0]
        for z in kepler_samples(rng, 5):
            x = z[:3]
            npt.assert_allclose(lag.el_accel(L, TangentState(x, z[3:])), -x / np.linalg.norm(x) ** 3, rtol=1e-12)

    def test_time_dependent_mass(self):
        # L = e^t v^2 / 2 gives d/dt(e^t v) = 0, i.e. a = -v
        f = calc.ScalarField(lambda z: 0.5 * np.exp(z[2]) * z[1] * z[1], 2, time_dependent=True)
        L = lag.LagrangianSystem(f, 1, time_dependent=True)
        npt.assert_allclose(lag.el_accel(L, TangentState([0.0], [1.5], 0.7)), [-1.5], rtol=1e-14)

    def test_time_dependent_forcing_two_dof(self):
        # L = |v|^2 / 2 + x . (sin t, cos t)
        def f(z):
            return 0.5 * (z[2] * z[2] + z[3] * z[3]) + z[0] * np.sin(z[4]) + z[1] * np.cos(z[4])

        L = lag.LagrangianSystem(calc.ScalarField(f, 4, time_dependent=True), 2, time_dependent=True)
        t = 0.4
        npt.assert_allclose(lag.el_accel(L, TangentState([1.0, 2.0], [0.1, 0.2], t)),
                            [math.sin(t), math.cos(t)], rtol=1e-14)

    def test_singular_velocity_hessian(self):
        f = calc.ScalarField(lambda z: z[1] * z[1] * z[1], 2)
        L = lag.LagrangianSystem(f, 1)
        with pytest.raises(ConvexityError):
            lag.el_accel(L, TangentState([0.0], [0.0]))


class TestIntegrate:
    def test_small_angle_period(self, pendulum):
        L, _ = pendulum
        traj = lag.integrate_el(L, TangentState([0.01], [0.0]), 4.0, 1e-3)
        th = traj.positions[:, 0]
        # from rest, theta' first returns to zero from below after half a period
        v = traj.fibre[:, 0]
        i = np.where((v[:-1] < 0) & (v[1:] >= 0))[0][0]
        half = traj.times[i] - v[i] * traj.dt / (v[i + 1] - v[i])
        period = 2.0 * half
        assert period == pytest.approx(2 * math.pi / math.sqrt(9.8), rel=5e-3)
        assert np.max(np.abs(th)) <= 0.01 + 1e-12

    def test_free_particle_is_linear(self):
        L = lag.natural_lagrangian(geometry.euclidean(2))
        traj = lag.integrate_el(L, TangentState([0.0, 0.0], [1.0, -2.0]), 1.0, 1e-2)
        npt.assert_allclose(traj.positions, np.outer(traj.times, [1.0, -2.0]), atol=1e-13)

    def test_circular_kepler_orbit(self, kepler):
        L = kepler[0]
        traj = lag.integrate_el(L, TangentState([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]), 2 * math.pi, 1e-3)
        r = np.linalg.norm(traj.positions, axis=1)
        assert np.max(np.abs(r - 1.0)) <= 1e-5

    def test_blow_up_reports_last_good_index(self):
        # x'' = 4 x^3 escapes in finite time from x = 1
        L = lag.natural_lagrangian(geometry.euclidean(1), lambda x: -x[0] ** 4)
        with pytest.raises(BlowUpError) as info:
            lag.integrate_el(L, TangentState([1.0], [0.0]), 10.0, 1e-3)
        k = info.value.last_good_index
        assert 0 < k < 10_000

    def test_metadata_and_shape(self, pendulum):
        traj = lag.integrate_el(pendulum[0], TangentState([0.2], [0.0]), 0.1, 0.01)
        assert len(traj) == 11
        assert traj.meta["method"] == "rk4"
        assert traj.kind == "tangent"

    def test_el_residual_scales_with_dt(self, pendulum):
        L = pendulum[0]
        for dt in (1e-2, 1e-3):
            traj = lag.integrate_el(L, TangentState([1.0], [0.0]), 10.0, dt)
            assert lag.el_residual(L, traj) <= 10 * dt * dt

    def test_energy_conservation(self, pendulum, kepler):
        cases = [(pendulum[0], TangentState([1.0], [0.0])),
                 (kepler[0], TangentState([1.0, 0.0, 0.0], [0.0, 1.2, 0.3]))]
        for L, s0 in cases:
            traj = lag.integrate_el(L, s0, 10.0, 1e-3)
            E = np.array([lag.energy(L, traj.state(i)) for i in range(0, len(traj), 10)])
            assert np.max(np.abs(E - E[0])) <= 1e-5

    def test_cartesian_and_polar_charts_agree(self):
        cart = lag.natural_lagrangian(geometry.euclidean(2))
        pol = lag.natural_lagrangian(geometry.polar())
        x0, v0 = np.array([1.0, 0.5]), np.array([-0.3, 0.8])
        r0 = math.hypot(*x0)
        th0 = math.atan2(x0[1], x0[0])
        rd = (x0 @ v0) / r0
        thd = (x0[0] * v0[1] - x0[1] * v0[0]) / r0 ** 2
        a = lag.integrate_el(cart, TangentState(x0, v0), 2.0, 1e-3)
        b = lag.integrate_el(pol, TangentState([r0, th0], [rd, thd]), 2.0, 1e-3)
        back = np.column_stack([b.positions[:, 0] * np.cos(b.positions[:, 1]),
                                b.positions[:, 0] * np.sin(b.positions[:, 1])])
        assert np.max(np.abs(back - a.positions)) <= 1e-5


class TestAction:
    def test_free_line(self):
        L = lag.natural_lagrangian(geometry.euclidean(1))
        traj = lag.integrate_el(L, TangentState([0.0], [1.0]), 1.0, 1e-2)
        assert lag.action(L, traj) == pytest.approx(0.5, abs=1e-12)

    def test_perturbed_path_costs_more(self):
        L = lag.natural_lagrangian(geometry.euclidean(1))
        t = np.linspace(0.0, 1.0, 201)
        x = t + 0.1 * np.sin(np.pi * t)
        v = 1.0 + 0.1 * np.pi * np.cos(np.pi * t)
        traj = Trajectory(0.0, t[1] - t[0], np.column_stack([x, v]), "tangent")
        assert lag.action(L, traj) > 0.5 + 1e-3

    @pytest.mark.parametrize("samples", [11, 12])
    def test_constant(self, samples):
        L = lag.LagrangianSystem(calc.ScalarField(lambda z: 3.0, 2), 1, strongly_convex=False)
        traj = Trajectory(0.0, 0.5, np.zeros((samples, 2)), "tangent")
        assert lag.action(L, traj) == pytest.approx(3.0 * 0.5 * (samples - 1), rel=1e-14)

    def test_rejects_phase_trajectory(self, pendulum):
        traj = Trajectory(0.0, 0.1, np.zeros((3, 2)), PHASE)
        with pytest.raises(KindMismatchError):
            lag.action(pendulum[0], traj)


class TestWork:
    def test_upper_semicircle(self):
        assert lag.work_along(SWIRL, semicircle(2000)) == pytest.approx(math.pi, abs=1e-6)

    def test_lower_semicircle(self):
        assert lag.work_along(SWIRL, semicircle(2000, -1.0)) == pytest.approx(-math.pi, abs=1e-6)

    def test_conservative_force(self, rng):
        def U(x):
            return np.sin(x[0]) * x[1] + 0.5 * x[1] ** 2

        Uf = calc.ScalarField(U, 2)
        F = calc.VectorMap(lambda x: -calc.gradient(Uf, x), 2, 2)
        t = np.linspace(0.0, 1.0, 1001)
        for _ in range(5):
            a, b, c = rng.normal(size=(3, 2))
            curve = a + np.outer(t, b) + np.outer(t * (1 - t), c)
            assert lag.work_along(F, curve) == pytest.approx(U(curve[0]) - U(curve[-1]), abs=1e-6)

    def test_needs_three_samples(self):
        with pytest.raises(InputError):
            lag.work_along(SWIRL, semicircle(2))

    def test_dimension_mismatch(self):
        with pytest.raises(ArityError):
            lag.work_along(calc.VectorMap(lambda x: x, 3, 3), semicircle(10))


class TestEnergy:
    def test_pendulum_bottom(self):
        L = lag.natural_lagrangian(geometry.constant([[4.0]]), lambda x: 2.0 * 9.8 * 2.0 * (1 - np.cos(x[0])), 2.0)
        assert lag.energy(L, TangentState([0.0], [1.5])) == pytest.approx(0.5 * 2.0 * 4.0 * 1.5 ** 2)

    def test_natural_is_kinetic_plus_potential(self, rng):
        g = geometry.sphere(1.3)
        L = lag.natural_lagrangian(g, lambda x: np.cos(x[0]) + x[1] ** 2, 1.7)
        for _ in range(20):
            s = TangentState(rng.uniform([0.3, -2.0], [2.8, 2.0]), rng.normal(size=2))
            assert lag.energy(L, s) == pytest.approx(L.kinetic(s.x, s.v) + L.potential_value(s.x), abs=1e-10)

    def test_pure_kinetic(self):
        L = lag.natural_lagrangian(geometry.euclidean(2))
        assert lag.energy(L, TangentState([5.0, 5.0], [3.0, 4.0])) == pytest.approx(12.5)

    def test_energy_field_gradient(self, kepler_plain, rng):
        from oracles import central_gradient

        E = lag.energy_field(kepler_plain[0])
        for z in kepler_samples(rng, 5):
            npt.assert_allclose(E.gradient(z), central_gradient(E, z), atol=1e-8)


class TestAngularMomentum:
    def test_definition(self):
        npt.assert_array_equal(lag.angular_momentum(TangentState([1.0, 0, 0], [0, 1.0, 0]), 2.0), [0, 0, 2.0])

    def test_parallel(self):
        npt.assert_array_equal(lag.angular_momentum(TangentState([1.0, 2, 3], [2.0, 4, 6]), 1.0), 0.0)

    def test_dimension(self):
        with pytest.raises(ArityError):
            lag.angular_momentum(TangentState([1.0, 0], [0, 1.0]), 1.0)

    def test_kepler_drift(self, kepler):
        traj = lag.integrate_el(kepler[0], TangentState([1.0, 0.0, 0.0], [0.0, 1.2, 0.2]), 5.0, 1e-3)
        Lv = np.array([lag.angular_momentum(traj.state(i), 1.0) for i in range(len(traj))])
        assert np.max(np.abs(Lv - Lv[0])) / np.linalg.norm(Lv[0]) <= 1e-6


class TestHomogenize:
    def test_value_on_unit_speed_clock(self, pendulum):
        L = pendulum[0]
        L1 = lag.homogenize(L)
        assert L1.n == 2 and not L1.strongly_convex
        assert L1.value([0.3, 0.4], [1.0, 0.7]) == pytest.approx(L.value([0.4], [0.7]), rel=1e-15)

    def test_degree_one_homogeneous(self, pendulum):
        L1 = lag.homogenize(pendulum[0])
        assert L1.value([0.0, 0.4], [2.0, 1.4]) == pytest.approx(2.0 * L1.value([0.0, 0.4], [1.0, 0.7]))

    def test_lifted_trajectory(self, pendulum):
        traj = lag.integrate_el(pendulum[0], TangentState([0.5], [0.0]), 0.05, 0.01)
        lifted = lag.homogenize_trajectory(traj)
        npt.assert_array_equal(lifted.states[:, 0], traj.times)
        npt.assert_array_equal(lifted.states[:, 2], 1.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3.0, 3.0), st.floats(-3.0, 3.0), st.floats(0.2, 3.0), st.floats(0.2, 3.0))
def test_el_accel_is_force_over_inertia(x, v, m, l):
    L = lag.natural_lagrangian(geometry.constant([[l * l]]), lambda q: m * 9.8 * l * (1 - np.cos(q[0])), m)
    npt.assert_allclose(lag.el_accel(L, TangentState([x], [v])), [-9.8 / l * math.sin(x)], rtol=1e-12, atol=1e-13)
