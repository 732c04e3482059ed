import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geomech import calc, geometry, hamiltonian as ham, lagrangian as lag, legendre as leg
from geomech.errors import ConvexityError, InputError, OutOfImageError
from geomech.states import PhaseState, TangentState
from conftest import kepler_samples
from oracles import brute_force_sup, central_gradient, central_hessian


A = np.array([[2.0, 1.0], [1.0, 3.0]])


def quadratic_lagrangian():
    f = calc.ScalarField(lambda z: 0.5 * (2 * z[2] * z[2] + 2 * z[2] * z[3] + 3 * z[3] * z[3]), 4)
    return lag.LagrangianSystem(f, 2, name="quadratic")


def stiff_lagrangian():
    """Strongly convex, non-quadratic fibres with x-v coupling: Newton needs several steps."""
    def f(z):
        x, v = z[:2], z[2:]
        return (np.cosh(v[0]) + 0.25 * v[1] ** 4 + 0.5 * v[1] ** 2 + 0.3 * x[0] * v[0] * v[1]
                + np.sin(x[1]) * v[0] - x[0] ** 2)

    return lag.LagrangianSystem(calc.ScalarField(f, 4), 2, name="stiff")


def relativistic():
    # fibre gradient v / sqrt(1 + v^2) covers only (-1, 1)
    return lag.LagrangianSystem(calc.ScalarField(lambda z: np.sqrt(1.0 + z[1] * z[1]), 2), 1,
                                name="relativistic")


class TestPhi:
    def test_pendulum_momentum(self, pendulum):
        p = leg.phi(pendulum[0], TangentState([0.4], [2.0]))
        npt.assert_allclose(p.xi, [2.0])
        npt.assert_array_equal(p.x, [0.4])

    def test_natural_momentum_is_lowered_velocity(self, rng):
        g = geometry.sphere(1.4)
        L = lag.natural_lagrangian(g, lambda x: x[0], 2.5)
        for _ in range(20):
            x = rng.uniform([0.3, -2.0], [2.8, 2.0])
            v = rng.normal(size=2)
            npt.assert_allclose(leg.phi(L, TangentState(x, v)).xi, 2.5 * g(x) @ v, rtol=1e-13)

    def test_identity_for_half_norm(self):
        L = lag.natural_lagrangian(geometry.euclidean(3))
        npt.assert_allclose(leg.phi(L, TangentState([1, 2, 3], [0.1, -0.2, 0.3])).xi, [0.1, -0.2, 0.3])

    def test_requires_convexity(self):
        L = lag.LagrangianSystem(calc.ScalarField(lambda z: 0.25 * z[1] ** 4, 2), 1)
        with pytest.raises(ConvexityError):
            leg.phi(L, TangentState([0.0], [0.0]))

    def test_requires_declared_convexity(self):
        L = lag.LagrangianSystem(calc.ScalarField(lambda z: z[1] ** 2, 2), 1, strongly_convex=False)
        with pytest.raises(ConvexityError):
            leg.LegendreMap(L)

    def test_rejects_hamiltonian(self, pendulum):
        with pytest.raises(InputError):
            leg.phi(pendulum[1], TangentState([0.0], [1.0]))


class TestInverse:
    def test_pendulum(self, pendulum):
        npt.assert_allclose(leg.phi_inverse(pendulum[0], [0.2], [3.0]), [3.0])

    def test_quadratic(self):
        npt.assert_allclose(leg.phi_inverse(quadratic_lagrangian(), [0.0, 0.0], [1.0, 1.0]), [0.4, 0.2],
                            rtol=1e-14)

    def test_round_trip_non_quadratic(self, rng):
        L = stiff_lagrangian()
        worst = 0.0
        for _ in range(100):
            x, v = rng.uniform(-1, 1, 2), rng.uniform(-2, 2, 2)
            xi = leg.phi(L, TangentState(x, v)).xi
            back = leg.phi_inverse(L, x, xi)
            worst = max(worst, np.max(np.abs(back - v)))
            resid = L.fibre_gradient(x, back) - xi
            assert np.max(np.abs(resid)) <= 1e-12 * (1 + np.max(np.abs(xi)))
        assert worst <= 1e-10

    def test_out_of_image(self):
        L = relativistic()
        npt.assert_allclose(leg.phi_inverse(L, [0.0], [0.6]), [0.75], rtol=1e-12)
        with pytest.raises(OutOfImageError):
            leg.phi_inverse(L, [0.0], [2.0])

    def test_explicit_guess(self):
        L = stiff_lagrangian()
        xi = leg.phi(L, TangentState([0.1, 0.2], [1.5, -0.5])).xi
        npt.assert_allclose(leg.phi_inverse(L, [0.1, 0.2], xi, guess=[1.0, 0.0]), [1.5, -0.5], atol=1e-10)


class TestDual:
    def test_pendulum_kinetic(self):
        m, l = 2.0, 0.5
        L = lag.natural_lagrangian(geometry.constant([[l * l]]), None, m)
        for xi in (-1.0, 0.3, 2.0):
            assert leg.dual_value(L, [0.0], [xi]) == pytest.approx(xi * xi / (2 * m * l * l), rel=1e-14)

    def test_natural_dual_is_energy(self, rng):
        g = geometry.polar()
        L = lag.natural_lagrangian(g, lambda x: np.cos(x[1]) * x[0], 1.3)
        for _ in range(20):
            s = TangentState(rng.uniform([0.5, -3], [2.5, 3]), rng.normal(size=2))
            xi = leg.phi(L, s).xi
            assert leg.dual_value(L, s.x, xi) == pytest.approx(lag.energy(L, s), abs=1e-12)

    def test_quadratic_against_brute_force_sup(self):
        L = quadratic_lagrangian()
        xi = np.array([1.0, 1.0])
        best = brute_force_sup(
            lambda V1, V2: xi[0] * V1 + xi[1] * V2 - 0.5 * (2 * V1 * V1 + 2 * V1 * V2 + 3 * V2 * V2),
            -10.0, 10.0, 1e-3)
        exact = 0.5 * xi @ np.linalg.solve(A, xi)
        assert leg.dual_value(L, [0.0, 0.0], xi) == pytest.approx(exact, rel=1e-14)
        assert abs(best - exact) <= 1e-5

    def test_fenchel_inequality(self, rng):
        L = stiff_lagrangian()
        for _ in range(10):
            x, xi = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
            H = leg.dual_value(L, x, xi)
            for v in rng.uniform(-3, 3, (50, 2)):
                assert H >= xi @ v - L.value(x, v) - 1e-12
            v = leg.phi_inverse(L, x, xi)
            assert H == pytest.approx(xi @ v - L.value(x, v), abs=1e-14)


class TestDualize:
    def test_pendulum_hamiltonian(self, pendulum, rng):
        H = leg.dualize(pendulum[0])
        assert H.chart == "phase" and H.strongly_convex
        for th, xi in rng.uniform(-2, 2, (20, 2)):
            assert H.field([th, xi]) == pytest.approx(0.5 * xi * xi + 9.8 * (1 - math.cos(th)), abs=1e-12)

    def test_double_dual(self, rng):
        for L in (stiff_lagrangian(), quadratic_lagrangian()):
            LL = leg.dualize(leg.dualize(L))
            assert LL.chart == "tangent"
            worst = max(abs(LL.field(z) - L.field(z)) for z in rng.uniform(-1, 1, (100, 4)))
            assert worst <= 1e-8

    def test_geodesic_on_polar_chart(self, rng):
        g = geometry.polar()
        H = leg.dualize(lag.natural_lagrangian(g))
        Hg = ham.geodesic_hamiltonian(g)
        for _ in range(30):
            z = np.concatenate([rng.uniform([0.5, -3], [2.5, 3]), rng.normal(size=2)])
            r, xr, xt = z[0], z[2], z[3]
            assert H.field(z) == pytest.approx(0.5 * (xr ** 2 + xt ** 2 / r ** 2), rel=1e-12)
            assert Hg.field(z) == pytest.approx(H.field(z), rel=1e-12)

    def test_derivative_rules_match_differences(self, rng):
        H = leg.dualize(stiff_lagrangian())
        for z in rng.uniform(-1, 1, (5, 4)):
            npt.assert_allclose(H.field.gradient(z), central_gradient(H.field, z), atol=1e-7)
            npt.assert_allclose(H.field.hessian(z), central_hessian(H.field, z), atol=1e-5)

    def test_time_dependent_dual(self):
        f = calc.ScalarField(lambda z: 0.5 * np.exp(z[2]) * z[1] ** 2 + z[0] * z[2], 2, time_dependent=True)
        L = lag.LagrangianSystem(f, 1, time_dependent=True)
        H = leg.dualize(L)
        t, x, xi = 0.3, 0.7, 1.1
        assert H.field([x, xi, t]) == pytest.approx(0.5 * xi * xi * math.exp(-t) - x * t, rel=1e-13)
        npt.assert_allclose(H.field.gradient([x, xi, t]), central_gradient(H.field, np.array([x, xi, t])),
                            atol=1e-8)


def matched_points(L, rng, count):
    for _ in range(count):
        x, v = rng.uniform(-1, 1, L.n), rng.uniform(-1.5, 1.5, L.n)
        yield TangentState(x, v)


@pytest.mark.parametrize("which", ["pendulum", "kepler", "stiff"])
def test_involutivity_reciprocity_and_cross_identity(which, pendulum, kepler, rng):
    L = {"pendulum": pendulum[0], "kepler": kepler[0], "stiff": stiff_lagrangian()}[which]
    H = leg.dualize(L)
    states = (
        [TangentState(z[:3], z[3:]) for z in kepler_samples(rng, 100)] if which == "kepler"
        else list(matched_points(L, rng, 100))
    )
    n = L.n
    I = np.eye(n)
    for s in states:
        p = leg.phi(L, s)
        back = leg.phi_h(H, p)
        assert np.max(np.abs(back.v - s.v)) <= 1e-9
        Hxi = H.velocity_hessian(p.x, p.xi) if hasattr(H, "velocity_hessian") else H.fibre_hessian(p.x, p.xi)[0]
        Lv = L.velocity_hessian(s.x, s.v)
        assert np.max(np.abs(Hxi @ Lv - I)) <= 1e-6
        npt.assert_allclose(L.base_gradient(s.x, s.v), -H.base_gradient(p.x, p.xi), atol=1e-7)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3.0, 3.0), st.floats(0.3, 3.0), st.floats(0.3, 3.0))
def test_pendulum_inverse_is_scaling(xi, m, l):
    L = lag.natural_lagrangian(geometry.constant([[l * l]]), None, m)
    npt.assert_allclose(leg.phi_inverse(L, [0.0], [xi]), [xi / (m * l * l)], rtol=1e-13, atol=1e-15)
