"""Lagrangian systems on tangent-bundle charts.

Euler-Lagrange dynamics are integrated with classical RK4; structure-preserving
integration lives with the Hamiltonian side.
"""

import math

import numpy as np

from . import calc
from .errors import ArityError, BlowUpError, ConvexityError, InputError, NumericDomainError, NumericError
from .states import TANGENT, TangentState, Trajectory
from .systems import FibreSystem, rk4_step, simpson_weights, spd_solve, step_count


class LagrangianSystem(FibreSystem):
    """``L(x, v[, t])`` on a tangent chart of an ``n``-dimensional base.

    Natural systems built by :func:`natural_lagrangian` keep their metric,
    potential and mass so energy can be split into kinetic and potential parts.
    """

    chart = TANGENT
    fibre_label = "v"

    def __init__(self, L, n, *, strongly_convex=True, time_dependent=False, name=None,
                 metric=None, potential=None, mass=None):
        super().__init__(L, n, strongly_convex=strongly_convex, time_dependent=time_dependent, name=name)
        self.metric = metric
        self.potential = potential
        self.mass = mass
        # closed-form acceleration ``a(z)``, set for constant-metric natural systems
        self.accel_rule = None

    def velocity_hessian(self, x, v, t=0.0):
        return self.fibre_hessian(x, v, t)[0]

    def kinetic(self, x, v):
        if self.metric is None:
            raise InputError(f"{self.name} is not a natural system")
        v = np.asarray(v, dtype=float)
        return 0.5 * self.mass * float(v @ self.metric(x) @ v)

    def potential_value(self, x):
        if self.metric is None:
            raise InputError(f"{self.name} is not a natural system")
        return 0.0 if self.potential is None else float(self.potential(np.asarray(x, dtype=float)))


def _potential_field(U, n):
    if U is None:
        return None
    if isinstance(U, calc.ScalarField):
        if U.arity != n:
            raise ArityError(f"potential has arity {U.arity}, expected {n}")
        return U
    return calc.ScalarField(U, n, name=getattr(U, "__name__", "U"))


def _quadratic(G, v, n):
    """``v^T G v`` by explicit sums; object-array matmul is slow and rejects mixed jets."""
    acc = G[0][0] * (v[0] * v[0])
    for i in range(1, n):
        acc = acc + G[i][i] * (v[i] * v[i])
        for j in range(i):
            acc = acc + 2.0 * G[i][j] * (v[i] * v[j])
    return acc


def _square(v, n):
    acc = v[0] * v[0]
    for i in range(1, n):
        acc = acc + v[i] * v[i]
    return acc


def natural_lagrangian(g, U=None, m=1.0, name=None):
    """``L(x, v) = 1/2 m v^T g(x) v - U(x)``, declared strongly convex."""
    if not m > 0:
        raise InputError(f"mass must be positive, got {m!r}")
    n = g.dim
    m = float(m)
    Uf = _potential_field(U, n)
    half_m = 0.5 * m

    if g.constant:
        G = np.asarray(g.raw(np.zeros(n)), dtype=float)
        if np.array_equal(G, np.eye(n)):
            def kinetic(x, v):
                return half_m * _square(v, n)
        else:
            Gl = G.tolist()

            def kinetic(x, v):
                return half_m * _quadratic(Gl, v, n)
    else:
        def kinetic(x, v):
            return half_m * _quadratic(g.raw(x), v, n)

    if Uf is None:
        def lagrangian(z):
            return kinetic(z[:n], z[n:])
    else:
        # the raw callable skips per-call validation; the outer field checks the result
        Ueval = Uf.jet if Uf.has_rules else Uf.func

        def lagrangian(z):
            x = z[:n]
            return kinetic(x, z[n:]) - Ueval(x)

    grad = hess = None
    if g.constant and (Uf is None or _has_second_rules(Uf)):
        grad, hess = _natural_rules(m * G, Uf, n)
    field = calc.ScalarField(lagrangian, 2 * n, chart=TANGENT, name=name or f"natural[{g.name}]",
                             grad=grad, hess=hess)
    system = LagrangianSystem(field, n, strongly_convex=True, name=field.name, metric=g, potential=Uf, mass=m)
    if grad is not None:
        system.accel_rule = _natural_accel(m * G, Uf, n)
    return system


def _has_second_rules(f):
    return f.has_rules and f._hess is not None


def _natural_rules(mG, Uf, n):
    """Closed-form derivatives of ``1/2 v^T mG v - U(x)`` for a constant metric."""

    template = np.zeros((2 * n, 2 * n))
    template[n:, n:] = mG

    def grad(z):
        z = np.asarray(z, dtype=float)
        out = np.empty(2 * n)
        out[:n] = -np.asarray(Uf._grad(z[:n]), dtype=float) if Uf is not None else 0.0
        out[n:] = mG @ z[n:]
        return out

    def hess(z):
        out = template.copy()
        if Uf is not None:
            out[:n, :n] = -np.asarray(Uf._hess(np.asarray(z[:n], dtype=float)), dtype=float)
        return out

    return grad, hess


def _natural_accel(mG, Uf, n):
    """``a = -(mG)^-1 dU/dx``: a constant metric has no mixed or geodesic terms."""
    if Uf is None:
        zero = np.zeros(n)
        return lambda z: zero.copy()
    Minv = np.linalg.inv(mG)

    def accel(z):
        g = np.asarray(Uf._grad(np.asarray(z[:n], dtype=float)), dtype=float)
        return -(Minv @ g)

    return accel


def _accel_1d(f, z, td):
    """One degree of freedom: two hyper-dual passes give every term (three if time-dependent)."""
    x, v = float(z[0]), float(z[1])
    w = calc._object_copy(z, calc.HyperDual)
    w[0] = calc.HyperDual(x, 1.0, 0.0)
    w[1] = calc.HyperDual(v, 0.0, 1.0)
    Lx, _, Lxv = calc._hyper_parts(f.jet(w))[1:]
    w[0] = calc.HyperDual(x)
    w[1] = calc.HyperDual(v, 1.0, 1.0)
    Lvv = calc._hyper_parts(f.jet(w))[3]
    rhs = Lx - Lxv * v
    if td:
        w[1] = calc.HyperDual(v, 1.0, 0.0)
        w[2] = calc.HyperDual(float(z[2]), 0.0, 1.0)
        rhs -= calc._hyper_parts(f.jet(w))[3]
    if not (math.isfinite(Lvv) and math.isfinite(rhs)):
        raise NumericDomainError(f"{f.name} derivative is not finite at {z}")
    if not Lvv > 0.0:
        raise ConvexityError(f"{f.name} velocity Hessian is not positive definite: {Lvv!r}")
    return np.array([rhs / Lvv])


def _el_terms(f, z, n, td):
    """Velocity Hessian and Euler-Lagrange right-hand side by direct jet seeding."""
    HD = calc.HyperDual
    zf = [float(c) for c in z]
    base = calc._object_copy(zf, calc.HyperDual)
    A = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            w = base.copy()
            if i == j:
                w[n + i] = HD(zf[n + i], 1.0, 1.0)
            else:
                w[n + i] = HD(zf[n + i], 1.0, 0.0)
                w[n + j] = HD(zf[n + j], 0.0, 1.0)
            A[i, j] = A[j, i] = calc._hyper_parts(f.jet(w))[3]
    # e2 seeded along (v, 0, 1): e12 = (d2L/dv_i dx) v + d2L/dv_i dt
    lead = base.copy()
    for k in range(n):
        lead[k] = HD(zf[k], 0.0, zf[n + k])
    if td:
        lead[2 * n] = HD(zf[2 * n], 0.0, 1.0)
    rhs = np.empty(n)
    for i in range(n):
        w = lead.copy()
        w[n + i] = HD(zf[n + i], 1.0, 0.0)
        rhs[i] = -calc._hyper_parts(f.jet(w))[3]
    dual_base = calc._object_copy(zf)
    for k in range(n):
        w = dual_base.copy()
        w[k] = calc.Dual(zf[k], 1.0)
        rhs[k] += calc._dual_eps(f.jet(w))[1]
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(rhs))):
        raise NumericDomainError(f"{f.name} derivative is not finite at {z}")
    return A, rhs


def _accel_point(L, z):
    """Euler-Lagrange acceleration at a full chart point ``z = (x, v[, t])``."""
    n = L.n
    f = L.field
    if L.accel_rule is not None:
        a = L.accel_rule(z)
        calc._check_finite(float(a.sum()), f"{L.name} acceleration")
        return a
    if n == 1 and not f.has_rules:
        return _accel_1d(f, z, L.time_dependent)
    v = z[n:2 * n]
    if f.has_rules and f._hess is not None:
        # rules directly: the public wrappers re-evaluate the value on every call
        z = np.asarray(z, dtype=float)
        H = np.asarray(f._hess(z), dtype=float)
        grad = np.asarray(f._grad(z), dtype=float)
        # a sum is non-finite iff some entry is
        calc._check_finite(float(H.sum() + grad.sum()), f"{f.name} derivatives")
        A = H[n:2 * n, n:2 * n]
        rhs = grad[:n] - H[n:2 * n, :n] @ v
        if L.time_dependent:
            rhs = rhs - H[n:2 * n, 2 * n]
    else:
        A, rhs = _el_terms(f, z, n, L.time_dependent)
    a = spd_solve(A, rhs, f"{L.name} velocity Hessian")
    if n > 1:
        resid = np.abs(A @ a - rhs).max()
        if not resid <= 1e-10 * (1.0 + np.abs(rhs).max()):
            raise NumericError(f"Euler-Lagrange solve residual {resid:.3e} too large")
    return a


def _accel(L, x, v, t):
    return _accel_point(L, L.point(x, v, t))


def el_accel(L, s):
    """Acceleration solving the Euler-Lagrange equations at a tangent state.

    Solves ``Hess_v L a = dL/dx - (d^2L/dx dv) v - d^2L/dt dv``.
    """
    return _accel(L, s.x, s.v, s.t)


def integrate_el(L, s0, t_end, dt):
    """RK4 on ``(x', v') = (v, el_accel)`` from ``s0`` over ``t_end`` (relative to ``s0.t``)."""
    steps = step_count(t_end, dt)
    n = L.n
    y = s0.vector()
    out = np.empty((steps + 1, 2 * n))
    out[0] = y

    if L.time_dependent:
        def rhs(t, y):
            return np.concatenate([y[n:], _accel_point(L, np.append(y, t))])
    else:
        def rhs(t, y):
            return np.concatenate([y[n:], _accel_point(L, y)])

    for k in range(steps):
        try:
            y = rk4_step(rhs, s0.t + k * dt, y, dt)
        except (NumericDomainError, OverflowError) as exc:
            raise BlowUpError(f"Euler-Lagrange integration failed: {exc}", k) from exc
        if not np.all(np.isfinite(y)):
            raise BlowUpError("Euler-Lagrange integration produced a non-finite state", k)
        out[k + 1] = y
    return Trajectory(s0.t, dt, out, TANGENT, {"method": "rk4", "dt": dt, "t_end": float(t_end), "system": L.name})


def _sample_values(L, traj):
    n = L.n
    times = traj.times
    return np.array([L.value(traj.states[i, :n], traj.states[i, n:], times[i]) for i in range(len(traj))])


def action(L, traj):
    """Action integral of ``L`` along a tangent trajectory (Simpson quadrature)."""
    traj.require(TANGENT)
    if traj.n != L.n:
        raise ArityError("trajectory dimension does not match the system")
    return float(simpson_weights(len(traj), traj.dt) @ _sample_values(L, traj))


_EDGE0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_EDGE1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def _tangents(curve, h):
    """Fourth-order first derivatives of uniformly spaced samples along axis 0."""
    N = curve.shape[0]
    if N < 5:
        return np.gradient(curve, h, axis=0, edge_order=2)
    d = np.empty_like(curve)
    d[2:-2] = (curve[:-4] - 8.0 * curve[1:-3] + 8.0 * curve[3:-1] - curve[4:]) / (12.0 * h)
    head, tail = curve[:5], curve[::-1][:5]
    d[0] = _EDGE0 @ head / h
    d[1] = _EDGE1 @ head / h
    d[-1] = -(_EDGE0 @ tail) / h
    d[-2] = -(_EDGE1 @ tail) / h
    return d


def work_along(F, curve):
    """Work of the force field ``F`` along sampled points of a curve.

    The curve is taken as uniformly parametrized on ``[0, 1]`` (work does not
    depend on the parametrization).  Tangents come from fourth-order finite
    differences; the integrand ``F(gamma) . gamma'`` is summed with Simpson
    weights.
    """
    curve = np.asarray(curve, dtype=float)
    if curve.ndim != 2 or curve.shape[0] < 3:
        raise InputError("work_along needs at least 3 curve samples")
    d = curve.shape[1]
    F = calc.as_map(F, d, d)
    if F.dim_in != d or F.dim_out != d:
        raise ArityError(f"force field is {F.dim_in}->{F.dim_out}, curve lives in R^{d}")
    h = 1.0 / (curve.shape[0] - 1)
    tangents = _tangents(curve, h)
    integrand = np.array([F(p) @ tp for p, tp in zip(curve, tangents)])
    return float(simpson_weights(curve.shape[0], h) @ integrand)


def energy(L, s):
    """``v . dL/dv - L``; equals kinetic plus potential energy for natural systems."""
    p = L.fibre_gradient(s.x, s.v, s.t)
    return float(s.v @ p) - L.value(s.x, s.v, s.t)


def energy_field(L, name=None):
    """``E = v . dL/dv - L`` as a tangent-chart field with an exact gradient rule."""
    n = L.n
    f = L.field
    fib = L.fibre_idx

    def value(z):
        z = np.asarray(z, dtype=float)
        return float(z[n:2 * n] @ calc.partial_gradient(f, z, fib)) - f(z)

    def grad(z):
        z = np.asarray(z, dtype=float)
        v = z[n:2 * n]
        rows, _ = calc.partial_hessian(f, z, fib, range(len(z)))
        out = rows.T @ v - calc.gradient(f, z)
        out[n:2 * n] += calc.partial_gradient(f, z, fib)
        return out

    return calc.ScalarField(value, 2 * n, time_dependent=L.time_dependent, chart=TANGENT,
                            name=name or f"E[{L.name}]", grad=grad)


def angular_momentum(s, m):
    if s.n != 3:
        raise ArityError("angular momentum is defined for states in R^3")
    return float(m) * np.cross(s.x, s.v)


def homogenize(L):
    """Extend ``L`` to the autonomous ``L1(t, x, u, v) = L(t, x, v/u) u`` on ``R x M``.

    Base coordinates of the result are ``(t, x^1..x^n)``; velocities ``(u, v^1..v^n)``.
    ``L1`` is degree-one homogeneous in the velocities, hence never strongly convex.
    """
    n = L.n
    inner = L.field

    def lifted(z):
        t, x, u, v = z[0], z[1:n + 1], z[n + 1], z[n + 2:]
        w = np.empty(inner.arity, dtype=object)
        w[:n] = list(x)
        w[n:2 * n] = [vi / u for vi in v]
        if L.time_dependent:
            w[2 * n] = t
        return inner.jet(w) * u

    field = calc.ScalarField(lifted, 2 * (n + 1), chart=TANGENT, name=f"homogenized[{L.name}]")
    return LagrangianSystem(field, n + 1, strongly_convex=False, name=field.name)


def homogenize_trajectory(traj):
    """Lift a motion ``gamma`` to ``eps -> (eps, gamma(eps), 1, gamma'(eps))`` on ``R x M``."""
    traj.require(TANGENT)
    N = len(traj)
    states = np.column_stack([traj.times, traj.positions, np.ones(N), traj.fibre])
    return Trajectory(traj.t0, traj.dt, states, TANGENT, dict(traj.meta, homogenized=True))


def el_residual(L, traj):
    """Max-norm of ``d/dt(dL/dv) - dL/dx`` over interior samples (fourth-order central differences)."""
    traj.require(TANGENT)
    n = L.n
    times = traj.times
    p = np.array([L.fibre_gradient(s[:n], s[n:], t) for s, t in zip(traj.states, times)])
    q = np.array([L.base_gradient(s[:n], s[n:], t) for s, t in zip(traj.states, times)])
    dp = _tangents(p, traj.dt)
    return float(np.max(np.abs(dp[2:-2] - q[2:-2])))


def tangent_state(x, v, t=0.0):
    return TangentState(x, v, t)
