"""Hamiltonian systems on the canonical cotangent chart ``(x, xi)``.

Sign conventions used throughout:

* ``V_H = (dH/dxi, -dH/dx)``;
* ``{f, g} = dg/dxi . df/dx - df/dxi . dg/dx``, so ``{x^i, xi_j} = delta_ij``;
* ``alpha(w) = xi . w_x`` and ``omega(u, w) = u_x . w_xi - u_xi . w_x``.

With these, ``omega(V_H, .) = dH`` and ``df(V_H) = {f, H}``, so ``f`` is a
constant of motion exactly when its bracket with ``H`` vanishes.
"""

import math

import numpy as np

from . import calc
from .errors import (
    ArityError,
    BlowUpError,
    ConvergenceError,
    InputError,
    NumericDomainError,
    SingularJacobianError,
)
from .states import PHASE, PhaseState, Trajectory
from .systems import FibreSystem, rk4_step, step_count

METHODS = ("rk4", "implicit_midpoint", "leapfrog")


class HamiltonianSystem(FibreSystem):
    """``H(x, xi[, t])`` on a cotangent chart of an ``n``-dimensional base.

    Separable systems ``H = T(xi) + U(x)`` keep their parts in ``kinetic`` and
    ``potential`` (fields of arity ``n``); only those may use leapfrog.
    """

    chart = PHASE
    fibre_label = "xi"

    def __init__(self, H, n, *, strongly_convex=True, time_dependent=False, name=None,
                 kinetic=None, potential=None):
        super().__init__(H, n, strongly_convex=strongly_convex, time_dependent=time_dependent, name=name)
        if (kinetic is None) != (potential is None):
            raise InputError("a separable Hamiltonian needs both its kinetic and potential parts")
        self.kinetic = kinetic
        self.potential = potential

    @property
    def separable(self):
        return self.kinetic is not None


def separable_hamiltonian(T, U, n, *, strongly_convex=True, name=None):
    """``H(x, xi) = T(xi) + U(x)`` from callables (or fields) of arity ``n``."""
    Tf = calc.as_field(T, n)
    Uf = calc.as_field(U, n)
    if Tf.arity != n or Uf.arity != n:
        raise ArityError(f"separable parts must both have arity {n}")
    Tj = Tf.jet if Tf.has_rules else Tf.func
    Uj = Uf.jet if Uf.has_rules else Uf.func

    def hamiltonian(z):
        return Tj(z[n:]) + Uj(z[:n])

    grad = hess = None
    if all(f.has_rules and f._hess is not None for f in (Tf, Uf)):
        def grad(z):
            z = np.asarray(z, dtype=float)
            return np.concatenate([Uf._grad(z[:n]), Tf._grad(z[n:])])

        def hess(z):
            z = np.asarray(z, dtype=float)
            out = np.zeros((2 * n, 2 * n))
            out[:n, :n] = Uf._hess(z[:n])
            out[n:, n:] = Tf._hess(z[n:])
            return out

    field = calc.ScalarField(hamiltonian, 2 * n, chart=PHASE, name=name or "separable", grad=grad, hess=hess)
    return HamiltonianSystem(field, n, strongly_convex=strongly_convex, name=field.name,
                             kinetic=Tf, potential=Uf)


def natural_hamiltonian(g, U=None, m=1.0, name=None):
    """``H(x, xi) = xi^T g(x)^{-1} xi / (2m) + U(x)``; separable when ``g`` is constant."""
    if not m > 0:
        raise InputError(f"mass must be positive, got {m!r}")
    n = g.dim
    inv_2m = 0.5 / float(m)
    if U is None:
        U = calc.ScalarField(lambda x: 0.0, n, name="zero", grad=lambda x: np.zeros(n),
                             hess=lambda x: np.zeros((n, n)))
    label = name or f"natural*[{g.name}]"
    if g.constant:
        Gi = np.asarray(g.raw_inverse(np.zeros(n)), dtype=float)
        Ginv = Gi.tolist()
        M = 2.0 * inv_2m * Gi

        def kinetic(xi):
            return inv_2m * _quadratic(Ginv, xi, n)

        T = calc.ScalarField(kinetic, n, name="T", grad=lambda xi: M @ np.asarray(xi, dtype=float),
                             hess=lambda xi: M)
        return separable_hamiltonian(T, U, n, name=label)

    Uf = calc.as_field(U, n)
    Uj = Uf.jet if Uf.has_rules else Uf.func

    def hamiltonian(z):
        x = z[:n]
        return inv_2m * _quadratic(g.raw_inverse(x), z[n:], n) + Uj(x)

    field = calc.ScalarField(hamiltonian, 2 * n, chart=PHASE, name=label)
    return HamiltonianSystem(field, n, name=label)


def geodesic_hamiltonian(g):
    """``H = 1/2 g^{ij} xi_i xi_j``, the dual of the kinetic Lagrangian of ``g``."""
    return natural_hamiltonian(g, None, 1.0, name=f"geodesic*[{g.name}]")


def _quadratic(G, v, n):
    acc = G[0][0] * (v[0] * v[0])
    for i in range(1, n):
        acc = acc + G[i][i] * (v[i] * v[i])
        for j in range(i):
            acc = acc + 2.0 * G[i][j] * (v[i] * v[j])
    return acc


def _flow(H):
    """``y -> V_H(y)`` on packed states ``y = (x, xi)``, time as a separate argument."""
    n = H.n
    f = H.field
    if H.separable:
        T, U = H.kinetic, H.potential

        if n == 1 and not (T.has_rules or U.has_rules):
            def rhs(t, y):
                return np.array([_scalar_derivative(T, y[1]), -_scalar_derivative(U, y[0])])
        else:
            def rhs(t, y):
                return np.concatenate([_fast_gradient(T, y[n:]), -_fast_gradient(U, y[:n])])

        return rhs
    every = list(range(2 * n))
    td = H.time_dependent

    def rhs(t, y):
        z = np.append(y, t) if td else y
        g = calc.partial_gradient(f, z, every)
        return np.concatenate([g[n:], -g[:n]])

    return rhs


def _scalar_derivative(f, x):
    z = np.empty(1, dtype=object)
    z[0] = calc.Dual(float(x), 1.0)
    out = f.jet(z)
    d = out.eps if type(out) is calc.Dual else 0.0
    if not math.isfinite(d):
        raise NumericDomainError(f"{f.name} derivative is not finite at {x}")
    return d


def _fast_gradient(f, x):
    if f.has_rules:
        g = np.asarray(f._grad(x), dtype=float)
        calc._check_finite(float(g.sum()), f"{f.name} gradient")
        return g
    n = len(x)
    if n == 1:
        z = np.empty(1, dtype=object)
        z[0] = calc.Dual(float(x[0]), 1.0)
        d = calc._dual_eps(f.jet(z))[1]
        if not math.isfinite(d):
            raise NumericDomainError(f"{f.name} gradient is not finite at {x}")
        return np.array([d])
    return calc.partial_gradient(f, x, range(n))


def ham_field(H, s):
    """Hamilton's equations at ``s``: returns ``(dx/dt, dxi/dt) = (dH/dxi, -dH/dx)``."""
    n = H.n
    g = calc.gradient(H.field, H.point(s.x, s.xi, s.t))
    return g[n:2 * n], -g[:n]


def _midpoint_step(rhs, t, y, dt, guess, tol, max_sweeps):
    y1 = guess
    half = t + 0.5 * dt
    for _ in range(max_sweeps):
        nxt = y + dt * rhs(half, 0.5 * (y + y1))
        err = abs(nxt - y1).max()
        y1 = nxt
        if err <= tol * max(1.0, abs(y1).max()):
            return y1
    raise ConvergenceError(f"implicit midpoint did not converge in {max_sweeps} sweeps (last change {err:.3e})")


def integrate_hamilton(H, s0, t_end, dt, method="rk4", *, tol=1e-13, max_sweeps=100):
    """Integrate Hamilton's equations from ``s0`` over ``t_end`` (relative to ``s0.t``).

    Parameters
    ----------
    method : {"rk4", "implicit_midpoint", "leapfrog"}
        ``implicit_midpoint`` solves its stage equation by fixed-point sweeps
        (stopped when the update falls below ``tol``).  ``leapfrog`` is the
        kick-drift-kick scheme and needs a separable system.

    Raises
    ------
    ConvergenceError
        Midpoint sweeps did not converge.
    BlowUpError
        The state became non-finite.
    """
    if method not in METHODS:
        raise InputError(f"unknown method {method!r}; choose one of {', '.join(METHODS)}")
    if method == "leapfrog" and not H.separable:
        raise InputError("leapfrog needs a separable Hamiltonian T(xi) + U(x)")
    if s0.n != H.n:
        raise ArityError("initial state dimension does not match the system")
    steps = step_count(t_end, dt)
    n = H.n
    rhs = _flow(H)
    y = s0.vector()
    out = np.empty((steps + 1, 2 * n))
    out[0] = y
    if method == "leapfrog":
        T, U = H.kinetic, H.potential
        force = -_fast_gradient(U, y[:n])
    prev = None
    for k in range(steps):
        t = s0.t + k * dt
        try:
            if method == "rk4":
                y = rk4_step(rhs, t, y, dt)
            elif method == "implicit_midpoint":
                # linear extrapolation of the last step is a cheap predictor
                guess = 2.0 * y - prev if prev is not None else y + dt * rhs(t, y)
                prev = y
                y = _midpoint_step(rhs, t, y, dt, guess, tol, max_sweeps)
            else:
                xi = y[n:] + 0.5 * dt * force
                x = y[:n] + dt * _fast_gradient(T, xi)
                force = -_fast_gradient(U, x)
                y = np.concatenate([x, xi + 0.5 * dt * force])
        except (NumericDomainError, OverflowError) as exc:
            raise BlowUpError(f"Hamilton integration failed: {exc}", k) from exc
        if not np.all(np.isfinite(y)):
            raise BlowUpError("Hamilton integration produced a non-finite state", k)
        out[k + 1] = y
    meta = {"method": method, "dt": dt, "t_end": float(t_end), "system": H.name}
    return Trajectory(s0.t, dt, out, PHASE, meta)


def poisson(f, g, s):
    """Poisson bracket ``{f, g} = dg/dxi . df/dx - df/dxi . dg/dx`` at ``s``."""
    n = s.n
    f = calc.as_field(f, 2 * n)
    g = calc.as_field(g, 2 * n)
    if f.arity != g.arity:
        raise ArityError(f"bracket of fields with arities {f.arity} and {g.arity}")
    z = s.vector() if f.arity == 2 * n else np.append(s.vector(), s.t)
    if f.arity != len(z):
        raise ArityError(f"fields of arity {f.arity} do not live on a {n}-dimensional phase chart")
    df = calc.gradient(f, z)
    dg = calc.gradient(g, z)
    return float(dg[n:2 * n] @ df[:n] - df[n:2 * n] @ dg[:n])


def _split(u, n2=None):
    u = np.asarray(u, dtype=float).reshape(-1)
    if n2 is not None and u.shape[0] != n2 or u.shape[0] % 2:
        raise ArityError(f"phase tangent vector has length {u.shape[0]}")
    n = u.shape[0] // 2
    return u[:n], u[n:]


def alpha_eval(s, w):
    """Tautological 1-form ``alpha = xi_i dx^i`` at ``s`` applied to ``w = (w_x, w_xi)``."""
    wx, _ = _split(w, 2 * s.n)
    return float(s.xi @ wx)


def omega_eval(u, w):
    """Canonical 2-form ``omega = dx^i ^ dxi_i`` on two phase tangent vectors."""
    ux, uxi = _split(u)
    wx, wxi = _split(w, len(np.asarray(u).reshape(-1)))
    return float(ux @ wxi - uxi @ wx)


def omega_matrix(n):
    """Matrix ``J`` with ``omega(u, w) = u^T J w`` in ``(x, xi)`` ordering."""
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, I], [-I, Z]])


def _singular(J):
    try:
        return np.linalg.cond(J) > 1e12
    except np.linalg.LinAlgError:
        return True


def cotangent_lift(f, s):
    """Push a phase point through the lift of a base diffeomorphism ``f``.

    ``x' = f(x)`` and ``xi'`` solves ``J^T xi' = xi`` with ``J = Jac f(x)``,
    so that ``xi' (J w) = xi (w)`` for every base vector ``w``.
    """
    F = calc.as_map(f, s.n)
    x1 = F(s.x)
    J = calc.jacobian(F, s.x)
    if J.shape != (s.n, s.n):
        raise ArityError(f"base map must be {s.n} -> {s.n}, got {J.shape}")
    if _singular(J):
        raise SingularJacobianError(f"jacobian of {F.name} is singular at {s.x}")
    return PhaseState(x1, np.linalg.solve(J.T, s.xi), s.t)


def liouville_flow(s, t):
    """Flow of the Liouville field: ``(x, xi) -> (x, xi e^{-t})``."""
    return PhaseState(s.x, s.xi * math.exp(-t), s.t)


def liouville_field(s):
    """``(0, -xi)``; its contraction with ``omega`` is ``alpha``."""
    return np.concatenate([np.zeros(s.n), -s.xi])


def reconstruct_base_map(g, x):
    """Base map of an ``alpha``-preserving phase map ``g``: position part of ``g(x, 0)``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return np.asarray(g(PhaseState(x, np.zeros_like(x))).x, dtype=float)


def generating_symplectomorphism(f, a, xi, guess_b=None, *, tol=1e-12, max_iter=50):
    """Phase map generated by ``f(x, y)``: solve ``df/dx(a, b) = xi`` for ``b``, then ``eta = -df/dy(a, b)``.

    Newton's method on ``b`` uses the mixed block ``d^2 f / dx dy``.

    Returns
    -------
    b, eta : ndarray

    Raises
    ------
    SingularJacobianError
        The mixed block is singular along the iteration.
    ConvergenceError
        The residual did not reach ``tol * (1 + |xi|)``.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    xi = np.asarray(xi, dtype=float).reshape(-1)
    n = a.shape[0]
    f = calc.as_field(f, 2 * n)
    if f.arity != 2 * n or xi.shape[0] != n:
        raise ArityError(f"generating function must have arity {2 * n}")
    b = a.copy() if guess_b is None else np.asarray(guess_b, dtype=float).reshape(-1).copy()
    xs, ys = list(range(n)), list(range(n, 2 * n))
    goal = tol * (1.0 + np.max(np.abs(xi)))
    for _ in range(max_iter):
        z = np.concatenate([a, b])
        M, gx = calc.partial_hessian(f, z, xs, ys)
        r = gx - xi
        if np.max(np.abs(r)) <= goal:
            eta = -calc.partial_gradient(f, z, ys)
            return b, eta
        if _singular(M):
            raise SingularJacobianError(f"mixed Hessian of {f.name} is singular at {z}")
        b = b - np.linalg.solve(M, r)
        if not np.all(np.isfinite(b)):
            break
    raise ConvergenceError(f"generating-function solve did not converge from a={a}, xi={xi}")


class PhaseVectorField:
    """A vector field on the phase chart, ``z = (x, xi) -> (dx, dxi)``.

    ``func`` maps a ``2n`` vector to a ``2n`` vector.  ``jac`` optionally gives
    the ``2n x 2n`` float Jacobian; without it the Jacobian is taken by dual
    passes, which requires ``func`` to be jet-friendly.
    """

    def __init__(self, func, n, *, name=None, jac=None):
        self.func = func
        self.n = int(n)
        self.name = name or getattr(func, "__name__", "W")
        self._jac = jac

    def __repr__(self):
        return f"PhaseVectorField({self.name!r}, n={self.n})"

    def _point(self, s):
        if isinstance(s, PhaseState):
            if s.n != self.n:
                raise ArityError(f"{self.name}: state has dimension {s.n}, field {self.n}")
            return s.vector()
        return calc._to_vector(s, 2 * self.n, f"{self.name} argument")

    def __call__(self, s):
        z = self._point(s)
        out = np.asarray(self.func(z), dtype=float).reshape(-1)
        if out.shape[0] != 2 * self.n:
            raise ArityError(f"{self.name}: expected {2 * self.n} components, got {out.shape[0]}")
        return calc._check_finite(out, f"{self.name} value")

    def as_map(self):
        return calc.VectorMap(self.func, 2 * self.n, 2 * self.n, name=self.name, jac=self._jac)

    def jacobian(self, s):
        return calc.jacobian(self.as_map(), self._point(s))


def hamiltonian_vector_field(H):
    """``V_H`` as a :class:`PhaseVectorField` (autonomous systems)."""
    if H.time_dependent:
        raise InputError("hamiltonian_vector_field needs an autonomous Hamiltonian")
    n = H.n
    f = H.field

    def V(z):
        g = calc.gradient(f, z)
        return np.concatenate([g[n:], -g[:n]])

    def J(z):
        Hs = calc.hessian(f, z)
        return np.vstack([Hs[n:], -Hs[:n]])

    return PhaseVectorField(V, n, name=f"V[{H.name}]", jac=J)
