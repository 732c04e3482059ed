"""Fibrewise Legendre transform between tangent and cotangent charts.

The same code serves both directions: a :class:`~geomech.lagrangian.LagrangianSystem`
maps velocities to momenta by ``v -> dL/dv`` and a
:class:`~geomech.hamiltonian.HamiltonianSystem` maps momenta to velocities by
``xi -> dH/dxi``.  Inverses are computed by damped Newton iteration on the
fibre gradient, so the image of the fibre map is only known operationally: a
momentum whose Newton solve fails is reported as out of the image.
"""

from dataclasses import dataclass

import numpy as np

from . import calc
from .errors import ConvexityError, InputError, NumericError, OutOfImageError
from .hamiltonian import HamiltonianSystem
from .lagrangian import LagrangianSystem
from .states import PHASE, TANGENT, PhaseState, TangentState
from .systems import spd_solve


@dataclass(frozen=True)
class NewtonOptions:
    """Damped Newton settings: step halving until the residual norm decreases."""

    max_iter: int = 50
    tol: float = 1e-12
    max_halvings: int = 30


class LegendreMap:
    """Fibre map ``y -> dF/dy (x, y[, t])`` of a strongly convex system, with its Newton inverse."""

    def __init__(self, system, newton=None):
        if not system.strongly_convex:
            raise ConvexityError(f"{system.name} is not declared strongly convex")
        self.system = system
        self.newton = newton or NewtonOptions()

    def __repr__(self):
        return f"LegendreMap({self.system.name!r})"

    def __call__(self, x, y, t=0.0, check=True):
        """Fibre gradient at ``(x, y)``; ``check`` also Cholesky-tests the fibre Hessian."""
        if not check:
            return self.system.fibre_gradient(x, y, t)
        return self.system.fibre_hessian(x, y, t)[1]

    def _initial_guess(self, x, eta, t):
        # exact for fibres quadratic in y, including linear terms
        n = self.system.n
        try:
            A0, g0 = self.system.fibre_hessian(x, np.zeros(n), t)
            return spd_solve(A0, eta - g0)
        except NumericError:
            return np.array(eta, dtype=float)

    def inverse(self, x, eta, guess=None, t=0.0):
        """Solve ``dF/dy (x, y) = eta`` for ``y``.

        Raises
        ------
        OutOfImageError
            Newton did not reach ``|r| <= tol (1 + |eta|)`` within ``max_iter`` steps.
        """
        sysm = self.system
        n = sysm.n
        eta = calc._to_vector(eta, n, "fibre covector")
        opts = self.newton
        y = self._initial_guess(x, eta, t) if guess is None else calc._to_vector(guess, n, "guess")
        goal = opts.tol * (1.0 + np.max(np.abs(eta)))
        A, g = sysm.fibre_hessian(x, y, t)
        r = g - eta
        norm = np.max(np.abs(r))
        for _ in range(opts.max_iter):
            if norm <= goal:
                return y
            step = spd_solve(A, r, f"{sysm.name} fibre Hessian")
            lam = 1.0
            for _ in range(opts.max_halvings):
                trial = y - lam * step
                try:
                    A1, g1 = sysm.fibre_hessian(x, trial, t)
                except NumericError:
                    lam *= 0.5
                    continue
                r1 = g1 - eta
                n1 = np.max(np.abs(r1))
                if n1 < norm:
                    break
                lam *= 0.5
            else:
                break
            y, A, r, norm = trial, A1, r1, n1
        if norm <= goal:
            return y
        raise OutOfImageError(
            f"{sysm.name}: no fibre point with gradient {eta} near x={np.asarray(x)} "
            f"(residual {norm:.3e})"
        )


def _require(system, kind):
    cls = LagrangianSystem if kind == TANGENT else HamiltonianSystem
    if not isinstance(system, cls):
        raise InputError(f"expected a {cls.__name__}, got {type(system).__name__}")


def phi(L, s):
    """Legendre map of a Lagrangian: ``(x, v) -> (x, dL/dv)``."""
    _require(L, TANGENT)
    return PhaseState(s.x, LegendreMap(L)(s.x, s.v, s.t), s.t)


def phi_h(H, s):
    """Fibre map of a Hamiltonian: ``(x, xi) -> (x, dH/dxi)``."""
    _require(H, PHASE)
    return TangentState(s.x, LegendreMap(H)(s.x, s.xi, s.t), s.t)


def phi_inverse(L, x, xi, guess=None, t=0.0, newton=None):
    """Velocity ``v`` with ``dL/dv (x, v) = xi`` (damped Newton)."""
    _require(L, TANGENT)
    return LegendreMap(L, newton).inverse(x, xi, guess, t)


def dual_value(system, x, eta, t=0.0, newton=None):
    """Convex dual on one fibre: ``eta . y - F(x, y)`` at the ``y`` solving ``dF/dy = eta``."""
    y = LegendreMap(system, newton).inverse(x, eta, None, t)
    return float(np.asarray(eta, dtype=float) @ y) - system.value(x, y, t)


class _Dual:
    """Float callables for the dual field and its derivative rules, sharing the last fibre solve."""

    def __init__(self, source, newton):
        self.source = source
        self.legendre = LegendreMap(source, newton)
        self.n = source.n
        self._last = (None, None)

    def _split(self, z):
        n = self.n
        z = np.asarray(z, dtype=float)
        t = float(z[2 * n]) if self.source.time_dependent else 0.0
        return z[:n], z[n:2 * n], t

    def solve(self, z):
        key = np.asarray(z, dtype=float).tobytes()
        last_key, last_y = self._last
        if key == last_key:
            return last_y
        x, eta, t = self._split(z)
        y = self.legendre.inverse(x, eta, None, t)
        self._last = (key, y)
        return y

    def value(self, z):
        x, eta, t = self._split(z)
        y = self.solve(z)
        return float(eta @ y) - self.source.value(x, y, t)

    def _source_point(self, z):
        x, _, t = self._split(z)
        return self.source.point(x, self.solve(z), t)

    def grad(self, z):
        n = self.n
        y = self.solve(z)
        g = calc.gradient(self.source.field, self._source_point(z))
        out = np.empty(len(g))
        out[:n] = -g[:n]
        out[n:2 * n] = y
        out[2 * n:] = -g[2 * n:]
        return out

    def hess(self, z):
        # with A = F_yy and C = F_yb (b = base and time coordinates):
        # H_ee = A^-1, H_eb = -A^-1 C, H_bb = -F_bb + C^T A^-1 C
        n = self.n
        Hs = calc.hessian(self.source.field, self._source_point(z))
        fib = list(range(n, 2 * n))
        outer = list(range(n)) + list(range(2 * n, len(Hs)))
        A = Hs[np.ix_(fib, fib)]
        C = Hs[np.ix_(fib, outer)]
        Ainv = np.linalg.inv(A)
        AiC = Ainv @ C
        out = np.empty_like(Hs)
        out[np.ix_(fib, fib)] = Ainv
        out[np.ix_(fib, outer)] = -AiC
        out[np.ix_(outer, fib)] = -AiC.T
        out[np.ix_(outer, outer)] = -Hs[np.ix_(outer, outer)] + C.T @ AiC
        return 0.5 * (out + out.T)


def dualize(system, newton=None, name=None):
    """Induced system on the other chart, ``F*(x, eta) = eta . y - F(x, y)`` with ``dF/dy = eta``.

    A Lagrangian gives a Hamiltonian and vice versa.  Every evaluation runs the
    fibre Newton solve; derivatives come from the implicit relations
    ``dF*/deta = y``, ``dF*/dx = -dF/dx`` and ``Hess_eta F* = (Hess_y F)^{-1}``
    rather than from differentiating the iteration.  The result is declared
    strongly convex.
    """
    d = _Dual(system, newton)
    target = HamiltonianSystem if isinstance(system, LagrangianSystem) else LagrangianSystem
    if not isinstance(system, (LagrangianSystem, HamiltonianSystem)):
        raise InputError(f"cannot dualize {type(system).__name__}")
    chart = PHASE if target is HamiltonianSystem else TANGENT
    label = name or f"{system.name}*"
    field = calc.ScalarField(
        d.value, 2 * system.n, time_dependent=system.time_dependent, chart=chart,
        name=label, grad=d.grad, hess=d.hess,
    )
    out = target(field, system.n, strongly_convex=True, time_dependent=system.time_dependent, name=label)
    out.source = system
    return out
