"""Continuous symmetries and their conserved quantities on both charts.

Lagrangian side: a one-parameter family ``theta_s`` of base maps is a
symmetry when its tangent lift preserves ``L``, and then
``F(x, v) = dL/dv (x, v) . W(x)`` is conserved, with ``W`` the generator of
the family evaluated at the base point.

Hamiltonian side: a phase vector field ``W`` is a symmetry when it preserves
both ``H`` and ``omega``.  If it also preserves ``alpha``, then ``alpha(W)``
is a charge whose Hamiltonian field is ``W``.  The Laplace-Runge-Lenz field of
the Kepler problem is a symmetry that is not the lift of any base family, so
it serves as the negative control for those last two statements.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import qmc

from . import calc
from .errors import ArityError, InputError, KindMismatchError
from .hamiltonian import HamiltonianSystem, PhaseVectorField, cotangent_lift
from .lagrangian import LagrangianSystem
from .legendre import LegendreMap
from .states import PHASE, TANGENT, PhaseState, TangentState

S_GRID = (-0.1, -0.01, 0.01, 0.1)
FD_STEP = 1e-6


def sample_box(lo, hi, count, dim, seed=42):
    """Scrambled Halton points in ``[lo, hi]^dim`` (arrays broadcast per coordinate)."""
    sampler = qmc.Halton(d=dim, scramble=True, seed=seed)
    u = sampler.random(count)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (dim,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (dim,))
    return qmc.scale(u, lo, hi)


class OneParameterFamily:
    """Base maps ``(s, x) -> theta_s(x)`` with ``theta_0 = id``.

    ``map`` must be jet-friendly in ``x`` so tangent lifts can differentiate
    it.  ``generator`` optionally gives ``W(x) = d/ds theta_s(x)`` at ``s = 0``;
    otherwise a central difference is used.
    """

    def __init__(self, n, map, generator=None, name=None, probes=None):
        self.n = int(n)
        self.map = map
        self._generator = generator
        self.name = name or getattr(map, "__name__", "family")
        if probes is None:
            probes = sample_box(-1.0, 1.0, 4, self.n, seed=0)
        for x in np.atleast_2d(probes):
            x0 = np.asarray(map(0.0, x), dtype=float)
            if x0.shape != x.shape or np.max(np.abs(x0 - x)) > 1e-12:
                raise InputError(f"{self.name}: theta_0 is not the identity at {x}")

    def __repr__(self):
        return f"OneParameterFamily({self.name!r}, n={self.n})"

    def __call__(self, s, x):
        return self.map(s, x)

    def at(self, s):
        """The map ``theta_s`` as a :class:`~geomech.calc.VectorMap`."""
        return calc.VectorMap(lambda x: self.map(s, x), self.n, self.n, name=f"{self.name}@{s!r}")

    def tangent_lift(self, s, x, v):
        """``(theta_s(x), Jac theta_s(x) v)``."""
        x = calc._to_vector(x, self.n, "position")
        F = self.at(s)
        return F(x), calc.jacobian(F, x) @ np.asarray(v, dtype=float)

    def generator(self, x):
        return generator(self, x)

    def generator_map(self):
        return calc.VectorMap(self.generator, self.n, self.n, name=f"W[{self.name}]")


def generator(fam, x):
    """Infinitesimal generator ``W(x)``: analytic if given, else ``(theta_h - theta_-h) / 2h``."""
    if fam._generator is not None:
        return fam._generator(x)
    h = FD_STEP
    return (np.asarray(fam.map(h, x)) - np.asarray(fam.map(-h, x))) / (2.0 * h)


def _rotation_matrix(axis, s):
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    K = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
    return np.eye(3) + np.sin(s) * K + (1.0 - np.cos(s)) * (K @ K), K


def rotations(axis=(0.0, 0.0, 1.0)):
    """Rotations of ``R^3`` about ``axis``; generator ``W(x) = axis x x``."""
    _, K = _rotation_matrix(axis, 0.0)

    def rot(s, x):
        return _rotation_matrix(axis, s)[0] @ x

    def gen(x):
        return K @ x

    label = "rotation[" + ",".join(f"{c:g}" for c in np.asarray(axis, dtype=float)) + "]"
    return OneParameterFamily(3, rot, gen, name=label)


def translations(direction):
    """``theta_s(x) = x + s * direction``."""
    e = np.asarray(direction, dtype=float).reshape(-1)

    def shift(s, x):
        return x + s * e

    def gen(x):
        return e.copy() if np.asarray(x).dtype != object else np.asarray(e, dtype=object)

    label = "translation[" + ",".join(f"{c:g}" for c in e) + "]"
    return OneParameterFamily(len(e), shift, gen, name=label)


def identity_family(n):
    return OneParameterFamily(n, lambda s, x: x, lambda x: np.zeros(len(x)), name="identity")


@dataclass(frozen=True)
class SymmetryReport:
    """Outcome of a sampled symmetry check; ``diagnostics`` holds per-condition maxima."""

    passed: bool
    max_violation: float
    samples: int
    diagnostics: dict = field(default_factory=dict)


def _tangent_samples(L, samples, box, count, seed):
    if samples is not None:
        return [s if isinstance(s, TangentState) else TangentState(s[:L.n], s[L.n:2 * L.n]) for s in samples]
    pts = sample_box(-box, box, count, 2 * L.n, seed)
    return [TangentState(p[:L.n], p[L.n:]) for p in pts]


def check_lagrangian_symmetry(L, fam, samples=None, s_grid=S_GRID, *, box=1.0, count=200, seed=42, rtol=1e-8):
    """Sampled test of ``L(theta_s(x), Jac theta_s(x) v) = L(x, v)``.

    A sample passes when the change is at most ``rtol * (1 + |L|)``;
    ``max_violation`` is the largest absolute change seen.
    """
    if fam.n != L.n:
        raise ArityError(f"family acts on R^{fam.n}, system has n={L.n}")
    states = _tangent_samples(L, samples, box, count, seed)
    worst, ok = 0.0, True
    for st in states:
        base = L.value(st.x, st.v, st.t)
        for s in s_grid:
            x1, v1 = fam.tangent_lift(s, st.x, st.v)
            diff = abs(L.value(x1, v1, st.t) - base)
            worst = max(worst, diff)
            ok = ok and diff <= rtol * (1.0 + abs(base))
    return SymmetryReport(ok, worst, len(states), {"s_grid": list(s_grid)})


def noether_charge(L, fam, name=None):
    """``F(x, v[, t]) = dL/dv (x, v) . W(x)`` on the tangent chart, with an exact gradient rule."""
    if fam.n != L.n:
        raise ArityError(f"family acts on R^{fam.n}, system has n={L.n}")
    n = L.n
    f = L.field
    fib = L.fibre_idx
    Wmap = fam.generator_map()

    def value(z):
        z = np.asarray(z, dtype=float)
        p = calc.partial_gradient(f, z, fib)
        return float(p @ np.asarray(fam.generator(z[:n]), dtype=float))

    def grad(z):
        z = np.asarray(z, dtype=float)
        W = np.asarray(fam.generator(z[:n]), dtype=float)
        rows, p = calc.partial_hessian(f, z, fib, range(len(z)))
        out = rows.T @ W
        out[:n] += calc.jacobian(Wmap, z[:n]).T @ p
        return out

    label = name or f"charge[{fam.name}]"
    return calc.ScalarField(value, 2 * n, time_dependent=L.time_dependent, chart=TANGENT, name=label, grad=grad)


@dataclass(frozen=True)
class ConservationReport:
    name: str
    initial: float
    max_abs_drift: float
    max_rel_drift: float
    samples: int

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=False)


def evaluate_along(G, traj):
    """Values of ``G`` at every trajectory sample; time is appended for time-dependent fields."""
    if G.chart is not None and G.chart != traj.kind:
        raise KindMismatchError(f"{G.name} lives on the {G.chart} chart, trajectory is {traj.kind}")
    if G.dim != traj.states.shape[1]:
        raise ArityError(f"{G.name} has dim {G.dim}, trajectory states have {traj.states.shape[1]}")
    if G.time_dependent:
        pts = np.column_stack([traj.states, traj.times])
    else:
        pts = traj.states
    return np.array([G(p) for p in pts])


def drift(G, traj, name=None, scale=None):
    """Conservation report of ``G`` along ``traj``.

    The relative drift divides by ``scale`` when given (use it for components
    of a vector charge that start at zero), else by ``|G(0)|``; a charge that
    starts at exactly zero with no scale reports its absolute drift.
    """
    values = evaluate_along(G, traj)
    return report_from_values(name or G.name, values, scale)


def report_from_values(name, values, scale=None):
    values = np.asarray(values, dtype=float)
    g0 = float(values[0])
    dev = float(np.max(np.abs(values - g0)))
    ref = abs(scale) if scale is not None else abs(g0)
    rel = dev / ref if ref > 0 else dev
    return ConservationReport(name, g0, dev, rel, int(values.shape[0]))


def _phase_samples(n, samples, box, count, seed):
    if samples is not None:
        return [s.vector() if isinstance(s, PhaseState) else np.asarray(s, dtype=float) for s in samples]
    return list(sample_box(-box, box, count, 2 * n, seed))


def _jacobian_fd(func, z, h=1e-5):
    """Central-difference Jacobian with one Richardson step (error ``O(h^4)``)."""
    z = np.asarray(z, dtype=float)
    cols = []
    for a in range(len(z)):
        e = np.zeros(len(z))
        e[a] = 1.0
        d1 = (func(z + h * e) - func(z - h * e)) / (2.0 * h)
        d2 = (func(z + 0.5 * h * e) - func(z - 0.5 * h * e)) / h
        cols.append((4.0 * d2 - d1) / 3.0)
    return np.column_stack(cols)


def contraction(W):
    """``beta = W _| omega`` as a function of ``z``: ``beta = (-W_xi, W_x)``."""
    n = W.n

    def beta(z):
        w = W(z)
        return np.concatenate([-w[n:], w[:n]])

    return beta


def check_hamiltonian_symmetry(H, W, samples=None, *, box=1.0, count=200, seed=42,
                               tol_h=1e-8, tol_omega=1e-6, h=1e-5):
    """Sampled test that ``W`` preserves ``H`` and ``omega``.

    ``L_W H = W . grad H`` is evaluated exactly.  ``L_W omega = d(W _| omega)``
    is tested as the antisymmetric part of the finite-difference Jacobian of
    ``beta = W _| omega``; differencing keeps the test independent of any
    Jacobian rule supplied with ``W``.  Samples where ``H`` cannot be evaluated (e.g. at
    a singularity of a central potential) must be excluded by the caller.
    """
    if W.n != H.n:
        raise ArityError(f"vector field on n={W.n}, system has n={H.n}")
    pts = _phase_samples(H.n, samples, box, count, seed)
    beta = contraction(W)
    lie_h = lie_omega = 0.0
    for z in pts:
        g = calc.gradient(H.field, z if not H.time_dependent else np.append(z, 0.0))[:2 * H.n]
        lie_h = max(lie_h, abs(float(W(z) @ g)))
        J = _jacobian_fd(beta, z, h)
        lie_omega = max(lie_omega, float(np.max(np.abs(J - J.T))))
    passed = lie_h <= tol_h and lie_omega <= tol_omega
    return SymmetryReport(passed, max(lie_h, lie_omega), len(pts), {"lie_H": lie_h, "lie_omega": lie_omega})


def alpha_charge(W, name=None):
    """``f(x, xi) = alpha(W) = xi . W_x`` on the phase chart."""
    n = W.n

    def value(z):
        z = np.asarray(z, dtype=float)
        return float(z[n:] @ W(z)[:n])

    def grad(z):
        z = np.asarray(z, dtype=float)
        J = W.jacobian(z)
        out = J[:n].T @ z[n:]
        out[n:] += W(z)[:n]
        return out

    return calc.ScalarField(value, 2 * n, chart=PHASE, name=name or f"alpha[{W.name}]", grad=grad)


def lie_derivative_alpha(W, z, h=1e-5):
    """Components of ``L_W alpha = d(alpha(W)) - W _| omega`` at ``z`` (finite differences).

    Vanishes for lifts of base families; its size measures how far the flow
    of ``W`` is from pulling ``alpha`` back to itself.
    """
    n = W.n
    z = np.asarray(z, dtype=float)

    def a_of_w(y):
        return np.array([y[n:] @ W(y)[:n]])

    d = _jacobian_fd(a_of_w, z, h)[0]
    return d - contraction(W)(z)


def lifted_generator(fam, x, xi):
    """Generator of the lifted family at ``(x, xi)``: ``(W(x), -Jac W(x)^T xi)``."""
    x = calc._to_vector(x, fam.n, "position")
    W = np.asarray(fam.generator(x), dtype=float)
    JW = calc.jacobian(fam.generator_map(), x)
    return np.concatenate([W, -JW.T @ np.asarray(xi, dtype=float)])


def lift_symmetry(fam):
    """Cotangent lift ``Psi_s = (theta_s)_#`` as a family on the ``2n``-dimensional phase chart."""
    n = fam.n

    def lifted(s, z):
        z = np.asarray(z, dtype=float)
        out = cotangent_lift(fam.at(s), PhaseState(z[:n], z[n:]))
        return out.vector()

    def gen(z):
        z = np.asarray(z, dtype=float)
        return lifted_generator(fam, z[:n], z[n:])

    return OneParameterFamily(2 * n, lifted, gen, name=f"lift[{fam.name}]")


def lifted_field(fam):
    """The generator of :func:`lift_symmetry` as a :class:`PhaseVectorField` with its Jacobian."""
    n = fam.n
    Wmap = fam.generator_map()
    comps = [calc.ScalarField(lambda x, j=j: fam.generator(x)[j], n, name=f"W{j}") for j in range(n)]

    def func(z):
        z = np.asarray(z, dtype=float)
        return lifted_generator(fam, z[:n], z[n:])

    def jac(z):
        z = np.asarray(z, dtype=float)
        x, xi = z[:n], z[n:]
        JW = calc.jacobian(Wmap, x)
        # d/dx_k of (JW^T xi)_i = sum_j xi_j d2 W_j / dx_i dx_k
        T = sum(xi[j] * calc.hessian(comps[j], x) for j in range(n))
        Z = np.zeros((n, n))
        return np.block([[JW, Z], [-T, -JW.T]])

    return PhaseVectorField(func, n, name=f"lift[{fam.name}]", jac=jac)


def transfer_charge(G, system, direction, name=None):
    """Move a charge across the Legendre map of ``system``.

    ``direction="to_phase"`` turns a tangent-chart ``G`` into ``G(x, v(x, xi))``;
    ``"to_tangent"`` turns a phase-chart ``G`` into ``G(x, xi(x, v))``.  The
    fibre map is explicit (the system's fibre gradient) when it points the
    requested way and a Newton inverse otherwise.
    """
    if direction not in ("to_phase", "to_tangent"):
        raise InputError(f"direction must be 'to_phase' or 'to_tangent', got {direction!r}")
    if not isinstance(system, (LagrangianSystem, HamiltonianSystem)):
        raise InputError(f"cannot transfer through {type(system).__name__}")
    n = system.n
    if G.arity != system.arity:
        raise ArityError(f"{G.name} has arity {G.arity}, system {system.arity}")
    src_chart = TANGENT if direction == "to_phase" else PHASE
    if G.chart is not None and G.chart != src_chart:
        raise KindMismatchError(f"{G.name} lives on the {G.chart} chart, expected {src_chart}")
    # the system's own chart is where its fibre map starts
    explicit = system.chart != src_chart
    leg = LegendreMap(system)
    td = system.time_dependent
    fib = list(range(n, 2 * n))

    def split(z):
        z = np.asarray(z, dtype=float)
        return z[:n], z[n:2 * n], (float(z[2 * n]) if td else 0.0)

    def mapped(z):
        x, y, t = split(z)
        return leg(x, y, t, check=False) if explicit else leg.inverse(x, y, None, t)

    def value(z):
        x, _, t = split(z)
        return G(system.point(x, mapped(z), t))

    def grad(z):
        x, y, t = split(z)
        w = mapped(z)
        # the system's Hessian is needed on its own chart
        Hs = calc.hessian(system.field, system.point(x, y if explicit else w, t))
        dG = calc.gradient(G, system.point(x, w, t))
        Gy = dG[fib]
        outer = list(range(n)) + ([2 * n] if td else [])
        out = np.empty(len(dG))
        if explicit:
            # w = dF/dy(x, y): dw/dy = F_yy, dw/db = F_yb
            out[fib] = Hs[np.ix_(fib, fib)] @ Gy
            out[outer] = dG[outer] + Hs[np.ix_(fib, outer)].T @ Gy
        else:
            # dF/dw(x, w) = y: dw/dy = A^-1, dw/db = -A^-1 F_wb
            A = Hs[np.ix_(fib, fib)]
            sol = np.linalg.solve(A, Gy)
            out[fib] = sol
            out[outer] = dG[outer] - Hs[np.ix_(fib, outer)].T @ sol
        return out

    chart = PHASE if direction == "to_phase" else TANGENT
    return calc.ScalarField(value, 2 * n, time_dependent=td, chart=chart,
                            name=name or f"{G.name}->{chart}", grad=grad)


def lrl(s, m=1.0, k=1.0):
    """Laplace-Runge-Lenz vector ``p x (r x p) - m k r / |r|``; ``p = xi`` or ``m v``."""
    if s.n != 3:
        raise ArityError("the Laplace-Runge-Lenz vector is defined for states in R^3")
    r = np.asarray(s.x, dtype=float)
    p = np.asarray(s.xi, dtype=float) if isinstance(s, PhaseState) else float(m) * np.asarray(s.v, dtype=float)
    nr = float(np.linalg.norm(r))
    if nr == 0.0:
        raise InputError("Laplace-Runge-Lenz vector is undefined at r = 0")
    return np.cross(p, np.cross(r, p)) - float(m) * float(k) * r / nr


def _lrl_jet(z, m, k):
    r, p = z[:3], z[3:6]
    Lv = calc.cross3(r, p)
    pL = calc.cross3(p, Lv)
    nr = np.sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2])
    mk = float(m) * float(k)
    return [pL[i] - mk * r[i] / nr for i in range(3)]


def lrl_component(i, m=1.0, k=1.0):
    """Component ``A^i`` as a jet-friendly field on the phase chart of ``R^3`` (``i`` in 0..2)."""
    if i not in (0, 1, 2):
        raise InputError(f"component index must be 0, 1 or 2, got {i!r}")
    return calc.ScalarField(lambda z: _lrl_jet(z, m, k)[i], 6, chart=PHASE, name=f"A{i + 1}")


def hamiltonian_field_of(f, n, name=None):
    """``V_f = (df/dxi, -df/dx)`` of a phase-chart function, with exact Jacobian."""
    f = calc.as_field(f, 2 * n)

    def V(z):
        g = calc.gradient(f, z)
        return np.concatenate([g[n:], -g[:n]])

    def J(z):
        Hs = calc.hessian(f, z)
        return np.vstack([Hs[n:], -Hs[:n]])

    return PhaseVectorField(V, n, name=name or f"V[{f.name}]", jac=J)


@dataclass(frozen=True)
class LinearityReport:
    passed: bool
    momentum_residual: float
    base_residual: float
    tolerance: float


def fibre_linearity_test(W, x, xi_samples, rtol=1e-8):
    """Necessary condition for ``W`` to be a lifted base symmetry, on the fibre over ``x``.

    Passes iff the momentum part of ``W(x, .)`` is affine in ``xi`` (least
    squares residual) and the base part does not depend on ``xi``, both within
    ``rtol * (1 + scale)`` where ``scale`` is the largest component seen.

    Raises
    ------
    InputError
        Fewer than ``2n + 2`` samples, or samples that do not span the fibre affinely.
    """
    n = W.n
    x = calc._to_vector(x, n, "position")
    P = np.atleast_2d(np.asarray(xi_samples, dtype=float))
    if P.shape[1] != n:
        raise ArityError(f"fibre samples must have length {n}")
    if P.shape[0] < 2 * n + 2:
        raise InputError(f"need at least {2 * n + 2} fibre samples, got {P.shape[0]}")
    D = np.column_stack([P, np.ones(P.shape[0])])
    if np.linalg.matrix_rank(D) < n + 1:
        raise InputError("fibre samples are affinely degenerate")
    vals = np.array([W(np.concatenate([x, xi])) for xi in P])
    base, mom = vals[:, :n], vals[:, n:]
    coef, *_ = np.linalg.lstsq(D, mom, rcond=None)
    mom_res = float(np.max(np.abs(D @ coef - mom)))
    base_res = float(np.max(np.abs(base - base[0])))
    tol = rtol * (1.0 + float(np.max(np.abs(vals))))
    return LinearityReport(mom_res <= tol and base_res <= tol, mom_res, base_res, tol)
