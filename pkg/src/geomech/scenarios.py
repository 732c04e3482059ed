"""Built-in physical systems, their verification matrices and run artifacts.

Each scenario builds a Lagrangian, the matching analytic Hamiltonian, a
default initial state and a list of charges.  :func:`verify` integrates both
pictures and evaluates every check; :func:`run` additionally writes

* ``lagrangian.csv`` / ``hamiltonian.csv`` with ``lagrangian.json`` /
  ``hamiltonian.json`` sidecars,
* ``charges.json``: one conservation report per charge and chart,
* ``verification.json``: one ``{check, paper_ref, status, value, tolerance}``
  record per check.

Every number is written as a shortest round-trip decimal and sampling uses a
seeded sequence, so identical configurations give byte-identical files.
"""

import math
import os
import sys
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import calc, geometry, hamiltonian as ham, lagrangian as lag, legendre as leg, noether
from .errors import InputError
from .states import PHASE, TANGENT, PhaseState, TangentState, sidecar, write_json, write_trajectory_csv

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

PASS, FAIL = "pass", "fail"


@dataclass(frozen=True)
class RunConfig:
    """Scenario name plus physical constants and integration settings."""

    scenario: str
    m: float = 1.0
    l: float = 1.0
    g: float = 9.8
    k: float = 1.0
    dt: float = 1e-3
    t_end: float = 10.0
    method: str = "implicit_midpoint"
    seed: int = 42
    out: str = None

    def __post_init__(self):
        for name in ("m", "l", "g", "k", "dt", "t_end"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InputError(f"{name} must be a number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if not self.dt > 0 or not self.t_end > 0:
            raise InputError("dt and t_end must be positive")
        if not (self.m > 0 and self.l > 0 and self.k > 0):
            raise InputError("m, l and k must be positive")
        if self.method not in ham.METHODS:
            raise InputError(f"unknown method {self.method!r}; choose one of {', '.join(ham.METHODS)}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise InputError(f"seed must be an integer, got {self.seed!r}")

    @classmethod
    def load(cls, scenario, path=None, **overrides):
        """Defaults, then the TOML file at ``path``, then non-``None`` ``overrides``."""
        values = {}
        if path is not None:
            try:
                with open(path, "rb") as fh:
                    doc = tomllib.load(fh)
            except (OSError, tomllib.TOMLDecodeError) as exc:
                raise InputError(f"cannot read config {path}: {exc}") from None
            allowed = {f.name for f in fields(cls)} - {"scenario"}
            unknown = set(doc) - allowed
            if unknown:
                raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
            values.update(doc)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(scenario, **values)


@dataclass(frozen=True)
class Check:
    check: str
    paper_ref: str
    status: str
    value: float
    tolerance: float

    def to_dict(self):
        return {"check": self.check, "paper_ref": self.paper_ref, "status": self.status,
                "value": float(self.value), "tolerance": float(self.tolerance)}


def _at_most(name, ref, value, tol):
    value = float(value)
    ok = math.isfinite(value) and value <= tol
    return Check(name, ref, PASS if ok else FAIL, value, tol)


def _at_least(name, ref, value, tol):
    value = float(value)
    ok = math.isfinite(value) and value >= tol
    return Check(name, ref, PASS if ok else FAIL, value, tol)


@dataclass
class Charge:
    """A tangent-chart conserved quantity; ``scale`` normalizes relative drift."""

    name: str
    field: calc.ScalarField
    tol: float
    ref: str
    scale: float = None
    family: noether.OneParameterFamily = None


@dataclass
class Setup:
    L: lag.LagrangianSystem
    H: ham.HamiltonianSystem
    s0: TangentState
    charges: list
    box: tuple
    extra: object = None
    notes: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    reference: str
    build: object
    checks: object


# ---------------------------------------------------------------- builders


def _pendulum(cfg):
    m, l, g = cfg.m, cfg.l, cfg.g
    mgl = m * g * l

    U = calc.ScalarField(lambda x: mgl * (1.0 - np.cos(x[0])), 1, name="U",
                         grad=lambda x: np.array([mgl * math.sin(x[0])]),
                         hess=lambda x: np.array([[mgl * math.cos(x[0])]]))
    L = lag.natural_lagrangian(geometry.constant([[l * l]], name="l^2"), U, m, name="pendulum")
    inv = 1.0 / (m * l * l)
    T = calc.ScalarField(lambda p: 0.5 * inv * (p[0] * p[0]), 1, name="T",
                         grad=lambda p: np.array([inv * p[0]]), hess=lambda p: np.array([[inv]]))
    H = ham.separable_hamiltonian(T, U, 1, name="pendulum*")
    E = lag.energy_field(L)
    minus_e = calc.ScalarField(lambda z: -E(z), 2, chart=TANGENT, name="time_charge",
                               grad=lambda z: -E.gradient(z))
    charges = [Charge("time_charge", minus_e, 1e-5, "time translation of the homogenized system gives -H")]
    s0 = TangentState([1.0], [0.0])
    return Setup(L, H, s0, charges, box=([-1.5, -2.0], [1.5, 2.0]))


def kepler_potential(k=1.0):
    """``U(r) = -k / |r|`` with closed-form gradient and Hessian rules."""

    def U(x):
        return -k / np.sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])

    def grad(x):
        x = np.asarray(x, dtype=float)
        r = math.sqrt(float(x @ x))
        return k * x / r ** 3

    def hess(x):
        x = np.asarray(x, dtype=float)
        r = math.sqrt(float(x @ x))
        return k * (np.eye(3) / r ** 3 - 3.0 * np.outer(x, x) / r ** 5)

    return calc.ScalarField(U, 3, name="-k/|r|", grad=grad, hess=hess)


def _kepler_lrl_tangent(i, m, k):
    def A(z):
        w = np.empty(6, dtype=z.dtype)
        w[:3] = z[:3]
        w[3:] = [m * c for c in z[3:6]]
        return noether._lrl_jet(w, m, k)[i]

    return calc.ScalarField(A, 6, chart=TANGENT, name=f"A{i + 1}")


KEPLER_ECCENTRICITY = 0.6


def kepler_initial_state(m=1.0, k=1.0, e=KEPLER_ECCENTRICITY):
    """Perihelion at ``(1, 0, 0)`` with speed ``sqrt(k (1 + e) / m)`` along ``x^2``."""
    return TangentState([1.0, 0.0, 0.0], [0.0, math.sqrt(k * (1.0 + e) / m), 0.0])


def kepler_period(m=1.0, k=1.0, e=KEPLER_ECCENTRICITY):
    a = 1.0 / (1.0 - e)
    return 2.0 * math.pi * math.sqrt(m * a ** 3 / k)


def _kepler(cfg):
    m, k = cfg.m, cfg.k
    U = kepler_potential(k)
    g = geometry.euclidean(3)
    L = lag.natural_lagrangian(g, U, m, name="kepler")
    H = ham.natural_hamiltonian(g, U, m, name="kepler*")
    s0 = kepler_initial_state(m, k)
    Lvec = lag.angular_momentum(s0, m)
    Lmag = float(np.linalg.norm(Lvec))
    Avec = noether.lrl(s0, m, k)
    Amag = float(np.linalg.norm(Avec))
    charges = []
    for axis, label in zip(np.eye(3), ("Lx", "Ly", "Lz")):
        fam = noether.rotations(axis)
        charges.append(Charge(label, noether.noether_charge(L, fam, name=label), 1e-6,
                              "rotation invariance conserves angular momentum", Lmag, fam))
    for i in range(3):
        charges.append(Charge(f"A{i + 1}", _kepler_lrl_tangent(i, m, k), 1e-5,
                              "Laplace-Runge-Lenz vector is conserved", Amag))
    box = ([0.5, -1.0, -1.0, -1.0, -1.0, -1.0], [1.5, 1.0, 1.0, 1.0, 1.0, 1.0])
    return Setup(L, H, s0, charges, box=box, notes={"period": kepler_period(m, k)})


def _geodesic(cfg):
    R = cfg.l
    g = geometry.sphere(R)
    L = lag.natural_lagrangian(g, None, cfg.m, name="geodesic")
    H = ham.natural_hamiltonian(g, None, cfg.m, name="geodesic*")
    s0 = TangentState([math.pi / 2, 0.0], [0.3, 1.0])
    fam = noether.translations([0.0, 1.0])
    charges = [Charge("J_theta", noether.noether_charge(L, fam, name="J_theta"), 1e-5,
                      "azimuthal invariance conserves the Clairaut momentum", family=fam)]
    return Setup(L, H, s0, charges, box=([1.0, -1.0, -1.0, -1.0], [2.1, 1.0, 1.0, 1.0]), extra=g)


def _free(cfg):
    g = geometry.euclidean(3)
    L = lag.natural_lagrangian(g, None, cfg.m, name="free")
    H = ham.natural_hamiltonian(g, None, cfg.m, name="free*")
    s0 = TangentState([0.0, 0.0, 0.0], [1.0, 0.5, -0.2])
    charges = []
    for axis, label in zip(np.eye(3), ("P1", "P2", "P3")):
        fam = noether.translations(axis)
        charges.append(Charge(label, noether.noether_charge(L, fam, name=label), 1e-8,
                              "translation invariance conserves linear momentum", family=fam))
    return Setup(L, H, s0, charges, box=([-1.0] * 6, [1.0] * 6))


def _work_demo(cfg):
    g = geometry.euclidean(2)
    L = lag.natural_lagrangian(g, None, cfg.m, name="planar")
    H = ham.natural_hamiltonian(g, None, cfg.m, name="planar*")
    s0 = TangentState([1.0, 0.0], [0.0, 1.0])
    fam = rotation_2d()
    charges = [Charge("Lz", noether.noether_charge(L, fam, name="Lz"), 1e-8,
                      "rotation invariance conserves angular momentum", family=fam)]
    return Setup(L, H, s0, charges, box=([-1.0] * 4, [1.0] * 4))


def rotation_2d():
    def rot(s, x):
        c, sn = np.cos(s), np.sin(s)
        return np.array([c * x[0] - sn * x[1], sn * x[0] + c * x[1]], dtype=np.asarray(x).dtype)

    def gen(x):
        return np.array([-x[1], x[0]], dtype=np.asarray(x).dtype)

    return noether.OneParameterFamily(2, rot, gen, name="rotation2d")


# ---------------------------------------------------------------- checks


def semicircle(n, upper=True):
    t = np.linspace(0.0, math.pi, n)
    return np.column_stack([np.cos(t), np.sin(t) if upper else -np.sin(t)])


def swirl():
    return calc.VectorMap(lambda x: np.array([-x[1], x[0]]), 2, 2, name="swirl")


def _work_checks(cfg, setup, ctx):
    F = swirl()
    up = lag.work_along(F, semicircle(2000, True))
    down = lag.work_along(F, semicircle(2000, False))
    out = [
        _at_most("work of (-y, x) along upper semicircle equals pi", "work of a non-conservative field",
                 abs(up - math.pi), 1e-6),
        _at_most("work of (-y, x) along lower semicircle equals -pi", "work of a non-conservative field",
                 abs(down + math.pi), 1e-6),
    ]
    ctx["values"]["work_upper"] = up
    ctx["values"]["work_lower"] = down

    def U(x):
        return x[0] * x[0] * x[1] + np.sin(x[1])

    Uf = calc.ScalarField(U, 2)
    grad_force = calc.VectorMap(lambda x: -calc.gradient(Uf, x), 2, 2, name="-grad U")
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    t = np.linspace(0.0, 1.0, 801)
    for _ in range(5):
        a, b, c = rng.normal(size=(3, 2))
        curve = a + np.outer(t, b) + np.outer(np.sin(math.pi * t), c)
        w = lag.work_along(grad_force, curve)
        worst = max(worst, abs(w - (Uf(curve[0]) - Uf(curve[-1]))))
    out.append(_at_most("work of -grad U equals U(start) - U(end)", "conservative forces", worst, 1e-6))
    return out


def _geodesic_checks(cfg, setup, ctx):
    g = setup.extra
    traj = ctx["ham"]
    R = cfg.l
    x0, v0 = setup.s0.x, setup.s0.v
    dist = great_circle_deviation(traj.positions, x0, v0, traj.times - traj.t0, R)
    out = [_at_most("Hamiltonian motion on the sphere follows the great circle", "geodesic flow",
                    dist, 1e-6)]
    speeds = [float(v @ g(x) @ v) for x, v in zip(ctx["el"].positions, ctx["el"].fibre)]
    out.append(_at_most("geodesic speed g(v, v) conserved along EL motion", "geodesic speed conservation",
                        max(abs(s - speeds[0]) for s in speeds), 1e-6))
    pts = noether.sample_box(*setup.box, 20, 4, cfg.seed)
    Hg = ham.geodesic_hamiltonian(g)
    Hd = leg.dualize(lag.natural_lagrangian(g, None, 1.0))
    err = max(abs(Hd.field(p) - Hg.field(p)) for p in pts)
    out.append(_at_most("dual of kinetic Lagrangian equals 1/2 g^ij xi_i xi_j", "geodesic Hamiltonian",
                        err, 1e-10))
    return out


def great_circle_deviation(positions, x0, v0, times, R=1.0):
    """Largest distance between chart points mapped to the sphere and the analytic great circle."""
    p0 = _embed(x0, R)
    J = _embed_jacobian(x0, R)
    u = J @ np.asarray(v0, dtype=float)
    speed = float(np.linalg.norm(u))
    ref = (np.outer(np.cos(speed * times / R), p0)
           + np.outer(np.sin(speed * times / R), R * u / speed))
    got = np.array([_embed(x, R) for x in positions])
    return float(np.max(np.linalg.norm(got - ref, axis=1)))


def _embed(x, R):
    phi, theta = x
    return R * np.array([np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)])


def _embed_jacobian(x, R):
    return calc.jacobian(calc.VectorMap(lambda y: _embed(y, R), 2, 3), np.asarray(x, dtype=float))


def _free_checks(cfg, setup, ctx):
    traj = ctx["ham"]
    x0, xi0 = traj.states[0, :3], traj.states[0, 3:]
    line = x0 + np.outer(traj.times - traj.t0, xi0 / cfg.m)
    out = [_at_most("free Hamiltonian motion is a straight line", "free particle",
                    float(np.max(np.abs(traj.positions - line))), 1e-10)]

    def f(z):
        d = [z[i] - z[3 + i] for i in range(3)]
        return -0.5 * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2])

    gen = calc.ScalarField(f, 6, name="-|x-y|^2/2")
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(100):
        a, xi = rng.uniform(-2.0, 2.0, size=(2, 3))
        b, eta = ham.generating_symplectomorphism(gen, a, xi)
        worst = max(worst, float(np.max(np.abs(b - (a + xi)))), float(np.max(np.abs(eta - xi))))
    out.append(_at_most("map generated by -|x-y|^2/2 is (a + xi, xi)", "free translation generating function",
                        worst, 1e-12))
    return out


def _kepler_checks(cfg, setup, ctx):
    m, k = cfg.m, cfg.k
    H = setup.H
    pts = noether.sample_box(*setup.box, 100, 6, cfg.seed)
    A1 = noether.lrl_component(0, m, k)
    bracket = max(abs(ham.poisson(A1, H.field, PhaseState(p[:3], p[3:]))) for p in pts)
    out = [_at_most("{A1, H} vanishes at sampled states", "Laplace-Runge-Lenz bracket", bracket, 1e-8)]
    XA = noether.hamiltonian_field_of(A1, 3, name="X_A1")
    sym = noether.check_hamiltonian_symmetry(H, XA, samples=pts[:20])
    out.append(_at_most("X_A1 preserves H and omega", "Laplace-Runge-Lenz symmetry", sym.max_violation, 1e-8))
    fibre = noether.sample_box(-1.0, 1.0, 12, 3, cfg.seed)
    x = np.array([1.0, 0.2, -0.3])
    lin = noether.fibre_linearity_test(XA, x, fibre)
    out.append(_at_least("X_A1 fails fibre linearity (negative control)", "Laplace-Runge-Lenz is not a lift",
                         max(lin.momentum_residual, lin.base_residual), lin.tolerance))
    lifted = noether.lifted_field(noether.rotations())
    lin_rot = noether.fibre_linearity_test(lifted, x, fibre)
    out.append(_at_most("lifted rotation passes fibre linearity", "lifted flows are fibre-linear",
                        max(lin_rot.momentum_residual, lin_rot.base_residual), lin_rot.tolerance))
    lie = max(float(np.max(np.abs(noether.lie_derivative_alpha(XA, p)))) for p in pts[:20])
    out.append(_at_least("X_A1 does not preserve alpha (negative control)", "Laplace-Runge-Lenz is not a lift",
                         lie, 1e-2))
    f = noether.alpha_charge(lifted)
    beta = noether.contraction(lifted)
    dev = max(float(np.max(np.abs(beta(p) - f.gradient(p)))) for p in pts[:20])
    out.append(_at_most("omega(W, .) = d alpha(W) for the lifted rotation", "Hamiltonian Noether charge", dev, 1e-6))
    return out


SUITE = {
    "pendulum": Scenario("pendulum", "planar pendulum, theta0 = 1 rad at rest",
                         "pendulum Lagrangian, Hamiltonian and Legendre map", _pendulum, None),
    "kepler": Scenario("kepler", "Kepler problem in R^3, eccentricity 0.6 orbit",
                       "central force symmetries and the Laplace-Runge-Lenz vector", _kepler, _kepler_checks),
    "geodesic": Scenario("geodesic", "geodesic flow on the unit sphere from an inclined equatorial start",
                         "geodesic flow as a Hamiltonian system", _geodesic, _geodesic_checks),
    "free": Scenario("free", "free particle in R^3 and its generating function",
                     "free motion and the translation generating function", _free, _free_checks),
    "work-demo": Scenario("work-demo", "work of (-y, x) along unit semicircles, planar free particle",
                          "work integrals and path dependence", _work_demo, _work_checks),
}


def catalog():
    """``[(name, description, reference), ...]`` in a fixed order."""
    return [(s.name, s.description, s.reference) for s in SUITE.values()]


def get(name):
    try:
        return SUITE[name]
    except KeyError:
        raise InputError(f"unknown scenario {name!r}; known: {', '.join(SUITE)}") from None


# ---------------------------------------------------------------- pipeline


def _series(field, traj):
    return noether.evaluate_along(field, traj)


def _common_checks(cfg, setup, ctx):
    L, H, s0 = setup.L, setup.H, setup.s0
    el, hm = ctx["el"], ctx["ham"]
    out = []
    E = ctx["energy_el"]
    out.append(_at_most("energy drift along EL motion (RK4)", "energy conservation",
                        float(np.max(np.abs(E - E[0]))), 1e-5))
    Eh = ctx["energy_ham"]
    out.append(_at_most(f"energy drift along Hamilton motion ({cfg.method})", "energy conservation",
                        float(np.max(np.abs(Eh - Eh[0]))), 1e-5))
    out.append(_at_most("discrete EL residual", "Euler-Lagrange equations",
                        lag.el_residual(L, el), 10.0 * cfg.dt ** 2))

    dim = 2 * L.n
    pts = noether.sample_box(*setup.box, 20, dim, cfg.seed)
    probe = hm.states[::max(1, len(hm) // 20)]
    for ch in setup.charges:
        if ch.family is not None:
            sym = noether.check_lagrangian_symmetry(L, ch.family, samples=pts)
            out.append(Check(f"L invariant under {ch.family.name}", "continuous symmetry of L",
                             PASS if sym.passed else FAIL, sym.max_violation, 1e-8))
        bracket = max(abs(ham.poisson(ctx["moved"][ch.name], H.field, PhaseState(z[:L.n], z[L.n:])))
                      for z in probe)
        out.append(_at_most(f"{{{ch.name}, H}} vanishes along Hamilton motion", "brackets with H detect constants",
                            bracket, 1e-7))
        rep = ctx["reports"][f"lagrangian:{ch.name}"]
        out.append(_at_most(f"{ch.name} relative drift along EL motion", ch.ref, rep.max_rel_drift, ch.tol))
        rep_h = ctx["reports"][f"hamiltonian:{ch.name}"]
        out.append(_at_most(f"{ch.name} relative drift along Hamilton motion", ch.ref, rep_h.max_rel_drift,
                            max(ch.tol, 1e-5)))
        gap = float(np.max(np.abs(ctx["charges_el"][ch.name] - ctx["charges_ham"][ch.name])))
        out.append(_at_most(f"{ch.name} agrees pointwise across the Legendre map", "charges transfer with F o Phi_H",
                            gap, 1e-5))

    # Legendre map at the initial state and on samples
    Hd = leg.dualize(L)
    p0 = leg.phi(L, s0)
    back = leg.phi_h(Hd, p0)
    out.append(_at_most("Legendre round trip at the initial state", "fibre maps are mutually inverse",
                        float(np.max(np.abs(back.v - s0.v))), 1e-9))
    err = max(abs(Hd.field(p) - H.field(p)) for p in pts)
    out.append(_at_most("dual of L equals the analytic Hamiltonian", "induced Hamiltonian", err, 1e-8))

    # correspondence: both pictures by RK4 on the same grid
    hm_rk4 = hm if cfg.method == "rk4" else ham.integrate_hamilton(H, p0, cfg.t_end, cfg.dt, "rk4")
    mapped = np.array([LegMap(L)(x, v) for x, v in zip(el.positions, el.fibre)])
    gap = float(np.max(np.abs(np.column_stack([el.positions, mapped]) - hm_rk4.states)))
    out.append(_at_most("Phi_L of EL motion matches Hamilton motion (both RK4)",
                        "Legendre map sends motions to motions", gap, 1e-5))
    return out


def LegMap(system):
    lm = leg.LegendreMap(system)
    return lambda x, y: lm(x, y, 0.0, check=False)


def _pendulum_checks(cfg, setup, ctx):
    L = setup.L
    L1 = lag.homogenize(L)
    fam = noether.translations([1.0, 0.0])
    Q = noether.noether_charge(L1, fam, name="homogenized time charge")
    lifted = lag.homogenize_trajectory(ctx["el"])
    q = _series(Q, lifted)
    Hvals = ctx["energy_ham_on_el"]
    rep = noether.report_from_values("homogenized time charge", q)
    return [
        _at_most("homogenized time-translation charge equals -H", "time translation charge",
                 float(np.max(np.abs(q + Hvals))), 1e-8),
        _at_most("homogenized time-translation charge relative drift", "time translation charge",
                 rep.max_rel_drift, 1e-5),
    ]


def verify(cfg):
    """Integrate both pictures and evaluate the verification matrix; returns a context dict."""
    sc = get(cfg.scenario)
    setup = sc.build(cfg)
    L, H = setup.L, setup.H
    el = lag.integrate_el(L, setup.s0, cfg.t_end, cfg.dt)
    p0 = leg.phi(L, setup.s0)
    hm = ham.integrate_hamilton(H, p0, cfg.t_end, cfg.dt, cfg.method)
    E = lag.energy_field(L)
    ctx = {"config": cfg, "setup": setup, "el": el, "ham": hm, "values": {}, "reports": {},
           "charges_el": {}, "charges_ham": {}, "moved": {}}
    ctx["energy_el"] = _series(E, el)
    ctx["energy_ham"] = np.array([H.field(z) for z in hm.states])
    phase_of_el = [np.concatenate([x, LegMap(L)(x, v)]) for x, v in zip(el.positions, el.fibre)]
    ctx["energy_ham_on_el"] = np.array([H.field(z) for z in phase_of_el])
    for ch in setup.charges:
        vals = _series(ch.field, el)
        moved = noether.transfer_charge(ch.field, H, "to_phase", name=ch.name)
        vals_h = _series(moved, hm)
        ctx["moved"][ch.name] = moved
        ctx["charges_el"][ch.name] = vals
        ctx["charges_ham"][ch.name] = vals_h
        ctx["reports"][f"lagrangian:{ch.name}"] = noether.report_from_values(ch.name, vals, ch.scale)
        ctx["reports"][f"hamiltonian:{ch.name}"] = noether.report_from_values(ch.name, vals_h, ch.scale)
    checks = _common_checks(cfg, setup, ctx)
    if sc.name == "pendulum":
        checks += _pendulum_checks(cfg, setup, ctx)
    if sc.checks is not None:
        checks += sc.checks(cfg, setup, ctx)
    ctx["checks"] = checks
    ctx["passed"] = all(c.status == PASS for c in checks)
    return ctx


def run(cfg):
    """Verify and write all artifacts into ``cfg.out`` (created if missing)."""
    if not cfg.out:
        raise InputError("run needs an output directory")
    try:
        os.makedirs(cfg.out, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory {cfg.out}: {exc}") from None
    if not os.access(cfg.out, os.W_OK):
        raise InputError(f"output directory {cfg.out} is not writable")
    ctx = verify(cfg)
    el, hm = ctx["el"], ctx["ham"]
    path = lambda name: os.path.join(cfg.out, name)  # noqa: E731
    write_trajectory_csv(path("lagrangian.csv"), el, ctx["energy_el"], ctx["charges_el"])
    write_trajectory_csv(path("hamiltonian.csv"), hm, ctx["energy_ham"], ctx["charges_ham"])
    write_json(path("lagrangian.json"), sidecar(el))
    write_json(path("hamiltonian.json"), sidecar(hm))
    write_json(path("charges.json"), [dict(r.to_dict(), name=key) for key, r in ctx["reports"].items()])
    write_json(path("verification.json"), [c.to_dict() for c in ctx["checks"]])
    return ctx


def summary_lines(ctx):
    cfg = ctx["config"]
    lines = [f"scenario {cfg.scenario}: dt={cfg.dt!r} t_end={cfg.t_end!r} method={cfg.method}"]
    for c in ctx["checks"]:
        lines.append(f"  [{c.status.upper()}] {c.check}: {c.value:.3e} (tol {c.tolerance:.1e})")
    n_fail = sum(c.status != PASS for c in ctx["checks"])
    lines.append(f"{len(ctx['checks']) - n_fail}/{len(ctx['checks'])} checks passed")
    return lines


def with_overrides(cfg, **kw):
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
