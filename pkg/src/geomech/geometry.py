"""Riemannian chart data: metric fields, musical isomorphisms, Christoffel symbols."""

import re

import numpy as np

from . import calc
from .errors import ArityError, DefinitenessError, InputError

FLAT = "flat"
SHARP = "sharp"


class MetricField:
    """``x -> g(x)``, a symmetric positive-definite matrix on a chart.

    ``func`` must be jet-friendly (arithmetic and numpy elementwise functions
    only) so metric derivatives can be taken by the dual-number engine.  An
    optional ``inverse`` callable with the same contract speeds up the inverse
    metric inside Hamiltonians; otherwise a pivoted elimination is used.
    """

    def __init__(self, func, dim, *, name=None, inverse=None, constant=False):
        self.func = func
        self.dim = int(dim)
        self.name = name or getattr(func, "__name__", "metric")
        self.inverse_func = inverse
        self.constant = constant

    def __repr__(self):
        return f"MetricField({self.name!r}, dim={self.dim})"

    def raw(self, x):
        """Matrix at ``x`` without validation; entries may be jets."""
        return np.asarray(self.func(x)).reshape(self.dim, self.dim)

    def __call__(self, x):
        x = calc._to_vector(x, self.dim, "metric argument")
        G = np.asarray(self.func(x), dtype=float).reshape(self.dim, self.dim)
        if not np.all(np.isfinite(G)):
            raise DefinitenessError(f"{self.name} is not finite at {x}")
        scale = max(1.0, float(np.max(np.abs(G))))
        if np.max(np.abs(G - G.T)) > 1e-12 * scale:
            raise DefinitenessError(f"{self.name} is not symmetric at {x}")
        G = 0.5 * (G + G.T)
        try:
            np.linalg.cholesky(G)
        except np.linalg.LinAlgError:
            raise DefinitenessError(f"{self.name} is not positive definite at {x}") from None
        return G

    def inverse(self, x):
        return np.linalg.inv(self(x))

    def raw_inverse(self, x):
        """Inverse matrix that tolerates jet entries."""
        if self.inverse_func is not None:
            return np.asarray(self.inverse_func(x)).reshape(self.dim, self.dim)
        G = self.raw(x)
        if G.dtype != object:
            return np.linalg.inv(G)
        cols = [calc.solve(G, np.eye(self.dim)[:, j]) for j in range(self.dim)]
        return np.stack(cols, axis=1)

    def derivatives(self, x):
        """``dg[k, i, j] = d g_ij / d x^k`` by dual passes over the flattened entries."""
        x = calc._to_vector(x, self.dim, "metric argument")
        self(x)
        d = self.dim
        if self.constant:
            return np.zeros((d, d, d))
        flat = calc.VectorMap(lambda y: self.raw(y).reshape(-1), d, d * d, name=self.name)
        J = calc.jacobian(flat, x)  # (d*d, d)
        dg = J.T.reshape(d, d, d)
        return 0.5 * (dg + dg.transpose(0, 2, 1))


def _check_direction(direction):
    if direction not in (FLAT, SHARP):
        raise InputError(f"direction must be 'flat' or 'sharp', got {direction!r}")


def musical(g, x, w, direction):
    """Lower (``flat``: ``g w``) or raise (``sharp``: ``g^{-1} w``) an index at ``x``."""
    _check_direction(direction)
    G = g(x)
    w = calc._to_vector(w, g.dim, "vector")
    if direction == FLAT:
        return G @ w
    return np.linalg.solve(G, w)


def christoffel(g, x):
    """``Gamma[b, a, p]`` = Christoffel symbol of the second kind, symmetric in ``(a, p)``."""
    G = g(x)
    dg = g.derivatives(x)
    ginv = np.linalg.inv(G)
    # T[a, p, k] = d_p g_ak + d_a g_pk - d_k g_ap
    T = dg.transpose(1, 0, 2) + dg - dg.transpose(1, 2, 0)
    gamma = 0.5 * np.einsum("bk,apk->bap", ginv, T)
    return 0.5 * (gamma + gamma.transpose(0, 2, 1))


def geodesic_accel(g, x, v):
    """Geodesic acceleration ``a^b = -Gamma^b_{ap} v^a v^p``."""
    v = calc._to_vector(v, g.dim, "velocity")
    return -np.einsum("bap,a,p->b", christoffel(g, x), v, v)


def euclidean(n):
    n = int(n)
    eye = np.eye(n)
    return MetricField(lambda x: eye, n, name=f"euclidean({n})", inverse=lambda x: eye, constant=True)


def constant(matrix, name=None):
    M = np.array(matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ArityError("constant metric must be a square matrix")
    Minv = np.linalg.inv(M)
    return MetricField(lambda x: M, M.shape[0], name=name or "constant", inverse=lambda x: Minv, constant=True)


def polar():
    """Plane in polar coordinates ``(r, theta)``: ``diag(1, r^2)``."""

    def g(x):
        r = x[0]
        return np.array([[1.0, 0.0], [0.0, r * r]])

    def ginv(x):
        r = x[0]
        return np.array([[1.0, 0.0], [0.0, 1.0 / (r * r)]])

    return MetricField(g, 2, name="polar", inverse=ginv)


def sphere(radius=1.0):
    """Round sphere in coordinates ``(phi, theta)`` (polar angle, azimuth): ``R^2 diag(1, sin^2 phi)``."""
    R2 = float(radius) ** 2

    def g(x):
        s = np.sin(x[0])
        return np.array([[R2, 0.0], [0.0, R2 * s * s]])

    def ginv(x):
        s = np.sin(x[0])
        return np.array([[1.0 / R2, 0.0], [0.0, 1.0 / (R2 * s * s)]])

    return MetricField(g, 2, name=f"sphere({float(radius)!r})", inverse=ginv)


_NAME = re.compile(r"^\s*([a-z]+)\s*(?:\(\s*([^)]*)\s*\))?\s*$")


def metric_from_name(label):
    """Build a metric from ``"euclidean(n)"``, ``"polar"`` or ``"sphere(R)"``."""
    m = _NAME.match(label)
    if not m:
        raise InputError(f"cannot parse metric name {label!r}")
    kind, arg = m.group(1), m.group(2)
    if kind == "euclidean":
        if not arg:
            raise InputError("euclidean metric needs a dimension, e.g. euclidean(3)")
        return euclidean(int(arg))
    if kind == "polar":
        if arg:
            raise InputError("polar metric takes no argument")
        return polar()
    if kind == "sphere":
        return sphere(float(arg) if arg else 1.0)
    raise InputError(f"unknown metric {kind!r}")
