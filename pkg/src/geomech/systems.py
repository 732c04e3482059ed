"""Common machinery for scalar fields on a bundle chart ``(x, y[, t])``.

Both Lagrangian systems (``y`` = velocity) and Hamiltonian systems
(``y`` = momentum) are a scalar field of arity ``2n`` (plus a trailing time)
together with fibre derivatives, which this base class provides.
"""

import numpy as np

from . import calc
from .errors import ArityError, ConvexityError, InputError


def as_scalar_field(f, dim, time_dependent=False, chart=None, name=None):
    if isinstance(f, calc.ScalarField):
        if f.dim != dim:
            raise ArityError(f"field has dim {f.dim}, expected {dim}")
        return f
    return calc.ScalarField(f, dim, time_dependent=time_dependent, chart=chart, name=name)


def spd_solve(A, b, what="fibre Hessian"):
    """Solve with a positive-definite matrix, raising ConvexityError if it is not one."""
    if A.shape == (1, 1):
        if not A[0, 0] > 0.0:
            raise ConvexityError(f"{what} is not positive definite: {A[0, 0]!r}")
        return b / A[0, 0]
    try:
        np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise ConvexityError(f"{what} is not positive definite") from None
    return np.linalg.solve(A, b)


class FibreSystem:
    """A scalar field on a bundle chart with base coordinates ``x`` and fibre coordinates ``y``."""

    chart = None
    fibre_label = "y"

    def __init__(self, field, n, *, strongly_convex=True, time_dependent=False, name=None):
        n = int(n)
        if n < 1:
            raise InputError("base dimension must be positive")
        self.field = as_scalar_field(field, 2 * n, time_dependent, self.chart, name)
        if self.field.chart is None:
            self.field.chart = self.chart
        self.n = n
        self.strongly_convex = bool(strongly_convex)
        self.name = name or self.field.name

    @property
    def time_dependent(self):
        return self.field.time_dependent

    @property
    def arity(self):
        return self.field.arity

    @property
    def base_idx(self):
        return list(range(self.n))

    @property
    def fibre_idx(self):
        return list(range(self.n, 2 * self.n))

    @property
    def outer_idx(self):
        """Coordinates that are parameters of each fibre: base plus time."""
        return self.base_idx + ([2 * self.n] if self.time_dependent else [])

    def point(self, x, y, t=0.0):
        x = np.asarray(x, dtype=float).reshape(-1)
        y = np.asarray(y, dtype=float).reshape(-1)
        if x.shape[0] != self.n or y.shape[0] != self.n:
            raise ArityError(f"{self.name}: expected base and fibre vectors of length {self.n}")
        if self.time_dependent:
            return np.concatenate([x, y, [float(t)]])
        return np.concatenate([x, y])

    def value(self, x, y, t=0.0):
        return self.field(self.point(x, y, t))

    def fibre_gradient(self, x, y, t=0.0):
        return calc.partial_gradient(self.field, self.point(x, y, t), self.fibre_idx)

    def base_gradient(self, x, y, t=0.0):
        return calc.partial_gradient(self.field, self.point(x, y, t), self.base_idx)

    def fibre_hessian(self, x, y, t=0.0, check=True):
        """Fibre Hessian and fibre gradient at a point; Cholesky-checked when strongly convex."""
        A, g = calc.partial_hessian(self.field, self.point(x, y, t), self.fibre_idx)
        A = 0.5 * (A + A.T)
        if check and self.strongly_convex:
            check_positive_definite(A, f"{self.name} fibre Hessian")
        return A, g

    def __call__(self, z):
        return self.field(z)

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r}, n={self.n})"


def check_positive_definite(A, what):
    if A.shape == (1, 1):
        if not A[0, 0] > 0.0:
            raise ConvexityError(f"{what} is not positive definite")
        return
    try:
        np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise ConvexityError(f"{what} is not positive definite") from None


def step_count(t_end, dt):
    if not dt > 0:
        raise InputError(f"dt must be positive, got {dt!r}")
    if not t_end > 0:
        raise InputError(f"t_end must be positive, got {t_end!r}")
    steps = int(round(t_end / dt))
    return max(steps, 1)


def rk4_step(f, t, y, dt):
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def simpson_weights(count, h):
    """Composite Simpson weights; an even sample count closes the last interval with a trapezoid."""
    if count < 2:
        raise InputError("quadrature needs at least two samples")
    w = np.zeros(count)
    m = count if count % 2 else count - 1
    if m >= 3:
        w[:m:2] += 2.0
        w[1:m:2] += 4.0
        w[0] -= 1.0
        w[m - 1] -= 1.0
        w[:m] *= h / 3.0
    if m != count:
        w[-2] += 0.5 * h
        w[-1] += 0.5 * h
    return w
