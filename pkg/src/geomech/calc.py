"""Forward-mode differentiation with dual and hyper-dual numbers.

Fields are plain Python callables taking one numpy vector.  To differentiate,
the vector is filled with :class:`Dual` (first order) or :class:`HyperDual`
(second order) entries and the callable is re-run, so user code must stick to
arithmetic operators and numpy elementwise functions (``np.sin``, ``np.sqrt``,
...); numpy dispatches those to the methods defined here.  ``math.*``
functions will raise ``TypeError`` on jets, which is deliberate.

A :class:`HyperDual` ``a + b e1 + c e2 + d e1 e2`` is the nested dual number
``Dual(Dual(a, c), Dual(b, d))`` stored flat; seeding ``e1`` and ``e2`` along
two directions yields the mixed second derivative in ``d``.

Time-dependent fields take time as a trailing coordinate, so a field declared
with ``dim=n, time_dependent=True`` is called with vectors of length ``n + 1``.
"""

import math

import numpy as np

from .errors import ArityError, NumericDomainError

_REAL = (int, float, np.integer, np.floating)


def _safe_pow(a, p):
    try:
        return a**p
    except ZeroDivisionError:
        return math.inf
    except OverflowError:
        odd = float(p).is_integer() and int(p) % 2 == 1
        return -math.inf if (a < 0 and odd) else math.inf


class _JetMath:
    """Elementary functions shared by both jet types, via ``_chain(f, f', f'')``."""

    __slots__ = ()

    def sin(self):
        s, c = math.sin(self.re), math.cos(self.re)
        return self._chain(s, c, -s)

    def cos(self):
        s, c = math.sin(self.re), math.cos(self.re)
        return self._chain(c, -s, -c)

    def tan(self):
        t = math.tan(self.re)
        sec2 = 1.0 + t * t
        return self._chain(t, sec2, 2.0 * t * sec2)

    def exp(self):
        e = math.exp(self.re)
        return self._chain(e, e, e)

    def expm1(self):
        e = math.exp(self.re)
        return self._chain(math.expm1(self.re), e, e)

    def log(self):
        a = self.re
        if a <= 0.0:
            return self._chain(math.nan, math.nan, math.nan)
        return self._chain(math.log(a), 1.0 / a, -1.0 / (a * a))

    def log1p(self):
        a = 1.0 + self.re
        if a <= 0.0:
            return self._chain(math.nan, math.nan, math.nan)
        return self._chain(math.log1p(self.re), 1.0 / a, -1.0 / (a * a))

    def sqrt(self):
        a = self.re
        if a < 0.0:
            return self._chain(math.nan, math.nan, math.nan)
        if a == 0.0:
            return self._chain(0.0, math.inf, -math.inf)
        r = math.sqrt(a)
        return self._chain(r, 0.5 / r, -0.25 / (r * a))

    def arcsin(self):
        a = self.re
        q = 1.0 - a * a
        if q <= 0.0:
            return self._chain(math.nan, math.nan, math.nan)
        r = 1.0 / math.sqrt(q)
        return self._chain(math.asin(a), r, a * r * r * r)

    def arccos(self):
        a = self.re
        q = 1.0 - a * a
        if q <= 0.0:
            return self._chain(math.nan, math.nan, math.nan)
        r = 1.0 / math.sqrt(q)
        return self._chain(math.acos(a), -r, -a * r * r * r)

    def arctan(self):
        a = self.re
        q = 1.0 / (1.0 + a * a)
        return self._chain(math.atan(a), q, -2.0 * a * q * q)

    def sinh(self):
        s, c = math.sinh(self.re), math.cosh(self.re)
        return self._chain(s, c, s)

    def cosh(self):
        s, c = math.sinh(self.re), math.cosh(self.re)
        return self._chain(c, s, c)

    def tanh(self):
        t = math.tanh(self.re)
        q = 1.0 - t * t
        return self._chain(t, q, -2.0 * t * q)

    def __abs__(self):
        return -self if self.re < 0.0 else self

    absolute = __abs__

    def __pos__(self):
        return self

    def __pow__(self, p):
        if isinstance(p, _REAL):
            if p == 2:
                return self * self
            if p == 1:
                return self
            a = self.re
            return self._chain(
                _safe_pow(a, p),
                p * _safe_pow(a, p - 1),
                p * (p - 1) * _safe_pow(a, p - 2),
            )
        if type(p) is type(self):
            return (p * self.log()).exp()
        return NotImplemented

    def __rpow__(self, base):
        if isinstance(base, _REAL):
            if base <= 0:
                return self._chain(math.nan, math.nan, math.nan)
            return (self * math.log(base)).exp()
        return NotImplemented

    # Comparisons look at the real part only, so branching code still runs.
    def __lt__(self, o):
        return self.re < _real_part(o)

    def __le__(self, o):
        return self.re <= _real_part(o)

    def __gt__(self, o):
        return self.re > _real_part(o)

    def __ge__(self, o):
        return self.re >= _real_part(o)

    def __eq__(self, o):
        return self.re == _real_part(o)

    def __ne__(self, o):
        return self.re != _real_part(o)

    __hash__ = None


class Dual(_JetMath):
    """First-order dual number ``re + eps * e`` with ``e**2 = 0``."""

    __slots__ = ("re", "eps")

    def __init__(self, re, eps=0.0):
        self.re = re
        self.eps = eps

    def _chain(self, f0, f1, f2):
        return Dual(f0, f1 * self.eps)

    def __add__(self, o):
        if type(o) is Dual:
            return Dual(self.re + o.re, self.eps + o.eps)
        if isinstance(o, _REAL):
            return Dual(self.re + o, self.eps)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, o):
        if type(o) is Dual:
            return Dual(self.re - o.re, self.eps - o.eps)
        if isinstance(o, _REAL):
            return Dual(self.re - o, self.eps)
        return NotImplemented

    def __rsub__(self, o):
        if isinstance(o, _REAL):
            return Dual(o - self.re, -self.eps)
        return NotImplemented

    def __mul__(self, o):
        if type(o) is Dual:
            return Dual(self.re * o.re, self.re * o.eps + self.eps * o.re)
        if isinstance(o, _REAL):
            return Dual(self.re * o, self.eps * o)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, o):
        if type(o) is Dual:
            if o.re == 0.0:
                return Dual(math.nan, math.nan)
            q = self.re / o.re
            return Dual(q, (self.eps - q * o.eps) / o.re)
        if isinstance(o, _REAL):
            if o == 0:
                return Dual(math.nan, math.nan)
            return Dual(self.re / o, self.eps / o)
        return NotImplemented

    def __rtruediv__(self, o):
        if isinstance(o, _REAL):
            if self.re == 0.0:
                return Dual(math.nan, math.nan)
            q = o / self.re
            return Dual(q, -q * self.eps / self.re)
        return NotImplemented

    def __neg__(self):
        return Dual(-self.re, -self.eps)

    def __repr__(self):
        return f"Dual({self.re!r}, {self.eps!r})"


class HyperDual(_JetMath):
    """Second-order jet ``re + e1*E1 + e2*E2 + e12*E1E2`` with ``E1**2 = E2**2 = 0``."""

    __slots__ = ("re", "e1", "e2", "e12")

    def __init__(self, re, e1=0.0, e2=0.0, e12=0.0):
        self.re = re
        self.e1 = e1
        self.e2 = e2
        self.e12 = e12

    def _chain(self, f0, f1, f2):
        return HyperDual(f0, f1 * self.e1, f1 * self.e2, f1 * self.e12 + f2 * self.e1 * self.e2)

    def __add__(self, o):
        if type(o) is HyperDual:
            return HyperDual(self.re + o.re, self.e1 + o.e1, self.e2 + o.e2, self.e12 + o.e12)
        if isinstance(o, _REAL):
            return HyperDual(self.re + o, self.e1, self.e2, self.e12)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, o):
        if type(o) is HyperDual:
            return HyperDual(self.re - o.re, self.e1 - o.e1, self.e2 - o.e2, self.e12 - o.e12)
        if isinstance(o, _REAL):
            return HyperDual(self.re - o, self.e1, self.e2, self.e12)
        return NotImplemented

    def __rsub__(self, o):
        if isinstance(o, _REAL):
            return HyperDual(o - self.re, -self.e1, -self.e2, -self.e12)
        return NotImplemented

    def __mul__(self, o):
        if type(o) is HyperDual:
            a, b = self, o
            return HyperDual(
                a.re * b.re,
                a.re * b.e1 + a.e1 * b.re,
                a.re * b.e2 + a.e2 * b.re,
                a.re * b.e12 + a.e1 * b.e2 + a.e2 * b.e1 + a.e12 * b.re,
            )
        if isinstance(o, _REAL):
            return HyperDual(self.re * o, self.e1 * o, self.e2 * o, self.e12 * o)
        return NotImplemented

    __rmul__ = __mul__

    def _reciprocal(self):
        a = self.re
        if a == 0.0:
            return HyperDual(math.nan, math.nan, math.nan, math.nan)
        r = 1.0 / a
        return self._chain(r, -r * r, 2.0 * r * r * r)

    def __truediv__(self, o):
        if type(o) is HyperDual:
            return self * o._reciprocal()
        if isinstance(o, _REAL):
            if o == 0:
                return HyperDual(math.nan, math.nan, math.nan, math.nan)
            return HyperDual(self.re / o, self.e1 / o, self.e2 / o, self.e12 / o)
        return NotImplemented

    def __rtruediv__(self, o):
        if isinstance(o, _REAL):
            return self._reciprocal() * o
        return NotImplemented

    def __neg__(self):
        return HyperDual(-self.re, -self.e1, -self.e2, -self.e12)

    def __repr__(self):
        return f"HyperDual({self.re!r}, {self.e1!r}, {self.e2!r}, {self.e12!r})"


def _real_part(v):
    if isinstance(v, (Dual, HyperDual)):
        return v.re
    return v


def is_jet(v):
    return isinstance(v, (Dual, HyperDual))


def _unwrap(out):
    if isinstance(out, np.ndarray):
        if out.size != 1:
            raise ArityError(f"scalar field returned an array of shape {out.shape}")
        out = out.reshape(()).item()
    return out


def _to_vector(x, length, what="argument"):
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != length:
        raise ArityError(f"{what} must be a vector of length {length}, got shape {arr.shape}")
    return arr


def _object_copy(x, jet=Dual):
    # passive entries are zero-tangent jets so whole-array ufuncs dispatch uniformly
    z = np.empty(len(x), dtype=object)
    z[:] = [jet(float(v)) for v in x]
    return z


def _jet_type(z):
    kind = None
    for v in z:
        t = type(v)
        if t is Dual or t is HyperDual:
            if kind is not None and kind is not t:
                raise TypeError("cannot mix Dual and HyperDual entries in one evaluation")
            kind = t
    return kind


def _jet_components(z, kind):
    """Split a jet vector into float component arrays."""
    m = len(z)
    if kind is Dual:
        a, b = np.zeros(m), np.zeros(m)
        for i, v in enumerate(z):
            if type(v) is Dual:
                a[i], b[i] = v.re, v.eps
            else:
                a[i] = v
        return a, b
    a, b, c, d = np.zeros(m), np.zeros(m), np.zeros(m), np.zeros(m)
    for i, v in enumerate(z):
        if type(v) is HyperDual:
            a[i], b[i], c[i], d[i] = v.re, v.e1, v.e2, v.e12
        else:
            a[i] = v
    return a, b, c, d


def _check_finite(value, what):
    if type(value) is float:
        ok = math.isfinite(value)
    else:
        ok = bool(np.isfinite(value).all())
    if not ok:
        raise NumericDomainError(f"{what} is not finite: {value!r}")
    return value


class ScalarField:
    """A smooth real function on an open chart domain.

    Parameters
    ----------
    func : callable
        ``func(z) -> scalar`` for a numpy vector ``z`` of length ``arity``.
    dim : int
        Number of spatial arguments.
    time_dependent : bool
        If true, ``func`` receives one extra trailing coordinate, the time.
    chart : {"tangent", "phase", None}
        Chart the field lives on; used to reject mismatched trajectories.
    grad, hess : callable, optional
        Float-valued derivative rules ``grad(z) -> (arity,)`` and
        ``hess(z) -> (arity, arity)``.  When given they replace automatic
        differentiation, and evaluating the field on jets applies the chain
        rule to them instead of calling ``func`` on jets.  ``func`` then only
        ever sees floats, so it may run Newton iterations and the like.
    """

    def __init__(self, func, dim, *, time_dependent=False, chart=None, name=None, grad=None, hess=None):
        if int(dim) != dim or dim < 1:
            raise ArityError(f"dim must be a positive integer, got {dim!r}")
        self.func = func
        self.dim = int(dim)
        self.time_dependent = bool(time_dependent)
        self.chart = chart
        self.name = name or getattr(func, "__name__", "field")
        self._grad = grad
        self._hess = hess

    @property
    def arity(self):
        return self.dim + int(self.time_dependent)

    @property
    def has_rules(self):
        return self._grad is not None

    def __repr__(self):
        return f"ScalarField({self.name!r}, dim={self.dim}, time_dependent={self.time_dependent})"

    def __call__(self, z):
        if isinstance(z, np.ndarray) and z.dtype == object or (
            isinstance(z, (list, tuple)) and any(is_jet(v) for v in z)
        ):
            z = np.asarray(z, dtype=object)
            if len(z) != self.arity:
                raise ArityError(f"{self.name}: expected {self.arity} arguments, got {len(z)}")
            return self.jet(z)
        z = _to_vector(z, self.arity, self.name + " argument")
        try:
            value = float(_unwrap(self.func(z)))
        except (OverflowError, ZeroDivisionError) as exc:
            raise NumericDomainError(f"{self.name} value: {exc}") from None
        return float(_check_finite(value, f"{self.name} value"))

    def jet(self, z):
        """Evaluate on an object vector that may hold jets."""
        if self._grad is None:
            return _unwrap(self.func(z))
        kind = _jet_type(z)
        if kind is None:
            return float(_unwrap(self.func(np.asarray(z, dtype=float))))
        if kind is Dual:
            a, b = _jet_components(z, kind)
            return Dual(float(self.func(a)), float(self._grad(a) @ b))
        if self._hess is None:
            raise NotImplementedError(f"{self.name}: second derivatives are not available")
        a, b, c, d = _jet_components(z, kind)
        g = self._grad(a)
        return HyperDual(float(self.func(a)), float(g @ b), float(g @ c), float(b @ self._hess(a) @ c + g @ d))

    def gradient(self, z):
        return gradient(self, z)

    def hessian(self, z):
        return hessian(self, z)


class VectorMap:
    """A smooth map ``R^dim_in -> R^dim_out``; ``jac`` optionally supplies a float Jacobian rule."""

    def __init__(self, func, dim_in, dim_out, *, name=None, jac=None):
        self.func = func
        self.dim_in = int(dim_in)
        self.dim_out = int(dim_out)
        self.name = name or getattr(func, "__name__", "map")
        self._jac = jac

    def __repr__(self):
        return f"VectorMap({self.name!r}, {self.dim_in} -> {self.dim_out})"

    def __call__(self, x):
        if isinstance(x, np.ndarray) and x.dtype == object or (
            isinstance(x, (list, tuple)) and any(is_jet(v) for v in x)
        ):
            x = np.asarray(x, dtype=object)
            if len(x) != self.dim_in:
                raise ArityError(f"{self.name}: expected {self.dim_in} arguments, got {len(x)}")
            return self.jet(x)
        x = _to_vector(x, self.dim_in, self.name + " argument")
        out = np.asarray(self.func(x), dtype=float).reshape(-1)
        if out.shape[0] != self.dim_out:
            raise ArityError(f"{self.name}: expected {self.dim_out} outputs, got {out.shape[0]}")
        return _check_finite(out, f"{self.name} value")

    def jet(self, x):
        if self._jac is None:
            out = np.empty(self.dim_out, dtype=object)
            out[:] = list(np.asarray(self.func(x), dtype=object).reshape(-1))
            return out
        kind = _jet_type(x)
        if kind is None:
            return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)
        if kind is HyperDual:
            raise NotImplementedError(f"{self.name}: second derivatives are not available")
        a, b = _jet_components(x, kind)
        val = np.asarray(self.func(a), dtype=float).reshape(-1)
        tan = self._jac(a) @ b
        out = np.empty(self.dim_out, dtype=object)
        out[:] = [Dual(float(v), float(t)) for v, t in zip(val, tan)]
        return out

    def jacobian(self, x):
        return jacobian(self, x)


def as_field(f, dim):
    if isinstance(f, ScalarField):
        return f
    return ScalarField(f, dim)


def as_map(F, dim_in, dim_out=None):
    if isinstance(F, VectorMap):
        return F
    return VectorMap(F, dim_in, dim_in if dim_out is None else dim_out)


def _prepare(f, x):
    if not isinstance(f, ScalarField):
        f = ScalarField(f, len(np.atleast_1d(x)))
    return f, _to_vector(x, f.arity, f.name + " argument")


def _dual_eps(out):
    if type(out) is Dual:
        return out.re, out.eps
    return float(out), 0.0


def _hyper_parts(out):
    if type(out) is HyperDual:
        return out.re, out.e1, out.e2, out.e12
    return float(out), 0.0, 0.0, 0.0


def directional(f, x, u):
    """Return ``(f(x), D_u f(x))`` from one dual pass seeded along ``u``."""
    f, x = _prepare(f, x)
    u = _to_vector(u, f.arity, "direction")
    if f.has_rules:
        return f(x), float(_check_finite(f._grad(x), "gradient") @ u)
    z = np.empty(len(x), dtype=object)
    z[:] = [Dual(float(a), float(b)) for a, b in zip(x, u)]
    val, d = _dual_eps(f.jet(z))
    _check_finite((val, d), f"{f.name} derivative")
    return val, d


def second_directional(f, x, u, w):
    """Return ``(f, D_u f, D_w f, D_u D_w f)`` at ``x`` from one hyper-dual pass."""
    f, x = _prepare(f, x)
    u = _to_vector(u, f.arity, "direction")
    w = _to_vector(w, f.arity, "direction")
    if f.has_rules:
        g = _check_finite(f._grad(x), "gradient")
        if f._hess is None:
            raise NotImplementedError(f"{f.name}: second derivatives are not available")
        return f(x), float(g @ u), float(g @ w), float(u @ f._hess(x) @ w)
    z = np.empty(len(x), dtype=object)
    z[:] = [HyperDual(float(a), float(b), float(c)) for a, b, c in zip(x, u, w)]
    parts = _hyper_parts(f.jet(z))
    _check_finite(parts, f"{f.name} derivative")
    return parts


def partial_gradient(f, x, idx):
    """Gradient restricted to coordinates ``idx`` (one dual pass each)."""
    f, x = _prepare(f, x)
    idx = list(idx)
    if f.has_rules:
        return _check_finite(np.asarray(f._grad(x), dtype=float), "gradient")[idx]
    base = _object_copy(x)
    g = np.empty(len(idx))
    for k, i in enumerate(idx):
        z = base.copy()
        z[i] = Dual(float(x[i]), 1.0)
        g[k] = _dual_eps(f.jet(z))[1]
    return _check_finite(g, f"{f.name} gradient")


def partial_hessian(f, x, rows, cols=None):
    """Block ``[d^2 f / dx_r dx_c]`` of the Hessian for ``r in rows, c in cols``.

    Also returns the gradient components along ``rows`` (free by-products of
    the hyper-dual passes).
    """
    f, x = _prepare(f, x)
    rows = list(rows)
    cols = rows if cols is None else list(cols)
    if f.has_rules:
        if f._hess is None:
            raise NotImplementedError(f"{f.name}: second derivatives are not available")
        H = _check_finite(np.asarray(f._hess(x), dtype=float), "hessian")
        g = _check_finite(np.asarray(f._grad(x), dtype=float), "gradient")
        return H[np.ix_(rows, cols)], g[rows]
    base = _object_copy(x, HyperDual)
    symmetric = rows == cols
    block = np.empty((len(rows), len(cols)))
    grad = np.empty(len(rows))
    for a, i in enumerate(rows):
        for b, j in enumerate(cols):
            if symmetric and b < a:
                block[a, b] = block[b, a]
                continue
            z = base.copy()
            if i == j:
                z[i] = HyperDual(float(x[i]), 1.0, 1.0)
            else:
                z[i] = HyperDual(float(x[i]), 1.0, 0.0)
                z[j] = HyperDual(float(x[j]), 0.0, 1.0)
            _, d1, _, d12 = _hyper_parts(f.jet(z))
            block[a, b] = d12
            grad[a] = d1
    _check_finite(block, f"{f.name} hessian")
    return block, grad


def gradient(f, x):
    """Exact gradient of a scalar field, one dual pass per coordinate.

    Raises
    ------
    ArityError
        If ``len(x)`` differs from the field's arity.
    NumericDomainError
        If the value or a derivative is not finite.
    """
    f, x = _prepare(f, x)
    _check_finite(f(x), f"{f.name} value")
    if f.has_rules:
        return _check_finite(np.asarray(f._grad(x), dtype=float).copy(), f"{f.name} gradient")
    return partial_gradient(f, x, range(len(x)))


def hessian(f, x):
    """Exact, symmetrized Hessian via hyper-dual passes (``d(d+1)/2`` of them)."""
    f, x = _prepare(f, x)
    _check_finite(f(x), f"{f.name} value")
    if f.has_rules:
        if f._hess is None:
            raise NotImplementedError(f"{f.name}: second derivatives are not available")
        H = _check_finite(np.asarray(f._hess(x), dtype=float), f"{f.name} hessian")
    else:
        H, _ = partial_hessian(f, x, range(len(x)))
    return 0.5 * (H + H.T)


def jacobian(F, x):
    """Jacobian ``J[i, j] = dF_i / dx_j``, one dual pass per input coordinate."""
    if not isinstance(F, VectorMap):
        x = np.asarray(x, dtype=float)
        F = VectorMap(F, len(x), len(np.atleast_1d(np.asarray(F(x), dtype=float))))
    x = _to_vector(x, F.dim_in, F.name + " argument")
    F(x)
    if F._jac is not None:
        J = np.asarray(F._jac(x), dtype=float)
        if J.shape != (F.dim_out, F.dim_in):
            raise ArityError(f"{F.name}: jacobian rule returned shape {J.shape}")
        return _check_finite(J, f"{F.name} jacobian")
    base = _object_copy(x)
    J = np.empty((F.dim_out, F.dim_in))
    for j in range(F.dim_in):
        z = base.copy()
        z[j] = Dual(float(x[j]), 1.0)
        out = np.asarray(F.func(z), dtype=object).reshape(-1)
        if out.shape[0] != F.dim_out:
            raise ArityError(f"{F.name}: expected {F.dim_out} outputs, got {out.shape[0]}")
        J[:, j] = [_dual_eps(v)[1] for v in out]
    return _check_finite(J, f"{F.name} jacobian")


def solve(A, b):
    """Solve ``A x = b``; works on object arrays of jets (Gaussian elimination with pivoting)."""
    A = np.asarray(A)
    b = np.asarray(b)
    if A.dtype != object and b.dtype != object:
        return np.linalg.solve(A, b)
    n = A.shape[0]
    M = np.empty((n, n), dtype=object)
    M[:] = A
    r = np.empty(n, dtype=object)
    r[:] = b
    for k in range(n):
        p = max(range(k, n), key=lambda i: abs(_real_part(M[i, k])))
        if _real_part(M[p, k]) == 0.0:
            raise np.linalg.LinAlgError("singular matrix")
        if p != k:
            M[[k, p]] = M[[p, k]]
            r[[k, p]] = r[[p, k]]
        for i in range(k + 1, n):
            factor = M[i, k] / M[k, k]
            M[i, k:] = M[i, k:] - factor * M[k, k:]
            r[i] = r[i] - factor * r[k]
    out = np.empty(n, dtype=object)
    for i in range(n - 1, -1, -1):
        acc = r[i]
        for j in range(i + 1, n):
            acc = acc - M[i, j] * out[j]
        out[i] = acc / M[i, i]
    return out


def cross3(a, b):
    """Cross product of 3-vectors that may hold jets (``np.cross`` rejects object arrays)."""
    out = np.empty(3, dtype=object if (np.asarray(a).dtype == object or np.asarray(b).dtype == object) else float)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out
