"""Linear symplectic algebra: standard form of a skew form, complements, subspace types.

Rank decisions use singular values against ``RANK_RTOL * sigma_max``.
"""

import enum

import numpy as np
import scipy.linalg

from .errors import InputError, RankError

RANK_RTOL = 1e-10
ISOTROPIC_TOL = 1e-10


class SkewForm:
    """Antisymmetric bilinear form ``(u, w) -> u^T M w`` on ``R^dim``."""

    def __init__(self, mat, tol=1e-12):
        M = np.array(mat, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise InputError(f"skew form needs a square matrix, got shape {M.shape}")
        scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
        if M.size and np.max(np.abs(M + M.T)) > tol * scale:
            raise InputError("matrix is not antisymmetric")
        self.mat = 0.5 * (M - M.T)
        self.mat.flags.writeable = False

    @property
    def dim(self):
        return self.mat.shape[0]

    def __call__(self, u, w):
        return float(np.asarray(u, dtype=float) @ self.mat @ np.asarray(w, dtype=float))

    def rank(self):
        return _rank(self.mat)

    def is_nondegenerate(self):
        return self.rank() == self.dim

    @classmethod
    def standard(cls, n):
        """``Omega_0`` on ``R^{2n}`` in ``(e, f)`` ordering."""
        I = np.eye(n)
        Z = np.zeros((n, n))
        return cls(np.block([[Z, I], [-I, Z]]))

    def __repr__(self):
        return f"SkewForm(dim={self.dim}, rank={self.rank()})"


def _rank(M):
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


def block_form(k, n):
    """``[[0, 0, 0], [0, 0, I_n], [0, -I_n, 0]]`` with a ``k``-dimensional kernel block."""
    d = k + 2 * n
    B = np.zeros((d, d))
    B[k:k + n, k + n:] = np.eye(n)
    B[k + n:, k:k + n] = -np.eye(n)
    return B


class SymplecticBasis:
    """Columns ``u`` (kernel), ``e`` and ``f`` with ``Omega(e_i, f_j) = delta_ij``."""

    def __init__(self, u, e, f):
        self.u = np.asarray(u, dtype=float)
        self.e = np.asarray(e, dtype=float)
        self.f = np.asarray(f, dtype=float)

    @property
    def k(self):
        return self.u.shape[1]

    @property
    def n(self):
        return self.e.shape[1]

    @property
    def matrix(self):
        return np.hstack([self.u, self.e, self.f])

    def residual(self, omega):
        """``max |B^T Omega B - block_form|``, the congruence defect."""
        B = self.matrix
        return float(np.max(np.abs(B.T @ omega.mat @ B - block_form(self.k, self.n)), initial=0.0))


def _orthonormal(cols, dim):
    if cols.shape[1] == 0:
        return np.zeros((dim, 0))
    q, _ = np.linalg.qr(cols)
    return q


def _kernel(M):
    """Orthonormal basis of the null space of ``M`` (relative singular-value threshold)."""
    d = M.shape[1]
    if M.size == 0:
        return np.eye(d)
    _, s, vt = np.linalg.svd(M)
    smax = s[0] if s.size else 0.0
    r = int(np.sum(s > RANK_RTOL * smax)) if smax > 0 else 0
    return vt[r:].T.copy()


def standard_form(omega):
    """Basis in which ``omega`` takes the block form, built inductively.

    The kernel is split off first.  On the complement, each round takes the
    pair of working vectors with the largest ``|Omega(w_a, w_b)|``, calls them
    ``e`` and ``f`` (``f`` scaled so ``Omega(e, f) = 1``) and projects the
    remaining vectors onto the Omega-complement of ``span{e, f}``.
    """
    if not isinstance(omega, SkewForm):
        omega = SkewForm(omega)
    M = omega.mat
    d = omega.dim
    U = _kernel(M)
    if U.shape[1] == d:
        return SymplecticBasis(U, np.zeros((d, 0)), np.zeros((d, 0)))
    # orthonormal complement of the kernel
    W = _kernel(U.T) if U.shape[1] else np.eye(d)
    es, fs = [], []
    while W.shape[1] >= 2:
        P = W.T @ M @ W
        a, b = np.unravel_index(np.argmax(np.abs(P)), P.shape)
        if abs(P[a, b]) <= RANK_RTOL * max(1.0, np.max(np.abs(M))):
            break
        e = W[:, a]
        f = W[:, b] / P[a, b]
        es.append(e)
        fs.append(f)
        rest = np.delete(W, [a, b], axis=1)
        # w -> w - Omega(w, f) e + Omega(w, e) f kills both pairings
        we = rest.T @ M @ e
        wf = rest.T @ M @ f
        rest = rest - np.outer(e, wf) + np.outer(f, we)
        W = _orthonormal(rest, d)
    return SymplecticBasis(U, np.column_stack(es), np.column_stack(fs))


def _as_rows(Y, d):
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.size == 0:
        return np.zeros((0, d))
    if Y.shape[1] != d:
        raise InputError(f"subspace vectors must have length {d}, got {Y.shape[1]}")
    if _rank(Y) != Y.shape[0]:
        raise InputError("subspace vectors are linearly dependent")
    return Y


def symplectic_complement(omega, Y):
    """Rows spanning ``{v : Omega(v, y) = 0 for every y in Y}``; ``Y`` is given by rows.

    Raises
    ------
    RankError
        ``omega`` is degenerate.
    InputError
        The rows of ``Y`` are dependent or have the wrong length.
    """
    if not isinstance(omega, SkewForm):
        omega = SkewForm(omega)
    if not omega.is_nondegenerate():
        raise RankError("symplectic complement needs a nondegenerate form")
    d = omega.dim
    Y = _as_rows(Y, d)
    if Y.shape[0] == 0:
        return np.eye(d)
    # Omega(v, y) = v^T M y, so v lies in the null space of (M Y^T)^T
    C = (omega.mat @ Y.T).T
    return scipy.linalg.null_space(C, rcond=RANK_RTOL).T


class SubspaceType(str, enum.Enum):
    ISOTROPIC = "isotropic"
    LAGRANGIAN = "lagrangian"
    SYMPLECTIC = "symplectic"
    GENERIC = "generic"


def restriction(omega, Y):
    """Gram matrix ``[Omega(y_a, y_b)]`` of an orthonormalized basis of ``span(Y)``."""
    if not isinstance(omega, SkewForm):
        omega = SkewForm(omega)
    Y = _as_rows(Y, omega.dim)
    Q = _orthonormal(Y.T, omega.dim)
    return Q.T @ omega.mat @ Q


def classify_subspace(omega, Y):
    """Type of ``span(Y)`` under ``omega``.

    Lagrangian subspaces are isotropic ones of half dimension.  A subspace
    whose restricted form is neither zero nor nondegenerate is generic.
    """
    if not isinstance(omega, SkewForm):
        omega = SkewForm(omega)
    R = restriction(omega, Y)
    k = R.shape[0]
    if k == 0 or np.max(np.abs(R)) <= ISOTROPIC_TOL:
        if 2 * k == omega.dim:
            return SubspaceType.LAGRANGIAN
        return SubspaceType.ISOTROPIC
    if _rank(R) == k:
        return SubspaceType.SYMPLECTIC
    return SubspaceType.GENERIC
