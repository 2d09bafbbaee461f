"""Pointwise linear algebra over the Minkowski form eta = diag(-1, 1, ..., 1).

Contents: a cyclic Jacobi eigensolver for small symmetric matrices,
certification of Lorentz matrices in the bounded class L_eps, the
decomposition G = F^T eta F with its anchored (Lipschitz) continuation,
and predicates for Minkowski-orthogonal matrices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EpsilonMismatch,
    InvalidInput,
    NearBranchDegenerate,
    OutOfClass,
    WrongSignature,
)

__all__ = [
    "mink_form",
    "as_symmetric",
    "sym_eigen",
    "op_norm",
    "LorentzMatrixCert",
    "DecompAnchor",
    "AffineMap",
    "MinkIsometry",
    "certify_lorentz",
    "lorentz_decompose",
    "make_anchor",
    "lorentz_decompose_anchored",
    "is_mink_orthogonal",
    "lipschitz_constant",
]

_JACOBI_TOL = 1e-14
_MAX_SWEEPS = 100


def mink_form(dim):
    """Return eta = diag(-1, 1, ..., 1) of side ``dim``."""
    if dim < 1:
        raise InvalidInput("dimension must be positive", dim=dim)
    eta = np.eye(dim)
    eta[0, 0] = -1.0
    return eta


def as_symmetric(S):
    """Mirror the upper triangle of a square matrix onto the lower one."""
    S = np.array(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InvalidInput("expected a square matrix", shape=list(S.shape))
    if not np.all(np.isfinite(S)):
        raise InvalidInput("matrix has non-finite entries")
    iu = np.triu_indices(S.shape[0], 1)
    S[(iu[1], iu[0])] = S[iu]
    return S


def _fix_signs(V):
    # largest-magnitude component positive; ties go to the lowest index
    V = V.copy()
    for k in range(V.shape[1]):
        col = np.abs(V[:, k])
        top = col.max()
        idx = int(np.flatnonzero(col >= top - 1e-12 * max(top, 1.0))[0])
        if V[idx, k] < 0:
            V[:, k] = -V[:, k]
    return V


def sym_eigen(S):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    S : array_like, (d, d)
        Symmetric matrix; only the upper triangle is read.

    Returns
    -------
    eigvals : ndarray, (d,)
        Ascending eigenvalues.
    eigvecs : ndarray, (d, d)
        Orthonormal eigenvectors as columns, each oriented so that its
        largest-magnitude component is positive (lowest index on ties).
    """
    A0 = as_symmetric(S)
    d = A0.shape[0]
    scale = float(np.linalg.norm(A0))
    # plain floats: for the small matrices used here numpy call overhead dominates
    A = A0.tolist()
    V = np.eye(d).tolist()
    if d > 1 and scale > 0.0:
        for _ in range(_MAX_SWEEPS):
            off = math.sqrt(2.0 * sum(A[p][q] ** 2 for p in range(d - 1) for q in range(p + 1, d)))
            if off < _JACOBI_TOL * scale:
                break
            for p in range(d - 1):
                for q in range(p + 1, d):
                    apq = A[p][q]
                    if abs(apq) < 1e-300:
                        A[p][q] = A[q][p] = 0.0
                        continue
                    diff = A[q][q] - A[p][p]
                    if abs(diff) > 1e150 * abs(apq):
                        t = apq / diff
                    else:
                        theta = diff / (2.0 * apq)
                        t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(1.0, theta))
                    c = 1.0 / math.hypot(1.0, t)
                    s = t * c
                    Ap, Aq = A[p], A[q]
                    for k in range(d):
                        x, y = Ap[k], Aq[k]
                        Ap[k] = c * x - s * y
                        Aq[k] = s * x + c * y
                    for row in A:
                        x, y = row[p], row[q]
                        row[p] = c * x - s * y
                        row[q] = s * x + c * y
                    A[p][q] = A[q][p] = 0.0
                    for row in V:
                        x, y = row[p], row[q]
                        row[p] = c * x - s * y
                        row[q] = s * x + c * y
    A = np.array(A)
    V = np.array(V)
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], _fix_signs(V[:, order])


def op_norm(M):
    """Operator 2-norm: largest |eigenvalue| for symmetric input, else sigma_max."""
    M = np.asarray(M, dtype=float)
    if M.shape[0] == M.shape[1] and np.array_equal(M, M.T):
        w, _ = sym_eigen(M)
        return float(np.max(np.abs(w)))
    w, _ = sym_eigen(M.T @ M)
    return math.sqrt(max(float(w[-1]), 0.0))


@dataclass(frozen=True)
class LorentzMatrixCert:
    """A symmetric matrix certified to lie in L_eps, with its spectrum."""

    matrix: np.ndarray
    epsilon: float
    eigvals: np.ndarray
    eigvecs: np.ndarray = field(repr=False)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def norm(self):
        return float(np.max(np.abs(self.eigvals)))


def certify_lorentz(S, epsilon):
    """Check that ``S`` is a Lorentz matrix with |det S| > eps and |S| < 1/eps."""
    if not 0.0 < epsilon <= 1.0:
        raise InvalidInput("epsilon must lie in (0, 1]", epsilon=epsilon)
    S = as_symmetric(S)
    w, V = sym_eigen(S)
    if not (w[0] < 0.0 and (len(w) == 1 or w[1] > 0.0)):
        raise WrongSignature(
            "matrix must have exactly one negative eigenvalue",
            negative=int(np.sum(w < 0)),
            eigvals=w.tolist(),
        )
    det = float(np.prod(w))
    norm = float(np.max(np.abs(w)))
    if abs(det) <= epsilon:
        raise OutOfClass("|det G| > epsilon violated", bound="det", det=det, epsilon=epsilon)
    if norm >= 1.0 / epsilon:
        raise OutOfClass("|G| < 1/epsilon violated", bound="norm", norm=norm, epsilon=epsilon)
    S.setflags(write=False)
    return LorentzMatrixCert(S, float(epsilon), w, V)


@dataclass(frozen=True)
class DecompAnchor:
    """Base point of the anchored decomposition map: G, F = F(G) and G's eigenbasis."""

    base: LorentzMatrixCert
    F: np.ndarray
    lam0: float
    p0: np.ndarray
    P: np.ndarray


def lorentz_decompose(G):
    """Return F = A P^T with A = diag(sqrt(-l0), sqrt(l1), ...), so F^T eta F = G."""
    w, P = G.eigvals, G.eigvecs
    A = np.sqrt(np.abs(w))
    return A[:, None] * P.T


def make_anchor(G):
    return DecompAnchor(G, lorentz_decompose(G), float(G.eigvals[0]), G.eigvecs[:, 0].copy(), G.eigvecs.copy())


def _sqrtm_spd(H):
    w, W = sym_eigen(H)
    if w[0] <= 0.0:
        raise NearBranchDegenerate("rotated block is not positive definite", min_eig=float(w[0]))
    return (W * np.sqrt(w)) @ W.T


def _negative_eigvec(Gt, lam, seed):
    d = Gt.shape[0]
    shift = lam - 1e-10 * max(abs(lam), 1.0)
    M = Gt - shift * np.eye(d)
    x = seed / np.linalg.norm(seed)
    for _ in range(4):
        y = np.linalg.solve(M, x)
        x = y / np.linalg.norm(y)
    return x


def lorentz_decompose_anchored(anchor, Gt):
    """Evaluate the anchored decomposition map at ``Gt``.

    Far from the anchor (|Gt - G| >= 2 eps^d) this is the plain eigen
    decomposition of ``Gt``.  Near it, the negative eigenvector of ``Gt`` is
    oriented against the anchor's, completed by Gram-Schmidt against the
    anchor's positive eigenvectors, and the positive block is rooted in that
    basis; the result moves Lipschitz-continuously with ``Gt``.
    """
    G = anchor.base
    if Gt.epsilon != G.epsilon:
        raise EpsilonMismatch("anchor and target certified at different epsilon",
                              anchor=G.epsilon, target=Gt.epsilon)
    if np.array_equal(Gt.matrix, G.matrix):
        return anchor.F.copy()
    d = G.dim
    delta = op_norm(Gt.matrix - G.matrix)
    if delta >= 2.0 * G.epsilon ** d:
        return lorentz_decompose(Gt)

    pt0 = _negative_eigvec(Gt.matrix, float(Gt.eigvals[0]), anchor.p0)
    if pt0 @ anchor.p0 < 0.0:
        pt0 = -pt0
    V = np.empty((d, d))
    V[:, 0] = pt0
    for k in range(1, d):
        v = anchor.P[:, k].copy()
        for _ in range(2):
            v -= V[:, :k] @ (V[:, :k].T @ v)
        nv = np.linalg.norm(v)
        if nv < 1e-8:
            raise NearBranchDegenerate("Gram-Schmidt vectors are numerically dependent", k=k, norm=nv)
        V[:, k] = v / nv
    B = V.T @ Gt.matrix @ V
    lam0 = B[0, 0]
    if lam0 >= 0.0:
        raise NearBranchDegenerate("rotated negative direction lost its sign", lam0=float(lam0))
    Hroot = _sqrtm_spd(as_symmetric(B[1:, 1:])) if d > 1 else np.zeros((0, 0))
    D = np.zeros((d, d))
    D[0, 0] = math.sqrt(-lam0)
    D[1:, 1:] = Hroot
    return D @ V.T


def lipschitz_constant(epsilon, n):
    """Upper bound C(n) * eps^(-(3n+5)/2) for the anchored map's Lipschitz constant.

    C(n) = sqrt(2) * 3^(n/2) + 1/2, from chaining: eigenvector tilt
    |p0~ - p0| <= |dG| / (sqrt 2 eps^(n+1)); the Gram-Schmidt cascade
    |V~ - P| <= 3^(n/2) |p0~ - p0|; the block bound |H~ - D| <= 2|V~ - P|/eps + |dG|;
    and the square-root map constant 1 / (2 eps^((n+1)/2)).  The far branch
    needs only eps^(-(n+3/2)), which is dominated.
    """
    if not 0.0 < epsilon <= 1.0:
        raise InvalidInput("epsilon must lie in (0, 1]", epsilon=epsilon)
    if n < 1:
        raise InvalidInput("n must be at least 1", n=n)
    c_n = math.sqrt(2.0) * 3.0 ** (n / 2.0) + 0.5
    return c_n * epsilon ** (-(3 * n + 5) / 2.0)


@dataclass(frozen=True)
class AffineMap:
    """y -> v + Q y on R^d."""

    Q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        v = np.array(self.v, dtype=float).reshape(-1)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or v.shape[0] != Q.shape[0]:
            raise InvalidInput("affine map needs square Q and matching v")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "v", v)

    def __call__(self, y):
        return np.asarray(y) @ self.Q.T + self.v

    def push(self, w):
        """Push-forward of vectors (no translation)."""
        return np.asarray(w) @ self.Q.T

    def compose(self, other):
        """self o other."""
        return type(self)._build(self.Q @ other.Q, self.Q @ other.v + self.v)

    def inverse(self):
        Qi = np.linalg.inv(self.Q)
        return type(self)._build(Qi, -Qi @ self.v)

    @classmethod
    def _build(cls, Q, v):
        return cls(Q, v)

    def to_dict(self):
        return {"Q": self.Q.tolist(), "v": self.v.tolist()}


@dataclass(frozen=True)
class MinkIsometry(AffineMap):
    """Isometry y -> v + Q y of Minkowski space, Q^T eta Q = eta."""

    proper: bool | None = None

    def __post_init__(self):
        super().__post_init__()
        ok, proper = is_mink_orthogonal(self.Q, 1e-10)
        if not ok:
            raise InvalidInput("Q is not Minkowski-orthogonal")
        if self.proper is None:
            object.__setattr__(self, "proper", proper)
        elif bool(self.proper) != proper:
            raise InvalidInput("proper flag disagrees with det Q")

    @classmethod
    def _build(cls, Q, v):
        return cls(Q, v)

    def to_dict(self):
        return {**super().to_dict(), "proper": bool(self.proper)}


def is_mink_orthogonal(Q, tol=1e-10):
    """Return (Q^T eta Q == eta within tol, additionally det Q == 1 within tol)."""
    Q = np.asarray(Q, dtype=float)
    eta = mink_form(Q.shape[0])
    orthogonal = bool(np.max(np.abs(Q.T @ eta @ Q - eta)) <= tol)
    proper = orthogonal and abs(np.linalg.det(Q) - 1.0) <= tol
    return orthogonal, bool(proper)
