"""Hypersurfaces of Minkowski space from rigged operators or fundamental forms.

Frames here are (n+1) x (n+1) with columns d_1 f, ..., d_n f, l' where l'
is the rigging.  The frame equations read

    d_i d_h f = Gamma^k_{ih} d_k f - K_{ih} l'
    d_i l'    = L^k_i d_k f - M_i l'

i.e. dF/dx^i = F A_i with A_i = [[Gamma^k_{ih}, L^k_i], [-K_{ih}, -M_i]].

Fundamental forms (g, K, lambda) are specialised with K_{ih} = <d_i l', d_h f>
for the unit normal l' (<l', l'> = lambda).  Then <d_i d_h f, l'> = -K_{ih},
so the rigged second form is lambda * K and L = g^{-1} K.  For lambda = -1
this sign is what makes the unit hyperboloid (K = g) satisfy Gauss.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidInput,
    MixedSignature,
    NotLorentzBlock,
    OutOfClass,
    ShapeMismatch,
    SingularFstar,
    WrongSignature,
)
from .grid import TensorField, _d1, christoffel, gradient, inverse_metric, residual_report, riemann_from_christoffel
from .lorentz import certify_lorentz, lorentz_decompose, mink_form
from .manifold import check_frame
from .pfaff import PfaffCoeffs, pfaff_integrate, poincare_integrate

__all__ = [
    "RiggedOperators",
    "FundamentalForms",
    "RiggedImmersionResult",
    "assemble_rigging_coeffs",
    "split_rigging_coeffs",
    "generalized_gc_fields",
    "generalized_gc_residual",
    "gc_as_block_matrix",
    "immerse_hypersurface_rigged",
    "specialize_from_forms",
    "classical_gc_fields",
    "classical_gc_residual",
    "lambda_block_frame",
    "immerse_hypersurface_forms",
    "fundamental_form_defect",
    "rigged_reconstruction_defect",
    "reconstruct_operators",
]


def _field(chart, x, shape, name, symmetric=()):
    if isinstance(x, TensorField):
        if x.chart != chart:
            raise ShapeMismatch(f"{name} lives on a different chart")
        data = x.data
    else:
        data = x
    t = TensorField(chart, data, symmetric)
    if t.shape != shape:
        raise ShapeMismatch(f"{name} has the wrong component shape", expected=list(shape), got=list(t.shape))
    return t


@dataclass(frozen=True)
class RiggedOperators:
    """Gamma^k_{ij} (layout k, i, j), K_{ij}, L^k_j (row k) and M_j on an n-dimensional chart."""

    chart: object
    Gamma: TensorField
    K: TensorField
    L: TensorField
    M: TensorField

    def __post_init__(self):
        n = self.chart.dim
        object.__setattr__(self, "Gamma", _field(self.chart, self.Gamma, (n, n, n), "Gamma", ((1, 2),)))
        object.__setattr__(self, "K", _field(self.chart, self.K, (n, n), "K", ((0, 1),)))
        object.__setattr__(self, "L", _field(self.chart, self.L, (n, n), "L"))
        object.__setattr__(self, "M", _field(self.chart, self.M, (n,), "M"))

    @property
    def n(self):
        return self.chart.dim

    @classmethod
    def zeros(cls, chart):
        n = chart.dim
        z = np.zeros
        return cls(chart, z(chart.shape + (n, n, n)), z(chart.shape + (n, n)),
                   z(chart.shape + (n, n)), z(chart.shape + (n,)))


@dataclass(frozen=True)
class FundamentalForms:
    """First and second fundamental forms with lambda = <normal, normal>.

    ``lam`` is inferred from the signature of g when omitted: -1 for a
    Riemannian g, +1 for a Lorentzian one.  Anything else is MixedSignature.
    """

    chart: object
    g: TensorField
    K: TensorField
    lam: int = None

    def __post_init__(self):
        n = self.chart.dim
        g = _field(self.chart, self.g, (n, n), "g", ((0, 1),))
        K = _field(self.chart, self.K, (n, n), "K", ((0, 1),))
        w = np.linalg.eigvalsh(g.data)
        if np.any(w == 0.0):
            raise MixedSignature("first fundamental form is degenerate somewhere")
        neg = np.sum(w < 0, axis=-1)
        if np.all(neg == 0):
            lam = -1
        elif np.all(neg == 1):
            lam = 1
        else:
            flat = int(np.argmax((neg != neg.reshape(-1)[0]).reshape(-1) | (neg > 1).reshape(-1)))
            raise MixedSignature("first fundamental form must be Riemannian everywhere or Lorentzian everywhere",
                                 point=list(self.chart.multi_index(flat)))
        if self.lam is not None and int(self.lam) != lam:
            raise MixedSignature("lambda does not match the signature of g", given=int(self.lam), expected=lam)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "lam", lam)


@dataclass(frozen=True)
class RiggedImmersionResult:
    f: TensorField
    rigging: TensorField
    frame: TensorField
    base_point: tuple
    base_frame: np.ndarray = field(repr=False)
    det_frame_min: float = float("nan")

    @property
    def chart(self):
        return self.f.chart

    def summary(self):
        return {
            "base_point": list(self.base_point),
            "base_frame": np.asarray(self.base_frame).tolist(),
            "det_frame_min": self.det_frame_min,
        }


def assemble_rigging_coeffs(ops):
    n = ops.n
    ch = ops.chart
    A = np.zeros(ch.shape + (n, n + 1, n + 1))
    # A[..., i, k, h] = Gamma^k_{ih}
    A[..., :n, :n] = np.moveaxis(ops.Gamma.data, -2, -3)
    A[..., :n, n] = np.swapaxes(ops.L.data, -1, -2)  # A[..., i, k, n] = L^k_i
    A[..., n, :n] = -ops.K.data  # A[..., i, n, h] = -K_{ih}
    A[..., n, n] = -ops.M.data
    return PfaffCoeffs(ch, A)


def split_rigging_coeffs(coeffs):
    """Inverse of assemble_rigging_coeffs (no symmetrisation)."""
    A = coeffs.A
    n = coeffs.chart.dim
    Gamma = np.moveaxis(A[..., :n, :n], -3, -2)
    L = np.swapaxes(A[..., :n, n], -1, -2)
    K = -A[..., n, :n]
    M = -A[..., n, n]
    return Gamma, K, L, M


def _grad(arr, chart):
    # last-but-new axis: out[..., i, comps] = d_i arr
    return np.stack([_d1(arr, a, chart.spacing[a]) for a in range(chart.dim)], axis=chart.dim)


def generalized_gc_fields(ops):
    """The four families of the generalized Gauss-Codazzi equations.

    Covariant derivatives with the (not necessarily metric) connection Gamma:
        nabla_i K_{jh} = d_i K_{jh} - Gamma^m_{ij} K_{mh} - Gamma^m_{ih} K_{jm}
        nabla_i L^k_j  = d_i L^k_j + Gamma^k_{im} L^m_j - Gamma^m_{ij} L^k_m
        nabla_i M_j    = d_i M_j - Gamma^m_{ij} M_m
    Returned arrays (grid axes first):
        gauss[k, h, i, j]  = R^k_{hij} + K_{ih} L^k_j - K_{jh} L^k_i
        codazzi1[h, i, j]  = nabla_i K_{jh} - nabla_j K_{ih} - K_{jh} M_i + K_{ih} M_j
        codazzi2[k, i, j]  = nabla_i L^k_j - nabla_j L^k_i - L^k_i M_j + L^k_j M_i
        codazzi3[i, j]     = nabla_i M_j - nabla_j M_i - K_{jh} L^h_i + K_{ih} L^h_j
    """
    ch = ops.chart
    G, K, L, M = ops.Gamma.data, ops.K.data, ops.L.data, ops.M.data
    R = riemann_from_christoffel(ops.Gamma).data
    # nK[i, j, h] = nabla_i K_{jh}
    nK = (_grad(K, ch) - np.einsum("...mij,...mh->...ijh", G, K)
          - np.einsum("...mih,...jm->...ijh", G, K))
    # nL[i, k, j] = nabla_i L^k_j
    nL = (_grad(L, ch) + np.einsum("...kim,...mj->...ikj", G, L)
          - np.einsum("...mij,...km->...ikj", G, L))
    # nM[i, j] = nabla_i M_j
    nM = _grad(M, ch) - np.einsum("...mij,...m->...ij", G, M)

    KL = np.einsum("...ih,...kj->...khij", K, L)
    gauss = R + KL - np.swapaxes(KL, -1, -2)
    KM = np.einsum("...jh,...i->...hij", K, M)
    codazzi1 = np.einsum("...ijh->...hij", nK) - np.einsum("...jih->...hij", nK) - KM + np.swapaxes(KM, -1, -2)
    LM = np.einsum("...ki,...j->...kij", L, M)
    codazzi2 = np.einsum("...ikj->...kij", nL) - np.einsum("...jki->...kij", nL) - LM + np.swapaxes(LM, -1, -2)
    KLh = np.einsum("...jh,...hi->...ij", K, L)
    codazzi3 = nM - np.swapaxes(nM, -1, -2) - KLh + np.swapaxes(KLh, -1, -2)
    return {"gauss": gauss, "codazzi1": codazzi1, "codazzi2": codazzi2, "codazzi3": codazzi3}


def generalized_gc_residual(ops, p=None):
    return residual_report(generalized_gc_fields(ops), ops.chart, p)


def gc_as_block_matrix(fields, n):
    """Arrange the families like the Pfaff compatibility defect of the A_i.

    Returns {"A[i,j]": (n+1, n+1) field} for i < j with blocks
    [[gauss, codazzi2], [-codazzi1, -codazzi3]].
    """
    out = {}
    g = fields["gauss"]
    grid = g.shape[:-4]
    for i in range(n):
        for j in range(i + 1, n):
            X = np.zeros(grid + (n + 1, n + 1))
            X[..., :n, :n] = g[..., i, j]
            X[..., :n, n] = fields["codazzi2"][..., i, j]
            X[..., n, :n] = -fields["codazzi1"][..., i, j]
            X[..., n, n] = -fields["codazzi3"][..., i, j]
            out[f"A[{i},{j}]"] = X
    return out


def immerse_hypersurface_rigged(ops, x_star=None, F_star=None, sweep=None):
    """Solve for the frame with F(x*) = F_star, then integrate f from its first n columns."""
    ch = ops.chart
    n = ops.n
    x_star = ch.center if x_star is None else tuple(int(i) for i in x_star)
    if F_star is None:
        F_star = np.eye(n + 1)
    F_star = np.asarray(F_star, dtype=float)
    if F_star.shape != (n + 1, n + 1):
        raise SingularFstar("F_star must be (n+1) x (n+1)", shape=list(F_star.shape))
    if not np.all(np.isfinite(F_star)) or np.linalg.cond(F_star) > 1e12:
        raise SingularFstar("F_star is not invertible", cond=float(np.linalg.cond(F_star)))
    frame = pfaff_integrate(assemble_rigging_coeffs(ops), x_star, F_star, sweep)
    det_min = check_frame(frame, x_star)
    f = poincare_integrate(TensorField(ch, frame.data[..., :n]), x_star, np.zeros(n + 1), sweep)
    rigging = TensorField(ch, frame.data[..., n])
    return RiggedImmersionResult(f, rigging, frame, x_star, F_star.copy(), det_min)


def specialize_from_forms(forms):
    """Rigged operators of a nowhere-null hypersurface with unit-normal rigging.

    Gamma = Levi-Civita connection of g, K_rigged = lambda * K, L = g^{-1} K, M = 0.
    """
    ch = forms.chart
    gam = christoffel(forms.g)
    ginv = inverse_metric(forms.g).data
    L = np.einsum("...kh,...hi->...ki", ginv, forms.K.data)
    return RiggedOperators(ch, gam, forms.lam * forms.K.data, L, np.zeros(ch.shape + (ch.dim,)))


def classical_gc_fields(forms):
    """Gauss R^k_{hij} + lambda (K_{ih} K^k_j - K_{jh} K^k_i) and Codazzi nabla_i K_{jh} - nabla_j K_{ih}."""
    ch = forms.chart
    gam = christoffel(forms.g)
    G = gam.data
    K = forms.K.data
    R = riemann_from_christoffel(gam).data
    Ks = np.einsum("...kh,...hj->...kj", inverse_metric(forms.g).data, K)
    KK = np.einsum("...ih,...kj->...khij", K, Ks)
    gauss = R + forms.lam * (KK - np.swapaxes(KK, -1, -2))
    nK = (_grad(K, ch) - np.einsum("...mij,...mh->...ijh", G, K)
          - np.einsum("...mih,...jm->...ijh", G, K))
    codazzi = np.einsum("...ijh->...hij", nK) - np.einsum("...jih->...hij", nK)
    return {"gauss": gauss, "codazzi": codazzi}


def classical_gc_residual(forms, p=None):
    return residual_report(classical_gc_fields(forms), forms.chart, p)


def _orient(E):
    """Make det E > 0: negate E in odd dimension, else reflect the last row."""
    if np.linalg.det(E) > 0:
        return E
    E = E.copy()
    if E.shape[0] % 2 == 1:
        return -E
    E[-1] *= -1.0
    return E


def lambda_block_frame(g_star, lam, epsilon):
    """Initial frame E with E^T eta E = diag(g(x*), lambda) and det E > 0."""
    n = g_star.shape[0]
    B = np.zeros((n + 1, n + 1))
    B[:n, :n] = g_star
    B[n, n] = lam
    try:
        cert = certify_lorentz(B, epsilon)
    except (WrongSignature, OutOfClass) as exc:
        raise NotLorentzBlock(str(exc), **exc.details) from exc
    return cert, _orient(lorentz_decompose(cert))


def immerse_hypersurface_forms(forms, x_star=None, epsilon=0.1, sweep=None):
    ch = forms.chart
    x_star = ch.center if x_star is None else tuple(int(i) for i in x_star)
    if not ch.contains(x_star):
        raise InvalidInput("base point lies outside the chart", point=list(x_star))
    _, E = lambda_block_frame(forms.g.at(x_star), forms.lam, epsilon)
    return immerse_hypersurface_rigged(specialize_from_forms(forms), x_star, E, sweep)


def _jac(f):
    # (..., d, n): column i is d_i f
    return np.moveaxis(gradient(f).data, f.chart.dim, -1)


def fundamental_form_defect(result, forms, p=None):
    """Defects of the reconstructed forms, from recomputed derivatives of f and l'.

    Families: first_form (df^T eta df - g), second_form (df^T eta dl' - K),
    normal_norm (<l', l'> - lambda) and normal_tangent (<l', d_i f>).
    """
    if result.chart != forms.chart:
        raise ShapeMismatch("result and forms live on different charts")
    eta = mink_form(result.f.shape[0])
    df = _jac(result.f)
    dl = _jac(result.rigging)
    ell = result.rigging.data
    first = np.einsum("...ka,kl,...lb->...ab", df, eta, df) - forms.g.data
    second = np.einsum("...ka,kl,...lb->...ab", df, eta, dl) - forms.K.data
    nn = np.einsum("...k,kl,...l->...", ell, eta, ell) - forms.lam
    nt = np.einsum("...k,kl,...la->...a", ell, eta, df)
    return residual_report({"first_form": first, "second_form": second,
                            "normal_norm": nn, "normal_tangent": nt}, forms.chart, p)


def rigged_reconstruction_defect(result, ops, p=None):
    """Frame equations re-evaluated on the outputs (derivatives recomputed from f and l')."""
    ch = ops.chart
    df = _jac(result.f)
    ddf = np.stack([_d1(df, a, ch.spacing[a]) for a in range(ch.dim)], axis=ch.dim)  # [..., i, d, h]
    dl = _jac(result.rigging)  # [..., d, i]
    ell = result.rigging.data
    G, K, L, M = ops.Gamma.data, ops.K.data, ops.L.data, ops.M.data
    tangent = (ddf - np.einsum("...kih,...dk->...idh", G, df)
               + np.einsum("...ih,...d->...idh", K, ell))
    rig = (dl - np.einsum("...ki,...dk->...di", L, df) + np.einsum("...i,...d->...di", M, ell))
    return residual_report({"tangent": tangent, "rigging": rig}, ch, p)


def reconstruct_operators(f, rigging):
    """Recover (Gamma, K, L, M) from an immersion and rigging via A_i = E^{-1} d_i E."""
    ch = f.chart
    E = np.concatenate([_jac(f), rigging.data[..., None]], axis=-1)
    Einv = np.linalg.inv(E)
    dE = _grad(E, ch)  # [..., i, d, d]
    A = np.einsum("...ab,...ibc->...iac", Einv, dE)
    Gamma, K, L, M = split_rigging_coeffs(PfaffCoeffs(ch, A))
    return RiggedOperators(ch, Gamma, K, L, M)
