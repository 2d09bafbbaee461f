"""Isometric immersion of a flat Lorentzian metric into Minkowski space.

The frame F (columns d f / d x^a) solves dF/dx^a = F Gamma_a with
Gamma_a[s, b] = Gamma^s_{ab}; its value at the base point is the Lorentz
decomposition of g there.  The immersion then solves df = F with f = 0 at
the base point.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotLorentzAt, OutOfClass, ShapeMismatch, SingularFrameAt, WrongSignature
from .grid import TensorField, christoffel, gradient, residual_report
from .lorentz import certify_lorentz, lorentz_decompose, mink_form
from .pfaff import PfaffCoeffs, pfaff_integrate, poincare_integrate

__all__ = [
    "ImmersionResult",
    "IsometryResidual",
    "connection_coeffs",
    "screen_lorentz",
    "check_frame",
    "immerse_manifold",
    "isometry_residual",
]


@dataclass(frozen=True)
class ImmersionResult:
    f: TensorField
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


def connection_coeffs(gamma):
    """Pfaff coefficients A_a[s, b] = Gamma^s_{ab} from a (s, a, b) connection field."""
    nd = gamma.chart.dim
    return PfaffCoeffs(gamma.chart, np.moveaxis(gamma.data, nd + 1, nd))


def screen_lorentz(g, epsilon):
    """Batched check that every sample lies in L_eps; raises NotLorentzAt at the worst point.

    Failures are ranked signature first, then the det and norm margins.
    """
    w = np.linalg.eigvalsh(g.data)
    neg = np.sum(w < 0, axis=-1)
    absdet = np.abs(np.prod(w, axis=-1))
    norm = np.max(np.abs(w), axis=-1)
    bad_sig = neg != 1
    if np.any(bad_sig):
        flat = int(np.argmax(bad_sig.reshape(-1)))
        pt = g.chart.multi_index(flat)
        raise NotLorentzAt("metric is not Lorentzian", point=pt, reason="signature",
                           negative=int(neg[pt]))
    margin = np.minimum(absdet - epsilon, 1.0 / epsilon - norm)
    flat = int(np.argmin(margin.reshape(-1)))
    if margin.reshape(-1)[flat] <= 0:
        pt = g.chart.multi_index(flat)
        raise NotLorentzAt("metric leaves the class L_eps", point=pt, reason="bounds",
                           det=float(absdet[pt]), norm=float(norm[pt]), epsilon=epsilon)


def check_frame(frame, base_point, rel_tol=1e-12):
    """Raise SingularFrameAt where det F vanishes or changes sign relative to the base point.

    Returns the minimum |det F| over the grid.
    """
    dets = np.linalg.det(frame.data)
    d0 = dets[tuple(base_point)]
    s = np.sign(d0) * dets
    flat = int(np.argmin(s.reshape(-1)))
    worst = float(s.reshape(-1)[flat])
    if d0 == 0.0 or worst <= rel_tol * abs(d0):
        raise SingularFrameAt("frame determinant vanishes or changes sign",
                              point=frame.chart.multi_index(flat), det=float(dets.reshape(-1)[flat]))
    return float(np.min(np.abs(dets)))


def immerse_manifold(g, x_star=None, epsilon=0.1, sweep=None):
    """Reconstruct f and its frame from a flat metric field ``g``."""
    ch = g.chart
    d = ch.dim
    if g.shape != (d, d):
        raise ShapeMismatch("metric must be d x d with d the chart dimension", shape=list(g.shape))
    x_star = ch.center if x_star is None else tuple(int(i) for i in x_star)
    if not ch.contains(x_star):
        raise NotLorentzAt("base point lies outside the chart", point=x_star)
    screen_lorentz(g, epsilon)
    try:
        cert = certify_lorentz(g.at(x_star), epsilon)
    except (WrongSignature, OutOfClass) as exc:
        raise NotLorentzAt(str(exc), point=x_star, **exc.details) from exc
    F_star = lorentz_decompose(cert)
    coeffs = connection_coeffs(christoffel(g))
    frame = pfaff_integrate(coeffs, x_star, F_star, sweep)
    det_min = check_frame(frame, x_star)
    f = poincare_integrate(frame, x_star, np.zeros(d), sweep)
    return ImmersionResult(f, frame, x_star, F_star, det_min)


@dataclass
class IsometryResidual:
    recomputed: object
    stored_frame: object

    @property
    def max_abs(self):
        return self.recomputed.max_abs

    def to_dict(self):
        return {"recomputed": self.recomputed.to_dict(), "stored_frame": self.stored_frame.to_dict()}


def _pullback_defect(df, g):
    eta = mink_form(df.shape[-2])
    return np.einsum("...ka,kl,...lb->...ab", df, eta, df) - g


def isometry_residual(result, g, p=None):
    """(df)^T eta (df) - g with df recomputed from f, plus the same with the stored frame."""
    if result.f.chart != g.chart:
        raise ShapeMismatch("result and metric live on different charts")
    df = np.moveaxis(gradient(result.f).data, g.chart.dim, -1)
    rec = residual_report({"pullback": _pullback_defect(df, g.data)}, g.chart, p)
    sto = residual_report({"pullback": _pullback_defect(result.frame.data, g.data)}, g.chart, p)
    return IsometryResidual(rec, sto)
