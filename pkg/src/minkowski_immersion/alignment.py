"""Base-point alignment of two reconstructions and discrete Sobolev gaps.

Every map is built at the base point from frames, never by least squares.
For flat metrics each result r gets pi_r = (Q, v) with Q = F(g(x*)) frame(x*)^{-1}
and v = -Q f(x*); the second result uses the anchored decomposition of its
metric so that F~ stays Lipschitz close to F.  The aligned gap compares
pi~ o f~ with pi o f; the reported ``map`` is the composition
pi~^{-1} o pi, which carries the first reconstruction onto the second.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChartMismatch, InvalidInput, NotProper, ShapeMismatch
from .grid import TensorField, default_p, sobolev_norm
from .hypersurface import RiggedImmersionResult, lambda_block_frame, _orient
from .lorentz import (
    AffineMap,
    MinkIsometry,
    certify_lorentz,
    lorentz_decompose,
    lorentz_decompose_anchored,
    make_anchor,
)
from .manifold import ImmersionResult

__all__ = [
    "AlignmentResult",
    "sobolev_gap",
    "transform_result",
    "align_manifold",
    "align_hypersurface",
    "convergence_order",
]


@dataclass
class AlignmentResult:
    map: AffineMap
    aligned_gap_w2p: float
    aligned_gap_max: float
    input_gap: float
    pi: AffineMap = None
    pi_tilde: AffineMap = None

    @property
    def ratio(self):
        return self.aligned_gap_w2p / self.input_gap if self.input_gap > 0 else float("nan")

    def to_dict(self):
        out = {
            "map": self.map.to_dict(),
            "aligned_gap_w2p": self.aligned_gap_w2p,
            "aligned_gap_max": self.aligned_gap_max,
            "input_gap": self.input_gap,
        }
        if self.pi is not None:
            out["pi"] = self.pi.to_dict()
            out["pi_tilde"] = self.pi_tilde.to_dict()
        return out


def sobolev_gap(f1, f2, order, p=None):
    """Discrete W^{order,p} norm of f1 - f2 (trapezoid weights, all FD derivatives up to ``order``)."""
    if f1.chart != f2.chart:
        raise ShapeMismatch("fields live on different charts")
    if f1.shape != f2.shape:
        raise ShapeMismatch("fields have different component shapes",
                            left=list(f1.shape), right=list(f2.shape))
    p = default_p(f1.chart) if p is None else float(p)
    return sobolev_norm(TensorField(f1.chart, f1.data - f2.data), order, p)


def convergence_order(spacings, errors):
    """Observed order of a refinement study.

    Returns ``(slope, pairwise)``: the least-squares slope of log(error)
    against log(h) and the slopes between consecutive refinements.
    """
    h = np.asarray(spacings, dtype=float)
    e = np.asarray(errors, dtype=float)
    if h.shape != e.shape or h.size < 2:
        raise InvalidInput("need matching spacing and error sequences of length >= 2")
    if np.any(e <= 0) or np.any(h <= 0):
        return float("nan"), [float("nan")] * (h.size - 1)
    lh, le = np.log(h), np.log(e)
    slope = float(np.polyfit(lh, le, 1)[0])
    pairwise = [float((le[i] - le[i + 1]) / (lh[i] - lh[i + 1])) for i in range(h.size - 1)]
    return slope, pairwise


def _as_isometry(Q, v):
    try:
        return MinkIsometry(Q, v)
    except InvalidInput:
        return AffineMap(Q, v)


def transform_result(result, sigma):
    """Image of a reconstruction under y -> Q y + v (frames and rigging are pushed forward)."""
    ch = result.chart
    f = TensorField(ch, sigma(result.f.data))
    frame = TensorField(ch, np.einsum("ab,...bc->...ac", sigma.Q, result.frame.data))
    base = sigma.Q @ np.asarray(result.base_frame)
    if isinstance(result, RiggedImmersionResult):
        rig = TensorField(ch, sigma.push(result.rigging.data))
        return RiggedImmersionResult(f, rig, frame, result.base_point, base, result.det_frame_min)
    return ImmersionResult(f, frame, result.base_point, base, result.det_frame_min)


def _check_pair(r1, r2):
    if r1.chart != r2.chart:
        raise ChartMismatch("results live on different charts")
    if tuple(r1.base_point) != tuple(r2.base_point):
        raise ChartMismatch("results use different base points",
                            left=list(r1.base_point), right=list(r2.base_point))


def _pin(E, result):
    """Map sending frame(x*) to E and f(x*) to the origin."""
    x = tuple(result.base_point)
    Q = E @ np.linalg.inv(result.frame.at(x))
    return Q, -Q @ result.f.at(x)


def align_manifold(r1, r2, g1, g2, p=None, epsilon=0.1):
    _check_pair(r1, r2)
    if g1.chart != r1.chart or g2.chart != r1.chart:
        raise ChartMismatch("metrics and results live on different charts")
    p = default_p(r1.chart) if p is None else float(p)
    x = tuple(r1.base_point)
    c1 = certify_lorentz(g1.at(x), epsilon)
    c2 = certify_lorentz(g2.at(x), epsilon)
    anchor = make_anchor(c1)
    F1 = lorentz_decompose(c1)
    F2 = lorentz_decompose_anchored(anchor, c2)
    pi = _as_isometry(*_pin(F1, r1))
    pit = _as_isometry(*_pin(F2, r2))
    a = TensorField(r1.chart, pi(r1.f.data))
    b = TensorField(r1.chart, pit(r2.f.data))
    gap = sobolev_gap(b, a, 2, p)
    gmax = float(np.max(np.abs(b.data - a.data)))
    inp = sobolev_gap(g1, g2, 1, p)
    tau = _as_isometry(*_compose_inv(pit, pi))
    return AlignmentResult(tau, gap, gmax, inp, pi, pit)


def _compose_inv(outer, inner):
    """(outer^{-1} o inner) as (Q, v)."""
    Qi = np.linalg.inv(outer.Q)
    return Qi @ inner.Q, Qi @ (inner.v - outer.v)


def _ops_gap(ops1, ops2, p):
    total = 0.0
    for name in ("Gamma", "K", "L", "M"):
        a, b = getattr(ops1, name), getattr(ops2, name)
        total += sobolev_gap(a, b, 0, p)
    return total


def align_hypersurface(r1, r2, ops1=None, ops2=None, p=None, proper_required=False,
                       forms1=None, forms2=None, epsilon=0.1):
    """Align two hypersurface reconstructions.

    Rigged mode: sigma = (F~(x*) F(x*)^{-1}, f~(x*) - Q f(x*)), an affine
    bijection; gap = W^{2,p}(f~ - sigma f) + W^{1,p}(l~ - Q l) and the input
    gap is the L^p distance of the operators plus |F*~ - F*|.

    Forms mode (``proper_required``, needs ``forms1``/``forms2``): both
    results are pinned to the lambda-block frames with det > 0 (the second
    anchored at the first); a map with det < 0 raises NotProper.  The input
    gap is W^{1,p}(g~ - g) + L^p(K~ - K).
    """
    _check_pair(r1, r2)
    ch = r1.chart
    p = default_p(ch) if p is None else float(p)
    x = tuple(r1.base_point)
    if not proper_required:
        Q = r2.frame.at(x) @ np.linalg.inv(r1.frame.at(x))
        v = r2.f.at(x) - Q @ r1.f.at(x)
        sigma = AffineMap(Q, v)
        fs = TensorField(ch, sigma(r1.f.data))
        ls = TensorField(ch, sigma.push(r1.rigging.data))
        gap = sobolev_gap(r2.f, fs, 2, p) + sobolev_gap(r2.rigging, ls, 1, p)
        gmax = float(np.max(np.abs(r2.f.data - fs.data)))
        inp = float(np.linalg.norm(np.asarray(r2.base_frame) - np.asarray(r1.base_frame)))
        if ops1 is not None and ops2 is not None:
            inp += _ops_gap(ops1, ops2, p)
        return AlignmentResult(sigma, gap, gmax, inp)

    if forms1 is None or forms2 is None:
        raise InvalidInput("proper alignment needs both sets of fundamental forms")
    c1, E1 = lambda_block_frame(forms1.g.at(x), forms1.lam, epsilon)
    c2, _ = lambda_block_frame(forms2.g.at(x), forms2.lam, epsilon)
    E2 = _orient(lorentz_decompose_anchored(make_anchor(c1), c2))
    maps = []
    for E, r, label in ((E1, r1, "first"), (E2, r2, "second")):
        Q, v = _pin(E, r)
        if np.linalg.det(Q) < 0:
            raise NotProper("base-point map reverses orientation", result=label, det=float(np.linalg.det(Q)))
        maps.append(_as_isometry(Q, v))
    pi, pit = maps
    a = TensorField(ch, pi(r1.f.data))
    b = TensorField(ch, pit(r2.f.data))
    la = TensorField(ch, pi.push(r1.rigging.data))
    lb = TensorField(ch, pit.push(r2.rigging.data))
    gap = sobolev_gap(b, a, 2, p) + sobolev_gap(lb, la, 1, p)
    gmax = float(np.max(np.abs(b.data - a.data)))
    inp = sobolev_gap(forms1.g, forms2.g, 1, p) + sobolev_gap(forms1.K, forms2.K, 0, p)
    tau = _as_isometry(*_compose_inv(pit, pi))
    return AlignmentResult(tau, gap, gmax, inp, pi, pit)
