"""Closed-form fixtures sampled on grid charts.

=====================  ===========================================  =================
fixture                fields                                       default chart
=====================  ===========================================  =================
minkowski              g = eta                                      [-1, 1]^dim
boosted_flat           g = L^T eta L, L a boost of given rapidity   [-1, 1]^dim
rindler                g = diag(-rho^2, 1) on (tau, rho)            [0,1] x [0.5,1.5]
desitter_slice         g = diag(-1, cosh^2 t) on (t, x)             [0, 1]^2
hyperplane_forms       g = I, K = 0, lambda = -1                    [-1, 1]^n
timelike_sheet_forms   g = diag(-1, 1, ...), K = 0, lambda = +1     [-1, 1]^n
hyperboloid_forms      g = diag(1, cosh^2 u), K = g, lambda = -1    [-0.5, 0.5]^2
=====================  ===========================================  =================

The hyperboloid is parametrised by y(u, v) = (cosh u cosh v, sinh u, cosh u sinh v),
which satisfies <y, y> = -1, with unit normal rigging l' = y, so that
K_{ih} = <d_i l', d_h y> = g_{ih}.  The Rindler patch is embedded by
(tau, rho) -> (rho sinh tau, rho cosh tau).
"""
from __future__ import annotations

import math

import numpy as np

from .errors import BadParams, UnknownFixture
from .grid import GridChart, TensorField
from .lorentz import mink_form

__all__ = [
    "FIXTURES",
    "default_chart",
    "generate",
    "rindler_reference",
    "hyperboloid_reference",
    "boost_matrix",
]

FIXTURES = (
    "minkowski",
    "boosted_flat",
    "rindler",
    "desitter_slice",
    "hyperplane_forms",
    "timelike_sheet_forms",
    "hyperboloid_forms",
)

_FORMS = {"hyperplane_forms", "timelike_sheet_forms", "hyperboloid_forms"}


def _known(fixture):
    if fixture not in FIXTURES:
        raise UnknownFixture(f"unknown fixture {fixture!r}", fixture=fixture, known=list(FIXTURES))


def default_chart(fixture, samples=33, dim=None):
    _known(fixture)
    if fixture == "rindler":
        return GridChart((0.0, 0.5), (1.0, 1.5), (samples, samples))
    if fixture == "desitter_slice":
        return GridChart((0.0, 0.0), (1.0, 1.0), (samples, samples))
    if fixture == "hyperboloid_forms":
        return GridChart.uniform(2, -0.5, 0.5, samples)
    return GridChart.uniform(dim or 2, -1.0, 1.0, samples)


def boost_matrix(d, rapidity, axis=1):
    L = np.eye(d)
    c, s = math.cosh(rapidity), math.sinh(rapidity)
    L[0, 0] = L[axis, axis] = c
    L[0, axis] = L[axis, 0] = s
    return L


def _const(chart, M):
    return np.broadcast_to(M, chart.shape + M.shape).copy()


def _param(params, key, default, kind=float):
    try:
        return kind(params.get(key, default))
    except (TypeError, ValueError) as exc:
        raise BadParams(f"parameter {key!r} is not a valid {kind.__name__}", param=key) from exc


def generate(fixture, params=None, chart=None):
    """Sample a fixture.

    Returns ``(fields, metadata)`` where fields maps names to TensorFields
    ("g" for metrics; "g" and "K" for fundamental forms) and metadata records
    the generator, parameters and, for forms, ``lambda``.
    """
    _known(fixture)
    params = dict(params or {})
    chart = chart or default_chart(fixture)
    meta = {"generator": fixture, "params": params}
    d = chart.dim

    if fixture in ("rindler", "desitter_slice", "hyperboloid_forms") and d != 2:
        raise BadParams(f"{fixture} is two-dimensional", dim=d)

    if fixture == "minkowski":
        return {"g": TensorField(chart, _const(chart, mink_form(d)), ((0, 1),))}, meta
    if fixture == "boosted_flat":
        rap = _param(params, "rapidity", 0.5)
        axis = _param(params, "axis", 1, int)
        if d < 2 or not 1 <= axis < d:
            raise BadParams("boost axis must be a spatial axis of the chart", axis=axis, dim=d)
        L = boost_matrix(d, rap, axis)
        return {"g": TensorField(chart, _const(chart, L.T @ mink_form(d) @ L), ((0, 1),))}, meta
    if fixture == "rindler":
        if chart.mins[1] <= 0.0:
            raise BadParams("rindler needs rho bounded away from 0", rho_min=chart.mins[1])
        _, rho = chart.mesh()
        g = np.zeros(chart.shape + (2, 2))
        g[..., 0, 0] = -rho ** 2
        g[..., 1, 1] = 1.0
        return {"g": TensorField(chart, g, ((0, 1),))}, meta
    if fixture == "desitter_slice":
        t, _ = chart.mesh()
        g = np.zeros(chart.shape + (2, 2))
        g[..., 0, 0] = -1.0
        g[..., 1, 1] = np.cosh(t) ** 2
        return {"g": TensorField(chart, g, ((0, 1),))}, meta

    if fixture == "hyperplane_forms":
        g, K, lam = np.eye(d), np.zeros((d, d)), -1
        g, K = _const(chart, g), _const(chart, K)
    elif fixture == "timelike_sheet_forms":
        g, K, lam = mink_form(d), np.zeros((d, d)), 1
        g, K = _const(chart, g), _const(chart, K)
    else:
        u, _ = chart.mesh()
        g = np.zeros(chart.shape + (2, 2))
        g[..., 0, 0] = 1.0
        g[..., 1, 1] = np.cosh(u) ** 2
        K, lam = g.copy(), -1
    meta["lambda"] = lam
    return {"g": TensorField(chart, g, ((0, 1),)), "K": TensorField(chart, K, ((0, 1),))}, meta


def rindler_reference(chart):
    """Analytic embedding (rho sinh tau, rho cosh tau) and its frame (columns d_tau, d_rho)."""
    t, r = chart.mesh()
    f = np.stack([r * np.sinh(t), r * np.cosh(t)], axis=-1)
    F = np.empty(chart.shape + (2, 2))
    F[..., 0, 0] = r * np.cosh(t)
    F[..., 1, 0] = r * np.sinh(t)
    F[..., 0, 1] = np.sinh(t)
    F[..., 1, 1] = np.cosh(t)
    return f, F


def hyperboloid_reference(chart):
    """Parametrisation y(u, v) of {<y, y> = -1} and its frame (d_u y, d_v y, y)."""
    u, v = chart.mesh()
    y = np.stack([np.cosh(u) * np.cosh(v), np.sinh(u), np.cosh(u) * np.sinh(v)], axis=-1)
    yu = np.stack([np.sinh(u) * np.cosh(v), np.cosh(u), np.sinh(u) * np.sinh(v)], axis=-1)
    yv = np.stack([np.cosh(u) * np.sinh(v), np.zeros_like(u), np.cosh(u) * np.cosh(v)], axis=-1)
    return y, np.stack([yu, yv, y], axis=-1)
