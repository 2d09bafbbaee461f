"""Pfaff systems dY/dx^a = Y A_a + B_a Y + C_a on a grid chart.

Coefficient arrays carry the axis index right after the grid axes:
``A`` has shape ``chart.shape + (m, l, l)``, ``B`` ``chart.shape + (m, q, q)``
and ``C`` ``chart.shape + (m, q, l)``.  ``B`` and ``C`` may be ``None`` (zero).

Integration uses classic RK4 along grid lines with midpoint coefficients
taken as the average of the two neighbouring samples.  Lines are swept in
an axis fan: first the line through ``x0`` along ``sweep[0]``, then every
line along ``sweep[1]`` starting from points already filled, and so on.
Incompatible coefficients are integrated anyway; the compatibility
residual is what tells whether the result means anything.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NonFiniteState, PathOutOfChart, ShapeMismatch
from .grid import GridChart, TensorField, _d1, lp_norm, residual_report, sobolev_norm, default_p

__all__ = [
    "PfaffCoeffs",
    "StaircasePath",
    "pfaff_compatibility_fields",
    "pfaff_compatibility_residual",
    "pfaff_integrate",
    "pfaff_integrate_path",
    "poincare_coeffs",
    "poincare_compatibility_residual",
    "poincare_integrate",
    "pfaff_dependence_gap",
]


def _check(arr, chart, m, name):
    if arr is None:
        return None
    arr = np.asarray(arr, dtype=float)
    nd = chart.dim
    if arr.ndim != nd + 3 or arr.shape[:nd] != chart.shape or arr.shape[nd] != m:
        raise ShapeMismatch(f"{name} must have shape grid + (m, rows, cols)",
                            field=name, shape=list(arr.shape), grid=list(chart.shape), m=m)
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} has non-finite samples")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PfaffCoeffs:
    chart: GridChart
    A: np.ndarray
    B: np.ndarray = None
    C: np.ndarray = None

    def __post_init__(self):
        m = self.chart.dim
        A = _check(self.A, self.chart, m, "A")
        B = _check(self.B, self.chart, m, "B")
        C = _check(self.C, self.chart, m, "C")
        if A is None:
            raise ShapeMismatch("A is required")
        ell = A.shape[-1]
        if A.shape[-2] != ell:
            raise ShapeMismatch("A blocks must be square", shape=list(A.shape[-2:]))
        q = None
        if B is not None:
            q = B.shape[-1]
            if B.shape[-2] != q:
                raise ShapeMismatch("B blocks must be square", shape=list(B.shape[-2:]))
        if C is not None:
            if C.shape[-1] != ell or (q is not None and C.shape[-2] != q):
                raise ShapeMismatch("C blocks must be q x l", shape=list(C.shape[-2:]), q=q, l=ell)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def ell(self):
        return self.A.shape[-1]

    def rows(self, default=None):
        """q, or ``default`` when neither B nor C fixes it."""
        if self.B is not None:
            return self.B.shape[-1]
        if self.C is not None:
            return self.C.shape[-2]
        return default

    @classmethod
    def from_lists(cls, chart, A, B=None, C=None):
        """Build from per-axis sequences of fields (arrays or TensorFields)."""
        def stack(seq):
            if seq is None:
                return None
            return np.stack([s.data if isinstance(s, TensorField) else np.asarray(s, float) for s in seq],
                            axis=chart.dim)
        return cls(chart, stack(A), stack(B), stack(C))


@dataclass(frozen=True)
class StaircasePath:
    """Axis-aligned lattice path: ``moves`` is a sequence of (axis, direction, steps)."""

    start: tuple
    moves: tuple

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(int(i) for i in self.start))
        mv = []
        for axis, direction, steps in self.moves:
            if direction not in (1, -1) or int(steps) < 0:
                raise InvalidInput("moves need direction +-1 and steps >= 0")
            mv.append((int(axis), int(direction), int(steps)))
        object.__setattr__(self, "moves", tuple(mv))

    def vertices(self):
        pts = [self.start]
        cur = list(self.start)
        for axis, direction, steps in self.moves:
            cur[axis] += direction * steps
            pts.append(tuple(cur))
        return pts

    @property
    def end(self):
        return self.vertices()[-1]

    def validate(self, chart):
        for v in self.vertices():
            if not chart.contains(v):
                raise PathOutOfChart("staircase leaves the chart", vertex=list(v))
        for axis, _, _ in self.moves:
            if not 0 <= axis < chart.dim:
                raise PathOutOfChart("move along a missing axis", axis=axis)


def _mm(X, Y):
    return np.matmul(X, Y)


def pfaff_compatibility_fields(coeffs):
    """Pointwise compatibility defects keyed by ``"<A|B|C>[a,b]"`` for a < b."""
    ch = coeffs.chart
    m = ch.dim
    A, B, C = coeffs.A, coeffs.B, coeffs.C
    h = ch.spacing
    out = {}

    def ax(X, a):
        return X[(Ellipsis, a, slice(None), slice(None))]

    dA = [_d1(A, a, h[a]) for a in range(m)]
    dB = [_d1(B, a, h[a]) for a in range(m)] if B is not None else None
    dC = [_d1(C, a, h[a]) for a in range(m)] if C is not None else None
    for a in range(m):
        for b in range(a + 1, m):
            Aa, Ab = ax(A, a), ax(A, b)
            out[f"A[{a},{b}]"] = ax(dA[a], b) - ax(dA[b], a) - _mm(Ab, Aa) + _mm(Aa, Ab)
            if B is not None:
                Ba, Bb = ax(B, a), ax(B, b)
                out[f"B[{a},{b}]"] = ax(dB[a], b) - ax(dB[b], a) - (_mm(Ba, Bb) - _mm(Bb, Ba))
            if C is not None:
                Ca, Cb = ax(C, a), ax(C, b)
                mixed = _mm(Cb, Aa) - _mm(Ca, Ab)
                if B is not None:
                    mixed = mixed + _mm(ax(B, a), Cb) - _mm(ax(B, b), Ca)
                out[f"C[{a},{b}]"] = ax(dC[a], b) - ax(dC[b], a) - mixed
    return out


def pfaff_compatibility_residual(coeffs, p=None):
    """Max and L^p size of the three compatibility relations over all axis pairs."""
    return residual_report(pfaff_compatibility_fields(coeffs), coeffs.chart, p)


def _rhs(Y, A, B, C):
    r = _mm(Y, A)
    if B is not None:
        r = r + _mm(B, Y)
    if C is not None:
        r = r + C
    return r


def _line_steps(Y, A, B, C, i0, i1, h):
    """RK4 along axis 0 of the line arrays from index i0 to i1; returns list of states.

    A, B, C have the line index first, then batch axes, then matrix axes.
    """
    states = [Y]
    step = 1 if i1 >= i0 else -1
    hs = h * step
    for i in range(i0, i1, step):
        j = i + step
        A0, A1 = A[i], A[j]
        Am = 0.5 * (A0 + A1)
        B0 = B1 = Bm = C0 = C1 = Cm = None
        if B is not None:
            B0, B1 = B[i], B[j]
            Bm = 0.5 * (B0 + B1)
        if C is not None:
            C0, C1 = C[i], C[j]
            Cm = 0.5 * (C0 + C1)
        k1 = _rhs(Y, A0, B0, C0)
        k2 = _rhs(Y + 0.5 * hs * k1, Am, Bm, Cm)
        k3 = _rhs(Y + 0.5 * hs * k2, Am, Bm, Cm)
        k4 = _rhs(Y + hs * k3, A1, B1, C1)
        Y = Y + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states.append(Y)
    return states


def _sweep_order(sweep, m):
    if sweep is None:
        return tuple(range(m))
    sweep = tuple(int(s) for s in sweep)
    if sorted(sweep) != list(range(m)):
        raise InvalidInput("sweep must be a permutation of the chart axes", sweep=list(sweep))
    return sweep


def pfaff_integrate(coeffs, x0, Y0, sweep=None):
    """Solve the Pfaff system over the whole chart with Y(x0) = Y0.

    Returns a TensorField of component shape (q, l).
    """
    ch = coeffs.chart
    m = ch.dim
    x0 = tuple(int(i) for i in x0)
    if not ch.contains(x0):
        raise PathOutOfChart("x0 outside the chart", x0=list(x0))
    Y0 = np.array(Y0, dtype=float)
    if Y0.ndim == 1:
        Y0 = Y0[:, None]
    ell = coeffs.ell
    q = coeffs.rows(Y0.shape[0])
    if Y0.shape != (q, ell):
        raise ShapeMismatch("Y0 has the wrong shape", expected=[q, ell], got=list(Y0.shape))
    if not np.all(np.isfinite(Y0)):
        raise InvalidInput("Y0 must be finite")
    order = _sweep_order(sweep, m)
    Y = np.full(ch.shape + (q, ell), np.nan)
    Y[x0] = Y0
    done = []
    for axis in order:
        idx = tuple(slice(None) if (a in done or a == axis) else x0[a] for a in range(m))
        # axes of the view in increasing original order; find the position of `axis`
        free = [a for a in range(m) if a in done or a == axis]
        pos = free.index(axis)

        def line(arr):
            if arr is None:
                return None
            v = arr[idx]
            # coefficient arrays carry (m, r, c) after the grid axes
            v = v[(Ellipsis, axis, slice(None), slice(None))]
            return np.moveaxis(v, pos, 0)

        Al, Bl, Cl = line(coeffs.A), line(coeffs.B), line(coeffs.C)
        Ysub = np.moveaxis(Y[idx], pos, 0)
        start = Ysub[x0[axis]].copy()
        n = ch.samples[axis]
        h = ch.spacing[axis]
        fwd = _line_steps(start, Al, Bl, Cl, x0[axis], n - 1, h)
        bwd = _line_steps(start, Al, Bl, Cl, x0[axis], 0, h)
        out = np.empty_like(Ysub)
        out[x0[axis]:] = np.stack(fwd)
        out[:x0[axis] + 1] = np.stack(bwd[::-1])
        out[x0[axis]] = start
        Y[idx] = np.moveaxis(out, 0, pos)
        done.append(axis)
        if not np.all(np.isfinite(Y[tuple(slice(None) if a in done else x0[a] for a in range(m))])):
            raise NonFiniteState("integration produced non-finite values", axis=axis)
    Y[x0] = Y0
    return TensorField(ch, Y)


def pfaff_integrate_path(coeffs, path, Y0):
    """Value at the end of a staircase path, composing the segment integrations in order."""
    ch = coeffs.chart
    path.validate(ch)
    Y = np.array(Y0, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    cur = list(path.start)
    for axis, direction, steps in path.moves:
        if steps == 0:
            continue
        idx = tuple(slice(None) if a == axis else cur[a] for a in range(ch.dim))

        def line(arr):
            return None if arr is None else arr[idx][:, axis]

        end = cur[axis] + direction * steps
        Y = _line_steps(Y, line(coeffs.A), line(coeffs.B), line(coeffs.C),
                        cur[axis], end, ch.spacing[axis])[-1]
        cur[axis] = end
        if not np.all(np.isfinite(Y)):
            raise NonFiniteState("integration produced non-finite values")
    return Y


def poincare_coeffs(F):
    """Pfaff form of df = F: A = B = 0 and C_a = column a of F as a (d, 1) block."""
    ch = F.chart
    m = ch.dim
    if len(F.shape) != 2 or F.shape[1] != m:
        raise ShapeMismatch("F must have component shape (d, m)", shape=list(F.shape), m=m)
    C = np.moveaxis(F.data, -1, m)[..., None]
    A = np.zeros(ch.shape + (m, 1, 1))
    return PfaffCoeffs(ch, A, None, C)


def poincare_compatibility_residual(F, p=None):
    """Column curl d_a F_b - d_b F_a over all axis pairs a < b."""
    ch = F.chart
    m = ch.dim
    if len(F.shape) != 2 or F.shape[1] != m:
        raise ShapeMismatch("F must have component shape (d, m)", shape=list(F.shape), m=m)
    h = ch.spacing
    fields = {}
    for a in range(m):
        for b in range(a + 1, m):
            fields[f"curl[{a},{b}]"] = _d1(F.data[..., b], a, h[a]) - _d1(F.data[..., a], b, h[b])
    return residual_report(fields, ch, p)


def poincare_integrate(F, x0, f0, sweep=None):
    """Integrate df = F with f(x0) = f0 (the scheme reduces to the trapezoid rule)."""
    f0 = np.asarray(f0, dtype=float).reshape(-1, 1)
    if f0.shape[0] != F.shape[0]:
        raise ShapeMismatch("f0 length must match F rows", expected=F.shape[0], got=f0.shape[0])
    Y = pfaff_integrate(poincare_coeffs(F), x0, f0, sweep)
    return TensorField(F.chart, Y.data[..., 0])


def pfaff_dependence_gap(c1, c2, Y01, Y02, x0, p=None, sweep=None):
    """Return (W^{1,p} norm of Y - Y~, |Y01 - Y02| + sum of L^p coefficient gaps)."""
    if c1.chart != c2.chart:
        raise ShapeMismatch("coefficient charts differ")
    ch = c1.chart
    p = default_p(ch) if p is None else float(p)
    Y1 = pfaff_integrate(c1, x0, Y01, sweep)
    Y2 = pfaff_integrate(c2, x0, Y02, sweep)
    if Y1.shape != Y2.shape:
        raise ShapeMismatch("solution shapes differ")
    gap = sobolev_norm(Y1.with_data(Y1.data - Y2.data), 1, p)
    inp = float(np.linalg.norm(np.asarray(Y01, float).reshape(Y1.shape) - np.asarray(Y02, float).reshape(Y1.shape)))
    nd = ch.dim
    for X1, X2 in ((c1.A, c2.A), (c1.B, c2.B), (c1.C, c2.C)):
        if X1 is None and X2 is None:
            continue
        D = (0 if X1 is None else X1) - (0 if X2 is None else X2)
        D = np.broadcast_to(D, (X1 if X1 is not None else X2).shape)
        for a in range(nd):
            comp = D[..., a, :, :]
            inp += lp_norm(np.sqrt(np.sum(comp.reshape(comp.shape[:nd] + (-1,)) ** 2, axis=-1)), ch, p)
    return gap, inp
