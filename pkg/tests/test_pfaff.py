import numpy as np
import pytest

from minkowski_immersion.alignment import convergence_order
from minkowski_immersion.errors import (
    InvalidInput,
    NonFiniteState,
    PathOutOfChart,
    ShapeMismatch,
)
from minkowski_immersion.grid import GridChart, TensorField
from minkowski_immersion.pfaff import (
    PfaffCoeffs,
    StaircasePath,
    pfaff_compatibility_residual,
    pfaff_dependence_gap,
    pfaff_integrate,
    pfaff_integrate_path,
    poincare_compatibility_residual,
    poincare_integrate,
)

from conftest import REFINEMENTS

J = np.array([[0.0, -1.0], [1.0, 0.0]])


def _rot(t):
    c, s = np.cos(t), np.sin(t)
    out = np.empty(np.shape(t) + (2, 2))
    out[..., 0, 0], out[..., 0, 1], out[..., 1, 0], out[..., 1, 1] = c, -s, s, c
    return out


def _chart(n):
    return GridChart((0.0, 0.0), (1.0, 1.0), (n, n))


def _phi(x, y):
    """Phi = R(xy) diag(e^x, e^{y^2}) together with its partial derivatives."""
    R = _rot(x * y)
    D = np.zeros(x.shape + (2, 2))
    D[..., 0, 0], D[..., 1, 1] = np.exp(x), np.exp(y * y)
    Dx = np.zeros_like(D)
    Dx[..., 0, 0] = np.exp(x)
    Dy = np.zeros_like(D)
    Dy[..., 1, 1] = 2 * y * np.exp(y * y)
    RJ = R @ J
    phi = R @ D
    px = y[..., None, None] * RJ @ D + R @ Dx
    py = x[..., None, None] * RJ @ D + R @ Dy
    return phi, px, py


def _right_system(n):
    """Compatible Y_a = Y A_a with A_a = Phi^{-1} d_a Phi, exact solution Y0 Phi(x0)^{-1} Phi."""
    ch = _chart(n)
    x, y = ch.mesh()
    phi, px, py = _phi(x, y)
    inv = np.linalg.inv(phi)
    A = np.stack([inv @ px, inv @ py], axis=2)
    return PfaffCoeffs(ch, A), phi


def _left_system(n):
    """Y_a = B_a Y + C_a with B_a = d_a Psi Psi^{-1}; Y = Psi (Psi(x0)^{-1} Y0 + integral of Psi^{-1} C)."""
    ch = _chart(n)
    x, y = ch.mesh()
    phi, px, py = _phi(x, y)
    inv = np.linalg.inv(phi)
    B = np.stack([px @ inv, py @ inv], axis=2)
    # choose Y = Psi W with W = [[x + y^2], [x y]]; then C_a = Psi d_a W
    W = np.stack([x + y * y, x * y], axis=-1)[..., None]
    Wx = np.stack([np.ones_like(x), y], axis=-1)[..., None]
    Wy = np.stack([2 * y, x], axis=-1)[..., None]
    C = np.stack([phi @ Wx, phi @ Wy], axis=2)
    A = np.zeros(ch.shape + (2, 1, 1))
    return PfaffCoeffs(ch, A, B, C), phi @ W


class TestCoeffs:
    def test_shapes_checked(self):
        ch = _chart(5)
        with pytest.raises(ShapeMismatch):
            PfaffCoeffs(ch, np.zeros((5, 5, 3, 2, 2)))
        with pytest.raises(ShapeMismatch):
            PfaffCoeffs(ch, np.zeros((5, 5, 2, 2, 3)))
        with pytest.raises(ShapeMismatch):
            PfaffCoeffs(ch, np.zeros((5, 5, 2, 2, 2)), C=np.zeros((5, 5, 2, 3, 3)))
        bad = np.zeros((5, 5, 2, 1, 1))
        bad[0, 0, 0] = np.nan
        with pytest.raises(InvalidInput):
            PfaffCoeffs(ch, bad)

    def test_from_lists(self):
        ch = _chart(5)
        A = [np.zeros((5, 5, 2, 2)), TensorField(ch, np.ones((5, 5, 2, 2)))]
        c = PfaffCoeffs.from_lists(ch, A)
        assert c.A.shape == (5, 5, 2, 2, 2) and c.ell == 2 and c.rows(7) == 7
        assert np.all(c.A[:, :, 1] == 1.0)


class TestCompatibility:
    def test_constant_commuting_exact(self):
        ch = _chart(9)
        A = np.broadcast_to(np.stack([0.3 * J, -1.1 * J]), ch.shape + (2, 2, 2)).copy()
        assert pfaff_compatibility_residual(PfaffCoeffs(ch, A)).max_abs < 1e-13

    def test_constant_noncommuting_detected(self):
        ch = _chart(9)
        X = np.array([[0.0, 1.0], [0.0, 0.0]])
        A = np.broadcast_to(np.stack([X, X.T]), ch.shape + (2, 2, 2)).copy()
        rep = pfaff_compatibility_residual(PfaffCoeffs(ch, A))
        assert rep.max_abs == pytest.approx(1.0)
        assert "A[0,1]" in rep.per_equation

    @pytest.mark.parametrize("builder", [_right_system, _left_system])
    def test_compatible_converges(self, builder):
        res = [pfaff_compatibility_residual(builder(n)[0]).max_abs for n in REFINEMENTS]
        slope, _ = convergence_order([1, 0.5, 0.25], res)
        assert slope > 1.9

    def test_poincare_curl(self):
        ch = _chart(17)
        x, y = ch.mesh()
        grad = np.stack([np.stack([2 * x * y, x * x], -1), np.stack([np.ones_like(x), np.zeros_like(x)], -1)], -2)
        assert poincare_compatibility_residual(TensorField(ch, grad)).max_abs < 1e-12
        curl = np.stack([np.stack([-y, x], -1)], -2)
        assert poincare_compatibility_residual(TensorField(ch, curl)).max_abs == pytest.approx(2.0)


class TestIntegrate:
    def test_initial_value_exact(self, rng):
        c, _ = _right_system(9)
        Y0 = rng.normal(size=(3, 2))
        Y = pfaff_integrate(c, (4, 2), Y0)
        assert np.array_equal(Y.data[4, 2], Y0)

    def test_constant_commuting_closed_form(self):
        ch = _chart(17)
        A = np.broadcast_to(np.stack([0.7 * J, -0.4 * J]), ch.shape + (2, 2, 2)).copy()
        Y = pfaff_integrate(PfaffCoeffs(ch, A), (0, 0), np.eye(2))
        x, y = ch.mesh()
        assert np.max(np.abs(Y.data - _rot(0.7 * x - 0.4 * y))) < 1e-7

    @pytest.mark.parametrize("builder", [_right_system, _left_system])
    def test_converges_to_exact(self, builder):
        errs = []
        for n in REFINEMENTS:
            c, exact = builder(n)
            x0 = (n // 2, n // 3)
            if builder is _right_system:
                Y0 = np.eye(2)
                ref = np.linalg.inv(exact[x0]) @ exact
            else:
                Y0 = exact[x0]
                ref = exact
            errs.append(np.max(np.abs(pfaff_integrate(c, x0, Y0).data - ref)))
        slope, pair = convergence_order([1, 0.5, 0.25], errs)
        assert slope > 1.9 and errs[-1] < 1e-4

    def test_linearity(self, rng):
        c, _ = _right_system(17)
        Y1, Y2 = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
        a, b = 1.7, -0.3
        lhs = pfaff_integrate(c, (3, 3), a * Y1 + b * Y2).data
        rhs = a * pfaff_integrate(c, (3, 3), Y1).data + b * pfaff_integrate(c, (3, 3), Y2).data
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(np.abs(lhs))

    def test_sweep_order(self):
        errs = []
        for n in REFINEMENTS:
            c, _ = _right_system(n)
            a = pfaff_integrate(c, (0, 0), np.eye(2), sweep=(0, 1)).data
            b = pfaff_integrate(c, (0, 0), np.eye(2), sweep=(1, 0)).data
            errs.append(np.max(np.abs(a - b)))
        assert convergence_order([1, 0.5, 0.25], errs)[0] > 1.9

    def test_three_dimensional_constant(self):
        ch = GridChart((0.0,) * 3, (1.0,) * 3, (7, 7, 7))
        gens = np.stack([0.5 * np.eye(2), -0.2 * np.eye(2), 0.1 * np.eye(2)])
        A = np.broadcast_to(gens, ch.shape + (3, 2, 2)).copy()
        Y = pfaff_integrate(PfaffCoeffs(ch, A), (3, 3, 3), np.eye(2), sweep=(2, 0, 1))
        x, y, z = ch.mesh()
        expect = np.exp(0.5 * (x - 0.5) - 0.2 * (y - 0.5) + 0.1 * (z - 0.5))
        assert np.max(np.abs(Y.data[..., 0, 0] - expect)) < 1e-6
        assert np.max(np.abs(Y.data[..., 0, 1])) == 0.0

    def test_errors(self):
        c, _ = _right_system(9)
        with pytest.raises(PathOutOfChart):
            pfaff_integrate(c, (9, 0), np.eye(2))
        with pytest.raises(ShapeMismatch):
            pfaff_integrate(c, (0, 0), np.eye(3))
        with pytest.raises(InvalidInput):
            pfaff_integrate(c, (0, 0), np.eye(2), sweep=(0, 0))
        with pytest.raises(InvalidInput):
            pfaff_integrate(c, (0, 0), np.full((2, 2), np.nan))

    def test_blow_up_reported(self):
        ch = _chart(9)
        A = np.full(ch.shape + (2, 1, 1), 1e200)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(NonFiniteState):
                pfaff_integrate(PfaffCoeffs(ch, A), (0, 0), [[1.0]])


class TestPaths:
    def test_path_matches_field(self):
        c, _ = _right_system(17)
        Y = pfaff_integrate(c, (2, 5), np.eye(2), sweep=(0, 1))
        path = StaircasePath((2, 5), ((0, 1, 10), (1, 1, 8)))
        assert path.end == (12, 13)
        end = pfaff_integrate_path(c, path, np.eye(2))
        assert np.max(np.abs(end - Y.data[12, 13])) < 1e-13

    def test_pairs_converge(self):
        errs = []
        for n in REFINEMENTS:
            c, _ = _right_system(n)
            k = (n - 1) // 4
            p1 = StaircasePath((0, 0), ((0, 1, 4 * k), (1, 1, 4 * k)))
            p2 = StaircasePath((0, 0), ((1, 1, 2 * k), (0, 1, 2 * k), (1, 1, 2 * k), (0, 1, 2 * k)))
            assert p1.end == p2.end
            errs.append(np.max(np.abs(pfaff_integrate_path(c, p1, np.eye(2)) - pfaff_integrate_path(c, p2, np.eye(2)))))
        assert convergence_order([1, 0.5, 0.25], errs)[0] > 1.9

    def test_loop_incompatible_nonzero(self):
        ch = _chart(33)
        X = np.array([[0.0, 1.0], [0.0, 0.0]])
        A = np.broadcast_to(np.stack([X, X.T]), ch.shape + (2, 2, 2)).copy()
        c = PfaffCoeffs(ch, A)
        p1 = StaircasePath((0, 0), ((0, 1, 32), (1, 1, 32)))
        p2 = StaircasePath((0, 0), ((1, 1, 32), (0, 1, 32)))
        gap = np.max(np.abs(pfaff_integrate_path(c, p1, np.eye(2)) - pfaff_integrate_path(c, p2, np.eye(2))))
        assert gap > 0.1

    def test_out_of_chart(self):
        c, _ = _right_system(9)
        with pytest.raises(PathOutOfChart):
            pfaff_integrate_path(c, StaircasePath((0, 0), ((0, 1, 9),)), np.eye(2))
        with pytest.raises(PathOutOfChart):
            pfaff_integrate_path(c, StaircasePath((0, 0), ((0, -1, 1),)), np.eye(2))
        with pytest.raises(InvalidInput):
            StaircasePath((0, 0), ((0, 2, 1),))


class TestPoincare:
    def test_quadratic_exact(self):
        ch = GridChart((-1.0, 0.0), (1.0, 2.0), (9, 13))
        x, y = ch.mesh()
        f = np.stack([x * x + 3 * y, x * y - y * y], -1)
        F = np.stack([np.stack([2 * x, 3 + 0 * x], -1), np.stack([y, x - 2 * y], -1)], -2)
        out = poincare_integrate(TensorField(ch, F), (4, 6), f[4, 6])
        assert np.max(np.abs(out.data - f)) < 1e-13

    def test_smooth_second_order(self):
        errs = []
        for n in REFINEMENTS:
            ch = _chart(n)
            x, y = ch.mesh()
            f = np.sin(x) * np.cos(2 * y)
            F = np.stack([np.cos(x) * np.cos(2 * y), -2 * np.sin(x) * np.sin(2 * y)], -1)[..., None, :]
            out = poincare_integrate(TensorField(ch, F), (0, 0), [f[0, 0]])
            errs.append(np.max(np.abs(out.data[..., 0] - f)))
        assert convergence_order([1, 0.5, 0.25], errs)[0] > 1.9

    def test_shape_errors(self):
        ch = _chart(5)
        with pytest.raises(ShapeMismatch):
            poincare_integrate(TensorField(ch, np.zeros((5, 5, 2, 3))), (0, 0), [0.0, 0.0])
        with pytest.raises(ShapeMismatch):
            poincare_integrate(TensorField(ch, np.zeros((5, 5, 2, 2))), (0, 0), [0.0])


class TestDependence:
    def test_identical_inputs(self):
        c, _ = _right_system(17)
        gap, inp = pfaff_dependence_gap(c, c, np.eye(2), np.eye(2), (0, 0))
        assert gap == 0.0 and inp == 0.0

    def test_linear_in_perturbation(self):
        c, _ = _right_system(17)
        ratios = []
        for delta in (1e-2, 1e-3, 1e-4):
            c2 = PfaffCoeffs(c.chart, c.A + delta * np.broadcast_to(J, c.A.shape))
            gap, inp = pfaff_dependence_gap(c, c2, np.eye(2), np.eye(2) * (1 + delta), (8, 8))
            assert inp > 0
            ratios.append(gap / inp)
        assert max(ratios) / min(ratios) < 1.1
