import numpy as np
import pytest

from muskatss.grid_spline import HALF_PI, fit_spline, make_grid


class TestGrid:
    def test_two_nodes(self):
        g = make_grid(2)
        assert np.allclose(g.nodes, [0.0, HALF_PI])

    def test_reference_node(self):
        g = make_grid(129)
        assert g.nodes[1] == pytest.approx(np.pi / 256.0, abs=1e-15)
        assert g.nodes[1] == pytest.approx(0.012271846, abs=1e-9)

    def test_endpoint(self):
        g = make_grid(129)
        assert g.nodes[-1] == pytest.approx(HALF_PI, abs=1e-15)
        assert np.allclose(np.diff(g.nodes), g.spacing)

    def test_rejects_tiny(self):
        with pytest.raises(ValueError):
            make_grid(1)


class TestFitSpline:
    def test_zero_values(self):
        g = make_grid(33)
        p = fit_spline(g, np.zeros(33), 0.0)
        z = np.linspace(-HALF_PI, HALF_PI, 101)
        assert np.all(p.eval(z) == 0.0)
        assert np.all(p.eval_deriv(z) == 0.0)

    def test_quartic_reproduction(self):
        g = make_grid(33)
        q = lambda z: z ** 4 - z ** 2
        p = fit_spline(g, q(g.nodes), 0.0)
        z = np.linspace(0.0, HALF_PI, 501)
        assert np.max(np.abs(p.eval(z) - q(z))) < 1e-12

    def test_general_quartic_relative(self):
        g = make_grid(65)
        q = lambda z: 0.3 * z ** 4 - 0.2 * z ** 3 + 0.5 * z ** 2 + 0.1 * z
        qp = lambda z: 1.2 * z ** 3 - 0.6 * z ** 2 + 1.0 * z + 0.1
        p = fit_spline(g, q(g.nodes), 0.0)
        z = np.linspace(0.0, HALF_PI, 501)
        scale = np.max(np.abs(q(z)))
        assert np.max(np.abs(p.eval(z) - q(z))) < 1e-11 * scale
        assert np.max(np.abs(p.eval_deriv(z) - qp(z))) < 1e-9

    def test_affine_values(self):
        g = make_grid(17)
        s = 0.4
        vals = (2.0 / np.pi) * s * g.nodes
        p = fit_spline(g, vals, s)
        z = np.linspace(0.0, HALF_PI, 101)
        assert np.allclose(p.eval(z), (2.0 / np.pi) * s * z, atol=1e-14)
        assert np.allclose(p.eval_deriv(z), (2.0 / np.pi) * s, atol=1e-13)

    def test_interpolates_nodes(self):
        g = make_grid(41)
        rng = np.random.default_rng(3)
        vals = rng.normal(size=41)
        vals[0] = 0.0
        p = fit_spline(g, vals, 0.0)
        assert np.max(np.abs(p.eval(g.nodes) - vals)) <= 1e-12 * np.max(np.abs(vals))

    def test_odd_symmetry_exact(self):
        g = make_grid(21)
        vals = np.sin(g.nodes) * (1 + 0.3 * g.nodes)
        vals[0] = 0.0
        p = fit_spline(g, vals, 0.0)
        z = np.linspace(0.0, HALF_PI, 301)
        assert np.max(np.abs(p.eval(-z) + p.eval(z))) == 0.0
        assert np.max(np.abs(p.eval_deriv(-z) - p.eval_deriv(z))) == 0.0

    def test_eval_at_zero(self):
        g = make_grid(9)
        vals = g.nodes.copy()
        p = fit_spline(g, vals, 1.0)
        assert p.eval(0.0) == 0.0

    def test_derivative_convergence_order(self):
        # spline derivative of sin(z) against cos(z) under grid doubling
        errs, hs = [], []
        for N in (17, 33, 65, 129):
            g = make_grid(N)
            p = fit_spline(g, np.sin(g.nodes), 1.0)
            z = np.linspace(0.0, HALF_PI, 1001)
            errs.append(np.max(np.abs(p.eval_deriv(z) - np.cos(z))))
            hs.append(g.spacing)
        order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert order >= 3.0

    def test_domain_errors(self):
        g = make_grid(9)
        p = fit_spline(g, np.zeros(9), 0.0)
        with pytest.raises(ValueError):
            p.eval(2.0)
        with pytest.raises(ValueError):
            p.eval_deriv(-2.0)

    def test_input_validation(self):
        g = make_grid(9)
        with pytest.raises(ValueError):
            fit_spline(g, np.ones(9), 0.0)   # values[0] != 0
        with pytest.raises(ValueError):
            fit_spline(g, np.zeros(5), 0.0)  # wrong length
        with pytest.raises(ValueError):
            fit_spline(make_grid(4), np.zeros(4), 0.0)  # too few nodes
