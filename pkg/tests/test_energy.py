import numpy as np
import pytest
from scipy import integrate

from conftest import contract2, random_bumps, sech_profile
from fracgs.energy import (
    Functional,
    default_lambdas,
    dilate,
    dilation_test,
    el_residual,
    energy,
    gaussian_profile,
    gn_quotient,
    l2_gradient,
    lagrange_multipliers,
)
from fracgs.nonlinearity import example_spec, power_spec, zero_spec
from fracgs.spectral import Field, State, apply_fractional_laplacian, make_grid


def sech_state(grid, mu=1.0, c=1.0):
    return State(grid, sech_profile(grid.axis, mu, c)[None], (c,), 1.0)


class TestSechOracle:
    """The closed-form 1D cubic ground state, checked independently of the solver."""

    def test_closed_form_integrals(self):
        mu, c = 1.3, 0.8
        u = lambda x: sech_profile(x, mu, c)  # noqa: E731
        B = mu * c
        m, _ = integrate.quad(lambda x: u(x) ** 2, -np.inf, np.inf)
        assert m == pytest.approx(c, rel=1e-10)
        du = lambda x: -B * np.tanh(B * x) * u(x)  # noqa: E731
        kin, _ = integrate.quad(lambda x: 0.5 * du(x) ** 2, -np.inf, np.inf)
        pot, _ = integrate.quad(lambda x: mu * u(x) ** 4, -np.inf, np.inf)
        assert kin - pot == pytest.approx(-(mu**2) * c**3 / 6, rel=1e-10)

    def test_substitution_into_euler_lagrange(self):
        # -u'' + lambda u - 4 mu u^3 with lambda = B^2, derivatives taken analytically
        mu, c = 1.0, 1.0
        A, B = np.sqrt(mu * c * c / 2), mu * c
        x = np.linspace(-15, 15, 2001)
        s = 1 / np.cosh(B * x)
        u = A * s
        upp = A * B * B * (s - 2 * s**3)
        assert np.max(np.abs(-upp + B * B * u - 4 * mu * u**3)) < 1e-14

    def test_energy_on_grid(self, grid1d, cubic):
        assert energy(sech_state(grid1d), cubic).total == pytest.approx(-1 / 6, abs=1e-6)

    def test_multiplier(self, grid1d, cubic):
        assert lagrange_multipliers(sech_state(grid1d), cubic)[0] == pytest.approx(1.0, abs=1e-4)

    def test_residual(self, grid1d, cubic):
        assert el_residual(sech_state(grid1d), cubic) <= 1e-6


class TestEnergy:
    def test_zero_spec_constant(self, grid1d):
        s = State(grid1d, np.full((2, 512), 0.3), (1.0, 1.0), 1.0)
        assert energy(s, zero_spec(2)).total == pytest.approx(0.0, abs=1e-20)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_zero_spec_single_mode(self, grid1d, alpha):
        k, A = 3, 0.7
        xi = 2 * np.pi * k / grid1d.box
        s = State(grid1d, A * np.cos(xi * grid1d.axis)[None], (1.0,), alpha)
        expected = 0.5 * xi ** (2 * alpha) * A * A * grid1d.volume / 2
        assert energy(s, zero_spec(1)).total == pytest.approx(expected, rel=1e-12)

    def test_breakdown_signs(self, grid1d, rng):
        s = State(grid1d, rng.normal(size=(2, 512)), (1.0, 1.0), 1.0)
        e = energy(s, example_spec(2))
        assert e.kinetic >= 0 and e.potential >= 0 and e.total == e.kinetic - e.potential

    def test_translation_invariance_constant_coefficients(self, grid1d):
        spec = power_spec(2, 4.0)
        v = np.stack([np.exp(-grid1d.axis**2), np.exp(-((grid1d.axis - 1) ** 2) / 3)])
        a = energy(State(grid1d, v, (1.0, 1.0), 1.0), spec).total
        b = energy(State(grid1d, np.roll(v, 37, axis=1), (1.0, 1.0), 1.0), spec).total
        assert b == pytest.approx(a, rel=1e-10)

    def test_periodic_coefficient_lattice_invariance(self, tmp_path):
        from fracgs.nonlinearity import Coefficient, NonlinearitySpec, Term

        grid = make_grid(1, 40.0, 512)
        L = 5.0  # 64 cells
        table = 1.5 + np.cos(2 * np.pi * np.arange(32) / 32)
        spec = NonlinearitySpec(1, (Term(Coefficient("periodic", 1.0, table=table, period=(L,)), (4.0,)),), period=(L,))
        v = np.exp(-grid.axis**2 / 2)[None]
        a = energy(State(grid, v, (1.0,), 1.0), spec).total
        b = energy(State(grid, np.roll(v, round(L / grid.spacing), axis=1), (1.0,), 1.0), spec).total
        assert b == pytest.approx(a, rel=1e-8)


class TestGradient:
    def test_plane_wave(self, grid1d):
        xi = 2 * np.pi * 4 / grid1d.box
        s = State(grid1d, np.cos(xi * grid1d.axis)[None], (1.0,), 1.5)
        scale = np.max(grid1d.symbol(1.5))
        np.testing.assert_allclose(l2_gradient(s, zero_spec(1))[0].values, xi**3 * s.values[0], rtol=0, atol=1e-13 * scale)

    @pytest.mark.parametrize("alpha", [0.4, 1.0, 3.0])
    def test_constant_state(self, grid1d, alpha):
        a, mu = 0.3, 2.0
        s = State(grid1d, np.full((1, 512), a), (1.0,), alpha)
        np.testing.assert_allclose(l2_gradient(s, power_spec(1, 4.0, mu))[0].values, -4 * mu * a**3, rtol=1e-12)

    def test_directional_derivative(self, grid1d, rng):
        spec = example_spec(2)
        fn = Functional(spec, grid1d, 1.0)
        u = np.stack([random_bumps(grid1d, rng).values, random_bumps(grid1d, rng).values])
        s = State(grid1d, u, (1.0, 1.0), 1.0)
        grad = np.stack([g.values for g in l2_gradient(s, spec)])
        for _ in range(5):
            v = np.stack([random_bumps(grid1d, rng).values, random_bumps(grid1d, rng).values])
            eps = 1e-5
            fd = (fn.energy(u + eps * v).total - fn.energy(u - eps * v).total) / (2 * eps)
            assert grid1d.cell_volume * np.sum(grad * v) == pytest.approx(fd, rel=1e-5)


class TestMultipliers:
    def test_single_mode(self, grid1d):
        k, alpha = 5, 0.75
        xi = 2 * np.pi * k / grid1d.box
        v = np.cos(xi * grid1d.axis)
        v /= np.sqrt(grid1d.cell_volume * np.sum(v * v))
        s = State(grid1d, v[None], (1.0,), alpha)
        assert lagrange_multipliers(s, zero_spec(1))[0] == pytest.approx(-xi ** (2 * alpha), rel=1e-12)
        assert el_residual(s, zero_spec(1)) < 1e-10

    def test_constant(self, grid1d):
        s = State(grid1d, np.full((1, 512), np.sqrt(1 / 40)), (1.0,), 1.0)
        assert lagrange_multipliers(s, zero_spec(1))[0] == pytest.approx(0.0, abs=1e-14)

    def test_random_state_not_critical(self, grid1d, rng):
        s = State(grid1d, random_bumps(grid1d, rng).values[None], (1.0,), 1.0)
        assert el_residual(s, power_spec(1, 4.0)) > 1e-3


class TestGNQuotient:
    def test_dilation_invariance(self, grid1d, rng):
        for _ in range(5):
            f = random_bumps(grid1d, rng)
            assert gn_quotient(contract2(f), 1.0, 2.0) == pytest.approx(gn_quotient(f, 1.0, 2.0), rel=1e-6)

    def test_scaling_invariance(self, grid1d, rng):
        f = random_bumps(grid1d, rng)
        assert gn_quotient(2.0 * f, 1.0, 2.0) == pytest.approx(gn_quotient(f, 1.0, 2.0), rel=1e-12)

    def test_gaussian_against_quadrature(self, grid1d):
        # l = 2, alpha = 1, N = 1: int f^4 / (||f||_2^3 ||f'||_2)
        g = lambda x: np.exp(-x * x / 2)  # noqa: E731
        p4, _ = integrate.quad(lambda x: g(x) ** 4, -np.inf, np.inf)
        l2, _ = integrate.quad(lambda x: g(x) ** 2, -np.inf, np.inf)
        h1, _ = integrate.quad(lambda x: (x * g(x)) ** 2, -np.inf, np.inf)
        oracle = p4 / (l2**1.5 * np.sqrt(h1))
        assert gn_quotient(Field(grid1d, g(grid1d.axis)), 1.0, 2.0) == pytest.approx(oracle, rel=1e-6)

    @pytest.mark.parametrize("l", [0.0, 4.0, 5.0])
    def test_rejects_l(self, grid1d, l):
        with pytest.raises(ValueError):
            gn_quotient(Field(grid1d, np.exp(-grid1d.axis**2)), 1.0, l)

    def test_rejects_constant(self, grid1d):
        with pytest.raises(ValueError):
            gn_quotient(Field(grid1d, np.ones(512)), 1.0, 2.0)

    def test_bounded_over_random_fields(self, grid1d, rng):
        q = [gn_quotient(random_bumps(grid1d, rng, k=int(rng.integers(1, 5))), 1.0, 2.0) for _ in range(1000)]
        assert np.all(np.isfinite(q)) and max(q) < 10


@pytest.fixture(scope="module")
def big():
    return make_grid(1, 16384.0, 32768)


class TestDilation:
    def test_example2_certificate(self, big):
        res = dilation_test([1.0, 1.0], example_spec(2), big, 1.0, gaussian_profile(big))
        assert res.lambda_star is not None and 0 < res.lambda_star < 1
        e_star = dict(res.rows())[res.lambda_star]
        assert e_star < -1e-3
        assert energy(res.certificate, example_spec(2)).total == pytest.approx(e_star)
        np.testing.assert_allclose(res.certificate.masses(), [1.0, 1.0], rtol=1e-12)

    def test_zero_spec_no_certificate(self, big):
        prof = gaussian_profile(big)
        res = dilation_test([1.0, 1.0], zero_spec(2), big, 1.0, prof)
        assert res.lambda_star is None
        kin1 = 2 * energy(State(big, prof.values[None], (1.0,), 1.0), zero_spec(1)).total
        for lam, e in res.rows():
            assert e == pytest.approx(lam**2 * kin1, rel=1e-8)

    def test_scaled_energy_decreases_towards_zero(self, big):
        res = dilation_test([1.0, 1.0], example_spec(2), big, 1.0, gaussian_profile(big))
        lam = np.array(res.lambdas)
        scaled = np.array(res.energies) / lam**2
        # lambdas run from 1/2 down; J/lambda^2 must keep falling as lambda -> 0
        assert np.all(np.diff(scaled) < 0)

    def test_tail_error(self, grid1d):
        with pytest.raises(ValueError, match="larger"):
            dilation_test([1.0], power_spec(1, 4.0), grid1d, 1.0, gaussian_profile(grid1d), [2.0**-6])

    def test_profile_mass_checked(self, grid1d):
        with pytest.raises(ValueError):
            dilation_test([1.0], power_spec(1, 4.0), grid1d, 1.0, 2.0 * gaussian_profile(grid1d), [0.5])

    def test_dilate_matches_analytic(self, grid1d):
        out = dilate(gaussian_profile(grid1d, 1.0), 0.5)
        np.testing.assert_allclose(out, gaussian_profile(grid1d, 2.0).values, atol=1e-12)

    def test_default_lambdas(self):
        assert default_lambdas() == [2.0**-k for k in range(1, 11)]
        assert default_lambdas(refine=2)[:3] == [2.0**-1, 2.0**-1.5, 2.0**-2]
        assert len(default_lambdas(refine=2)) == 19


def test_fractional_kinetic_consistent_with_operator(grid1d, rng):
    f = random_bumps(grid1d, rng)
    s = State(grid1d, f.values[None], (1.0,), 0.6)
    lap = apply_fractional_laplacian(f, 0.6).values
    assert energy(s, zero_spec(1)).kinetic == pytest.approx(0.5 * grid1d.cell_volume * np.sum(lap * f.values), rel=1e-12)


class TestCoercivityProbe:
    """Along a contracting dilation family, J >= quarter of the seminorms - C_fit."""

    @staticmethod
    def gap(grid, spec, lam, width=4.0):
        # Gaussian of width w/lam is the mass-preserving dilation of width w
        v = gaussian_profile(grid, width / lam).values
        e = energy(State(grid, np.stack([v, v]), (1.0, 1.0), 1.0), spec)
        return e.total - 0.5 * e.kinetic  # kinetic = half the sum of seminorms squared

    def test_fitted_constant_stable(self):
        grid, spec = make_grid(1, 40.0, 2048), example_spec(2)
        c_fit = -min(self.gap(grid, spec, lam) for lam in np.geomspace(1, 32, 64))
        assert 0 < c_fit < np.inf
        fine = [self.gap(grid, spec, lam) for lam in np.geomspace(1, 32, 256)]
        assert min(fine) >= -c_fit * (1 + 1e-3)
