import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracgs.nonlinearity import (
    Coefficient,
    NonlinearitySpec,
    Term,
    asymptotic_spec,
    critical_growth,
    eval_dF,
    eval_F,
    example_spec,
    parse_term,
    power_spec,
    zero_spec,
)
from fracgs.spectral import make_grid


def _fd(spec, j, x, u, step=1e-6):
    """Centred finite difference of eval_F in component j."""
    h = step * max(1.0, abs(u[j]))
    up, dn = np.array(u, float), np.array(u, float)
    up[j] += h
    dn[j] -= h
    return (eval_F(spec, x, up) - eval_F(spec, x, dn)) / (2 * h)


class TestCoefficient:
    def test_kinds(self):
        x = np.array([[0.0], [1.0], [-2.0]])
        np.testing.assert_allclose(Coefficient("const", 2.0)(x), [2, 2, 2])
        np.testing.assert_allclose(Coefficient("expdecayplus1", 1.0)(x), [2, np.exp(-1) + 1, np.exp(-2) + 1])
        np.testing.assert_allclose(Coefficient("invoneplus", 3.0)(x), [3, 1.5, 1])
        np.testing.assert_allclose(Coefficient("powlaw", 1.0, t=1.0)(x[1:]), [1, 0.5])

    def test_powlaw_origin_regularised(self):
        c = Coefficient("powlaw", 1.0, t=1.5)
        assert c(np.zeros((1, 1)), origin_eps=0.25)[0] == pytest.approx(0.25**-1.5)

    def test_periodic_interpolation(self):
        c = Coefficient("periodic", 1.0, table=np.array([1.0, 3.0]), period=(2.0,))
        x = np.array([[0.0], [0.5], [1.0], [2.0], [-1.0]])
        np.testing.assert_allclose(c(x), [1.0, 2.0, 3.0, 1.0, 3.0])

    @pytest.mark.parametrize("kw", [
        dict(kind="nope"), dict(kind="const", kappa=-1.0), dict(kind="powlaw", t=2.0),
        dict(kind="periodic"), dict(kind="periodic", table=np.ones(3), period=(1.0, 1.0)),
    ])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            Coefficient(**kw)

    def test_limits(self):
        assert Coefficient("expdecayplus1", 2.0).limit() == Coefficient("const", 2.0)
        assert Coefficient("invoneplus", 1.0).limit() is None
        assert Coefficient("powlaw", 1.0, t=0.5).limit() is None
        assert Coefficient("powlaw", 1.0, t=0.0).limit() == Coefficient("const", 1.0)


class TestEvalF:
    def test_example2_at_origin(self):
        # mu1 + mu2 + (e^0 + 1) * 1 * 1
        assert eval_F(example_spec(2), [0.0], [1.0, 1.0]) == pytest.approx(4.0, rel=1e-15)

    def test_example3_damped_at_origin(self):
        # q(0) * 1 / (1 + 1) * 1 = 1, plus mu1 + mu2
        assert eval_F(example_spec(3), [0.0], [1.0, 1.0]) == pytest.approx(3.0, rel=1e-15)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_zero_amplitude(self, n):
        spec = example_spec(n)
        assert eval_F(spec, [0.3], np.zeros(spec.m)) == 0.0

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_nonnegative(self, n, rng):
        spec = example_spec(n)
        x = rng.uniform(-20, 20, size=(200, 1))
        u = rng.normal(size=(spec.m, 200)) * 10.0 ** rng.uniform(-3, 3, size=200)
        assert np.all(spec.evaluate(x, u) >= 0)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            eval_F(example_spec(2), [0.0], [np.inf, 1.0])


class TestEvalDF:
    def test_power_rule(self):
        assert eval_dF(power_spec(1, 4.0), 0, [0.0], [2.0]) == pytest.approx(32.0, rel=1e-15)

    def test_cross_term(self):
        spec = NonlinearitySpec(2, (Term(Coefficient("expdecayplus1"), (2.0, 2.0)),))
        assert eval_dF(spec, 0, [0.0], [1.0, 1.0]) == pytest.approx(4.0, rel=1e-15)

    def test_damped_term_closed_form_and_fd(self):
        k1 = 3.2
        spec = NonlinearitySpec(2, (Term(Coefficient("expdecayplus1"), (k1, 2.2), (1.0, 0.0)),))
        analytic = eval_dF(spec, 0, [0.0], [1.0, 1.0])
        assert analytic == pytest.approx((2 * k1 - 1) / 2, rel=1e-14)
        assert _fd(spec, 0, [0.0], [1.0, 1.0]) == pytest.approx(analytic, rel=1e-6)

    def test_zero_at_zero_component(self):
        assert eval_dF(example_spec(3), 0, [1.0], [0.0, 2.0]) == 0.0

    def test_odd_in_component(self):
        spec = example_spec(1)
        assert eval_dF(spec, 1, [0.5], [0.7, -1.3]) == pytest.approx(-eval_dF(spec, 1, [0.5], [0.7, 1.3]))

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_matches_finite_differences(self, n):
        spec = example_spec(n)
        rng = np.random.default_rng(n)
        worst = 0.0
        for _ in range(1000 // 4):
            x = rng.uniform(-10, 10, size=1)
            u = rng.normal(size=spec.m) * 10.0 ** rng.uniform(-1, 1, size=spec.m)
            for j in range(spec.m):
                a, b = eval_dF(spec, j, x, u), _fd(spec, j, x, u)
                worst = max(worst, abs(a - b) / max(abs(a), 1e-8))
        assert worst <= 1e-6

    def test_index_checked(self):
        with pytest.raises(IndexError):
            eval_dF(example_spec(2), 2, [0.0], [1.0, 1.0])


class TestAsymptotic:
    def test_example1(self):
        inf = asymptotic_spec(example_spec(1, mu1=0.5, mu2=2.0))
        # p-term dropped, q -> 1, constants kept
        assert len(inf.terms) == 3
        rng = np.random.default_rng(0)
        for _ in range(20):
            x, u = rng.uniform(-5, 5, size=1), rng.normal(size=2)
            a = np.abs(u)
            expected = 0.5 * a[0] ** 3 + 2.0 * a[1] ** 3 + a[0] ** 2.2 * a[1] ** 2.2
            assert eval_F(inf, x, u) == pytest.approx(expected, rel=1e-14)

    def test_example2_q_to_one(self):
        inf = asymptotic_spec(example_spec(2))
        assert inf.terms[2].coeff == Coefficient("const", 1.0)

    def test_constant_spec_fixed(self):
        spec = example_spec(4)
        spec = NonlinearitySpec(3, spec.terms[:-1])
        assert asymptotic_spec(spec) == spec

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_idempotent(self, n):
        inf = asymptotic_spec(example_spec(n))
        assert asymptotic_spec(inf) == inf

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_below_F(self, n, rng):
        spec = example_spec(n)
        inf = asymptotic_spec(spec)
        x = rng.uniform(-20, 20, size=(500, 1))
        u = rng.normal(size=(spec.m, 500)) * 10.0 ** rng.uniform(-3, 3, size=500)
        assert np.all(inf.evaluate(x, u) <= spec.evaluate(x, u))


class TestValidation:
    @pytest.mark.parametrize("n,alpha", [(1, 3.0), (2, 1.0), (3, 2.0), (4, 4.0)])
    def test_examples_valid(self, n, alpha):
        example_spec(n).validate(alpha, 1)

    def test_supercritical_names_bound(self):
        bound = critical_growth(1.0, 1)
        with pytest.raises(ValueError, match="2 \\+ 4\\*alpha/N = 6"):
            power_spec(1, bound + 0.1).validate(1.0, 1)

    def test_low_growth_rejected(self):
        with pytest.raises(ValueError):
            power_spec(1, 2.0).validate(1.0, 1)

    def test_sub_unit_power_rejected(self):
        spec = NonlinearitySpec(2, (Term(Coefficient("const"), (0.5, 3.0)),))
        with pytest.raises(ValueError):
            spec.validate(2.0, 1)

    def test_term_length_checked(self):
        with pytest.raises(ValueError):
            NonlinearitySpec(2, (Term(Coefficient("const"), (4.0,)),))

    def test_zero_spec_valid(self):
        zero_spec(2).validate(1.0, 1)


class TestParseTerm:
    def test_roundtrip(self):
        t = parse_term("coeff=expdecayplus1:1 powers=3.2,2.2 damping=1,0", m=2)
        assert t == Term(Coefficient("expdecayplus1", 1.0), (3.2, 2.2), (1.0, 0.0))
        assert parse_term(t.describe(), m=2) == t

    def test_powlaw(self):
        assert parse_term("coeff=powlaw:2,0.5 powers=4").coeff == Coefficient("powlaw", 2.0, t=0.5)

    def test_periodic_from_file(self, tmp_path):
        np.savetxt(tmp_path / "tab.txt", [1.0, 2.0, 3.0])
        t = parse_term("coeff=periodic:tab.txt,3 powers=4", base_dir=tmp_path)
        assert t.coeff.is_periodic and t.coeff.period == (3.0,)

    @pytest.mark.parametrize("text", [
        "coeff=const:1", "powers=4", "coeff=bogus:1 powers=4", "coeff=const:1 powers=4 extra=1",
        "coeff=const:1 powers=4 junk", "coeff=powlaw:1 powers=4", "coeff=periodic:missing.txt,1 powers=4",
    ])
    def test_rejects(self, text):
        with pytest.raises(ValueError):
            parse_term(text)

    def test_component_count(self):
        with pytest.raises(ValueError):
            parse_term("coeff=const:1 powers=4", m=2)


class TestGridFields:
    def test_coefficient_fields_cached_and_readonly(self):
        g = make_grid(1, 10.0, 16)
        spec = example_spec(2)
        a, b = spec.coefficient_fields(g), spec.coefficient_fields(g)
        assert a is b
        assert not a[2].flags.writeable

    @settings(max_examples=25, deadline=None)
    @given(u1=st.floats(-50, 50), u2=st.floats(-50, 50))
    def test_on_grid_matches_pointwise(self, u1, u2):
        g = make_grid(1, 10.0, 16)
        spec = example_spec(2)
        u = np.stack([np.full(16, u1), np.full(16, u2)])
        vals = spec.on_grid(g, u)
        assert vals[3] == pytest.approx(eval_F(spec, [g.axis[3]], [u1, u2]), rel=1e-14, abs=1e-300)
