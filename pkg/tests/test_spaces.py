import numpy as np
import pytest

from fsbp.spaces import (
    FamilyError,
    RankError,
    augment_to_even,
    make_family,
    orthonormalize,
    product_derivative_space,
    pull_back,
    sampled_gram,
    tchebyshev_screen,
)

from oracles import panel_integrate


# ---------------------------------------------------------------------- families

def test_monomial_family_trivial():
    space = make_family({"family": "monomial", "degree": 1, "interval": [0, 1]})
    xs = np.array([0.0, 0.3, 1.0])
    assert np.allclose(space.collocation(xs), np.column_stack([np.ones(3), xs]))
    assert np.allclose(space.collocation_deriv(xs), np.column_stack([np.zeros(3), np.ones(3)]))


def test_exponential_family_is_three_dimensional(exp3_space):
    assert exp3_space.dim == 3
    xs = np.linspace(0, 1, 7)
    assert np.allclose(exp3_space.basis[2].value_at(xs), np.exp(xs))
    assert np.allclose(exp3_space.basis[2].deriv_at(xs), np.exp(xs))


def test_trig_family_count(trig_space):
    # harmonics up to 2 give 2k + 1 = 5 functions
    assert trig_space.dim == 5
    labels = [f.label for f in trig_space.basis]
    assert labels[0] == "x^0"
    xs = np.linspace(0, 1, 9)
    assert np.allclose(trig_space.basis[1].value_at(xs), np.sin(np.pi * xs))
    assert np.allclose(trig_space.basis[4].value_at(xs), np.cos(2 * np.pi * xs))


def test_bessel_family():
    space = make_family({"family": "bessel", "orders": [0, 1], "interval": [0, 25]})
    from scipy.special import j0, j1

    xs = np.linspace(0.1, 24.0, 11)
    assert np.allclose(space.collocation(xs)[:, 0], j0(xs))
    assert np.allclose(space.collocation(xs)[:, 1], j1(xs))


def test_bessel_feature_flag():
    with pytest.raises(FamilyError):
        make_family({"family": "bessel", "orders": [0], "interval": [0, 25], "enabled": False})


@pytest.mark.parametrize("bad", [
    {"family": "unknown", "interval": [0, 1]},
    {"family": "monomial", "degree": 2, "interval": [1, 1]},
    {"family": "monomial", "degree": -1, "interval": [0, 1]},
    {"family": "trig", "max_harmonic": 0, "interval": [0, 1]},
    {"interval": [0, 1]},
    {"family": "monomial", "degree": 2},
])
def test_family_errors(bad):
    with pytest.raises(FamilyError):
        make_family(bad)


@pytest.mark.parametrize("spec", [
    {"family": "monomial", "degree": 3, "interval": [-1, 1]},
    {"family": "trig", "max_harmonic": 2, "interval": [0, 1]},
    {"family": "exponential", "rates": [1.0], "poly_degree": 1, "interval": [0, 1]},
    {"family": "bessel", "orders": [0, 2, 5], "interval": [0.0, 25.0]},
])
def test_derivatives_match_finite_differences(spec):
    # centred differences converge at second order to the analytic derivative
    space = make_family(spec)
    a, b = space.interval
    rng = np.random.default_rng(42)
    xs = rng.uniform(a + 0.05 * (b - a), b - 0.05 * (b - a), size=20)
    for f in space.basis:
        h1 = 1e-4 * (b - a)
        h2 = h1 / 2.0
        exact = f.deriv_at(xs)
        err1 = np.max(np.abs((f.value_at(xs + h1) - f.value_at(xs - h1)) / (2 * h1) - exact))
        err2 = np.max(np.abs((f.value_at(xs + h2) - f.value_at(xs - h2)) / (2 * h2) - exact))
        scale = max(1.0, np.max(np.abs(exact)))
        assert err1 <= 1e-5 * scale
        if err1 > 1e-11 * scale:  # above rounding, check the order
            assert err2 <= 0.3 * err1


# --------------------------------------------------- product-derivative space

def test_exp3_product_space_spans_expected_functions(exp3_space):
    product = product_derivative_space(exp3_space)
    assert product.dim == 5
    # span check: each expected function reconstructs from the basis
    xs = np.linspace(0, 1, 60)
    c = product.collocation(xs)
    q, _ = np.linalg.qr(c)
    for name, fn in [
        ("1", lambda x: np.ones_like(x)), ("x", lambda x: x),
        ("e^x", np.exp), ("x e^x", lambda x: x * np.exp(x)),
        ("e^2x", lambda x: np.exp(2 * x)),
    ]:
        v = fn(xs)
        resid = np.linalg.norm(v - q @ (q.T @ v)) / np.linalg.norm(v)
        assert resid < 1e-9, name


def test_constant_space_rank_collapse():
    space = make_family({"family": "monomial", "degree": 0, "interval": [0, 1]})
    with pytest.raises(RankError):
        product_derivative_space(space)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_monomial_product_space_dimension(n):
    space = make_family({"family": "monomial", "degree": n, "interval": [-1, 1]})
    assert product_derivative_space(space).dim == 2 * n


def test_product_space_fundamental_theorem(exp3_space):
    # integral of (f_i f_j)' equals the boundary difference of f_i f_j
    space = exp3_space
    a, b = space.interval
    from fsbp.integrate import integrate

    for i in range(space.dim):
        for j in range(i, space.dim):
            fi, fj = space.basis[i], space.basis[j]
            g = lambda x: fi.deriv_at(x) * fj.value_at(x) + fi.value_at(x) * fj.deriv_at(x)
            res = integrate(g, a, b)
            expected = (fi.value_at(np.array([b])) * fj.value_at(np.array([b]))
                        - fi.value_at(np.array([a])) * fj.value_at(np.array([a])))[0]
            assert res.value == pytest.approx(float(expected), abs=1e-10)


# ----------------------------------------------------------- orthonormalize

def test_orthonormalize_closed_form():
    space = make_family({"family": "monomial", "degree": 1, "interval": [-1, 1]})
    ortho = orthonormalize(space)
    xs = np.linspace(-1, 1, 21)
    c = ortho.collocation(xs)
    # 1/sqrt(2) and x sqrt(3/2), up to sign
    assert np.allclose(np.abs(c[:, 0]), 1.0 / np.sqrt(2.0), atol=1e-12)
    assert np.allclose(np.abs(c[:, 1]), np.abs(xs) * np.sqrt(1.5), atol=1e-12)


def test_orthonormalize_drops_duplicates():
    space = make_family({
        "family": "explicit", "interval": [0, 1],
        "functions": [
            (lambda x: np.ones_like(np.asarray(x, float)), lambda x: np.zeros_like(np.asarray(x, float))),
            (lambda x: np.asarray(x, float), lambda x: np.ones_like(np.asarray(x, float))),
            (lambda x: 2.0 * np.asarray(x, float), lambda x: 2.0 * np.ones_like(np.asarray(x, float))),
        ],
    })
    assert orthonormalize(space).dim == 2


def test_exp3_orthonormal_gram_is_identity(exp3_orthonormal):
    # recompute the Gram matrix with the independent panel oracle
    k = exp3_orthonormal.dim
    assert k == 6
    gram = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            fi, fj = exp3_orthonormal.basis[i], exp3_orthonormal.basis[j]
            gram[i, j] = gram[j, i] = panel_integrate(
                lambda x: fi.value_at(x) * fj.value_at(x), 0.0, 1.0, panels=800)
    assert np.max(np.abs(gram - np.eye(k))) < 1e-10


def test_orthonormalize_preserves_span(exp3_target, exp3_orthonormal):
    # each input basis function reconstructs from the output basis
    xs, w = np.polynomial.legendre.leggauss(64)
    xs = 0.5 * (xs + 1.0)
    w = 0.5 * w
    c_in = exp3_target.collocation(xs)
    c_out = exp3_orthonormal.collocation(xs)
    for j in range(exp3_target.dim):
        coeffs = c_out.T @ (w * c_in[:, j])      # L2 projection coefficients
        resid = c_in[:, j] - c_out @ coeffs
        l2 = np.sqrt(np.sum(w * resid**2))
        assert l2 <= 1e-8 * max(1.0, np.sqrt(np.sum(w * c_in[:, j] ** 2)))


def test_orthonormal_functions_carry_coefficients(exp3_orthonormal):
    xs = np.linspace(0, 1, 17)
    parent = exp3_orthonormal.parent
    for f in exp3_orthonormal.basis:
        assert f.coeffs is not None
        assert np.allclose(f.value_at(xs), parent.collocation(xs) @ f.coeffs, atol=1e-9)
        assert np.allclose(f.deriv_at(xs), parent.collocation_deriv(xs) @ f.coeffs, atol=1e-8)


# ---------------------------------------------------------------- augment

def test_augment_exp3_with_x_squared(exp3_space):
    product = product_derivative_space(exp3_space)
    assert product.dim == 5
    augmented = augment_to_even(product)
    assert augmented.dim == 6
    assert augmented.family_spec["augment"] == "x^2"


def test_augment_even_dimension_unchanged(trig_target):
    assert trig_target.dim % 2 == 0
    assert augment_to_even(trig_target) is trig_target


def test_augment_quadratic_monomials_gets_cubic():
    space = make_family({"family": "monomial", "degree": 2, "interval": [0, 1]})
    augmented = augment_to_even(space)
    assert augmented.dim == 4
    assert augmented.family_spec["augment"] == "x^3"


def test_augment_always_even_or_raises():
    for spec in [
        {"family": "monomial", "degree": 2, "interval": [0, 1]},
        {"family": "monomial", "degree": 3, "interval": [0, 1]},
        {"family": "trig", "max_harmonic": 1, "interval": [0, 1]},
    ]:
        out = augment_to_even(make_family(spec))
        assert out.dim % 2 == 0


# ------------------------------------------------------------------ screen

def test_screen_passes_monomials():
    space = make_family({"family": "monomial", "degree": 3, "interval": [-1, 1]})
    report = tchebyshev_screen(space, trials=100, rng_seed=0)
    assert report.verdict == "pass"
    assert report.tested_grids >= 100


def test_screen_fails_even_pair():
    # 1 and x^2 are singular at symmetric node pairs
    space = make_family({
        "family": "explicit", "interval": [-1, 1],
        "functions": [
            (lambda x: np.ones_like(np.asarray(x, float)), lambda x: np.zeros_like(np.asarray(x, float))),
            (lambda x: np.asarray(x, float) ** 2, lambda x: 2.0 * np.asarray(x, float)),
        ],
    })
    report = tchebyshev_screen(space, trials=100, rng_seed=0)
    assert report.verdict == "fail"


def test_screen_passes_exp3(exp3_orthonormal):
    report = tchebyshev_screen(exp3_orthonormal, trials=200, rng_seed=1)
    assert report.verdict == "pass"


# ---------------------------------------------------------------- pull-back

def test_pull_back_preserves_orthonormality(exp3_orthonormal):
    ref = pull_back(exp3_orthonormal, (-1.0, 1.0), renormalize=True)
    gram = sampled_gram(ref)
    assert np.max(np.abs(gram - np.eye(ref.dim))) < 1e-8


def test_pull_back_chain_rule(exp3_space):
    ref = pull_back(exp3_space, (-1.0, 1.0))
    ss = np.linspace(-1, 1, 9)
    xs = 0.5 * (ss + 1.0)
    assert np.allclose(ref.collocation(ss), exp3_space.collocation(xs))
    assert np.allclose(ref.collocation_deriv(ss), 0.5 * exp3_space.collocation_deriv(xs))
