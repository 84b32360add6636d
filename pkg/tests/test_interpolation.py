import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from besovlab.besov import besov_norms
from besovlab.errors import InvalidExponent, QuadratureUnresolved
from besovlab.grid import GridSpec
from besovlab.interpolation import (
    InterpolationCouple,
    brute_force_k,
    interpolation_norm,
    interpolation_norms,
    k_functional,
    k_values,
    single_block_constant,
    split_lines,
    verify_interpolation_identity,
)
from besovlab.probes import gaussian_ensemble
from besovlab.semigroup import dyadic_interval
from conftest import make

COUPLE = InterpolationCouple(p=2, s0=0.0, q0=2, s1=1.0, q1=2, theta=0.5, q=2)


@pytest.fixture(scope="module")
def small():
    return make(GridSpec.interval(31))


def test_couple_validation():
    with pytest.raises(ValueError):
        InterpolationCouple(2, 1, 2, 1, 2, 0.5, 2)
    with pytest.raises(ValueError):
        InterpolationCouple(2, 0, 2, 1, 2, 1.0, 2)
    with pytest.raises(InvalidExponent):
        InterpolationCouple(0.5, 0, 2, 1, 2, 0.5, 2)
    c = InterpolationCouple(2, 0, 2, 2, 2, 0.25, 2)
    assert c.s == 0.5 and c.target().s == 0.5 and c.endpoint(1).s == 2


def test_k_bounded_by_endpoints(small):
    dec, part = small
    C = gaussian_ensemble(dec, 3, 0)
    N0, N1 = split_lines(dec, part, C, COUPLE)
    n0 = besov_norms(dec, part, C, COUPLE.endpoint(0))
    n1 = besov_norms(dec, part, C, COUPLE.endpoint(1))
    for t in (1e-3, 0.1, 1.0, 10.0):
        K = k_values(N0, N1, t)[0]
        assert np.all(K <= np.minimum(n0, t * n1) * (1 + 1e-12))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_k_monotone_and_concave(small, seed):
    dec, part = small
    C = gaussian_ensemble(dec, 1, seed)
    N0, N1 = split_lines(dec, part, C, COUPLE)
    t = np.geomspace(1e-4, 1e3, 200)
    K = k_values(N0, N1, t)[:, 0]
    assert np.all(np.diff(K) >= -1e-12 * K[1:])
    # concave: K(t)/t non-increasing
    assert np.all(np.diff(K / t) <= 1e-12 * (K / t)[:-1])


def test_k_functional_scalar(small):
    dec, part = small
    f = dec.domain.field(np.sin(np.arange(31.0)))
    C = dec.analyze(f.values)[:, None]
    N0, N1 = split_lines(dec, part, C, COUPLE)
    assert k_functional(dec, part, f, 0.3, COUPLE) == pytest.approx(k_values(N0, N1, 0.3)[0, 0])
    with pytest.raises(ValueError):
        k_functional(dec, part, f, 0.0, COUPLE)


@pytest.mark.parametrize("t", [0.05, 0.5, 5.0])
def test_threshold_not_worse_than_brute_force_by_much(small, t):
    # thresholds are a subset of block assignments, so brute force is at most as large
    dec, part = small
    C = gaussian_ensemble(dec, 4, 1)
    brute = brute_force_k(dec, part, C, t, COUPLE)
    N0, N1 = split_lines(dec, part, C, COUPLE)
    thr = k_values(N0, N1, t)[0]
    assert np.all(brute <= thr * (1 + 1e-12))
    assert np.all(thr <= 2.5 * brute)


def test_brute_force_limit(line255):
    dec, part = line255
    with pytest.raises(ValueError):
        brute_force_k(dec, part, np.ones((dec.n, 1)), 1.0, COUPLE, max_blocks=3)


def _brute_quadrature(N0, N1, th, q):
    """Independent oracle: dense log-grid trapezoid of the K-integral."""
    # wide enough that the power tails beyond both ends are below 1e-9 relative
    lt = np.linspace(np.log(1e-30), np.log(1e40), 1400001)
    t = np.exp(lt)
    K = np.min(N0[None, :] + t[:, None] * N1[None, :], axis=1)
    vals = (t ** (-th) * K) ** q
    return np.trapezoid(vals, lt) ** (1 / q)


@pytest.mark.parametrize("q, th", [(2.0, 0.5), (1.0, 0.3), (3.0, 0.7)])
def test_norm_against_dense_quadrature(small, q, th):
    dec, part = small
    couple = InterpolationCouple(2, 0.0, 2, 1.0, 2, th, q)
    C = gaussian_ensemble(dec, 1, 5)
    N0, N1 = split_lines(dec, part, C, couple)
    assert interpolation_norms(dec, part, C, couple)[0] == pytest.approx(
        _brute_quadrature(N0[:, 0], N1[:, 0], th, q), rel=1e-5
    )


def test_sup_norm(small):
    dec, part = small
    couple = InterpolationCouple(2, 0.0, 2, 1.0, 2, 0.4, np.inf)
    C = gaussian_ensemble(dec, 1, 6)
    N0, N1 = split_lines(dec, part, C, couple)
    t = np.geomspace(1e-8, 1e8, 200001)
    dense = np.max(t**-0.4 * k_values(N0, N1, t)[:, 0])
    # the grid can only miss the peak by the relative spacing times θ
    got = interpolation_norms(dec, part, C, couple)[0]
    assert dense * (1 - 1e-12) <= got <= dense * (1 + 0.4 * (t[1] / t[0] - 1))


@pytest.mark.parametrize("th, q", [(0.5, 2.0), (0.25, 1.0), (0.6, 4.0), (0.5, np.inf)])
def test_single_block_closed_form(th, q):
    # a field in exactly one block: K(t) = min(a, tb), norm = a^{1-θ} b^θ (θ(1-θ)q)^{-1/q}
    dec, part = make(dyadic_interval(63, 3))
    couple = InterpolationCouple(2, 0.0, 2, 1.0, 2, th, q)
    e = np.zeros((dec.n, 1))
    e[7] = 1.0
    ratio = interpolation_norms(dec, part, e, couple)[0] / besov_norms(dec, part, e, couple.target())[0]
    assert ratio == pytest.approx(single_block_constant(couple), rel=1e-8)


def test_norm_scaling_and_zero(small):
    dec, part = small
    f = dec.domain.field(np.cos(np.arange(31.0) / 2))
    v = interpolation_norm(dec, part, f, COUPLE)
    assert interpolation_norm(dec, part, 3.0 * f, COUPLE) == pytest.approx(3 * v, rel=1e-10)
    assert interpolation_norms(dec, part, np.zeros((dec.n, 1)), COUPLE)[0] == 0.0


def test_triangle_inequality(small):
    dec, part = small
    C = gaussian_ensemble(dec, 2, 8)
    a, b = interpolation_norms(dec, part, C, COUPLE)
    ab = interpolation_norms(dec, part, C[:, :1] + C[:, 1:], COUPLE)[0]
    # threshold K is within a constant of the true K, so allow the same slack
    assert ab <= 2.5 * (a + b)


def test_non_integrable_raises(small):
    dec, part = small
    # θ close to an endpoint with a single-line envelope: a field with one endpoint norm zero
    couple = InterpolationCouple(2, 0.0, 2, 1.0, 2, 0.5, 2)
    from besovlab.interpolation import _norm_from_lines

    assert _norm_from_lines(np.array([1.0]), np.array([0.0]), 0.5, 2.0) == np.inf
    assert couple.q == 2.0
    with pytest.raises(QuadratureUnresolved):
        import besovlab.interpolation as mod

        orig = mod.split_lines
        mod.split_lines = lambda *a: (np.array([[1.0]]), np.array([[0.0]]))
        try:
            interpolation_norms(dec, part, np.ones((dec.n, 1)), couple)
        finally:
            mod.split_lines = orig


def test_verify_identity_rows(line255):
    dec, part = line255
    rows = verify_interpolation_identity(dec, part, gaussian_ensemble(dec, 8, 0), COUPLE)
    assert rows[0].suite == "interpolation.bracket" and rows[0].passed
