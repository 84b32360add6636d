import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from besovlab.errors import GridTooSmall, InvalidExponent
from besovlab.grid import GridSpec, build_domain
from besovlab.multiplier import (
    MultiplierParams,
    SobolevGrid,
    amalgam_norms,
    amalgam_operator_bracket,
    build_cubes,
    fourier_weight_integral,
    gaussian_profile,
    identity_family,
    l1_to_amalgam_norm,
    lp_operator_norm,
    script_A_norm,
    semigroup_family,
    sobolev_norm_1d,
    verify_gaussian_bound,
    verify_lemma_2_1,
    verify_lemma_2_2,
    verify_resolvent_factorization,
)
from besovlab.spectral import operator_matrix


def test_gaussian_sobolev_closed_form():
    # unitary transform of exp(-x²/2) is exp(-ξ²/2); ∫(1+ξ²)e^{-ξ²} = 3√π/2
    assert sobolev_norm_1d(gaussian_profile, 1.0) == pytest.approx(np.sqrt(1.5 * np.sqrt(np.pi)), rel=1e-8)
    assert sobolev_norm_1d(gaussian_profile, 0.0) == pytest.approx(np.pi**0.25, rel=1e-8)


def test_fourier_weight_closed_form():
    assert fourier_weight_integral(gaussian_profile, 0) == pytest.approx(np.sqrt(2 * np.pi), rel=1e-8)
    # N = 2: ∫(1+ξ²)e^{-ξ²/2} = 2√(2π)
    assert fourier_weight_integral(gaussian_profile, 2) == pytest.approx(2 * np.sqrt(2 * np.pi), rel=1e-8)


def test_grid_too_small():
    with pytest.raises(GridTooSmall):
        sobolev_norm_1d(lambda x: np.exp(-np.abs(x) / 50), 1.0, SobolevGrid(L=8.0))
    with pytest.raises(ValueError):
        SobolevGrid(m=1000)


def test_params_defaults_and_validation():
    prm = MultiplierParams.defaults(2)
    assert (prm.N, prm.beta, prm.delta, prm.M) == (2, 1.0, 0.5, 1.0)
    assert prm.sobolev_order == 3.0
    with pytest.raises(ValueError):
        MultiplierParams(N=0)
    with pytest.raises(ValueError):
        MultiplierParams(N=1, beta=0.2)
    with pytest.raises(ValueError):
        MultiplierParams(N=1, a=3.0)


def test_cubes_partition_sites():
    dom = build_domain(GridSpec.square(10))
    for th in (1.0, 0.25, 1 / 16):
        cubes = build_cubes(dom, th)
        assert cubes.indicator().sum() == dom.n
        side = np.sqrt(th)
        owner = cubes.centers()[cubes.membership]
        assert np.all(np.abs(dom.coords - owner) <= side / 2 + 1e-9)
    with pytest.raises(ValueError):
        build_cubes(dom, 0.0)


def test_amalgam_dominates_l2_and_singleton(line63):
    dec, _ = line63
    f = np.random.default_rng(0).standard_normal(63)
    l2 = np.sqrt(dec.weight * np.sum(f**2))
    coarse = build_cubes(dec.domain, 100.0)  # one cube holds everything
    assert coarse.size == 1
    assert amalgam_norms(f, coarse) == pytest.approx(l2)
    fine = build_cubes(dec.domain, 1e-4)
    assert amalgam_norms(f, fine) == pytest.approx(dec.weight**0.5 * np.sum(np.abs(f)))


@settings(max_examples=20, deadline=None)
@given(st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3), st.integers(0, 1000))
def test_script_A_homogeneous(line63, c, seed):
    dec, _ = line63
    cubes = build_cubes(dec.domain, 1 / 16)
    T = np.random.default_rng(seed).standard_normal((63, 63))
    assert script_A_norm(c * T, cubes, 1) == pytest.approx(abs(c) * script_A_norm(T, cubes, 1), rel=1e-10)
    # zeroing entries (support restriction) cannot increase it
    mask = np.zeros_like(T)
    mask[:, :30] = 1
    assert script_A_norm(T * mask, cubes, 1) <= script_A_norm(T, cubes, 1) * (1 + 1e-12)


def test_operator_bracket_and_identity(line63):
    dec, _ = line63
    cubes = build_cubes(dec.domain, 1 / 16)
    lo, hi = amalgam_operator_bracket(np.eye(63), cubes)
    assert lo == pytest.approx(1.0) and hi == pytest.approx(1.0)
    T = operator_matrix(dec, np.exp(-1e-3 * dec.eigenvalues))
    lo, hi = amalgam_operator_bracket(T, cubes)
    assert 0 < lo <= hi * (1 + 1e-12)


def test_l1_to_amalgam_identity(line63):
    dec, _ = line63
    cubes = build_cubes(dec.domain, 1 / 16)
    # a point source e_y/h has amalgam norm sqrt(h)/h
    assert l1_to_amalgam_norm(np.eye(63), cubes) == pytest.approx(dec.weight**-0.5)


def test_lp_operator_norm():
    T = np.array([[1.0, -2.0], [3.0, 4.0]])
    assert lp_operator_norm(T, 1) == 6.0
    assert lp_operator_norm(T, np.inf) == 7.0
    assert lp_operator_norm(T, 2) == pytest.approx(np.linalg.svd(T, compute_uv=False)[0])
    with pytest.raises(InvalidExponent):
        lp_operator_norm(T, 3)


def test_block_multiplier_rows(line255):
    dec, part = line255
    prm = MultiplierParams.defaults(1)
    for fam, name in ((identity_family(), "identity"), (semigroup_family(1.0), "semigroup")):
        js = [j for j in part.js if j >= 2]
        rows = verify_lemma_2_1(dec, part, fam, js, [1, 2, np.inf], prm, family=name)
        assert all(r.passed for r in rows), [r for r in rows if not r.passed]
        assert {r.suite for r in rows} == {"lemma21.ratio", "lemma21.l2_oracle", "lemma21.uniformity"}


def test_resolvent_factorization(line63):
    dec, _ = line63
    prm = MultiplierParams.defaults(1)
    for j in (2, 4):
        G = lambda lam, j=j: np.exp(-lam / 4.0**j)
        assert verify_resolvent_factorization(dec, G, j, prm) <= 1e-8


def test_amalgam_estimate_rows(line63):
    dec, _ = line63
    rows = verify_lemma_2_2(dec, MultiplierParams.defaults(1), thetas=[1.0, 0.25, 1 / 16])
    assert all(r.passed for r in rows)
    assert rows[-1].suite == "lemma22.resolvent_power_spread"


def test_gaussian_bound_nonneg_and_diagonal(line63):
    dec, _ = line63
    h = dec.domain.h
    rows = verify_gaussian_bound(dec, [h * h, 64 * h * h, 256 * h * h])
    for r in rows:
        if r.suite in ("gaussian.nonneg", "gaussian.diagonal", "gaussian.ground_state"):
            assert r.passed, r
    # well above the lattice scale the full Gaussian bound holds
    late = [r for r in rows if r.suite == "gaussian.offdiagonal" and r.params["t"] >= 64 * h * h]
    assert late and all(r.passed for r in late)
