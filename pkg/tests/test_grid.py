import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from besovlab.errors import DomainMismatch, EmptyDomain, InvalidExponent, MaskFormatError
from besovlab.grid import (
    Field,
    GridSpec,
    assemble_laplacian,
    build_domain,
    conjugate_exponent,
    inner,
    lp_norm,
    lp_norms,
    read_mask_file,
    write_mask_file,
)


def test_interval_geometry():
    dom = build_domain(GridSpec.interval(7, 0.0, 2.0))
    assert dom.n == 7 and dom.d == 1
    assert dom.h == pytest.approx(0.25)
    np.testing.assert_allclose(dom.coords[:, 0], 0.25 * np.arange(1, 8))
    assert dom.center_site() == 3


def test_square_sites_row_major():
    dom = build_domain(GridSpec.rectangle(3, 2))
    assert dom.n == 6
    # second site is one step in x
    np.testing.assert_allclose(dom.coords[1] - dom.coords[0], [dom.h, 0.0])
    np.testing.assert_array_equal(dom.site_index, [[0, 1, 2], [3, 4, 5]])


def test_box_must_match_mask():
    with pytest.raises(ValueError):
        GridSpec(1, 0.1, ((0.0, 1.0),), np.ones(5, dtype=bool))


def test_empty_mask():
    with pytest.raises(EmptyDomain):
        build_domain(GridSpec(1, 0.25, ((0.0, 1.0),), np.zeros(3, dtype=bool)))


def test_from_predicate_disk():
    spec = GridSpec.from_predicate(2, 0.1, [(-1, 1), (-1, 1)], lambda x, y: x**2 + y**2 < 0.5)
    dom = build_domain(spec)
    assert np.all(np.sum(dom.coords**2, axis=1) < 0.5)
    assert dom.n == int(spec.mask.sum())


@settings(max_examples=25, deadline=None)
@given(arrays(bool, st.tuples(st.integers(1, 6), st.integers(1, 7))).filter(lambda m: m.any()))
def test_mask_file_roundtrip(tmp_path_factory, mask):
    h = 0.125
    ny, nx = mask.shape
    spec = GridSpec(2, h, ((0.0, (nx + 1) * h), (0.0, (ny + 1) * h)), mask)
    path = tmp_path_factory.mktemp("mask") / "m.txt"
    write_mask_file(spec, path)
    back = read_mask_file(path)
    np.testing.assert_array_equal(back.mask, mask)
    assert back.h == h and back.dimension == 2


@pytest.mark.parametrize(
    "text",
    ["", "3 0.1 4\n1111\n", "1 0.1 4\n11x1\n", "2 0.1 2 2\n11\n", "1 zz 3\n111\n"],
)
def test_mask_file_errors(tmp_path, text):
    p = tmp_path / "bad.txt"
    p.write_text(text)
    with pytest.raises(MaskFormatError):
        read_mask_file(p)


def test_laplacian_stencil():
    dom = build_domain(GridSpec.interval(4))
    L = assemble_laplacian(dom).dense() * dom.h**2
    expected = 2 * np.eye(4) - np.eye(4, k=1) - np.eye(4, k=-1)
    np.testing.assert_allclose(L, expected)


def test_laplacian_masked_neighbours():
    mask = np.array([[1, 1, 0], [0, 1, 1]], dtype=bool)
    h = 0.25
    dom = build_domain(GridSpec(2, h, ((0.0, 1.0), (0.0, 0.75)), mask))
    L = assemble_laplacian(dom).dense() * h**2
    assert np.all(np.diag(L) == 4)
    # sites 0-1 are x-neighbours, 1-2 are y-neighbours, 2-3 x-neighbours
    assert L[0, 1] == L[1, 2] == L[2, 3] == -1
    assert L[0, 2] == 0 and L[0, 3] == 0
    assert assemble_laplacian(dom).asymmetry() == 0


def test_lp_norm_constant():
    dom = build_domain(GridSpec.interval(9))
    f = dom.field(np.full(9, 2.0))
    length = 9 * dom.h
    assert lp_norm(f, 1) == pytest.approx(2 * length)
    assert lp_norm(f, 2) == pytest.approx(2 * np.sqrt(length))
    assert lp_norm(f, np.inf) == 2.0
    assert lp_norm(f, 3.5) == pytest.approx(2 * length ** (1 / 3.5))


def test_lp_norm_large_p_no_overflow():
    vals = np.array([1e200, 1e199])
    assert np.isfinite(lp_norms(vals, 50, 1.0))


vec = arrays(float, 12, elements=st.floats(-1e3, 1e3, allow_nan=False))


@settings(max_examples=50, deadline=None)
@given(vec, vec, st.sampled_from([1.0, 1.5, 2.0, 3.0, np.inf]))
def test_holder_and_minkowski(a, b, p):
    w = 0.1
    q = conjugate_exponent(p)
    lhs = w * np.sum(np.abs(a * b))
    assert lhs <= lp_norms(a, p, w) * lp_norms(b, q, w) * (1 + 1e-12) + 1e-9
    assert lp_norms(a + b, p, w) <= (lp_norms(a, p, w) + lp_norms(b, p, w)) * (1 + 1e-12) + 1e-9


def test_conjugate_exponent():
    assert conjugate_exponent(1) == np.inf
    assert conjugate_exponent(np.inf) == 1
    assert conjugate_exponent(4) == pytest.approx(4 / 3)
    with pytest.raises(InvalidExponent):
        conjugate_exponent(0.5)
    with pytest.raises(InvalidExponent):
        lp_norms(np.ones(3), 0.9, 1.0)


def test_field_arithmetic_and_mismatch():
    d1 = build_domain(GridSpec.interval(3))
    d2 = build_domain(GridSpec.interval(3))
    f = d1.field([1.0, 2.0, 3.0])
    g = 2 * f - f / 2
    np.testing.assert_allclose(g.values, [1.5, 3.0, 4.5])
    assert inner(f, f) == pytest.approx(d1.h * 14)
    with pytest.raises(DomainMismatch):
        f + d2.field([1.0, 1.0, 1.0])
    with pytest.raises(DomainMismatch):
        inner(f, d2.zeros())
    with pytest.raises(ValueError):
        Field(d1, np.ones(4))
