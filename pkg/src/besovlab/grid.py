"""Masked uniform lattices, the discrete Dirichlet Laplacian and weighted L^p norms.

Lattice sites sit at ``lo + (i + 1) * h`` along every axis, ``i = 0 .. n_axis - 1``,
so a box side has length ``(n_axis + 1) * h`` and the box faces carry the
implicit zero boundary values.  A 2-D mask has shape ``(ny, nx)``: one row per
y-slab, as in the mask file format.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DomainMismatch, EmptyDomain, InvalidExponent, MaskFormatError

_BOX_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Geometry of a masked lattice.

    Parameters
    ----------
    dimension : int
        1 or 2.
    h : float
        Lattice spacing.
    bounding_box : sequence of (lo, hi) pairs
        One pair per axis, x first.
    mask : array_like of bool
        Interior sites; shape ``(nx,)`` or ``(ny, nx)``.
    """

    dimension: int
    h: float
    bounding_box: tuple
    mask: np.ndarray

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool)
        box = tuple((float(lo), float(hi)) for lo, hi in self.bounding_box)
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        if not self.h > 0:
            raise ValueError(f"cell width must be positive, got {self.h}")
        if mask.ndim != self.dimension:
            raise ValueError(f"mask has {mask.ndim} axes for a {self.dimension}-D grid")
        if len(box) != self.dimension:
            raise ValueError("bounding box needs one (lo, hi) pair per axis")
        # axis order of the mask is (y, x); the box is (x, y)
        sizes = mask.shape[::-1]
        for (lo, hi), size in zip(box, sizes):
            cells = (hi - lo) / self.h
            if abs(cells - (size + 1)) > _BOX_RTOL * max(1.0, cells):
                raise ValueError(
                    f"box side {hi - lo} is not (mask size + 1) * h = {(size + 1) * self.h}"
                )
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "bounding_box", box)
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def interval(cls, n: int, a: float = 0.0, b: float = 1.0) -> "GridSpec":
        """``n`` interior sites on ``(a, b)``."""
        h = (b - a) / (n + 1)
        return cls(1, h, ((a, b),), np.ones(n, dtype=bool))

    @classmethod
    def rectangle(cls, nx: int, ny: int, width: float = 1.0) -> "GridSpec":
        """``nx * ny`` sites on ``(0, width) x (0, height)`` with square cells."""
        h = width / (nx + 1)
        return cls(2, h, ((0.0, width), (0.0, (ny + 1) * h)), np.ones((ny, nx), dtype=bool))

    @classmethod
    def square(cls, m: int, side: float = 1.0) -> "GridSpec":
        return cls.rectangle(m, m, side)

    @classmethod
    def from_predicate(
        cls,
        dimension: int,
        h: float,
        bounding_box: Sequence[tuple],
        inside: Callable[..., np.ndarray],
    ) -> "GridSpec":
        """Keep the sites whose centres satisfy ``inside(x[, y])``."""
        axes = []
        for lo, hi in bounding_box:
            size = int(round((hi - lo) / h)) - 1
            axes.append(lo + h * np.arange(1, size + 1))
        if dimension == 1:
            mask = np.asarray(inside(axes[0]), dtype=bool)
        else:
            xx, yy = np.meshgrid(axes[0], axes[1])
            mask = np.asarray(inside(xx, yy), dtype=bool)
        return cls(dimension, h, tuple(bounding_box), mask)


def read_mask_file(path) -> GridSpec:
    """Parse a mask file: header ``d h nx [ny]`` then rows of 0/1 characters."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise MaskFormatError(f"{path}: empty mask file")
    head = lines[0].split()
    try:
        d = int(head[0])
        h = float(head[1])
        sizes = [int(v) for v in head[2:]]
    except (ValueError, IndexError) as exc:
        raise MaskFormatError(f"{path}: bad header {lines[0]!r}") from exc
    if d not in (1, 2) or len(sizes) != d:
        raise MaskFormatError(f"{path}: header must read 'd h nx [ny]' with d in {{1,2}}")
    nx = sizes[0]
    ny = sizes[1] if d == 2 else 1
    rows = lines[1:]
    if len(rows) != ny:
        raise MaskFormatError(f"{path}: expected {ny} mask rows, found {len(rows)}")
    for r, row in enumerate(rows):
        if len(row) != nx or set(row) - {"0", "1"}:
            raise MaskFormatError(f"{path}: row {r} must be {nx} characters of '0'/'1'")
    mask = np.array([[c == "1" for c in row] for row in rows], dtype=bool)
    if d == 1:
        mask = mask[0]
    box = [(0.0, (nx + 1) * h)]
    if d == 2:
        box.append((0.0, (ny + 1) * h))
    return GridSpec(d, h, tuple(box), mask)


def write_mask_file(spec: GridSpec, path) -> None:
    mask = np.atleast_2d(spec.mask)
    sizes = " ".join(str(s) for s in spec.mask.shape[::-1])
    rows = ["".join("1" if v else "0" for v in row) for row in mask]
    Path(path).write_text(f"{spec.dimension} {spec.h!r} {sizes}\n" + "\n".join(rows) + "\n")


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Interior sites of a :class:`GridSpec` numbered ``0 .. n-1`` in row-major order."""

    spec: GridSpec
    lattice: np.ndarray  # (n, d) integer site indices, x first
    coords: np.ndarray  # (n, d) site coordinates, x first
    site_index: np.ndarray  # mask-shaped, -1 outside

    @property
    def n(self) -> int:
        return self.lattice.shape[0]

    @property
    def d(self) -> int:
        return self.spec.dimension

    @property
    def h(self) -> float:
        return self.spec.h

    @property
    def weight(self) -> float:
        """Quadrature weight ``h**d`` of one site."""
        return self.spec.h ** self.spec.dimension

    def field(self, values) -> "Field":
        return Field(self, values)

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.n))

    def nearest_site(self, point) -> int:
        dist = np.sum((self.coords - np.asarray(point, dtype=float)) ** 2, axis=1)
        return int(np.argmin(dist))

    def center_site(self) -> int:
        """The interior site closest to the centre of the bounding box."""
        mid = [(lo + hi) / 2 for lo, hi in self.spec.bounding_box]
        return self.nearest_site(mid)


def build_domain(spec: GridSpec) -> GridDomain:
    mask = spec.mask
    if not mask.any():
        raise EmptyDomain("mask has no interior cell")
    flat = np.flatnonzero(mask.ravel())
    multi = np.unravel_index(flat, mask.shape)
    lattice = np.stack(multi[::-1], axis=1)  # x first
    lo = np.array([b[0] for b in spec.bounding_box])
    coords = lo + spec.h * (lattice + 1)
    site_index = np.full(mask.shape, -1, dtype=np.int64)
    site_index.ravel()[flat] = np.arange(flat.size)
    for arr in (lattice, coords, site_index):
        arr.setflags(write=False)
    return GridDomain(spec, lattice, coords, site_index)


class Field:
    """A grid function on the interior sites of a domain."""

    __slots__ = ("domain", "values")

    def __init__(self, domain: GridDomain, values):
        values = np.asarray(values)
        if values.shape != (domain.n,):
            raise ValueError(f"field needs {domain.n} values, got shape {values.shape}")
        if not np.iscomplexobj(values):
            values = values.astype(float, copy=False)
        self.domain = domain
        self.values = values

    def _other(self, other):
        if isinstance(other, Field):
            if other.domain is not self.domain:
                raise DomainMismatch("fields live on different domains")
            return other.values
        return other

    def __add__(self, other):
        return Field(self.domain, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Field(self.domain, self.values - self._other(other))

    def __rsub__(self, other):
        return Field(self.domain, self._other(other) - self.values)

    def __mul__(self, c):
        return Field(self.domain, self.values * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Field(self.domain, self.values / c)

    def __neg__(self):
        return Field(self.domain, -self.values)

    def __repr__(self):
        return f"Field(n={self.domain.n}, dtype={self.values.dtype})"


@dataclass(frozen=True, eq=False)
class SymOperator:
    """A symmetric operator on the grid functions of ``domain``.

    ``matrix`` acts on nodal values; it is a scipy sparse matrix for the
    Laplacian and a dense array for spectral multipliers.
    """

    domain: GridDomain
    matrix: object = field(repr=False)

    def dense(self) -> np.ndarray:
        m = self.matrix
        return m.toarray() if sp.issparse(m) else np.asarray(m)

    def apply(self, f: Field) -> Field:
        if f.domain is not self.domain:
            raise DomainMismatch("operator and field live on different domains")
        return Field(self.domain, self.matrix @ f.values)

    def asymmetry(self) -> float:
        m = self.dense()
        return float(np.max(np.abs(m - m.T))) if m.size else 0.0


def assemble_laplacian(domain: GridDomain) -> SymOperator:
    """Five-point (three-point in 1-D) Dirichlet Laplacian ``-Δ`` on the interior sites."""
    n, d, h = domain.n, domain.d, domain.h
    inv_h2 = 1.0 / h**2
    rows = [np.arange(n)]
    cols = [np.arange(n)]
    vals = [np.full(n, 2 * d * inv_h2)]
    idx = domain.site_index
    for axis in range(idx.ndim):
        a = np.moveaxis(idx, axis, 0)
        left, right = a[:-1].ravel(), a[1:].ravel()
        both = (left >= 0) & (right >= 0)
        left, right = left[both], right[both]
        rows += [left, right]
        cols += [right, left]
        vals += [np.full(left.size, -inv_h2)] * 2
    mat = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    return SymOperator(domain, mat)


def _check_exponent(p) -> float:
    p = float(p)
    if not p >= 1:
        raise InvalidExponent(f"exponent must lie in [1, inf], got {p}")
    return p


def lp_norms(values: np.ndarray, p, weight: float) -> np.ndarray:
    """Weighted L^p norms of the columns of ``values`` (axis 0 runs over sites)."""
    p = _check_exponent(p)
    a = np.abs(values)
    if np.isinf(p):
        return a.max(axis=0)
    if p == 1:
        return weight * a.sum(axis=0)
    if p == 2:
        return np.sqrt(weight * np.einsum("i...,i...->...", a, a))
    # scale first so large p cannot overflow
    top = a.max(axis=0)
    safe = np.where(top > 0, top, 1.0)
    return top * (weight * ((a / safe) ** p).sum(axis=0)) ** (1.0 / p)


def lp_norm(f: Field, p) -> float:
    """Discrete ``L^p(Ω)`` norm with weight ``h**d`` per site; ``p = inf`` is the max."""
    return float(lp_norms(f.values, p, f.domain.weight))


def inner(f: Field, g: Field) -> complex | float:
    """Discrete ``L^2`` pairing ``Σ h^d f conj(g)``."""
    if f.domain is not g.domain:
        raise DomainMismatch("fields live on different domains")
    val = f.domain.weight * np.vdot(g.values, f.values)
    return complex(val) if np.iscomplexobj(val) and val.imag != 0 else float(np.real(val))


def conjugate_exponent(p) -> float:
    p = _check_exponent(p)
    if p == 1:
        return np.inf
    if np.isinf(p):
        return 1.0
    return p / (p - 1)
