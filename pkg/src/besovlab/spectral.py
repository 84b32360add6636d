"""Dense eigendecomposition of the discrete Dirichlet Laplacian and functions of it.

Every operator ``g(A)`` is evaluated as ``Σ_k g(λ_k) <f, v_k> v_k`` with the
eigenvectors normalised in the weighted inner product ``Σ h^d u conj(v)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceFailure, NegativeTime, NonFiniteSymbol, NotSymmetric
from .grid import Field, GridDomain, SymOperator, lp_norms

RESIDUAL_TOL = 1e-8
ORTHO_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    domain: GridDomain
    eigenvalues: np.ndarray  # ascending, shape (n,)
    eigenvectors: np.ndarray  # columns, shape (n, n)

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def weight(self) -> float:
        return self.domain.weight

    def analyze(self, values: np.ndarray) -> np.ndarray:
        """Eigen-coefficients ``<f, v_k>`` of nodal values (columns allowed)."""
        return self.weight * (self.eigenvectors.T @ values)

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        return self.eigenvectors @ coeffs

    def symbol(self, g: Callable, *, name: str = "g") -> np.ndarray:
        """``g`` evaluated on the spectrum, checked for finiteness."""
        vals = np.asarray(g(self.eigenvalues))
        if vals.shape == ():
            vals = np.full(self.n, vals[()])
        if not np.all(np.isfinite(vals)):
            bad = np.flatnonzero(~np.isfinite(vals))[0]
            raise NonFiniteSymbol(
                f"{name}(λ) is not finite at λ_{bad} = {self.eigenvalues[bad]!r}"
            )
        return vals

    def eigenmode(self, k: int) -> Field:
        return Field(self.domain, self.eigenvectors[:, k].copy())

    def mode_lp_norms(self, p) -> np.ndarray:
        """``||v_k||_p`` for every eigenvector."""
        return lp_norms(self.eigenvectors, p, self.weight)


def _fix_signs(vectors: np.ndarray) -> None:
    # largest-magnitude entry positive, so runs are reproducible
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    vectors *= signs


def decompose(A: SymOperator) -> SpectralDecomposition:
    """Full dense eigendecomposition with residual and orthonormality checks.

    Raises
    ------
    NotSymmetric
        If the matrix is not symmetric to rounding.
    ConvergenceFailure
        If an eigenpair misses the residual tolerance ``1e-8 * λ_max`` or the
        basis is not orthonormal to ``1e-10``.
    """
    domain = A.domain
    mat = A.dense()
    scale = np.max(np.abs(mat)) if mat.size else 1.0
    if np.max(np.abs(mat - mat.T)) > 1e-14 * scale:
        raise NotSymmetric("operator matrix is not symmetric")
    w, U = np.linalg.eigh(mat)
    _fix_signs(U)
    V = U / np.sqrt(domain.weight)

    lam_max = max(abs(w[-1]), abs(w[0]))
    resid = lp_norms(mat @ V - V * w, 2, domain.weight)
    if np.max(resid) > RESIDUAL_TOL * lam_max:
        raise ConvergenceFailure(
            f"eigen-residual {np.max(resid):.3e} exceeds {RESIDUAL_TOL} * λ_max"
        )
    gram = domain.weight * (V.T @ V)
    ortho = np.max(np.abs(gram - np.eye(w.size)))
    if ortho > ORTHO_TOL:
        raise ConvergenceFailure(f"eigenbasis orthonormality defect {ortho:.3e}")
    if w[0] <= 0:
        raise ConvergenceFailure(f"smallest eigenvalue {w[0]!r} is not positive")
    w.setflags(write=False)
    V.setflags(write=False)
    return SpectralDecomposition(domain, w, V)


def apply_function(dec: SpectralDecomposition, g: Callable, f: Field) -> Field:
    """``g(A) f`` for a scalar function ``g`` evaluated on the spectrum."""
    sym = dec.symbol(g)
    return Field(dec.domain, dec.synthesize(sym * dec.analyze(f.values)))


def power_symbol(alpha: float) -> Callable:
    half = alpha / 2.0
    return lambda lam: lam**half


def semigroup_symbol(t: float, alpha: float) -> Callable:
    if t < 0:
        raise NegativeTime(f"time must be non-negative, got {t}")
    half = alpha / 2.0
    return lambda lam: np.exp(-t * lam**half)


def fractional_power(dec: SpectralDecomposition, alpha: float, f: Field) -> Field:
    """``A^{α/2} f``; any real ``α`` is allowed because ``λ_1 > 0``."""
    return apply_function(dec, power_symbol(alpha), f)


def semigroup_apply(dec: SpectralDecomposition, t: float, alpha: float, f: Field) -> Field:
    """``exp(-t A^{α/2}) f``."""
    if t < 0:
        raise NegativeTime(f"time must be non-negative, got {t}")
    if t == 0:
        return Field(dec.domain, f.values.copy())
    return apply_function(dec, semigroup_symbol(t, alpha), f)


def operator_matrix(dec: SpectralDecomposition, symbol_values: np.ndarray) -> np.ndarray:
    """Nodal matrix of ``g(A)`` from the values of ``g`` on the spectrum."""
    V = dec.eigenvectors
    return dec.weight * (V * symbol_values) @ V.T


def kernel_matrix(dec: SpectralDecomposition, t: float, alpha: float) -> SymOperator:
    """Nodal matrix of ``exp(-t A^{α/2})``.

    Row ``i`` maps nodal values to ``(e^{-tA^{α/2}} f)(x_i)``; dividing the
    entries by ``h**d`` gives the heat kernel ``K_t(x_i, x_j)``.
    """
    if t < 0:
        raise NegativeTime(f"time must be non-negative, got {t}")
    M = operator_matrix(dec, dec.symbol(semigroup_symbol(t, alpha)))
    M = 0.5 * (M + M.T)
    return SymOperator(dec.domain, M)
