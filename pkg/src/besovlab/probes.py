"""Test-field ensembles, stored as eigen-coefficient matrices of shape ``(n, m)``."""
from __future__ import annotations

import numpy as np

from .partition import DyadicPartition, phi
from .spectral import SpectralDecomposition

DEFAULT_SIZE = 64
DEFAULT_SEED = 0


def gaussian_ensemble(dec: SpectralDecomposition, size: int = DEFAULT_SIZE, seed: int = DEFAULT_SEED):
    """i.i.d. standard normal eigen-coefficients, one field per column."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((dec.n, size))


def eigenmode_ensemble(dec: SpectralDecomposition) -> np.ndarray:
    """Every eigenvector as a probe (identity in coefficient space)."""
    return np.eye(dec.n)


def delta_coeffs(dec: SpectralDecomposition, site: int) -> np.ndarray:
    """Coefficients of the unit-mass point source ``δ_y = e_y / h^d``."""
    return dec.eigenvectors[site, :].copy()


def wave_packets(
    dec: SpectralDecomposition, part: DyadicPartition, site: int, js=None
) -> tuple[np.ndarray, np.ndarray]:
    """``φ_j(√A) δ_y`` for the requested blocks; empty blocks are dropped.

    Returns the coefficient matrix and the ``j`` of each column.
    """
    base = delta_coeffs(dec, site)
    root = np.sqrt(dec.eigenvalues)
    js = part.js if js is None else js
    cols, kept = [], []
    for j in js:
        sym = phi(int(j), root)
        if np.any(sym > 0):
            cols.append(sym * base)
            kept.append(int(j))
    if not cols:
        return np.zeros((dec.n, 0)), np.zeros(0, dtype=int)
    return np.column_stack(cols), np.asarray(kept)


def standard_ensemble(dec: SpectralDecomposition, size=DEFAULT_SIZE, seed=DEFAULT_SEED) -> np.ndarray:
    """Gaussian fields followed by all single-eigenmode probes."""
    return np.column_stack([gaussian_ensemble(dec, size, seed), eigenmode_ensemble(dec)])


def band_probes(
    dec: SpectralDecomposition,
    part: DyadicPartition,
    freq_lo: float,
    freq_hi: float,
    size=DEFAULT_SIZE,
    seed=DEFAULT_SEED,
) -> np.ndarray:
    """Localized probes for rate fits inside a frequency band.

    The centre point source, the wave packets whose centre frequency ``2^j``
    lies in ``[freq_lo, freq_hi]``, and the Gaussian fields.
    """
    site = dec.domain.center_site()
    js = [j for j in part.js if freq_lo <= 2.0**j <= freq_hi]
    packets, _ = wave_packets(dec, part, site, js)
    return np.column_stack(
        [delta_coeffs(dec, site)[:, None], packets, gaussian_ensemble(dec, size, seed)]
    )


def single_block_modes(dec: SpectralDecomposition, part: DyadicPartition) -> dict[int, int]:
    """For each block ``j``, the eigenmode whose ``√λ`` is closest to ``2^j`` (log scale)."""
    root = np.sqrt(dec.eigenvalues)
    out = {}
    for j in part.js:
        k = int(np.argmin(np.abs(np.log2(root) - j)))
        if abs(np.log2(root[k]) - j) < 0.5:
            out[int(j)] = k
    return out
