"""Homogeneous and inhomogeneous Besov norms built from spectral blocks.

The batch functions take eigen-coefficient matrices of shape ``(n, m)`` (one
column per field) so whole ensembles go through a handful of matrix products.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainMismatch, InvalidExponent
from .grid import Field, conjugate_exponent, lp_norms
from .partition import DyadicPartition, Phi, phi
from .spectral import SpectralDecomposition


@dataclass(frozen=True)
class BesovParams:
    s: float
    p: float
    q: float
    homogeneous: bool = True

    def __post_init__(self):
        for name in ("p", "q"):
            v = float(getattr(self, name))
            if not v >= 1:
                raise InvalidExponent(f"{name} must lie in [1, inf], got {v}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "s", float(self.s))

    def replace(self, **kw) -> "BesovParams":
        data = dict(s=self.s, p=self.p, q=self.q, homogeneous=self.homogeneous)
        data.update(kw)
        return BesovParams(**data)


def lq_aggregate(seq: np.ndarray, q: float) -> np.ndarray:
    """ℓ^q norm along axis 0 (max for ``q = inf``)."""
    seq = np.abs(seq)
    if seq.shape[0] == 0:
        return np.zeros(seq.shape[1:])
    if np.isinf(q):
        return seq.max(axis=0)
    if q == 1:
        return seq.sum(axis=0)
    top = seq.max(axis=0)
    safe = np.where(top > 0, top, 1.0)
    return top * ((seq / safe) ** q).sum(axis=0) ** (1.0 / q)


def _as_columns(coeffs: np.ndarray) -> tuple[np.ndarray, bool]:
    coeffs = np.asarray(coeffs)
    if coeffs.ndim == 1:
        return coeffs[:, None], True
    return coeffs, False


def block_norms(
    dec: SpectralDecomposition, part: DyadicPartition, coeffs: np.ndarray, p, js=None
) -> np.ndarray:
    """``||φ_j(√A) f||_p`` for every ``j`` in ``js`` (rows) and column of ``coeffs``."""
    C, single = _as_columns(coeffs)
    js = part.js if js is None else np.asarray(js)
    root = np.sqrt(dec.eigenvalues)
    out = np.empty((len(js), C.shape[1]))
    for r, j in enumerate(js):
        sym = phi(int(j), root)
        nz = sym > 0
        if not nz.any():
            out[r] = 0.0
            continue
        if float(p) == 2:
            # orthonormal eigenbasis: the L² norm is the coefficient norm
            out[r] = np.linalg.norm(sym[nz, None] * C[nz], axis=0)
            continue
        # only modes inside the block contribute
        vals = dec.eigenvectors[:, nz] @ (sym[nz, None] * C[nz])
        out[r] = lp_norms(vals, p, dec.weight)
    return out[:, 0] if single else out


def low_norms(dec: SpectralDecomposition, coeffs: np.ndarray, p) -> np.ndarray:
    """``||ψ(A) f||_p`` per column."""
    from .partition import psi

    C, single = _as_columns(coeffs)
    sym = psi(dec.eigenvalues)
    nz = sym > 0
    if not nz.any():
        out = np.zeros(C.shape[1])
    elif float(p) == 2:
        out = np.linalg.norm(sym[nz, None] * C[nz], axis=0)
    else:
        out = lp_norms(dec.eigenvectors[:, nz] @ (sym[nz, None] * C[nz]), p, dec.weight)
    return out[0] if single else out


def combine(block: np.ndarray, js: np.ndarray, prm: BesovParams, low=None) -> np.ndarray:
    """Weight block norms by ``2^{sj}`` and aggregate in ℓ^q."""
    js = np.asarray(js)
    w = np.exp2(prm.s * js.astype(float))
    w = w.reshape((-1,) + (1,) * (block.ndim - 1))
    if prm.homogeneous:
        return lq_aggregate(w * block, prm.q)
    keep = js >= 1
    tail = lq_aggregate((w * block)[keep], prm.q)
    return low + tail


def besov_norms(
    dec: SpectralDecomposition, part: DyadicPartition, coeffs: np.ndarray, prm: BesovParams
) -> np.ndarray:
    """Besov norms of every column of an eigen-coefficient matrix."""
    blocks = block_norms(dec, part, coeffs, prm.p)
    low = None if prm.homogeneous else low_norms(dec, coeffs, prm.p)
    return combine(blocks, part.js, prm, low)


def eigenmode_block_norms(dec: SpectralDecomposition, part: DyadicPartition, p) -> np.ndarray:
    """Block norms of every eigenvector, shape ``(len(js), n)``.

    Exact shortcut: ``φ_j(√A) v_k = φ_j(√λ_k) v_k``.
    """
    return part.block_symbols(dec) * dec.mode_lp_norms(p)


def eigenmode_besov_norms(
    dec: SpectralDecomposition, part: DyadicPartition, prm: BesovParams
) -> np.ndarray:
    norms = dec.mode_lp_norms(prm.p)
    blocks = part.block_symbols(dec) * norms
    low = None
    if not prm.homogeneous:
        low = part.low_symbol(dec) * norms
    return combine(blocks, part.js, prm, low)


def besov_norm(
    dec: SpectralDecomposition, part: DyadicPartition, f: Field, prm: BesovParams
) -> float:
    """``||f||`` in ``Ḃ^s_{p,q}(A)`` (or ``B^s_{p,q}(A)`` when not homogeneous)."""
    return float(besov_norms(dec, part, dec.analyze(f.values), prm))


def check_embedding(dec, part, f: Field, r, p, s, q) -> float:
    """``||f||_{Ḃ^s_{p,q}} / ||f||_{Ḃ^{s + d(1/r - 1/p)}_{r,q}}`` for ``r <= p``."""
    if float(r) > float(p):
        raise InvalidExponent(f"embedding needs r <= p, got r={r}, p={p}")
    d = dec.domain.d
    shift = d * (1.0 / float(r) - 1.0 / float(p))
    num = besov_norm(dec, part, f, BesovParams(s, p, q))
    den = besov_norm(dec, part, f, BesovParams(s + shift, r, q))
    return num / den


def check_lifting(dec, part, f: Field, alpha: float, prm: BesovParams) -> float:
    """``||A^{α/2} f||_{Ḃ^s} / ||f||_{Ḃ^{s+α}}``."""
    c = dec.analyze(f.values)
    lifted = dec.eigenvalues ** (alpha / 2.0) * c
    num = besov_norms(dec, part, lifted, prm)
    den = besov_norms(dec, part, c, prm.replace(s=prm.s + alpha))
    return float(num / den)


def embedding_ratios(dec, part, coeffs, r, p, s, q) -> np.ndarray:
    shift = dec.domain.d * (1.0 / float(r) - 1.0 / float(p))
    return besov_norms(dec, part, coeffs, BesovParams(s, p, q)) / besov_norms(
        dec, part, coeffs, BesovParams(s + shift, r, q)
    )


def lifting_ratios(dec, part, coeffs, alpha, prm: BesovParams) -> np.ndarray:
    C, _ = _as_columns(coeffs)
    lifted = (dec.eigenvalues ** (alpha / 2.0))[:, None] * C
    return besov_norms(dec, part, lifted, prm) / besov_norms(
        dec, part, C, prm.replace(s=prm.s + alpha)
    )


def duality_pairing(dec, part: DyadicPartition, f: Field, g: Field):
    """``Σ_j <φ_j(√A) f, Φ_j(√A) g>`` with the discrete L² pairing."""
    if f.domain is not g.domain or f.domain is not dec.domain:
        raise DomainMismatch("pairing needs both fields on the decomposition's domain")
    root = np.sqrt(dec.eigenvalues)
    cf = dec.analyze(f.values)
    cg = dec.analyze(g.values)
    total = 0.0
    for j in part.js:
        bf = dec.synthesize(phi(int(j), root) * cf)
        bg = dec.synthesize(Phi(int(j), root) * cg)
        total = total + dec.weight * np.vdot(bg, bf)
    if np.iscomplexobj(total) and total.imag != 0:
        return complex(total)
    return float(np.real(total))


def holder_pairing_constant(s: float) -> float:
    """Constant in ``|<f,g>| <= C ||f||_{Ḃ^s_{p,∞}} ||g||_{Ḃ^{-s}_{p',1}}``."""
    return 2.0**s + 1.0 + 2.0**-s


def dual_params(prm: BesovParams) -> BesovParams:
    return BesovParams(-prm.s, conjugate_exponent(prm.p), conjugate_exponent(prm.q), prm.homogeneous)
