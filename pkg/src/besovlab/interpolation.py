"""Peetre K-functional and real interpolation between Besov spaces.

Splittings are thresholds in frequency: ``a_low = θ(2^{-J}√A) f`` collects
the blocks ``j <= J`` exactly (the partition telescopes), ``a_high = f - a_low``.
For every threshold both endpoint norms are computed once, so ``K(t, f)`` is
the lower envelope of straight lines in ``t`` and the interpolation integral
can be evaluated segment by segment.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .besov import BesovParams, besov_norms
from .errors import InvalidExponent, QuadratureUnresolved
from .partition import DyadicPartition, phi, theta
from .spectral import SpectralDecomposition


@dataclass(frozen=True)
class InterpolationCouple:
    p: float
    s0: float
    q0: float
    s1: float
    q1: float
    theta: float
    q: float
    homogeneous: bool = True

    def __post_init__(self):
        if self.s0 == self.s1:
            raise ValueError("the endpoint regularities must differ")
        if not 0 < self.theta < 1:
            raise ValueError(f"interpolation parameter must lie in (0, 1), got {self.theta}")
        for name in ("p", "q0", "q1", "q"):
            if not float(getattr(self, name)) >= 1:
                raise InvalidExponent(f"{name} must lie in [1, inf]")
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def s(self) -> float:
        return (1 - self.theta) * self.s0 + self.theta * self.s1

    def endpoint(self, which: int) -> BesovParams:
        if which == 0:
            return BesovParams(self.s0, self.p, self.q0, self.homogeneous)
        return BesovParams(self.s1, self.p, self.q1, self.homogeneous)

    def target(self) -> BesovParams:
        return BesovParams(self.s, self.p, self.q, self.homogeneous)


def split_lines(dec: SpectralDecomposition, part: DyadicPartition, coeffs: np.ndarray, couple):
    """Intercepts and slopes ``(N0, N1)`` of every threshold splitting.

    Returns arrays of shape ``(L, m)``: line ``l`` is ``N0[l] + t N1[l]``.
    Both orientations (low blocks to either endpoint) are included, plus the
    trivial splittings ``a0 = f`` and ``a1 = f``.
    """
    C = np.atleast_2d(np.asarray(coeffs).T).T
    root = np.sqrt(dec.eigenvalues)
    p0, p1 = couple.endpoint(0), couple.endpoint(1)
    zeros = np.zeros(C.shape[1])
    N0 = [besov_norms(dec, part, C, p0), zeros]
    N1 = [zeros, besov_norms(dec, part, C, p1)]
    for J in part.js:
        low = theta(np.ldexp(root, -int(J)))[:, None] * C
        high = C - low
        N0 += [besov_norms(dec, part, low, p0), besov_norms(dec, part, high, p0)]
        N1 += [besov_norms(dec, part, high, p1), besov_norms(dec, part, low, p1)]
    return np.array(N0), np.array(N1)


def k_functional(dec, part, f, t: float, couple: InterpolationCouple) -> float:
    """Threshold-splitting value of ``K(t, f)`` (an upper bound for the infimum)."""
    if not t > 0:
        raise ValueError("t must be positive")
    c = dec.analyze(f.values)[:, None]
    N0, N1 = split_lines(dec, part, c, couple)
    return float(np.min(N0[:, 0] + t * N1[:, 0]))


def k_values(N0: np.ndarray, N1: np.ndarray, t) -> np.ndarray:
    """``K`` at each ``t`` (rows) for each field (columns)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return np.min(N0[None] + t[:, None, None] * N1[None], axis=1)


def brute_force_k(dec, part, coeffs: np.ndarray, t: float, couple, max_blocks: int = 12) -> np.ndarray:
    """Minimum over all assignments of whole blocks to the two endpoints."""
    C = np.atleast_2d(np.asarray(coeffs).T).T
    root = np.sqrt(dec.eigenvalues)
    js = [int(j) for j in part.js if np.any(phi(int(j), root) > 0)]
    if len(js) > max_blocks:
        raise ValueError(f"{len(js)} active blocks exceed the brute-force limit {max_blocks}")
    syms = np.array([phi(j, root) for j in js])
    masks = np.array(list(itertools.product((0, 1), repeat=len(js))), dtype=float)
    low_sym = masks @ syms  # (2^b, n)
    best = np.full(C.shape[1], np.inf)
    p0, p1 = couple.endpoint(0), couple.endpoint(1)
    for col in range(C.shape[1]):
        A0 = low_sym.T * C[:, col : col + 1]
        A1 = C[:, col : col + 1] - A0
        vals = besov_norms(dec, part, A0, p0) + t * besov_norms(dec, part, A1, p1)
        best[col] = np.min(vals)
    return best


def _envelope(N0: np.ndarray, N1: np.ndarray):
    """Lower envelope of lines ``a + b t`` on ``t > 0``.

    Returns breakpoints ``t_1 < ... < t_{m-1}`` and the ``(a, b)`` of each
    piece, ordered from small to large ``t`` (decreasing slope).
    """
    order = np.lexsort((N0, -N1))  # slope descending, then intercept ascending
    a, b = N0[order], N1[order]
    hull: list[tuple[float, float]] = []
    for ai, bi in zip(a, b):
        if hull and hull[-1][1] == bi:
            continue  # same slope, larger intercept
        while hull:
            a_last, b_last = hull[-1]
            x_last = (ai - a_last) / (b_last - bi)
            if x_last <= 0:
                hull.pop()
                continue
            if len(hull) >= 2:
                a_prev, b_prev = hull[-2]
                x_prev = (a_last - a_prev) / (b_prev - b_last)
                if x_last <= x_prev:
                    hull.pop()
                    continue
            break
        hull.append((ai, bi))
    breaks = [(hull[i + 1][0] - hull[i][0]) / (hull[i][1] - hull[i + 1][1]) for i in range(len(hull) - 1)]
    return np.array(breaks), hull


def _segment_integral(a, b, lo, hi, th, q, nodes):
    """``∫_lo^hi (t^{-θ}(a + b t))^q dt/t`` by Gauss–Legendre in ``log t``."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    l0, l1 = np.log(lo), np.log(hi)
    lt = 0.5 * (l1 - l0) * x + 0.5 * (l1 + l0)
    t = np.exp(lt)
    return 0.5 * (l1 - l0) * np.sum(w * (t ** (-th) * (a + b * t)) ** q)


def _norm_from_lines(N0: np.ndarray, N1: np.ndarray, th: float, q: float, nodes: int = 24, rtol=1e-10) -> float:
    breaks, hull = _envelope(N0, N1)
    if len(hull) == 1:
        a, b = hull[0]
        if a == 0 and b == 0:
            return 0.0
        return float("inf")  # a pure line is not integrable at both ends
    if np.isinf(q):
        best = 0.0
        edges = np.concatenate([[0.0], breaks, [np.inf]])
        for (a, b), lo, hi in zip(hull, edges[:-1], edges[1:]):
            cands = [t for t in (lo, hi) if 0 < t < np.inf]
            if a > 0 and b > 0:
                star = th * a / ((1 - th) * b)
                if lo <= star <= hi:
                    cands.append(star)
            for t in cands:
                best = max(best, t ** (-th) * (a + b * t))
        return float(best)
    first, last = hull[0], hull[-1]
    total = 0.0
    # t below the first break: the line through the origin, K = b t
    if first[0] != 0:
        return float("inf")
    total += (first[1] * breaks[0] ** (1 - th)) ** q / ((1 - th) * q)
    # t beyond the last break: the flat line, K = a
    if last[1] != 0:
        return float("inf")
    total += (last[0] * breaks[-1] ** (-th)) ** q / (th * q)
    for i, (a, b) in enumerate(hull[1:-1], start=1):
        lo, hi = breaks[i - 1], breaks[i]
        coarse = _segment_integral(a, b, lo, hi, th, q, nodes)
        fine = _segment_integral(a, b, lo, hi, th, q, 2 * nodes)
        if abs(fine - coarse) > rtol * max(abs(fine), 1e-300) + 1e-300:
            fine = _segment_integral(a, b, lo, hi, th, q, 8 * nodes)
        total += fine
    return float(total ** (1 / q))


def interpolation_norms(dec, part, coeffs: np.ndarray, couple: InterpolationCouple) -> np.ndarray:
    """``(∫ (t^{-θ} K(t))^q dt/t)^{1/q}`` for each column.

    ``K`` is piecewise linear between the envelope breakpoints, so the tails
    are exact power integrals and each inner segment is integrated by
    Gauss–Legendre in ``log t``, with a doubling check.
    """
    N0, N1 = split_lines(dec, part, coeffs, couple)
    out = np.empty(N0.shape[1])
    for col in range(N0.shape[1]):
        val = _norm_from_lines(N0[:, col], N1[:, col], couple.theta, couple.q)
        if not np.isfinite(val):
            raise QuadratureUnresolved("K-functional envelope is not integrable")
        out[col] = val
    return out


def interpolation_norm(dec, part, f, couple: InterpolationCouple) -> float:
    return float(interpolation_norms(dec, part, dec.analyze(f.values)[:, None], couple)[0])


def single_block_constant(couple: InterpolationCouple) -> float:
    """Ratio for a field living in one block: ``(θ(1-θ)q)^{-1/q}`` (1 for ``q = inf``)."""
    if np.isinf(couple.q):
        return 1.0
    th, q = couple.theta, couple.q
    return (th * (1 - th) * q) ** (-1.0 / q)


def verify_interpolation_identity(
    dec: SpectralDecomposition,
    part: DyadicPartition,
    ensemble: np.ndarray,
    couple: InterpolationCouple,
    *,
    bracket: float = 20.0,
    suite: str = "interpolation",
):
    from .report import Row

    vals = interpolation_norms(dec, part, ensemble, couple)
    den = besov_norms(dec, part, ensemble, couple.target())
    keep = den > 0
    r = vals[keep] / den[keep]
    const = float(max(np.max(r), 1 / np.min(r)))
    params = dict(
        p=couple.p, s0=couple.s0, q0=couple.q0, s1=couple.s1, q1=couple.q1,
        theta=couple.theta, q=couple.q, homogeneous=couple.homogeneous, n=dec.n,
    )
    return [Row(f"{suite}.bracket", params, const, target=bracket, cmp="<=", passed=const <= bracket)]
