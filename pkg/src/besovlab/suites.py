"""Experiment configuration, suite registry and the battery runner."""
from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import interpolation as interp
from . import multiplier as mult
from . import probes
from . import semigroup as sg
from .besov import BesovParams, besov_norms, embedding_ratios, lifting_ratios
from .errors import ConfigError
from .grid import GridSpec, assemble_laplacian, build_domain, read_mask_file
from .partition import DyadicPartition, build_partition, construction_hash, phi, psi
from .report import RatePlot, Report, Row, failed_row
from .spectral import SpectralDecomposition, decompose

SEED_ENV = "BESOVLAB_SEED"
INF = float("inf")


# -- configuration --------------------------------------------------------


def _exponent(v) -> float:
    if isinstance(v, str):
        if v.lower() in ("inf", "infinity", "∞"):
            return INF
        return float(v)
    return float(v)


def domain_spec(desc: dict, base: Path | None = None) -> GridSpec:
    """Build a :class:`GridSpec` from a JSON description.

    Accepted forms: ``{"kind": "interval", "n": 255, "a": 0, "b": 1}``,
    ``{"kind": "square", "m": 48, "side": 1}``,
    ``{"kind": "rectangle", "nx": .., "ny": .., "width": ..}``,
    ``{"kind": "dyadic_interval", "n": 255, "j0": 4}`` and
    ``{"mask_file": "path"}``.
    """
    if not isinstance(desc, dict):
        raise ConfigError(f"domain must be an object, got {desc!r}")
    if "mask_file" in desc:
        path = Path(desc["mask_file"])
        if base is not None and not path.is_absolute():
            path = base / path
        if not path.exists():
            raise ConfigError(f"domain.mask_file: {path} does not exist")
        return read_mask_file(path)
    kind = desc.get("kind", "interval")
    try:
        if kind == "interval":
            return GridSpec.interval(int(desc.get("n", 255)), float(desc.get("a", 0.0)), float(desc.get("b", 1.0)))
        if kind == "square":
            return GridSpec.square(int(desc["m"]), float(desc.get("side", 1.0)))
        if kind == "rectangle":
            return GridSpec.rectangle(int(desc["nx"]), int(desc["ny"]), float(desc.get("width", 1.0)))
        if kind == "dyadic_interval":
            return sg.dyadic_interval(int(desc["n"]), int(desc["j0"]), desc.get("k"))
    except KeyError as exc:
        raise ConfigError(f"domain: missing key {exc}") from None
    raise ConfigError(f"domain.kind: unknown kind {kind!r}")


@dataclass
class ExperimentConfig:
    domain: dict = field(default_factory=lambda: {"kind": "interval", "n": 255})
    alphas: list = field(default_factory=lambda: [2.0])
    suites: dict = field(default_factory=dict)  # name -> per-suite options
    seed: int = probes.DEFAULT_SEED
    ensemble_size: int = probes.DEFAULT_SIZE
    tolerances: dict = field(default_factory=dict)
    out: str | None = None
    base_dir: Path | None = None

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        known = {"domain", "n", "h", "alpha", "alphas", "suites", "seed", "ensemble_size", "tolerances", "out"}
        extra = sorted(set(doc) - known)
        if extra:
            raise ConfigError(f"unknown config key(s): {', '.join(extra)}")
        dom = dict(doc.get("domain", {"kind": "interval"}))
        if "n" in doc:
            dom["n"] = int(doc["n"])
        if "h" in doc:
            # interval (a, b) with spacing h: n = (b - a)/h - 1
            a, b = float(dom.get("a", 0.0)), float(dom.get("b", 1.0))
            dom["n"] = int(round((b - a) / float(doc["h"]))) - 1
        dom.setdefault("n", 255) if dom.get("kind", "interval") == "interval" else None
        alphas = doc.get("alphas", doc.get("alpha", [2.0]))
        alphas = [float(a) for a in (alphas if isinstance(alphas, list) else [alphas])]
        suites = doc.get("suites", "all")
        if suites == "all":
            suites = {name: {} for name in REGISTRY}
        elif isinstance(suites, list):
            suites = {name: {} for name in suites}
        if not isinstance(suites, dict):
            raise ConfigError("suites must be 'all', a list of names, or an object")
        unknown = [name for name in suites if name not in REGISTRY]
        if unknown:
            raise ConfigError(f"suites: unknown suite name(s) {', '.join(map(repr, unknown))}")
        cfg = cls(
            domain=dom,
            alphas=alphas,
            suites={k: dict(v or {}) for k, v in suites.items()},
            seed=int(doc.get("seed", probes.DEFAULT_SEED)),
            ensemble_size=int(doc.get("ensemble_size", probes.DEFAULT_SIZE)),
            tolerances=dict(doc.get("tolerances", {})),
            out=doc.get("out"),
            base_dir=base_dir,
        )
        domain_spec(cfg.domain, base_dir)  # validate eagerly
        for name, opts in cfg.suites.items():
            if "domain" in opts:
                domain_spec(opts["domain"], base_dir)
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path}: invalid JSON ({exc})") from None
        return cls.from_dict(doc, path.parent)

    def with_env_seed(self) -> "ExperimentConfig":
        raw = os.environ.get(SEED_ENV)
        if raw is None or raw == "":
            return self
        try:
            self.seed = int(raw)
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={raw!r} is not an integer") from None
        return self

    def canonical(self) -> dict:
        return dict(
            domain=self.domain, alphas=self.alphas, suites=self.suites, seed=self.seed,
            ensemble_size=self.ensemble_size, tolerances=self.tolerances,
        )

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def tol(self, key: str, default: float) -> float:
        return float(self.tolerances.get(key, default))


# -- context --------------------------------------------------------------


class Context:
    """Shared, lazily built decompositions keyed by domain description."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self._cache: dict[str, tuple[SpectralDecomposition, DyadicPartition]] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()
        self.grids: dict[str, dict] = {}

    def get(self, desc: dict | None = None) -> tuple[SpectralDecomposition, DyadicPartition]:
        desc = self.cfg.domain if desc is None else desc
        key = json.dumps(desc, sort_keys=True)
        with self._guard:
            lock = self._locks.setdefault(key, threading.Lock())
        with lock:
            if key not in self._cache:
                dom = build_domain(domain_spec(desc, self.cfg.base_dir))
                dec = decompose(assemble_laplacian(dom))
                part = build_partition(dec)
                self._cache[key] = (dec, part)
                self.grids[key] = dict(n=dom.n, d=dom.d, h=dom.h, j_min=part.j_min, j_max=part.j_max)
            return self._cache[key]

    def refine(self, desc: dict) -> dict:
        """The same 1-D interval with ``n -> 2n + 1`` (halved spacing)."""
        if desc.get("kind", "interval") != "interval":
            raise ConfigError("refinement studies need an interval domain")
        out = dict(desc)
        out["n"] = 2 * int(desc.get("n", 255)) + 1
        return out

    @property
    def seed(self) -> int:
        return self.cfg.seed

    @property
    def size(self) -> int:
        return self.cfg.ensemble_size


@dataclass
class SuiteResult:
    rows: list
    plots: list = field(default_factory=list)


def guarded(suite: str, params: dict, fn: Callable[[], list]) -> list:
    """Run one case; an exception becomes a failed row instead of aborting the suite."""
    try:
        return list(fn())
    except Exception as exc:  # noqa: BLE001 - isolation is the point
        return [failed_row(suite, params, exc)]


def _domain_for(ctx: Context, opts: dict, default: dict | None = None) -> dict:
    if "domain" in opts:
        return opts["domain"]
    return default if default is not None else ctx.cfg.domain


# -- suites ---------------------------------------------------------------


def suite_partition(ctx: Context, opts: dict) -> SuiteResult:
    dec, part = ctx.get(_domain_for(ctx, opts))
    root = np.sqrt(dec.eigenvalues)
    sym = part.block_symbols(dec)
    hom = float(np.max(np.abs(sym.sum(axis=0) - 1.0)))
    inh = float(np.max(np.abs(psi(dec.eigenvalues) + sum(phi(j, root) for j in range(1, part.j_max + 1)) - 1.0)))
    tol = ctx.cfg.tol("partition", 1e-12)
    p = dict(n=dec.n, d=dec.domain.d, phi0_hash=construction_hash())
    worst = max(hom, inh)
    note = f"homogeneous={hom:.3e} inhomogeneous={inh:.3e}"
    return SuiteResult([Row("partition.exactness", p, worst, target=tol, cmp="<=", passed=worst <= tol, note=note)])


def suite_spectral(ctx: Context, opts: dict) -> SuiteResult:
    dec, _ = ctx.get(_domain_for(ctx, opts))
    dom = dec.domain
    p = dict(n=dec.n, d=dom.d)
    rows = []
    if dom.d == 1:
        h = dom.h
        k = np.arange(1, dec.n + 1)
        exact = 4.0 / h**2 * np.sin(k * np.pi * h / 2) ** 2
        rel = float(np.max(np.abs(dec.eigenvalues - exact) / exact))
        length = (dec.n + 1) * h
        first = abs(dec.eigenvalues[0] / (np.pi / length) ** 2 - 1)
        rows += [
            Row("spectral.closed_form", p, rel, target=1e-8, cmp="<=", passed=rel <= 1e-8),
            Row("spectral.first_eigenvalue", p, first, target=0.01, cmp="<=", passed=first <= 0.01),
        ]
    V = dec.eigenvectors
    orth = float(np.max(np.abs(V.T @ V * dom.weight - np.eye(dec.n))))
    rows.append(Row("spectral.orthonormality", p, orth, target=1e-10, cmp="<=", passed=orth <= 1e-10))
    return SuiteResult(rows)


def embedding_constants(dec, part, size, seed) -> dict:
    """Sups of the embedding and lifting ratios over the standard ensemble."""
    C = probes.standard_ensemble(dec, size, seed)
    out = {}
    for r, p in ((1.0, 2.0), (2.0, INF), (1.0, INF)):
        out[f"embedding r={r:g} p={p:g}"] = float(np.max(embedding_ratios(dec, part, C, r, p, 0.5, 2.0)))
    for alpha in (1.0, 2.0):
        for p in (1.0, 2.0, INF):
            key = f"lifting alpha={alpha:g} p={p:g}"
            out[key] = float(np.max(lifting_ratios(dec, part, C, alpha, BesovParams(0.5, p, 2.0))))
    return out


def boundedness_times(dec, alpha) -> np.ndarray:
    mu = dec.eigenvalues ** (alpha / 2)
    return np.concatenate([[0.0], np.geomspace(1e-2 / mu[-1], 10.0 / mu[0], 13)])


BOUNDEDNESS_CASES = ((0.5, 1.0, 1.0), (0.5, 2.0, 2.0), (0.5, INF, INF), (0.0, 2.0, 2.0), (-0.5, 1.0, INF))


def boundedness_constants(dec, part, alpha, size, seed) -> dict:
    out = {}
    for s, p, q in BOUNDEDNESS_CASES:
        rows = sg.verify_boundedness(dec, part, s, p, q, alpha, boundedness_times(dec, alpha), size=size, seed=seed)
        out[f"boundedness alpha={alpha:g} s={s:g} p={p:g} q={q:g}"] = rows[0].value
    return out


def suite_besov(ctx: Context, opts: dict) -> SuiteResult:
    dec, part = ctx.get(_domain_for(ctx, opts))
    rows = []
    for key, val in embedding_constants(dec, part, ctx.size, ctx.seed).items():
        rows.append(Row("besov.constant", dict(case=key, n=dec.n), val, passed=bool(np.isfinite(val))))
    return SuiteResult(rows)


def suite_boundedness(ctx: Context, opts: dict) -> SuiteResult:
    dec, part = ctx.get(_domain_for(ctx, opts))
    rows = []
    for alpha in opts.get("alphas", ctx.cfg.alphas):
        for s, p, q in BOUNDEDNESS_CASES:
            rows += guarded(
                "boundedness", dict(alpha=alpha, s=s, p=p, q=q),
                lambda: sg.verify_boundedness(
                    dec, part, s, p, q, alpha, boundedness_times(dec, alpha), size=ctx.size, seed=ctx.seed
                ),
            )
    return SuiteResult(rows)


def suite_block_decay(ctx: Context, opts: dict) -> SuiteResult:
    dec, part = ctx.get(_domain_for(ctx, opts))
    rows = []
    for alpha in opts.get("alphas", [1.0, 2.0]):
        for p in (1.0, 2.0, INF):
            rows += guarded("block_decay", dict(alpha=alpha, p=p), lambda: sg.verify_block_decay(dec, part, alpha, p))
    return SuiteResult(rows)


SMOOTHING_CASES = (
    dict(alpha=2, s1=0, s2=0, p1=1, p2="inf"),
    dict(alpha=1, s1=0, s2=1, p1=2, p2=2, q1=2, q2=2),
    dict(alpha=2, s1=0, s2=1, p1=2, p2="inf", q1=2, q2=2),
    dict(alpha=2, s1=0, s2=0, p1=1, p2=2, q1=2, q2=2),
)


def _smoothing_case(desc: dict, homogeneous=True) -> sg.SmoothingCase:
    kw = {k: (_exponent(v) if k in ("p1", "p2", "q1", "q2") else float(v)) for k, v in desc.items()}
    return sg.SmoothingCase(homogeneous=homogeneous, **kw)


def _run_rates(ctx, dec, part, cases, suite, homogeneous=True) -> SuiteResult:
    rows, plots = [], []
    tol = ctx.cfg.tol("smoothing", 0.1)
    for desc in cases:
        def one(desc=desc):
            _, r, plot = sg.measure_smoothing_rate(
                dec, part, _smoothing_case(desc, homogeneous), size=ctx.size, seed=ctx.seed, tol=tol, suite=suite
            )
            plots.append(plot)
            return r
        rows += guarded(f"{suite}.rate", dict(desc), one)
    return SuiteResult(rows, plots)


def suite_smoothing(ctx: Context, opts: dict) -> SuiteResult:
    dec, part = ctx.get(_domain_for(ctx, opts, {"kind": "interval", "n": 511}))
    return _run_rates(ctx, dec, part, opts.get("cases", SMOOTHING_CASES), "smoothing")


def suite_smoothing2d(ctx: Context, opts: dict) -> SuiteResult:
    dec, part = ctx.get(_domain_for(ctx, opts, {"kind": "square", "m": 48}))
    cases = opts.get("cases", [dict(alpha=2, s1=0, s2=0, p1=1, p2="inf")])
    return _run_rates(ctx, dec, part, cases, "smoothing2d")


CONTINUITY_CASES = ((0.5, 1.0, 2.0), (0.5, 2.0, 2.0), (0.0, INF, 1.0), (-0.5, 2.0, 1.0))


def suite_continuity(ctx: Context, opts: dict) -> SuiteResult:
    dec, part = ctx.get(_domain_for(ctx, opts))
    C = probes.gaussian_ensemble(dec, ctx.size, ctx.seed)
    rows = []
    for alpha in opts.get("alphas", ctx.cfg.alphas):
        for s, p, q in CONTINUITY_CASES:
            rows += guarded(
                "continuity", dict(alpha=alpha, s=s, p=p, q=q),
                lambda: sg.verify_continuity(dec, part, C, s, p, q, alpha),
            )
        for s, p in ((0.5, 2.0), (0.0, INF), (-0.5, 1.5)):
            f = dec.domain.field(dec.synthesize(C[:, 0]))
            g = dec.domain.field(dec.synthesize(C[:, 1]))
            rows += guarded(
                "weak_continuity", dict(alpha=alpha, s=s, p=p),
                lambda: sg.verify_weak_continuity(dec, part, f, g, s, p, alpha),
            )
    return SuiteResult(rows)


EQUIVALENCE_CASES = (
    dict(alpha=2, s=0.5, s0=1.0, p=2, q=2, X="Lp"),
    dict(alpha=2, s=0.5, s0=1.0, p=2, q=2, X="B0", r=2),
    dict(alpha=2, s=0.5, s0=1.0, p=1, q=1, X="Lp"),
    dict(alpha=1, s=0.5, s0=1.0, p="inf", q="inf", X="Lp"),
    dict(alpha=2, s=-0.5, s0=0.5, p=1, q="inf", X="B0", r=1),
)


def _equivalence_case(desc: dict) -> sg.EquivalenceCase:
    kw = dict(desc)
    for k in ("p", "q", "r"):
        if k in kw:
            kw[k] = _exponent(kw[k])
    for k in ("alpha", "s", "s0"):
        kw[k] = float(kw[k])
    return sg.EquivalenceCase(**kw)


def equivalence_constant(dec, part, case, size, seed) -> float:
    return sg.verify_equivalence(dec, part, case, size=size, seed=seed)[0].value


def suite_equivalence(ctx: Context, opts: dict) -> SuiteResult:
    dec, part = ctx.get(_domain_for(ctx, opts))
    rows = []
    for desc in opts.get("cases", EQUIVALENCE_CASES):
        rows += guarded(
            "equivalence", dict(desc),
            lambda desc=desc: sg.verify_equivalence(dec, part, _equivalence_case(desc), size=ctx.size, seed=ctx.seed),
        )
    return SuiteResult(rows)


MAX_REG_CASES = ((1.0, 1.0), (2.0, 2.0), (INF, INF), (1.0, INF))


def max_reg_constant(dec, part, s, p, q, alpha, size, seed, pts_per_decade: int = 40) -> float:
    """Largest LHS/RHS ratio over Gaussian initial data and Gaussian constant sources.

    The integrands are smooth in ``log t``, so a constant accurate to well
    under 1% needs fewer nodes than the single-mode checks.
    """
    C = probes.gaussian_ensemble(dec, size, seed)
    Z = np.zeros_like(C)
    T = 1.0 / dec.eigenvalues[0] ** (alpha / 2)
    best = 0.0
    for u0, src, horizon in ((C, Z, 0.0), (Z, C, T), (C, C, T)):
        t = sg.maximal_regularity_terms(dec, part, u0, src, horizon, s, p, q, alpha,
                                        pts_per_decade=pts_per_decade)
        best = max(best, float(np.max((t["dt"] + t["au"]) / (t["u0"] + t["f"]))))
    return best


def suite_max_regularity(ctx: Context, opts: dict) -> SuiteResult:
    dec, part = ctx.get(_domain_for(ctx, opts))
    alpha = float(opts.get("alpha", 2.0))
    s = float(opts.get("s", 0.5))
    rows = []
    j0 = int(opts.get("j0", 4))
    mdec, mpart = ctx.get({"kind": "dyadic_interval", "n": dec.n, "j0": j0})
    k = 2**j0 - 1
    tol = ctx.cfg.tol("max_regularity.single_mode", 1e-6)
    for p, q in MAX_REG_CASES:
        def single(p=p, q=q):
            r = sg.single_mode_max_reg(mdec, mpart, k, s, p, q, alpha)
            oracle = sg.max_reg_oracle(q)
            prm = dict(p=p, q=q, s=s, alpha=alpha, j0=j0, n=dec.n)
            out = []
            for term in ("dt", "au"):
                dev = abs(r[term] - oracle)
                out.append(Row(f"max_regularity.single_mode_{term}", prm, r[term], target=oracle, tol=tol,
                               cmp="abs<=", passed=dev <= tol))
            out.append(Row("max_regularity.single_mode_total", prm, r["dt"] + r["au"], target=2 * oracle,
                           tol=2 * tol, cmp="abs<=", passed=abs(r["dt"] + r["au"] - 2 * oracle) <= 2 * tol))
            return out
        rows += guarded("max_regularity.single_mode", dict(p=p, q=q), single)

        def ensemble(p=p, q=q):
            c = max_reg_constant(dec, part, s, p, q, alpha, ctx.size, ctx.seed)
            return [Row("max_regularity.ensemble_sup", dict(p=p, q=q, s=s, alpha=alpha, n=dec.n), c,
                        passed=bool(np.isfinite(c)))]
        rows += guarded("max_regularity.ensemble_sup", dict(p=p, q=q), ensemble)

    rows += guarded("max_regularity.degenerate", {}, lambda: sg.verify_maximal_regularity(
        dec, part, None, None, s, 2.0, 2.0, alpha, 1.0))

    def duhamel():
        C = probes.gaussian_ensemble(dec, 6, ctx.seed)
        u0 = dec.domain.field(dec.synthesize(C[:, 0]))
        srcs = [dec.domain.field(dec.synthesize(C[:, i])) for i in range(1, 6)]
        grid = np.linspace(0.0, 5.0 / dec.eigenvalues[0] ** (alpha / 2), 6)
        res = sg.duhamel_residual(sg.duhamel_solve(dec, u0, srcs, alpha, grid))
        return [Row("max_regularity.duhamel_residual", dict(alpha=alpha, n=dec.n), res, target=1e-8,
                    cmp="<=", passed=res <= 1e-8)]
    rows += guarded("max_regularity.duhamel_residual", {}, duhamel)
    return SuiteResult(rows)


def suite_multiplier(ctx: Context, opts: dict) -> SuiteResult:
    dec, part = ctx.get(_domain_for(ctx, opts))
    prm = mult.MultiplierParams.defaults(dec.domain.d)
    js = [int(j) for j in part.active_js(dec)]
    j_list = opts.get("j_list", [j for j in js if j >= 2])
    rows = []
    for name, fam in (("identity", mult.identity_family()), ("semigroup", mult.semigroup_family(1.0))):
        rows += guarded("lemma21", dict(family=name), lambda fam=fam, name=name: mult.verify_lemma_2_1(
            dec, part, fam, j_list, (1.0, 2.0, INF), prm, family=name, ensemble_size=ctx.size, seed=ctx.seed))
    for j in opts.get("resolvent_js", [2, 4]):
        def one(j=j):
            gap = mult.verify_resolvent_factorization(dec, lambda lam: np.exp(-lam / 4.0**j), j, prm)
            return [Row("lemma22.factorization", dict(j=j, n=dec.n), gap, target=1e-8, cmp="<=", passed=gap <= 1e-8)]
        rows += guarded("lemma22.factorization", dict(j=j), one)
    rows += guarded("lemma22", {}, lambda: mult.verify_lemma_2_2(dec, prm))
    return SuiteResult(rows)


def suite_gaussian(ctx: Context, opts: dict) -> SuiteResult:
    dec, _ = ctx.get(_domain_for(ctx, opts))
    h2 = dec.domain.h ** 2
    t_list = opts.get("t_factors", [4, 16, 64, 256])
    return SuiteResult(guarded("gaussian", {}, lambda: mult.verify_gaussian_bound(dec, [f * h2 for f in t_list])))


def suite_inhomog(ctx: Context, opts: dict) -> SuiteResult:
    """Inhomogeneous analogues on a domain long enough for the low-frequency cutoff to act."""
    dec, part = ctx.get(_domain_for(ctx, opts, {"kind": "interval", "n": 1023, "a": 0.0, "b": 2.0}))
    rows, plots = [], []
    cases = opts.get("cases", [
        dict(alpha=2, s1=0, s2=0, p1=1, p2="inf"),
        dict(alpha=2, s1=0, s2=1, p1=2, p2="inf", q1=2, q2=2),
    ])
    res = _run_rates(ctx, dec, part, cases, "inhomog.smoothing", homogeneous=False)
    rows += res.rows
    plots += res.plots
    for s, p, q in ((0.5, 1.0, 2.0), (0.5, INF, INF)):
        rows += guarded("inhomog.boundedness", dict(s=s, p=p, q=q), lambda: sg.verify_boundedness(
            dec, part, s, p, q, 2.0, boundedness_times(dec, 2.0), homogeneous=False, size=ctx.size,
            seed=ctx.seed, suite="inhomog.boundedness"))
    C = probes.gaussian_ensemble(dec, 8, ctx.seed)
    rows += guarded("inhomog.continuity", {}, lambda: sg.verify_continuity(
        dec, part, C, 0.5, 2.0, 2.0, 2.0, homogeneous=False, suite="inhomog.continuity"))
    f = dec.domain.field(dec.synthesize(C[:, 0]))
    g = dec.domain.field(dec.synthesize(C[:, 1]))
    rows += guarded("inhomog.weak_continuity", {}, lambda: sg.verify_weak_continuity(
        dec, part, f, g, 0.5, 2.0, 2.0, homogeneous=False, suite="inhomog.weak_continuity"))
    prm = mult.MultiplierParams.defaults(dec.domain.d)
    rows += guarded("inhomog.lemma71", {}, lambda: sg.verify_low_frequency_lemma(
        dec, [0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0], prm))
    small_dec, small_part = ctx.get({"kind": "interval", "n": 255, "a": 0.0, "b": 2.0})
    rows += guarded("inhomog.equivalence", {}, lambda: sg.verify_equivalence(
        small_dec, small_part, sg.EquivalenceCase(2.0, 0.5, 1.0, 2.0, 2.0, horizon=1.0),
        size=ctx.size, seed=ctx.seed, suite="inhomog.equivalence"))
    return SuiteResult(rows, plots)


INTERP_COUPLES = (
    dict(p=2, s0=0, q0=2, s1=1, q1=2, theta=0.5, q=2),
    dict(p=1, s0=-0.5, q0=1, s1=1, q1="inf", theta=0.3, q=3),
    dict(p="inf", s0=0, q0="inf", s1=2, q1="inf", theta=0.5, q="inf"),
)


def _couple(desc: dict, homogeneous=True) -> interp.InterpolationCouple:
    kw = {k: (_exponent(v) if k in ("p", "q0", "q1", "q") else float(v)) for k, v in desc.items()}
    return interp.InterpolationCouple(homogeneous=homogeneous, **kw)


def single_block_rows(ctx: Context, n: int, couple, j_list) -> list[Row]:
    """Single-block ratios across ``j0``, each on an interval that puts a mode exactly at ``2^{j0}``."""
    vals = []
    for j0 in j_list:
        dec, part = ctx.get({"kind": "dyadic_interval", "n": n, "j0": int(j0)})
        e = np.zeros((dec.n, 1))
        e[2**j0 - 1, 0] = 1.0
        vals.append(float(interp.interpolation_norms(dec, part, e, couple)[0]
                          / besov_norms(dec, part, e, couple.target())[0]))
    vals = np.array(vals)
    const = interp.single_block_constant(couple)
    spread = float(vals.max() / vals.min() - 1)
    dev = float(np.max(np.abs(vals / const - 1)))
    params = dict(theta=couple.theta, q=couple.q, s0=couple.s0, s1=couple.s1, j0=list(map(int, j_list)))
    return [
        Row("interpolation.single_block_spread", params, spread, target=0.01, cmp="<=", passed=spread <= 0.01),
        Row("interpolation.single_block_oracle", params, dev, target=1e-8, cmp="<=", passed=dev <= 1e-8),
    ]


def suite_interpolation(ctx: Context, opts: dict) -> SuiteResult:
    dec, part = ctx.get(_domain_for(ctx, opts))
    ens = probes.standard_ensemble(dec, ctx.size, ctx.seed)
    rows = []
    for desc in opts.get("couples", INTERP_COUPLES):
        for hom in (True, False):
            rows += guarded("interpolation.bracket", dict(desc, homogeneous=hom), lambda desc=desc, hom=hom:
                            interp.verify_interpolation_identity(dec, part, ens, _couple(desc, hom)))
        rows += guarded("interpolation.single_block", dict(desc), lambda desc=desc: single_block_rows(
            ctx, dec.n, _couple(desc), [0, 1, 2, 3, 4, 5]))

        def brute(desc=desc):
            cp = _couple(desc)
            sub = ens[:, :8]
            out = []
            for t in (0.1, 1.0, 10.0):
                N0, N1 = interp.split_lines(dec, part, sub, cp)
                thr = interp.k_values(N0, N1, t)[0]
                bf = interp.brute_force_k(dec, part, sub, t, cp)
                r = float(np.max(thr / bf))
                out.append(Row("interpolation.threshold_vs_brute", dict(desc, t=t), r, target=2.0, cmp="<=",
                               passed=bool(1 - 1e-12 <= r <= 2.0)))
            return out
        if len(part.active_js(dec)) <= 12:
            rows += guarded("interpolation.threshold_vs_brute", dict(desc), brute)
    return SuiteResult(rows)


def suite_refinement(ctx: Context, opts: dict) -> SuiteResult:
    """Measured constants at ``n`` and ``2n + 1``; each must move by less than 10%."""
    base = _domain_for(ctx, opts)
    fine = ctx.refine(base)
    (dc, pc), (df, pf) = ctx.get(base), ctx.get(fine)
    limit = ctx.cfg.tol("refinement", 0.10)
    consts: list[tuple[str, Callable]] = []
    consts.append(("embedding/lifting", lambda d, p: embedding_constants(d, p, ctx.size, ctx.seed)))
    consts.append(("boundedness", lambda d, p: boundedness_constants(d, p, 2.0, ctx.size, ctx.seed)))
    for desc in opts.get("equivalence", EQUIVALENCE_CASES[:2]):
        case = _equivalence_case(desc)
        consts.append((f"equivalence {json.dumps(desc, sort_keys=True)}", lambda d, p, case=case:
                       {"C": equivalence_constant(d, p, case, ctx.size, ctx.seed)}))
    for pq in opts.get("max_regularity", MAX_REG_CASES):
        p_, q_ = map(_exponent, pq)
        consts.append((f"max_regularity p={p_:g} q={q_:g}", lambda d, p, p_=p_, q_=q_:
                       {"C": max_reg_constant(d, p, 0.5, p_, q_, 2.0, ctx.size, ctx.seed)}))
    rows = []
    for label, fn in consts:
        def one(label=label, fn=fn):
            a, b = fn(dc, pc), fn(df, pf)
            out = []
            for key in a:
                change = abs(b[key] / a[key] - 1)
                name = label if key == "C" else key
                out.append(Row("refinement.change", dict(case=name, n=dc.n, n_fine=df.n, coarse=a[key],
                               fine=b[key]), change, target=limit, cmp="<=", passed=change <= limit))
            return out
        rows += guarded("refinement.change", dict(case=label), one)
    return SuiteResult(rows)


@dataclass(frozen=True)
class SuiteInfo:
    name: str
    fn: Callable
    summary: str


REGISTRY: dict[str, SuiteInfo] = {
    s.name: s
    for s in (
        SuiteInfo("partition", suite_partition, "dyadic partition sums to one on the spectrum"),
        SuiteInfo("spectral", suite_spectral, "eigenvalues against the closed form, orthonormality"),
        SuiteInfo("besov", suite_besov, "embedding and lifting constants over the ensemble"),
        SuiteInfo("multiplier", suite_multiplier, "dyadic multiplier bound, resolvent factorization, amalgam estimates"),
        SuiteInfo("gaussian", suite_gaussian, "heat kernel positivity and Gaussian upper bound"),
        SuiteInfo("boundedness", suite_boundedness, "semigroup boundedness on Besov spaces"),
        SuiteInfo("block_decay", suite_block_decay, "per-block exponential decay and small-time prefactor"),
        SuiteInfo("smoothing", suite_smoothing, "1-D smoothing rates by log-log fit"),
        SuiteInfo("smoothing2d", suite_smoothing2d, "2-D smoothing rate on a square"),
        SuiteInfo("continuity", suite_continuity, "strong and dual-weak continuity at t = 0"),
        SuiteInfo("equivalence", suite_equivalence, "semigroup characterization of Besov norms"),
        SuiteInfo("max_regularity", suite_max_regularity, "maximal regularity and Duhamel solver"),
        SuiteInfo("inhomog", suite_inhomog, "inhomogeneous norms, low-frequency lemma"),
        SuiteInfo("interpolation", suite_interpolation, "K-functional and real interpolation"),
        SuiteInfo("refinement", suite_refinement, "stability of measured constants under n -> 2n+1"),
    )
}


def run_suite(cfg: ExperimentConfig, jobs: int = 1) -> Report:
    """Run every selected suite; rows come back in registry order regardless of ``jobs``."""
    ctx = Context(cfg)
    names = [n for n in REGISTRY if n in cfg.suites]
    timings: dict[str, float] = {}

    def work(name: str) -> SuiteResult:
        t0 = time.perf_counter()
        try:
            res = REGISTRY[name].fn(ctx, cfg.suites[name])
        except Exception as exc:  # noqa: BLE001
            res = SuiteResult([failed_row(name, {}, exc)])
        timings[name] = time.perf_counter() - t0
        return res

    t_start = time.perf_counter()
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, names))
    else:
        results = [work(n) for n in names]
    report = Report()
    digest = cfg.digest()
    for name, res in zip(names, results):
        for row in res.rows:
            row.params = dict(row.params)
        report.extend(res.rows)
        report.plots.extend(sorted(res.plots, key=lambda p: p.name))
    report.meta = dict(
        config_hash=digest,
        phi0_hash=construction_hash(),
        seed=cfg.seed,
        ensemble_size=cfg.ensemble_size,
        suites=names,
        grids=[ctx.grids[k] for k in sorted(ctx.grids)],
        rows=len(report.rows),
        passed=report.passed,
    )
    report.wall_clock = dict(total_s=time.perf_counter() - t_start, suites_s=timings)
    return report
