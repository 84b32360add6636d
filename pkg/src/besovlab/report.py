"""Report rows, log-log rate fitting and deterministic CSV/JSON/SVG emission."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NonPositiveValue, TooFewPoints

CSV_COLUMNS = ("suite", "param_json", "value", "target", "tol", "pass")


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return float(f"{v:.12g}")
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return f"{float(v):.12g}"


@dataclass
class Row:
    """One measured quantity with its pass/fail verdict.

    ``cmp`` documents how ``value`` was judged against ``target`` (``"<="``,
    ``">="``, ``"abs<="`` for ``|value - target| <= tol``, or ``""`` for
    finiteness-only rows).
    """

    suite: str
    params: dict
    value: float
    target: float | None = None
    tol: float | None = None
    passed: bool = True
    cmp: str = ""
    note: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)
        try:
            self.value = float(self.value)
        except (TypeError, ValueError):
            self.value = float("nan")

    @property
    def param_json(self) -> str:
        return json.dumps(_clean(self.params), sort_keys=True, separators=(",", ":"))

    def as_dict(self) -> dict:
        return _clean(
            dict(
                suite=self.suite,
                params=self.params,
                value=self.value,
                target=self.target,
                tol=self.tol,
                passed=self.passed,
                cmp=self.cmp,
                note=self.note,
            )
        )


def close_row(suite, params, value, target, tol, note="") -> Row:
    ok = bool(np.isfinite(value) and abs(value - target) <= tol)
    return Row(suite, params, value, target, tol, ok, "abs<=", note)


def failed_row(suite: str, params: dict, exc: BaseException) -> Row:
    return Row(suite, params, float("nan"), passed=False, note=f"{type(exc).__name__}: {exc}")


@dataclass
class RatePlot:
    name: str
    t: list
    values: list
    slope: float
    intercept: float
    target_slope: float | None = None


@dataclass
class Report:
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    plots: list = field(default_factory=list)
    wall_clock: dict = field(default_factory=dict)

    def extend(self, rows) -> None:
        self.rows.extend(rows)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def failures(self) -> list:
        return [r for r in self.rows if not r.passed]

    def by_suite(self, prefix: str) -> list:
        return [r for r in self.rows if r.suite == prefix or r.suite.startswith(prefix + ".")]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(
                [r.suite, r.param_json, fmt(r.value), fmt(r.target), fmt(r.tol), fmt(r.passed)]
            )
        return buf.getvalue()

    def to_json(self) -> str:
        digest = self.meta.get("config_hash")
        rows = []
        for i, r in enumerate(self.rows):
            d = r.as_dict()
            d["key"] = i
            if digest is not None:
                d["config_hash"] = digest
            rows.append(d)
        doc = dict(meta=_clean(self.meta), rows=rows)
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def fit_rate(points) -> tuple[float, float, float]:
    """Least-squares line through ``(log t, log value)``.

    Returns ``(slope, intercept, r_squared)``.
    """
    pts = [(float(t), float(v)) for t, v in points]
    if len(pts) < 3:
        raise TooFewPoints(f"need at least 3 points, got {len(pts)}")
    arr = np.array(pts)
    if np.any(~(arr > 0)):
        raise NonPositiveValue("rate fits need strictly positive t and values")
    x, y = np.log(arr[:, 0]), np.log(arr[:, 1])
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return float(slope), float(intercept), float(r2)


def _svg_plot(plot: RatePlot, width=480, height=360) -> str:
    x = np.log10(np.asarray(plot.t, float))
    y = np.log10(np.asarray(plot.values, float))
    pad = 50
    x0, x1 = x.min(), x.max()
    y0, y1 = y.min(), y.max()
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def sx(v):
        return pad + (v - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(v):
        return height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)

    ln10 = math.log(10)
    fit_y = (plot.slope * x * ln10 + plot.intercept) / ln10
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="12">log10 t</text>',
        f'<text x="14" y="{height / 2:.1f}" font-size="12" transform="rotate(-90 14 {height / 2:.1f})" '
        f'text-anchor="middle">log10 ratio</text>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="13">{plot.name}</text>',
    ]
    for xv, yv in zip(x, y):
        parts.append(f'<circle cx="{sx(xv):.2f}" cy="{sy(yv):.2f}" r="3" fill="steelblue"/>')
    parts.append(
        f'<line x1="{sx(x[0]):.2f}" y1="{sy(fit_y[0]):.2f}" x2="{sx(x[-1]):.2f}" '
        f'y2="{sy(fit_y[-1]):.2f}" stroke="crimson"/>'
    )
    legend = [f"fitted slope {plot.slope:.4f}"]
    if plot.target_slope is not None:
        guide = fit_y[0] + plot.target_slope * (x - x[0])
        parts.append(
            f'<line x1="{sx(x[0]):.2f}" y1="{sy(guide[0]):.2f}" x2="{sx(x[-1]):.2f}" '
            f'y2="{sy(guide[-1]):.2f}" stroke="gray" stroke-dasharray="5,4"/>'
        )
        legend.append(f"target slope {plot.target_slope:.4f}")
    for i, text in enumerate(legend):
        parts.append(
            f'<text x="{width - pad}" y="{pad + 14 * i}" text-anchor="end" font-size="11">{text}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


def emit(report: Report, out_dir, formats=("csv", "json", "svg")) -> list[Path]:
    """Write ``report.csv``, ``report.json``, one SVG per rate plot, and ``timing.json``.

    Wall-clock times go to ``timing.json`` only, so the CSV and JSON are
    byte-identical across runs with the same configuration and seed.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        p = out / "report.csv"
        p.write_text(report.to_csv())
        written.append(p)
    if "json" in formats:
        p = out / "report.json"
        p.write_text(report.to_json())
        written.append(p)
    if "svg" in formats:
        for plot in report.plots:
            p = out / f"{_slug(plot.name)}.svg"
            p.write_text(_svg_plot(plot))
            written.append(p)
    if report.wall_clock:
        p = out / "timing.json"
        p.write_text(json.dumps(_clean(report.wall_clock), sort_keys=True, indent=1) + "\n")
        written.append(p)
    return written
