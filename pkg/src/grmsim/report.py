"""Results table (CSV) and faceted recovery plots (SVG).

The CSV uses the fixed header Test_Length,Dimension,Parameters,Bias,RMSE
with one row per condition and family; Dimension holds the
interdimensional correlation level. Values are rounded to three decimals
here and nowhere earlier.

Plots are written as self-contained SVG built from geometric primitives:
one panel per test length labeled "Test Length = <n>", correlation levels
on a categorical x axis, one marker-coded series per family, and a legend
titled "Parameters". Marker shapes and colors echo the R plotting
character conventions (pch 15, 16, 17, 18, 22, 23; black, red, green,
blue, purple, cyan). No external fonts, scripts, or images are
referenced.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .metrics import RecoveryMetrics

CSV_HEADER = ("Test_Length", "Dimension", "Parameters", "Bias", "RMSE")

_DEFAULT_COLORS = ("black", "red", "green", "blue", "purple", "cyan")
_DEFAULT_MARKERS = (
    "square",
    "circle",
    "triangle",
    "diamond",
    "square-open",
    "diamond-open",
)


def _round3(x: float) -> float:
    """Reporting-boundary rounding; +0.0 avoids printing -0.000."""
    return round(float(x), 3) + 0.0


def _family_key(name: str) -> tuple[str, int]:
    m = re.fullmatch(r"([a-zA-Z]+)(\d+)", name)
    if m:
        return (m.group(1), int(m.group(2)))
    return (name, 0)


@dataclass(frozen=True)
class ResultsRow:
    test_length: int
    rho: float
    family: str
    bias: float
    rmse: float


@dataclass
class ResultsTable:
    """Rounded per-condition, per-family recovery results."""

    rows: list[ResultsRow] = field(default_factory=list)

    def __post_init__(self):
        if not self.rows:
            raise ValueError("results table is empty")
        seen = set()
        cell_families: dict[tuple[int, float], set[str]] = {}
        for row in self.rows:
            key = (row.test_length, row.rho, row.family)
            if key in seen:
                raise ValueError(f"duplicate results row {key}")
            seen.add(key)
            cell_families.setdefault((row.test_length, row.rho), set()).add(row.family)
        family_sets = {frozenset(s) for s in cell_families.values()}
        if len(family_sets) > 1:
            raise ValueError("conditions report different family sets")

    @property
    def test_lengths(self) -> list[int]:
        return sorted({r.test_length for r in self.rows})

    @property
    def rhos(self) -> list[float]:
        return sorted({r.rho for r in self.rows})

    @property
    def families(self) -> list[str]:
        return sorted({r.family for r in self.rows}, key=_family_key)

    def value(self, test_length: int, rho: float, family: str, metric: str) -> float:
        for row in self.rows:
            if (
                row.test_length == test_length
                and row.rho == rho
                and row.family == family
            ):
                return getattr(row, metric)
        raise ValueError(f"no row for ({test_length}, {rho}, {family})")

    def require_complete(self) -> None:
        """Every test length must be crossed with every correlation level."""
        have = {(r.test_length, r.rho) for r in self.rows}
        missing = [
            (tl, rho)
            for tl in self.test_lengths
            for rho in self.rhos
            if (tl, rho) not in have
        ]
        if missing:
            raise ValueError(f"missing condition combination(s): {missing}")


def build_results_table(metrics: list[RecoveryMetrics]) -> ResultsTable:
    """Assemble the table in the given condition order, rounding here."""
    if not metrics:
        raise ValueError("no condition metrics to tabulate")
    rows = []
    for rm in metrics:
        for family, (b, r) in rm.families.items():
            rows.append(
                ResultsRow(
                    test_length=rm.condition.test_length,
                    rho=rm.condition.rho,
                    family=family,
                    bias=_round3(b),
                    rmse=_round3(r),
                )
            )
    return ResultsTable(rows)


def write_results_csv(table: ResultsTable, path: str | Path) -> Path:
    """Write the fixed-header CSV with three-decimal values."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for row in table.rows:
            writer.writerow(
                [
                    row.test_length,
                    f"{row.rho:g}",
                    row.family,
                    f"{row.bias:.3f}",
                    f"{row.rmse:.3f}",
                ]
            )
    return path


def read_results_csv(path: str | Path) -> ResultsTable:
    """Round-trip partner of write_results_csv; header must match exactly."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise ValueError(f"{path}: empty results file") from None
        if header != CSV_HEADER:
            raise ValueError(
                f"{path}: header {header!r} does not match {CSV_HEADER!r}"
            )
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 fields, got {len(rec)}")
            rows.append(
                ResultsRow(
                    test_length=int(rec[0]),
                    rho=float(rec[1]),
                    family=rec[2],
                    bias=float(rec[3]),
                    rmse=float(rec[4]),
                )
            )
    return ResultsTable(rows)


@dataclass
class PlotSpec:
    """Geometry and styling for one metric plot.

    ylim=None picks the metric default: (-0.01, 0.01) for bias, data
    range padded by pad_frac on both sides for rmse. `expand` mimics the
    usual 5% axis expansion beyond the limits.
    """

    width_cm: float = 25.0
    height_cm: float = 12.0
    dpi: int = 300
    ylim: tuple[float, float] | None = None
    expand: float = 0.05
    pad_frac: float = 0.10
    colors: tuple[str, ...] = _DEFAULT_COLORS
    markers: tuple[str, ...] = _DEFAULT_MARKERS
    x_label: str = "Interdimensional Correlation"
    legend_title: str = "Parameters"

    def __post_init__(self):
        if self.width_cm <= 0 or self.height_cm <= 0:
            raise ValueError("plot dimensions must be positive")
        if self.dpi < 1:
            raise ValueError("dpi must be >= 1")
        if self.ylim is not None and not self.ylim[0] < self.ylim[1]:
            raise ValueError(f"empty ylim {self.ylim}")
        if self.expand < 0 or self.pad_frac < 0:
            raise ValueError("expand and pad_frac must be nonnegative")
        if not self.colors or not self.markers:
            raise ValueError("colors and markers must be non-empty")

    @property
    def width_px(self) -> int:
        return round(self.width_cm / 2.54 * self.dpi)

    @property
    def height_px(self) -> int:
        return round(self.height_cm / 2.54 * self.dpi)


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """Round tick locations covering [lo, hi]."""
    span = hi - lo
    raw = span / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * mag
        if step >= raw:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * span:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _fmt_tick(v: float) -> str:
    return f"{v:g}"


_MARKER_BUILDERS = {
    "square": lambda r: f"M {-r:.2f},{-r:.2f} L {r:.2f},{-r:.2f} L {r:.2f},{r:.2f} L {-r:.2f},{r:.2f} Z",
    "circle": lambda r: (
        f"M {-r:.2f},0 A {r:.2f},{r:.2f} 0 1,0 {r:.2f},0 "
        f"A {r:.2f},{r:.2f} 0 1,0 {-r:.2f},0 Z"
    ),
    "triangle": lambda r: (
        f"M 0,{-r:.2f} L {0.866 * r:.2f},{0.5 * r:.2f} "
        f"L {-0.866 * r:.2f},{0.5 * r:.2f} Z"
    ),
    "diamond": lambda r: f"M 0,{-r:.2f} L {r:.2f},0 L 0,{r:.2f} L {-r:.2f},0 Z",
}
_MARKER_BUILDERS["square-open"] = _MARKER_BUILDERS["square"]
_MARKER_BUILDERS["diamond-open"] = _MARKER_BUILDERS["diamond"]


def _marker_elem(shape: str, color: str, x: float, y: float, r: float) -> str:
    d = _MARKER_BUILDERS[shape](r)
    if shape.endswith("-open"):
        style = f'fill="none" stroke="{color}" stroke-width="{0.35 * r:.2f}"'
    else:
        style = f'fill="{color}" stroke="none"'
    return f'<path d="{d}" transform="translate({x:.2f} {y:.2f})" {style}/>'


def render_metric_plot(
    table: ResultsTable, metric: str, spec: PlotSpec | None = None
) -> str:
    """Render one faceted metric plot as an SVG document string."""
    if metric not in ("bias", "rmse"):
        raise ValueError(f"metric must be 'bias' or 'rmse', got {metric!r}")
    spec = spec if spec is not None else PlotSpec()
    table.require_complete()

    panels = table.test_lengths
    levels = table.rhos
    families = table.families
    if len(families) > len(spec.colors) or len(families) > len(spec.markers):
        raise ValueError(
            f"{len(families)} families exceed the configured colors/markers"
        )

    values = {
        (tl, rho, fam): table.value(tl, rho, fam, metric)
        for tl in panels
        for rho in levels
        for fam in families
    }
    if spec.ylim is not None:
        lo, hi = spec.ylim
    elif metric == "bias":
        lo, hi = -0.01, 0.01
    else:
        vmin = min(values.values())
        vmax = max(values.values())
        span = vmax - vmin
        if span <= 0.0:
            span = max(abs(vmax), 1e-3)
        lo, hi = vmin - spec.pad_frac * span, vmax + spec.pad_frac * span
    view_lo = lo - spec.expand * (hi - lo)
    view_hi = hi + spec.expand * (hi - lo)

    w, h = spec.width_px, spec.height_px
    s = h / 1417.0
    font_axis = 70 * s
    font_tick = 56 * s
    font_strip = 60 * s
    font_legend = 56 * s
    margin = 25 * s
    strip_h = 95 * s
    tick_len = 14 * s
    ytick_w = 6.2 * 0.56 * font_tick
    pad_left = margin + font_axis * 1.3 + ytick_w + tick_len + 14 * s
    pad_bottom = margin + font_axis * 1.3 + font_tick * 1.2 + tick_len
    legend_w = 11 * 0.58 * font_legend + 70 * s
    panel_gap = 34 * s
    plot_x0 = pad_left
    plot_x1 = w - margin - legend_w
    panel_top = margin + strip_h
    panel_bottom = h - pad_bottom
    panel_h = panel_bottom - panel_top
    n_p = len(panels)
    panel_w = (plot_x1 - plot_x0 - panel_gap * (n_p - 1)) / n_p
    if panel_w <= 0 or panel_h <= 0:
        raise ValueError("canvas too small for the layout")
    marker_r = 22 * s
    line_w = 5 * s

    def y_px(v: float) -> float:
        return panel_bottom - (v - view_lo) / (view_hi - view_lo) * panel_h

    ticks = _nice_ticks(lo, hi)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" font-family="Helvetica, Arial, sans-serif">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
        "<defs>",
    ]
    panel_x0 = {}
    for p_i, tl in enumerate(panels):
        x0 = plot_x0 + p_i * (panel_w + panel_gap)
        panel_x0[tl] = x0
        out.append(
            f'<clipPath id="panel-clip-{p_i}">'
            f'<rect x="{x0:.2f}" y="{panel_top:.2f}" '
            f'width="{panel_w:.2f}" height="{panel_h:.2f}"/></clipPath>'
        )
    out.append("</defs>")

    for p_i, tl in enumerate(panels):
        x0 = panel_x0[tl]
        out.append(
            f'<rect x="{x0:.2f}" y="{margin:.2f}" width="{panel_w:.2f}" '
            f'height="{strip_h - 8 * s:.2f}" fill="#d9d9d9"/>'
        )
        out.append(
            f'<text x="{x0 + panel_w / 2:.2f}" y="{margin + strip_h / 2:.2f}" '
            f'font-size="{font_strip:.1f}" text-anchor="middle">'
            f"Test Length = {tl}</text>"
        )
        out.append(
            f'<rect x="{x0:.2f}" y="{panel_top:.2f}" width="{panel_w:.2f}" '
            f'height="{panel_h:.2f}" fill="#f2f2f2" stroke="#bbbbbb" '
            f'stroke-width="{1.5 * s:.2f}"/>'
        )
        for tv in ticks:
            ty = y_px(tv)
            out.append(
                f'<line x1="{x0:.2f}" y1="{ty:.2f}" x2="{x0 + panel_w:.2f}" '
                f'y2="{ty:.2f}" stroke="white" stroke-width="{2.5 * s:.2f}"/>'
            )
        for l_i in range(len(levels)):
            lx = x0 + panel_w * (l_i + 0.5) / len(levels)
            out.append(
                f'<line x1="{lx:.2f}" y1="{panel_top:.2f}" x2="{lx:.2f}" '
                f'y2="{panel_bottom:.2f}" stroke="white" '
                f'stroke-width="{2.5 * s:.2f}"/>'
            )
            out.append(
                f'<line x1="{lx:.2f}" y1="{panel_bottom:.2f}" x2="{lx:.2f}" '
                f'y2="{panel_bottom + tick_len:.2f}" stroke="#333333" '
                f'stroke-width="{2 * s:.2f}"/>'
            )
            out.append(
                f'<text x="{lx:.2f}" y="{panel_bottom + tick_len + font_tick:.2f}" '
                f'font-size="{font_tick:.1f}" text-anchor="middle">'
                f"{_fmt_tick(levels[l_i])}</text>"
            )
        if p_i == 0:
            for tv in ticks:
                ty = y_px(tv)
                out.append(
                    f'<line x1="{x0 - tick_len:.2f}" y1="{ty:.2f}" x2="{x0:.2f}" '
                    f'y2="{ty:.2f}" stroke="#333333" stroke-width="{2 * s:.2f}"/>'
                )
                out.append(
                    f'<text x="{x0 - tick_len - 8 * s:.2f}" '
                    f'y="{ty + 0.35 * font_tick:.2f}" font-size="{font_tick:.1f}" '
                    f'text-anchor="end">{_fmt_tick(tv)}</text>'
                )

        for f_i, fam in enumerate(families):
            color = spec.colors[f_i]
            shape = spec.markers[f_i]
            pts = []
            for l_i, rho in enumerate(levels):
                lx = x0 + panel_w * (l_i + 0.5) / len(levels)
                pts.append((lx, y_px(values[(tl, rho, fam)])))
            out.append(
                f'<g class="series" data-family="{fam}" data-panel="{tl}" '
                f'clip-path="url(#panel-clip-{p_i})">'
            )
            if len(pts) > 1:
                coords = " ".join(f"{px:.2f},{py:.2f}" for px, py in pts)
                out.append(
                    f'<polyline points="{coords}" fill="none" stroke="{color}" '
                    f'stroke-width="{line_w:.2f}"/>'
                )
            for px, py in pts:
                out.append(_marker_elem(shape, color, px, py, marker_r))
            out.append("</g>")

    y_title = metric.upper() if metric == "rmse" else "Bias"
    out.append(
        f'<text x="{margin + font_axis:.2f}" '
        f'y="{panel_top + panel_h / 2:.2f}" font-size="{font_axis:.1f}" '
        f'text-anchor="middle" transform="rotate(-90 {margin + font_axis:.2f} '
        f'{panel_top + panel_h / 2:.2f})">{y_title}</text>'
    )
    out.append(
        f'<text x="{(plot_x0 + plot_x1) / 2:.2f}" y="{h - margin - 10 * s:.2f}" '
        f'font-size="{font_axis:.1f}" text-anchor="middle">{spec.x_label}</text>'
    )

    leg_x = plot_x1 + 40 * s
    leg_y = panel_top + 10 * s
    out.append(
        f'<text x="{leg_x:.2f}" y="{leg_y:.2f}" font-size="{font_axis * 0.9:.1f}">'
        f"{spec.legend_title}</text>"
    )
    for f_i, fam in enumerate(families):
        ey = leg_y + (f_i + 1) * font_legend * 1.7
        out.append(
            f'<g class="legend-entry" data-family="{fam}">'
            + _marker_elem(spec.markers[f_i], spec.colors[f_i], leg_x + marker_r, ey - 0.3 * font_legend, marker_r)
            + f'<text x="{leg_x + 2.6 * marker_r:.2f}" y="{ey:.2f}" '
            f'font-size="{font_legend:.1f}">{fam}</text></g>'
        )
    out.append("</svg>")
    return "\n".join(out)


def save_plots(
    table: ResultsTable,
    out_dir: str | Path,
    spec: PlotSpec | None = None,
) -> dict[str, Path]:
    """Write bias.svg and rmse.svg for a results table."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for metric in ("bias", "rmse"):
        svg = render_metric_plot(table, metric, spec)
        target = out_dir / f"{metric}.svg"
        target.write_text(svg)
        paths[metric] = target
    return paths
