"""Deterministic SVG bar reports for group-level scores.

The chart is generated directly as SVG text so that identical inputs give
identical bytes: no timestamps, no library version strings, all coordinates
formatted with a fixed precision. Tests can invert pixel positions through
``axis_range`` and ``y_of``, which together define the (documented) linear
axis transform.
"""

import math
from dataclasses import dataclass, field

from .core import NoiseCeiling
from .errors import EmptySpec

CANVAS_W = 960
CANVAS_H = 480

MARGIN_LEFT = 72.0
MARGIN_RIGHT = 24.0
MARGIN_TOP = 56.0
MARGIN_BOTTOM = 72.0

PLOT_LEFT = MARGIN_LEFT
PLOT_RIGHT = CANVAS_W - MARGIN_RIGHT
PLOT_TOP = MARGIN_TOP
PLOT_BOTTOM = CANVAS_H - MARGIN_BOTTOM
PLOT_W = PLOT_RIGHT - PLOT_LEFT
PLOT_H = PLOT_BOTTOM - PLOT_TOP

FONT = "DejaVu Sans, Helvetica, sans-serif"

# One color per within-group bar index, cycled.
PALETTE = ("#4878cf", "#ee854a", "#6acc65", "#d65f5f", "#956cb4", "#8c613c")

N_TICKS = 6


@dataclass(frozen=True)
class Bar:
    label: str
    mean_score: float
    sem: float | None = None
    significant: bool = False


@dataclass(frozen=True)
class BarGroup:
    model_id: str
    bars: tuple[Bar, ...]


@dataclass(frozen=True)
class ReportSpec:
    title: str
    groups: tuple[BarGroup, ...]
    ceiling: NoiseCeiling | None = None
    axis_label: str = "signed squared correlation"
    footer_rows: tuple[tuple[str, str], ...] = field(default=())


def _all_bars(spec):
    return [bar for group in spec.groups for bar in group.bars]


def axis_range(spec):
    """Value-space axis bounds (lo, hi).

    Linear scale from min(0, lowest bar - sem) to max(ceiling upper,
    highest bar + sem), then widened by 5% of that span on both ends.
    """
    bars = _all_bars(spec)
    if not bars:
        raise EmptySpec("report spec has no bars")
    lows = [b.mean_score - (b.sem or 0.0) for b in bars]
    highs = [b.mean_score + (b.sem or 0.0) for b in bars]
    lo = min(0.0, min(lows))
    hi = max(highs)
    if spec.ceiling is not None and math.isfinite(spec.ceiling.upper):
        hi = max(hi, spec.ceiling.upper)
    span = hi - lo
    if span <= 0.0:
        span = 1.0
    return lo - 0.05 * span, hi + 0.05 * span


def y_of(value, lo, hi):
    """Map a data value onto the canvas: lo -> plot bottom, hi -> plot top."""
    return PLOT_BOTTOM - (value - lo) / (hi - lo) * PLOT_H


def _fmt(x):
    return f"{x:.3f}"


def _esc(text):
    return (
        str(text)
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _ceiling_band(spec, lo, hi, out):
    ceiling = spec.ceiling
    if ceiling is None:
        return
    if not (math.isfinite(ceiling.lower) and math.isfinite(ceiling.upper)):
        return
    top = y_of(ceiling.upper, lo, hi)
    bottom = y_of(ceiling.lower, lo, hi)
    out.append(
        f'<rect class="ceiling" x="{_fmt(PLOT_LEFT)}" y="{_fmt(top)}" '
        f'width="{_fmt(PLOT_W)}" height="{_fmt(bottom - top)}" '
        f'fill="#999999" fill-opacity="0.35" '
        f'data-lower="{ceiling.lower!r}" data-upper="{ceiling.upper!r}"/>'
    )


def _axis(spec, lo, hi, out):
    out.append(
        f'<line class="axis" x1="{_fmt(PLOT_LEFT)}" y1="{_fmt(PLOT_TOP)}" '
        f'x2="{_fmt(PLOT_LEFT)}" y2="{_fmt(PLOT_BOTTOM)}" stroke="#000000"/>'
    )
    for k in range(N_TICKS):
        value = lo + (hi - lo) * k / (N_TICKS - 1)
        y = y_of(value, lo, hi)
        out.append(
            f'<line class="tick" x1="{_fmt(PLOT_LEFT - 5)}" y1="{_fmt(y)}" '
            f'x2="{_fmt(PLOT_LEFT)}" y2="{_fmt(y)}" stroke="#000000"/>'
        )
        out.append(
            f'<text class="ticklabel" x="{_fmt(PLOT_LEFT - 9)}" '
            f'y="{_fmt(y + 4)}" text-anchor="end" font-size="12">'
            f"{value:.3f}</text>"
        )
    # zero line, drawn when zero falls inside the plotted range
    if lo < 0.0 < hi:
        y0 = y_of(0.0, lo, hi)
        out.append(
            f'<line class="zero" x1="{_fmt(PLOT_LEFT)}" y1="{_fmt(y0)}" '
            f'x2="{_fmt(PLOT_RIGHT)}" y2="{_fmt(y0)}" '
            f'stroke="#000000" stroke-width="0.5"/>'
        )
    out.append(
        f'<text class="axislabel" x="16" y="{_fmt(PLOT_TOP + PLOT_H / 2)}" '
        f'text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 16 {_fmt(PLOT_TOP + PLOT_H / 2)})">'
        f"{_esc(spec.axis_label)}</text>"
    )


def _bars(spec, lo, hi, out):
    n_groups = len(spec.groups)
    group_w = PLOT_W / n_groups
    # bars grow away from the zero line, clamped into the plot if the
    # padded range happens not to contain zero
    y_zero = min(max(y_of(0.0, lo, hi), PLOT_TOP), PLOT_BOTTOM)
    for gi, group in enumerate(spec.groups):
        gx = PLOT_LEFT + gi * group_w
        n = len(group.bars)
        slot = group_w / max(n, 1)
        bar_w = slot * 0.7
        for bi, bar in enumerate(group.bars):
            cx = gx + (bi + 0.5) * slot
            x = cx - bar_w / 2
            y_top = min(y_of(bar.mean_score, lo, hi), y_zero)
            height = abs(y_of(bar.mean_score, lo, hi) - y_zero)
            color = PALETTE[bi % len(PALETTE)]
            out.append(
                f'<rect class="bar" x="{_fmt(x)}" y="{_fmt(y_top)}" '
                f'width="{_fmt(bar_w)}" height="{_fmt(height)}" '
                f'fill="{color}" data-value="{float(bar.mean_score)!r}"/>'
            )
            if bar.sem is not None:
                y_lo = y_of(bar.mean_score - bar.sem, lo, hi)
                y_hi = y_of(bar.mean_score + bar.sem, lo, hi)
                cap = bar_w * 0.25
                out.append(
                    f'<line class="errorbar" x1="{_fmt(cx)}" y1="{_fmt(y_lo)}" '
                    f'x2="{_fmt(cx)}" y2="{_fmt(y_hi)}" stroke="#000000"/>'
                )
                out.append(
                    f'<line class="errorbar-cap" x1="{_fmt(cx - cap)}" '
                    f'y1="{_fmt(y_hi)}" x2="{_fmt(cx + cap)}" y2="{_fmt(y_hi)}" '
                    f'stroke="#000000"/>'
                )
                out.append(
                    f'<line class="errorbar-cap" x1="{_fmt(cx - cap)}" '
                    f'y1="{_fmt(y_lo)}" x2="{_fmt(cx + cap)}" y2="{_fmt(y_lo)}" '
                    f'stroke="#000000"/>'
                )
            if bar.significant:
                apex = bar.mean_score + (bar.sem or 0.0)
                y_star = min(y_of(apex, lo, hi), y_top) - 6.0
                out.append(
                    f'<text class="sig" x="{_fmt(cx)}" y="{_fmt(y_star)}" '
                    f'text-anchor="middle" font-size="16">*</text>'
                )
            out.append(
                f'<text class="barlabel" x="{_fmt(cx)}" '
                f'y="{_fmt(PLOT_BOTTOM + 16)}" text-anchor="middle" '
                f'font-size="11">{_esc(bar.label)}</text>'
            )
        out.append(
            f'<text class="grouplabel" x="{_fmt(gx + group_w / 2)}" '
            f'y="{_fmt(PLOT_BOTTOM + 34)}" text-anchor="middle" '
            f'font-size="13" font-weight="bold">{_esc(group.model_id)}</text>'
        )


def _footer(spec, out):
    if not spec.footer_rows:
        return
    y = PLOT_BOTTOM + 52
    for key, value in spec.footer_rows:
        out.append(
            f'<text class="footer" x="{_fmt(PLOT_LEFT)}" y="{_fmt(y)}" '
            f'font-size="11">{_esc(key)}: {_esc(value)}</text>'
        )
        y += 14


def render_report(spec):
    """Render a ReportSpec to a complete SVG document string."""
    if not spec.groups or not _all_bars(spec):
        raise EmptySpec("report spec has no bars")
    lo, hi = axis_range(spec)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS_W}" '
        f'height="{CANVAS_H}" viewBox="0 0 {CANVAS_W} {CANVAS_H}" '
        f'font-family="{FONT}">',
        f'<rect x="0" y="0" width="{CANVAS_W}" height="{CANVAS_H}" '
        f'fill="#ffffff"/>',
        f'<text class="title" x="{_fmt(CANVAS_W / 2)}" y="28" '
        f'text-anchor="middle" font-size="16" font-weight="bold">'
        f"{_esc(spec.title)}</text>",
    ]
    _ceiling_band(spec, lo, hi, out)
    _axis(spec, lo, hi, out)
    _bars(spec, lo, hi, out)
    _footer(spec, out)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def spec_from_rsa_results(results, title):
    """Group EvaluationResults by model and build a plot spec.

    The ceiling band comes from the first result carrying one; all results
    against the same brain stack share the same ceiling, so any is fine.
    """
    by_model: dict[str, list] = {}
    for res in results:
        by_model.setdefault(res.model_id, []).append(res)
    groups = tuple(
        BarGroup(
            model_id=model_id,
            bars=tuple(
                Bar(
                    label=r.layer_name,
                    mean_score=r.mean_score,
                    sem=r.sem,
                    significant=r.significant,
                )
                for r in layer_results
            ),
        )
        for model_id, layer_results in by_model.items()
    )
    ceiling = next((r.noise_ceiling for r in results if r.noise_ceiling), None)
    return ReportSpec(title=title, groups=groups, ceiling=ceiling)


def spec_from_wrsa_results(results, title):
    """One bar per WrsaResult, plus a weights table in the footer."""
    groups = tuple(
        BarGroup(
            model_id=res.model_id,
            bars=(
                Bar(
                    label="weighted",
                    mean_score=res.mean_score,
                    sem=res.sem,
                    significant=res.significant,
                ),
            ),
        )
        for res in results
    )
    footer = []
    for res in results:
        flat = [w for subject in res.weights for fold in subject for w in fold]
        k = len(res.predictor_names)
        means = [
            sum(flat[i::k]) / (len(flat) // k) if flat else 0.0 for i in range(k)
        ]
        for name, w in zip(res.predictor_names, means):
            footer.append((f"{res.model_id}/{name}", f"mean weight {w:.4f}"))
    ceiling = next((r.noise_ceiling for r in results if r.noise_ceiling), None)
    return ReportSpec(
        title=title, groups=groups, ceiling=ceiling, footer_rows=tuple(footer)
    )
