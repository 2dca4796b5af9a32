"""Aggregation of enriched feedback into reportable artifacts.

Topic-by-sentiment and topic-by-mode tables (counts plus row-percent shares),
ridership-normalized complaint rates ("complaints per million riders"),
trailing moving averages, and CSV/JSON/SVG emission. Outputs are bit-stable
across runs for identical inputs.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

from .corpus import RidershipSeries
from .enrich import AssetKind, EnrichedRecord
from .labels import ALL_TOPICS

MILLION = 1e6


class ReportError(Exception):
    pass


# ---------------------------------------------------------------------------
# aggregation tables

@dataclass
class AggregationTable:
    row_dim: str
    col_dim: str
    columns: list[str]
    rows: dict[str, list[int]]        # row key -> counts per column
    footer: list[str] = field(default_factory=list)

    def totals(self) -> list[int]:
        return [sum(r[j] for r in self.rows.values())
                for j in range(len(self.columns))]

    def row_percent(self, key: str) -> list[float]:
        counts = self.rows[key]
        total = sum(counts)
        if total == 0:
            return [0.0] * len(counts)
        return [100.0 * c / total for c in counts]

    def to_rows(self) -> list[list[str]]:
        header = [self.row_dim]
        for c in self.columns:
            header += [f"{c} count", f"{c} %"]
        out = [header]
        for key in self.rows:
            pct = self.row_percent(key)
            row = [key]
            for j in range(len(self.columns)):
                row += [str(self.rows[key][j]), f"{pct[j]:.2f}"]
            out.append(row)
        totals = self.totals()
        grand = sum(totals)
        total_row = ["Total (All Topics)"]
        for j, t in enumerate(totals):
            share = 100.0 * t / grand if grand else 0.0
            total_row += [str(t), f"{share:.2f}"]
        out.append(total_row)
        return out


_COL_ORDERS = {
    "sentiment": ["Negative", "Neutral", "Positive"],
    "mode": ["Bus", "Rail", "Generic"],
}


def aggregate(
    records: list[EnrichedRecord],
    col_dim: str = "sentiment",
) -> AggregationTable:
    """Counts and row-percent shares of topic x sentiment or topic x mode.
    Topics with no records are omitted and noted in the footer. Invariant to
    input record order."""
    if col_dim not in _COL_ORDERS:
        raise ReportError(f"unsupported column dimension {col_dim!r}")
    columns = _COL_ORDERS[col_dim]
    col_index = {c: j for j, c in enumerate(columns)}

    counts: dict[str, list[int]] = {}
    for rec in records:
        key = rec.topic.title
        value = (rec.sentiment.value if col_dim == "sentiment"
                 else rec.mode.value)
        counts.setdefault(key, [0] * len(columns))[col_index[value]] += 1

    rows = {t.title: counts[t.title] for t in ALL_TOPICS if t.title in counts}
    extra = sorted(set(counts) - set(rows))  # e.g. Unassigned
    for key in extra:
        rows[key] = counts[key]
    omitted = [t.title for t in ALL_TOPICS if t.title not in counts]
    footer = ([f"omitted (no records): {', '.join(omitted)}"] if omitted else [])
    return AggregationTable("topic", col_dim, columns, rows, footer)


# ---------------------------------------------------------------------------
# ridership-normalized rates

@dataclass
class RateValue:
    value: float | None            # None when the rate is undefined
    complaints: int
    riders: int
    flags: list[str] = field(default_factory=list)


@dataclass
class NormalizedSeries:
    entries: list[tuple[str, float]]   # (ISO date, value), dates increasing
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        dates = [d for d, _ in self.entries]
        if dates != sorted(set(dates)):
            raise ReportError("series dates must be strictly increasing")
        if any(v < 0 for _, v in self.entries):
            raise ReportError("series values must be non-negative")

    def values(self) -> list[float]:
        return [v for _, v in self.entries]


def window_dates(start: str, end: str) -> list[str]:
    d0, d1 = date.fromisoformat(start), date.fromisoformat(end)
    if d1 < d0:
        raise ReportError("empty window")
    return [(d0 + timedelta(days=i)).isoformat()
            for i in range((d1 - d0).days + 1)]


def _record_groups(rec: EnrichedRecord, group_by: str) -> list[str]:
    if group_by == "mode":
        return [rec.mode.value]
    kind = {"route": AssetKind.ROUTE, "station": AssetKind.STATION,
            "line": AssetKind.LINE}.get(group_by)
    if kind is None:
        raise ReportError(f"unsupported group_by {group_by!r}")
    return [a.id for a in rec.assets if a.kind is kind]


def _rate(n_complaints: int, riders: int, flags: list[str]) -> RateValue:
    if riders <= 0:
        return RateValue(None, n_complaints, riders,
                         flags + ["undefined rate: zero ridership"])
    return RateValue(n_complaints / (riders / MILLION), n_complaints,
                     riders, flags)


def complaints_per_million(
    records: list[EnrichedRecord],
    ridership: RidershipSeries,
    window: tuple[str, str],
    group_by: str | None = None,
) -> RateValue | dict[str, RateValue]:
    """Complaint count over the window divided by window ridership in
    millions; per group when ``group_by`` is one of mode/route/station/line.
    Groups without their own ridership series fall back to system totals
    (flagged); zero ridership is flagged undefined, never divided."""
    dates = window_dates(*window)
    date_set = set(dates)
    in_window = [r for r in records
                 if r.record.timestamp.date().isoformat() in date_set]

    if group_by is None:
        riders = ridership.total(dates, None)
        return _rate(len(in_window), riders, [])

    groups: dict[str, int] = {}
    for rec in in_window:
        for g in _record_groups(rec, group_by):
            groups[g] = groups.get(g, 0) + 1
    out: dict[str, RateValue] = {}
    for g in sorted(groups):
        flags = []
        if g in ridership.entries:
            riders = ridership.total(dates, g)
        else:
            riders = ridership.total(dates, None)
            flags.append("system ridership fallback")
        out[g] = _rate(groups[g], riders, flags)
    return out


def daily_rate_series(
    records: list[EnrichedRecord],
    ridership: RidershipSeries,
    window: tuple[str, str],
    group: str | None = None,
) -> NormalizedSeries:
    """Per-day complaints per million riders over the window. Days with zero
    ridership are emitted as 0 and listed in the metadata."""
    dates = window_dates(*window)
    per_day = {d: 0 for d in dates}
    for rec in records:
        d = rec.record.timestamp.date().isoformat()
        if d in per_day:
            per_day[d] += 1
    riders_by_date = ridership.entries.get(group) or ridership.entries.get(None, {})
    entries = []
    zero_days = []
    for d in dates:
        riders = riders_by_date.get(d, 0)
        if riders <= 0:
            zero_days.append(d)
            entries.append((d, 0.0))
        else:
            entries.append((d, per_day[d] / (riders / MILLION)))
    meta = {"window": list(window), "group": group}
    if zero_days:
        meta["zero_ridership_days"] = zero_days
    return NormalizedSeries(entries, meta)


def moving_average(
    series: NormalizedSeries,
    window_days: int = 30,
    min_periods: int | None = None,
) -> NormalizedSeries:
    """Trailing arithmetic mean over ``window_days`` entries of a daily
    series. By default only full windows are emitted; a smaller
    ``min_periods`` allows a warm-up ramp."""
    if window_days < 1:
        raise ReportError("window must be >= 1")
    need = window_days if min_periods is None else min_periods
    out = []
    values = series.values()
    for i, (d, _) in enumerate(series.entries):
        lo = max(0, i - window_days + 1)
        window_vals = values[lo:i + 1]
        if len(window_vals) >= need:
            out.append((d, sum(window_vals) / len(window_vals)))
    meta = dict(series.meta)
    meta["moving_average_days"] = window_days
    return NormalizedSeries(out, meta)


# ---------------------------------------------------------------------------
# emission

def _table_csv(table: AggregationTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(table.to_rows())
    for note in table.footer:
        w.writerow([f"# {note}"])
    return buf.getvalue()


def _series_points(series: dict[str, NormalizedSeries]):
    all_dates = sorted({d for s in series.values() for d, _ in s.entries})
    return all_dates


def _series_svg(series: dict[str, NormalizedSeries],
                width: int = 800, height: int = 360) -> str:
    """Line chart, one path per group, data table embedded in metadata."""
    margin = 50
    all_dates = _series_points(series)
    vmax = max((v for s in series.values() for _, v in s.entries), default=1.0)
    vmax = vmax if vmax > 0 else 1.0
    x_of = {d: margin + (width - 2 * margin) * i / max(1, len(all_dates) - 1)
            for i, d in enumerate(all_dates)}

    def y_of(v: float) -> float:
        return height - margin - (height - 2 * margin) * v / vmax

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
              "#8c564b", "#e377c2", "#7f7f7f"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" font-family="sans-serif" font-size="11">',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
    ]
    for gi, (group, s) in enumerate(sorted(series.items())):
        if not s.entries:
            continue
        pts = " ".join(f"{x_of[d]:.2f},{y_of(v):.2f}" for d, v in s.entries)
        color = colors[gi % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{color}" '
                     f'stroke-width="1.5" points="{pts}"><title>{group}'
                     f"</title></polyline>")
        parts.append(f'<text x="{width - margin + 4}" '
                     f'y="{y_of(s.entries[-1][1]):.2f}" fill="{color}">'
                     f"{group}</text>")
    parts.append("<metadata><![CDATA[")
    parts.append("group,date,value")
    for group, s in sorted(series.items()):
        for d, v in s.entries:
            parts.append(f"{group},{d},{v!r}")
    parts.append("]]></metadata>")
    parts.append("</svg>")
    return "\n".join(parts)


def _bars_svg(values: dict[str, float], width: int = 800,
              height: int = 360) -> str:
    """Ranked horizontal bar chart for per-group rates."""
    margin, bar_h = 160, 22
    items = sorted(values.items(), key=lambda kv: -kv[1])
    vmax = max((v for _, v in items), default=1.0) or 1.0
    height = max(height, 2 * 40 + bar_h * len(items))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" font-family="sans-serif" font-size="11">']
    for i, (group, v) in enumerate(items):
        y = 40 + i * bar_h
        w = (width - margin - 40) * v / vmax
        parts.append(f'<text x="{margin - 6}" y="{y + 14}" '
                     f'text-anchor="end">{group}</text>')
        parts.append(f'<rect x="{margin}" y="{y}" width="{w:.2f}" '
                     f'height="{bar_h - 4}" fill="#1f77b4"/>')
        parts.append(f'<text x="{margin + w + 4:.2f}" y="{y + 14}">'
                     f"{v:.2f}</text>")
    parts.append("<metadata><![CDATA[")
    parts.append("group,value")
    for group, v in items:
        parts.append(f"{group},{v!r}")
    parts.append("]]></metadata>")
    parts.append("</svg>")
    return "\n".join(parts)


def emit(artifact, fmt: str, path: str | Path) -> Path:
    """Write an AggregationTable, NormalizedSeries (or group map of series),
    or per-group rate map as csv, json, or svg."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    if isinstance(artifact, AggregationTable):
        if fmt == "csv":
            path.write_text(_table_csv(artifact), encoding="utf-8")
        elif fmt == "json":
            doc = {
                "schema_version": 1,
                "row_dim": artifact.row_dim,
                "col_dim": artifact.col_dim,
                "columns": artifact.columns,
                "rows": artifact.rows,
                "totals": artifact.totals(),
                "footer": artifact.footer,
            }
            path.write_text(json.dumps(doc, indent=1), encoding="utf-8")
        elif fmt == "svg":
            rates = {k: sum(v) for k, v in artifact.rows.items()}
            path.write_text(_bars_svg({k: float(v) for k, v in rates.items()}),
                            encoding="utf-8")
        else:
            raise ReportError(f"unsupported format {fmt!r}")
        return path

    if isinstance(artifact, NormalizedSeries):
        artifact = {"all": artifact}
    if isinstance(artifact, dict) and artifact and \
            all(isinstance(v, NormalizedSeries) for v in artifact.values()):
        if fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["group", "date", "value"])
            for group in sorted(artifact):
                for d, v in artifact[group].entries:
                    w.writerow([group, d, repr(v)])
            path.write_text(buf.getvalue(), encoding="utf-8")
        elif fmt == "json":
            doc = {"schema_version": 1,
                   "series": {g: {"entries": s.entries, "meta": s.meta}
                              for g, s in artifact.items()}}
            path.write_text(json.dumps(doc, indent=1), encoding="utf-8")
        elif fmt == "svg":
            path.write_text(_series_svg(artifact), encoding="utf-8")
        else:
            raise ReportError(f"unsupported format {fmt!r}")
        return path

    if isinstance(artifact, dict) and \
            all(isinstance(v, RateValue) for v in artifact.values()):
        defined = {g: rv.value for g, rv in artifact.items()
                   if rv.value is not None}
        if fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["group", "complaints", "riders", "rate", "flags"])
            for g in sorted(artifact):
                rv = artifact[g]
                w.writerow([g, rv.complaints, rv.riders,
                            "" if rv.value is None else repr(rv.value),
                            ";".join(rv.flags)])
            path.write_text(buf.getvalue(), encoding="utf-8")
        elif fmt == "json":
            doc = {"schema_version": 1,
                   "rates": {g: {"value": rv.value,
                                 "complaints": rv.complaints,
                                 "riders": rv.riders, "flags": rv.flags}
                             for g, rv in artifact.items()}}
            path.write_text(json.dumps(doc, indent=1), encoding="utf-8")
        elif fmt == "svg":
            path.write_text(_bars_svg(defined), encoding="utf-8")
        else:
            raise ReportError(f"unsupported format {fmt!r}")
        return path

    raise ReportError(f"cannot emit artifact of type {type(artifact).__name__}")
