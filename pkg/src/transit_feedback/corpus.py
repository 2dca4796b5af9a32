"""Corpus ingestion, validation, and synthetic-data generation.

Feedback arrives as CSV exports (CRM-style channels) or JSON-lines tweet
dumps. Auxiliary data (asset catalog, ridership series, name table) are JSON
documents with an embedded ``schema_version``. A seeded synthetic generator
provides ground-truth corpora for testing topic recovery and classifiers.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np


class Channel(Enum):
    CRM = "CRM"
    TWITTER = "Twitter"
    SURVEY = "Survey"
    OTHER = "Other"


class Mode(Enum):
    BUS = "Bus"
    RAIL = "Rail"
    GENERIC = "Generic"


@dataclass(frozen=True)
class FeedbackRecord:
    """One raw feedback item from any channel."""

    id: str
    text: str
    channel: Channel
    timestamp: datetime
    problem_category: str | None = None
    mode_hint: Mode | None = None
    author_name: str | None = None

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "text": self.text,
            "channel": self.channel.value,
            "timestamp": self.timestamp.isoformat(),
        }
        if self.problem_category is not None:
            d["problem_category"] = self.problem_category
        if self.mode_hint is not None:
            d["mode_hint"] = self.mode_hint.value
        if self.author_name is not None:
            d["author_name"] = self.author_name
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FeedbackRecord":
        return cls(
            id=str(d["id"]),
            text=d["text"],
            channel=Channel(d["channel"]),
            timestamp=_parse_timestamp(d["timestamp"]),
            problem_category=d.get("problem_category"),
            mode_hint=Mode(d["mode_hint"]) if d.get("mode_hint") else None,
            author_name=d.get("author_name"),
        )


@dataclass(frozen=True)
class Reject:
    """A rejected input row and the reason it was dropped."""

    row: int
    reason: str


@dataclass
class ParseResult:
    records: list[FeedbackRecord]
    rejects: list[Reject] = field(default_factory=list)


class CorpusError(Exception):
    """Fatal ingestion problem (bad schema, missing file, empty output)."""


# ---------------------------------------------------------------------------
# bundled data

def _data_path(name: str) -> Path:
    return Path(str(resources.files("transit_feedback").joinpath("data", name)))


def load_category_vocabulary(path: str | Path | None = None) -> list[str]:
    """Load the CRM problem-category vocabulary (bundled 61-entry list by
    default, replaceable via config)."""
    p = Path(path) if path else _data_path("problem_categories.txt")
    cats = []
    for line in p.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            cats.append(line)
    return cats


# ---------------------------------------------------------------------------
# timestamp handling

def _parse_timestamp(value: str, fallback_format: str | None = None) -> datetime:
    value = value.strip()
    try:
        ts = datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError:
        if fallback_format is None:
            raise
        ts = datetime.strptime(value, fallback_format)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


# ---------------------------------------------------------------------------
# CSV ingestion

DEFAULT_COLUMNS = {
    "id": "id",
    "text": "text",
    "channel": "channel",
    "timestamp": "timestamp",
    "problem_category": "problem_category",
    "mode_hint": "mode_hint",
    "author_name": "author_name",
}

REQUIRED_FIELDS = ("id", "text", "channel", "timestamp")


def parse_feedback_csv(
    path: str | Path,
    schema_config: dict | None = None,
) -> ParseResult:
    """Parse a feedback CSV export into records plus a rejects report.

    ``schema_config`` keys:
      columns            field -> CSV column name mapping (defaults above)
      timestamp_format   strptime fallback when ISO-8601 parsing fails
      category_vocab     list of valid problem categories (bundled default)
    """
    cfg = schema_config or {}
    columns = {**DEFAULT_COLUMNS, **cfg.get("columns", {})}
    fallback = cfg.get("timestamp_format")
    vocab = set(cfg.get("category_vocab") or load_category_vocabulary())

    path = Path(path)
    if not path.exists():
        raise CorpusError(f"feedback CSV not found: {path}")

    records: list[FeedbackRecord] = []
    rejects: list[Reject] = []
    seen_ids: set[str] = set()

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise CorpusError(f"empty CSV (no header row): {path}")
        missing = [columns[f] for f in REQUIRED_FIELDS
                   if columns[f] not in reader.fieldnames]
        if missing:
            raise CorpusError(f"missing required column(s): {missing}")

        for rowno, row in enumerate(reader, start=2):
            def col(fieldname: str) -> str | None:
                v = row.get(columns[fieldname])
                return v.strip() if v is not None and v.strip() else None

            text = col("text")
            if text is None:
                rejects.append(Reject(rowno, "empty text"))
                continue
            rec_id = col("id")
            if rec_id is None:
                rejects.append(Reject(rowno, "empty id"))
                continue
            if rec_id in seen_ids:
                rejects.append(Reject(rowno, f"duplicate id {rec_id!r}"))
                continue
            try:
                channel = Channel(col("channel") or "")
            except ValueError:
                rejects.append(Reject(rowno, f"unknown channel {col('channel')!r}"))
                continue
            try:
                ts = _parse_timestamp(col("timestamp") or "", fallback)
            except ValueError:
                rejects.append(Reject(rowno, f"unparseable timestamp {col('timestamp')!r}"))
                continue
            category = col("problem_category")
            if category is not None and category not in vocab:
                rejects.append(Reject(rowno, f"unknown problem category {category!r}"))
                continue
            mode_hint = None
            raw_mode = col("mode_hint")
            if raw_mode is not None:
                try:
                    mode_hint = Mode(raw_mode)
                except ValueError:
                    rejects.append(Reject(rowno, f"unknown mode hint {raw_mode!r}"))
                    continue

            seen_ids.add(rec_id)
            records.append(FeedbackRecord(
                id=rec_id, text=text, channel=channel, timestamp=ts,
                problem_category=category, mode_hint=mode_hint,
                author_name=col("author_name"),
            ))

    return ParseResult(records, rejects)


# ---------------------------------------------------------------------------
# tweet ingestion

def parse_tweets_jsonl(
    path: str | Path,
    handles: list[str],
) -> ParseResult:
    """Parse a JSON-lines tweet dump, keeping tweets that mention any of the
    configured agency handles. One object per line with at least ``text``,
    ``created_at``, ``id``."""
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"tweet file not found: {path}")
    if not handles:
        raise CorpusError("no agency handles configured")
    wanted = [h.lower() if h.startswith("@") else "@" + h.lower() for h in handles]

    records: list[FeedbackRecord] = []
    rejects: list[Reject] = []
    seen_ids: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                text = obj["text"]
                ts = _parse_timestamp(str(obj["created_at"]))
                tweet_id = str(obj["id"])
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                rejects.append(Reject(lineno, f"malformed line: {exc}"))
                continue
            if not text or not text.strip():
                rejects.append(Reject(lineno, "empty text"))
                continue
            low = text.lower()
            if not any(h in low for h in wanted):
                continue
            if tweet_id in seen_ids:
                rejects.append(Reject(lineno, f"duplicate id {tweet_id!r}"))
                continue
            seen_ids.add(tweet_id)
            records.append(FeedbackRecord(
                id=tweet_id, text=text.strip(), channel=Channel.TWITTER,
                timestamp=ts, author_name=obj.get("user_name") or obj.get("name"),
            ))
    return ParseResult(records, rejects)


# ---------------------------------------------------------------------------
# record serialization

def records_to_jsonl(records: list[FeedbackRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False) + "\n")


def records_from_jsonl(path: str | Path) -> list[FeedbackRecord]:
    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(FeedbackRecord.from_dict(json.loads(line)))
    return records


# ---------------------------------------------------------------------------
# synthetic corpus (ground-truth oracle for topic recovery and classifiers)

@dataclass
class SyntheticCorpus:
    records: list[FeedbackRecord]
    topic_word_dists: np.ndarray   # K_true x V, rows sum to 1
    doc_labels: np.ndarray         # n_docs, planted argmax topic per doc
    doc_mixtures: np.ndarray       # n_docs x K_true
    vocab_words: list[str]         # column order of topic_word_dists


def generate_synthetic_corpus(
    n_docs: int,
    K_true: int,
    vocab_per_topic: int = 25,
    doc_len: int = 40,
    alpha: float = 0.1,
    seed: int = 0,
    disjoint: bool = True,
) -> SyntheticCorpus:
    """Sample documents from the topic-mixture generative process.

    Each document draws a mixture from a symmetric Dirichlet(alpha), then
    ``doc_len`` words from the per-topic word distributions. In disjoint mode
    every topic owns ``vocab_per_topic`` exclusive words, giving an exact
    recovery oracle. Deterministic for a fixed seed.
    """
    if K_true < 1:
        raise ValueError("K_true must be >= 1")
    if doc_len < 1:
        raise ValueError("doc_len must be >= 1")
    if vocab_per_topic < 1:
        raise ValueError("vocab_per_topic must be >= 1")

    rng = np.random.default_rng(seed)
    V = K_true * vocab_per_topic
    words = [f"topic{k:02d}word{j:03d}"
             for k in range(K_true) for j in range(vocab_per_topic)]

    phi = np.zeros((K_true, V))
    if disjoint:
        for k in range(K_true):
            block = rng.dirichlet(np.ones(vocab_per_topic))
            phi[k, k * vocab_per_topic:(k + 1) * vocab_per_topic] = block
    else:
        for k in range(K_true):
            phi[k] = rng.dirichlet(np.ones(V))

    mixtures = rng.dirichlet(np.full(K_true, alpha), size=n_docs)
    labels = np.argmax(mixtures, axis=1)

    base = datetime(2022, 1, 1, tzinfo=timezone.utc)
    records = []
    for d in range(n_docs):
        zs = rng.choice(K_true, size=doc_len, p=mixtures[d])
        toks = [words[rng.choice(V, p=phi[z])] for z in zs]
        records.append(FeedbackRecord(
            id=f"synth-{d:06d}",
            text=" ".join(toks),
            channel=Channel.OTHER,
            timestamp=base + timedelta(days=d % 365, seconds=d % 86400),
        ))
    return SyntheticCorpus(records, phi, labels, mixtures, words)


# ---------------------------------------------------------------------------
# auxiliary data

@dataclass
class AssetCatalog:
    """Gazetteer of agency assets used for uni/bigram matching."""

    routes: dict[str, list[str]]          # route id -> lowercase aliases
    stations: dict[str, list[str]]        # station name -> lowercase aliases
    vehicle_id_ranges: list[tuple[int, int, Mode]]
    line_colors: dict[str, str]           # lowercase color -> line name

    @classmethod
    def load(cls, path: str | Path | None = None) -> "AssetCatalog":
        p = Path(path) if path else _data_path("assets.json")
        doc = json.loads(p.read_text(encoding="utf-8"))
        ranges = [(r["low"], r["high"], Mode(r["mode"]))
                  for r in doc["vehicle_id_ranges"]]
        by_mode: dict[Mode, list[tuple[int, int]]] = {}
        for low, high, mode in ranges:
            if low > high:
                raise CorpusError(f"bad vehicle range {low}..{high}")
            for lo2, hi2 in by_mode.get(mode, []):
                if low <= hi2 and lo2 <= high:
                    raise CorpusError(
                        f"overlapping vehicle ranges for mode {mode.value}")
            by_mode.setdefault(mode, []).append((low, high))
        return cls(
            routes={rid: [a.lower() for a in aliases]
                    for rid, aliases in doc["routes"].items()},
            stations={name: [a.lower() for a in aliases]
                      for name, aliases in doc["stations"].items()},
            vehicle_id_ranges=ranges,
            line_colors={c.lower(): name
                         for c, name in doc["line_colors"].items()},
        )

    def vehicle_mode(self, vid: int) -> Mode | None:
        for low, high, mode in self.vehicle_id_ranges:
            if low <= vid <= high:
                return mode
        return None


@dataclass
class RidershipSeries:
    """Daily rider counts, optionally keyed by mode or route group."""

    entries: dict[str | None, dict[str, int]]  # group -> ISO date -> riders

    @classmethod
    def load(cls, path: str | Path) -> "RidershipSeries":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        entries: dict[str | None, dict[str, int]] = {}
        for row in doc["entries"]:
            riders = int(row["riders"])
            if riders < 0:
                raise CorpusError(f"negative ridership on {row['date']}")
            group = row.get("key")
            per = entries.setdefault(group, {})
            if row["date"] in per:
                raise CorpusError(f"duplicate ridership date {row['date']}")
            per[row["date"]] = riders
        return cls(entries)

    def save(self, path: str | Path) -> None:
        rows = []
        for group in sorted(self.entries, key=lambda g: (g is not None, g or "")):
            for date in sorted(self.entries[group]):
                row = {"date": date, "riders": self.entries[group][date]}
                if group is not None:
                    row["key"] = group
                rows.append(row)
        Path(path).write_text(
            json.dumps({"schema_version": 1, "entries": rows}, indent=1),
            encoding="utf-8")

    def total(self, dates: list[str], group: str | None = None) -> int:
        per = self.entries.get(group, {})
        return sum(per.get(d, 0) for d in dates)


def generate_synthetic_ridership(
    start: str, days: int, base: int = 300_000, seed: int = 0,
    groups: list[str] | None = None,
) -> RidershipSeries:
    """Seeded synthetic daily ridership, for demos and fixtures."""
    rng = np.random.default_rng(seed)
    start_dt = datetime.fromisoformat(start).date()
    entries: dict[str | None, dict[str, int]] = {}
    for group in (groups if groups else [None]):
        per = {}
        for i in range(days):
            date = (start_dt + timedelta(days=i)).isoformat()
            per[date] = int(base * (0.8 + 0.4 * rng.random()))
        entries[group] = per
    return RidershipSeries(entries)


@dataclass
class NameGenderTable:
    """First-name -> p(female) lookup with an abstention threshold."""

    entries: dict[str, float]
    threshold: float = 0.9

    @classmethod
    def load(cls, path: str | Path | None = None) -> "NameGenderTable":
        p = Path(path) if path else _data_path("names.json")
        doc = json.loads(p.read_text(encoding="utf-8"))
        entries = {k.lower(): float(v) for k, v in doc["entries"].items()}
        for name, prob in entries.items():
            if not 0.0 <= prob <= 1.0:
                raise CorpusError(f"probability out of range for {name!r}")
        thr = float(doc.get("threshold", 0.9))
        if not 0.5 <= thr <= 1.0:
            raise CorpusError("threshold must be in [0.5, 1]")
        return cls(entries, thr)
