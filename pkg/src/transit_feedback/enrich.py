"""Structure beyond topic: sentiment, mode, assets, customer characteristics.

Asset matching is a longest-match-first, left-to-right gazetteer scan of the
normalized token stream against catalog aliases, with numeric tokens checked
against vehicle-id ranges. Sentiment comes from a pluggable provider (bridge
endpoint or the bundled polarity lexicon). Gender inference is a transparent
name-table lookup with abstention, disabled by default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from .corpus import AssetCatalog, FeedbackRecord, Mode, NameGenderTable
from .labels import TopicLabel
from .textprep import tokenize


class Sentiment(Enum):
    NEGATIVE = "Negative"
    NEUTRAL = "Neutral"
    POSITIVE = "Positive"


SENTIMENT_LABELS = [s.value for s in Sentiment]


class Gender(Enum):
    MALE = "Male"
    FEMALE = "Female"
    UNKNOWN = "Unknown"


class AssetKind(Enum):
    ROUTE = "Route"
    STATION = "Station"
    VEHICLE = "Vehicle"
    LINE = "Line"


@dataclass(frozen=True)
class Asset:
    kind: AssetKind
    id: str


# ---------------------------------------------------------------------------
# asset matching

_KIND_MODE = {
    AssetKind.ROUTE: Mode.BUS,
    AssetKind.STATION: Mode.RAIL,
    AssetKind.LINE: Mode.RAIL,
}


def _alias_table(catalog: AssetCatalog) -> dict[str, tuple[AssetKind, str]]:
    table: dict[str, tuple[AssetKind, str]] = {}
    for station, aliases in catalog.stations.items():
        for a in aliases:
            table[" ".join(tokenize(a))] = (AssetKind.STATION, station)
    for route, aliases in catalog.routes.items():
        for a in aliases:
            table.setdefault(" ".join(tokenize(a)), (AssetKind.ROUTE, route))
    for color, line in catalog.line_colors.items():
        table.setdefault(" ".join(tokenize(color)), (AssetKind.LINE, line))
    return table


def match_assets(text: str, catalog: AssetCatalog) -> tuple[Mode, list[Asset]]:
    """Scan normalized uni/bigrams (longest match first) against catalog
    aliases; numeric tokens are checked against vehicle-id ranges. Mode is
    the majority of per-asset evidence (stations/lines/rail vehicles vote
    Rail, routes/bus vehicles vote Bus); ties and no evidence give Generic."""
    aliases = _alias_table(catalog)
    max_len = max((len(a.split()) for a in aliases), default=1)
    tokens = tokenize(text)

    assets: list[Asset] = []
    votes: dict[Mode, int] = {Mode.BUS: 0, Mode.RAIL: 0}
    seen: set[Asset] = set()
    i = 0
    while i < len(tokens):
        matched = False
        for L in range(min(max_len, len(tokens) - i), 0, -1):
            gram = " ".join(tokens[i:i + L])
            hit = aliases.get(gram)
            if hit is not None:
                kind, asset_id = hit
                asset = Asset(kind, asset_id)
                if asset not in seen:
                    seen.add(asset)
                    assets.append(asset)
                    votes[_KIND_MODE[kind]] += 1
                i += L
                matched = True
                break
        if matched:
            continue
        tok = tokens[i]
        if tok.isdigit():
            mode = catalog.vehicle_mode(int(tok))
            if mode is not None:
                asset = Asset(AssetKind.VEHICLE, tok)
                if asset not in seen:
                    seen.add(asset)
                    assets.append(asset)
                    votes[mode] += 1
        i += 1

    if votes[Mode.BUS] > votes[Mode.RAIL]:
        return Mode.BUS, assets
    if votes[Mode.RAIL] > votes[Mode.BUS]:
        return Mode.RAIL, assets
    return Mode.GENERIC, assets


# ---------------------------------------------------------------------------
# sentiment providers

class LexiconSentiment:
    """Deterministic fallback: sum of term polarities from a small bundled
    lexicon; positive sum -> Positive, negative -> Negative, else Neutral."""

    name = "lexicon"

    def __init__(self, path: str | Path | None = None):
        if path is None:
            path = Path(str(resources.files("transit_feedback")
                            .joinpath("data", "sentiment_lexicon.txt")))
        self.polarity: dict[str, int] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            term, pol = line.split("\t")
            self.polarity[term] = int(pol)

    def sentiment(self, text: str) -> Sentiment:
        score = sum(self.polarity.get(t, 0) for t in tokenize(text))
        if score > 0:
            return Sentiment.POSITIVE
        if score < 0:
            return Sentiment.NEGATIVE
        return Sentiment.NEUTRAL


class BridgeSentiment:
    """Sentiment over the same wire protocol as the topic bridge; labels are
    Negative/Neutral/Positive. Falls back per record when configured."""

    name = "bridge"

    def __init__(self, client, fallback: LexiconSentiment | None = None):
        self.client = client
        self.fallback = fallback

    def sentiment(self, text: str) -> Sentiment:
        res = self.client.classify([text])[0]
        if res.failed:
            if self.fallback is not None:
                return self.fallback.sentiment(text)
            raise RuntimeError(f"sentiment bridge failed: {res.error}")
        return Sentiment(res.label)


# ---------------------------------------------------------------------------
# gender inference

def infer_gender(display_name: str | None, table: NameGenderTable) -> Gender:
    """First whitespace token of the display name, lowercased, looked up in
    the name table; abstains outside the threshold band or off-table."""
    if not display_name or not display_name.strip():
        return Gender.UNKNOWN
    first = display_name.strip().split()[0].lower()
    p = table.entries.get(first)
    if p is None:
        return Gender.UNKNOWN
    if p >= table.threshold:
        return Gender.FEMALE
    if p <= 1.0 - table.threshold:
        return Gender.MALE
    return Gender.UNKNOWN


# ---------------------------------------------------------------------------
# pipeline

@dataclass
class EnrichedRecord:
    record: FeedbackRecord
    topic: TopicLabel
    sentiment: Sentiment
    mode: Mode
    assets: list[Asset]
    gender: Gender
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "record": self.record.to_dict(),
            "topic": self.topic.title,
            "sentiment": self.sentiment.value,
            "mode": self.mode.value,
            "assets": [{"kind": a.kind.value, "id": a.id} for a in self.assets],
            "gender": self.gender.value,
            "flags": self.flags,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnrichedRecord":
        return cls(
            record=FeedbackRecord.from_dict(d["record"]),
            topic=TopicLabel.from_title(d["topic"]),
            sentiment=Sentiment(d["sentiment"]),
            mode=Mode(d["mode"]),
            assets=[Asset(AssetKind(a["kind"]), a["id"]) for a in d["assets"]],
            gender=Gender(d["gender"]),
            flags=list(d["flags"]),
        )

    def to_csv_row(self) -> dict:
        return {
            "id": self.record.id,
            "timestamp": self.record.timestamp.isoformat(),
            "channel": self.record.channel.value,
            "topic": self.topic.title,
            "sentiment": self.sentiment.value,
            "mode": self.mode.value,
            "assets": ";".join(f"{a.kind.value}:{a.id}" for a in self.assets),
            "gender": self.gender.value,
            "flags": ";".join(self.flags),
        }


def enriched_to_jsonl(records: list[EnrichedRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False) + "\n")


def enriched_from_jsonl(path: str | Path) -> list[EnrichedRecord]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(EnrichedRecord.from_dict(json.loads(line)))
    return out


def enrich_pipeline(
    records: list[FeedbackRecord],
    topic_fn,
    catalog: AssetCatalog,
    sentiment_provider,
    gender_table: NameGenderTable | None = None,
    infer_gender_enabled: bool = False,
) -> list[EnrichedRecord]:
    """Run topic -> sentiment -> assets/mode -> gender per record.
    ``topic_fn(text) -> TopicLabel``. Per-record failures are isolated: the
    record is emitted flagged with neutral defaults, never dropped; output
    order equals input order."""
    out: list[EnrichedRecord] = []
    for rec in records:
        flags: list[str] = []
        try:
            topic = topic_fn(rec.text)
        except Exception as exc:  # isolate per-record classifier failures
            topic = TopicLabel.UNASSIGNED
            flags.append(f"topic failed: {exc}")
        try:
            sent = sentiment_provider.sentiment(rec.text)
        except Exception as exc:
            sent = Sentiment.NEUTRAL
            flags.append(f"sentiment failed: {exc}")
        try:
            mode, assets = match_assets(rec.text, catalog)
        except Exception as exc:
            mode, assets = Mode.GENERIC, []
            flags.append(f"assets failed: {exc}")
        if not assets and rec.mode_hint is not None:
            mode = rec.mode_hint  # intake channel knows when text doesn't
        if infer_gender_enabled and gender_table is not None:
            gender = infer_gender(rec.author_name, gender_table)
        else:
            gender = Gender.UNKNOWN
        if not rec.text.strip():
            flags.append("empty text")
        out.append(EnrichedRecord(
            record=rec, topic=topic, sentiment=sent, mode=mode,
            assets=assets, gender=gender, flags=flags))
    return out
