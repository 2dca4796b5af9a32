"""Enrichment and reporting on hand-written feedback.

Runs a handful of realistic feedback lines through asset matching, sentiment,
and the report module, then writes CSV artifacts to a temp directory. Run:

    python3 demos/03_enrich_and_report.py
"""

import random
import tempfile
from datetime import datetime, timedelta
from pathlib import Path

from transit_feedback.corpus import (AssetCatalog, Channel, FeedbackRecord,
                                     generate_synthetic_ridership)
from transit_feedback.enrich import LexiconSentiment, enrich_pipeline
from transit_feedback.labels import TopicLabel
from transit_feedback.report import (aggregate, complaints_per_million,
                                     daily_rate_series, emit, moving_average)

TEXTS = [
    "green line between West Hyattsville and PG Plaza stopped for 20 minutes",
    "the 70 Metrobus #6032 blew past my stop again, terrible",
    "Car 5016 orange line was spotless today, great job",
    "bus 70 driver was rude and the bus was late",
    "love the new rail cars on the green line",
    "route 96 never shows up on weekends",
]

catalog = AssetCatalog.load()
sentiment = LexiconSentiment()
rng = random.Random(4)
start = datetime(2024, 1, 1, 8, 0)
records = [
    FeedbackRecord(id=f"d{i}", text=t, channel=Channel.CRM,
                   timestamp=start + timedelta(days=rng.randrange(90)))
    for i, t in enumerate(TEXTS)
]

enriched = enrich_pipeline(
    records,
    topic_fn=lambda text: TopicLabel.OPERATIONS_DELAYS_PROCEDURES,
    catalog=catalog,
    sentiment_provider=sentiment,
)
for rec in enriched:
    assets = ", ".join(f"{a.kind.value} {a.id}" for a in rec.assets) or "-"
    print(f"{rec.record.id}: mode={rec.mode.value:7s} "
          f"sentiment={rec.sentiment.value:8s} assets=[{assets}]")

table = aggregate(enriched, col_dim="mode")
ridership = generate_synthetic_ridership(
    start="2024-01-01", days=90, groups=[None, "70", "96"], seed=4)

window = ("2024-01-01", "2024-03-30")
rate = complaints_per_million(enriched, ridership, window)
print(f"\nsystem complaints per million riders over 90 days: {rate.value:.4f}")

series = daily_rate_series(enriched, ridership, window)
smoothed = moving_average(series, window_days=30)
print(f"30-day moving average points: {len(smoothed.entries)}")

out = Path(tempfile.mkdtemp(prefix="feedback-report-"))
emit(table, "csv", out / "topic_by_mode.csv")
emit(smoothed, "csv", out / "rate_ma30.csv")
emit(smoothed, "svg", out / "rate_ma30.svg")
print(f"artifacts written under {out}")
