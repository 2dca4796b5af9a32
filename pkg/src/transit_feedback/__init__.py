"""Transit customer-feedback analytics engine.

Pipeline: ingest feedback corpora, discover latent topics (collapsed Gibbs
LDA) and condense them to 11 broad transit topics, train TF-IDF classifiers,
evaluate them, enrich records with sentiment/mode/assets, and aggregate into
ridership-normalized reports.
"""

from .corpus import (
    AssetCatalog,
    Channel,
    FeedbackRecord,
    Mode,
    NameGenderTable,
    RidershipSeries,
    generate_synthetic_corpus,
    parse_feedback_csv,
    parse_tweets_jsonl,
)
from .labels import ALL_TOPICS, LABEL_TITLES, TopicLabel

__version__ = "0.1.0"

__all__ = [
    "ALL_TOPICS",
    "AssetCatalog",
    "Channel",
    "FeedbackRecord",
    "LABEL_TITLES",
    "Mode",
    "NameGenderTable",
    "RidershipSeries",
    "TopicLabel",
    "generate_synthetic_corpus",
    "parse_feedback_csv",
    "parse_tweets_jsonl",
    "__version__",
]
