"""Importable test helpers (kept out of conftest so test modules can import
them without relying on conftest's module name, which is not unique across
the repository's test roots)."""

from datetime import datetime, timezone
from pathlib import Path

from transit_feedback.corpus import Channel, FeedbackRecord

FIXTURES = Path(__file__).parent / "fixtures"


def make_record(i, text, **kw):
    defaults = dict(id=f"r{i}", text=text, channel=Channel.CRM,
                    timestamp=datetime(2023, 5, 1, 9, 0,
                                       tzinfo=timezone.utc),
                    problem_category=None, mode_hint=None, author_name=None)
    defaults.update(kw)
    return FeedbackRecord(**defaults)
