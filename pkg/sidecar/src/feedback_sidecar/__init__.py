"""Neural topic classifier sidecar for the transit-feedback engine.

Trains a small transformer encoder on the engine's labeled JSONL output and
serves predictions over the engine's newline-delimited JSON bridge protocol.
The engine is never imported; the two components share only file formats and
the wire protocol.
"""

from feedback_sidecar.labels import LABELS

__all__ = ["LABELS"]
