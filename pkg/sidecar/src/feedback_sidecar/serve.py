"""Bridge-protocol server: newline-delimited JSON over stdin/stdout.

The server speaks first with ``{"proto": 1, "labels": [...]}``, then answers
each ``{"id": N, "text": "..."}`` line with
``{"id": N, "label": "...", "scores": [...]}``. A malformed line gets an
error response carrying whatever id could be salvaged, and the loop
continues; EOF on stdin ends the process.
"""

from __future__ import annotations

import json
import re
import sys

import torch

from feedback_sidecar.labels import LABELS
from feedback_sidecar.train import load_checkpoint

PROTO_VERSION = 1
_ID_RE = re.compile(r'"id"\s*:\s*(-?\d+)')


def _salvage_id(line: str):
    m = _ID_RE.search(line)
    return int(m.group(1)) if m else None


def serve(checkpoint_dir, stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    model, tokenizer, meta = load_checkpoint(checkpoint_dir)
    max_len = model.cfg.max_len

    def emit(doc: dict) -> None:
        stdout.write(json.dumps(doc, ensure_ascii=False) + "\n")
        stdout.flush()

    emit({"proto": PROTO_VERSION, "labels": LABELS})

    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            if not isinstance(req, dict):
                raise ValueError("request is not an object")
        except ValueError:
            emit({"id": _salvage_id(line), "error": "malformed request line"})
            continue
        req_id = req.get("id")
        text = req.get("text")
        if not isinstance(req_id, int) or not isinstance(text, str):
            emit({"id": req_id if isinstance(req_id, int) else _salvage_id(line),
                  "error": "request needs integer id and string text"})
            continue
        with torch.no_grad():
            ids = torch.tensor([tokenizer.encode(text, max_len)])
            scores = torch.softmax(model.topic_logits(ids)[0], dim=0)
        emit({"id": req_id,
              "label": LABELS[int(scores.argmax())],
              "scores": [float(s) for s in scores]})
    return 0
