"""Fine-tune the small encoder for 11-class topic classification.

Input is the engine's labeled JSONL (one record per line with ``text`` and
``label`` fields). The encoder is first pretrained with a masked-language
objective on the unlabeled text, then a classification head is added and the
whole network fine-tuned on an 80/20 train/test split. Loss curves, test
metrics, and split indices are written alongside the checkpoint.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from feedback_sidecar.labels import LABEL_INDEX, LABELS, LabelMismatchError
from feedback_sidecar.metrics import evaluate
from feedback_sidecar.model import EncoderConfig, TinyEncoder
from feedback_sidecar.tokenizer import BpeTokenizer

MODEL_FILE = "model.pt"
TOKENIZER_FILE = "tokenizer.json"
METRICS_FILE = "metrics.json"


@dataclass
class TrainSpec:
    labeled_path: str | Path
    checkpoint_dir: str | Path
    epochs: int = 20
    lr: float = 1e-3
    seed: int = 0
    split: float = 0.8
    pretrain_epochs: int = 2
    batch_size: int = 32
    max_len: int = 48
    n_merges: int = 300
    engine_style_cleanup: bool = True  # lowercase + URL/@-handle stripping
    encoder: dict = field(default_factory=dict)  # EncoderConfig overrides


def read_labeled_jsonl(path: str | Path) -> tuple[list[str], list[int]]:
    """Texts and label indices from the engine's labeled-record file.
    Any label outside the engine's 11-label set is fatal."""
    texts, labels = [], []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            title = rec["label"]
            if title not in LABEL_INDEX:
                raise LabelMismatchError(
                    f"line {lineno}: label {title!r} is not one of the "
                    f"engine's {len(LABELS)} labels")
            texts.append(rec["text"])
            labels.append(LABEL_INDEX[title])
    if not texts:
        raise ValueError(f"no labeled records in {path}")
    return texts, labels


def stratified_split(labels: list[int], train_frac: float,
                     seed: int) -> tuple[list[int], list[int]]:
    """Seeded per-class shuffle split; every class contributes to both sides
    when it has at least two members."""
    rng = random.Random(seed)
    by_class: dict[int, list[int]] = {}
    for i, y in enumerate(labels):
        by_class.setdefault(y, []).append(i)
    train_idx, test_idx = [], []
    for y in sorted(by_class):
        idx = by_class[y]
        rng.shuffle(idx)
        cut = max(1, round(len(idx) * train_frac))
        if cut == len(idx) and len(idx) > 1:
            cut -= 1
        train_idx += idx[:cut]
        test_idx += idx[cut:]
    train_idx.sort()
    test_idx.sort()
    return train_idx, test_idx


def _seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)
    torch.set_num_threads(1)  # bitwise-reproducible CPU training


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for lo in range(0, n, batch_size):
        yield order[lo:lo + batch_size]


def _pretrain_mlm(model: TinyEncoder, ids: torch.Tensor, spec: TrainSpec,
                  rng: np.random.Generator) -> list[float]:
    """Masked-token prediction over all texts: 15% of non-pad positions are
    replaced with [MASK] (id 3) and must be recovered."""
    opt = torch.optim.Adam(model.parameters(), lr=spec.lr)
    lossfn = nn.CrossEntropyLoss(ignore_index=-100)
    curve = []
    model.train()
    for _ in range(spec.pretrain_epochs):
        total, steps = 0.0, 0
        for batch in _batches(len(ids), spec.batch_size, rng):
            x = ids[batch].clone()
            maskable = (x != 0) & (x != 2)  # not PAD, not CLS
            pick = torch.from_numpy(
                rng.random(x.shape) < 0.15) & maskable
            if not pick.any():
                continue
            targets = torch.full_like(x, -100)
            targets[pick] = x[pick]
            x[pick] = 3  # [MASK]
            loss = lossfn(model.mlm_logits(x).transpose(1, 2), targets)
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += float(loss.detach())
            steps += 1
        curve.append(total / max(steps, 1))
    return curve


def finetune(spec: TrainSpec) -> Path:
    """Run the full recipe and return the checkpoint directory."""
    texts, labels = read_labeled_jsonl(spec.labeled_path)
    _seed_everything(spec.seed)
    rng = np.random.default_rng(spec.seed)

    tokenizer = BpeTokenizer.train(texts, spec.n_merges,
                                   normalize_text=spec.engine_style_cleanup)
    ids = torch.tensor([tokenizer.encode(t, spec.max_len) for t in texts],
                       dtype=torch.long)
    y = torch.tensor(labels, dtype=torch.long)

    cfg = EncoderConfig(vocab_size=len(tokenizer), n_classes=len(LABELS),
                        max_len=spec.max_len, **spec.encoder)
    model = TinyEncoder(cfg)

    pretrain_curve = _pretrain_mlm(model, ids, spec, rng)

    train_idx, test_idx = stratified_split(labels, spec.split, spec.seed)
    tr = torch.tensor(train_idx)
    opt = torch.optim.Adam(model.parameters(), lr=spec.lr)
    lossfn = nn.CrossEntropyLoss()
    finetune_curve = []
    model.train()
    for _ in range(spec.epochs):
        total, steps = 0.0, 0
        for batch in _batches(len(tr), spec.batch_size, rng):
            sel = tr[batch]
            loss = lossfn(model.topic_logits(ids[sel]), y[sel])
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += float(loss.detach())
            steps += 1
        finetune_curve.append(total / max(steps, 1))

    model.eval()
    with torch.no_grad():
        logits = model.topic_logits(ids[torch.tensor(test_idx)])
    y_pred = logits.argmax(dim=1).tolist()
    y_true = [labels[i] for i in test_idx]
    report = evaluate(y_true, y_pred, len(LABELS))

    out = Path(spec.checkpoint_dir)
    out.mkdir(parents=True, exist_ok=True)
    model.save(out / MODEL_FILE)
    tokenizer.save(out / TOKENIZER_FILE)
    (out / METRICS_FILE).write_text(json.dumps({
        "schema_version": 1,
        "seed": spec.seed,
        "labels": LABELS,
        "split": spec.split,
        "epochs": spec.epochs,
        "lr": spec.lr,
        "pretrain_epochs": spec.pretrain_epochs,
        "engine_style_cleanup": spec.engine_style_cleanup,
        "pretrain_loss_curve": pretrain_curve,
        "finetune_loss_curve": finetune_curve,
        "train_indices": train_idx,
        "test_indices": test_idx,
        "test_true": y_true,
        "test_pred": y_pred,
        "test_metrics": report.to_dict(),
    }, indent=1), encoding="utf-8")
    return out


def load_checkpoint(path: str | Path) -> tuple[TinyEncoder, BpeTokenizer, dict]:
    path = Path(path)
    model = TinyEncoder.load(path / MODEL_FILE)
    tokenizer = BpeTokenizer.load(path / TOKENIZER_FILE)
    meta = json.loads((path / METRICS_FILE).read_text(encoding="utf-8"))
    if meta.get("labels") != LABELS:
        raise LabelMismatchError("checkpoint label set differs from the "
                                 "engine's labels")
    return model, tokenizer, meta
