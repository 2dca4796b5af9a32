"""Small transformer encoder with masked-language-model and topic heads."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
from torch import nn


@dataclass
class EncoderConfig:
    vocab_size: int
    n_classes: int = 11
    max_len: int = 48
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    d_ff: int = 128
    dropout: float = 0.1


class TinyEncoder(nn.Module):
    """Token + position embeddings into a torch TransformerEncoder. The MLM
    head drives self-supervised pretraining; the topic head reads the CLS
    position for classification."""

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        self.tok_emb = nn.Embedding(cfg.vocab_size, cfg.d_model, padding_idx=0)
        self.pos_emb = nn.Embedding(cfg.max_len, cfg.d_model)
        layer = nn.TransformerEncoderLayer(
            d_model=cfg.d_model, nhead=cfg.n_heads,
            dim_feedforward=cfg.d_ff, dropout=cfg.dropout,
            batch_first=True, norm_first=True)
        self.encoder = nn.TransformerEncoder(layer, num_layers=cfg.n_layers,
                                             enable_nested_tensor=False)
        self.mlm_head = nn.Linear(cfg.d_model, cfg.vocab_size)
        self.topic_head = nn.Linear(cfg.d_model, cfg.n_classes)

    def _encode(self, ids: torch.Tensor) -> torch.Tensor:
        pos = torch.arange(ids.shape[1], device=ids.device)
        h = self.tok_emb(ids) + self.pos_emb(pos)[None, :, :]
        return self.encoder(h, src_key_padding_mask=(ids == 0))

    def mlm_logits(self, ids: torch.Tensor) -> torch.Tensor:
        return self.mlm_head(self._encode(ids))

    def topic_logits(self, ids: torch.Tensor) -> torch.Tensor:
        h = self._encode(ids)
        mask = (ids != 0).unsqueeze(-1).float()
        pooled = (h * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1.0)
        return self.topic_head(pooled)

    # -- persistence -------------------------------------------------------

    def save(self, path) -> None:
        torch.save({"config": asdict(self.cfg),
                    "state_dict": self.state_dict()}, path)

    @classmethod
    def load(cls, path) -> "TinyEncoder":
        blob = torch.load(path, map_location="cpu", weights_only=True)
        model = cls(EncoderConfig(**blob["config"]))
        model.load_state_dict(blob["state_dict"])
        model.eval()
        return model
