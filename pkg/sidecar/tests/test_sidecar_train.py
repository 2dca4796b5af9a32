import json

import pytest

from feedback_sidecar.labels import LABELS, LabelMismatchError
from feedback_sidecar.tokenizer import BpeTokenizer, normalize
from feedback_sidecar.train import (METRICS_FILE, TrainSpec, finetune,
                                    load_checkpoint, read_labeled_jsonl,
                                    stratified_split)


class TestTokenizer:
    def test_normalize_strips_urls_and_handles(self):
        toks = normalize("@wmata the bus at https://example.com/x was LATE")
        assert toks == ["the", "bus", "at", "was", "late"]

    def test_roundtrip_and_determinism(self, tmp_path):
        texts = ["the bus was late", "late train again", "bus bus bus"]
        a = BpeTokenizer.train(texts, n_merges=50)
        b = BpeTokenizer.train(texts, n_merges=50)
        assert a.vocab == b.vocab and a.merges == b.merges
        a.save(tmp_path / "tok.json")
        c = BpeTokenizer.load(tmp_path / "tok.json")
        assert c.encode("the late bus", 16) == a.encode("the late bus", 16)

    def test_encode_pads_and_prefixes_cls(self):
        tok = BpeTokenizer.train(["alpha beta"], n_merges=10)
        ids = tok.encode("alpha", 12)
        assert len(ids) == 12
        assert ids[0] == tok.index["[CLS]"]
        assert ids[-1] == tok.index["[PAD]"]

    def test_unseen_characters_map_to_unk(self):
        tok = BpeTokenizer.train(["aaa bbb"], n_merges=5)
        ids = tok.encode("zzz", 8)
        assert tok.index["[UNK]"] in ids

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            BpeTokenizer.train([], n_merges=5)


class TestReadLabeled:
    def test_reads_engine_format(self, small_labeled_file):
        texts, labels = read_labeled_jsonl(small_labeled_file)
        assert len(texts) == len(labels) == 220
        assert set(labels) <= set(range(len(LABELS)))

    def test_unknown_label_fatal(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text(json.dumps({"id": "1", "text": "x",
                                   "label": "Weather"}) + "\n")
        with pytest.raises(LabelMismatchError, match="Weather"):
            read_labeled_jsonl(bad)

    def test_empty_file_fatal(self, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        with pytest.raises(ValueError):
            read_labeled_jsonl(empty)


class TestSplit:
    def test_ratio_and_partition(self):
        labels = [i % 11 for i in range(660)]
        tr, te = stratified_split(labels, 0.8, seed=3)
        assert sorted(tr + te) == list(range(660))
        assert len(tr) == 528 and len(te) == 132  # exact 80/20

    def test_every_class_on_both_sides(self):
        labels = [i % 11 for i in range(110)]
        tr, te = stratified_split(labels, 0.8, seed=0)
        assert {labels[i] for i in tr} == set(range(11))
        assert {labels[i] for i in te} == set(range(11))

    def test_seed_changes_split(self):
        labels = [i % 4 for i in range(100)]
        assert (stratified_split(labels, 0.8, 0)
                != stratified_split(labels, 0.8, 1))


class TestFinetune:
    def test_one_epoch_smoke_writes_loadable_checkpoint(
            self, small_labeled_file, tmp_path):
        out = finetune(TrainSpec(small_labeled_file, tmp_path / "ckpt",
                                 epochs=1, pretrain_epochs=1, seed=0,
                                 n_merges=100))
        model, tokenizer, meta = load_checkpoint(out)
        assert meta["labels"] == LABELS
        assert len(meta["finetune_loss_curve"]) == 1
        assert len(meta["pretrain_loss_curve"]) == 1
        ids = [tokenizer.encode("bus was late", model.cfg.max_len)]
        import torch
        with torch.no_grad():
            logits = model.topic_logits(torch.tensor(ids))
        assert logits.shape == (1, len(LABELS))

    def test_fixed_seed_reproduces_test_accuracy(
            self, small_labeled_file, tmp_path):
        spec = dict(labeled_path=small_labeled_file, epochs=3,
                    pretrain_epochs=1, seed=7, n_merges=100)
        a = finetune(TrainSpec(checkpoint_dir=tmp_path / "a", **spec))
        b = finetune(TrainSpec(checkpoint_dir=tmp_path / "b", **spec))
        ma = json.loads((a / METRICS_FILE).read_text())
        mb = json.loads((b / METRICS_FILE).read_text())
        assert ma["test_metrics"]["accuracy"] == mb["test_metrics"]["accuracy"]
        assert ma["finetune_loss_curve"] == mb["finetune_loss_curve"]

    def test_loss_curve_decreases(self, checkpoint):
        meta = json.loads((checkpoint / METRICS_FILE).read_text())
        curve = meta["finetune_loss_curve"]
        assert curve[-1] < curve[0]

    def test_split_indices_recorded(self, checkpoint):
        meta = json.loads((checkpoint / METRICS_FILE).read_text())
        n = len(meta["train_indices"]) + len(meta["test_indices"])
        assert n == 660
        assert len(meta["test_pred"]) == len(meta["test_indices"])
