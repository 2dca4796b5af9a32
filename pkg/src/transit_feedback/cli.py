"""Command-line entry point wiring the pipeline into reproducible runs.

Every artifact-producing subcommand writes a manifest (input hashes, config
snapshot, seed, metrics, timings) to its output directory. All randomness
fans out deterministically from one top-level seed: each stage derives its
own seed as sha256(stage_name:seed) mod 2**32.

Exit codes: 0 success, 1 validation error, 2 runtime failure, 64 usage.
Environment overrides: TRANSIT_FEEDBACK_SEED, TRANSIT_FEEDBACK_OUT,
TRANSIT_FEEDBACK_THREADS (flags win over env, env wins over config file).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import shlex
import sys
import time
from pathlib import Path

import numpy as np

from . import classify as clf
from . import enrich as en
from . import evaluation as ev
from . import report as rp
from . import topics as tp
from .bridge import BridgeClient, ProtocolError
from .corpus import (
    AssetCatalog,
    CorpusError,
    NameGenderTable,
    RidershipSeries,
    generate_synthetic_corpus,
    generate_synthetic_ridership,
    parse_feedback_csv,
    parse_tweets_jsonl,
    records_from_jsonl,
    records_to_jsonl,
)
from .features import TfidfVectorizer
from .labels import LABEL_TITLES, TopicLabel
from .textprep import (
    build_vocabulary,
    count_terms,
    load_term_list,
    preprocess,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_USAGE = 64


class ValidationError(Exception):
    pass


DEFAULT_CONFIG = {
    "seed": 0,
    "threads": 0,                      # 0 = machine default (stages are sequential)
    "out": "runs/latest",
    "paths": {
        "stopwords": None,             # bundled default
        "agency_terms": None,
        "assets": None,                # bundled default
        "ridership": None,
        "names": None,                 # bundled default
        "condensation": None,
    },
    "lda": {
        "K": 23,
        "alpha": None,                 # null -> 50/K
        "beta": 0.01,
        "n_iters": 1000,
        "early_stop_tol": 1e-4,
        "early_stop_window": 50,
        "infer_sweeps": 50,
    },
    "tfidf": {"min_count": 20, "orders": [1, 2]},
    "sgd": {"epochs": 100, "batch_size": 64, "lr": 0.1, "l2": 1e-4,
            "loss": "CrossEntropy"},
    "thresholds": {"primary_topic": 0.5},
    "screen": {"distance_threshold": 0.5, "linkage": "average"},
    "enrich": {"infer_gender": False},
    "report": {"moving_average_days": 30},
    "synth": {"n_docs": 2000, "K_true": 5, "vocab_per_topic": 25,
              "doc_len": 40, "alpha": 0.1},
    "bridge": {"timeout": 30.0, "window": 32},
}


def stage_seed(seed: int, stage: str) -> int:
    digest = hashlib.sha256(f"{stage}:{seed}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(args) -> dict:
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))  # deep copy
    if args.config:
        p = Path(args.config)
        if not p.exists():
            raise ValidationError(f"config file not found: {p}")
        cfg = _deep_merge(cfg, json.loads(p.read_text(encoding="utf-8")))
    env_seed = os.environ.get("TRANSIT_FEEDBACK_SEED")
    if env_seed is not None:
        cfg["seed"] = int(env_seed)
    env_out = os.environ.get("TRANSIT_FEEDBACK_OUT")
    if env_out is not None:
        cfg["out"] = env_out
    env_threads = os.environ.get("TRANSIT_FEEDBACK_THREADS")
    if env_threads is not None:
        cfg["threads"] = int(env_threads)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.out is not None:
        cfg["out"] = args.out
    if getattr(args, "threads", None) is not None:
        cfg["threads"] = args.threads
    return cfg


def file_hash(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


class Manifest:
    def __init__(self, subcommand: str, cfg: dict):
        self.doc = {
            "schema_version": 1,
            "subcommand": subcommand,
            "seed": cfg["seed"],
            "config": cfg,
            "inputs": {},
            "outputs": [],
            "metrics": {},
            "timings": {},
        }
        self._t0 = time.monotonic()

    def add_input(self, path: str | Path) -> None:
        p = Path(path)
        self.doc["inputs"][str(p)] = file_hash(p)

    def add_output(self, path: str | Path) -> None:
        self.doc["outputs"].append({"path": str(path)})

    def write(self, out_dir: Path, name: str = "manifest.json") -> Path:
        for rec in self.doc["outputs"]:
            if "sha256" not in rec:  # hash once the artifact is final
                rec["sha256"] = file_hash(Path(rec["path"]))
        self.doc["timings"]["total_s"] = round(time.monotonic() - self._t0, 3)
        out_dir.mkdir(parents=True, exist_ok=True)
        p = out_dir / name
        p.write_text(json.dumps(self.doc, indent=1, sort_keys=True),
                     encoding="utf-8")
        return p


def _out_dir(cfg: dict, sub: str) -> Path:
    d = Path(cfg["out"]) / sub
    d.mkdir(parents=True, exist_ok=True)
    return d


def _require(path_str: str | None, what: str) -> Path:
    if not path_str:
        raise ValidationError(f"missing required path: {what}")
    p = Path(path_str)
    if not p.exists():
        raise ValidationError(f"{what} not found: {p}")
    return p


def _prep_streams(records, cfg):
    stopwords = load_term_list(cfg["paths"]["stopwords"])
    agency = (load_term_list(cfg["paths"]["agency_terms"])
              if cfg["paths"]["agency_terms"] else set())
    return [preprocess(r.text, stopwords, agency) for r in records]


def _build_features(records, cfg):
    streams = _prep_streams(records, cfg)
    orders = set(cfg["tfidf"]["orders"])
    vocab = build_vocabulary(streams, cfg["tfidf"]["min_count"], orders)
    vec = TfidfVectorizer.fit(vocab)
    counts = [count_terms(s, vocab, orders) for s in streams]
    return vec, counts


# ---------------------------------------------------------------------------
# subcommands

def cmd_synth(args, cfg) -> int:
    out = _out_dir(cfg, "synth")
    man = Manifest("synth", cfg)
    s = cfg["synth"]
    syn = generate_synthetic_corpus(
        s["n_docs"], s["K_true"], s["vocab_per_topic"], s["doc_len"],
        s["alpha"], seed=stage_seed(cfg["seed"], "synth"))
    corpus_path = out / "corpus.jsonl"
    records_to_jsonl(syn.records, corpus_path)
    truth = {
        "schema_version": 1,
        "K_true": s["K_true"],
        "doc_labels": syn.doc_labels.tolist(),
        "topic_word_dists": syn.topic_word_dists.tolist(),
        "vocab_words": syn.vocab_words,
    }
    truth_path = out / "truth.json"
    truth_path.write_text(json.dumps(truth), encoding="utf-8")
    dates = sorted({r.timestamp.date().isoformat() for r in syn.records})
    ridership = generate_synthetic_ridership(
        dates[0], len(rp.window_dates(dates[0], dates[-1])),
        seed=stage_seed(cfg["seed"], "ridership"))
    ridership_path = out / "ridership.json"
    ridership.save(ridership_path)
    for p in (corpus_path, truth_path, ridership_path):
        man.add_output(p)
    man.doc["metrics"] = {"n_docs": len(syn.records), "K_true": s["K_true"]}
    man.write(out)
    print(f"synth: wrote {len(syn.records)} records to {corpus_path}")
    return EXIT_OK


def cmd_ingest(args, cfg) -> int:
    out = _out_dir(cfg, "ingest")
    man = Manifest("ingest", cfg)
    records = []
    rejects = []
    if args.csv:
        p = _require(args.csv, "feedback CSV")
        man.add_input(p)
        res = parse_feedback_csv(p)
        records += res.records
        rejects += [("csv", r.row, r.reason) for r in res.rejects]
    if args.tweets:
        p = _require(args.tweets, "tweets JSONL")
        man.add_input(p)
        handles = (args.handles.split(",") if args.handles
                   else ["@wmata", "@wmatagm", "@metrobusinfo", "@metrorailinfo"])
        res = parse_tweets_jsonl(p, handles)
        records += res.records
        rejects += [("tweets", r.row, r.reason) for r in res.rejects]
    if not args.csv and not args.tweets:
        raise ValidationError("ingest needs --csv and/or --tweets")
    corpus_path = out / "corpus.jsonl"
    records_to_jsonl(records, corpus_path)
    rejects_path = out / "rejects.csv"
    with rejects_path.open("w", encoding="utf-8") as fh:
        fh.write("source,row,reason\n")
        for src, row, reason in rejects:
            fh.write(f"{src},{row},{json.dumps(reason)}\n")
    man.add_output(corpus_path)
    man.add_output(rejects_path)
    man.doc["metrics"] = {"accepted": len(records), "rejected": len(rejects)}
    man.write(out)
    print(f"ingest: {len(records)} records, {len(rejects)} rejects -> {out}")
    return EXIT_OK


def cmd_screen_k(args, cfg) -> int:
    out = _out_dir(cfg, "screen-k")
    man = Manifest("screen-k", cfg)
    corpus_path = _require(args.corpus, "corpus JSONL")
    man.add_input(corpus_path)
    records = records_from_jsonl(corpus_path)
    labeled = [r for r in records if r.problem_category]
    if not labeled:
        raise ValidationError("no records carry a problem category")
    vec, counts = _build_features(labeled, cfg)
    cats = sorted({r.problem_category for r in labeled})
    centroids = np.zeros((len(cats), len(vec.vocab)))
    for ci, cat in enumerate(cats):
        rows = [i for i, r in enumerate(labeled) if r.problem_category == cat]
        for i in rows:
            for tid, w in vec.vectorize(counts[i]).items():
                centroids[ci, tid] += w
        centroids[ci] /= len(rows)
    k = tp.screen_topic_count(
        centroids, cfg["screen"]["linkage"],
        cfg["screen"]["distance_threshold"])
    man.doc["metrics"] = {"n_categories": len(cats), "recommended_K": k}
    man.write(out)
    print(f"screen-k: {len(cats)} categories -> recommended K upper bound {k}")
    return EXIT_OK


def _load_condensation(cfg, K) -> tp.TopicCondensation:
    path = cfg["paths"]["condensation"]
    if path:
        return tp.TopicCondensation.load(_require(path, "condensation map"), K)
    if K <= 11:
        # identity fallback: raw topic k -> broad label with code k
        return tp.TopicCondensation(
            {k: TopicLabel.from_code(k) for k in range(K)},
            dict(tp.DEFAULT_HOLDOUTS))
    raise ValidationError(
        "K > 11 requires a condensation mapping file (paths.condensation)")


def cmd_derive_topics(args, cfg) -> int:
    out = _out_dir(cfg, "derive-topics")
    man = Manifest("derive-topics", cfg)
    corpus_path = _require(args.corpus, "corpus JSONL")
    man.add_input(corpus_path)
    records = records_from_jsonl(corpus_path)
    K = args.k or cfg["lda"]["K"]
    condensation = _load_condensation(cfg, K)

    held, remaining = tp.holdout_manual_topics(
        records, condensation.manual_holdouts)
    streams = _prep_streams(remaining, cfg)
    orders = set(cfg["tfidf"]["orders"])
    vocab = build_vocabulary(streams, cfg["tfidf"]["min_count"], orders)
    counts = [count_terms(s, vocab, orders) for s in streams]

    lda_cfg = cfg["lda"]
    model = tp.fit_lda(
        counts, vocab, K, lda_cfg["alpha"], lda_cfg["beta"],
        lda_cfg["n_iters"], seed=stage_seed(cfg["seed"], "lda"),
        early_stop_tol=lda_cfg["early_stop_tol"],
        early_stop_window=lda_cfg["early_stop_window"])
    model_path = out / "lda_model.json"
    model.save(model_path)

    thetas, flagged = tp.infer_doc_topics(
        model, counts, lda_cfg["infer_sweeps"],
        seed=stage_seed(cfg["seed"], "lda-infer"))
    threshold = cfg["thresholds"]["primary_topic"]

    training = list(held)
    unassigned = []
    for rec, theta, empty in zip(remaining, thetas, flagged):
        label, score = tp.assign_primary_topic(theta, threshold, condensation)
        if label is TopicLabel.UNASSIGNED or empty:
            unassigned.append(rec)
        else:
            training.append(tp.LabeledRecord(rec, label, tp.LabelSource.LDA,
                                             score))
    training_path = out / "training.jsonl"
    tp.labeled_to_jsonl(training, training_path)
    unassigned_path = out / "unassigned.jsonl"
    records_to_jsonl(unassigned, unassigned_path)

    words = {str(k): tp.top_words(model, k, args.top_words)
             for k in range(K)}
    top_words_path = out / "top_words.json"
    top_words_path.write_text(json.dumps(words, indent=1), encoding="utf-8")

    for p in (model_path, training_path, unassigned_path, top_words_path):
        man.add_output(p)
    man.doc["metrics"] = {
        "K": K,
        "held_out": len(held),
        "lda_assigned": len(training) - len(held),
        "unassigned": len(unassigned),
        "final_log_likelihood": model.log_likelihoods[-1],
        "sweeps": len(model.log_likelihoods),
    }
    man.write(out)
    print(f"derive-topics: {len(training)} labeled "
          f"({len(held)} held out), {len(unassigned)} unassigned -> {out}")
    return EXIT_OK


def cmd_condense(args, cfg) -> int:
    out = _out_dir(cfg, "condense")
    man = Manifest("condense", cfg)
    model_path = _require(args.model, "LDA model checkpoint")
    man.add_input(model_path)
    model = tp.LdaModel.load(model_path)
    condensation = _load_condensation(cfg, model.K)
    assignments = np.argmax(model.doc_topic_dists(), axis=1)
    labels = tp.condense_topics(list(assignments), condensation)
    mapping_path = out / "condensed_assignments.json"
    mapping_path.write_text(json.dumps(
        {"schema_version": 1,
         "labels": [lab.title for lab in labels]}), encoding="utf-8")
    man.add_output(mapping_path)
    man.doc["metrics"] = {"n_docs": len(labels)}
    man.write(out)
    print(f"condense: relabeled {len(labels)} documents -> {mapping_path}")
    return EXIT_OK


def cmd_build_features(args, cfg) -> int:
    out = _out_dir(cfg, "build-features")
    man = Manifest("build-features", cfg)
    training_path = _require(args.training, "training JSONL")
    man.add_input(training_path)
    labeled = tp.labeled_from_jsonl(training_path)
    vec, _ = _build_features([lr.record for lr in labeled], cfg)
    vec_path = out / "vectorizer.json"
    vec.save(vec_path)
    man.add_output(vec_path)
    man.doc["metrics"] = {"n_terms": len(vec.vocab), "n_docs": vec.n_docs}
    man.write(out)
    print(f"build-features: {len(vec.vocab)} terms over {vec.n_docs} docs")
    return EXIT_OK


def _features_for(labeled, vec, cfg):
    stopwords = load_term_list(cfg["paths"]["stopwords"])
    agency = (load_term_list(cfg["paths"]["agency_terms"])
              if cfg["paths"]["agency_terms"] else set())
    orders = set(cfg["tfidf"]["orders"])
    counts = [count_terms(preprocess(lr.record.text, stopwords, agency),
                          vec.vocab, orders) for lr in labeled]
    X = vec.matrix(counts)
    y_codes = np.array([lr.label.code for lr in labeled])
    return X, y_codes


def _compact_labels(y_codes):
    present = sorted(set(int(c) for c in y_codes))
    remap = {c: i for i, c in enumerate(present)}
    y = np.array([remap[int(c)] for c in y_codes])
    names = [TopicLabel.from_code(c).title for c in present]
    return y, names, present


def cmd_train(args, cfg) -> int:
    out = _out_dir(cfg, "train")
    man = Manifest("train", cfg)
    training_path = _require(args.training, "training JSONL")
    vec_path = _require(args.vectorizer, "vectorizer checkpoint")
    man.add_input(training_path)
    man.add_input(vec_path)
    labeled = tp.labeled_from_jsonl(training_path)
    vec = TfidfVectorizer.load(vec_path)
    X, y_codes = _features_for(labeled, vec, cfg)
    y, names, _present = _compact_labels(y_codes)
    vhash = tp.vocab_hash(vec.vocab)

    sgd_cfg = cfg["sgd"]
    hp = clf.SgdHyperparams(
        epochs=sgd_cfg["epochs"], batch_size=sgd_cfg["batch_size"],
        lr=sgd_cfg["lr"], l2=sgd_cfg["l2"],
        seed=stage_seed(cfg["seed"], "sgd"))
    weights = clf.class_weights(np.bincount(y, minlength=len(names)))
    metrics_out = {}

    kinds = ([clf.LossKind(sgd_cfg["loss"])] if not args.all_models
             else list(clf.LossKind))
    for kind in kinds:
        t0 = time.monotonic()

        def train_fn(Xtr, ytr, kind=kind):
            return clf.ClassifierHandle.linear(clf.train_sgd(
                Xtr, ytr, kind, weights, hp, names, vhash))

        cv = clf.kfold_cv(X, y, names, train_fn, k=args.folds,
                          seed=stage_seed(cfg["seed"], "cv"))
        model = clf.train_sgd(X, y, kind, weights, hp, names, vhash)
        model_path = out / f"linear_{kind.value.lower()}.json"
        model.save(model_path)
        man.add_output(model_path)
        metrics_out[kind.value] = {
            "cv_accuracies": [round(a, 10) for a in cv.accuracies],
            "cv_mean_accuracy": round(cv.mean_accuracy, 10),
        }
        man.doc["timings"][f"train_{kind.value.lower()}_s"] = round(
            time.monotonic() - t0, 3)

    if args.all_models or args.naive_bayes:
        def nb_fn(Xtr, ytr):
            return clf.ClassifierHandle.naive_bayes(
                clf.train_naive_bayes(Xtr, ytr, label_names=names,
                                      vocab_hash=vhash))

        cv = clf.kfold_cv(X, y, names, nb_fn, k=args.folds,
                          seed=stage_seed(cfg["seed"], "cv"))
        nb = clf.train_naive_bayes(X, y, label_names=names, vocab_hash=vhash)
        nb_path = out / "naive_bayes.json"
        nb.save(nb_path)
        man.add_output(nb_path)
        metrics_out["NaiveBayes"] = {
            "cv_accuracies": [round(a, 10) for a in cv.accuracies],
            "cv_mean_accuracy": round(cv.mean_accuracy, 10),
        }

    man.doc["metrics"] = metrics_out
    man.write(out)
    for name, m in metrics_out.items():
        print(f"train[{name}]: cv mean accuracy {m['cv_mean_accuracy']:.4f}")
    return EXIT_OK


def _load_any_model(path: Path):
    doc = json.loads(path.read_text(encoding="utf-8"))
    if doc.get("kind") == "Linear":
        return clf.ClassifierHandle.linear(clf.LinearClassifier.load(path))
    if doc.get("kind") == "NaiveBayes":
        return clf.ClassifierHandle.naive_bayes(clf.NaiveBayesModel.load(path))
    raise ValidationError(f"unrecognized model checkpoint: {path}")


def cmd_evaluate(args, cfg) -> int:
    out = _out_dir(cfg, "evaluate")
    man = Manifest("evaluate", cfg)

    if args.predictions:
        pred_path = _require(args.predictions, "predictions file")
        man.add_input(pred_path)
        true_names, pred_names = [], []
        with pred_path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    obj = json.loads(line)
                    true_names.append(obj["true"])
                    pred_names.append(obj["predicted"])
        names = sorted(set(true_names) | set(pred_names))
        idx = {n: i for i, n in enumerate(names)}
        cm = ev.confusion([idx[t] for t in true_names],
                          [idx[p] for p in pred_names], names)
        reports = {"predictions": ev.metrics(cm)}
    else:
        training_path = _require(args.training, "training JSONL")
        vec_path = _require(args.vectorizer, "vectorizer checkpoint")
        man.add_input(training_path)
        man.add_input(vec_path)
        labeled = tp.labeled_from_jsonl(training_path)
        vec = TfidfVectorizer.load(vec_path)
        X, y_codes = _features_for(labeled, vec, cfg)
        y, names, _ = _compact_labels(y_codes)
        reports = {}
        for model_path in args.model:
            p = _require(model_path, "model checkpoint")
            man.add_input(p)
            handle = _load_any_model(p)
            pred, _scores = clf.predict(handle, X, tp.vocab_hash(vec.vocab))
            cm = ev.confusion(list(y), list(pred), names)
            reports[Path(p).stem] = ev.metrics(cm)
            svg_path = out / f"confusion_{Path(p).stem}.svg"
            svg_path.write_text(ev.confusion_to_svg(cm), encoding="utf-8")
            man.add_output(svg_path)

    csv_text, aligned = ev.report_table(reports)
    (out / "metrics.csv").write_text(csv_text, encoding="utf-8")
    (out / "metrics.txt").write_text(aligned, encoding="utf-8")
    man.add_output(out / "metrics.csv")
    man.add_output(out / "metrics.txt")
    man.doc["metrics"] = {
        name: {"accuracy": round(rep.accuracy, 12),
               "macro_f1": round(rep.macro_avg[2], 12),
               "weighted_f1": round(rep.weighted_avg[2], 12)}
        for name, rep in reports.items()}
    man.write(out)
    print(aligned)
    return EXIT_OK


def cmd_classify(args, cfg) -> int:
    out = _out_dir(cfg, "classify")
    man = Manifest("classify", cfg)
    corpus_path = _require(args.corpus, "corpus JSONL")
    man.add_input(corpus_path)
    records = records_from_jsonl(corpus_path)
    texts = [r.text for r in records]

    if args.bridge_cmd:
        client = BridgeClient.from_command(
            shlex.split(args.bridge_cmd), list(LABEL_TITLES),
            timeout=cfg["bridge"]["timeout"], window=cfg["bridge"]["window"])
        try:
            results = clf.bridge_classify(texts, client)
        finally:
            client.close()
        labels = [lab.title for lab, _ in results]
    else:
        model_path = _require(args.model, "model checkpoint")
        vec_path = _require(args.vectorizer, "vectorizer checkpoint")
        man.add_input(model_path)
        man.add_input(vec_path)
        handle = _load_any_model(Path(model_path))
        vec = TfidfVectorizer.load(vec_path)
        stopwords = load_term_list(cfg["paths"]["stopwords"])
        orders = set(cfg["tfidf"]["orders"])
        counts = [count_terms(preprocess(t, stopwords), vec.vocab, orders)
                  for t in texts]
        X = vec.matrix(counts)
        pred, _ = clf.predict(handle, X, tp.vocab_hash(vec.vocab))
        labels = [handle.label_names[p] for p in pred]

    pred_path = out / "predictions.jsonl"
    with pred_path.open("w", encoding="utf-8") as fh:
        for rec, label in zip(records, labels):
            fh.write(json.dumps({"id": rec.id, "predicted": label},
                                ensure_ascii=False) + "\n")
    man.add_output(pred_path)
    man.doc["metrics"] = {"n_classified": len(labels)}
    man.write(out)
    print(f"classify: {len(labels)} predictions -> {pred_path}")
    return EXIT_OK


def cmd_enrich(args, cfg) -> int:
    out = _out_dir(cfg, "enrich")
    man = Manifest("enrich", cfg)
    corpus_path = _require(args.corpus, "corpus JSONL")
    man.add_input(corpus_path)
    records = records_from_jsonl(corpus_path)
    catalog = AssetCatalog.load(cfg["paths"]["assets"])

    model_path = _require(args.model, "model checkpoint")
    vec_path = _require(args.vectorizer, "vectorizer checkpoint")
    man.add_input(model_path)
    man.add_input(vec_path)
    handle = _load_any_model(Path(model_path))
    vec = TfidfVectorizer.load(vec_path)
    stopwords = load_term_list(cfg["paths"]["stopwords"])
    orders = set(cfg["tfidf"]["orders"])

    def topic_fn(text: str) -> TopicLabel:
        counts = count_terms(preprocess(text, stopwords), vec.vocab, orders)
        code, _ = clf.predict_one(handle, vec.vectorize(counts), len(vec.vocab))
        return TopicLabel.from_title(handle.label_names[code])

    provider = en.LexiconSentiment()
    gender_table = (NameGenderTable.load(cfg["paths"]["names"])
                    if cfg["enrich"]["infer_gender"] else None)
    enriched = en.enrich_pipeline(
        records, topic_fn, catalog, provider, gender_table,
        infer_gender_enabled=cfg["enrich"]["infer_gender"])

    jsonl_path = out / "enriched.jsonl"
    en.enriched_to_jsonl(enriched, jsonl_path)
    csv_path = out / "enriched.csv"
    import csv as _csv
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        rows = [e.to_csv_row() for e in enriched]
        writer = _csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    man.add_output(jsonl_path)
    man.add_output(csv_path)
    man.doc["metrics"] = {
        "n_enriched": len(enriched),
        "n_flagged": sum(1 for e in enriched if e.flags)}
    man.write(out)
    print(f"enrich: {len(enriched)} records -> {jsonl_path}")
    return EXIT_OK


def cmd_report(args, cfg) -> int:
    out = _out_dir(cfg, "report")
    run_dir = out / (args.run_id or "run")
    tables_dir = run_dir / "tables"
    series_dir = run_dir / "series"
    figures_dir = run_dir / "figures"
    man = Manifest("report", cfg)
    enriched_path = _require(args.enriched, "enriched JSONL")
    man.add_input(enriched_path)
    enriched = en.enriched_from_jsonl(enriched_path)

    for col_dim in ("sentiment", "mode"):
        table = rp.aggregate(enriched, col_dim)
        for fmt in ("csv", "json"):
            p = rp.emit(table, fmt, tables_dir / f"topic_by_{col_dim}.{fmt}")
            man.add_output(p)

    metrics_out = {}
    ridership_path = args.ridership or cfg["paths"]["ridership"]
    if ridership_path:
        ridership = RidershipSeries.load(_require(ridership_path, "ridership"))
        man.add_input(ridership_path)
        dates = sorted({e.record.timestamp.date().isoformat()
                        for e in enriched})
        window = (args.start or dates[0], args.end or dates[-1])

        overall = rp.complaints_per_million(enriched, ridership, window)
        by_mode = rp.complaints_per_million(enriched, ridership, window,
                                            group_by="mode")
        for fmt in ("csv", "json", "svg"):
            p = rp.emit(by_mode, fmt, tables_dir / f"rate_by_mode.{fmt}")
            man.add_output(p)

        daily = rp.daily_rate_series(enriched, ridership, window)
        ma = rp.moving_average(daily, cfg["report"]["moving_average_days"])
        for fmt in ("csv", "json"):
            man.add_output(rp.emit(daily, fmt, series_dir / f"daily_rate.{fmt}"))
            man.add_output(rp.emit(ma, fmt, series_dir / f"moving_average.{fmt}"))
        man.add_output(rp.emit({"daily": daily, "moving_average": ma}, "svg",
                               figures_dir / "temporal.svg"))
        metrics_out["overall_rate_per_million"] = (
            None if overall.value is None else round(overall.value, 12))
        metrics_out["window"] = list(window)
    metrics_out["n_records"] = len(enriched)
    man.doc["metrics"] = metrics_out
    man.write(run_dir)
    print(f"report: artifacts under {run_dir}")
    return EXIT_OK


def cmd_demo(args, cfg) -> int:
    """End-to-end recipe on bundled synthetic data: synth -> derive-topics ->
    build-features -> train -> evaluate -> enrich -> report."""
    ns = argparse.Namespace
    base = Path(cfg["out"])
    cfg = _deep_merge(cfg, {
        "lda": {"K": cfg["synth"]["K_true"], "n_iters": 300},
        "tfidf": {"min_count": 5},
        "sgd": {"epochs": 30},
    })
    cmd_synth(args, cfg)
    cmd_derive_topics(
        ns(corpus=str(base / "synth/corpus.jsonl"), k=None, top_words=10), cfg)
    cmd_build_features(
        ns(training=str(base / "derive-topics/training.jsonl")), cfg)
    cmd_train(
        ns(training=str(base / "derive-topics/training.jsonl"),
           vectorizer=str(base / "build-features/vectorizer.json"),
           all_models=False, naive_bayes=False, folds=5), cfg)
    cmd_evaluate(
        ns(predictions=None,
           training=str(base / "derive-topics/training.jsonl"),
           vectorizer=str(base / "build-features/vectorizer.json"),
           model=[str(base / "train/linear_crossentropy.json")]), cfg)
    cmd_enrich(
        ns(corpus=str(base / "synth/corpus.jsonl"),
           model=str(base / "train/linear_crossentropy.json"),
           vectorizer=str(base / "build-features/vectorizer.json")), cfg)
    cmd_report(
        ns(enriched=str(base / "enrich/enriched.jsonl"),
           ridership=str(base / "synth/ridership.json"),
           run_id="demo", start=None, end=None), cfg)
    print(f"demo: complete under {base}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transit-feedback",
        description="Transit customer-feedback analytics pipeline")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, help="top-level RNG seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--threads", type=int,
                        help="intra-stage parallelism (stages run sequentially)")
    sub = parser.add_subparsers(dest="subcommand")

    sub.add_parser("synth", help="generate a synthetic labeled corpus")

    p = sub.add_parser("ingest", help="parse feedback CSV / tweet JSONL")
    p.add_argument("--csv")
    p.add_argument("--tweets")
    p.add_argument("--handles", help="comma-separated @handles filter")

    p = sub.add_parser("screen-k", help="hierarchical-clustering K screen")
    p.add_argument("--corpus", required=True)

    p = sub.add_parser("derive-topics", help="fit LDA and build training set")
    p.add_argument("--corpus", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--top-words", type=int, default=15, dest="top_words")

    p = sub.add_parser("condense", help="apply a condensation mapping")
    p.add_argument("--model", required=True)

    p = sub.add_parser("build-features", help="fit the TF-IDF vectorizer")
    p.add_argument("--training", required=True)

    p = sub.add_parser("train", help="train classifiers with k-fold CV")
    p.add_argument("--training", required=True)
    p.add_argument("--vectorizer", required=True)
    p.add_argument("--all-models", action="store_true")
    p.add_argument("--naive-bayes", action="store_true")
    p.add_argument("--folds", type=int, default=5)

    p = sub.add_parser("evaluate", help="metric suite and confusion matrices")
    p.add_argument("--training")
    p.add_argument("--vectorizer")
    p.add_argument("--model", nargs="*", default=[])
    p.add_argument("--predictions",
                   help="JSONL of {true, predicted} label titles")

    p = sub.add_parser("classify", help="predict topics for a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model")
    p.add_argument("--vectorizer")
    p.add_argument("--bridge-cmd", dest="bridge_cmd",
                   help="external classifier sidecar command")

    p = sub.add_parser("enrich", help="sentiment/mode/assets/gender")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--vectorizer", required=True)

    p = sub.add_parser("report", help="aggregations and normalized series")
    p.add_argument("--enriched", required=True)
    p.add_argument("--ridership")
    p.add_argument("--run-id", dest="run_id")
    p.add_argument("--start")
    p.add_argument("--end")

    sub.add_parser("demo", help="full pipeline on synthetic data")
    return parser


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "screen-k": cmd_screen_k,
    "derive-topics": cmd_derive_topics,
    "condense": cmd_condense,
    "build-features": cmd_build_features,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "classify": cmd_classify,
    "enrich": cmd_enrich,
    "report": cmd_report,
    "demo": cmd_demo,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, unknown = parser.parse_known_args(argv)
    if unknown or not args.subcommand:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args)
        return COMMANDS[args.subcommand](args, cfg)
    except (ValidationError, CorpusError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ProtocolError as exc:
        print(f"bridge protocol error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
