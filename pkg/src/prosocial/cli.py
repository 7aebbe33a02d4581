"""Pipeline commands: ingest, score, fit, forecast, rank, evaluate, synth.

Every command reads inputs from the configured paths and writes its
artifacts under the output directory.  Reports are emitted twice, as a
human-readable .txt table and a machine-readable .tsv, and contain no
timestamps: reruns with identical inputs, config, and seed produce
byte-identical files.  Wall-clock measurements go to timing.txt, the
one output exempt from that guarantee.

Exit codes: 0 success, 2 configuration or input error, 3 artifact
compatibility error, 1 any other pipeline failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .accommodation import load_marker_catalog
from .config import PipelineConfig, load_config
from .corpus import (
    Conversation,
    build_conversations,
    conversation_from_json,
    partition_dataset,
    read_comment_dump,
    read_post_dump,
    downsample_training,
    filter_conversations,
    write_conversations,
)
from .errors import (
    ArtifactError,
    ConfigError,
    NumericError,
    ParseError,
    ProsocialError,
    SchemaError,
    TrainingError,
)
from .forecast.evaluate import (
    category_mse,
    evaluate_regression,
    half_split_analysis,
)
from .forecast.features import (
    FeatureContext,
    build_features,
    feature_names,
    fit_embedding_reducer,
    load_category_map,
    load_embedding_table,
    load_gender_table,
)
from .forecast.lda import lda_fit, load_lda_model, save_lda_model
from .forecast.models import (
    GbtParams,
    gbt_fit,
    gbt_predict,
    load_gbt_model,
    load_ridge_model,
    ridge_fit,
    ridge_predict,
    save_gbt_model,
    save_ridge_model,
)
from .lexical import load_domain_lists, load_gratitude_lexicon
from .rank_eval import (
    PairwiseRanker,
    fit_pairwise_ranker,
    judgment_diffs,
    krippendorff_alpha,
    load_pair_judgments,
    mcc,
    mcc_significance,
    ranker_decide,
    save_ranker,
    split_pair_judgments,
)
from .scorers.ngram import (
    LabelingRules,
    ScorableComment,
    heuristic_label_corpus,
    load_ngram_model,
    save_ngram_model,
    train_ngram_classifier,
)
from .scorers.regressors import load_regressor_handle
from .scorers.toxicity import ToxicityClient, ToxicityConfig
from .synth import SynthParams, generate_corpus, write_corpus
from .textlex import load_sentiment_lexicon, load_stopwords, tokenize
from .trajectory import (
    METRIC_NAMES,
    PanelContext,
    assemble_panel,
    check_manifest,
    fit_trajectory_model,
    load_trajectory_model,
    save_trajectory_model,
    trajectory_score,
)


class Artifacts:
    """Fixed file layout under the output directory."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.models_dir = os.path.join(out_dir, "models")
        self.conversations = os.path.join(out_dir, "conversations.ndjson")
        self.splits = os.path.join(out_dir, "splits.tsv")
        self.panels = os.path.join(out_dir, "panels.tsv")
        self.trajectory_model = os.path.join(out_dir, "trajectory.model")
        self.scores = os.path.join(out_dir, "scores.tsv")
        self.features = os.path.join(out_dir, "features.tsv")
        self.predictions = os.path.join(out_dir, "predictions.tsv")
        self.rank_decisions = os.path.join(out_dir, "rank_decisions.tsv")
        self.timing = os.path.join(out_dir, "timing.txt")
        self.lda_post = os.path.join(self.models_dir, "lda_post.model")
        self.lda_tlc = os.path.join(self.models_dir, "lda_tlc.model")
        self.ridge = os.path.join(self.models_dir, "ridge.model")
        self.gbt = os.path.join(self.models_dir, "gbt.model")
        self.ranker = os.path.join(self.models_dir, "ranker.model")
        self.info_model = os.path.join(self.models_dir, "info.model")
        self.mentoring_model = os.path.join(self.models_dir, "mentoring.model")

    def report(self, stage: str, kind: str) -> str:
        return os.path.join(self.out_dir, f"{stage}_report.{kind}")


def _write_lines(path: str, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_report(art: Artifacts, stage: str, human: list[str],
                  machine: list[tuple]) -> None:
    _write_lines(art.report(stage, "txt"), human)
    rows = ["\t".join(str(cell) for cell in row) for row in machine]
    _write_lines(art.report(stage, "tsv"), rows)


def _append_timing(art: Artifacts, stage: str, seconds: float,
                   fields: dict[str, object]) -> None:
    extra = "".join(f"\t{k}={v}" for k, v in fields.items())
    with open(art.timing, "a", encoding="utf-8") as fh:
        fh.write(f"{stage}\tseconds={seconds:.3f}{extra}\n")


def _num(value: float | None, machine: bool = False) -> str:
    if value is None:
        return "NA" if machine else "undefined"
    if machine:
        return repr(float(value))
    return f"{float(value):.6g}"


def _table(rows: list[tuple[str, ...]]) -> list[str]:
    """Left-aligned columns padded to the widest cell."""
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return [
        "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
        for row in rows
    ]


def _require(path: str, hint: str) -> str:
    if not os.path.exists(path):
        raise ConfigError(f"missing artifact {path}; run '{hint}' first")
    return path


def _read_tsv(path: str) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise ParseError(f"{path}: empty table")
    header = lines[0].split("\t")
    return header, [ln.split("\t") for ln in lines[1:]]


def _read_splits(path: str) -> dict[str, str]:
    _, rows = _read_tsv(path)
    return {row[0]: row[1] for row in rows}


def _read_scores(path: str) -> dict[str, float]:
    _, rows = _read_tsv(path)
    return {row[0]: float(row[1]) for row in rows}


def _read_conversation_lines(art: Artifacts) -> list[str]:
    _require(art.conversations, "prosocial ingest")
    with open(art.conversations, "r", encoding="utf-8") as fh:
        return [ln for ln in fh if ln.strip()]


def _read_conversations(art: Artifacts) -> list[Conversation]:
    return [conversation_from_json(ln) for ln in _read_conversation_lines(art)]


def _read_bot_list(path: str) -> frozenset[str]:
    if not path:
        return frozenset()
    with open(path, "r", encoding="utf-8") as fh:
        return frozenset(
            ln.strip().lower() for ln in fh if ln.strip() and not ln.startswith("#")
        )


def _cache_path(cfg: PipelineConfig) -> str:
    return cfg.toxicity_cache or os.path.join(cfg.out_dir, "toxicity_cache.tsv")


def _panel_context(cfg: PipelineConfig, worker: bool = False) -> PanelContext:
    """Load every scorer the panel needs.

    Workers read the shared toxicity cache but never write it; the
    parent process owns the file and absorbs their new entries.
    """
    cache = _cache_path(cfg)
    client = ToxicityClient(ToxicityConfig(
        endpoint=cfg.toxicity_endpoint,
        api_key=os.environ.get("TOXICITY_API_KEY", ""),
        cache_path=None if worker else cache,
        rate_limit=cfg.toxicity_rate_limit,
        offline=cfg.offline,
    ))
    if worker:
        client.preload_cache(cache)

    art = Artifacts(cfg.out_dir)
    info_path = cfg.info_model or (
        art.info_model if os.path.exists(art.info_model) else "")
    mentoring_path = cfg.mentoring_model or (
        art.mentoring_model if os.path.exists(art.mentoring_model) else "")
    return PanelContext(
        sentiment=load_sentiment_lexicon(),
        domains=load_domain_lists(),
        gratitude=load_gratitude_lexicon(),
        markers=load_marker_catalog(),
        politeness=load_regressor_handle(
            "politeness", cfg.politeness_model or None),
        supportiveness=load_regressor_handle(
            "supportiveness", cfg.supportiveness_model or None),
        toxicity=client,
        info_model=load_ngram_model(info_path) if info_path else None,
        mentoring_model=load_ngram_model(mentoring_path) if mentoring_path else None,
    )


# ---------------------------------------------------------------- ingest


def cmd_ingest(cfg: PipelineConfig) -> None:
    art = Artifacts(cfg.out_dir)
    bots = _read_bot_list(cfg.bots)
    posts = read_post_dump(cfg.posts)
    comments = read_comment_dump(cfg.comments, bots)
    built, build_report = build_conversations(comments, posts)
    kept, filter_report = filter_conversations(built, max_tlc_words=cfg.max_tlc_words)
    kept.sort(key=lambda c: c.id)

    if len(kept) >= 3:
        partition = partition_dataset(kept, seed=cfg.seed)
        split_of = {cid: "train" for cid in partition.train}
        split_of.update({cid: "dev" for cid in partition.dev})
        split_of.update({cid: "test" for cid in partition.test})
    else:
        split_of = {c.id: "train" for c in kept}

    write_conversations(art.conversations, kept)
    _write_lines(art.splits, ["conversation_id\tsplit"] + [
        f"{c.id}\t{split_of[c.id]}" for c in kept
    ])

    sizes = {name: sum(1 for s in split_of.values() if s == name)
             for name in ("train", "dev", "test")}
    counts = [
        ("posts read", len(posts)),
        ("conversations built", build_report.conversations),
        ("orphan replies dropped", build_report.orphan_replies),
        ("skipped, missing post", build_report.skipped_missing_post),
        ("filtered, bot author", filter_report.bot),
        ("filtered, deleted or removed", filter_report.deleted_removed),
        ("filtered, over-long first comment", filter_report.too_long),
        ("conversations kept", len(kept)),
        ("split train", sizes["train"]),
        ("split dev", sizes["dev"]),
        ("split test", sizes["test"]),
    ]
    human = ["ingest"] + _table([(k, str(v)) for k, v in counts])
    machine = [("ingest." + k.replace(" ", "_").replace(",", ""), v)
               for k, v in counts]
    _write_report(art, "ingest", human, machine)


# ----------------------------------------------------------------- score


_WORKER_CTX: PanelContext | None = None


def _score_worker_init(cfg_values: dict) -> None:
    global _WORKER_CTX
    _WORKER_CTX = _panel_context(PipelineConfig(**cfg_values), worker=True)


def _score_one_line(line: str) -> tuple[str, list[float], list[int],
                                        list[tuple[str, float, str]], int]:
    assert _WORKER_CTX is not None
    conv = conversation_from_json(line)
    panel = assemble_panel(conv, _WORKER_CTX)
    entries = _WORKER_CTX.toxicity.drain_new_entries()
    return (
        conv.id,
        [float(v) for v in panel.values],
        [int(b) for b in panel.defined_mask],
        entries,
        len(conv.walk_replies()),
    )


def cmd_score(cfg: PipelineConfig) -> None:
    art = Artifacts(cfg.out_dir)
    lines = _read_conversation_lines(art)
    parent = _panel_context(cfg)

    started = time.perf_counter()
    results = []
    if cfg.jobs > 1 and len(lines) > 1:
        cfg_values = dataclasses.asdict(cfg)
        chunk = max(1, len(lines) // (cfg.jobs * 4))
        with ProcessPoolExecutor(
            max_workers=cfg.jobs,
            initializer=_score_worker_init,
            initargs=(cfg_values,),
        ) as pool:
            for result in pool.map(_score_one_line, lines, chunksize=chunk):
                parent.toxicity.absorb_entries(result[3])
                results.append(result)
    else:
        global _WORKER_CTX
        _WORKER_CTX = parent
        for line in lines:
            results.append(_score_one_line(line))
        _WORKER_CTX = None
    elapsed = time.perf_counter() - started

    header = ["conversation_id", *METRIC_NAMES,
              *[f"{m}_defined" for m in METRIC_NAMES]]
    rows = ["\t".join(header)]
    defined_counts = np.zeros(len(METRIC_NAMES), dtype=int)
    total_replies = 0
    for conv_id, values, mask, _, n_replies in results:
        defined_counts += np.asarray(mask, dtype=int)
        total_replies += n_replies
        rows.append("\t".join(
            [conv_id, *[repr(v) for v in values], *[str(b) for b in mask]]))
    _write_lines(art.panels, rows)

    # comments/sec counts the TLC too; it is scored for the panel as well
    total_comments = total_replies + len(results)
    rate = total_comments / elapsed if elapsed > 0 else 0.0
    _append_timing(art, "score", elapsed, {
        "comments": total_comments,
        "per_sec": f"{rate:.1f}",
        "api_requests": parent.toxicity.request_count,
        "cache_hits": parent.toxicity.cache_hits,
    })

    counts = [("conversations scored", len(results)),
              ("replies scored", total_replies)]
    counts += [(f"defined {name}", int(n))
               for name, n in zip(METRIC_NAMES, defined_counts)]
    human = ["score"] + _table([(k, str(v)) for k, v in counts])
    machine = [("score." + k.replace(" ", "_"), v) for k, v in counts]
    _write_report(art, "score", human, machine)


# -------------------------------------------------------- fit-trajectory


def _read_panels(art: Artifacts) -> tuple[list[str], np.ndarray, np.ndarray]:
    _require(art.panels, "prosocial score")
    header, rows = _read_tsv(art.panels)
    expected = ["conversation_id", *METRIC_NAMES,
                *[f"{m}_defined" for m in METRIC_NAMES]]
    if header != expected:
        raise ArtifactError(
            "panel file metric manifest does not match this build")
    ids = [row[0] for row in rows]
    k = len(METRIC_NAMES)
    values = np.asarray([[float(v) for v in row[1:1 + k]] for row in rows])
    masks = np.asarray([[int(v) for v in row[1 + k:1 + 2 * k]] for row in rows],
                       dtype=bool)
    return ids, values, masks


def cmd_fit_trajectory(cfg: PipelineConfig) -> None:
    art = Artifacts(cfg.out_dir)
    ids, values, _ = _read_panels(art)
    model = fit_trajectory_model(values)
    save_trajectory_model(model, art.trajectory_model)

    scores = [trajectory_score(model, row) for row in values]
    _write_lines(art.scores, ["conversation_id\tscore"] + [
        f"{cid}\t{score!r}" for cid, score in zip(ids, scores)
    ])

    ratios = model.explained_variance_ratio
    cumulative = np.cumsum(ratios)
    human = ["fit-trajectory", "",
             f"conversations        {len(ids)}",
             f"metrics kept         {int(model.kept.sum())} of {len(METRIC_NAMES)}",
             "", "explained variance"]
    human += _table([("component", "ratio", "cumulative")] + [
        (str(i + 1), _num(r), _num(c))
        for i, (r, c) in enumerate(zip(ratios, cumulative))
    ])
    human += ["", "first-component loadings"]
    human += _table([("metric", "loading")] + [
        (name, _num(loading))
        for name, loading in zip(METRIC_NAMES, model.loadings[0])
    ])
    machine: list[tuple] = [("trajectory.conversations", len(ids)),
                            ("trajectory.metrics_kept", int(model.kept.sum()))]
    machine += [("trajectory.ratio", i + 1, _num(r, machine=True))
                for i, r in enumerate(ratios)]
    machine += [("trajectory.loading", name, _num(v, machine=True))
                for name, v in zip(METRIC_NAMES, model.loadings[0])]
    _write_report(art, "trajectory", human, machine)


# ----------------------------------------------------------------- train


def _scorable_comments(convs: list[Conversation]) -> list[ScorableComment]:
    out: list[ScorableComment] = []
    for conv in convs:
        post_text = f"{conv.post.title}\n{conv.post.selftext}".strip()
        out.append(ScorableComment(
            text=conv.tlc.body, subreddit=conv.subreddit,
            score=conv.tlc.score, parent_text=post_text, is_tlc=True))
        bodies = {conv.tlc.id: conv.tlc.body}
        for reply in conv.walk_replies():
            bodies[reply.id] = reply.body
            out.append(ScorableComment(
                text=reply.body, subreddit=reply.subreddit, score=reply.score,
                parent_text=bodies.get(reply.parent_id, ""), is_tlc=False))
    return out


def _content_words(text: str, stopwords: frozenset[str]) -> list[str]:
    return [t for t in tokenize(text).tokens if t not in stopwords]


def _train_classifiers(cfg: PipelineConfig, art: Artifacts,
                       down: list[Conversation]) -> list[tuple[str, str]]:
    """Fit the info and mentoring classifiers unless paths were supplied."""
    notes = []
    pool = _scorable_comments(down)
    for kind, configured, out_path in (
        ("info", cfg.info_model, art.info_model),
        ("mentoring", cfg.mentoring_model, art.mentoring_model),
    ):
        if configured:
            notes.append((kind, "pretrained model configured"))
            continue
        rules = LabelingRules(
            kind=kind,
            ask_subreddits=cfg.ask_subreddit_set(),
            negative_sample_size=cfg.negative_samples,
            seed=cfg.seed,
        )
        try:
            corpus = heuristic_label_corpus(pool, rules)
            model = train_ngram_classifier(
                corpus, seed=cfg.seed, l2=cfg.classifier_l2, kind=kind)
            save_ngram_model(model, out_path)
            positives = sum(1 for _, y in corpus if y == 1)
            notes.append((kind, f"trained on {positives} positives, "
                                f"{len(corpus) - positives} negatives"))
        except TrainingError as exc:
            notes.append((kind, f"skipped: {exc}"))
    return notes


def _feature_context(cfg: PipelineConfig, art: Artifacts) -> FeatureContext:
    for path, hint in ((art.lda_post, "prosocial train"),
                       (art.lda_tlc, "prosocial train")):
        _require(path, hint)
    embedding = None
    if cfg.embeddings:
        embedding = fit_embedding_reducer(load_embedding_table(cfg.embeddings))
    return FeatureContext(
        panel=_panel_context(cfg),
        lda_post=load_lda_model(art.lda_post),
        lda_tlc=load_lda_model(art.lda_tlc),
        embedding=embedding,
        genders=load_gender_table(cfg.genders) if cfg.genders else {},
        seed=cfg.seed,
        infer_sweeps=cfg.lda_infer_sweeps,
    )


def _write_features(art: Artifacts, cfg: PipelineConfig,
                    convs: list[Conversation], ctx: FeatureContext) -> np.ndarray:
    names = feature_names(topics=cfg.lda_topics)
    matrix = np.stack([build_features(c.post, c.tlc, ctx) for c in convs])
    rows = ["\t".join(["conversation_id", *names])]
    for conv, row in zip(convs, matrix):
        rows.append("\t".join([conv.id, *[repr(float(v)) for v in row]]))
    _write_lines(art.features, rows)
    return matrix


def _read_features(art: Artifacts, cfg: PipelineConfig
                   ) -> tuple[list[str], np.ndarray]:
    _require(art.features, "prosocial train")
    header, rows = _read_tsv(art.features)
    expected = ["conversation_id", *feature_names(topics=cfg.lda_topics)]
    if header != expected:
        raise ArtifactError(
            "feature file manifest does not match this configuration")
    ids = [row[0] for row in rows]
    matrix = np.asarray([[float(v) for v in row[1:]] for row in rows])
    return ids, matrix


def cmd_train(cfg: PipelineConfig) -> None:
    art = Artifacts(cfg.out_dir)
    convs = _read_conversations(art)
    splits = _read_splits(_require(art.splits, "prosocial ingest"))
    scores = _read_scores(_require(art.scores, "prosocial fit-trajectory"))
    os.makedirs(art.models_dir, exist_ok=True)

    train_convs = [c for c in convs if splits.get(c.id) == "train"]
    dev_convs = [c for c in convs if splits.get(c.id) == "dev"]
    down, down_report = downsample_training(
        train_convs, cfg.downsample_min, cfg.downsample_max, cfg.seed)
    if not down:
        raise TrainingError(
            "downsampling removed every training conversation; "
            "lower downsample_min")

    classifier_notes = _train_classifiers(cfg, art, down)

    stopwords = load_stopwords()
    post_docs = [
        _content_words(f"{c.post.title}\n{c.post.selftext}", stopwords)
        for c in down
    ]
    tlc_docs = [_content_words(c.tlc.body, stopwords) for c in down]
    lda_post = lda_fit(post_docs, topics=cfg.lda_topics, alpha=cfg.lda_alpha,
                       beta=cfg.lda_beta, sweeps=cfg.lda_sweeps, seed=cfg.seed)
    lda_tlc = lda_fit(tlc_docs, topics=cfg.lda_topics, alpha=cfg.lda_alpha,
                      beta=cfg.lda_beta, sweeps=cfg.lda_sweeps,
                      seed=cfg.seed + 1)
    save_lda_model(lda_post, art.lda_post)
    save_lda_model(lda_tlc, art.lda_tlc)

    ctx = _feature_context(cfg, art)
    matrix = _write_features(art, cfg, convs, ctx)
    row_of = {c.id: i for i, c in enumerate(convs)}

    def block(selected: list[Conversation]) -> tuple[np.ndarray, np.ndarray]:
        idx = [row_of[c.id] for c in selected]
        return matrix[idx], np.asarray([scores[c.id] for c in selected])

    x_train, y_train = block(down)
    ridge = ridge_fit(x_train, y_train, cfg.ridge_lambda)
    save_ridge_model(ridge, art.ridge)
    ridge_mse, ridge_r2 = _safe_regression(
        np.asarray(ridge_predict(ridge, x_train)), y_train)

    params = GbtParams(
        eta=cfg.gbt_eta, gamma=cfg.gbt_gamma, reg_lambda=cfg.gbt_lambda,
        reg_alpha=cfg.gbt_alpha, min_child_weight=cfg.gbt_min_child_weight,
        subsample=cfg.gbt_subsample, colsample=cfg.gbt_colsample,
        max_depth=cfg.gbt_max_depth, rounds=cfg.gbt_rounds,
        early_stopping=cfg.gbt_early_stopping, seed=cfg.seed)
    validation = None
    if dev_convs:
        validation = block(dev_convs)
    gbt = gbt_fit(x_train, y_train, params, validation=validation)
    save_gbt_model(gbt, art.gbt)
    gbt_mse, gbt_r2 = _safe_regression(
        np.asarray(gbt_predict(gbt, x_train)), y_train)

    rows = [
        ("training conversations", str(len(train_convs))),
        ("after downsampling", str(len(down))),
        ("development conversations", str(len(dev_convs))),
        ("post topic vocabulary", str(len(lda_post.vocabulary))),
        ("comment topic vocabulary", str(len(lda_tlc.vocabulary))),
        ("ridge train mse", _num(ridge_mse)),
        ("ridge train r2", _num(ridge_r2)),
        ("boosted rounds kept", str(len(gbt.trees))),
        ("boosted best round", str(gbt.best_round + 1)),
        ("boosted train mse", _num(gbt_mse)),
        ("boosted train r2", _num(gbt_r2)),
    ]
    human = ["train"] + _table(rows) + ["", "classifiers"]
    human += _table([(k, note) for k, note in classifier_notes])
    human += ["", "downsampling per subreddit"]
    human += _table([("subreddit", "before", "after")] + [
        (sub, str(before), str(after))
        for sub, (before, after) in sorted(down_report.items())
    ])
    machine: list[tuple] = [
        ("train.conversations", len(train_convs)),
        ("train.downsampled", len(down)),
        ("train.dev", len(dev_convs)),
        ("train.lda_post_vocab", len(lda_post.vocabulary)),
        ("train.lda_tlc_vocab", len(lda_tlc.vocabulary)),
        ("train.ridge_mse", _num(ridge_mse, machine=True)),
        ("train.ridge_r2", _num(ridge_r2, machine=True)),
        ("train.gbt_rounds", len(gbt.trees)),
        ("train.gbt_best_round", gbt.best_round + 1),
        ("train.gbt_mse", _num(gbt_mse, machine=True)),
        ("train.gbt_r2", _num(gbt_r2, machine=True)),
    ]
    machine += [("train.classifier", kind, note)
                for kind, note in classifier_notes]
    machine += [("train.downsample", sub, before, after)
                for sub, (before, after) in sorted(down_report.items())]
    _write_report(art, "train", human, machine)


def _safe_regression(preds: np.ndarray, truth: np.ndarray
                     ) -> tuple[float | None, float | None]:
    if preds.size == 0:
        return None, None
    try:
        return evaluate_regression(preds, truth)
    except NumericError:
        return float(np.mean((preds - truth) ** 2)), None


# -------------------------------------------------------------- forecast


def cmd_forecast(cfg: PipelineConfig) -> None:
    art = Artifacts(cfg.out_dir)
    ids, matrix = _read_features(art, cfg)
    splits = _read_splits(_require(art.splits, "prosocial ingest"))
    scores = _read_scores(_require(art.scores, "prosocial fit-trajectory"))
    ridge = load_ridge_model(_require(art.ridge, "prosocial train"))
    gbt = load_gbt_model(_require(art.gbt, "prosocial train"))
    if ridge.weights.shape[0] != matrix.shape[1]:
        raise ArtifactError("ridge model width does not match the feature file")
    if gbt.feature_count != matrix.shape[1]:
        raise ArtifactError("boosted model width does not match the feature file")

    ridge_preds = np.asarray(ridge_predict(ridge, matrix))
    gbt_preds = np.asarray(gbt_predict(gbt, matrix))
    rows = ["conversation_id\tsplit\ttruth\tridge\tgbt"]
    for i, cid in enumerate(ids):
        rows.append("\t".join([
            cid, splits.get(cid, "train"), repr(scores[cid]),
            repr(float(ridge_preds[i])), repr(float(gbt_preds[i])),
        ]))
    _write_lines(art.predictions, rows)

    truth = np.asarray([scores[cid] for cid in ids])
    human = ["forecast", ""]
    table = [("split", "model", "n", "mse", "r2")]
    machine: list[tuple] = []
    for split in ("train", "dev", "test"):
        idx = [i for i, cid in enumerate(ids)
               if splits.get(cid, "train") == split]
        for model_name, preds in (("ridge", ridge_preds), ("gbt", gbt_preds)):
            if idx:
                mse, r2 = _safe_regression(preds[idx], truth[idx])
            else:
                mse, r2 = None, None
            table.append((split, model_name, str(len(idx)),
                          _num(mse), _num(r2)))
            machine.append(("forecast.mse", model_name, split,
                            _num(mse, machine=True)))
            machine.append(("forecast.r2", model_name, split,
                            _num(r2, machine=True)))
    human += _table(table)
    _write_report(art, "forecast", human, machine)


# ------------------------------------------------------------------ rank


def _rank_features(art: Artifacts, cfg: PipelineConfig
                   ) -> dict[str, np.ndarray]:
    """Forecast-led feature vectors: the boosted estimate, then raw features.

    With the leading slot, trajectory-difference initialization scores a
    pair by the difference of forecasted trajectories alone.
    """
    ids, matrix = _read_features(art, cfg)
    gbt = load_gbt_model(_require(art.gbt, "prosocial train"))
    preds = np.asarray(gbt_predict(gbt, matrix))
    return {
        cid: np.concatenate(([preds[i]], matrix[i]))
        for i, cid in enumerate(ids)
    }


def cmd_rank(cfg: PipelineConfig) -> None:
    if not cfg.pairs:
        raise ConfigError("rank needs a pair-judgment file; set pairs=PATH")
    art = Artifacts(cfg.out_dir)
    pairs = load_pair_judgments(cfg.pairs)
    features = _rank_features(art, cfg)
    scores = _read_scores(_require(art.scores, "prosocial fit-trajectory"))
    for pair in pairs:
        for cid in (pair.tlc_a, pair.tlc_b):
            if cid not in features:
                raise ConfigError(
                    f"pair file references unknown conversation {cid}")

    train_pairs, dev_pairs, test_pairs = split_pair_judgments(
        pairs, seed=cfg.seed)
    dim = len(next(iter(features.values())))
    pretrained = PairwiseRanker(
        weights=np.asarray([1.0] + [0.0] * (dim - 1)),
        bias=0.0, init_source="trajectory-difference")
    diffs, labels = judgment_diffs(train_pairs, features)
    finetuned = fit_pairwise_ranker(
        diffs, labels, l2=cfg.ranker_l2,
        init="trajectory-difference", seed=cfg.seed)
    os.makedirs(art.models_dir, exist_ok=True)
    save_ranker(finetuned, art.ranker)

    split_of: dict[int, str] = {}
    for name, chunk in (("train", train_pairs), ("dev", dev_pairs),
                        ("test", test_pairs)):
        for pair in chunk:
            split_of[id(pair)] = name

    rows = ["post_id\ttlc_a\ttlc_b\tsplit\tstratum\thuman\t"
            "pretrained\tfinetuned\toracle"]
    tallies: dict[tuple[str, str], list[int]] = {}
    for pair in pairs:
        fa, fb = features[pair.tlc_a], features[pair.tlc_b]
        decisions = {
            "pretrained": ranker_decide(pretrained, fa, fb),
            "finetuned": ranker_decide(finetuned, fa, fb),
            "oracle": "A" if scores[pair.tlc_a] >= scores[pair.tlc_b] else "B",
        }
        split = split_of[id(pair)]
        rows.append("\t".join([
            pair.post_id, pair.tlc_a, pair.tlc_b, split,
            pair.sampling_stratum, pair.annotator_choice,
            decisions["pretrained"], decisions["finetuned"],
            decisions["oracle"],
        ]))
        for model_name, choice in decisions.items():
            hit_total = tallies.setdefault((model_name, split), [0, 0])
            hit_total[0] += int(choice == pair.annotator_choice)
            hit_total[1] += 1
    _write_lines(art.rank_decisions, rows)

    strata_counts: dict[str, int] = {}
    for pair in pairs:
        strata_counts[pair.sampling_stratum] = (
            strata_counts.get(pair.sampling_stratum, 0) + 1)

    table = [("model", "split", "pairs", "accuracy")]
    machine: list[tuple] = [("rank.pairs", len(pairs))]
    for model_name in ("pretrained", "finetuned", "oracle"):
        for split in ("train", "dev", "test"):
            hits, total = tallies.get((model_name, split), (0, 0))
            acc = hits / total if total else None
            table.append((model_name, split, str(total), _num(acc)))
            machine.append(("rank.accuracy", model_name, split,
                            _num(acc, machine=True)))
    human = ["rank", ""] + _table(table) + ["", "pairs per stratum"]
    human += _table([(s, str(n)) for s, n in sorted(strata_counts.items())])
    machine += [("rank.stratum", s, n)
                for s, n in sorted(strata_counts.items())]
    _write_report(art, "rank", human, machine)


# -------------------------------------------------------------- evaluate


def _mcc_rows(pairs, ids, values, masks):
    """Per-metric agreement between metric comparisons and human choices."""
    index = {cid: i for i, cid in enumerate(ids)}
    rows = []
    for m, name in enumerate(METRIC_NAMES):
        a = b = c = d = skipped = 0
        for pair in pairs:
            ia, ib = index.get(pair.tlc_a), index.get(pair.tlc_b)
            if ia is None or ib is None:
                skipped += 1
                continue
            if not (masks[ia][m] and masks[ib][m]):
                skipped += 1
                continue
            va, vb = values[ia][m], values[ib][m]
            if va == vb:
                skipped += 1
                continue
            says_a = va > vb
            human_a = pair.annotator_choice == "A"
            if says_a and human_a:
                a += 1
            elif says_a:
                b += 1
            elif human_a:
                c += 1
            else:
                d += 1
        n = a + b + c + d
        if n == 0:
            rows.append((name, None, 0, skipped, None))
            continue
        value = mcc(a, b, c, d)
        p = mcc_significance(value, n, tests=len(METRIC_NAMES))
        rows.append((name, value, n, skipped, p))
    return rows


def _alpha_report(pairs):
    """Krippendorff's alpha over pairs rated by more than one annotator."""
    items: dict[tuple[str, str, str], dict[str, str]] = {}
    for pair in pairs:
        key = (pair.post_id, pair.tlc_a, pair.tlc_b)
        items.setdefault(key, {})[pair.annotator_id] = pair.annotator_choice
    coders = sorted({pair.annotator_id for pair in pairs})
    keys = sorted(items)
    matrix = [[items[k].get(coder) for k in keys] for coder in coders]
    double = sum(1 for k in keys if len(items[k]) > 1)
    try:
        alpha = krippendorff_alpha(matrix)
    except NumericError:
        alpha = None
    return alpha, len(keys), double, len(coders)


def cmd_evaluate(cfg: PipelineConfig) -> None:
    art = Artifacts(cfg.out_dir)
    ids, values, masks = _read_panels(art)
    scores = _read_scores(_require(art.scores, "prosocial fit-trajectory"))
    splits = _read_splits(_require(art.splits, "prosocial ingest"))
    model = load_trajectory_model(
        _require(art.trajectory_model, "prosocial fit-trajectory"))
    check_manifest(model, METRIC_NAMES)

    _require(art.predictions, "prosocial forecast")
    _, pred_rows = _read_tsv(art.predictions)
    gbt_sq = {row[0]: (float(row[4]) - float(row[2])) ** 2
              for row in pred_rows if row[1] == "test"}
    ridge_sq = {row[0]: (float(row[3]) - float(row[2])) ** 2
                for row in pred_rows if row[1] == "test"}
    test_ids = [row[0] for row in pred_rows if row[1] == "test"]
    test_truth = np.asarray(
        [float(row[2]) for row in pred_rows if row[1] == "test"])

    human = ["evaluate", "", "forecast accuracy, test split"]
    machine: list[tuple] = []
    table = [("model", "n", "mse", "r2")]
    for model_name, sq in (("ridge", ridge_sq), ("gbt", gbt_sq)):
        if test_ids:
            preds = np.asarray([
                float(row[3 if model_name == "ridge" else 4])
                for row in pred_rows if row[1] == "test"])
            mse, r2 = _safe_regression(preds, test_truth)
        else:
            mse, r2 = None, None
        table.append((model_name, str(len(test_ids)), _num(mse), _num(r2)))
        machine.append(("evaluate.mse", model_name, _num(mse, machine=True)))
        machine.append(("evaluate.r2", model_name, _num(r2, machine=True)))
    human += _table(table)

    convs = _read_conversations(art)
    by_id = {c.id: c for c in convs}
    category_map = (load_category_map(cfg.categories)
                    if cfg.categories else {})
    subreddit_of = {c.id: c.subreddit for c in convs}
    stats = category_mse(gbt_sq, subreddit_of, category_map)
    human += ["", "per-category mse, boosted model on the test split"]
    human += _table([("category", "n", "mse", "ks_d", "ks_p")] + [
        (s.category, str(s.count), _num(s.mse), _num(s.ks_d), _num(s.ks_p))
        for s in stats
    ])
    machine += [
        ("evaluate.category", s.category, s.count,
         _num(s.mse, machine=True), _num(s.ks_d, machine=True),
         _num(s.ks_p, machine=True))
        for s in stats
    ]

    if cfg.pairs:
        pairs = load_pair_judgments(cfg.pairs)
        human += ["", "metric agreement with judged pairs "
                      "(Bonferroni over 22 tests)"]
        rows = _mcc_rows(pairs, ids, values, masks)
        human += _table([("metric", "mcc", "n", "skipped", "p")] + [
            (name, _num(v), str(n), str(sk), _num(p))
            for name, v, n, sk, p in rows
        ])
        machine += [
            ("evaluate.mcc", name, _num(v, machine=True), n, sk,
             _num(p, machine=True))
            for name, v, n, sk, p in rows
        ]
        alpha, items, double, coders = _alpha_report(pairs)
        human += ["", "annotator agreement"]
        human += _table([
            ("judged pairs", str(items)),
            ("rated by two or more", str(double)),
            ("annotators", str(coders)),
            ("krippendorff alpha", _num(alpha)),
        ])
        machine.append(("evaluate.alpha", _num(alpha, machine=True),
                        items, double, coders))
    else:
        human += ["", "metric agreement skipped: no pair file configured"]
        machine.append(("evaluate.mcc_skipped", "no pair file"))

    if os.path.exists(art.rank_decisions):
        _, decision_rows = _read_tsv(art.rank_decisions)
        test_rows = [row for row in decision_rows if row[3] == "test"]
        human += ["", "ranking accuracy on test pairs"]
        table = [("model", "n", "accuracy")]
        for column, model_name in ((6, "pretrained"), (7, "finetuned"),
                                   (8, "oracle")):
            if test_rows:
                hits = sum(1 for row in test_rows if row[column] == row[5])
                acc = hits / len(test_rows)
            else:
                acc = None
            table.append((model_name, str(len(test_rows)), _num(acc)))
            machine.append(("evaluate.accuracy", model_name,
                            _num(acc, machine=True)))
        human += _table(table)
    else:
        human += ["", "ranking accuracy skipped: rank has not run"]
        machine.append(("evaluate.accuracy_skipped", "rank has not run"))

    test_convs = [by_id[cid] for cid in test_ids if cid in by_id]
    ctx = _panel_context(cfg)
    half = half_split_analysis(test_convs, model, ctx, squared_errors=gbt_sq)
    human += ["", "early-vs-late prosociality, test split"]
    table = [("stratum", "n", "forecast mse")]
    for stratum in ("early", "late", "even"):
        members = half.strata.get(stratum, ())
        table.append((stratum, str(len(members)),
                      _num(half.stratum_mse.get(stratum))))
        machine.append(("evaluate.half", stratum, len(members),
                        _num(half.stratum_mse.get(stratum), machine=True)))
    human += _table(table)
    human += _table([
        ("excluded, odd reply count", str(half.excluded_odd)),
        ("wilcoxon u", _num(half.wilcoxon_u)),
        ("wilcoxon p", _num(half.wilcoxon_p)),
    ])
    machine.append(("evaluate.half_excluded", half.excluded_odd))
    machine.append(("evaluate.wilcoxon", _num(half.wilcoxon_u, machine=True),
                    _num(half.wilcoxon_p, machine=True)))
    _write_report(art, "evaluate", human, machine)


# ----------------------------------------------------------------- synth


def cmd_synth(cfg: PipelineConfig) -> None:
    params = SynthParams(
        conversations=cfg.synth_conversations,
        seed=cfg.seed,
        contaminate=cfg.synth_contaminate,
    )
    corpus = generate_corpus(params)
    write_corpus(corpus, cfg.out_dir)
    art = Artifacts(cfg.out_dir)
    counts = [
        ("conversations", len(corpus.truth)),
        ("posts", len(corpus.posts)),
        ("comments", len(corpus.comments)),
        ("judged pairs", len(corpus.pairs)),
        ("contaminated", str(cfg.synth_contaminate).lower()),
    ]
    human = ["synth"] + _table([(k, str(v)) for k, v in counts])
    machine = [("synth." + k.replace(" ", "_"), v) for k, v in counts]
    _write_report(art, "synth", human, machine)


# ------------------------------------------------------------------ main


COMMANDS = {
    "ingest": cmd_ingest,
    "score": cmd_score,
    "fit-trajectory": cmd_fit_trajectory,
    "train": cmd_train,
    "forecast": cmd_forecast,
    "rank": cmd_rank,
    "evaluate": cmd_evaluate,
    "synth": cmd_synth,
}

_COMMAND_HELP = {
    "ingest": "parse dumps into filtered, partitioned conversations",
    "score": "compute the 22-metric panel for every conversation",
    "fit-trajectory": "fit the trajectory model and score conversations",
    "train": "fit topic models, classifiers, and both forecasters",
    "forecast": "predict trajectories for every conversation",
    "rank": "fit and apply the pairwise ranker to judged pairs",
    "evaluate": "write the consolidated evaluation report",
    "synth": "generate a synthetic corpus with known ground truth",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, metavar="PATH",
                        help="key = value configuration file")
    common.add_argument("--seed", type=int, default=None,
                        help="override the configured seed")
    common.add_argument("--jobs", type=int, default=None,
                        help="worker processes for scoring")
    common.add_argument("--offline", action="store_true",
                        help="force the toxicity fallback scorer")
    common.add_argument("--set", dest="overrides", action="append",
                        default=[], metavar="KEY=VALUE",
                        help="override one config key")
    parser = argparse.ArgumentParser(
        prog="prosocial",
        description="prosocial-outcome analytics over threaded discussions",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=_COMMAND_HELP[name])
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, overrides=args.overrides)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.jobs is not None:
            cfg.jobs = args.jobs
        if args.offline:
            cfg.offline = True
        os.makedirs(cfg.out_dir, exist_ok=True)
        COMMANDS[args.command](cfg)
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ParseError, SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ProsocialError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
