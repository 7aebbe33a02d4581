"""Synthetic corpus generator with a planted prosociality factor.

Every conversation draws one latent value u.  Reply counts, tree
shape, comment karma, and the probability of each textual event
(gratitude, laughter, links, compliments, toxicity, ...) all follow u,
so the metric panel of a generated conversation is a noisy 1-D factor
model and the fitted first component should recover u.  The ground
truth is written next to the corpus for exactly that comparison.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .rank_eval import SAMPLING_STRATA, PairJudgment, save_pair_judgments
from .scorers.ngram import NgramLogisticModel, save_ngram_model

DEFAULT_SUBREDDITS = (
    "askthings",
    "lifeadvice",
    "gadgets",
    "cooking",
    "history",
    "music",
)

CATEGORY_MAP = {
    "askthings": "qa",
    "lifeadvice": "advice",
    "gadgets": "tech",
    "cooking": "lifestyle",
    "history": "culture",
    "music": "culture",
}

# Neutral vocabulary: none of these words hits any packaged lexicon,
# marker category, or the laughter pattern, and all spell-check clean.
_FILLER = (
    "report", "window", "detail", "system", "engine", "record",
    "chart", "budget", "garden", "kitchen", "camera", "update",
    "topic", "question", "send", "saw", "twice",
)

# One representative word per accommodation category, used when a
# comment "exhibits" that category.
_MARKER_WORDS = {
    "articles": "an",
    "auxiliary_verbs": "was",
    "conjunctions": "but",
    "adverbs": "quite",
    "impersonal_pronouns": "it",
    "personal_pronouns": "they",
    "prepositions": "under",
    "quantifiers": "several",
}
_MARKER_CATEGORIES = tuple(sorted(_MARKER_WORDS))

# Event fragments with verified panel effects.
_FRAG_GRATITUDE = "thank you so much"
_FRAG_LAUGHTER = "haha"
_FRAG_EDU_LINK = "https://en.wikipedia.org/wiki/topic"
_FRAG_PLAIN_LINK = "https://example.com/page"
_FRAG_DONATION = "https://gofundme.com/c/drive"
_FRAG_COMPLIMENT = "you are truly wonderful amazing"
_FRAG_DISCLOSURE = "i saw this before"
_FRAG_INFO = "fact"
_FRAG_MENTOR = "mentor"
_FRAG_POLITE = "please"
_FRAG_SUPPORT = "you can do it"
_FRAG_TOXIC_2 = "idiot stupid"
_FRAG_TOXIC_5 = "idiot stupid moron idiot stupid"

BOT_AUTHORS = ("helperbot", "modbot9000")


@dataclass(frozen=True)
class SynthParams:
    conversations: int = 100
    seed: int = 0
    contaminate: bool = False
    subreddits: tuple[str, ...] = DEFAULT_SUBREDDITS
    annotators: int = 5
    annotator_accuracy: float = 0.85
    double_annotation_rate: float = 0.15


@dataclass
class SynthCorpus:
    posts: list[dict] = field(default_factory=list)
    comments: list[dict] = field(default_factory=list)
    truth: dict[str, float] = field(default_factory=dict)
    pairs: list[PairJudgment] = field(default_factory=list)
    categories: dict[str, str] = field(default_factory=dict)
    embeddings: dict[str, list[float]] = field(default_factory=dict)
    genders: dict[str, str] = field(default_factory=dict)
    bots: tuple[str, ...] = BOT_AUTHORS


def tiny_info_model() -> NgramLogisticModel:
    """Single-feature stand-in for a trained information classifier."""
    return NgramLogisticModel(
        vocabulary={_FRAG_INFO: 0},
        weights=np.asarray([6.0]),
        bias=-3.0,
        min_ngram_frequency=10,
        kind="info",
    )


def tiny_mentoring_model() -> NgramLogisticModel:
    return NgramLogisticModel(
        vocabulary={_FRAG_MENTOR: 0},
        weights=np.asarray([6.0]),
        bias=-3.0,
        min_ngram_frequency=10,
        kind="mentoring",
    )


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


class _Writer:
    """Accumulates one conversation's comments in raw-dump form."""

    def __init__(self, corpus: SynthCorpus, link_id: str, subreddit: str):
        self.corpus = corpus
        self.link_id = link_id
        self.subreddit = subreddit

    def add(
        self,
        comment_id: str,
        parent_id: str,
        author: str,
        created: int,
        body: str,
        score: int,
    ) -> None:
        self.corpus.comments.append(
            {
                "id": comment_id,
                "parent_id": parent_id,
                "link_id": f"t3_{self.link_id}",
                "author": author,
                "subreddit": self.subreddit,
                "created_utc": created,
                "body": body,
                "score": score,
            }
        )


def _filler(rng: np.random.Generator, count: int) -> list[str]:
    return [_FILLER[int(i)] for i in rng.integers(0, len(_FILLER), count)]


def _marker_draw(rng: np.random.Generator) -> dict[str, bool]:
    return {c: bool(rng.random() < 0.5) for c in _MARKER_CATEGORIES}


def _echo_markers(
    rng: np.random.Generator,
    parent: dict[str, bool],
    u_eff: float,
) -> dict[str, bool]:
    lean = 0.47 * math.tanh(1.3 * u_eff)
    out: dict[str, bool] = {}
    for c in _MARKER_CATEGORIES:
        p = 0.5 + lean if parent[c] else 0.5 - lean
        out[c] = bool(rng.random() < min(0.97, max(0.03, p)))
    return out


def _marker_text(exhibits: dict[str, bool]) -> list[str]:
    return [_MARKER_WORDS[c] for c in _MARKER_CATEGORIES if exhibits[c]]


def _reply_body(
    rng: np.random.Generator,
    u_eff: float,
    markers: dict[str, bool],
) -> str:
    base = 0.04 + 0.9 * _sigmoid(1.7 * u_eff)
    anti = _sigmoid(-2.0 * u_eff)
    parts = _marker_text(markers)
    parts += _filler(rng, int(rng.integers(2, 5)))
    draws = rng.random(12)
    if draws[0] < base * 0.6:
        parts.append(_FRAG_GRATITUDE)
    if draws[1] < base * 0.55:
        parts.append(_FRAG_LAUGHTER)
    if draws[2] < base * 0.5:
        parts.append(_FRAG_EDU_LINK)
    if draws[3] < base * 0.4:
        parts.append(_FRAG_PLAIN_LINK)
    if draws[4] < base * 0.35:
        parts.append(_FRAG_DONATION)
    if draws[5] < base * 0.45:
        parts.append(_FRAG_COMPLIMENT)
    if draws[6] < base * 0.65:
        parts.append(_FRAG_DISCLOSURE)
    if draws[7] < base * 0.55:
        parts.append(_FRAG_INFO)
    if draws[8] < base * 0.5:
        parts.append(_FRAG_MENTOR)
    if draws[9] < base * 0.65:
        parts.append(_FRAG_POLITE)
    if draws[10] < base * 0.6:
        parts.append(_FRAG_SUPPORT)
    if draws[11] < anti * 0.6:
        if rng.random() < 0.45:
            parts.append(_FRAG_TOXIC_5)
        else:
            parts.append(_FRAG_TOXIC_2)
    return " ".join(parts)


def _target_body(rng: np.random.Generator, markers: dict[str, bool]) -> str:
    parts = _marker_text(markers)
    parts += _filler(rng, int(rng.integers(3, 7)))
    text = " ".join(parts)
    if rng.random() < 0.5:
        text += "?"
    return text


def _karma(rng: np.random.Generator, u: float) -> int:
    return int(round(2.5 + 2.8 * u + rng.normal(0.0, 1.0)))


def _generate_conversation(
    corpus: SynthCorpus,
    rng: np.random.Generator,
    conv_index: int,
    post_id: str,
    subreddit: str,
    post_time: int,
) -> tuple[str, float]:
    """Emit one TLC tree; returns (tlc id, planted u)."""
    u = float(rng.standard_normal())
    drift = float(rng.normal(0.0, 0.35))
    n_replies = max(1, int(round(7.0 + 2.2 * u + rng.normal(0.0, 0.5))))
    n_direct = max(1, int(round(n_replies * 0.5)))
    n_chain = n_replies - n_direct

    target = f"u{conv_index:06d}a"
    tlc_id = f"c{conv_index:06d}t"
    writer = _Writer(corpus, post_id, subreddit)

    tlc_markers = _marker_draw(rng)
    tlc_time = post_time + 180 + int(rng.integers(0, 240))
    writer.add(
        tlc_id,
        f"t3_{post_id}",
        target,
        tlc_time,
        _target_body(rng, tlc_markers),
        _karma(rng, u),
    )

    def u_at(j: int) -> float:
        return u + drift * (2.0 * (j + 1) / n_replies - 1.0)

    step = 0
    for k in range(n_direct):
        markers = _echo_markers(rng, tlc_markers, u_at(step))
        writer.add(
            f"c{conv_index:06d}d{k}",
            f"t1_{tlc_id}",
            f"u{conv_index:06d}p{k}",
            tlc_time + 60 * (step + 1) + int(rng.integers(0, 20)),
            _reply_body(rng, u_at(step), markers),
            _karma(rng, u),
        )
        step += 1

    # One alternating chain under the first direct child: the original
    # author comes back, so exchanges and long alternations exist.
    parent_id = f"c{conv_index:06d}d0"
    partner = f"u{conv_index:06d}p0"
    parent_markers = tlc_markers
    for j in range(n_chain):
        cid = f"c{conv_index:06d}x{j}"
        if j % 2 == 0:
            markers = _marker_draw(rng)
            body = _target_body(rng, markers)
            author = target
        else:
            markers = _echo_markers(rng, parent_markers, u_at(step))
            body = _reply_body(rng, u_at(step), markers)
            author = partner
        writer.add(
            cid,
            f"t1_{parent_id}",
            author,
            tlc_time + 60 * (step + 1) + int(rng.integers(0, 20)),
            body,
            _karma(rng, u),
        )
        parent_id = cid
        parent_markers = markers
        step += 1

    return tlc_id, u


def _contaminate(corpus: SynthCorpus, base_time: int) -> None:
    """Threads that every ingest filter should catch, plus tree edge
    cases: an orphaned reply and comments whose post is missing."""
    posts = [
        ("junk0", "gadgets", "bot thread"),
        ("junk1", "cooking", "deleted thread"),
        ("junk2", "history", "long thread"),
    ]
    for pid, sub, title in posts:
        corpus.posts.append(
            {
                "id": pid,
                "title": title,
                "selftext": "filler",
                "subreddit": sub,
                "created_utc": base_time,
                "author": "op_junk",
            }
        )
    w = _Writer(corpus, "junk0", "gadgets")
    w.add("j0t", "t3_junk0", BOT_AUTHORS[0], base_time + 60, "an automated record", 1)
    w.add("j0r", "t1_j0t", "u_junk", base_time + 120, "report window", 1)

    w = _Writer(corpus, "junk1", "cooking")
    w.add("j1t", "t3_junk1", "[deleted]", base_time + 60, "[deleted]", 1)
    w.add("j1r", "t1_j1t", "u_junk", base_time + 120, "detail chart", 1)

    w = _Writer(corpus, "junk2", "history")
    w.add("j2t", "t3_junk2", "u_long", base_time + 60, "window " * 3600, 1)

    # Orphan: parent id never emitted; post exists with a real TLC.
    corpus.posts.append(
        {
            "id": "junk3",
            "title": "orphan host",
            "selftext": "filler",
            "subreddit": "music",
            "created_utc": base_time,
            "author": "op_junk",
        }
    )
    w = _Writer(corpus, "junk3", "music")
    w.add("j3t", "t3_junk3", "u_host", base_time + 60, "system update", 1)
    w.add("j3o", "t1_missing", "u_lost", base_time + 120, "garden kitchen", 1)

    # Comments whose post record is absent entirely.
    w = _Writer(corpus, "ghost", "music")
    w.add("j4t", "t3_ghost", "u_ghost", base_time + 60, "camera detail", 1)
    w.add("j4r", "t1_j4t", "u_ghost2", base_time + 120, "budget topic", 1)


def _annotate_pairs(
    corpus: SynthCorpus,
    rng: np.random.Generator,
    pair_pool: list[tuple[str, str, str]],
    params: SynthParams,
) -> None:
    for idx, (post_id, tlc_a, tlc_b) in enumerate(pair_pool):
        stratum = SAMPLING_STRATA[idx % len(SAMPLING_STRATA)]
        truth_choice = (
            "A" if corpus.truth[tlc_a] >= corpus.truth[tlc_b] else "B"
        )
        coders = [idx % params.annotators]
        if rng.random() < params.double_annotation_rate:
            coders.append((idx + 1) % params.annotators)
        for coder in coders:
            choice = truth_choice
            if rng.random() >= params.annotator_accuracy:
                choice = "B" if choice == "A" else "A"
            corpus.pairs.append(
                PairJudgment(
                    post_id=post_id,
                    tlc_a=tlc_a,
                    tlc_b=tlc_b,
                    annotator_choice=choice,
                    annotator_id=f"ann{coder}",
                    sampling_stratum=stratum,
                )
            )


def generate_corpus(params: SynthParams) -> SynthCorpus:
    """Build the full synthetic bundle in memory, deterministically."""
    rng = np.random.default_rng(params.seed)
    corpus = SynthCorpus()
    corpus.categories = {
        sub: CATEGORY_MAP.get(sub, "uncategorized") for sub in params.subreddits
    }

    base_time = 1_600_000_000
    pair_pool: list[tuple[str, str, str]] = []
    conv_index = 0
    post_index = 0
    while conv_index < params.conversations:
        post_id = f"p{post_index:05d}"
        subreddit = params.subreddits[post_index % len(params.subreddits)]
        post_time = base_time + post_index * 137
        corpus.posts.append(
            {
                "id": post_id,
                "title": " ".join(_filler(rng, 4)) + "?",
                "selftext": " ".join(_filler(rng, 8)),
                "subreddit": subreddit,
                "created_utc": post_time,
                "author": f"op{post_index:05d}",
            }
        )
        tlc_ids: list[str] = []
        for _ in range(min(2, params.conversations - conv_index)):
            tlc_id, u = _generate_conversation(
                corpus, rng, conv_index, post_id, subreddit, post_time
            )
            corpus.truth[tlc_id] = u
            tlc_ids.append(tlc_id)
            conv_index += 1
        if len(tlc_ids) == 2:
            pair_pool.append((post_id, tlc_ids[0], tlc_ids[1]))
        post_index += 1

    _annotate_pairs(corpus, rng, pair_pool, params)

    for sub in sorted(params.subreddits):
        corpus.embeddings[sub] = [float(x) for x in rng.standard_normal(300)]

    for i in range(params.conversations):
        author = f"u{i:06d}a"
        draw = rng.random()
        if draw < 0.3:
            corpus.genders[author] = "m"
        elif draw < 0.6:
            corpus.genders[author] = "f"

    if params.contaminate:
        _contaminate(corpus, base_time - 10_000)
    return corpus


def write_corpus(corpus: SynthCorpus, out_dir: str) -> dict[str, str]:
    """Write every bundle file under out_dir; returns name -> path."""
    import json

    os.makedirs(out_dir, exist_ok=True)
    models_dir = os.path.join(out_dir, "models")
    os.makedirs(models_dir, exist_ok=True)
    paths = {
        "posts": os.path.join(out_dir, "posts.ndjson"),
        "comments": os.path.join(out_dir, "comments.ndjson"),
        "truth": os.path.join(out_dir, "truth.tsv"),
        "pairs": os.path.join(out_dir, "pairs.tsv"),
        "categories": os.path.join(out_dir, "categories.tsv"),
        "embeddings": os.path.join(out_dir, "embeddings.txt"),
        "genders": os.path.join(out_dir, "genders.tsv"),
        "bots": os.path.join(out_dir, "bots.txt"),
        "info_model": os.path.join(models_dir, "info.model"),
        "mentoring_model": os.path.join(models_dir, "mentoring.model"),
    }
    with open(paths["posts"], "w", encoding="utf-8") as fh:
        for record in corpus.posts:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    with open(paths["comments"], "w", encoding="utf-8") as fh:
        for record in corpus.comments:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    with open(paths["truth"], "w", encoding="utf-8") as fh:
        for tlc_id in sorted(corpus.truth):
            fh.write(f"{tlc_id}\t{float(corpus.truth[tlc_id])!r}\n")
    save_pair_judgments(corpus.pairs, paths["pairs"])
    with open(paths["categories"], "w", encoding="utf-8") as fh:
        for sub in sorted(corpus.categories):
            fh.write(f"{sub}\t{corpus.categories[sub]}\n")
    with open(paths["embeddings"], "w", encoding="utf-8") as fh:
        for sub in sorted(corpus.embeddings):
            row = " ".join(repr(float(v)) for v in corpus.embeddings[sub])
            fh.write(f"{sub} {row}\n")
    with open(paths["genders"], "w", encoding="utf-8") as fh:
        for author in sorted(corpus.genders):
            fh.write(f"{author}\t{corpus.genders[author]}\n")
    with open(paths["bots"], "w", encoding="utf-8") as fh:
        fh.write("\n".join(corpus.bots) + "\n")
    save_ngram_model(tiny_info_model(), paths["info_model"])
    save_ngram_model(tiny_mentoring_model(), paths["mentoring_model"])
    return paths


def read_truth(path: str) -> dict[str, float]:
    out: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            tlc_id, _, value = line.partition("\t")
            out[tlc_id] = float(value)
    return out
