"""Linguistic style coordination toward the thread starter.

For each function-word category, measures how much more likely a reply
is to use the category when the comment it answers used it:

    C = P(marker in reply | marker in parent) - P(marker in reply)

computed over exchanges (comment by the TLC author, direct reply by
someone else). Undefined when there are no exchanges or the parent side
never exhibits the marker; the conversation-level value is the mean of
the defined per-category scores.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import TYPE_CHECKING

from .textlex import tokenize

if TYPE_CHECKING:
    from .corpus import Conversation


@dataclass(frozen=True)
class Exchange:
    parent_text: str
    reply_text: str


_DEFAULT_CATALOG: dict[str, frozenset[str]] | None = None


def load_marker_catalog(path: str | None = None) -> dict[str, frozenset[str]]:
    global _DEFAULT_CATALOG
    if path is None and _DEFAULT_CATALOG is not None:
        return _DEFAULT_CATALOG
    if path is None:
        raw = resources.files("prosocial.data").joinpath("markers.tsv").read_text("utf-8")
    else:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    catalog: dict[str, set[str]] = {}
    for line in raw.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        category, _, word = line.partition("\t")
        catalog.setdefault(category.strip(), set()).add(word.strip().lower())
    frozen = {cat: frozenset(words) for cat, words in catalog.items()}
    if path is None:
        _DEFAULT_CATALOG = frozen
    return frozen


def _exhibits(text: str, markers: frozenset[str]) -> bool:
    return any(tok in markers for tok in tokenize(text).tokens)


def coordination_score(exchanges: list[Exchange], markers: frozenset[str]) -> float | None:
    """Coordination for one marker category; None when undefined."""
    if not exchanges:
        return None
    parent_hits = [_exhibits(e.parent_text, markers) for e in exchanges]
    n_parent = sum(parent_hits)
    if n_parent == 0:
        return None
    reply_hits = [_exhibits(e.reply_text, markers) for e in exchanges]
    both = sum(1 for p, r in zip(parent_hits, reply_hits) if p and r)
    p_cond = both / n_parent
    p_base = sum(reply_hits) / len(exchanges)
    return p_cond - p_base


def conversation_exchanges(conversation: "Conversation") -> list[Exchange]:
    """Exchanges targeting the TLC author: their comments and direct replies by others."""
    target = conversation.tlc.author
    if conversation.tlc.is_deleted or not target or target in ("[deleted]", "[removed]"):
        return []
    exchanges = []
    for comment in [conversation.tlc] + conversation.walk_replies():
        if comment.author != target or comment.is_deleted:
            continue
        for child in conversation.children_of(comment.id):
            if child.author != target:
                exchanges.append(Exchange(parent_text=comment.body, reply_text=child.body))
    return exchanges


def conversation_accommodation(
    conversation: "Conversation",
    catalog: dict[str, frozenset[str]] | None = None,
) -> float | None:
    """Mean defined per-category coordination toward the TLC author, or None."""
    if catalog is None:
        catalog = load_marker_catalog()
    exchanges = conversation_exchanges(conversation)
    scores = []
    for category in sorted(catalog):
        score = coordination_score(exchanges, catalog[category])
        if score is not None:
            scores.append(score)
    if not scores:
        return None
    return sum(scores) / len(scores)
