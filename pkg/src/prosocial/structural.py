"""Tree-shape metrics over a conversation's reply forest.

Works on the Conversation container from the corpus module but only
through its tree accessors, so tests can feed small hand-built trees.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .corpus import Comment, Conversation


@dataclass(frozen=True)
class StructuralMetrics:
    subsequent_comments: int
    direct_replies: int
    depth: int
    sustained_partners: int
    sustained_turns: int
    community_score: int


def _author_key(comment: "Comment") -> str | None:
    """Stable author identity; deleted authors get no identity at all."""
    if comment.is_deleted or not comment.author or comment.author in ("[deleted]", "[removed]"):
        return None
    return comment.author


def count_replies(conversation: "Conversation") -> tuple[int, int]:
    """(subsequent, direct): all nodes below the TLC, and its children."""
    return (
        len(conversation.walk_replies()),
        len(conversation.children_of(conversation.tlc.id)),
    )


def conversation_depth(conversation: "Conversation") -> int:
    """Edges on the longest path below the TLC; 0 with no replies."""
    depth_of: dict[str, int] = {conversation.tlc.id: 0}
    max_depth = 0
    for reply in conversation.walk_replies():  # pre-order: parents first
        d = depth_of[reply.parent_id] + 1
        depth_of[reply.id] = d
        if d > max_depth:
            max_depth = d
    return max_depth


def community_score(conversation: "Conversation") -> int:
    """Sum of reply scores, TLC excluded; may be negative."""
    return sum(r.score for r in conversation.walk_replies())


def sustained_stats(conversation: "Conversation") -> tuple[int, int]:
    """(partners, turns) over reply edges, the TLC edge included.

    partners counts unordered author pairs joined by some parent-child
    edge; turns is the length in comments of the longest chain where
    exactly two authors alternate strictly. Deleted authors have no
    usable identity, so they form no pairs and break alternation.
    """
    replies = conversation.walk_replies()
    authors: dict[str, str | None] = {conversation.tlc.id: _author_key(conversation.tlc)}
    pairs: set[frozenset[str]] = set()
    for reply in replies:
        a = _author_key(reply)
        authors[reply.id] = a
        b = authors[reply.parent_id]
        if a is not None and b is not None and a != b:
            pairs.add(frozenset((a, b)))

    # dp[node] = length of the longest valid alternating chain ending there;
    # the chain is forced to run up the unique ancestor path.
    dp: dict[str, int] = {conversation.tlc.id: 1 if authors[conversation.tlc.id] else 0}
    best = 0
    parent_of: dict[str, str] = {}
    for reply in replies:
        parent_of[reply.id] = reply.parent_id
        a = authors[reply.id]
        if a is None:
            dp[reply.id] = 0
            continue
        p = reply.parent_id
        b = authors.get(p)
        if b is None or b == a:
            dp[reply.id] = 1
            continue
        length = 2
        grand = parent_of.get(p)  # None when the parent is the TLC
        if grand is not None and authors.get(grand) == a and dp.get(p, 0) >= 2:
            length = dp[p] + 1
        dp[reply.id] = length
        if length > best:
            best = length
    turns = best if best >= 2 else 0
    return len(pairs), turns


def structural_metrics(conversation: "Conversation") -> StructuralMetrics:
    subsequent, direct = count_replies(conversation)
    partners, turns = sustained_stats(conversation)
    return StructuralMetrics(
        subsequent_comments=subsequent,
        direct_replies=direct,
        depth=conversation_depth(conversation),
        sustained_partners=partners,
        sustained_turns=turns,
        community_score=community_score(conversation),
    )
