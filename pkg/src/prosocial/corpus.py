"""Comment-dump parsing, conversation assembly, filtering, partitioning.

Input is newline-delimited records compatible with public Reddit dump
archives: comments carry t1_/t3_ prefixed parent and link ids, which are
normalized away here. A conversation is one top-level comment (TLC,
a comment whose parent is the post) plus the reply forest beneath it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .errors import ParseError, SchemaError
from .textlex import word_count

SCHEMA_VERSION = 1

_ID_PREFIXES = ("t1_", "t2_", "t3_", "t4_", "t5_")


def _normalize_id(value: str) -> str:
    for prefix in _ID_PREFIXES:
        if value.startswith(prefix):
            return value[len(prefix):]
    return value


@dataclass(frozen=True)
class Comment:
    id: str
    parent_id: str
    link_id: str
    author: str
    subreddit: str
    created_utc: int
    body: str
    score: int
    is_deleted: bool = False
    is_removed: bool = False
    is_bot: bool = False


@dataclass(frozen=True)
class Post:
    id: str
    title: str
    selftext: str
    subreddit: str
    created_utc: int
    author: str


class Conversation:
    """One TLC and its reply tree. Immutable after construction."""

    __slots__ = ("post", "tlc", "orphan_count", "_children", "_walk_cache")

    def __init__(self, post: Post, tlc: Comment, replies: Iterable[Comment],
                 orphan_count: int = 0):
        self.post = post
        self.tlc = tlc
        self.orphan_count = orphan_count
        children: dict[str, list[Comment]] = {}
        for reply in replies:
            children.setdefault(reply.parent_id, []).append(reply)
        self._children = {
            pid: tuple(sorted(kids, key=lambda c: (c.created_utc, c.id)))
            for pid, kids in children.items()
        }
        self._walk_cache: tuple[Comment, ...] | None = None

    def children_of(self, comment_id: str) -> tuple[Comment, ...]:
        return self._children.get(comment_id, ())

    def walk_replies(self) -> list[Comment]:
        """All replies in pre-order (parents before children, siblings by time)."""
        if self._walk_cache is None:
            out: list[Comment] = []
            stack = list(reversed(self.children_of(self.tlc.id)))
            while stack:
                node = stack.pop()
                out.append(node)
                stack.extend(reversed(self.children_of(node.id)))
            self._walk_cache = tuple(out)
        return list(self._walk_cache)

    @property
    def id(self) -> str:
        return self.tlc.id

    @property
    def subreddit(self) -> str:
        return self.tlc.subreddit


def parse_comment_record(line: str, bot_list: frozenset[str] | set[str] = frozenset(),
                         line_number: int | None = None) -> Comment:
    """One comment from one dump line; body markers set the moderation flags."""
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid record: {exc.msg}", line_number) from exc
    if not isinstance(raw, dict):
        raise ParseError("record is not an object", line_number)
    for required in ("id", "link_id", "body"):
        if required not in raw or raw[required] in (None, ""):
            raise SchemaError(f"comment record missing '{required}'"
                              + (f" (line {line_number})" if line_number else ""))
    link_id = _normalize_id(str(raw["link_id"]))
    parent = raw.get("parent_id")
    parent_id = _normalize_id(str(parent)) if parent else link_id
    author = str(raw.get("author", "[deleted]") or "[deleted]")
    body = str(raw["body"])
    return Comment(
        id=_normalize_id(str(raw["id"])),
        parent_id=parent_id,
        link_id=link_id,
        author=author,
        subreddit=str(raw.get("subreddit", "")),
        created_utc=int(raw.get("created_utc", 0)),
        body=body,
        score=int(raw.get("score", 0)),
        is_deleted=body == "[deleted]",
        is_removed=body == "[removed]",
        is_bot=author.lower() in bot_list,
    )


def parse_post_record(line: str, line_number: int | None = None) -> Post:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid record: {exc.msg}", line_number) from exc
    if not isinstance(raw, dict):
        raise ParseError("record is not an object", line_number)
    if "id" not in raw or raw["id"] in (None, ""):
        raise SchemaError("post record missing 'id'"
                          + (f" (line {line_number})" if line_number else ""))
    return Post(
        id=_normalize_id(str(raw["id"])),
        title=str(raw.get("title", "")),
        selftext=str(raw.get("selftext", "")),
        subreddit=str(raw.get("subreddit", "")),
        created_utc=int(raw.get("created_utc", 0)),
        author=str(raw.get("author", "[deleted]") or "[deleted]"),
    )


def read_comment_dump(path: str, bot_list: frozenset[str] | set[str] = frozenset()
                      ) -> Iterator[Comment]:
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if line.strip():
                yield parse_comment_record(line, bot_list, line_number=i)


def read_post_dump(path: str) -> dict[str, Post]:
    posts: dict[str, Post] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if line.strip():
                post = parse_post_record(line, line_number=i)
                posts[post.id] = post
    return posts


@dataclass
class BuildReport:
    conversations: int = 0
    orphan_replies: int = 0
    skipped_missing_post: int = 0


def build_conversations(comments: Iterable[Comment], posts: dict[str, Post]
                        ) -> tuple[list[Conversation], BuildReport]:
    """Assemble one Conversation per TLC.

    Replies whose ancestor chain never reaches a TLC are orphans: dropped
    and counted. Orphans are attributed to the post's earliest TLC (they
    cannot be assigned to a specific tree); posts with no TLC at all
    count orphans in the report only.
    """
    by_link: dict[str, list[Comment]] = {}
    for comment in comments:
        by_link.setdefault(comment.link_id, []).append(comment)

    report = BuildReport()
    conversations: list[Conversation] = []
    for link_id in by_link:
        group = by_link[link_id]
        tlcs = [c for c in group if c.parent_id == c.link_id]
        children: dict[str, list[Comment]] = {}
        for c in group:
            if c.parent_id != c.link_id:
                children.setdefault(c.parent_id, []).append(c)

        reached: set[str] = set()
        trees: list[tuple[Comment, list[Comment]]] = []
        for tlc in sorted(tlcs, key=lambda c: (c.created_utc, c.id)):
            collected: list[Comment] = []
            stack = [tlc.id]
            reached.add(tlc.id)
            while stack:
                pid = stack.pop()
                for kid in children.get(pid, ()):
                    if kid.id in reached:
                        continue  # duplicate ids cannot create cycles
                    reached.add(kid.id)
                    collected.append(kid)
                    stack.append(kid.id)
            trees.append((tlc, collected))

        orphans = sum(1 for c in group if c.id not in reached and c.parent_id != c.link_id)
        report.orphan_replies += orphans
        post = posts.get(link_id)
        if post is None:
            report.skipped_missing_post += len(trees)
            continue
        for i, (tlc, collected) in enumerate(trees):
            conversations.append(Conversation(
                post=post, tlc=tlc, replies=collected,
                orphan_count=orphans if i == 0 else 0,
            ))
    report.conversations = len(conversations)
    return conversations, report


@dataclass
class FilterReport:
    input: int = 0
    bot: int = 0
    deleted_removed: int = 0
    too_long: int = 0

    @property
    def kept(self) -> int:
        return self.input - self.bot - self.deleted_removed - self.too_long


def filter_conversations(conversations: list[Conversation], max_tlc_words: int = 3500
                         ) -> tuple[list[Conversation], FilterReport]:
    """Drop bot threads, moderated TLCs, and over-long TLCs (in that order)."""
    report = FilterReport(input=len(conversations))
    kept: list[Conversation] = []
    for conv in conversations:
        if conv.tlc.is_bot or any(r.is_bot for r in conv.walk_replies()):
            report.bot += 1
        elif conv.tlc.is_deleted or conv.tlc.is_removed:
            report.deleted_removed += 1
        elif word_count(conv.tlc.body) > max_tlc_words:
            report.too_long += 1
        else:
            kept.append(conv)
    return kept, report


@dataclass(frozen=True)
class DatasetPartition:
    train: tuple[str, ...]
    dev: tuple[str, ...]
    test: tuple[str, ...]
    seed: int


def partition_dataset(conversations: list[Conversation],
                      ratios: tuple[int, int, int] = (8, 1, 1),
                      seed: int = 0) -> DatasetPartition:
    """Seeded shuffle, then largest-remainder split by the given ratios."""
    if any(r <= 0 for r in ratios):
        raise ValueError("ratios must be positive")
    n = len(conversations)
    if n < len(ratios):
        raise ValueError(f"need at least {len(ratios)} conversations, got {n}")
    ids = [c.id for c in conversations]
    order = np.random.default_rng(seed).permutation(n)
    shuffled = [ids[i] for i in order]

    total = sum(ratios)
    quotas = [n * r / total for r in ratios]
    sizes = [int(q) for q in quotas]
    remainders = sorted(range(len(ratios)),
                        key=lambda i: (-(quotas[i] - sizes[i]), i))
    for i in range(n - sum(sizes)):
        sizes[remainders[i % len(ratios)]] += 1

    train = tuple(shuffled[:sizes[0]])
    dev = tuple(shuffled[sizes[0]:sizes[0] + sizes[1]])
    test = tuple(shuffled[sizes[0] + sizes[1]:])
    return DatasetPartition(train=train, dev=dev, test=test, seed=seed)


def downsample_training(train: list[Conversation], min_per_subreddit: int = 100,
                        max_per_subreddit: int = 500, seed: int = 0
                        ) -> tuple[list[Conversation], dict[str, tuple[int, int]]]:
    """Drop small subreddits, randomly truncate large ones (input order kept)."""
    by_sub: dict[str, list[int]] = {}
    for i, conv in enumerate(train):
        by_sub.setdefault(conv.subreddit, []).append(i)
    rng = np.random.default_rng(seed)
    keep: set[int] = set()
    report: dict[str, tuple[int, int]] = {}
    for sub in sorted(by_sub):
        idxs = by_sub[sub]
        if len(idxs) < min_per_subreddit:
            report[sub] = (len(idxs), 0)
            continue
        if len(idxs) > max_per_subreddit:
            chosen = rng.choice(len(idxs), size=max_per_subreddit, replace=False)
            picked = [idxs[j] for j in sorted(chosen)]
        else:
            picked = idxs
        keep.update(picked)
        report[sub] = (len(idxs), len(picked))
    return [c for i, c in enumerate(train) if i in keep], report


def _comment_to_dict(c: Comment) -> dict:
    return {
        "id": c.id, "parent_id": c.parent_id, "link_id": c.link_id,
        "author": c.author, "subreddit": c.subreddit,
        "created_utc": c.created_utc, "body": c.body, "score": c.score,
        "is_deleted": c.is_deleted, "is_removed": c.is_removed,
        "is_bot": c.is_bot,
    }


def _comment_from_dict(d: dict) -> Comment:
    return Comment(
        id=d["id"], parent_id=d["parent_id"], link_id=d["link_id"],
        author=d["author"], subreddit=d["subreddit"],
        created_utc=int(d["created_utc"]), body=d["body"],
        score=int(d["score"]), is_deleted=bool(d["is_deleted"]),
        is_removed=bool(d["is_removed"]), is_bot=bool(d["is_bot"]),
    )


def conversation_to_json(conv: Conversation) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "post": {
            "id": conv.post.id, "title": conv.post.title,
            "selftext": conv.post.selftext, "subreddit": conv.post.subreddit,
            "created_utc": conv.post.created_utc, "author": conv.post.author,
        },
        "tlc": _comment_to_dict(conv.tlc),
        "replies": [_comment_to_dict(r) for r in conv.walk_replies()],
        "orphan_count": conv.orphan_count,
    }
    return json.dumps(doc, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def conversation_from_json(line: str, line_number: int | None = None) -> Conversation:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid conversation record: {exc.msg}", line_number) from exc
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {version!r}")
    p = doc["post"]
    post = Post(id=p["id"], title=p["title"], selftext=p["selftext"],
                subreddit=p["subreddit"], created_utc=int(p["created_utc"]),
                author=p["author"])
    return Conversation(
        post=post,
        tlc=_comment_from_dict(doc["tlc"]),
        replies=[_comment_from_dict(r) for r in doc["replies"]],
        orphan_count=int(doc.get("orphan_count", 0)),
    )


def write_conversations(path: str, conversations: Iterable[Conversation]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for conv in conversations:
            fh.write(conversation_to_json(conv) + "\n")
            count += 1
    return count


def read_conversations(path: str) -> list[Conversation]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if line.strip():
                out.append(conversation_from_json(line, line_number=i))
    return out
