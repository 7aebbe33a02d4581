"""Lexicon- and pattern-based comment metrics.

Laughter, gratitude, compliments, first-person disclosure, and link
classification. These operate on single comment bodies; panel assembly
aggregates them over a conversation's replies.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from urllib.parse import urlsplit

from .textlex import (
    SentimentLexicon,
    extract_urls,
    load_sentiment_lexicon,
    sentiment_compound,
    tokenize,
)

LAUGHTER_RE = re.compile(
    r"\ba*h+a+h+a+(h+a+)*?h*\b|\bl+o+l+(o+l+)*?\b|\bh+e+h+e+(h+e+)*?h*\b",
    re.IGNORECASE,
)


def count_laughter(text: str) -> int:
    """Non-overlapping laughter expressions (haha/lol/hehe families)."""
    return sum(1 for _ in LAUGHTER_RE.finditer(text))


def _data_lines(name: str) -> list[str]:
    raw = resources.files("prosocial.data").joinpath(name).read_text("utf-8")
    return [ln.strip().lower() for ln in raw.splitlines() if ln.strip() and not ln.startswith("#")]


@dataclass(frozen=True)
class GratitudeLexicon:
    words: frozenset[str]
    phrases: tuple[tuple[str, ...], ...]


_DEFAULT_GRATITUDE: GratitudeLexicon | None = None


def load_gratitude_lexicon(path: str | None = None) -> GratitudeLexicon:
    global _DEFAULT_GRATITUDE
    if path is None and _DEFAULT_GRATITUDE is not None:
        return _DEFAULT_GRATITUDE
    if path is None:
        lines = _data_lines("gratitude.txt")
    else:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip().lower() for ln in fh if ln.strip() and not ln.startswith("#")]
    words = frozenset(ln for ln in lines if " " not in ln)
    phrases = tuple(tuple(ln.split()) for ln in lines if " " in ln)
    lex = GratitudeLexicon(words=words, phrases=phrases)
    if path is None:
        _DEFAULT_GRATITUDE = lex
    return lex


def count_gratitude(text: str, lexicon: GratitudeLexicon | None = None) -> int:
    """Gratitude expressions; phrases match before single words, no overlap."""
    if lexicon is None:
        lexicon = load_gratitude_lexicon()
    tokens = tokenize(text).tokens
    consumed = [False] * len(tokens)
    count = 0
    for phrase in sorted(lexicon.phrases, key=len, reverse=True):
        n = len(phrase)
        i = 0
        while i + n <= len(tokens):
            if tuple(tokens[i:i + n]) == phrase and not any(consumed[i:i + n]):
                count += 1
                for j in range(i, i + n):
                    consumed[j] = True
                i += n
            else:
                i += 1
    for i, tok in enumerate(tokens):
        if not consumed[i] and tok in lexicon.words:
            count += 1
    return count


_COMPLIMENT_VERBS = ("is", "are")
_COMPLIMENT_GUARDS = ("if", "when")
_COMPLIMENT_WINDOW = 5
_COMPLIMENT_THRESHOLD = 0.7


def detect_compliments(text: str, lexicon: SentimentLexicon | None = None) -> int:
    """Count compliment phrases directed at the other person.

    Candidates are "you is/are" and "your <word> is/are" token sequences
    (adjacent on whitespace only, so intervening punctuation breaks a
    candidate). Candidates whose you/your is immediately preceded by
    "if" or "when" are discarded. A candidate counts when the compound
    sentiment of the five tokens after the verb reaches 0.7.
    """
    if lexicon is None:
        lexicon = load_sentiment_lexicon()
    tt = tokenize(text)
    tokens, spans, raw = tt.tokens, tt.spans, tt.raw_tokens

    def adjacent(i: int, j: int) -> bool:
        gap = tt.text[spans[i][1]:spans[j][0]]
        return gap.strip() == "" and gap != ""

    count = 0
    for i, tok in enumerate(tokens):
        end = None
        if tok == "you" and i + 1 < len(tokens):
            if tokens[i + 1] in _COMPLIMENT_VERBS and adjacent(i, i + 1):
                end = i + 2
        elif tok == "your" and i + 2 < len(tokens):
            if (tokens[i + 2] in _COMPLIMENT_VERBS
                    and adjacent(i, i + 1) and adjacent(i + 1, i + 2)):
                end = i + 3
        if end is None:
            continue
        if i > 0 and tokens[i - 1] in _COMPLIMENT_GUARDS and adjacent(i - 1, i):
            continue
        window = raw[end:end + _COMPLIMENT_WINDOW]
        if not window:
            continue
        if sentiment_compound(" ".join(window), lexicon) >= _COMPLIMENT_THRESHOLD:
            count += 1
    return count


_FIRST_PERSON = frozenset({"i", "me", "my", "mine", "myself"})


def has_first_person(text: str) -> bool:
    """True when any token (or apostrophe-split part, as in "i'm") is first person."""
    for tok in tokenize(text).tokens:
        if tok in _FIRST_PERSON:
            return True
        if "'" in tok and any(part in _FIRST_PERSON for part in tok.split("'")):
            return True
    return False


@dataclass(frozen=True)
class DomainLists:
    educational: frozenset[str]
    donation: frozenset[str]


_DEFAULT_DOMAINS: DomainLists | None = None


def load_domain_lists(
    educational_path: str | None = None, donation_path: str | None = None
) -> DomainLists:
    global _DEFAULT_DOMAINS
    if educational_path is None and donation_path is None:
        if _DEFAULT_DOMAINS is None:
            _DEFAULT_DOMAINS = DomainLists(
                educational=frozenset(_data_lines("educational_domains.txt")),
                donation=frozenset(_data_lines("donation_domains.txt")),
            )
        return _DEFAULT_DOMAINS

    def read(path: str | None, default: str) -> frozenset[str]:
        if path is None:
            return frozenset(_data_lines(default))
        with open(path, "r", encoding="utf-8") as fh:
            return frozenset(
                ln.strip().lower() for ln in fh if ln.strip() and not ln.startswith("#")
            )

    return DomainLists(
        educational=read(educational_path, "educational_domains.txt"),
        donation=read(donation_path, "donation_domains.txt"),
    )


def domain_matches(host: str, domains: frozenset[str]) -> bool:
    host = host.lower().rstrip(".")
    for entry in domains:
        if host == entry or host.endswith("." + entry):
            return True
    return False


def classify_urls(text: str, lists: DomainLists | None = None) -> tuple[int, int, int]:
    """(total, educational, donation) URL counts for one comment body.

    Every URL occurrence counts. URLs whose host cannot be parsed count
    toward the total only.
    """
    if lists is None:
        lists = load_domain_lists()
    total = edu = don = 0
    for url in extract_urls(text):
        total += 1
        try:
            host = urlsplit(url).hostname
        except ValueError:
            host = None
        if not host:
            continue
        if domain_matches(host, lists.educational):
            edu += 1
        elif domain_matches(host, lists.donation):
            don += 1
    return total, edu, don
