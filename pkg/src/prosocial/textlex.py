"""Tokenization, sentiment, readability, and lexicon utilities.

Everything downstream of raw comment text funnels through this module so
that every metric sees the same token stream. Tokens are maximal runs of
letters, digits, and apostrophes with outer apostrophes trimmed; URLs are
pulled out before tokenization and reported separately.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from importlib import resources

_URL_RE = re.compile(r"https?://[^\s<>()\"']+", re.IGNORECASE)
_URL_TRAIL = ".,!?;:'’\"]}"
# letters/digits plus apostrophe, underscore excluded on purpose
_TOKEN_RE = re.compile(r"(?:[^\W_]|')+")
_SENTENCE_END_RE = re.compile(r"[.!?]+(?=\s|$)")


def extract_urls(text: str) -> list[str]:
    """Return http(s) URLs in order of appearance, trailing punctuation trimmed."""
    urls = []
    for match in _URL_RE.finditer(text):
        url = match.group(0).rstrip(_URL_TRAIL)
        if url:
            urls.append(url)
    return urls


def _remove_urls(text: str) -> str:
    return _URL_RE.sub(" ", text)


@dataclass(frozen=True)
class TokenizedText:
    """Token stream for one piece of text.

    tokens: lowercased tokens.
    raw_tokens: original-case tokens, parallel to tokens.
    spans: (start, end) character offsets into the URL-stripped text.
    sentences: (first_token, last_token_exclusive) index ranges.
    urls: URLs that were removed before tokenization.
    text: the URL-stripped text the spans refer to.
    """

    tokens: tuple[str, ...]
    raw_tokens: tuple[str, ...]
    spans: tuple[tuple[int, int], ...]
    sentences: tuple[tuple[int, int], ...]
    urls: tuple[str, ...]
    text: str


def tokenize(text: str) -> TokenizedText:
    urls = tuple(extract_urls(text))
    stripped = _remove_urls(text)
    raw_tokens: list[str] = []
    spans: list[tuple[int, int]] = []
    for match in _TOKEN_RE.finditer(stripped):
        tok = match.group(0).strip("'")
        if not tok:
            continue
        offset = match.group(0).find(tok)
        start = match.start() + offset
        raw_tokens.append(tok)
        spans.append((start, start + len(tok)))

    # sentence boundaries: terminator runs followed by whitespace or EOL
    breaks = [m.end() for m in _SENTENCE_END_RE.finditer(stripped)]
    breaks.append(len(stripped) + 1)
    sentences: list[tuple[int, int]] = []
    tok_i = 0
    for brk in breaks:
        first = tok_i
        while tok_i < len(spans) and spans[tok_i][0] < brk:
            tok_i += 1
        if tok_i > first:
            sentences.append((first, tok_i))
        if tok_i >= len(spans):
            break
    return TokenizedText(
        tokens=tuple(t.lower() for t in raw_tokens),
        raw_tokens=tuple(raw_tokens),
        spans=tuple(spans),
        sentences=tuple(sentences),
        urls=urls,
        text=stripped,
    )


def _data_text(name: str) -> str:
    return resources.files("prosocial.data").joinpath(name).read_text("utf-8")


def _read_tsv(source: str) -> dict[str, float]:
    out: dict[str, float] = {}
    for line in source.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        term, _, value = line.partition("\t")
        out[term.strip().lower()] = float(value)
    return out


def _read_lines(source: str) -> list[str]:
    out = []
    for line in source.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line.lower())
    return out


def load_tsv_file(path: str) -> dict[str, float]:
    with open(path, "r", encoding="utf-8") as fh:
        return _read_tsv(fh.read())


def load_line_file(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return _read_lines(fh.read())


@dataclass(frozen=True)
class SentimentLexicon:
    valence: dict[str, float]
    boosters: dict[str, float]
    negators: frozenset[str]


_DEFAULT_SENTIMENT: SentimentLexicon | None = None


def load_sentiment_lexicon(
    valence_path: str | None = None,
    booster_path: str | None = None,
    negator_path: str | None = None,
) -> SentimentLexicon:
    global _DEFAULT_SENTIMENT
    if valence_path is None and booster_path is None and negator_path is None:
        if _DEFAULT_SENTIMENT is None:
            _DEFAULT_SENTIMENT = SentimentLexicon(
                valence=_read_tsv(_data_text("sentiment.tsv")),
                boosters=_read_tsv(_data_text("boosters.tsv")),
                negators=frozenset(_read_lines(_data_text("negators.txt"))),
            )
        return _DEFAULT_SENTIMENT
    valence = load_tsv_file(valence_path) if valence_path else _read_tsv(_data_text("sentiment.tsv"))
    boosters = load_tsv_file(booster_path) if booster_path else _read_tsv(_data_text("boosters.tsv"))
    negators = load_line_file(negator_path) if negator_path else _read_lines(_data_text("negators.txt"))
    return SentimentLexicon(valence=valence, boosters=boosters, negators=frozenset(negators))


_CAPS_BOOST = 0.733
_NEGATION_FACTOR = -0.74
_EXCLAIM_BOOST = 0.292
_MAX_EXCLAIM = 3
_NORM_ALPHA = 15.0
_NEGATION_WINDOW = 3


def _is_caps_emphasis(raw: str) -> bool:
    return raw.isupper() and len(raw) > 1 and any(c.isalpha() for c in raw)


def sentiment_compound(text: str, lexicon: SentimentLexicon | None = None) -> float:
    """Compound sentiment in [-1, 1].

    Matched valences are summed with three adjustments applied in order:
    ALL-CAPS emphasis (only when the text mixes cased and uppercase
    tokens), booster words in the three preceding tokens, and negation
    flips within the same three-token window. Exclamation marks then add
    0.292 each (at most three) toward the current sign, and the total is
    normalized by s / sqrt(s^2 + 15).
    """
    if lexicon is None:
        lexicon = load_sentiment_lexicon()
    tt = tokenize(text)
    tokens, raw_tokens = tt.tokens, tt.raw_tokens
    alpha_flags = [_is_caps_emphasis(r) for r in raw_tokens if any(c.isalpha() for c in r)]
    caps_differential = any(alpha_flags) and not all(alpha_flags)

    total = 0.0
    for i, tok in enumerate(tokens):
        if tok not in lexicon.valence:
            continue
        v = lexicon.valence[tok]
        if caps_differential and _is_caps_emphasis(raw_tokens[i]):
            v += _CAPS_BOOST if v > 0 else -_CAPS_BOOST
        lo = max(0, i - _NEGATION_WINDOW)
        for j in range(lo, i):
            boost = lexicon.boosters.get(tokens[j])
            if boost is not None:
                v += boost if v > 0 else -boost
        for j in range(lo, i):
            if tokens[j] in lexicon.negators:
                v *= _NEGATION_FACTOR
                break
        total += v

    if total != 0.0:
        bangs = min(text.count("!"), _MAX_EXCLAIM)
        if bangs:
            amp = _EXCLAIM_BOOST * bangs
            total += amp if total > 0 else -amp
    return total / math.sqrt(total * total + _NORM_ALPHA)


_DEFAULT_SUBJECTIVITY: dict[str, float] | None = None


def load_subjectivity_lexicon(path: str | None = None) -> dict[str, float]:
    global _DEFAULT_SUBJECTIVITY
    if path is not None:
        return load_tsv_file(path)
    if _DEFAULT_SUBJECTIVITY is None:
        _DEFAULT_SUBJECTIVITY = _read_tsv(_data_text("subjectivity.tsv"))
    return _DEFAULT_SUBJECTIVITY


def subjectivity_score(text: str, lexicon: dict[str, float] | None = None) -> float:
    """Mean subjectivity of matched tokens, 0.0 when nothing matches."""
    if lexicon is None:
        lexicon = load_subjectivity_lexicon()
    hits = [lexicon[t] for t in tokenize(text).tokens if t in lexicon]
    if not hits:
        return 0.0
    return sum(hits) / len(hits)


_VOWELS = frozenset("aeiouy")


def count_syllables(word: str) -> int:
    """Vowel-group syllable count with a silent-e rule, minimum 1.

    A trailing 'e' that forms its own vowel group is dropped unless it is
    preceded by 'l' that itself follows a consonant ("people", "little").
    """
    w = "".join(c for c in word.lower() if c.isalpha())
    if not w:
        return 1
    groups = 0
    prev_vowel = False
    for c in w:
        is_vowel = c in _VOWELS
        if is_vowel and not prev_vowel:
            groups += 1
        prev_vowel = is_vowel
    if groups > 1 and w.endswith("e") and w[-2] not in _VOWELS:
        keep = len(w) >= 3 and w[-2] == "l" and w[-3] not in _VOWELS and w[-3] != "l"
        if not keep:
            groups -= 1
    return max(1, groups)


def flesch_kincaid_grade(text: str) -> float:
    """0.39 * words/sentences + 11.8 * syllables/words - 15.59; empty text -> 0.0."""
    tt = tokenize(text)
    words = len(tt.tokens)
    if words == 0:
        return 0.0
    sentences = max(1, len(tt.sentences))
    syllables = sum(count_syllables(t) for t in tt.tokens)
    return 0.39 * (words / sentences) + 11.8 * (syllables / words) - 15.59


_DEFAULT_DICTIONARY: frozenset[str] | None = None


def load_dictionary(path: str | None = None) -> frozenset[str]:
    global _DEFAULT_DICTIONARY
    if path is not None:
        return frozenset(load_line_file(path))
    if _DEFAULT_DICTIONARY is None:
        _DEFAULT_DICTIONARY = frozenset(_read_lines(_data_text("dictionary.txt")))
    return _DEFAULT_DICTIONARY


def count_misspellings(text: str, dictionary: frozenset[str] | None = None) -> int:
    """Occurrences of alphabetic tokens (length >= 2) not in the dictionary.

    Tokens containing digits are skipped; URLs never reach the token
    stream. Repeated misspellings count once per occurrence.
    """
    if dictionary is None:
        dictionary = load_dictionary()
    count = 0
    for tok in tokenize(text).tokens:
        if len(tok) < 2:
            continue
        if not all(c.isalpha() or c == "'" for c in tok):
            continue
        if tok not in dictionary:
            count += 1
    return count


_DEFAULT_STOPWORDS: frozenset[str] | None = None


def load_stopwords(path: str | None = None) -> frozenset[str]:
    global _DEFAULT_STOPWORDS
    if path is not None:
        return frozenset(load_line_file(path))
    if _DEFAULT_STOPWORDS is None:
        _DEFAULT_STOPWORDS = frozenset(_read_lines(_data_text("stopwords.txt")))
    return _DEFAULT_STOPWORDS


_CODE_FENCE_RE = re.compile(r"```.*?```", re.DOTALL)
_INLINE_CODE_RE = re.compile(r"`([^`]*)`")
_MD_LINK_RE = re.compile(r"\[([^\]]*)\]\(([^)]*)\)")
_QUOTE_RE = re.compile(r"^\s*>+\s?", re.MULTILINE)
_EMPHASIS_CHARS_RE = re.compile(r"[*_~^#]+")


def strip_markup(text: str) -> str:
    """Remove markdown structure, keeping visible text."""
    out = _CODE_FENCE_RE.sub(" ", text)
    out = _INLINE_CODE_RE.sub(r"\1", out)
    out = _MD_LINK_RE.sub(r"\1", out)
    out = _QUOTE_RE.sub("", out)
    out = _EMPHASIS_CHARS_RE.sub(" ", out)
    return out


def word_count(text: str) -> int:
    """Whitespace-delimited token count after markup stripping."""
    return len(strip_markup(text).split())


def match_weighted_terms(text: str, terms: dict[str, float]) -> list[float]:
    """Non-overlapping lexicon matches over the token stream.

    Terms may span several words; longer phrases are tried before
    shorter ones, and a consumed token cannot participate in a second
    match. Returns the weights of all matches in text order.
    """
    tokens = tokenize(text).tokens
    if not tokens:
        return []
    by_length: dict[int, dict[tuple[str, ...], float]] = {}
    for term, weight in terms.items():
        parts = tuple(term.split())
        by_length.setdefault(len(parts), {})[parts] = weight
    lengths = sorted(by_length, reverse=True)
    consumed = [False] * len(tokens)
    hits: list[tuple[int, float]] = []
    for n in lengths:
        table = by_length[n]
        i = 0
        while i + n <= len(tokens):
            if any(consumed[i:i + n]):
                i += 1
                continue
            window = tuple(tokens[i:i + n])
            if window in table:
                hits.append((i, table[window]))
                for j in range(i, i + n):
                    consumed[j] = True
                i += n
            else:
                i += 1
    hits.sort(key=lambda h: h[0])
    return [w for _, w in hits]
