"""Laughter, gratitude, compliments, first person, and URL domains."""

from __future__ import annotations

import numpy as np
import pytest

from prosocial.lexical import (
    DomainLists,
    GratitudeLexicon,
    classify_urls,
    count_gratitude,
    count_laughter,
    detect_compliments,
    domain_matches,
    has_first_person,
    load_domain_lists,
)

from oracles import count_laughter_reference


class TestLaughter:
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("haha", 1),
            ("hahaha", 1),
            ("hahah", 1),
            ("ahahah", 1),
            ("HAHAHA", 1),
            ("ha", 0),
            ("hah", 0),
            ("lol", 1),
            ("lolol", 1),
            ("LOLLLL", 1),
            ("hehe", 1),
            ("hehehehe", 1),
            ("heh", 0),
            ("lollipop", 0),
            ("aloha", 0),
            ("lol lol", 2),
            ("hahaha lol hehe", 3),
            ("so funny lol!", 1),
            ("", 0),
        ],
    )
    def test_known_counts(self, text, expected):
        assert count_laughter(text) == expected

    def test_agrees_with_reference_engine_on_fuzz(self):
        rng = np.random.default_rng(29)
        alphabet = list("ahel o!.x")
        for _ in range(2000):
            length = int(rng.integers(0, 30))
            text = "".join(rng.choice(alphabet, size=length))
            assert count_laughter(text) == count_laughter_reference(text), text


class TestGratitude:
    LEX = GratitudeLexicon(
        words=frozenset({"thanks", "grateful"}),
        phrases=(("thank", "you"), ("really", "thank", "you")),
    )

    def test_words_and_phrases_both_count(self):
        assert count_gratitude("thanks, and thank you", self.LEX) == 2

    def test_phrases_consume_their_tokens(self):
        lex = GratitudeLexicon(
            words=frozenset({"thank"}), phrases=(("thank", "you"),)
        )
        assert count_gratitude("thank you", lex) == 1
        assert count_gratitude("thank them", lex) == 1

    def test_longest_phrase_matched_first(self):
        assert count_gratitude("really thank you", self.LEX) == 1

    def test_repeated_phrases(self):
        assert count_gratitude("thank you thank you", self.LEX) == 2

    def test_default_lexicon_spot_checks(self):
        assert count_gratitude("thank you so much") == 1
        assert count_gratitude("thanks!") == 1
        assert count_gratitude("grateful for everything") == 1
        assert count_gratitude("no such sentiment") == 0


class TestCompliments:
    def test_you_are_form(self):
        assert detect_compliments("you are wonderful and amazing friend") == 1

    def test_your_noun_form(self):
        assert detect_compliments("your heart is lovely and kind") == 1

    def test_guard_words_block(self):
        assert detect_compliments("if you are wonderful and amazing friend") == 0
        assert detect_compliments("when your heart is lovely and kind") == 0

    def test_guard_must_be_adjacent(self):
        assert detect_compliments("if, you are wonderful and amazing friend") == 1

    def test_punctuation_breaks_candidates(self):
        assert detect_compliments("you. are wonderful and amazing friend") == 0
        assert detect_compliments("your heart. is lovely and kind") == 0

    def test_trailing_candidate_has_no_window(self):
        assert detect_compliments("i admire what you are") == 0

    def test_neutral_window_fails_threshold(self):
        assert detect_compliments("you are somewhat ordinary i suppose") == 0

    def test_multiple_compliments_accumulate(self):
        text = (
            "you are wonderful and amazing friend. "
            "your heart is lovely and kind."
        )
        assert detect_compliments(text) == 2


class TestFirstPerson:
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("i think so", True),
            ("I'M HERE", True),
            ("that helped me a lot", True),
            ("my view exactly", True),
            ("mine too", True),
            ("did it myself", True),
            ("im here", False),
            ("we went there", False),
            ("us and them", False),
            ("him and her", False),
            ("don't stop", False),
            ("", False),
        ],
    )
    def test_cases(self, text, expected):
        assert has_first_person(text) is expected


class TestDomains:
    LISTS = DomainLists(
        educational=frozenset({"edu.example", "wikipedia.org"}),
        donation=frozenset({"give.example"}),
    )

    def test_exact_and_subdomain_match(self):
        assert domain_matches("wikipedia.org", self.LISTS.educational)
        assert domain_matches("en.wikipedia.org", self.LISTS.educational)
        assert domain_matches("WIKIPEDIA.ORG", self.LISTS.educational)
        assert domain_matches("wikipedia.org.", self.LISTS.educational)

    def test_lookalike_suffix_rejected(self):
        assert not domain_matches("notwikipedia.org", self.LISTS.educational)
        assert not domain_matches("wikipedia.org.evil.net", self.LISTS.educational)

    def test_classify_counts(self):
        text = (
            "see https://en.wikipedia.org/wiki/X and https://give.example/c "
            "plus https://plain.net/page"
        )
        assert classify_urls(text, self.LISTS) == (3, 1, 1)

    def test_trailing_punctuation_ignored(self):
        assert classify_urls("read https://edu.example/a.", self.LISTS) == (1, 1, 0)

    def test_unparsable_host_counts_total_only(self):
        assert classify_urls("bad https://[notvalid/x", self.LISTS) == (1, 0, 0)

    def test_educational_beats_donation(self):
        both = DomainLists(
            educational=frozenset({"dual.example"}),
            donation=frozenset({"dual.example"}),
        )
        assert classify_urls("https://dual.example/page", both) == (1, 1, 0)

    def test_every_occurrence_counts(self):
        text = "https://edu.example/a https://edu.example/a"
        assert classify_urls(text, self.LISTS) == (2, 2, 0)

    def test_default_lists_load(self):
        lists = load_domain_lists()
        assert domain_matches("en.wikipedia.org", lists.educational)
        assert domain_matches("gofundme.com", lists.donation)
