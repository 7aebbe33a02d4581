"""Synthetic corpus bundle."""

from __future__ import annotations

import numpy as np
import pytest

from prosocial.corpus import (
    build_conversations,
    filter_conversations,
    read_comment_dump,
    read_post_dump,
)
from prosocial.forecast.features import load_embedding_table
from prosocial.rank_eval import SAMPLING_STRATA, load_pair_judgments
from prosocial.scorers.ngram import classify_text, load_ngram_model
from prosocial.synth import (
    BOT_AUTHORS,
    SynthParams,
    generate_corpus,
    read_truth,
    tiny_info_model,
    tiny_mentoring_model,
    write_corpus,
)


def _assemble(corpus, tmp_path, sub_dir="bundle"):
    paths = write_corpus(corpus, str(tmp_path / sub_dir))
    with open(paths["bots"], encoding="utf-8") as fh:
        bots = frozenset(line.strip() for line in fh if line.strip())
    comments = list(read_comment_dump(paths["comments"], bot_list=bots))
    posts = read_post_dump(paths["posts"])
    return paths, build_conversations(comments, posts)


class TestGenerate:
    def test_deterministic(self):
        params = SynthParams(conversations=8, seed=11)
        a = generate_corpus(params)
        b = generate_corpus(params)
        assert a.posts == b.posts
        assert a.comments == b.comments
        assert a.truth == b.truth
        assert a.pairs == b.pairs

    def test_counts(self):
        corpus = generate_corpus(SynthParams(conversations=10, seed=0))
        assert len(corpus.truth) == 10
        # two conversations share each post
        assert len(corpus.posts) == 5
        assert len({p["id"] for p in corpus.posts}) == 5
        assert all(c["link_id"].startswith("t3_") for c in corpus.comments)

    def test_clean_corpus_survives_ingest(self, tmp_path):
        corpus = generate_corpus(SynthParams(conversations=10, seed=1))
        _, (convs, report) = _assemble(corpus, tmp_path)
        assert report.conversations == 10
        assert report.orphan_replies == 0
        assert report.skipped_missing_post == 0
        kept, freport = filter_conversations(convs)
        assert len(kept) == 10
        assert freport.kept == 10
        assert set(corpus.truth) == {c.id for c in kept}

    def test_contamination_is_filtered_back_out(self, tmp_path):
        corpus = generate_corpus(SynthParams(conversations=6, seed=2,
                                             contaminate=True))
        _, (convs, report) = _assemble(corpus, tmp_path)
        assert report.orphan_replies == 1
        assert report.skipped_missing_post == 1
        kept, freport = filter_conversations(convs)
        assert freport.bot == 1
        assert freport.deleted_removed == 1
        assert freport.too_long == 1
        assert {c.id for c in kept} == set(corpus.truth) | {"j3t"}

    def test_planted_factor_drives_reply_volume(self, tmp_path):
        corpus = generate_corpus(SynthParams(conversations=40, seed=3))
        _, (convs, _) = _assemble(corpus, tmp_path)
        u = np.array([corpus.truth[c.id] for c in convs])
        sizes = np.array([len(c.walk_replies()) for c in convs], dtype=float)
        assert np.corrcoef(u, sizes)[0, 1] > 0.5

    def test_perfect_annotators_match_truth(self):
        corpus = generate_corpus(SynthParams(conversations=12, seed=4,
                                             annotator_accuracy=1.0,
                                             double_annotation_rate=0.0))
        assert len(corpus.pairs) == 6
        for pair in corpus.pairs:
            expected = ("A" if corpus.truth[pair.tlc_a] >=
                        corpus.truth[pair.tlc_b] else "B")
            assert pair.annotator_choice == expected
            assert pair.sampling_stratum in SAMPLING_STRATA

    def test_gender_table_covers_target_authors_only(self):
        corpus = generate_corpus(SynthParams(conversations=20, seed=5))
        assert set(corpus.genders.values()) <= {"m", "f"}
        assert all(a.startswith("u") and a.endswith("a")
                   for a in corpus.genders)


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    corpus = generate_corpus(SynthParams(conversations=8, seed=6))
    out = str(tmp_path_factory.mktemp("bundle"))
    return corpus, write_corpus(corpus, out)


class TestBundleFiles:
    def test_all_files_exist(self, bundle):
        import os
        _, paths = bundle
        assert set(paths) == {
            "posts", "comments", "truth", "pairs", "categories",
            "embeddings", "genders", "bots", "info_model",
            "mentoring_model"}
        for path in paths.values():
            assert os.path.exists(path)

    def test_truth_round_trip_is_exact(self, bundle):
        corpus, paths = bundle
        assert read_truth(paths["truth"]) == corpus.truth

    def test_pairs_reload(self, bundle):
        corpus, paths = bundle
        assert load_pair_judgments(paths["pairs"]) == corpus.pairs

    def test_embeddings_reload(self, bundle):
        corpus, paths = bundle
        table = load_embedding_table(paths["embeddings"])
        assert set(table) == set(corpus.embeddings)
        np.testing.assert_array_equal(table["askthings"],
                                      corpus.embeddings["askthings"])

    def test_bots_file(self, bundle):
        _, paths = bundle
        with open(paths["bots"], encoding="utf-8") as fh:
            assert tuple(fh.read().split()) == BOT_AUTHORS

    def test_models_reload_and_classify(self, bundle):
        _, paths = bundle
        info = load_ngram_model(paths["info_model"])
        mentoring = load_ngram_model(paths["mentoring_model"])
        assert info.kind == "info"
        assert mentoring.kind == "mentoring"
        assert classify_text(info, "a fact for you")[1]
        assert not classify_text(info, "no signal")[1]
        assert classify_text(mentoring, "your mentor speaks")[1]


class TestTinyModels:
    def test_stand_ins_are_sharp(self):
        info = tiny_info_model()
        prob_hit, flag_hit = classify_text(info, "fact")
        prob_miss, flag_miss = classify_text(info, "window")
        assert flag_hit and not flag_miss
        assert prob_hit > 0.9 and prob_miss < 0.1
        assert tiny_mentoring_model().kind == "mentoring"
