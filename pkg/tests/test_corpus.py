"""Dump parsing, thread assembly, filtering, and dataset splits."""

from __future__ import annotations

import json

import pytest

from prosocial.corpus import (
    Comment,
    Conversation,
    Post,
    build_conversations,
    conversation_from_json,
    conversation_to_json,
    downsample_training,
    filter_conversations,
    parse_comment_record,
    parse_post_record,
    partition_dataset,
    read_conversations,
    write_conversations,
)
from prosocial.errors import ParseError, SchemaError


def _record(**overrides) -> str:
    base = {"id": "c1", "link_id": "t3_p1", "parent_id": None,
            "author": "alice", "body": "hello", "created_utc": 10,
            "score": 3, "subreddit": "aww"}
    base.update(overrides)
    return json.dumps(base)


class TestParseComment:
    def test_prefixes_are_stripped(self):
        c = parse_comment_record(_record(id="t1_abc", parent_id="t1_xyz"))
        assert c.id == "abc"
        assert c.parent_id == "xyz"
        assert c.link_id == "p1"

    def test_missing_parent_defaults_to_link(self):
        c = parse_comment_record(_record())
        assert c.parent_id == "p1"

    def test_author_defaults(self):
        record = json.loads(_record())
        del record["author"]
        assert parse_comment_record(json.dumps(record)).author == "[deleted]"
        assert parse_comment_record(_record(author=None)).author == "[deleted]"

    def test_moderation_flags_from_body(self):
        assert parse_comment_record(_record(body="[deleted]")).is_deleted
        assert parse_comment_record(_record(body="[removed]")).is_removed
        plain = parse_comment_record(_record())
        assert not plain.is_deleted and not plain.is_removed

    def test_bot_detection_ignores_case(self):
        c = parse_comment_record(_record(author="HelperBot"),
                                 bot_list=frozenset({"helperbot"}))
        assert c.is_bot

    @pytest.mark.parametrize("field", ["id", "link_id", "body"])
    def test_required_fields(self, field):
        record = json.loads(_record())
        del record[field]
        with pytest.raises(SchemaError):
            parse_comment_record(json.dumps(record))
        with pytest.raises(SchemaError, match="line 4"):
            parse_comment_record(json.dumps({**record, field: ""}),
                                 line_number=4)

    def test_bad_json_carries_line_number(self):
        with pytest.raises(ParseError, match="^line 7: invalid record"):
            parse_comment_record("{nope", line_number=7)

    def test_non_object_rejected(self):
        with pytest.raises(ParseError):
            parse_comment_record("[1, 2]")

    def test_numeric_defaults(self):
        record = json.loads(_record())
        del record["created_utc"], record["score"], record["subreddit"]
        c = parse_comment_record(json.dumps(record))
        assert (c.created_utc, c.score, c.subreddit) == (0, 0, "")


class TestParsePost:
    def test_round_values(self):
        p = parse_post_record(json.dumps({
            "id": "t3_p9", "title": "hi", "selftext": "body",
            "subreddit": "aww", "created_utc": 5, "author": "who"}))
        assert p.id == "p9"
        assert p.title == "hi"

    def test_id_required(self):
        with pytest.raises(SchemaError):
            parse_post_record(json.dumps({"title": "x"}))

    def test_defaults(self):
        p = parse_post_record(json.dumps({"id": "p1"}))
        assert (p.title, p.selftext, p.author) == ("", "", "[deleted]")


def _comment(cid, parent, link="p1", when=0, author="a", body="w"):
    return Comment(id=cid, parent_id=parent, link_id=link, author=author,
                   subreddit="s", created_utc=when, body=body, score=1)


POSTS = {"p1": Post(id="p1", title="t", selftext="", subreddit="s",
                    created_utc=0, author="op")}


class TestBuildConversations:
    def test_two_trees_one_post(self):
        comments = [
            _comment("t1", "p1", when=0),
            _comment("t2", "p1", when=5),
            _comment("r1", "t1", when=1),
            _comment("r2", "r1", when=2),
            _comment("r3", "t2", when=6),
        ]
        convs, report = build_conversations(comments, POSTS)
        assert report.conversations == 2
        assert report.orphan_replies == 0
        by_id = {c.id: c for c in convs}
        assert [r.id for r in by_id["t1"].walk_replies()] == ["r1", "r2"]
        assert [r.id for r in by_id["t2"].walk_replies()] == ["r3"]

    def test_orphans_attach_to_earliest_tree(self):
        comments = [
            _comment("t2", "p1", when=5),
            _comment("t1", "p1", when=0),
            _comment("lost", "ghost", when=9),
        ]
        convs, report = build_conversations(comments, POSTS)
        assert report.orphan_replies == 1
        counts = {c.id: c.orphan_count for c in convs}
        assert counts == {"t1": 1, "t2": 0}

    def test_missing_post_drops_trees(self):
        comments = [_comment("t1", "p2", link="p2")]
        convs, report = build_conversations(comments, POSTS)
        assert convs == []
        assert report.skipped_missing_post == 1

    def test_fixture_shape(self, handmade_conversations):
        assert len(handmade_conversations) == 25
        orphan_totals = {cid: conv.orphan_count
                         for cid, conv in handmade_conversations.items()
                         if conv.orphan_count}
        assert orphan_totals == {"c17": 1}


class TestFilters:
    def _conv(self, tlc, replies=()):
        return Conversation(POSTS["p1"], tlc, list(replies))

    def test_each_reason_counted_once(self):
        bot_tlc = Comment(id="b", parent_id="p1", link_id="p1",
                          author="modbot", subreddit="s", created_utc=0,
                          body="beep", score=1, is_bot=True)
        gone = Comment(id="g", parent_id="p1", link_id="p1",
                       author="[deleted]", subreddit="s", created_utc=0,
                       body="[deleted]", score=1, is_deleted=True)
        long_tlc = _comment("l", "p1", body="word " * 40)
        fine = _comment("f", "p1")
        kept, report = filter_conversations(
            [self._conv(bot_tlc), self._conv(gone),
             self._conv(long_tlc), self._conv(fine)],
            max_tlc_words=30)
        assert [c.id for c in kept] == ["f"]
        assert (report.bot, report.deleted_removed, report.too_long) == (1, 1, 1)
        assert report.kept == 1

    def test_bot_reply_taints_thread(self):
        tlc = _comment("t", "p1")
        bot = Comment(id="r", parent_id="t", link_id="p1", author="modbot",
                      subreddit="s", created_utc=1, body="beep", score=1,
                      is_bot=True)
        kept, report = filter_conversations([self._conv(tlc, [bot])])
        assert kept == []
        assert report.bot == 1

    def test_bot_wins_over_other_reasons(self):
        tlc = Comment(id="t", parent_id="p1", link_id="p1", author="modbot",
                      subreddit="s", created_utc=0, body="[removed]", score=1,
                      is_removed=True, is_bot=True)
        _, report = filter_conversations([self._conv(tlc)])
        assert (report.bot, report.deleted_removed) == (1, 0)


def _many(n):
    return [Conversation(POSTS["p1"], _comment(f"t{i:03d}", "p1", when=i), [])
            for i in range(n)]


class TestPartition:
    def test_exact_cover(self):
        convs = _many(40)
        part = partition_dataset(convs, seed=3)
        ids = set(part.train) | set(part.dev) | set(part.test)
        assert ids == {c.id for c in convs}
        assert (len(part.train), len(part.dev), len(part.test)) == (32, 4, 4)

    def test_largest_remainder_assignment(self):
        part = partition_dataset(_many(12))
        assert (len(part.train), len(part.dev), len(part.test)) == (10, 1, 1)
        tiny = partition_dataset(_many(5))
        assert (len(tiny.train), len(tiny.dev), len(tiny.test)) == (4, 1, 0)

    def test_seed_controls_shuffle(self):
        convs = _many(30)
        assert partition_dataset(convs, seed=1) == partition_dataset(convs, seed=1)
        assert partition_dataset(convs, seed=1) != partition_dataset(convs, seed=2)

    def test_argument_validation(self):
        with pytest.raises(ValueError):
            partition_dataset(_many(10), ratios=(8, 0, 1))
        with pytest.raises(ValueError):
            partition_dataset(_many(2))


class TestDownsample:
    def _subbed(self, sub, n, start=0):
        post = Post(id=f"{sub}post", title="t", selftext="", subreddit=sub,
                    created_utc=0, author="op")
        return [Conversation(post, Comment(
            id=f"{sub}{i}", parent_id=f"{sub}post", link_id=f"{sub}post",
            author="a", subreddit=sub, created_utc=start + i, body="w",
            score=1), []) for i in range(n)]

    def test_small_subreddits_dropped(self):
        train = self._subbed("big", 6) + self._subbed("tiny", 2)
        kept, report = downsample_training(train, min_per_subreddit=3,
                                           max_per_subreddit=10)
        assert {c.subreddit for c in kept} == {"big"}
        assert report == {"big": (6, 6), "tiny": (2, 0)}

    def test_large_subreddits_truncated_in_order(self):
        train = self._subbed("big", 9)
        kept, report = downsample_training(train, min_per_subreddit=1,
                                           max_per_subreddit=4, seed=11)
        assert report["big"] == (9, 4)
        ids = [c.id for c in kept]
        assert ids == sorted(ids, key=lambda s: int(s[3:]))

    def test_seeded(self):
        train = self._subbed("big", 20)
        first, _ = downsample_training(train, 1, 5, seed=2)
        second, _ = downsample_training(train, 1, 5, seed=2)
        assert [c.id for c in first] == [c.id for c in second]


class TestRoundTrip:
    def _conv(self):
        tlc = _comment("t1", "p1", when=0, body="tlc text")
        replies = [_comment("r1", "t1", when=2),
                   _comment("r2", "t1", when=1)]
        return Conversation(POSTS["p1"], tlc, replies, orphan_count=2)

    def test_json_round_trip_is_stable(self):
        line = conversation_to_json(self._conv())
        again = conversation_to_json(conversation_from_json(line))
        assert line == again

    def test_file_round_trip(self, tmp_path):
        path = str(tmp_path / "convs.jsonl")
        wrote = write_conversations(path, [self._conv()])
        assert wrote == 1
        back = read_conversations(path)
        assert len(back) == 1
        assert back[0].orphan_count == 2
        assert [r.id for r in back[0].walk_replies()] == ["r2", "r1"]

    def test_schema_version_checked(self):
        doc = json.loads(conversation_to_json(self._conv()))
        doc["schema_version"] = "bogus"
        with pytest.raises(SchemaError):
            conversation_from_json(json.dumps(doc))

    def test_bad_line_reports_number(self):
        with pytest.raises(ParseError, match="^line 3: "):
            conversation_from_json("{", line_number=3)
