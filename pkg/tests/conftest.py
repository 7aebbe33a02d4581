"""Shared fixtures: the hand-built corpus, golden panels, and scorers."""

from __future__ import annotations

import json
import socket
from pathlib import Path

import pytest

from prosocial.corpus import (
    build_conversations,
    filter_conversations,
    read_comment_dump,
    read_post_dump,
)
from prosocial.scorers.ngram import load_ngram_model
from prosocial.scorers.toxicity import ToxicityClient, ToxicityConfig
from prosocial.trajectory import PanelContext

HANDMADE = Path(__file__).parent / "fixtures" / "handmade"


@pytest.fixture(autouse=True)
def no_external_network(monkeypatch):
    """Fail loudly if any test tries to open an internet connection."""
    real_connect = socket.socket.connect

    def guarded(self, address):
        if self.family in (socket.AF_INET, socket.AF_INET6):
            raise RuntimeError(f"blocked network connection to {address!r}")
        return real_connect(self, address)

    monkeypatch.setattr(socket.socket, "connect", guarded)


@pytest.fixture(scope="session")
def handmade_dir() -> Path:
    return HANDMADE


@pytest.fixture(scope="session")
def golden() -> dict:
    with open(HANDMADE / "golden_panels.json", "r", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def handmade_conversations() -> dict:
    """The fixture corpus ingested through the package, keyed by TLC id."""
    posts = read_post_dump(str(HANDMADE / "posts.ndjson"))
    comments = read_comment_dump(str(HANDMADE / "comments.ndjson"))
    built, _ = build_conversations(comments, posts)
    kept, _ = filter_conversations(built)
    return {conv.tlc.id: conv for conv in kept}


@pytest.fixture(scope="session")
def panel_context() -> PanelContext:
    """Offline scorer stack with the fixture's tiny text classifiers."""
    return PanelContext.default(
        toxicity_client=ToxicityClient(ToxicityConfig(offline=True)),
        info_model=load_ngram_model(str(HANDMADE / "info.model")),
        mentoring_model=load_ngram_model(str(HANDMADE / "mentoring.model")),
    )
