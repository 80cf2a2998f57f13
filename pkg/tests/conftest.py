import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from propdet.corpus import Article, CharSpan, Fragment, Token, tokenize
from propdet.features import ArguingLexicon, SentimentLexicon


@pytest.fixture
def article_dir(tmp_path):
    def _build(texts: dict[str, str]) -> Path:
        directory = tmp_path / "articles"
        directory.mkdir(exist_ok=True)
        for art_id, text in texts.items():
            (directory / f"article{art_id}.txt").write_text(text, encoding="utf-8")
        return directory

    return _build


@pytest.fixture
def fragment_of():
    def _build(text: str, article_id: str = "1", base: int = 0, index: int = 0) -> Fragment:
        return Fragment(article_id, tuple(tokenize(text, base)), index)

    return _build


@pytest.fixture
def tiny_swn():
    return SentimentLexicon({
        "kill": (0.0, 0.75),
        "good": (0.625, 0.0),
        "run": (0.1, 0.2),
        "nice day": (0.5, 0.0),
    })


@pytest.fixture
def tiny_arglex():
    return ArguingLexicon({
        "necessity": [("you", "must"), ("have", "to")],
        "doubt": [("is", "*", "really"), ("no", "way")],
    })
