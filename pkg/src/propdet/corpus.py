"""Article loading, offset-preserving tokenization, fragment splitting and
span/label conversion.

All offsets are Unicode scalar-value positions into the owning article's
text. Spans are half-open character intervals [begin, end).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import FormatError

MAX_FRAGMENT_LEN = 35

# Technique inventory in fixed order: (file label, display name).
TECHNIQUES = (
    ("Loaded_Language", "Loaded language"),
    ("Name_Calling,Labeling", "Name calling, labeling"),
    ("Repetition", "Repetition"),
    ("Flag-Waving", "Flag-waving"),
    ("Exaggeration,Minimisation", "Exaggeration, minimisation"),
    ("Doubt", "Doubt"),
    ("Appeal_to_fear-prejudice", "Appeal to fear/prejudice"),
    ("Slogans", "Slogans"),
    ("Whataboutism,Straw_Men,Red_Herring", "Whataboutism, straw men, red herring"),
    ("Black-and-White_Fallacy", "Black-and-white fallacy"),
    ("Causal_Oversimplification", "Causal oversimplification"),
    ("Thought-terminating_Cliches", "Thought-terminating cliches"),
    ("Appeal_to_Authority", "Appeal to authority"),
    ("Bandwagon,Reductio_ad_hitlerum", "Bandwagon, reductio ad hitlerum"),
)
TECHNIQUE_NAMES = tuple(name for name, _ in TECHNIQUES)
TECHNIQUE_INDEX = {name: i for i, name in enumerate(TECHNIQUE_NAMES)}
TECHNIQUE_DISPLAY = dict(TECHNIQUES)
DISPLAY_TO_TECHNIQUE = {display: name for name, display in TECHNIQUES}
REPETITION = "Repetition"


@dataclass(frozen=True)
class CharSpan:
    """Half-open character interval inside one article."""

    begin: int
    end: int

    def __post_init__(self):
        if self.begin < 0 or self.begin >= self.end:
            raise ValueError(f"invalid span ({self.begin}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.begin

    def overlaps(self, other: "CharSpan") -> bool:
        return self.begin < other.end and other.begin < self.end


@dataclass
class Article:
    id: str
    text: str


@dataclass(frozen=True)
class Token:
    text: str
    begin: int
    end: int


@dataclass
class Fragment:
    """A sentence or sub-sentence unit: the input of the span tagger."""

    article_id: str
    tokens: tuple[Token, ...]
    index: int

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class SILabelSequence:
    """Per-token I/O labels aligned with one fragment."""

    fragment: Fragment
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.fragment.tokens):
            raise ValueError("label count does not match token count")


@dataclass
class TechniqueInstance:
    article_id: str
    span: CharSpan
    technique: str | None
    instance_id: int


_ARTICLE_FILE = re.compile(r"^article(\d+)\.txt$")


def load_articles(directory) -> list[Article]:
    """Load every `article<id>.txt` in `directory`, ordered by numeric id."""
    directory = Path(directory)
    found = []
    for path in directory.iterdir():
        m = _ARTICLE_FILE.match(path.name)
        if not m:
            continue
        raw = path.read_bytes()
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{path}: not UTF-8 at byte {exc.start}") from exc
        found.append(Article(id=m.group(1), text=text))
    found.sort(key=lambda a: (int(a.id), a.id))
    return found


def load_si_spans(path) -> dict[str, list[CharSpan]]:
    """Read a span TSV (`article_id\\tbegin\\tend`) grouped per article.

    Spans are sorted by begin within each article; duplicate rows are kept.
    """
    spans: dict[str, list[CharSpan]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 columns, got {len(parts)}")
            article_id, begin_s, end_s = parts
            try:
                begin, end = int(begin_s), int(end_s)
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-integer offset") from None
            if begin >= end or begin < 0:
                raise FormatError(f"{path}:{lineno}: begin {begin} not before end {end}")
            spans.setdefault(article_id, []).append(CharSpan(begin, end))
    for lst in spans.values():
        lst.sort(key=lambda s: (s.begin, s.end))
    return spans


def load_tc_instances(path, labeled: bool = True) -> list[TechniqueInstance]:
    """Read a technique TSV (`article_id\\ttechnique\\tbegin\\tend`) in file order.

    With labeled=False the technique column is treated as a placeholder and
    stored as None. Identical (article, span) rows stay distinct instances.
    """
    instances = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise FormatError(f"{path}:{lineno}: expected 4 columns, got {len(parts)}")
            article_id, technique, begin_s, end_s = parts
            try:
                begin, end = int(begin_s), int(end_s)
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-integer offset") from None
            if begin >= end or begin < 0:
                raise FormatError(f"{path}:{lineno}: begin {begin} not before end {end}")
            if labeled:
                if technique not in TECHNIQUE_INDEX:
                    raise FormatError(
                        f"{path}:{lineno}: unknown technique {technique!r}; "
                        f"valid names: {', '.join(TECHNIQUE_NAMES)}"
                    )
            else:
                technique = None
            instances.append(
                TechniqueInstance(article_id, CharSpan(begin, end), technique, len(instances))
            )
    return instances


_WORD_JOINERS = frozenset("'’-")


def tokenize(text: str, base_offset: int = 0) -> list[Token]:
    """Split text into offset-carrying tokens.

    Maximal alphanumeric runs (joined across internal apostrophes/hyphens)
    form one token each; every other non-whitespace character is its own
    single-character token.
    """
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isalnum():
            j = i + 1
            while j < n and text[j].isalnum():
                j += 1
            while j + 1 < n and text[j] in _WORD_JOINERS and text[j + 1].isalnum():
                j += 2
                while j < n and text[j].isalnum():
                    j += 1
            tokens.append(Token(text[i:j], base_offset + i, base_offset + j))
            i = j
        else:
            tokens.append(Token(ch, base_offset + i, base_offset + i + 1))
            i += 1
    return tokens


_TERMINATORS = frozenset(".!?")
_QUOTE_TOKENS = frozenset('"\'“”‘’«»')
_SEMICOLON_TOKENS = frozenset(";")
_COMMA_TOKENS = frozenset(",")


def _sentence_bounds(text: str) -> list[tuple[int, int]]:
    bounds = []
    start = 0
    n = len(text)
    for i, ch in enumerate(text):
        if ch == "\n":
            if i > start:
                bounds.append((start, i))
            start = i + 1
        elif ch in _TERMINATORS and (i + 1 == n or text[i + 1].isspace()):
            bounds.append((start, i + 1))
            start = i + 1
    if start < n:
        bounds.append((start, n))
    return bounds


def _split_token_run(tokens: list[Token], max_len: int) -> list[list[Token]]:
    """Cut an over-long token run into pieces of at most max_len tokens.

    The cut point is the latest quotation mark, else semicolon, else comma
    among the first max_len tokens; the punctuation token ends the left
    piece. Without any such token the piece is truncated at max_len, and
    the remainder re-enters the same procedure.
    """
    pieces = []
    rest = tokens
    while len(rest) > max_len:
        window = rest[:max_len]
        cut = max_len - 1
        for group in (_QUOTE_TOKENS, _SEMICOLON_TOKENS, _COMMA_TOKENS):
            hits = [k for k, tok in enumerate(window) if tok.text in group]
            if hits:
                cut = hits[-1]
                break
        pieces.append(rest[: cut + 1])
        rest = rest[cut + 1 :]
    if rest:
        pieces.append(rest)
    return pieces


def split_fragments(article: Article, max_len: int = MAX_FRAGMENT_LEN) -> list[Fragment]:
    """Split an article into fragments of at most max_len tokens.

    Sentences end at `.`/`!`/`?` followed by whitespace (a newline always
    ends a sentence); over-long sentences are cut at quotation marks,
    semicolons and commas, in that precedence.
    """
    fragments = []
    for begin, end in _sentence_bounds(article.text):
        sent_tokens = tokenize(article.text[begin:end], begin)
        if not sent_tokens:
            continue
        for piece in _split_token_run(sent_tokens, max_len):
            fragments.append(Fragment(article.id, tuple(piece), len(fragments)))
    return fragments


def project_labels(fragment: Fragment, gold: list[CharSpan]) -> SILabelSequence:
    """Label each token I iff its character range intersects any gold span."""
    labels = tuple(
        "I" if any(tok.begin < s.end and s.begin < tok.end for s in gold) else "O"
        for tok in fragment.tokens
    )
    return SILabelSequence(fragment, labels)


def labels_to_spans(seq: SILabelSequence) -> list[CharSpan]:
    """Convert maximal runs of I labels into character spans."""
    spans = []
    run_start = None
    tokens = seq.fragment.tokens
    for i, label in enumerate(seq.labels):
        if label == "I":
            if run_start is None:
                run_start = i
        else:
            if run_start is not None:
                spans.append(CharSpan(tokens[run_start].begin, tokens[i - 1].end))
                run_start = None
    if run_start is not None:
        spans.append(CharSpan(tokens[run_start].begin, tokens[-1].end))
    return spans


def write_si_spans(path, spans_by_article: dict[str, list[CharSpan]]) -> None:
    """Write spans in the SI TSV format, ordered by article id then begin."""
    with open(path, "w", encoding="utf-8") as fh:
        for article_id in sorted(spans_by_article, key=lambda a: (len(a), a)):
            for span in sorted(spans_by_article[article_id], key=lambda s: (s.begin, s.end)):
                fh.write(f"{article_id}\t{span.begin}\t{span.end}\n")


def write_tc_predictions(path, instances: list[TechniqueInstance], labels: list[str]) -> None:
    """Write per-instance technique predictions in input order."""
    if len(instances) != len(labels):
        raise ValueError("instances and labels differ in length")
    with open(path, "w", encoding="utf-8") as fh:
        for inst, label in zip(instances, labels):
            fh.write(f"{inst.article_id}\t{label}\t{inst.span.begin}\t{inst.span.end}\n")


def write_fragment_dump(path, fragments: list[Fragment]) -> None:
    """Dump fragments as `article_id  fragment_index  token_index  begin  end  text`.

    This is the fragment spec consumed by external embedding extractors.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for frag in fragments:
            for k, tok in enumerate(frag.tokens):
                fh.write(
                    f"{frag.article_id}\t{frag.index}\t{k}\t{tok.begin}\t{tok.end}\t{tok.text}\n"
                )
