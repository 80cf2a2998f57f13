"""Lexicon- and surface-derived features.

Token level (span tagger): sentiment scores, rhetorical salience, POS
one-hots. Fragment level (technique classifier): rhetorical/entity/question
flags plus optional repetition, length, bag-of-words and emotion features.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Article, CharSpan, Fragment, TechniqueInstance, Token, tokenize
from .errors import FormatError

POS_TAGS = (
    "NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "NUM",
    "CONJ", "PRT", "PUNCT", "PROPN", "AUX", "INTJ", "X",
)
POS_INDEX = {tag: i for i, tag in enumerate(POS_TAGS)}

AMERICA_WORDS = ("america", "american", "americans", "usa", "u.s.")
REDUCTIO_WORDS = ("hitler", "nazi", "nazis", "fascist")


@dataclass
class SentimentLexicon:
    """Positive/negative scores per term, averaged over senses."""

    entries: dict[str, tuple[float, float]]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class ArguingLexicon:
    """Phrase patterns per rhetorical strategy; `*` matches one token."""

    strategies: dict[str, list[tuple[str, ...]]]

    def all_patterns(self) -> list[tuple[str, ...]]:
        return [p for pats in self.strategies.values() for p in pats]


def load_sentiwordnet(path) -> SentimentLexicon:
    """Parse the standard 6-column SentiWordNet TSV.

    Every term in the SynsetTerms column (sense suffix stripped,
    underscores to spaces) contributes its (PosScore, NegScore) pair;
    terms seen several times get the arithmetic mean of their pairs.
    """
    sums: dict[str, list[float]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 5:
                raise FormatError(f"{path}:{lineno}: expected 6 columns, got {len(parts)}")
            try:
                pos, neg = float(parts[2]), float(parts[3])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: malformed sentiment score") from None
            for term in parts[4].split():
                name = term.rsplit("#", 1)[0].replace("_", " ").lower()
                if not name:
                    continue
                acc = sums.setdefault(name, [0.0, 0.0, 0.0])
                acc[0] += pos
                acc[1] += neg
                acc[2] += 1.0
    entries = {name: (p / n, m / n) for name, (p, m, n) in sums.items()}
    return SentimentLexicon(entries)


def _lemma_candidates(word: str) -> list[str]:
    cands = []
    for suffix in ("ing", "ed", "s", "es"):
        if word.endswith(suffix) and len(word) > len(suffix) + 1:
            stem = word[: -len(suffix)]
            cands.append(stem)
            if suffix in ("ing", "ed") and len(stem) >= 2 and stem[-1] == stem[-2]:
                cands.append(stem[:-1])
    return cands


def sentiment(token: Token | str, lex: SentimentLexicon) -> tuple[float, float]:
    """Sentiment pair for a token: surface lookup, lemma fallback, else (0, 0)."""
    text = token.text if isinstance(token, Token) else token
    word = text.lower()
    hit = lex.entries.get(word)
    if hit is not None:
        return hit
    for cand in _lemma_candidates(word):
        hit = lex.entries.get(cand)
        if hit is not None:
            return hit
    return (0.0, 0.0)


def load_arguing_lexicon(directory) -> ArguingLexicon:
    """Load `<strategy>.patterns` files, one lowercase pattern per line."""
    directory = Path(directory)
    strategies: dict[str, list[tuple[str, ...]]] = {}
    for path in sorted(directory.glob("*.patterns")):
        patterns = []
        for line in path.read_text(encoding="utf-8").splitlines():
            line = line.strip().lower()
            if not line or line.startswith("#"):
                continue
            patterns.append(tuple(line.split()))
        if patterns:
            strategies[path.stem] = patterns
    return ArguingLexicon(strategies)


def salient_positions(words: list[str], patterns: list[tuple[str, ...]]) -> list[int]:
    """0/1 flag per word; 1 at every position covered by some pattern match."""
    flags = [0] * len(words)
    lowered = [w.lower() for w in words]
    for pat in patterns:
        m = len(pat)
        if m == 0 or m > len(lowered):
            continue
        for i in range(len(lowered) - m + 1):
            if all(p == "*" or p == lowered[i + j] for j, p in enumerate(pat)):
                for j in range(i, i + m):
                    flags[j] = 1
    return flags


def mark_salient(fragment: Fragment, lex: ArguingLexicon) -> list[int]:
    return salient_positions([t.text for t in fragment.tokens], lex.all_patterns())


_PRON = frozenset(
    "i you he she it we they me him her us them mine yours hers ours theirs "
    "myself yourself himself herself itself ourselves themselves who whom whose "
    "my your his its our their".split()
)
_DET = frozenset(
    "the a an this that these those each every either neither some any no all "
    "both few many much several such what which".split()
)
_ADP = frozenset(
    "in on at by with from to of for about against between into through during "
    "before after above below under over off within without".split()
)
_CONJ = frozenset(
    "and or but nor so yet because although though while if unless since "
    "whereas whether".split()
)
_AUX = frozenset(
    "is am are was were be been being have has had do does did will would "
    "shall should can could may might must".split()
)
_PRT = frozenset(("not", "n't", "'s"))
_ADV = frozenset(
    "very too also just now then here there when where why how never always "
    "often sometimes soon still already again more most less least quite "
    "rather only".split()
)
_INTJ = frozenset("oh wow hey ah ouch alas yes".split())

_CLOSED_CLASS = (
    (_AUX, "AUX"), (_PRON, "PRON"), (_DET, "DET"), (_ADP, "ADP"),
    (_CONJ, "CONJ"), (_PRT, "PRT"), (_ADV, "ADV"), (_INTJ, "INTJ"),
)


def fallback_pos_tag(token: Token, is_initial: bool) -> str:
    """Naive rule tagger over the fixed 15-tag set."""
    text = token.text
    if not any(ch.isalnum() for ch in text):
        return "PUNCT"
    if text.isdigit() or all(ch.isdigit() or ch in ".,-" for ch in text):
        return "NUM"
    if text[0].isupper() and not is_initial:
        return "PROPN"
    word = text.lower()
    for words, tag in _CLOSED_CLASS:
        if word in words:
            return tag
    return "NOUN"


def read_annotation_rows(path) -> list[tuple[str, int, int, str]]:
    """Read annotation TSV rows `article_id\\tbegin\\tend\\ttag`."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise FormatError(f"{path}:{lineno}: expected 4 columns, got {len(parts)}")
            article_id, begin_s, end_s, tag = parts
            try:
                begin, end = int(begin_s), int(end_s)
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-integer offset") from None
            rows.append((article_id, begin, end, tag))
    return rows


def load_pos_annotations(path) -> dict[tuple[str, int], str]:
    """Annotation rows keyed by (article_id, token begin); unknown tags fail."""
    table = {}
    for article_id, begin, _end, tag in read_annotation_rows(path):
        if tag not in POS_INDEX:
            raise FormatError(f"{path}: unknown POS tag {tag!r} for article {article_id}")
        table[(article_id, begin)] = tag
    return table


def load_ne_annotations(path) -> dict[str, list[tuple[int, int, str]]]:
    """Entity spans per article, as (begin, end, entity type)."""
    table: dict[str, list[tuple[int, int, str]]] = {}
    for article_id, begin, end, tag in read_annotation_rows(path):
        table.setdefault(article_id, []).append((begin, end, tag))
    return table


def pos_feature(
    fragment: Fragment, annotations: dict[tuple[str, int], str] | None = None
) -> np.ndarray:
    """One-hot POS tags per token, (n_tokens, 15).

    With an annotation table every token must be covered; without one the
    naive fallback tagger is used.
    """
    out = np.zeros((len(fragment.tokens), len(POS_TAGS)))
    for i, tok in enumerate(fragment.tokens):
        if annotations is not None:
            tag = annotations.get((fragment.article_id, tok.begin))
            if tag is None:
                raise FormatError(
                    f"no POS annotation for article {fragment.article_id} offset {tok.begin}"
                )
        else:
            tag = fallback_pos_tag(tok, is_initial=(i == 0))
        out[i, POS_INDEX[tag]] = 1.0
    return out


@dataclass
class SIFeatureConfig:
    """Which token-level feature blocks are joined to the embeddings."""

    use_swn: bool = True
    use_al: bool = True
    use_pos: bool = True

    @property
    def dim(self) -> int:
        return 2 * self.use_swn + self.use_al + len(POS_TAGS) * self.use_pos


def si_token_features(
    fragment: Fragment,
    config: SIFeatureConfig,
    swn: SentimentLexicon | None = None,
    arglex: ArguingLexicon | None = None,
    pos_annotations: dict[tuple[str, int], str] | None = None,
) -> np.ndarray:
    """Concatenated per-token feature matrix, (n_tokens, config.dim)."""
    blocks = []
    n = len(fragment.tokens)
    if config.use_swn:
        if swn is None:
            raise FormatError("sentiment features enabled but no lexicon given")
        blocks.append(np.array([sentiment(t, swn) for t in fragment.tokens]))
    if config.use_al:
        if arglex is None:
            raise FormatError("salience feature enabled but no arguing lexicon given")
        blocks.append(np.array(mark_salient(fragment, arglex), dtype=float).reshape(n, 1))
    if config.use_pos:
        blocks.append(pos_feature(fragment, pos_annotations))
    if not blocks:
        return np.zeros((n, 0))
    return np.concatenate(blocks, axis=1)


def _normalize_with_map(text: str) -> tuple[str, list[int]]:
    """Lowercase and collapse whitespace runs, keeping a map to raw offsets."""
    chars: list[str] = []
    raw: list[int] = []
    for i, ch in enumerate(text):
        if ch.isspace():
            if chars and chars[-1] == " ":
                continue
            chars.append(" ")
            raw.append(i)
        else:
            for low in ch.lower():
                chars.append(low)
                raw.append(i)
    return "".join(chars), raw


def normalize_span_text(span_text: str) -> str:
    """Span normalization: lowercase, collapse whitespace, strip edge punctuation."""
    norm, _ = _normalize_with_map(span_text)
    start, stop = 0, len(norm)
    while start < stop and not norm[start].isalnum():
        start += 1
    while stop > start and not norm[stop - 1].isalnum():
        stop -= 1
    return norm[start:stop]


def repetition_stats(article: Article, span: CharSpan) -> tuple[int, bool]:
    """(repeat count beyond this instance, whether it is the first occurrence).

    Occurrences are counted non-overlapping, left to right, over the
    normalized article text.
    """
    span_text = article.text[span.begin : span.end]
    norm_span = normalize_span_text(span_text)
    if not norm_span:
        return 0, True
    norm_article, raw_map = _normalize_with_map(article.text)
    occurrences = []
    k = norm_article.find(norm_span)
    while k >= 0:
        occurrences.append(k)
        k = norm_article.find(norm_span, k + len(norm_span))
    count = max(len(occurrences) - 1, 0)
    if count == 0:
        return 0, True
    raw_first = next(
        (i for i in range(span.begin, span.end) if article.text[i].isalnum()), span.begin
    )
    return count, raw_map[occurrences[0]] == raw_first


@dataclass
class TCFeatureConfig:
    """Fragment-level feature toggles; must match between train and predict."""

    use_al: bool = True
    use_ne2: bool = True
    use_q: bool = True
    use_rep_count: bool = False
    use_seq_len: bool = False
    use_america: bool = False
    use_reductio: bool = False
    use_emotion: bool = False

    @property
    def dim(self) -> int:
        return (
            self.use_al
            + 2 * self.use_ne2
            + self.use_q
            + self.use_rep_count
            + self.use_seq_len
            + self.use_america
            + self.use_reductio
            + 5 * self.use_emotion
        )

    def names(self) -> list[str]:
        out = []
        if self.use_al:
            out.append("al")
        if self.use_ne2:
            out += ["norp", "gpe"]
        if self.use_q:
            out.append("q")
        if self.use_rep_count:
            out.append("rep_count")
        if self.use_seq_len:
            out.append("seq_len")
        if self.use_america:
            out.append("america")
        if self.use_reductio:
            out.append("reductio")
        if self.use_emotion:
            out += ["anger", "disgust", "fear", "joy", "sadness"]
        return out


def _word_list_hit(tokens: list[Token], phrases: tuple[str, ...]) -> bool:
    words = [t.text.lower() for t in tokens]
    for phrase in phrases:
        pat = [t.text for t in tokenize(phrase)]
        m = len(pat)
        if m == 0 or m > len(words):
            continue
        for i in range(len(words) - m + 1):
            if words[i : i + m] == pat:
                return True
    return False


_warned_no_ne = False


def fragment_features(
    instance: TechniqueInstance,
    article: Article,
    config: TCFeatureConfig,
    arglex: ArguingLexicon | None = None,
    ne_annotations: dict[str, list[tuple[int, int, str]]] | None = None,
    emotion: dict[int, tuple[float, float, float, float, float]] | None = None,
) -> np.ndarray:
    """Feature vector for one technique instance, per the enabled toggles."""
    global _warned_no_ne
    span = instance.span
    if span.end > len(article.text):
        raise FormatError(
            f"span ({span.begin}, {span.end}) outside article {article.id} "
            f"of length {len(article.text)}"
        )
    span_text = article.text[span.begin : span.end]
    tokens = tokenize(span_text, span.begin)
    values: list[float] = []
    if config.use_al:
        if arglex is None:
            raise FormatError("arguing-lexicon feature enabled but no lexicon given")
        flags = salient_positions([t.text for t in tokens], arglex.all_patterns())
        values.append(float(any(flags)))
    if config.use_ne2:
        if ne_annotations is None:
            if not _warned_no_ne:
                warnings.warn("no NE annotations given; NORP/GPE features forced to 0")
                _warned_no_ne = True
            values += [0.0, 0.0]
        else:
            entities = ne_annotations.get(instance.article_id, [])
            norp = any(t == "NORP" and b < span.end and span.begin < e for b, e, t in entities)
            gpe = any(t == "GPE" and b < span.end and span.begin < e for b, e, t in entities)
            values += [float(norp), float(gpe)]
    if config.use_q:
        values.append(float("?" in span_text))
    if config.use_rep_count:
        count, _ = repetition_stats(article, span)
        values.append(float(count))
    if config.use_seq_len:
        values.append(float(len(tokens)))
    if config.use_america:
        values.append(float(_word_list_hit(tokens, AMERICA_WORDS)))
    if config.use_reductio:
        values.append(float(_word_list_hit(tokens, REDUCTIO_WORDS)))
    if config.use_emotion:
        if emotion is None:
            raise FormatError("emotion feature enabled but no emotion file given")
        values += list(emotion.get(instance.instance_id, (0.0,) * 5))
    return np.array(values, dtype=float)


def load_emotion_file(path) -> dict[int, tuple[float, float, float, float, float]]:
    """Read `instance_id\\tanger\\tdisgust\\tfear\\tjoy\\tsadness` rows."""
    table = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 6:
                raise FormatError(f"{path}:{lineno}: expected 6 columns, got {len(parts)}")
            try:
                key = int(parts[0])
                scores = tuple(float(v) for v in parts[1:])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: malformed emotion row") from None
            table[key] = scores
    return table
