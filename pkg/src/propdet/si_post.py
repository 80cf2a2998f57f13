"""Prediction post-processing: majority voting across runs, span merging."""

from __future__ import annotations

from .corpus import CharSpan, SILabelSequence
from .errors import AlignmentError


def majority_vote(runs: list[list[SILabelSequence]]) -> list[SILabelSequence]:
    """Consolidate k aligned runs token-wise.

    A token ends up I iff strictly more than half of the runs say I;
    an exact tie (even k) also goes to I.
    """
    if not runs:
        raise ValueError("need at least one run")
    k = len(runs)
    first = runs[0]
    for r, run in enumerate(runs[1:], 2):
        if len(run) != len(first):
            raise AlignmentError(f"run {r} has {len(run)} fragments, run 1 has {len(first)}")
        for seq, ref in zip(run, first):
            if (
                seq.fragment.article_id != ref.fragment.article_id
                or len(seq.labels) != len(ref.labels)
            ):
                raise AlignmentError(
                    f"run {r} misaligned at article {ref.fragment.article_id} "
                    f"fragment {ref.fragment.index}"
                )
    voted = []
    for i, ref in enumerate(first):
        labels = []
        for t in range(len(ref.labels)):
            count_i = sum(1 for run in runs if run[i].labels[t] == "I")
            labels.append("I" if 2 * count_i >= k else "O")
        voted.append(SILabelSequence(ref.fragment, tuple(labels)))
    return voted


def merge_spans(spans: list[CharSpan], min_gap: int = 25) -> list[CharSpan]:
    """Merge spans whose gap is under min_gap characters.

    Overlapping or adjacent spans always merge; the result is sorted with
    all pairwise gaps >= min_gap, and is a fixpoint of the operation.
    """
    if not spans:
        return []
    ordered = sorted(spans, key=lambda s: (s.begin, s.end))
    merged = [ordered[0]]
    for span in ordered[1:]:
        prev = merged[-1]
        gap = span.begin - prev.end
        if gap < min_gap or gap <= 0:
            if span.end > prev.end:
                merged[-1] = CharSpan(prev.begin, span.end)
        else:
            merged.append(span)
    return merged


def merge_article_spans(
    spans_by_article: dict[str, list[CharSpan]], min_gap: int = 25
) -> dict[str, list[CharSpan]]:
    return {art: merge_spans(spans, min_gap) for art, spans in spans_by_article.items()}
