import random

import numpy as np
import pytest

from propdet.corpus import CharSpan, TECHNIQUE_NAMES
from propdet.errors import FormatError
from propdet.scorer import score_si, score_tc


def charset_oracle(pred, gold):
    """Mark characters as sets and accumulate pairwise normalized overlaps."""
    prec_sum = 0.0
    rec_sum = 0.0
    n_pred = sum(len(v) for v in pred.values())
    n_gold = sum(len(v) for v in gold.values())
    for article, gold_spans in gold.items():
        for s in pred.get(article, []):
            s_chars = set(range(s.begin, s.end))
            for t in gold_spans:
                t_chars = set(range(t.begin, t.end))
                inter = len(s_chars & t_chars)
                if inter:
                    prec_sum += inter / len(s_chars)
                    rec_sum += inter / len(t_chars)
    precision = prec_sum / n_pred if n_pred else 0.0
    recall = rec_sum / n_gold if n_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def random_corpus(rng, max_articles=5, max_spans=6, limit=60):
    corpus = {}
    for a in range(rng.randint(1, max_articles)):
        spans = []
        for _ in range(rng.randint(0, max_spans)):
            b = rng.randint(0, limit - 2)
            e = rng.randint(b + 1, limit)
            spans.append(CharSpan(b, e))
        corpus[str(a)] = spans
    return corpus


class TestScoreSi:
    def test_identical_is_perfect(self):
        gold = {"1": [CharSpan(0, 10)]}
        s = score_si(gold, gold)
        assert (s.precision, s.recall, s.f1) == (1.0, 1.0, 1.0)

    def test_half_overlap_hand_case(self):
        gold = {"1": [CharSpan(0, 10)]}
        pred = {"1": [CharSpan(5, 15)]}
        s = score_si(pred, gold)
        assert s.precision == 0.5
        assert s.recall == 0.5
        assert s.f1 == 0.5

    def test_no_predictions_all_zero(self):
        s = score_si({}, {"1": [CharSpan(0, 10)]})
        assert (s.precision, s.recall, s.f1) == (0.0, 0.0, 0.0)

    def test_no_gold_no_credit(self):
        s = score_si({"1": [CharSpan(0, 10)]}, {"1": []})
        assert (s.precision, s.recall, s.f1) == (0.0, 0.0, 0.0)

    def test_unknown_article_rejected(self):
        with pytest.raises(FormatError, match="not in gold"):
            score_si({"9": [CharSpan(0, 5)]}, {"1": []})

    def test_matches_charset_oracle(self):
        rng = random.Random(21)
        for _ in range(300):
            gold = random_corpus(rng)
            pred = {}
            for art in gold:
                if rng.random() < 0.85:
                    pred[art] = random_corpus(rng, max_articles=1)["0"]
            s = score_si(pred, gold)
            p, r, f1 = charset_oracle(pred, gold)
            assert abs(s.precision - p) < 1e-12
            assert abs(s.recall - r) < 1e-12
            assert abs(s.f1 - f1) < 1e-12

    def test_swap_symmetry(self):
        rng = random.Random(22)
        for _ in range(100):
            gold = random_corpus(rng)
            pred = {art: random_corpus(rng).get("0", []) for art in gold}
            forward_score = score_si(pred, gold)
            articles = set(gold) | set(pred)
            gold_full = {a: gold.get(a, []) for a in articles}
            pred_full = {a: pred.get(a, []) for a in articles}
            backward_score = score_si(gold_full, pred_full)
            assert abs(forward_score.precision - backward_score.recall) < 1e-12
            assert abs(forward_score.recall - backward_score.precision) < 1e-12

    def test_zero_overlap_span_lowers_precision_only(self):
        gold = {"1": [CharSpan(0, 10)]}
        pred = {"1": [CharSpan(0, 10)]}
        base = score_si(pred, gold)
        pred2 = {"1": [CharSpan(0, 10), CharSpan(40, 50)]}
        worse = score_si(pred2, gold)
        assert worse.precision < base.precision
        assert worse.recall == base.recall


class TestScoreTc:
    def test_all_correct(self):
        labels = list(TECHNIQUE_NAMES[:4])
        s = score_tc(labels, labels)
        assert s.micro_f1 == 1.0
        assert np.trace(s.confusion) == 4

    def test_three_of_four(self):
        gold = ["Doubt", "Doubt", "Slogans", "Repetition"]
        pred = ["Doubt", "Doubt", "Slogans", "Doubt"]
        s = score_tc(pred, gold)
        assert s.micro_f1 == 0.75

    def test_micro_equals_accuracy(self):
        rng = random.Random(31)
        for _ in range(50):
            n = rng.randint(1, 40)
            gold = [rng.choice(TECHNIQUE_NAMES) for _ in range(n)]
            pred = [rng.choice(TECHNIQUE_NAMES) for _ in range(n)]
            s = score_tc(pred, gold)
            accuracy = sum(p == g for p, g in zip(pred, gold)) / n
            assert abs(s.micro_f1 - accuracy) < 1e-12

    def test_unpredicted_class_scores_zero(self):
        gold = ["Whataboutism,Straw_Men,Red_Herring", "Doubt"]
        pred = ["Doubt", "Doubt"]
        s = score_tc(pred, gold)
        assert s.per_class["Whataboutism,Straw_Men,Red_Herring"] == 0.0

    def test_confusion_rows_are_gold(self):
        gold = ["Doubt", "Doubt", "Slogans"]
        pred = ["Slogans", "Doubt", "Slogans"]
        s = score_tc(pred, gold)
        d = TECHNIQUE_NAMES.index("Doubt")
        sl = TECHNIQUE_NAMES.index("Slogans")
        assert s.confusion[d, sl] == 1
        assert s.confusion[d, d] == 1
        assert s.confusion[sl, sl] == 1
        assert s.confusion.sum() == 3
        # row sums equal gold class counts
        assert s.confusion[d].sum() == 2
        assert s.confusion[sl].sum() == 1

    def test_length_mismatch(self):
        with pytest.raises(FormatError):
            score_tc(["Doubt"], ["Doubt", "Slogans"])

    def test_unknown_label(self):
        with pytest.raises(FormatError, match="unknown"):
            score_tc(["Nonsense"], ["Doubt"])

    def test_per_class_f1_formula(self):
        gold = ["Doubt", "Doubt", "Doubt", "Slogans"]
        pred = ["Doubt", "Doubt", "Slogans", "Slogans"]
        s = score_tc(pred, gold)
        # Doubt: tp=2 fp=0 fn=1 -> 2*2/(2*2+0+1)
        assert abs(s.per_class["Doubt"] - 4 / 5) < 1e-12
        # Slogans: tp=1 fp=1 fn=0 -> 2/(2+1+0)
        assert abs(s.per_class["Slogans"] - 2 / 3) < 1e-12
