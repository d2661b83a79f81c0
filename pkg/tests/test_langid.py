import random

import pytest
from hypothesis import given, strategies as st

from oracles import weighted_line_oracle
from webcurate.corpus import Document
from webcurate.langid import (
    ENGLISH,
    MULTILINGUAL,
    CallableScorer,
    HeuristicEnglishScorer,
    LanguageScorer,
    LidConfig,
    route,
    score_weighted_lines,
    score_whole_document,
)


class TableScorer(LanguageScorer):
    """Deterministic stub keyed by exact text."""

    exposes_english_class = True

    def __init__(self, table, default=0.0):
        self.table = table
        self.default = default

    def predict(self, text):
        return ("en", self.english_probability(text))

    def english_probability(self, text):
        return self.table.get(text, self.default)


def doc(text):
    return Document(id="d", url="", text=text)


class TestWholeDocument:
    def test_pass_through(self):
        scorer = CallableScorer(lambda text: ("en", 0.9), exposes_english_class=False)
        assert score_whole_document(doc("anything"), scorer) == 0.9

    def test_empty_text_scores_zero(self):
        assert score_whole_document(doc(""), TableScorer({}, default=0.9)) == 0.0

    def test_newlines_removed_before_scoring(self):
        seen = []

        class Spy(LanguageScorer):
            def predict(self, text):
                seen.append(text)
                return ("en", 1.0)

        score_whole_document(doc("a\nb"), Spy())
        assert seen == ["a b"]

    def test_top1_non_english_scores_zero(self):
        scorer = CallableScorer(lambda text: ("fr", 0.99))
        assert score_whole_document(doc("bonjour tout le monde"), scorer) == 0.0

    def test_scorer_failure_scores_zero(self):
        class Broken(LanguageScorer):
            def predict(self, text):
                raise RuntimeError("boom")

        assert score_whole_document(doc("text"), Broken()) == 0.0


class TestWeightedLines:
    def test_worked_example_majority_english(self):
        l1, l2 = "e" * 800, "f" * 200
        scorer = TableScorer({l1: 0.95, l2: 0.10})
        score = score_weighted_lines(doc(l1 + "\n" + l2), scorer)
        assert abs(score - 0.78) < 1e-9

    def test_worked_example_majority_french(self):
        l1, l2 = "e" * 400, "f" * 600
        scorer = TableScorer({l1: 0.80, l2: 0.10})
        score = score_weighted_lines(doc(l1 + "\n" + l2), scorer)
        assert abs(score - 0.38) < 1e-9

    def test_single_line_weights_cancel(self):
        scorer = TableScorer({"hello": 0.42})
        assert abs(score_weighted_lines(doc("hello"), scorer) - 0.42) < 1e-12

    def test_all_empty_scores_zero(self):
        assert score_weighted_lines(doc("\n\n"), TableScorer({}, default=1.0)) == 0.0

    def test_byte_length_weighting_utf8(self):
        # 2-byte characters weigh double their character count.
        l1, l2 = "éé", "aaaa"  # 4 bytes each
        scorer = TableScorer({l1: 1.0, l2: 0.0})
        assert score_weighted_lines(doc(l1 + "\n" + l2), scorer) == 0.5

    def test_failing_line_counts_as_zero(self):
        class HalfBroken(LanguageScorer):
            def predict(self, text):
                if text.startswith("x"):
                    raise RuntimeError("boom")
                return ("en", 1.0)

        # Both lines weigh 4 bytes; the failing one contributes p = 0.
        score = score_weighted_lines(doc("good\nxbad"), HalfBroken())
        assert abs(score - 0.5) < 1e-12

    @given(st.lists(st.tuples(st.integers(1, 50), st.floats(0, 1)), min_size=1, max_size=10))
    def test_matches_oracle_and_is_convex(self, spec):
        lines = ["x" * b for b, _ in spec]
        # Make line text unique per index so the table keys don't collide.
        lines = [f"{i:02d}" + l for i, l in enumerate(lines)]
        table = {line: p for line, (_, p) in zip(lines, spec)}
        d = doc("\n".join(lines))
        score = score_weighted_lines(d, TableScorer(table))
        expected = weighted_line_oracle([(len(l.encode()), table[l]) for l in lines])
        assert abs(score - expected) < 1e-12
        assert min(table.values()) - 1e-12 <= score <= max(table.values()) + 1e-12

    def test_permutation_and_scale_invariance(self):
        rng = random.Random(1)
        lines = [f"line{i}" + "y" * rng.randint(1, 30) for i in range(8)]
        table = {l: rng.random() for l in lines}
        base = score_weighted_lines(doc("\n".join(lines)), TableScorer(table))
        shuffled = lines[:]
        rng.shuffle(shuffled)
        assert abs(score_weighted_lines(doc("\n".join(shuffled)), TableScorer(table)) - base) < 1e-12
        # Scaling every byte length by 3 leaves the weighted mean unchanged.
        tripled = {l * 3: p for l, p in table.items()}
        score3 = score_weighted_lines(doc("\n".join(l * 3 for l in lines)), TableScorer(tripled))
        assert abs(score3 - base) < 1e-12


class TestRoute:
    def test_boundary_inclusive(self):
        scorer = TableScorer({}, default=0.65)
        decision = route(doc("text"), LidConfig(threshold=0.65), scorer)
        assert decision.partition == ENGLISH

    def test_just_below_threshold_routes_multilingual(self):
        scorer = TableScorer({}, default=0.649)
        decision = route(doc("text"), LidConfig(threshold=0.65), scorer)
        assert decision.partition == MULTILINGUAL

    def test_weighted_strategy_can_reject_what_whole_doc_retains(self):
        l1, l2 = "e" * 400, "f" * 600
        scorer = TableScorer({l1: 0.80, l2: 0.10, (l1 + " " + l2): 0.70})
        whole = route(doc(l1 + "\n" + l2), LidConfig(strategy="whole_doc"), scorer)
        weighted = route(doc(l1 + "\n" + l2), LidConfig(strategy="weighted_line"), scorer)
        assert whole.partition == ENGLISH
        assert weighted.partition == MULTILINGUAL

    def test_monotone_in_threshold(self):
        rng = random.Random(7)
        for _ in range(500):
            score = rng.random()
            tau = min(max(rng.random(), 1e-6), 1 - 1e-6)
            scorer = TableScorer({}, default=score)
            d = doc("words")
            if route(d, LidConfig(threshold=tau), scorer).partition == ENGLISH:
                lower = max(tau / 2, 1e-9)
                assert route(d, LidConfig(threshold=lower), scorer).partition == ENGLISH

    def test_config_validation(self):
        with pytest.raises(ValueError):
            LidConfig(strategy="bogus")
        with pytest.raises(ValueError):
            LidConfig(threshold=0.0)


class TestHeuristicScorer:
    def test_english_prose_scores_high(self):
        text = ("The committee met on Tuesday and agreed that the new policy "
                "would be reviewed with the staff before the end of the month.")
        assert HeuristicEnglishScorer().english_probability(text) >= 0.65

    def test_cyrillic_scores_low(self):
        text = "привет мир " * 20
        assert HeuristicEnglishScorer().english_probability(text) < 0.3

    def test_deterministic(self):
        s = HeuristicEnglishScorer()
        text = "Some mixed content 123 (with punctuation)."
        assert s.english_probability(text) == s.english_probability(text)
        assert 0.0 <= s.english_probability(text) <= 1.0
