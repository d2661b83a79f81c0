import io
import json
import random

from oracles import decontam_ngrams_oracle
from webcurate.corpus import Document
from webcurate.decontam import (
    ContaminationReport,
    build_reference,
    build_reference_from_jsonl,
    normalize_text,
    render_report_table,
    report,
    screen,
    word_ngrams,
)

import corpusgen


def doc(text: str, doc_id: str = "d") -> Document:
    return Document(id=doc_id, url="", text=text)


class TestNormalization:
    def test_lowercase_punct_whitespace(self):
        assert normalize_text("Hello,  World! It's   fine.") == "hello world it s fine"

    def test_ngrams_match_oracle(self):
        rng = random.Random(3)
        for _ in range(100):
            words = [rng.choice(["Alpha", "beta,", "GAMMA!", "delta"]) for _ in range(rng.randint(0, 15))]
            text = " ".join(words)
            for n in (3, 8):
                assert set(word_ngrams(text, n)) == decontam_ngrams_oracle(text, n)


class TestBuildReference:
    def test_ngram_count_for_ten_word_instance(self):
        text = " ".join(f"word{i}" for i in range(10))
        refset = build_reference([{"benchmark": "mmlu", "instance_id": "q1", "text": text}], 8)
        assert len(refset.index) == 3  # 10 - 8 + 1

    def test_short_instance_whole_text_fallback(self):
        refset = build_reference(
            [{"benchmark": "piqa", "instance_id": "q1", "text": "Only four small words"}], 8
        )
        assert set(refset.index) == {"only four small words"}

    def test_duplicate_instances_map_to_both_ids(self):
        text = " ".join(f"word{i}" for i in range(8))
        refset = build_reference([
            {"benchmark": "mmlu", "instance_id": "q1", "text": text},
            {"benchmark": "mmlu", "instance_id": "q2", "text": text},
        ], 8)
        [(gram, owners)] = refset.index.items()
        assert owners == {("mmlu", "q1"), ("mmlu", "q2")}

    def test_empty_reference_warns_and_flags_nothing(self):
        refset = build_reference([], 8)
        assert not screen(doc("anything at all"), refset).contaminated

    def test_jsonl_loader(self):
        blob = json.dumps({"benchmark": "arc", "instance_id": "1", "text": "a b c"}) + "\n"
        refset = build_reference_from_jsonl(io.StringIO(blob), 8)
        assert refset.benchmarks == {"arc"}
        assert refset.instances == 1


class TestScreen:
    QUESTION = "what is the First law of motion according to newton in physics"

    def make_refset(self):
        return build_reference([
            {"benchmark": "mmlu", "instance_id": "q1", "text": self.QUESTION},
            {"benchmark": "mmlu", "instance_id": "q2",
             "text": "the boiling point of water at sea level is one hundred degrees"},
            {"benchmark": "piqa", "instance_id": "p1",
             "text": "to open a stuck jar lid run it under hot water first"},
        ], 8)

    def test_verbatim_inclusion_flagged(self):
        refset = self.make_refset()
        text = "Some web page. " + self.QUESTION + " And a trailing explanation."
        outcome = screen(doc(text), refset)
        assert outcome.contaminated
        assert outcome.matches == {"mmlu": {"q1"}}

    def test_short_shared_phrase_is_clean(self):
        refset = self.make_refset()
        outcome = screen(doc("the first law of motion is interesting"), refset)
        assert not outcome.contaminated

    def test_normalization_catches_near_exact(self):
        refset = self.make_refset()
        text = "WHAT IS THE FIRST LAW, OF MOTION: according to Newton in physics?!"
        assert screen(doc(text), refset).contaminated

    def test_document_hitting_two_instances(self):
        refset = self.make_refset()
        text = (
            self.QUESTION + " some filler words here " +
            "the boiling point of water at sea level is one hundred degrees"
        )
        outcome = screen(doc(text), refset)
        assert outcome.matches == {"mmlu": {"q1", "q2"}}

    def test_min_matches_threshold(self):
        refset = self.make_refset()
        text = "Intro. " + self.QUESTION + " End."
        assert screen(doc(text), refset, min_matches=1).contaminated
        # The embedded question yields several matching 8-grams.
        assert screen(doc(text), refset, min_matches=3).contaminated
        assert not screen(doc(text), refset, min_matches=50).contaminated

    def test_determinism(self):
        refset = self.make_refset()
        text = self.QUESTION
        a = screen(doc(text), refset)
        b = screen(doc(text), refset)
        assert a == b


class TestReport:
    def test_empty(self):
        rep = report([], benchmarks=["mmlu"])
        assert rep.rows == {"mmlu": (0, 0)}
        assert rep.total_documents == 0 and rep.total_instances == 0

    def test_doc_hitting_mmlu_twice_and_piqa_once(self):
        from webcurate.decontam import ScreenResult

        outcome = ScreenResult(
            doc_id="d1", contaminated=True,
            matches={"mmlu": {"q1", "q2"}, "piqa": {"p1"}},
        )
        rep = report([outcome])
        assert rep.rows["mmlu"] == (1, 2)
        assert rep.rows["piqa"] == (1, 1)
        # The document counts once in the total even though it appears in
        # two benchmark rows; instances sum per column.
        assert rep.total_documents == 1
        assert rep.total_instances == 3

    def test_planted_contamination_exact(self):
        rng = random.Random(9)
        vocab = corpusgen.synthetic_vocab(2000, seed=9)
        bench_items = []
        for b, benchmark in enumerate(["mmlu", "arc", "piqa"]):
            for q in range(5):
                text = corpusgen.sentence(rng, vocab, 14)
                bench_items.append({"benchmark": benchmark, "instance_id": f"{benchmark}-{q}", "text": text})
        refset = build_reference(bench_items, 8)

        docs = []
        planted = {}
        for i in range(300):
            text = corpusgen.document_text(rng, vocab, min_words=40, max_words=120)
            if i % 60 == 0:
                item = bench_items[(i // 60) % len(bench_items)]
                text += "\n" + item["text"]
                planted[f"doc{i}"] = item["benchmark"]
            docs.append(doc(text, f"doc{i}"))

        outcomes = [screen(d, refset) for d in docs]
        flagged = {d.id for d, o in zip(docs, outcomes) if o.contaminated}
        assert flagged == set(planted)
        rep = report(outcomes, benchmarks=refset.benchmarks)
        assert rep.total_documents == len(planted)

    def test_table_layout(self):
        rep = ContaminationReport(rows={"mmlu": (2, 5), "piqa": (1, 1)},
                                  total_documents=3, total_instances=6)
        table = render_report_table(rep)
        lines = table.splitlines()
        assert lines[0].split("|")[0].strip() == "Benchmark"
        assert "Unique Contaminated Documents" in lines[0]
        assert "Contaminated Evaluation Instances" in lines[0]
        assert lines[-1].startswith("Total")
        assert "3" in lines[-1] and "6" in lines[-1]

    def test_rows_sorted_by_documents_desc(self):
        from webcurate.decontam import ScreenResult

        outcomes = [
            ScreenResult("a", True, {"small": {"x"}}),
            ScreenResult("b", True, {"big": {"y"}}),
            ScreenResult("c", True, {"big": {"z"}}),
        ]
        rep = report(outcomes)
        assert list(rep.rows) == ["big", "small"]
