import json

import pytest

import corpusgen
from webcurate.cli import main
from webcurate.qualitygate import LabeledExample, ScorerTrainConfig, train_ngram_scorer


@pytest.fixture(scope="module")
def corpus_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli_corpus") / "input.jsonl"
    corpusgen.write_corpus(str(path), n_docs=150, seed=21)
    return str(path)


@pytest.fixture(scope="module")
def models(tmp_path_factory):
    out = tmp_path_factory.mktemp("models")
    import random

    rng = random.Random(1)
    vocab = corpusgen.synthetic_vocab(500, seed=1)
    examples = []
    for i in range(60):
        good = corpusgen.sentence(rng, vocab, 20)
        bad = " ".join(["spam spam spam buy now"] * 4)
        examples.append(LabeledExample(f"p{i}", good, 1))
        examples.append(LabeledExample(f"n{i}", bad, 0))
    model = train_ngram_scorer(examples, ScorerTrainConfig(buckets=1 << 16))
    dclm = out / "dclm.bin"
    betr = out / "betr.bin"
    model.save(str(dclm))
    model.save(str(betr))
    return str(dclm), str(betr)


class TestRunCommand:
    def test_run_writes_outputs_and_figure(self, corpus_path, tmp_path):
        out = tmp_path / "out"
        code = main([
            "run", "--preset", "flux", "--input", corpus_path,
            "--output-dir", str(out), "--workers", "1",
        ])
        assert code == 0
        for name in ("kept.jsonl", "rejected.jsonl", "multilingual.jsonl",
                     "stats.json", "stats.txt", "stats.png"):
            assert (out / name).exists(), name
        assert (out / "stats.png").stat().st_size > 0

    def test_filter_skips_dedup(self, corpus_path, tmp_path):
        out = tmp_path / "out"
        code = main(["filter", "--preset", "flux", "--input", corpus_path,
                     "--output-dir", str(out), "--no-figures"])
        assert code == 0
        stats = json.loads((out / "stats.json").read_text())
        assert all(s["stage"] != "dedup" for s in stats["stages"])

    def test_config_error_exit_code(self, tmp_path):
        assert main(["run", "--input", "/does/not/exist.jsonl",
                     "--output-dir", str(tmp_path), "--no-figures"]) == 1

    def test_bad_yaml_key_exit_code(self, tmp_path, corpus_path):
        config = tmp_path / "bad.yaml"
        config.write_text("presett: flux\n")
        assert main(["run", "--config", str(config), "--input", corpus_path,
                     "--output-dir", str(tmp_path / "o")]) == 1


class TestDedupCommand:
    def test_dedup_stats_schema(self, corpus_path, tmp_path):
        out = tmp_path / "out"
        code = main([
            "dedup", "--input", corpus_path, "--input", corpus_path,
            "--output-dir", str(out),
            "--fp-rate", "1e-3", "--expected-ngrams", "500000",
            "--ngram-size", "13", "--mode", "oldboth", "--deterministic",
        ])
        assert code == 0
        stats = json.loads((out / "dedup_stats.json").read_text())
        for key in ("m_bits", "k", "inserted", "sparsity", "paragraphs_flagged",
                    "documents_dropped", "bytes_in", "bytes_out"):
            assert key in stats
        # The corpus was passed twice: the second copy is duplicate.
        assert stats["documents_dropped"] > 0

    def test_memory_cap(self, corpus_path, tmp_path):
        code = main([
            "dedup", "--input", corpus_path, "--output-dir", str(tmp_path / "o"),
            "--expected-ngrams", "1e9", "--max-gb", "0.001",
        ])
        assert code == 1


class TestClassifyAndSweep:
    def test_classify_outputs(self, corpus_path, models, tmp_path):
        dclm, betr = models
        out = tmp_path / "out"
        code = main([
            "classify", "--input", corpus_path, "--output-dir", str(out),
            "--scorer-dclm", dclm, "--scorer-betr", betr,
            "--tau-dclm", "0.025119", "--tau-betr", "0.76",
        ])
        assert code == 0
        assert (out / "kept.jsonl").exists()
        assert (out / "scores.jsonl").exists()
        with open(out / "scores.jsonl", encoding="utf-8") as fh:
            row = json.loads(fh.readline())
        assert set(row) == {"id", "s_dclm", "s_betr", "accepted", "bins"}

    def test_sweep_from_scores(self, corpus_path, models, tmp_path):
        dclm, betr = models
        classify_out = tmp_path / "cls"
        main(["classify", "--input", corpus_path, "--output-dir", str(classify_out),
              "--scorer-dclm", dclm, "--scorer-betr", betr])
        out = tmp_path / "sweep"
        code = main([
            "sweep", "--scores", str(classify_out / "scores.jsonl"),
            "--pairs", "0.025119:0.76,0.018112:0.7347,0.2:0.635",
            "--output-dir", str(out),
        ])
        assert code == 0
        results = json.loads((out / "sweep.json").read_text())
        assert len(results) == 3
        assert {"tau_dclm", "tau_betr", "retention_pct"} <= set(results[0])
        assert (out / "sweep.txt").exists()
        assert (out / "sweep.png").exists()

    def test_bad_pair_spec(self, tmp_path):
        assert main(["sweep", "--pairs", "nonsense",
                     "--scores", "x.jsonl", "--output-dir", str(tmp_path)]) == 1


class TestDecontamCommand:
    def test_report_written(self, tmp_path):
        bench = tmp_path / "bench.jsonl"
        question = "what is the airspeed velocity of an unladen swallow in flight"
        bench.write_text(json.dumps(
            {"benchmark": "mmlu", "instance_id": "q1", "text": question}) + "\n")
        corpus = tmp_path / "docs.jsonl"
        with open(corpus, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"id": "dirty", "text": "Quiz: " + question + "?"}) + "\n")
            fh.write(json.dumps({"id": "clean", "text": "Nothing related to any benchmark."}) + "\n")
        out = tmp_path / "out"
        code = main([
            "decontam", "--input", str(corpus), "--output-dir", str(out),
            "--benchmarks", str(bench), "--ngram-size", "8",
        ])
        assert code == 0
        report = json.loads((out / "decontam_report.json").read_text())
        assert report["benchmarks"]["mmlu"]["unique_contaminated_documents"] == 1
        assert report["total"]["contaminated_instances"] == 1
        assert (out / "decontam_report.txt").exists()
        assert (out / "decontam_report.png").exists()
        kept_ids = [json.loads(l)["id"] for l in open(out / "kept.jsonl", encoding="utf-8")]
        assert kept_ids == ["clean"]


class TestStatsCommand:
    def test_render_from_json(self, corpus_path, tmp_path):
        run_out = tmp_path / "run"
        main(["run", "--preset", "flux", "--input", corpus_path,
              "--output-dir", str(run_out), "--no-figures"])
        out = tmp_path / "stats"
        code = main(["stats", "--input", str(run_out / "stats.json"),
                     "--output-dir", str(out)])
        assert code == 0
        assert (out / "stats.txt").exists()
        assert (out / "stats.png").exists()
        assert (out / "stats.txt").read_text() == (run_out / "stats.txt").read_text()


class TestTrainScorerCommand:
    def test_train_and_reuse(self, tmp_path):
        labeled = tmp_path / "labeled.jsonl"
        with open(labeled, "w", encoding="utf-8") as fh:
            for i in range(40):
                fh.write(json.dumps({"text": "alpha bravo charlie " * 5, "label": 1}) + "\n")
                fh.write(json.dumps({"text": "mud gloom stone " * 5, "label": 0}) + "\n")
        model_path = tmp_path / "model.bin"
        code = main(["train-scorer", "--labeled", str(labeled),
                     "--output", str(model_path), "--buckets", str(1 << 14)])
        assert code == 0
        from webcurate.qualitygate import NgramScorerModel

        model = NgramScorerModel.load(str(model_path))
        assert model.score("alpha bravo charlie " * 5) > 0.9
        assert model.score("mud gloom stone " * 5) < 0.1
