import json
import subprocess
import sys

import pytest

from muto.corpus import load_corpus
from muto.sampler import load_model


def run_cli(*args, expect=0):
    proc = subprocess.run(
        [sys.executable, "-m", "muto", *map(str, args)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == expect, f"argv={args}\nstdout={proc.stdout}\nstderr={proc.stderr}"
    return proc


# lam=6 over 6 pairs keeps the planted topic distributions dense enough that
# every planted term actually occurs in this small sample
SYNTH_ARGS = [
    "synth", "--topics", 2, "--pairs", 6, "--identical", 2,
    "--vocab-size-s", 20, "--vocab-size-t", 20,
    "--docs-per-lang", 8, "--doc-len", 15, "--seed", 11,
    "--alpha", 4, "--lam", 6, "--gamma", 14,
]


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    run_cli(*SYNTH_ARGS, "--out", out)
    return out


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory, synth_dir):
    out = tmp_path_factory.mktemp("train")
    run_cli(
        "train", "--corpus", synth_dir / "corpus.jsonl",
        "--prior-source", "file", "--prior-file", _planted_prior(synth_dir),
        "--topics", 2, "--seed", 5, "--m-steps", 2, "--gibbs-iters", 10,
        "--max-terms", 50, "--out", out,
    )
    return out


def _planted_prior(synth_dir):
    # prior file listing the planted pairs, to keep the train runs tiny
    prior_path = synth_dir / "planted_prior.tsv"
    if not prior_path.exists():
        lines = ["#default_weight=0.0"]
        truth = json.loads((synth_dir / "ground_truth.json").read_text())
        for s, t in truth["matching"]:
            lines.append(f"{s}\t{t}\t5.0")
        prior_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return prior_path


class TestSynth:
    def test_outputs_load_back(self, synth_dir):
        corpus = load_corpus(synth_dir / "corpus.jsonl", max_terms=50)
        assert len(corpus.documents) == 16
        assert (synth_dir / "gold_pairs.tsv").exists()
        assert (synth_dir / "ground_truth.json").exists()
        assert (synth_dir / "lexicon.tsv").exists()
        assert (synth_dir / "run_config.json").exists()

    def test_same_seed_gives_identical_files(self, synth_dir, tmp_path):
        run_cli(*SYNTH_ARGS, "--out", tmp_path)
        assert (tmp_path / "corpus.jsonl").read_bytes() == (synth_dir / "corpus.jsonl").read_bytes()
        assert (tmp_path / "ground_truth.json").read_bytes() == (
            synth_dir / "ground_truth.json"
        ).read_bytes()


class TestPrior:
    def test_edit_prior(self, synth_dir, tmp_path):
        proc = run_cli(
            "prior", "--corpus", synth_dir / "corpus.jsonl", "--prior-source", "edit",
            "--max-terms", 50, "--max-distance", 3, "--out", tmp_path,
        )
        assert (tmp_path / "prior.tsv").exists()
        assert "edges" in proc.stdout

    def test_lexicon_prior_weights(self, synth_dir, tmp_path):
        run_cli(
            "prior", "--corpus", synth_dir / "corpus.jsonl", "--prior-source", "lexicon",
            "--lexicon", synth_dir / "lexicon.tsv", "--max-terms", 50, "--out", tmp_path,
        )
        body = (tmp_path / "prior.tsv").read_text().splitlines()
        assert body[0] == "#default_weight=0.0"
        # the planted lexicon is one-to-one, so every weight is 1/N = 1
        assert all(line.split("\t")[2] == "1.0" for line in body[1:])

    def test_pmi_prior_from_aligned_file(self, synth_dir, tmp_path):
        aligned = tmp_path / "aligned.tsv"
        corpus = load_corpus(synth_dir / "corpus.jsonl", max_terms=50)
        s0, s1 = corpus.vocab_s.terms[:2]
        t0, t1 = corpus.vocab_t.terms[:2]
        rows = [f"{s0} filler\t{t0} filler2"] * 5 + [f"{s1}\t{t1}"] * 5
        aligned.write_text("\n".join(rows) + "\n", encoding="utf-8")
        run_cli(
            "prior", "--corpus", synth_dir / "corpus.jsonl", "--prior-source", "pmi",
            "--aligned", aligned, "--max-terms", 50, "--out", tmp_path,
        )
        lines = (tmp_path / "prior.tsv").read_text().splitlines()
        weights = {(p[0], p[1]): float(p[2]) for p in (l.split("\t") for l in lines[1:])}
        assert weights[(s0, t0)] == pytest.approx(2.0)  # 0.5 / (0.5 * 0.5)

    def test_missing_input_is_config_error(self, synth_dir, tmp_path):
        run_cli(
            "prior", "--corpus", synth_dir / "corpus.jsonl", "--prior-source", "lexicon",
            "--max-terms", 50, "--out", tmp_path, expect=2,
        )


class TestTrain:
    def test_outputs(self, trained_dir):
        model = load_model(trained_dir / "model.json")
        assert model.kind == "muto"
        assert (trained_dir / "trace.csv").exists()
        for step in range(2):
            assert (trained_dir / f"matching_step{step}.tsv").exists()
            assert (trained_dir / f"state_step{step}.json").exists()

    def test_byte_identical_reruns(self, synth_dir, tmp_path):
        args = [
            "train", "--corpus", synth_dir / "corpus.jsonl",
            "--prior-source", "file", "--prior-file", _planted_prior(synth_dir),
            "--topics", 2, "--seed", 9, "--m-steps", 1, "--gibbs-iters", 5,
            "--max-terms", 50,
        ]
        run_cli(*args, "--out", tmp_path / "a")
        run_cli(*args, "--out", tmp_path / "b")
        assert (tmp_path / "a" / "model.json").read_bytes() == (
            tmp_path / "b" / "model.json"
        ).read_bytes()

    def test_union_baseline(self, synth_dir, tmp_path):
        run_cli(
            "train", "--corpus", synth_dir / "corpus.jsonl", "--baseline", "union",
            "--topics", 2, "--seed", 3, "--m-steps", 1, "--gibbs-iters", 5,
            "--max-terms", 50, "--out", tmp_path,
        )
        model = load_model(tmp_path / "model.json")
        assert model.kind == "lda_union"
        assert not (tmp_path / "matching_step0.tsv").exists()

    def test_prior_only_flag(self, synth_dir, tmp_path):
        run_cli(
            "train", "--corpus", synth_dir / "corpus.jsonl",
            "--prior-source", "file", "--prior-file", _planted_prior(synth_dir),
            "--prior-only", "--topics", 2, "--seed", 3, "--m-steps", 1,
            "--gibbs-iters", 2, "--max-terms", 50, "--out", tmp_path,
        )
        model = load_model(tmp_path / "model.json")
        # equal prior weights on disjoint planted edges: the matching fills the
        # scheduled size, and nothing outside the planted pairs can enter
        assert len(model.pair_terms) == model.em_trace[0]["target_size"] == 6
        truth = json.loads((synth_dir / "ground_truth.json").read_text())
        planted = {tuple(p) for p in truth["matching"]}
        assert set(model.pair_terms) <= planted

    def test_config_file_defaults_with_flag_override(self, synth_dir, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "corpus": str(synth_dir / "corpus.jsonl"),
            "prior_source": "file",
            "prior_file": str(_planted_prior(synth_dir)),
            "topics": 2, "seed": 4, "m_steps": 1, "gibbs_iters": 3, "max_terms": 50,
        }))
        run_cli("--config", cfg, "train", "--gibbs-iters", 2, "--out", tmp_path / "run")
        echo = json.loads((tmp_path / "run" / "run_config.json").read_text())
        assert echo["gibbs_iters"] == 2  # flag wins
        assert echo["seed"] == 4  # config default

    def test_unknown_config_key_rejected(self, synth_dir, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"no_such_flag": 1}))
        run_cli("--config", cfg, "train", "--corpus", synth_dir / "corpus.jsonl",
                "--topics", 2, "--seed", 1, "--out", tmp_path, expect=2)


class TestEvalAndTopics:
    def test_eval_lexicon_only(self, synth_dir, trained_dir, tmp_path):
        proc = run_cli(
            "eval", "--model", trained_dir / "model.json",
            "--lexicon", synth_dir / "lexicon.tsv", "--out", tmp_path,
        )
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["translation_accuracy_covered"] is not None
        assert report["doc_match_mean"] is None
        assert "translation accuracy" in proc.stdout

    def test_eval_gold_only(self, synth_dir, trained_dir, tmp_path):
        run_cli(
            "eval", "--model", trained_dir / "model.json",
            "--gold", synth_dir / "gold_pairs.tsv", "--out", tmp_path,
        )
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["translation_accuracy_covered"] is None
        assert report["doc_match_mean"] is not None
        assert (tmp_path / "doc_match.csv").exists()

    def test_eval_full_report(self, synth_dir, trained_dir, tmp_path):
        run_cli(
            "eval", "--model", trained_dir / "model.json",
            "--lexicon", synth_dir / "lexicon.tsv",
            "--gold", synth_dir / "gold_pairs.tsv", "--out", tmp_path,
        )
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["translation_accuracy_all"] is not None
        assert report["doc_match_mean"] is not None

    def test_eval_without_resources_fails(self, trained_dir, tmp_path):
        run_cli("eval", "--model", trained_dir / "model.json", "--out", tmp_path, expect=2)

    def test_topics_export(self, trained_dir, tmp_path):
        proc = run_cli(
            "topics", "--model", trained_dir / "model.json", "--top-n", 3, "--out", tmp_path
        )
        assert (tmp_path / "topics.tsv").exists()
        assert "Topic 0" in proc.stdout

    def test_missing_model_file(self, tmp_path):
        run_cli("eval", "--model", tmp_path / "nope.json", "--gold", tmp_path / "g.tsv",
                "--out", tmp_path, expect=2)

    def test_runtime_failures_exit_one(self, tmp_path):
        # disjoint vocabularies make the intersection baseline impossible
        run_cli(
            "synth", "--topics", 2, "--pairs", 4, "--identical", 0,
            "--vocab-size-s", 12, "--vocab-size-t", 12, "--docs-per-lang", 4,
            "--doc-len", 10, "--seed", 2, "--out", tmp_path / "disjoint",
        )
        proc = run_cli(
            "train", "--corpus", tmp_path / "disjoint" / "corpus.jsonl",
            "--baseline", "intersection", "--topics", 2, "--seed", 1,
            "--gibbs-iters", 1, "--max-terms", 50, "--out", tmp_path / "run", expect=1,
        )
        assert "empty intersection" in proc.stderr
