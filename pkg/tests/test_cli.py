import json

import pytest

from claimevid.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def last_summary(out):
    return json.loads(out.strip().splitlines()[-1])


@pytest.fixture
def claims_file(tmp_path):
    path = tmp_path / "claims.jsonl"
    rows = []
    for i in range(12):
        rows.append({
            "claim_id": f"c{i}",
            "claim_text": f"I heard drug{i} helps with cond{i} pain relief",
            "populations": [f"cond{i}"],
            "interventions": [f"drug{i}"],
            "outcomes": ["pain"],
            "evidence_doc_id": f"d{i}",
        })
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    return path


@pytest.fixture
def evidence_file(tmp_path):
    path = tmp_path / "evidence.jsonl"
    rows = []
    for i in range(12):
        rows.append({
            "doc_id": f"d{i}",
            "title": f"Trial of drug{i}",
            "abstract": f"Patients with cond{i} received drug{i} and reported pain relief",
            "populations": [f"cond{i}"],
            "interventions": [f"drug{i}"],
            "outcomes": ["pain"],
        })
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    return path


@pytest.fixture
def posts_file(tmp_path):
    path = tmp_path / "posts.jsonl"
    rows = []
    for i in range(30):
        text = f"filler words here glyco starts span {i} trailing tail"
        start = text.index("glyco")
        end = text.index("span") + 4
        rows.append({
            "post_id": f"p{i}",
            "text": text,
            "claims": [{"start": start, "end": end}],
            "pio": [{"start": start, "end": start + 5, "category": "INT"}],
        })
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    return path


class TestStats:
    def test_summary_fields(self, capsys, claims_file):
        code, out, _ = run_cli(
            capsys, "stats", "--claims", str(claims_file), "--no-timestamp"
        )
        assert code == 0
        summary = last_summary(out)
        assert summary["command"] == "stats"
        assert summary["n_claims"] == 12
        assert "timestamp" not in summary

    def test_timestamp_present_by_default(self, capsys, claims_file):
        _, out, _ = run_cli(capsys, "stats", "--claims", str(claims_file))
        assert "timestamp" in last_summary(out)


class TestSplit:
    def test_partition_files(self, capsys, claims_file, tmp_path):
        train, val = tmp_path / "train.jsonl", tmp_path / "val.jsonl"
        code, out, _ = run_cli(
            capsys, "split", "--in", str(claims_file), "--schema", "claims",
            "--ratio", "0.9", "--seed", "3",
            "--train-out", str(train), "--val-out", str(val),
        )
        assert code == 0
        summary = last_summary(out)
        assert summary["n_train"] == 11 and summary["n_val"] == 1
        assert len(train.read_text().splitlines()) == 11


class TestMask:
    def test_writes_masked_file_idempotently(self, capsys, claims_file, tmp_path):
        out_path = tmp_path / "masked.jsonl"
        args = (
            "mask", "--claims", str(claims_file), "--rate", "0.3",
            "--seed", "5", "--out", str(out_path), "--no-timestamp",
        )
        code, out1, _ = run_cli(capsys, *args)
        assert code == 0
        bytes1 = out_path.read_bytes()
        code, out2, _ = run_cli(capsys, *args)
        assert code == 0
        assert out_path.read_bytes() == bytes1
        assert out1 == out2
        record = json.loads(out_path.read_text().splitlines()[0])
        assert set(record) == {"claim_id", "original", "masked", "masked_word_indices"}


class TestTaggingPipeline:
    def test_convert_train_predict_score(self, capsys, posts_file, tmp_path):
        tags = tmp_path / "tags.tsv"
        code, _, _ = run_cli(
            capsys, "tag-convert", "--posts", str(posts_file),
            "--scheme", "claim", "--out", str(tags),
        )
        assert code == 0

        model, fdict = tmp_path / "model.json", tmp_path / "features.jsonl"
        code, out, _ = run_cli(
            capsys, "train-crf", "--train", str(tags), "--scheme", "claim",
            "--model-out", str(model), "--dict-out", str(fdict),
            "--lr", "0.3", "--max-epochs", "4", "--patience", "4",
            "--batch-size", "8", "--seed", "1",
        )
        assert code == 0
        assert last_summary(out)["n_features"] > 0

        pred = tmp_path / "pred.tsv"
        code, _, _ = run_cli(
            capsys, "predict", "--model", str(model), "--dict", str(fdict),
            "--in", str(tags), "--out", str(pred),
        )
        assert code == 0

        code, out, _ = run_cli(
            capsys, "score-spans", "--gold", str(tags), "--pred", str(pred)
        )
        assert code == 0
        summary = last_summary(out)
        assert summary["scheme"] == "claim"
        assert summary["f1"] > 0.9

    def test_pio_scheme_convert(self, capsys, posts_file, tmp_path):
        tags = tmp_path / "pio.tsv"
        code, _, _ = run_cli(
            capsys, "tag-convert", "--posts", str(posts_file),
            "--scheme", "pio", "--out", str(tags), "--include-pos",
        )
        assert code == 0
        first = tags.read_text().splitlines()[3]
        assert len(first.split("\t")) == 3
        assert "B-Int" in tags.read_text()


class TestRetrievalPipeline:
    def test_index_search_eval(self, capsys, claims_file, evidence_file, tmp_path):
        index = tmp_path / "index.json"
        code, _, _ = run_cli(
            capsys, "index", "--evidence", str(evidence_file), "--out", str(index)
        )
        assert code == 0

        run = tmp_path / "run.tsv"
        code, out, _ = run_cli(
            capsys, "search", "--index", str(index),
            "--queries", str(claims_file), "--k", "3",
            "--mode", "claim_pio", "--out", str(run),
        )
        assert code == 0
        assert last_summary(out)["n_queries"] == 12
        per_query = {}
        for line in run.read_text().splitlines():
            qid = line.split("\t")[0]
            per_query[qid] = per_query.get(qid, 0) + 1
        assert all(n <= 3 for n in per_query.values())

        qrels = tmp_path / "qrels.tsv"
        qrels.write_text("".join(f"c{i}\td{i}\t2\n" for i in range(12)))
        report = tmp_path / "report.json"
        table = tmp_path / "report.txt"
        code, out, _ = run_cli(
            capsys, "eval", "--run", str(run), "--qrels", str(qrels),
            "--k", "1,3", "--out", str(report), "--table-out", str(table),
        )
        assert code == 0
        summary = last_summary(out)
        assert set(summary["precision_at_k"]) == {"1", "3"}
        assert summary["precision_at_k"]["1"] == 1.0
        assert "grade" in table.read_text()

    def test_dense_search(self, capsys, tmp_path):
        vecs = tmp_path / "docs.jsonl"
        qvecs = tmp_path / "queries.jsonl"
        vecs.write_text(
            '{"id": "d1", "vec": [1.0, 0.0]}\n{"id": "d2", "vec": [0.0, 1.0]}\n'
        )
        qvecs.write_text('{"id": "q1", "vec": [0.9, 0.1]}\n')
        run = tmp_path / "run.tsv"
        code, out, _ = run_cli(
            capsys, "search", "--vectors", str(vecs),
            "--query-vectors", str(qvecs), "--metric", "dot",
            "--k", "1", "--out", str(run),
        )
        assert code == 0
        assert run.read_text().startswith("q1\td1\t1\t")

    def test_search_requires_exactly_one_backend(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "search", "--k", "3", "--out", str(tmp_path / "r.tsv")
        )
        assert code == 1
        assert "exactly one" in err


class TestPairs:
    def test_pairs_written(self, capsys, claims_file, evidence_file, tmp_path):
        out_path = tmp_path / "pairs.jsonl"
        code, out, _ = run_cli(
            capsys, "pairs", "--claims", str(claims_file),
            "--evidence", str(evidence_file), "--n-negatives", "3",
            "--seed", "2", "--out", str(out_path),
        )
        assert code == 0
        assert last_summary(out)["n_pairs"] == 12
        record = json.loads(out_path.read_text().splitlines()[0])
        assert record["positive_doc_id"] == "d0"
        assert len(record["negative_doc_ids"]) == 3


class TestGen:
    def test_missing_bridge_fails_gracefully(self, capsys, tmp_path):
        prompts = tmp_path / "prompts.jsonl"
        prompts.write_text('{"prompt_id": "r1", "populations": ["smokers"]}\n')
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{}")
        code, _, err = run_cli(
            capsys, "gen", "--prompts", str(prompts),
            "--out", str(tmp_path / "claims.jsonl"),
            "--gen-config", str(cfg), "--model", str(tmp_path / "model"),
            "--bridge-cmd", "definitely-not-a-real-bridge",
        )
        assert code == 1
        assert "bridge" in err


class TestErrorsAndHelp:
    def test_validation_error_exit_one(self, capsys, tmp_path):
        bad = tmp_path / "claims.jsonl"
        bad.write_text("{not json\n")
        code, _, err = run_cli(capsys, "stats", "--claims", str(bad))
        assert code == 1
        assert "error" in err

    def test_io_error_exit_two(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "stats", "--claims", str(tmp_path / "missing.jsonl")
        )
        assert code == 2
        assert "io error" in err

    @pytest.mark.parametrize("command", [
        "stats", "split", "mask", "tag-convert", "train-crf", "predict",
        "score-spans", "index", "search", "pairs", "eval", "gen",
    ])
    def test_help_exits_zero(self, capsys, command):
        with pytest.raises(SystemExit) as exc:
            main([command, "--help"])
        assert exc.value.code == 0
        out, _ = capsys.readouterr()
        assert "usage" in out.lower()


class TestConfigFile:
    def test_config_supplies_defaults_flags_override(
        self, capsys, claims_file, tmp_path
    ):
        out_path = tmp_path / "masked.jsonl"
        cfg = tmp_path / "mask.cfg"
        cfg.write_text(
            f"claims = {claims_file}\n"
            "rate = 1.0\n"
            "seed = 9\n"
            f"out = {out_path}\n"
            "no-timestamp = true\n"
        )
        code, out, _ = run_cli(capsys, "mask", "--config", str(cfg))
        assert code == 0
        assert last_summary(out)["rate"] == 1.0
        code, out, _ = run_cli(
            capsys, "mask", "--config", str(cfg), "--rate", "0.0"
        )
        assert code == 0
        assert last_summary(out)["rate"] == 0.0
