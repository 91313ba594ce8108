import pytest
from typer.testing import CliRunner

from cli import app
from tests.conftest import SAMPLE_ALEXA

runner = CliRunner()


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.setenv("DGALAB_MODEL_DIR", str(tmp_path / "models"))
    monkeypatch.delenv("DGALAB_CONFIG", raising=False)
    monkeypatch.delenv("DGALAB_OUT", raising=False)
    return tmp_path


def invoke(out, *args):
    return runner.invoke(app, ["--quiet", "--out", str(out), *args])


def generate(out, n=60, date="2018-12-04"):
    result = invoke(out, "generate", "--date", date, "-n", str(n), "--sources", str(SAMPLE_ALEXA))
    assert result.exit_code == 0, result.output
    return out / f"charbot_{date}.txt"


def test_generate_writes_batch_and_sidecar(out):
    path = generate(out, n=5)
    assert len(path.read_text().splitlines()) == 5
    sidecar = out / "charbot_2018-12-04.provenance.csv"
    assert sidecar.read_text().splitlines()[0] == "output,source,indices,replacements,seed"


def test_generate_is_reproducible(out):
    first = generate(out / "a", n=20).read_text()
    second = generate(out / "b", n=20).read_text()
    assert first == second


def test_generate_missing_sources(out):
    result = invoke(out, "generate", "-n", "1", "--sources", str(out / "absent.csv"))
    assert result.exit_code == 2


def test_generate_invalid_date(out):
    result = invoke(out, "generate", "--date", "2018-13-40", "-n", "1", "--sources", str(SAMPLE_ALEXA))
    assert result.exit_code == 2


def test_featurize_train_score(out):
    malicious = generate(out)
    result = invoke(out, "featurize", "--benign", str(SAMPLE_ALEXA), "--malicious", str(malicious))
    assert result.exit_code == 0, result.output
    assert (out / "bigram.tsv").exists() and (out / "trigram.tsv").exists()

    result = invoke(out, "train", "brf", str(out / "matrix.csv"), "--trees", "3")
    assert result.exit_code == 0, result.output
    model = out / "models" / "brf.model"
    assert model.read_text().startswith("DGALAB-FOREST 1")

    result = invoke(out, "score", str(model), "--domains", str(malicious))
    assert result.exit_code == 0, result.output
    lines = (out / "scores.csv").read_text().splitlines()
    assert lines[0] == "domain,score"
    assert len(lines) == 61
    assert all(0.0 <= float(line.rsplit(",", 1)[1]) <= 1.0 for line in lines[1:])


def test_score_without_ngram_tables(out):
    malicious = generate(out)
    assert invoke(out, "featurize", "--benign", str(SAMPLE_ALEXA), "--malicious", str(malicious)).exit_code == 0
    assert invoke(out, "train", "brf", str(out / "matrix.csv"), "--trees", "2").exit_code == 0

    elsewhere = out / "elsewhere"
    result = invoke(elsewhere, "score", str(out / "models" / "brf.model"), "--domains", str(malicious))
    assert result.exit_code == 2
    assert not (elsewhere / "scores.csv").exists()


def test_score_with_no_usable_rows(out):
    malicious = generate(out)
    assert invoke(out, "featurize", "--benign", str(SAMPLE_ALEXA), "--malicious", str(malicious)).exit_code == 0
    assert invoke(out, "train", "brf", str(out / "matrix.csv"), "--trees", "2").exit_code == 0

    tiny = out / "tiny.txt"
    tiny.write_text("a.com\nb.net\n")
    result = invoke(out, "score", str(out / "models" / "brf.model"), "--domains", str(tiny))
    assert result.exit_code == 2
    assert not (out / "scores.csv").exists()


def test_score_with_wrong_schema(out):
    malicious = generate(out)
    invoke(out, "featurize", "--benign", str(SAMPLE_ALEXA), "--malicious", str(malicious))
    assert invoke(out, "train", "brf", str(out / "matrix.csv"), "--trees", "2").exit_code == 0
    result = invoke(
        out, "featurize", "--schema", "fanci", "--benign", str(SAMPLE_ALEXA),
        "--malicious", str(malicious), "--output", "fanci.csv",
    )
    assert result.exit_code == 0, result.output

    result = invoke(out, "score", str(out / "models" / "brf.model"), "--matrix", str(out / "fanci.csv"))
    assert result.exit_code == 4


def test_train_single_class(out):
    result = invoke(out, "featurize", "--benign", str(SAMPLE_ALEXA), "--output", "benign.csv")
    assert result.exit_code == 0, result.output
    result = invoke(out, "train", "brf", str(out / "benign.csv"), "--trees", "2")
    assert result.exit_code == 5


def test_defend_build_and_check(out):
    result = invoke(out, "defend", "build", "--sources", str(SAMPLE_ALEXA), "--limit", "5", "--k", "1")
    assert result.exit_code == 0, result.output
    result = invoke(out, "defend", "check", str(out / "typosquat.bloom"), "g0ogle.com")
    assert result.exit_code == 0, result.output
    assert "g0ogle.com,HIT" in result.stdout


def test_defend_build_over_budget(out):
    result = invoke(out, "defend", "build", "--sources", str(SAMPLE_ALEXA), "--budget", "10")
    assert result.exit_code == 7
    assert "inserções previstas" in result.output


def test_analyze_lengths(out):
    batch = generate(out, n=30)
    result = invoke(
        out, "analyze", "lengths", "--dataset", f"alexa={SAMPLE_ALEXA}", "--dataset", f"charbot={batch}",
    )
    assert result.exit_code == 0, result.output
    lines = (out / "lengths.csv").read_text().splitlines()
    assert lines[0] == "dataset,mean,std,count"
    assert [line.split(",")[0] for line in lines[1:]] == ["alexa", "charbot"]


def test_analyze_kde(out):
    batch = generate(out, n=80)
    result = invoke(
        out, "analyze", "kde", "--dataset", f"alexa={SAMPLE_ALEXA}", "--dataset", f"charbot={batch}",
        "--feature", "Entropy",
    )
    assert result.exit_code == 0, result.output
    assert (out / "kde_alexa_Entropy.csv").exists()
    assert (out / "kde_charbot_Entropy.csv").exists()


def test_weak_label(out):
    log = out / "log.csv"
    log.write_text(
        "domain,timestamp,response\n"
        "stable.com,2018-01-01T00:00:00Z,RESOLVED\n"
        "stable.com,2018-03-01T00:00:00Z,RESOLVED\n"
        "fresh.com,2018-03-01T00:00:00Z,RESOLVED\n"
    )
    result = invoke(out, "weak-label", str(log))
    assert result.exit_code == 0, result.output
    assert (out / "weak_benign.txt").read_text().splitlines() == ["stable.com"]


def test_evaluate_manifest(out):
    manifest = out / "smoke.yaml"
    manifest.write_text(
        f"name: smoke\n"
        f"model_kind: brf\n"
        f"benign_path: {SAMPLE_ALEXA}\n"
        f"malicious_generator: random\n"
        f"malicious_count: 150\n"
        f"brf_trees: 3\n"
        f"target_fprs: [0.1]\n"
        f"augmentations:\n"
        f"  - {{name: cb-train, generator: charbot, seed_date: '2018-12-04', count: 50}}\n"
        f"adversarial_tests:\n"
        f"  - {{name: cb-test, generator: charbot, seed_date: '2019-01-01', count: 50}}\n"
    )
    result = invoke(out, "evaluate", str(manifest))
    assert result.exit_code == 0, result.output
    assert (out / "smoke" / "report.json").exists()
    assert (out / "smoke" / "report.csv").exists()
    assert (out / "smoke" / "roc_baseline.csv").exists()


def test_evaluate_invalid_manifest(out):
    manifest = out / "bad.yaml"
    manifest.write_text(f"benign_path: {SAMPLE_ALEXA}\n")
    result = invoke(out, "evaluate", str(manifest))
    assert result.exit_code == 2
