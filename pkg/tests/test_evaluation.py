import numpy as np
import pytest

from app.core.exceptions import DegenerateData, EmptyDataset, SingleClassData, Unachievable
from app.crud import report as crud_report
from app.schemas.charbot import CharbotConfig
from app.schemas.domain import LabelEnum
from app.schemas.evaluation import ExperimentManifest, ReportFormatEnum
from app.schemas.forest import ForestKindEnum
from app.services import charbot_service, domain_service, evaluation_service, forest_service

HAND_SCORES = [0.9, 0.8, 0.7, 0.6]
HAND_LABELS = [1, 0, 1, 0]


def test_roc_hand_case():
    curve = evaluation_service.roc(HAND_SCORES, HAND_LABELS)
    assert curve.points() == [
        (0.0, 0.0, float("inf")),
        (0.0, 0.5, 0.9),
        (0.5, 0.5, 0.8),
        (0.5, 1.0, 0.7),
        (1.0, 1.0, 0.6),
    ]
    assert curve.positives == 2 and curve.negatives == 2


def test_roc_ties_form_one_point():
    curve = evaluation_service.roc([0.5] * 4, [1, 0, 1, 0])
    assert curve.fpr == (0.0, 1.0)
    assert curve.tpr == (0.0, 1.0)


def test_roc_is_permutation_invariant():
    rng = np.random.default_rng(1)
    scores = rng.integers(0, 10, 60) / 10
    labels = rng.integers(0, 2, 60)
    perm = rng.permutation(60)
    assert evaluation_service.roc(scores, labels) == evaluation_service.roc(scores[perm], labels[perm])


def test_roc_needs_both_classes():
    with pytest.raises(SingleClassData):
        evaluation_service.roc([0.1, 0.2], [1, 1])


def test_operating_point_hand_case():
    curve = evaluation_service.roc(HAND_SCORES, HAND_LABELS)
    point = evaluation_service.operating_point(curve, 0.5)
    assert (point.threshold, point.fpr, point.tpr) == (0.7, 0.5, 1.0)
    assert evaluation_service.threshold_at_fpr(curve, 0.25) == 0.9
    assert evaluation_service.tpr_at_fpr(curve, 0.25) == 0.5


def test_perfect_separation():
    curve = evaluation_service.roc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
    assert evaluation_service.tpr_at_fpr(curve, 0.001) == 1.0
    assert evaluation_service.partial_auc(curve, 0.01) == pytest.approx(1.0)
    assert evaluation_service.auc(curve) == pytest.approx(1.0)


def test_unachievable_target():
    curve = evaluation_service.roc([0.5] * 4, [1, 0, 1, 0])
    with pytest.raises(Unachievable) as exc:
        evaluation_service.threshold_at_fpr(curve, 0.01)
    assert exc.value.best_fpr == 1.0


def test_unachievable_with_coarse_scores():
    # 10 níveis de score: o nível mais alto já contém 100 negativos
    levels = np.repeat(np.arange(10) / 10, 100)
    scores = np.concatenate([levels, levels])
    labels = np.concatenate([np.zeros(1000, dtype=int), np.ones(1000, dtype=int)])
    curve = evaluation_service.roc(scores, labels)
    with pytest.raises(Unachievable):
        evaluation_service.operating_point(curve, 0.001)


def test_chance_level_partial_auc():
    curve = evaluation_service.roc([0.5] * 4, [1, 0, 1, 0])
    assert evaluation_service.partial_auc(curve, 0.1) == pytest.approx(0.05)
    assert evaluation_service.partial_auc(evaluation_service.roc(HAND_SCORES, HAND_LABELS), 0.5) == pytest.approx(0.5)


def test_full_partial_auc_matches_sklearn():
    metrics = pytest.importorskip("sklearn.metrics")
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = int(rng.integers(4, 60))
        labels = rng.integers(0, 2, n)
        labels[0], labels[1] = 0, 1
        scores = rng.integers(0, 20, n) / 20
        curve = evaluation_service.roc(scores, labels)
        assert evaluation_service.partial_auc(curve, 1.0) == pytest.approx(
            metrics.roc_auc_score(labels, scores), abs=1e-12
        )


def test_chance_level_tpr_at_fixed_fpr():
    rng = np.random.default_rng(2019)
    n = 100_000
    scores = rng.random(n)
    labels = np.arange(n) % 2
    curve = evaluation_service.roc(scores, labels)
    point = evaluation_service.operating_point(curve, 0.01)
    assert point.fpr <= 0.01
    # Desvio da diferença entre duas proporções binomiais independentes
    sigma = np.sqrt(2 * 0.01 * 0.99 / (n // 2))
    assert abs(point.tpr - 0.01) <= 3 * sigma


def test_operating_point_is_conservative_and_monotone():
    rng = np.random.default_rng(3)
    scores = rng.random(500)
    labels = (rng.random(500) < scores).astype(int)
    curve = evaluation_service.roc(scores, labels)
    previous = 0.0
    for target in (0.01, 0.05, 0.1, 0.3, 0.6):
        point = evaluation_service.operating_point(curve, target)
        assert point.fpr <= target
        assert point.tpr >= previous
        previous = point.tpr


def test_detection_rate():
    assert evaluation_service.detection_rate(np.array([0.2, 0.5, 0.9]), 0.5) == pytest.approx(2 / 3)
    assert evaluation_service.detection_rate(np.array([0.2, 0.5]), 0.95) == 0.0
    with pytest.raises(EmptyDataset):
        evaluation_service.detection_rate(np.array([]), 0.5)


@pytest.fixture(scope="module")
def experiment_inputs(sample_alexa, charbot_sources):
    lengths = [len(d.sld) for d in sample_alexa.domains()]
    malicious = charbot_service.generate_random_domains(160, seed=1, lengths=lengths)
    base = domain_service.merge("base", sample_alexa, malicious)
    train, test = domain_service.split_train_test(base, 0.8, seed=7)
    sources = charbot_sources.domains()
    seed_train = charbot_service.seed_from_date("2018-12-04")
    seed_test = charbot_service.seed_from_date("2019-01-01")
    augment = {
        "charbot": charbot_service.as_dataset(
            charbot_service.generate_batch(CharbotConfig(), sources, seed_train, 100), "charbot"
        ),
    }
    adversarial = {
        "charbot-test": charbot_service.as_dataset(
            charbot_service.generate_batch(CharbotConfig(), sources, seed_test, 100), "charbot-test"
        ),
        "random-test": charbot_service.generate_random_domains(100, seed=99, lengths=lengths),
    }
    return train, test, augment, adversarial


def test_run_experiment_grid(experiment_inputs, tmp_path):
    train, test, augment, adversarial = experiment_inputs
    result = evaluation_service.run_experiment(
        train, test, augment, adversarial, ForestKindEnum.BRF, seed=42,
        target_fprs=(0.05, 0.5), brf_trees=5,
    )
    matrix = result.matrix
    assert [c.name for c in matrix.cells] == ["baseline", "augmented-charbot"]
    assert matrix.succeeded == 2
    assert matrix.adversarial_sets == ["charbot-test", "random-test"]
    for cell in matrix.cells:
        assert [e.target_fpr for e in cell.report.entries] == [0.05, 0.5]
        assert 0.0 <= cell.report.full_auc <= 1.0
        for entry in cell.report.entries:
            if not entry.unachievable:
                assert set(entry.detection_rates) == {"charbot-test", "random-test"}
                assert entry.achieved_fpr <= entry.target_fpr

    written = evaluation_service.emit_bundle(result, tmp_path)
    assert (tmp_path / "report.json") in written
    assert crud_report.load_json(tmp_path / "report.json") == matrix

    rows = (tmp_path / "report.csv").read_text().splitlines()
    assert len(rows) == 1 + 2 * 2
    assert "det_charbot-test" in rows[0]

    roc_lines = (tmp_path / "roc_baseline.csv").read_text().splitlines()
    assert roc_lines[0] == "fpr,tpr"
    assert all(float(line.split(",")[0]) <= 0.01 for line in roc_lines[1:])


def test_failing_cell_does_not_stop_the_grid(experiment_inputs, monkeypatch):
    train, test, augment, adversarial = experiment_inputs
    original = forest_service.train
    calls = []

    def flaky(*args, **kwargs):
        calls.append(args)
        if len(calls) == 2:
            raise DegenerateData("falha simulada")
        return original(*args, **kwargs)

    monkeypatch.setattr(forest_service, "train", flaky)
    result = evaluation_service.run_experiment(
        train, test, augment, adversarial, ForestKindEnum.BRF, seed=42,
        target_fprs=(0.05,), brf_trees=3,
    )
    baseline, augmented = result.matrix.cells
    assert baseline.succeeded
    assert not augmented.succeeded
    assert "falha simulada" in augmented.error
    assert list(result.curves) == ["baseline"]


def test_emit_single_report(experiment_inputs, tmp_path):
    train, test, _, adversarial = experiment_inputs
    result = evaluation_service.run_experiment(
        train, test, {}, adversarial, ForestKindEnum.FANCI, seed=1, target_fprs=(0.1,),
    )
    path = evaluation_service.emit_report(result, ReportFormatEnum.ROC, tmp_path / "roc.csv")
    assert path.read_text().startswith("fpr,tpr")


def test_augmentation_labels_are_forced_malicious(experiment_inputs):
    _, _, augment, _ = experiment_inputs
    assert augment["charbot"].count(LabelEnum.MALICIOUS) == len(augment["charbot"])


def test_manifest_rejects_shared_seeds(alexa_path):
    with pytest.raises(ValueError):
        ExperimentManifest(
            benign_path=alexa_path,
            malicious_generator="random",
            augmentations=[{"name": "a", "generator": "charbot", "seed_date": "2018-12-04"}],
            adversarial_tests=[{"name": "b", "generator": "charbot", "seed_date": "2018-12-04"}],
        )


def test_run_manifest(alexa_path):
    manifest = ExperimentManifest(
        name="smoke",
        benign_path=alexa_path,
        malicious_generator="random",
        malicious_count=150,
        brf_trees=3,
        target_fprs=[0.1],
        augmentations=[{"name": "cb", "generator": "charbot", "seed_date": "2018-12-04", "count": 50}],
        adversarial_tests=[{"name": "cb-test", "generator": "charbot", "seed_date": "2019-01-01", "count": 50}],
    )
    result = evaluation_service.run_manifest(manifest)
    assert len(result.matrix.cells) == 2
    assert result.matrix.succeeded == 2


def test_unachievable_target_is_marked_and_grid_continues(experiment_inputs, monkeypatch):
    train, test, augment, adversarial = experiment_inputs

    def one_benign_on_top(model, m):
        scores = np.where(m.y == 1, 0.9, 0.1)
        benign = np.flatnonzero(m.y == 0)
        if benign.size:
            scores[benign[0]] = 0.9
        return scores

    monkeypatch.setattr(forest_service, "score_matrix", one_benign_on_top)
    result = evaluation_service.run_experiment(
        train, test, augment, adversarial, ForestKindEnum.BRF, seed=42,
        target_fprs=(0.001, 0.5), brf_trees=3,
    )
    assert result.matrix.succeeded == 2
    for cell in result.matrix.cells:
        strict = cell.report.entry(0.001)
        assert strict.unachievable and strict.threshold is None and not strict.detection_rates
        loose = cell.report.entry(0.5)
        assert not loose.unachievable
        assert loose.tpr == 1.0
        assert set(loose.detection_rates) == {"charbot-test", "random-test"}


def test_augmentation_never_includes_test_domains(experiment_inputs, monkeypatch):
    train, test, augment, adversarial = experiment_inputs
    leaked = domain_service.merge("leaky", augment["charbot"], test, adversarial["charbot-test"])
    original = forest_service.train
    seen = []

    def recording(kind, rows, *args, **kwargs):
        seen.append(set(rows.domains))
        return original(kind, rows, *args, **kwargs)

    monkeypatch.setattr(forest_service, "train", recording)
    result = evaluation_service.run_experiment(
        train, test, {"leaky": leaked}, adversarial, ForestKindEnum.BRF, seed=42,
        target_fprs=(0.5,), brf_trees=3,
    )
    assert result.matrix.succeeded == 2
    augmented_rows = seen[1]
    assert not augmented_rows & set(test.rendered())
    assert not augmented_rows & set(adversarial["charbot-test"].rendered())
    assert augmented_rows & set(augment["charbot"].rendered())


def test_augmentation_made_only_of_test_domains_fails_its_cell(experiment_inputs):
    train, test, _, adversarial = experiment_inputs
    result = evaluation_service.run_experiment(
        train, test, {"copy": test}, adversarial, ForestKindEnum.BRF, seed=42,
        target_fprs=(0.5,), brf_trees=3,
    )
    baseline, copy = result.matrix.cells
    assert baseline.succeeded
    assert not copy.succeeded
    assert "copy" in copy.error
