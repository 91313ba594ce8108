"""
Reproduções em escala de bancada sobre o corpus Alexa completo.

Rodam só com DGALAB_DESK_ALEXA apontando para o CSV rank,domain:
    DGALAB_DESK_ALEXA=top-1m.csv pytest -m desk
"""
import os
from pathlib import Path

import numpy as np
import pytest

from app.schemas.charbot import CharbotConfig
from app.schemas.forest import ForestKindEnum
from app.services import analysis_service, charbot_service, domain_service, evaluation_service

DESK_ALEXA = os.environ.get("DGALAB_DESK_ALEXA")

pytestmark = [
    pytest.mark.desk,
    pytest.mark.skipif(not DESK_ALEXA, reason="DGALAB_DESK_ALEXA não definido"),
]


@pytest.fixture(scope="module")
def sources():
    return domain_service.load_alexa(Path(DESK_ALEXA), min_sld_len=6, limit=10_000)


@pytest.fixture(scope="module")
def benign():
    return domain_service.load_alexa(Path(DESK_ALEXA), min_sld_len=1, limit=100_000)


def test_charbot_length_matches_alexa(sources):
    records = charbot_service.generate_batch(
        CharbotConfig(), sources.domains(), charbot_service.seed_from_date("2018-12-04"), 100_000
    )
    alexa = analysis_service.length_stats(sources)
    batch = analysis_service.length_stats(charbot_service.as_dataset(records, "charbot"))
    assert abs(alexa.mean - batch.mean) < 0.5


def _batch(sources, date, n):
    records = charbot_service.generate_batch(
        CharbotConfig(), sources.domains(), charbot_service.seed_from_date(date), n
    )
    return charbot_service.as_dataset(records, f"charbot-{date}")


def _grid(kind, benign, sources, split_seed=7, forest_seed=42):
    lengths = [len(d.sld) for d in benign.domains()]
    malicious = charbot_service.generate_random_domains(len(benign), seed=1, lengths=lengths)
    base = domain_service.merge("desk", benign, malicious)
    train, test = domain_service.split_train_test(base, 0.8, seed=split_seed)
    return evaluation_service.run_experiment(
        train, test,
        {"charbot": _batch(sources, "2018-12-04", 20_000)},
        {"charbot-test": _batch(sources, "2019-01-01", 10_000)},
        kind, seed=forest_seed,
    ).matrix


@pytest.fixture(scope="module")
def brf_matrix(benign, sources):
    return _grid(ForestKindEnum.BRF, benign, sources)


def test_augmentation_and_test_batches_are_disjoint(sources):
    train = set(_batch(sources, "2018-12-04", 20_000).rendered())
    test = set(_batch(sources, "2019-01-01", 10_000).rendered())
    assert len(train & test) < 0.01 * len(test)


def test_brf_baseline_at_one_percent(brf_matrix):
    baseline = brf_matrix.cells[0].report.entry(0.01)
    assert baseline.normalized_partial_auc >= 0.90
    assert baseline.tpr >= 0.90
    assert baseline.detection_rates["charbot-test"] <= baseline.tpr - 0.30


def test_brf_retraining_recovers_detection(brf_matrix):
    baseline, augmented = brf_matrix.cells
    before = baseline.report.entry(0.01)
    after = augmented.report.entry(0.01)
    assert after.detection_rates["charbot-test"] >= before.detection_rates["charbot-test"] + 0.15
    assert after.achieved_fpr <= 0.01
    assert after.tpr >= before.tpr - 0.02


def test_fanci_low_fpr_is_coarse(benign, sources):
    unachievable = 0
    for seed in (42, 43, 44):
        matrix = _grid(ForestKindEnum.FANCI, benign, sources, forest_seed=seed)
        entries = [cell.report.entry(0.001) for cell in matrix.cells]
        assert all(np.isfinite(e.normalized_partial_auc) for e in entries)
        unachievable += sum(e.unachievable for e in entries)
    assert unachievable >= 1
