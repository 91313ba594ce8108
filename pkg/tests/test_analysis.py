import numpy as np
import pytest

from app.core.exceptions import DegenerateData, EmptyDataset, InvalidParameters
from app.crud import report as crud_report
from app.schemas.analysis import CompareFeatureEnum
from app.schemas.charbot import CharbotConfig
from app.schemas.features import SCHEMAS, FeatureSchemaEnum
from app.services import analysis_service, charbot_service, feature_service
from tests.conftest import make_dataset


def test_kde_rejects_degenerate_input():
    with pytest.raises(DegenerateData):
        analysis_service.kde([1.0, 1.0, 1.0])
    with pytest.raises(DegenerateData):
        analysis_service.kde([0.5])


def test_kde_of_standard_normal():
    values = np.random.default_rng(0).standard_normal(10_000)
    curve = analysis_service.kde(values)
    peak = np.interp(0.0, curve.grid, curve.densities)
    assert peak == pytest.approx(0.3989, rel=0.1)
    assert analysis_service.integral(curve) == pytest.approx(1.0, abs=1e-3)


def test_kde_grid_is_fine_enough():
    values = np.random.default_rng(1).standard_normal(50)
    curve = analysis_service.kde(values)
    step = curve.grid[1] - curve.grid[0]
    assert len(curve.grid) >= 512
    assert step <= curve.bandwidth / 4 + 1e-12


def test_kde_honours_explicit_grid_points():
    values = np.random.default_rng(1).standard_normal(50)
    assert len(analysis_service.kde(values, grid_points=16).grid) == 16
    with pytest.raises(InvalidParameters):
        analysis_service.kde(values, grid_points=1)


def test_l1_distance():
    rng = np.random.default_rng(2)
    a = analysis_service.kde(rng.standard_normal(2000), bounds=(-8.0, 8.0))
    b = analysis_service.kde(rng.standard_normal(2000) + 3.0, bounds=(-8.0, 8.0))
    assert analysis_service.l1_distance(a, a) == 0.0
    assert 1.5 < analysis_service.l1_distance(a, b) <= 2.0 + 1e-6


def test_length_stats():
    stats = analysis_service.length_stats(make_dataset("one", ["ab.cd"]))
    assert (stats.mean, stats.std, stats.count) == (5.0, 0.0, 1)
    with pytest.raises(EmptyDataset):
        analysis_service.length_stats(make_dataset("none", []))


def test_charbot_sits_closer_to_alexa_than_random(charbot_sources):
    sources = charbot_sources.domains()
    lengths = [len(d.sld) for d in sources]
    records = charbot_service.generate_batch(CharbotConfig(), sources, seed=2018, n=2000)
    datasets = {
        "alexa": charbot_sources,
        "charbot": charbot_service.as_dataset(records, "charbot"),
        "random": charbot_service.generate_random_domains(2000, seed=3, lengths=lengths),
    }
    tables = feature_service.build_tables(charbot_sources, SCHEMAS[FeatureSchemaEnum.BRF])
    comparison = analysis_service.compare_features(datasets, tables=tables)

    entropy = {name: comparison.curve(name, "Entropy") for name in datasets}
    assert entropy["alexa"].grid == entropy["random"].grid

    closer = []
    for feature in CompareFeatureEnum:
        to_charbot = analysis_service.reference_distance(comparison, "alexa", "charbot", feature.value)
        to_random = analysis_service.reference_distance(comparison, "alexa", "random", feature.value)
        assert to_charbot is not None and to_random is not None, feature
        closer.append(to_charbot < to_random)
    assert sum(closer) >= 5, closer


def test_reference_distance_with_point_masses():
    flat = make_dataset("flat", ["aaaa.com", "bbbb.com"])
    also_flat = make_dataset("also_flat", ["cccc.com", "dddd.com"])
    varied = make_dataset("varied", ["google.com", "abcdefgh.com", "aab.com"])
    comparison = analysis_service.compare_features(
        {"varied": varied, "flat": flat, "also_flat": also_flat}, features=[CompareFeatureEnum.ENTROPY]
    )
    assert comparison.point_masses["flat:Entropy"] == 0.0
    assert analysis_service.reference_distance(comparison, "varied", "flat", "Entropy") == 2.0
    assert analysis_service.reference_distance(comparison, "flat", "varied", "Entropy") == 2.0
    assert analysis_service.reference_distance(comparison, "flat", "also_flat", "Entropy") == 0.0
    assert analysis_service.reference_distance(comparison, "varied", "absent", "Entropy") is None


def test_compare_features_records_failures():
    flat = make_dataset("flat", ["aaaa.com", "bbbb.com"])
    varied = make_dataset("varied", ["google.com", "abcdefgh.com", "aab.com"])
    comparison = analysis_service.compare_features(
        {"flat": flat, "varied": varied}, features=[CompareFeatureEnum.ENTROPY]
    )
    assert "flat:Entropy" in comparison.failures
    assert comparison.curve("varied", "Entropy").feature == "Entropy"


def test_ngram_features_need_tables():
    comparison = analysis_service.compare_features(
        {"varied": make_dataset("varied", ["google.com", "abcdefgh.com"])},
        features=[CompareFeatureEnum.BIGRAM_MEDIAN],
    )
    assert "varied:2gramMedian" in comparison.failures


def test_density_and_length_files(tmp_path):
    curve = analysis_service.kde([0.0, 1.0, 2.0, 5.0])
    crud_report.save_density(tmp_path / "kde.csv", curve)
    lines = (tmp_path / "kde.csv").read_text().splitlines()
    assert lines[0] == "x,density"
    assert len(lines) == len(curve.grid) + 1

    stats = [analysis_service.length_stats(make_dataset("a", ["ab.cd", "abc.de"]))]
    crud_report.save_length_stats(tmp_path / "lengths.csv", stats)
    assert (tmp_path / "lengths.csv").read_text().splitlines()[1] == "a,5.5,0.5,2"
