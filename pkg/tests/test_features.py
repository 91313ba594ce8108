import numpy as np
import pytest

from app.core.exceptions import (
    CorruptModel,
    DatasetFeaturizationError,
    EmptyString,
    FeatureExtractionError,
    StringTooShort,
)
from app.crud import matrix as crud_matrix
from app.crud import table as crud_table
from app.schemas.charbot import CharbotConfig
from app.schemas.domain import Domain, LabelEnum
from app.schemas.features import (
    DEGENERATE_COLUMNS,
    RATIO_COLUMNS,
    SCHEMAS,
    FeatureSchemaEnum,
    NgramTable,
    NgramTables,
)
from app.services import charbot_service, domain_service, feature_service
from tests.conftest import make_dataset

FANCI = SCHEMAS[FeatureSchemaEnum.FANCI]
BRF = SCHEMAS[FeatureSchemaEnum.BRF]
FULL = SCHEMAS[FeatureSchemaEnum.FULL]


@pytest.fixture(scope="module")
def tables(sample_alexa):
    return feature_service.build_tables(sample_alexa, FULL)


def test_entropy_and_impurities():
    assert feature_service.entropy("google") == pytest.approx(1.9182958, abs=1e-6)
    assert feature_service.entropy("aaaa") == 0.0
    assert feature_service.entropy("ab") == pytest.approx(1.0)
    assert feature_service.gini_index("aabb") == pytest.approx(0.5)
    assert feature_service.classification_error("aaab") == pytest.approx(0.25)
    with pytest.raises(EmptyString):
        feature_service.entropy("")


def test_ngram_table_frequencies():
    table = feature_service.build_ngram_table(make_dataset("corpus", ["abab.com"]), 2)
    assert table.entries == pytest.approx({"ab": 2 / 3, "ba": 1 / 3})
    assert table.default_frequency == pytest.approx(1 / 6)
    assert sum(table.entries.values()) == pytest.approx(1.0)


def test_ngram_median():
    table = NgramTable(n=2, entries={"ab": 0.6, "ba": 0.4}, default_frequency=0.01)
    assert feature_service.ngram_median("abab", table) == pytest.approx(0.6)
    assert feature_service.ngram_median("ab", table, circular=True) == pytest.approx(0.5)
    assert feature_service.ngram_median("zzzz", table) == pytest.approx(0.01)
    with pytest.raises(StringTooShort):
        feature_service.ngram_median("a", table)


def test_ngram_table_file_round_trip(tmp_path, sample_alexa):
    table = feature_service.build_ngram_table(sample_alexa, 3)
    crud_table.save_ngram_table(tmp_path / "trigram.tsv", table)
    assert crud_table.load_ngram_table(tmp_path / "trigram.tsv") == table


@pytest.mark.parametrize("body", [
    "#n=2 default=0.1\nab\t0.5\nbroken line\n",
    "#n=2 default=0.1\nab\tnot-a-number\n",
    "#n=2 default=0.1\nab\t0.5\textra\n",
    "sem cabeçalho\nab\t0.5\n",
    "",
])
def test_ngram_table_file_rejects_malformed(tmp_path, body):
    path = tmp_path / "bigram.tsv"
    path.write_text(body, encoding="utf-8")
    with pytest.raises(CorruptModel):
        crud_table.load_ngram_table(path)


def test_schema_widths_and_order():
    assert (FANCI.width, BRF.width, FULL.width) == (26, 26, 45)
    assert FANCI.column_names == [
        "domain_length", "has_valid_tld", "contains_digits", "underscore_ratio", "digit_ratio",
        "vowel_ratio", "repeated_char_ratio", "consecutive_consonant_ratio", "consecutive_digit_ratio",
        "entropy", "ngram1_mean", "ngram1_std", "ngram2_mean", "ngram2_std", "ngram3_mean", "ngram3_std",
        "subdomain_count", "subdomain_length_mean", "has_www_prefix", "has_single_char_subdomain",
        "is_exclusive_prefix_repetition", "contains_tld_as_subdomain", "digit_subdomain_ratio",
        "hex_subdomain_ratio", "contains_ip_address", "alphabet_cardinality",
    ]
    assert BRF.column_names[:3] == ["domain_length", "sld_length", "tld_length"]
    assert BRF.column_names[-4:] == [
        "bigram_median", "trigram_median", "bigram_circle_median", "trigram_circle_median",
    ]


def test_wikipedia_columns(tables, tld_ctx):
    values = feature_service.extract(Domain(sld="wikipedia", tld="org"), FULL, tables, tld_ctx).as_dict()
    assert values["domain_length"] == 13
    assert values["sld_length"] == 9
    assert values["tld_length"] == 3
    assert values["starts_with_digit"] == 0
    assert values["has_valid_tld"] == 1
    assert values["vowel_ratio"] == pytest.approx(5 / 9)


def test_digit_and_symbol_ratios(tables):
    values = feature_service.extract(Domain(sld="a1-b2", tld="com"), FULL, tables).as_dict()
    assert values["digit_ratio"] == pytest.approx(2 / 8)
    assert values["symbol_ratio"] == pytest.approx(3 / 5)
    assert values["sld_token_count"] == 2
    assert values["contains_digits"] == 1


def test_malicious_tld(tables, tld_ctx):
    values = feature_service.extract(Domain(sld="freestuff", tld="tk"), BRF, tables, tld_ctx).as_dict()
    assert values["has_malicious_tld"] == 1
    assert 0.0 <= values["tld_hash"] < 1.0


def test_extraction_names_failing_column(tables):
    with pytest.raises(FeatureExtractionError) as exc:
        feature_service.extract(Domain(sld="a", tld="com"), BRF, tables)
    assert exc.value.column == "bigram_median"

    with pytest.raises(FeatureExtractionError) as exc:
        feature_service.extract(Domain(sld="google", tld="com"), BRF, NgramTables())
    assert exc.value.column == "bigram_median"


def test_fanci_needs_no_tables():
    fv = feature_service.extract(Domain(sld="q", tld="com"), FANCI)
    assert fv.as_dict()["ngram2_mean"] == 0.0


def test_extraction_is_pure(tables, tld_ctx):
    d = Domain(sld="g0ogl3", tld="net")
    assert feature_service.extract(d, FULL, tables, tld_ctx) == feature_service.extract(d, FULL, tables, tld_ctx)


def test_ratio_columns_in_unit_interval(sample_alexa, tables, tld_ctx):
    matrix = feature_service.featurize_dataset(sample_alexa, FULL, tables, tld_ctx, strict=False)
    assert matrix.rows > 100
    for j, name in enumerate(FULL.column_names):
        if name in RATIO_COLUMNS:
            assert matrix.X[:, j].min() >= 0.0 and matrix.X[:, j].max() <= 1.0


def test_degenerate_columns_are_constant(charbot_sources, tables):
    records = charbot_service.generate_batch(CharbotConfig(), charbot_sources.domains(), seed=12, n=300)
    matrix = feature_service.featurize_dataset(charbot_service.as_dataset(records, "cb"), FULL, tables)
    for name in DEGENERATE_COLUMNS:
        column = matrix.X[:, FULL.column_names.index(name)]
        assert np.all(column == column[0]), name


def test_featurize_dataset_strict_and_lenient(tables):
    ds = make_dataset("mixed", ["google.com", "a.com", "youtube.com"])
    with pytest.raises(DatasetFeaturizationError) as exc:
        feature_service.featurize_dataset(ds, BRF, tables)
    assert [idx for idx, _ in exc.value.errors] == [1]

    matrix = feature_service.featurize_dataset(ds, BRF, tables, strict=False)
    assert matrix.domains == ["google.com", "youtube.com"]
    assert matrix.X.shape == (2, BRF.width)


def test_featurize_empty_dataset(tables):
    matrix = feature_service.featurize_dataset(make_dataset("none", []), BRF, tables)
    assert matrix.X.shape == (0, BRF.width)


def test_matrix_file_round_trip(tmp_path, sample_alexa, tables, tld_ctx):
    benign = feature_service.featurize_dataset(sample_alexa, BRF, tables, tld_ctx, strict=False)
    dga = charbot_service.generate_random_domains(50, seed=1, lengths=[8, 10])
    malicious = feature_service.featurize_dataset(dga, BRF, tables, tld_ctx)
    matrix = benign.concat(malicious)
    path = tmp_path / "matrix.csv"
    crud_matrix.save(path, matrix)
    loaded = crud_matrix.load(path, expected=FeatureSchemaEnum.BRF)
    assert loaded.schema_name == FeatureSchemaEnum.BRF
    assert np.array_equal(loaded.X, matrix.X)
    assert np.array_equal(loaded.y, matrix.y)
    assert loaded.domains == matrix.domains
    assert loaded.source_tags == matrix.source_tags
    assert int(loaded.y.sum()) == 50


def test_dataset_labels_survive_featurization(tables):
    ds = make_dataset("dga", ["qwertyuiop.com"], LabelEnum.MALICIOUS)
    assert feature_service.featurize_dataset(ds, BRF, tables).y.tolist() == [1]
