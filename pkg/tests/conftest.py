from pathlib import Path
from typing import List

import numpy as np
import pytest

from app.core.config import DATA_DIR
from app.crud import table as crud_table
from app.models.matrix import FeatureMatrix
from app.schemas.domain import Dataset, Domain, LabelEnum, LabeledExample
from app.schemas.features import SCHEMAS, FeatureSchemaEnum, TldContext
from app.services import domain_service

SAMPLE_ALEXA = DATA_DIR / "alexa_sample.csv"


def make_dataset(name: str, rendered: List[str], label: LabelEnum = LabelEnum.BENIGN, tag: str = "test") -> Dataset:
    return Dataset(
        name=name,
        examples=tuple(
            LabeledExample(domain=domain_service.parse_domain(r), label=label, source_tag=tag) for r in rendered
        ),
    )


def random_matrix(schema: FeatureSchemaEnum, rows: int, seed: int = 0) -> FeatureMatrix:
    """Matriz sintética com rótulo dependente das duas primeiras colunas."""
    rng = np.random.default_rng(seed)
    width = SCHEMAS[schema].width
    X = rng.random((rows, width))
    y = ((X[:, 0] + X[:, 1] + 0.2 * rng.standard_normal(rows)) > 1.0).astype(np.int64)
    return FeatureMatrix(schema, X, y, [f"d{i}.com" for i in range(rows)], ["synthetic"] * rows)


@pytest.fixture(scope="session")
def alexa_path() -> Path:
    return SAMPLE_ALEXA


@pytest.fixture(scope="session")
def sample_alexa() -> Dataset:
    return domain_service.load_alexa(SAMPLE_ALEXA, min_sld_len=1, limit=0)


@pytest.fixture(scope="session")
def charbot_sources() -> Dataset:
    return domain_service.load_alexa(SAMPLE_ALEXA, min_sld_len=6, limit=10_000)


@pytest.fixture(scope="session")
def tld_ctx() -> TldContext:
    return crud_table.load_tld_context(DATA_DIR / "valid_tlds.txt", DATA_DIR / "malicious_tlds.txt")


@pytest.fixture
def google() -> Domain:
    return Domain(sld="google", tld="com")
