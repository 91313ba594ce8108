from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from app.core.exceptions import DatasetIoError, SchemaMismatch
from app.models.matrix import FeatureMatrix
from app.schemas.features import SCHEMAS, FeatureSchemaEnum


class CRUDMatrix:
    """
    Persistência da matriz de features em CSV.

    Colunas: `domain`, colunas do esquema na ordem fixa, `label`, `source_tag`.
    """

    def save(self, path: Path, matrix: FeatureMatrix) -> None:
        schema = SCHEMAS[matrix.schema_name]
        df = pd.DataFrame(matrix.X, columns=schema.column_names)
        df.insert(0, "domain", matrix.domains if matrix.domains else [""] * matrix.rows)
        df["label"] = matrix.y.astype(np.int64)
        df["source_tag"] = matrix.source_tags if matrix.source_tags else [""] * matrix.rows
        path.parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(path, index=False)

    def detect_schema(self, columns) -> FeatureSchemaEnum:
        names = [c for c in columns if c not in ("domain", "label", "source_tag")]
        for schema in SCHEMAS.values():
            if schema.column_names == names:
                return schema.name
        raise SchemaMismatch(f"Cabeçalho não corresponde a nenhum esquema conhecido ({len(names)} colunas)")

    def load(self, path: Path, expected: Optional[FeatureSchemaEnum] = None) -> FeatureMatrix:
        try:
            df = pd.read_csv(
                path,
                float_precision="round_trip",
                dtype={"domain": str, "source_tag": str},
                keep_default_na=False,
            )
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise DatasetIoError(f"Erro ao ler matriz '{path}': {e}") from e

        schema_name = self.detect_schema(df.columns)
        if expected is not None and schema_name != FeatureSchemaEnum(expected):
            raise SchemaMismatch(
                f"Matriz '{path}' usa o esquema {schema_name.value}, esperado {FeatureSchemaEnum(expected).value}"
            )

        schema = SCHEMAS[schema_name]
        X = df[schema.column_names].to_numpy(dtype=np.float64)
        y = df["label"].to_numpy(dtype=np.int64) if "label" in df else np.zeros(len(df), dtype=np.int64)
        domains = df["domain"].tolist() if "domain" in df else []
        tags = df["source_tag"].tolist() if "source_tag" in df else []
        return FeatureMatrix(schema_name, X, y, domains, tags)


matrix = CRUDMatrix()
