from pathlib import Path

import pytest
from pydantic import ValidationError

from app.core.config import Settings


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for key in ("DGALAB_CONFIG", "DGALAB_OUTPUT_DIR", "DGALAB_TARGET_FPRS", "DGALAB_MIN_SLD_LEN"):
        monkeypatch.delenv(key, raising=False)


def test_defaults():
    s = Settings.from_file()
    assert s.target_fprs == [0.001, 0.01]
    assert s.train_seed_date == "2018-12-04"
    assert s.test_seed_date == "2019-01-01"
    assert s.valid_tlds_path.exists()


def test_file_values(tmp_path):
    config = tmp_path / "dgalab.conf"
    config.write_text("output_dir = results\nmin_sld_len = 4\ntarget_fprs = 0.0001,0.001,0.01\n")
    s = Settings.from_file(config)
    assert s.output_dir == Path("results")
    assert s.min_sld_len == 4
    assert s.target_fprs == [0.0001, 0.001, 0.01]


def test_environment_beats_file(tmp_path, monkeypatch):
    config = tmp_path / "dgalab.conf"
    config.write_text("output_dir = from-file\n")
    monkeypatch.setenv("DGALAB_OUTPUT_DIR", "from-env")
    assert Settings.from_file(config).output_dir == Path("from-env")


def test_config_path_from_environment(tmp_path, monkeypatch):
    config = tmp_path / "dgalab.conf"
    config.write_text("min_sld_len = 3\n")
    monkeypatch.setenv("DGALAB_CONFIG", str(config))
    assert Settings.from_file().min_sld_len == 3


def test_fprs_must_increase(monkeypatch):
    monkeypatch.setenv("DGALAB_TARGET_FPRS", "0.01,0.001")
    with pytest.raises(ValidationError):
        Settings.from_file()
