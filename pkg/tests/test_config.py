import dataclasses

import pytest

from photonloc.config import (ExperimentConfig, default_config_text, load_config, parse_config)
from photonloc.errors import ConfigError


def test_default_file_matches_dataclass():
    assert load_config(None) == ExperimentConfig()
    text = default_config_text()
    keys = {line.split("=")[0].strip().lstrip("# ") for line in text.splitlines()
            if "=" in line and not line.startswith("# ") or line.startswith("# R =")
            or line.startswith("# kernel_table =")}
    assert {f.name for f in dataclasses.fields(ExperimentConfig)} <= keys


def test_parse_values():
    cfg = parse_config("g = 0.5\nladder = 4, 8\nz_fractions = 0.1,0.3  # comment\n"
                       "master_seed = 0x10\nkernel = half_laplacian\nR = 12\n")
    assert cfg.g == 0.5 and cfg.ladder == (4, 8) and cfg.z_fractions == (0.1, 0.3)
    assert cfg.master_seed == 16 and cfg.R == 12
    assert cfg.kernel_object().kind == "half_laplacian" and cfg.kernel_object().R == 12


def test_round_trip():
    cfg = ExperimentConfig().replace(g=0.25, s_grid=(0.3, 0.6), R=20)
    assert parse_config(cfg.as_text()) == cfg


@pytest.mark.parametrize("text,needle", [
    ("bogus = 1", "unknown key"),
    ("g = 1\ng = 2", "duplicate key"),
    ("g", "expected 'key = value'"),
    ("g = abc", "g: cannot parse"),
    ("g = -1", "g: must be >= 0"),
    ("d = 4", "d: expected"),
    ("kernel = table", "kernel_table: required"),
    ("kernel = cubic", "kernel: expected"),
    ("s_grid = 1.0", "s_grid"),
    ("ladder = 16, 8", "strictly ascending"),
    ("n_realizations = 10", "n_realizations"),
    ("n_energy = 7", "n_energy"),
    ("master_seed = -1", "master_seed"),
    ("dt_factor = 2", "dt_factor"),
])
def test_errors(text, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.cfg")


def test_replace_validates():
    with pytest.raises(ConfigError):
        ExperimentConfig().replace(rho0=0.0)
