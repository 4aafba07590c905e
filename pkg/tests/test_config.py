import pytest

from psflab.constants.experiment import DEFAULT_SEED, DEFAULT_THREADS, DEFAULT_TOL
from psflab.errors import UserError
from psflab.experiments.config import GlobalConfig, VerifyConfig, build_config, read_config


def test_defaults():
  config = build_config()
  assert isinstance(config, GlobalConfig)
  assert isinstance(config.verify, VerifyConfig)
  assert (config.seed, config.threads, config.tol) == (DEFAULT_SEED, DEFAULT_THREADS, DEFAULT_TOL)
  assert config.verify.suite == "primary"
  assert config.verify.criteria == []


def test_yaml(fixture_path):
  config = build_config(fixture_path("config.yml"))
  assert config.seed == 11
  assert config.threads == 2
  assert config.tol == pytest.approx(1e-8)
  assert config.log_level == "WARNING"
  assert config.verify.suite == "fast"
  assert config.verify.criteria == [1, 2]


def test_overrides_win(fixture_path):
  config = build_config(fixture_path("config.yml"), {"seed": 5, "verify": {"criteria": [9]}})
  assert config.seed == 5
  assert config.threads == 2
  assert config.verify.criteria == [9]
  assert config.verify.suite == "fast"


def test_none_overrides_are_skipped(fixture_path):
  config = build_config(fixture_path("config.yml"), {"seed": None, "threads": None,
                                                     "verify": {"suite": None}})
  assert config.seed == 11
  assert config.verify.suite == "fast"


def test_lower_case_level():
  assert build_config(overrides={"log_level": "debug"}).log_level == "DEBUG"


def test_bad_file(fixture_path):
  with pytest.raises(UserError, match="invalid config file"):
    read_config(fixture_path("bad_config.yml"))


def test_bad_override():
  with pytest.raises(UserError, match="invalid option"):
    build_config(overrides={"threads": 0})


def test_empty_yaml(tmp_path):
  path = tmp_path / "empty.yml"
  path.write_text("")
  assert build_config(str(path)).seed == DEFAULT_SEED


def test_manifest_echo():
  echo = build_config(overrides={"seed": 3, "threads": 8, "out_dir": "elsewhere"}).manifest_echo()
  assert echo["seed"] == 3
  assert "threads" not in echo
  assert "out_dir" not in echo
  assert "log_level" not in echo
  assert echo["verify"]["suite"] == "primary"
