import glob
import json
import os

import pytest
from schema import SchemaError

from psflab.schema.files import (get_config_schema, get_manifest_schema, get_weight_table_schema,
                                 validate_point_field, validate_sequence, validate_signs,
                                 validate_spec)

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def _load(path):
  with open(path, encoding="utf-8") as f:
    return json.load(f)


@pytest.mark.parametrize("path", sorted(glob.glob(os.path.join(FIXTURES, "spec_*.json"))))
def test_good_specs(path):
  data = validate_spec(_load(path))
  assert len(data["c"]) == len(data["delta"])


@pytest.mark.parametrize("path", sorted(glob.glob(os.path.join(FIXTURES, "bad_spec_*.json"))))
def test_bad_specs(path):
  with pytest.raises(SchemaError):
    validate_spec(_load(path))


@pytest.mark.parametrize("data", [
    {"c": [], "delta": []},
    {"c": [1.0], "delta": [0.0]},
    {"c": [True], "delta": [1.0]},
    {"c": [float("nan")], "delta": [1.0]},
    {"c": [1.0], "delta": [1.0], "extra": 1},
])
def test_spec_rejects(data):
  with pytest.raises(SchemaError):
    validate_spec(data)


def test_signs(fixture_path):
  assert validate_signs(_load(fixture_path("signs.json"))) == [1, -1, 1, 1, -1]


@pytest.mark.parametrize("data", [{"signs": []}, {"signs": [1, 0]}, {"signs": [1.0, -1.0]}, [1, -1]])
def test_bad_signs(data):
  with pytest.raises(SchemaError):
    validate_signs(data)


def test_sequences(fixture_path):
  coeffs = validate_sequence(_load(fixture_path("coeffs.json")))
  assert len(coeffs) == 9
  with pytest.raises(SchemaError):
    validate_sequence([1.0, -1.0], nonnegative=True)
  with pytest.raises(SchemaError):
    validate_sequence([])


def test_weight_table(fixture_path):
  data = get_weight_table_schema().validate(_load(fixture_path("weights_table.json")))
  assert data["tail_exponent"] == 1.0
  assert get_weight_table_schema().validate({"x": [0, 1], "w": [1, 1]})["tail_exponent"] == 0.0


@pytest.mark.parametrize("data", [
    {"x": [1, 2], "w": [1, 2]},
    {"x": [0, 2, 1], "w": [1, 2, 3]},
    {"x": [0, 1], "w": [2, 1]},
    {"x": [0, 1], "w": [0, 1]},
    {"x": [0], "w": [1]},
])
def test_bad_weight_tables(data):
  with pytest.raises(SchemaError):
    get_weight_table_schema().validate(data)


@pytest.mark.parametrize("text", ["2", "3/4", "0.5", "inf", " 1 ", "+2"])
def test_point_fields(text):
  assert validate_point_field(text) == text


@pytest.mark.parametrize("text", ["-1", "two", "1/", "inf/2", ""])
def test_bad_point_fields(text):
  with pytest.raises(SchemaError):
    validate_point_field(text)


class TestConfigSchema:

  def test_upper_cases_level(self):
    assert get_config_schema().validate({"log_level": "debug"}) == {"log_level": "DEBUG"}

  @pytest.mark.parametrize("data", [
      {"seed": -1},
      {"seed": 2**64},
      {"threads": 0},
      {"tol": 0.0},
      {"log_level": "verbose"},
      {"verify": {"suite": "slow"}},
      {"verify": {"criteria": [15]}},
      {"verify": {"random_specs": 1}},
      {"colour": "blue"},
  ])
  def test_rejects(self, data):
    with pytest.raises(SchemaError):
      get_config_schema().validate(data)


def test_manifest_schema():
  manifest = {"lab_version": "1.0.0", "python_version": "3.10.1", "os": "Linux", "command": "verify",
              "seed": 0, "config": {}, "outputs": ["a.csv"], "extra": [1]}
  assert get_manifest_schema().validate(manifest)["command"] == "verify"
  with pytest.raises(SchemaError):
    get_manifest_schema().validate({**manifest, "command": ""})
