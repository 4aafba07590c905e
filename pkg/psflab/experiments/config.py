""" Run configuration classes."""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import yaml
from omegaconf import OmegaConf
from schema import SchemaError

from psflab.constants.experiment import DEFAULT_SEED, DEFAULT_THREADS, DEFAULT_TOL
from psflab.errors import UserError
from psflab.schema.files import get_config_schema

__all__ = ["VerifyConfig", "GlobalConfig", "read_config", "build_config"]

SUITES = ("primary", "fast")


@dataclass
class VerifyConfig:
  """
  Acceptance suite settings.
  Params:
  -------
  suite: "primary" runs every criterion at full size, "fast" a reduced version.
  criteria: criterion numbers to run, empty means all.
  random_specs: random StepSpecs per seed batch in the bound suite (None keeps the suite default).
  weight_points: seeded parameter points per regime in the weights consistency check.
  """
  suite: str = "primary"
  criteria: List[int] = field(default_factory=list)
  random_specs: Optional[int] = None
  weight_points: Optional[int] = None


@dataclass
class GlobalConfig:
  """
  Global run settings shared by every subcommand.
  Params:
  -------
  seed: 64-bit root seed; every random draw is spawned from it.
  threads: worker threads, results never depend on it.
  tol: absolute tolerance for quadrature and series truncation.
  out_dir: directory receiving CSV/JSON outputs and manifest.json.
  log_level: logging level name.
  verify: VerifyConfig
  """
  seed: int = DEFAULT_SEED
  threads: int = DEFAULT_THREADS
  tol: float = DEFAULT_TOL
  out_dir: str = "."
  log_level: str = "INFO"
  verify: VerifyConfig = field(default_factory=VerifyConfig)

  def to_dict(self) -> Dict[str, Any]:
    return asdict(self)

  def manifest_echo(self) -> Dict[str, Any]:
    """Config fields that affect numbers; threads and out_dir are excluded."""
    data = self.to_dict()
    data.pop("threads")
    data.pop("out_dir")
    data.pop("log_level")
    return data


def read_config(path: str) -> Dict[str, Any]:
  """Load and validate a YAML config file."""
  with open(path, encoding="utf-8") as f:
    data = yaml.safe_load(f) or {}
  try:
    return get_config_schema().validate(data)
  except SchemaError as e:
    raise UserError(f"invalid config file '{path}': {e}") from e


def build_config(path: Optional[str] = None,
                 overrides: Optional[Dict[str, Any]] = None) -> GlobalConfig:
  """Defaults, then the YAML file, then command line overrides (None values are skipped)."""
  base = OmegaConf.structured(GlobalConfig)
  layers = [base]
  if path:
    layers.append(OmegaConf.create(read_config(path)))
  if overrides:
    cleaned = _drop_none(overrides)
    try:
      get_config_schema().validate(cleaned)
    except SchemaError as e:
      raise UserError(f"invalid option: {e}") from e
    layers.append(OmegaConf.create(cleaned))
  merged = OmegaConf.merge(*layers)
  config = OmegaConf.to_object(merged)
  if config.verify.suite not in SUITES:
    raise UserError(f"unknown verify suite '{config.verify.suite}', expected one of {SUITES}")
  config.log_level = config.log_level.upper()
  return config


def _drop_none(data: Dict[str, Any]) -> Dict[str, Any]:
  out = {}
  for key, value in data.items():
    if isinstance(value, dict):
      value = _drop_none(value)
      if not value:
        continue
    if value is None:
      continue
    out[key] = value
  return out
