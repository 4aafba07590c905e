import json
import os
from typing import Any, Dict, List, Optional

import pandas as pd
from packaging.version import Version
from schema import SchemaError

from psflab.errors import UserError
from psflab.schema.files import get_manifest_schema
from psflab.utils.logging import get_logger
from psflab.versions import LAB_VERSION, OS_VER, PYTHON_VERSION

logger = get_logger(logger_level="INFO", name=__name__)

MANIFEST_NAME = "manifest.json"


def write_csv(frame: pd.DataFrame, path: str) -> None:
  """Locale independent, byte reproducible CSV."""
  frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n", encoding="utf-8")


def dumps_json(data: Any) -> str:
  return json.dumps(data, indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_json(data: Any, path: str) -> None:
  with open(path, "w", encoding="utf-8", newline="\n") as f:
    f.write(dumps_json(data))


def csv_body(path: str) -> bytes:
  """File bytes after the header line."""
  with open(path, "rb") as f:
    data = f.read()
  return data.split(b"\n", 1)[1] if b"\n" in data else b""


class RecordWriter:
  """Collects the outputs of one run and writes manifest.json next to them.

  Usage:
      with RecordWriter(out_dir, "psf-run", config.manifest_echo(), seed) as records:
        records.table("series.csv", frame)
  """

  def __init__(self,
               out_dir: str,
               command: str,
               config: Dict[str, Any],
               seed: int,
               kernel: Optional[Dict[str, Any]] = None) -> None:
    self.out_dir = out_dir
    self.command = command
    self.config = config
    self.seed = seed
    self.kernel = kernel
    self.outputs: List[str] = []

  def __enter__(self) -> "RecordWriter":
    os.makedirs(self.out_dir, exist_ok=True)
    return self

  def __exit__(self, exc_type, exc_value, traceback) -> None:
    # written even when a check failed
    self.write_manifest()

  def path(self, name: str) -> str:
    return name if os.path.isabs(name) else os.path.join(self.out_dir, name)

  def _register(self, name: str) -> str:
    path = self.path(name)
    parent = os.path.dirname(path)
    if parent:
      os.makedirs(parent, exist_ok=True)
    if name not in self.outputs:
      self.outputs.append(name)
    return path

  def table(self, name: str, frame: pd.DataFrame) -> str:
    path = self._register(name)
    write_csv(frame, path)
    logger.debug(f"wrote {len(frame)} rows to {path}")
    return path

  def document(self, name: str, data: Any) -> str:
    path = self._register(name)
    write_json(data, path)
    return path

  def manifest(self) -> Dict[str, Any]:
    data = {
        "lab_version": LAB_VERSION,
        "python_version": PYTHON_VERSION,
        "os": OS_VER,
        "command": self.command,
        "seed": int(self.seed),
        "config": self.config,
        "outputs": list(self.outputs),
    }
    if self.kernel is not None:
      data["kernel"] = self.kernel
    return data

  def write_manifest(self) -> str:
    path = self.path(MANIFEST_NAME)
    write_json(self.manifest(), path)
    return path


def read_manifest(path: str) -> Dict[str, Any]:
  """Load a manifest and check that this build can replay it.

  A manifest from a different major version, or from a newer build, is rejected.
  """
  if os.path.isdir(path):
    path = os.path.join(path, MANIFEST_NAME)
  try:
    with open(path, encoding="utf-8") as f:
      data = get_manifest_schema().validate(json.load(f))
  except (OSError, ValueError, SchemaError) as e:
    raise UserError(f"cannot read manifest '{path}': {e}") from e

  stored, current = Version(data["lab_version"]), Version(LAB_VERSION)
  if stored.major != current.major or stored > current:
    raise UserError(f"manifest '{path}' was written by psflab {stored}, "
                    f"which this build ({current}) cannot replay")
  if stored != current:
    logger.warning(f"replaying a manifest from psflab {stored} on {current}")
  return data
