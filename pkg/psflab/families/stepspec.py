#! Step functions from random or stored coefficients

import json
from typing import Tuple

import numpy as np

from psflab.analysis.psf import FunctionPair, stepspec_pair
from psflab.analysis.stepfn import StepSpec
from psflab.constants import experiment as ec
from psflab.families.base import PairFamily
from psflab.schema.files import validate_spec

DEFAULT_LENGTH = 64


def linear_stepspec(rng: np.random.Generator, N: int) -> StepSpec:
  """c_k uniform on [-1, 1], Delta_k = 1 + k."""
  c = rng.uniform(-1.0, 1.0, size=N + 1)
  return StepSpec(c, 1.0 + np.arange(N + 1, dtype=float))


def random_stepspec(rng: np.random.Generator,
                    max_N: int = ec.RANDOM_SPEC_MAX_N,
                    b_range: Tuple[float, float] = ec.RANDOM_SPEC_B_RANGE,
                    max_delta: float = ec.RANDOM_SPEC_MAX_DELTA) -> StepSpec:
  """Delta_k = 1 + k^B with B uniform in b_range and N cut so that Delta_N <= max_delta.

  Coefficients are uniform on [-1, 1].
  """
  B = float(rng.uniform(*b_range))
  N = int(rng.integers(1, max_N + 1))
  N = max(1, min(N, int(np.floor((max_delta - 1.0)**(1.0 / B)))))
  k = np.arange(N + 1, dtype=float)
  return StepSpec(rng.uniform(-1.0, 1.0, size=N + 1), 1.0 + k**B)


def load_stepspec(path: str) -> StepSpec:
  """Read a {"c": [...], "delta": [...]} JSON file."""
  with open(path, encoding="utf-8") as f:
    return StepSpec.from_dict(validate_spec(json.load(f)))


class StepSpecPairFamily(PairFamily):
  """(F, Fhat) of step specs.

  With `path` every member is the stored spec; otherwise member i draws c_k from the
  i-th child of SeedSequence(seed) with Delta_k = 1 + k and `length` + 1 terms.
  """

  name = "stepspec"

  def spec(self, index: int = 0) -> StepSpec:
    path = self.params.get("path")
    if path:
      return load_stepspec(path)
    length = int(self.params.get("length", DEFAULT_LENGTH))
    child = np.random.SeedSequence(self.seed).spawn(index + 1)[index]
    return linear_stepspec(np.random.default_rng(child), length)

  def pair(self, index: int = 0) -> FunctionPair:
    return stepspec_pair(self.spec(index), self.kernel, name=f"stepspec_{index}")
