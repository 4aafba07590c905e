from typing import Any, Dict, Optional

from psflab.analysis.bump import BumpKernel, default_kernel
from psflab.analysis.psf import FunctionPair
from psflab.analysis.regime import ParamPoint
from psflab.analysis.stepfn import StepSpec
from psflab.constants import experiment as ec


class PairFamily:
  """Base class for named families of Fourier pairs.

  Subclasses live in `psflab.families.<name>` and are found by `load_family`.
  Member `index` of a family is a deterministic function of (params, seed, index).
  """

  name = ""

  def __init__(self,
               point: Optional[ParamPoint] = None,
               kernel: Optional[BumpKernel] = None,
               seed: int = ec.DEFAULT_SEED,
               **params: Any) -> None:
    self.point = point
    self.kernel = kernel or default_kernel()
    self.seed = seed
    self.params = params

  def pair(self, index: int = 0) -> FunctionPair:
    raise NotImplementedError()

  def spec(self, index: int = 0) -> StepSpec:
    """The step spec behind member `index`, for families built from one."""
    raise NotImplementedError(f"family '{self.name}' is not a single step function")

  def describe(self) -> Dict[str, Any]:
    out = {"family": self.name, "seed": self.seed, **self.params}
    if self.point is not None:
      out["point"] = str(self.point)
    return out
