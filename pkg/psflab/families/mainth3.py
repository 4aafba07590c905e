#! The divergence family on the equality manifold

from psflab.analysis.psf import FunctionPair, stepspec_pair
from psflab.analysis.stepfn import StepSpec
from psflab.constructions.counterexamples import mainth3_family
from psflab.errors import UserError
from psflab.families.base import PairFamily

DEFAULT_N = 64


class Mainth3PairFamily(PairFamily):
  """F_N of the divergence family; member i doubles N i times."""

  name = "mainth3"

  def spec(self, index: int = 0) -> StepSpec:
    if self.point is None:
      raise UserError("the mainth3 family needs a parameter point")
    return mainth3_family(self.point, int(self.params.get("N", DEFAULT_N)) << index)

  def pair(self, index: int = 0) -> FunctionPair:
    spec = self.spec(index)
    return stepspec_pair(spec, self.kernel, name=f"mainth3_{spec.N}")
