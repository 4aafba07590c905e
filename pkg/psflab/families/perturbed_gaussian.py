#! Gaussian plus a small step function

from psflab.analysis.psf import FunctionPair, perturbed_gaussian_pair
from psflab.analysis.stepfn import StepSpec
from psflab.families.base import PairFamily
from psflab.families.stepspec import StepSpecPairFamily

DEFAULT_EPS = 0.1
DEFAULT_LENGTH = 16


class PerturbedGaussianPairFamily(PairFamily):
  """exp(-pi t x^2) + eps F_i with F_i the i-th seeded step spec (Delta_k = 1 + k)."""

  name = "perturbed_gaussian"

  def spec(self, index: int = 0) -> StepSpec:
    steps = StepSpecPairFamily(kernel=self.kernel, seed=self.seed,
                               length=self.params.get("length", DEFAULT_LENGTH),
                               path=self.params.get("path"))
    return steps.spec(index)

  def pair(self, index: int = 0) -> FunctionPair:
    return perturbed_gaussian_pair(
        float(self.params.get("t", 1.0)), float(self.params.get("eps", DEFAULT_EPS)),
        self.spec(index), self.kernel)
