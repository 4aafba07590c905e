#! Gaussian pairs exp(-pi t x^2)

from psflab.analysis.psf import FunctionPair, gaussian_pair
from psflab.families.base import PairFamily

WIDTHS = (1.0, 0.5, 2.0, 0.25, 4.0)


class GaussianPairFamily(PairFamily):
  """Closed-form pairs; member i uses t = WIDTHS[i mod 5] unless `t` is given."""

  name = "gaussian"

  def pair(self, index: int = 0) -> FunctionPair:
    t = self.params.get("t", WIDTHS[index % len(WIDTHS)])
    return gaussian_pair(float(t))
