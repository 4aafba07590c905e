#! Alternating sum of divergence-family members along a rapid schedule

from psflab.analysis.psf import FunctionPair
from psflab.constructions.counterexamples import diagonal_function, rapid_schedule
from psflab.constants import experiment as ec
from psflab.errors import UserError
from psflab.families.base import PairFamily

DEFAULT_J = 3


class DiagonalPairFamily(PairFamily):
  """diagonal_function over `schedule`, or over rapid_schedule(J, cap, rate)."""

  name = "diagonal"

  def schedule(self):
    if self.params.get("schedule"):
      return [int(n) for n in self.params["schedule"]]
    return rapid_schedule(int(self.params.get("J", DEFAULT_J)),
                          int(self.params.get("cap", ec.SCHEDULE_CAP)),
                          float(self.params.get("rate", ec.SCHEDULE_RATE)))

  def pair(self, index: int = 0) -> FunctionPair:
    if self.point is None:
      raise UserError("the diagonal family needs a parameter point")
    schedule = self.schedule()
    J = int(self.params.get("J", len(schedule)))
    return diagonal_function(self.point, min(J, len(schedule)), schedule, self.kernel)
