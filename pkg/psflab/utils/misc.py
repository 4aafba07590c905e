import math
from typing import Iterable, List, Sequence, Union

import numpy as np

from psflab.errors import UserError


class Chunker:
  """Split an input sequence into small chunks."""

  def __init__(self, seq: Sequence, size: int) -> None:
    self.seq = seq
    self.size = size

  def chunk(self) -> List[Sequence]:
    """Chunk input sequence."""
    return [self.seq[pos:pos + self.size] for pos in range(0, len(self.seq), self.size)]


def compensated_sum(values: Union[Iterable, np.ndarray]) -> Union[float, complex]:
  """Exactly rounded sum of real or complex terms.

  Real and imaginary parts are accumulated separately with `math.fsum`.
  """
  arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values).ravel()
  if np.iscomplexobj(arr):
    return complex(math.fsum(arr.real), math.fsum(arr.imag))
  return math.fsum(arr.astype(float))


def parse_int_list(text: str) -> List[int]:
  """Read "16,32,64" or a range "16:1024:x2" (geometric) / "1:10:1" (arithmetic).

  Raises:
      UserError: for anything else.
  """
  try:
    return _int_list(text.strip())
  except ValueError as e:
    raise UserError(f"cannot read '{text}' as a list of integers: {e}") from e


def _int_list(text: str) -> List[int]:
  if ":" in text:
    start, stop, step = text.split(":")
    start, stop = int(start), int(stop)
    out = []
    if step.startswith("x"):
      factor = int(step[1:])
      if factor < 2 or start < 1:
        raise ValueError(f"invalid geometric range '{text}'")
      value = start
      while value <= stop:
        out.append(value)
        value *= factor
    else:
      out = list(range(start, stop + 1, int(step)))
    return out
  return [int(part) for part in text.split(",") if part.strip()]


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
  """Least-squares slope of log(y) against log(x)."""
  x = np.log(np.asarray(xs, dtype=float))
  y = np.log(np.maximum(np.asarray(ys, dtype=float), np.finfo(float).tiny))
  if len(x) < 2:
    raise ValueError("slope fit needs at least two points")
  slope, _ = np.polyfit(x, y, 1)
  return float(slope)


def count_monotone_violations(values: Sequence[float], floor: float = 0.0) -> int:
  """Number of steps where a sequence fails to decrease.

  Steps where both neighbours are already below `floor` are not counted.
  """
  count = 0
  for prev, cur in zip(values[:-1], values[1:]):
    if prev < floor and cur < floor:
      continue
    if cur > prev:
      count += 1
  return count
