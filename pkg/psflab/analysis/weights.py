"""Sufficient conditions for the summation formula under general weights.

For even non-decreasing weights u (space side) and v (frequency side) and scale
sequences Delta, Delta~, four sequences indexed by N must stay bounded:

  1. (sum_{k<=N} ||u^-1(x) phi((x-k) Delta_k)||_{p'}^{p'} Delta_k^{p'})^{1/p'}
  2. (sum_{k<N} v^{-q'}(Delta_k/2) (Delta_{k+1}-Delta_k) ||D_k||_{q'}^{q'})^{1/q'}
     + (int_{Delta_N/2-1}^inf v^{-q'})^{1/q'} ||D_N||_{q'}
  3. as 1 with v, Delta~ and q'
  4. as 2 with u, Delta~ and p'

A finite sweep can never prove a supremum finite; the verdict fits log-log slopes.
"""

import functools
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from psflab.analysis.bump import BumpKernel
from psflab.analysis.norms import (Monotone, PolyKind, WeightKind, WeightSpec, constant_weight,
                                   cumulative_torus_norms, phi_sample, shifted_power_weight)
from psflab.analysis.regime import (INF, Extended, ParamPoint, PsfTag, classify_psf, conjugate,
                                    critical_exponents, format_extended, to_extended)
from psflab.analysis.stepfn import StepSpec
from psflab.constants import experiment as ec
from psflab.errors import IntegrationError, UserError
from psflab.utils.logging import get_logger
from psflab.utils.misc import loglog_slope
from psflab.utils.parallel import ordered_map

logger = get_logger(logger_level="INFO", name=__name__)

DENSITY_HYPOTHESIS = "Schwartz functions are dense in the weighted space (not checked)"
MONOTONE_PROBE = np.linspace(0.0, 1e3, 4097)
PQ_CHOICES = (Fraction(4, 3), Fraction(3, 2), Fraction(2), Fraction(3), Fraction(4))
EXPONENT_CHOICES = tuple(Fraction(k, 4) for k in range(1, 17))
B_LIMIT = Fraction(39, 10)
HOLDS_MARGIN = 1
FAILS_SLOPE = Fraction(3, 10)
GROWTH_FRACTION = 0.5
MAX_DRAWS = 100000


class Verdict(str, Enum):
  LikelyBounded = "LikelyBounded"
  Growing = "Growing"
  Inconclusive = "Inconclusive"


@dataclass(frozen=True)
class PowerScales:
  """Delta_k = 1 + k^B."""
  B: float

  def __call__(self, k) -> np.ndarray:
    return 1.0 + np.asarray(k, dtype=float)**self.B

  @property
  def name(self) -> str:
    return f"1+k^{self.B:.6g}"


@dataclass
class WeightPair:
  """Weights u, v and the scale generators Delta, Delta~ (index array -> scales)."""
  u: WeightSpec
  v: WeightSpec
  delta: Callable[[np.ndarray], np.ndarray]
  delta_tilde: Callable[[np.ndarray], np.ndarray]

  def __post_init__(self):
    _require_even_non_decreasing(self.u, "u")
    _require_even_non_decreasing(self.v, "v")

  def scales(self, tilde: bool, K: int) -> np.ndarray:
    """Delta_0..Delta_K (or Delta~), validated like a StepSpec's scales."""
    gen = self.delta_tilde if tilde else self.delta
    delta = np.asarray(gen(np.arange(K + 1)), dtype=float)
    spec = StepSpec(np.zeros(K + 1), delta)
    spec.require_monotone("the weights checker")
    return spec.delta

  def scaled(self, u_factor: float = 1.0, v_factor: float = 1.0) -> "WeightPair":
    return WeightPair(self.u.scaled(u_factor), self.v.scaled(v_factor), self.delta, self.delta_tilde)


def _require_even_non_decreasing(w: WeightSpec, name: str) -> None:
  if not w.even:
    raise UserError(f"weight {name} must be even")
  if w.monotone == Monotone.NonIncreasing:
    raise UserError(f"weight {name} = {w.name} must be non-decreasing")
  if w.kind == WeightKind.General:
    values = w(MONOTONE_PROBE)
    if np.any(np.diff(values) < -1e-12 * np.abs(values).max()):
      raise UserError(f"weight {name} = {w.name} decreases on [0, 1000]")


def power_pair(point: ParamPoint, B: Optional[float] = None) -> WeightPair:
  """u = (1+|x|)^alpha, v = (1+|xi|)^beta, Delta_k = 1 + k^B, Delta~_k = 1 + k^(1/B).

  Without B the geometric mean of the two critical exponents is used, which lies
  strictly between them whenever they differ.
  """
  if B is None:
    B = default_scale_exponent(point)
  if not B > 0:
    raise UserError(f"scale exponent must be positive, got {B}")
  return WeightPair(
      shifted_power_weight(point.alpha), shifted_power_weight(point.beta), PowerScales(float(B)),
      PowerScales(1.0 / float(B)))


def default_scale_exponent(point: ParamPoint) -> float:
  lo, hi = critical_exponents(point)
  if hi is INF:
    return 2.0 * float(lo) if lo > 0 else 1.0
  if lo == 0:
    return float(hi) / 2.0
  return math.sqrt(float(lo) * float(hi))


def constant_pair() -> WeightPair:
  """u = v = 1 with Delta_k = Delta~_k = 1 + k."""
  return WeightPair(constant_weight(), constant_weight(), PowerScales(1.0), PowerScales(1.0))


@functools.lru_cache(maxsize=32)
def dirichlet_norms(K: int, r: Extended) -> np.ndarray:
  """||D_k||_{L^r(T)} for k = 0..K.

  |D_k| is the modulus of the 2k+1 term partial sum of the all-ones series, so one
  cumulative table gives every k.
  """
  table = cumulative_torus_norms(np.ones(2 * K + 1), r, PolyKind.Head)
  return table.values[0::2]


def _phi_terms(w: WeightSpec, delta: np.ndarray, r: Extended, kernel: BumpKernel) -> np.ndarray:
  """Per-k terms of the phi conditions (1 and 3)."""
  y, phi, dy = phi_sample(kernel)
  inv = w.power(-1)
  if r is INF:
    return np.array([d * float(np.max(inv(k + y / d) * np.abs(phi))) for k, d in enumerate(delta)])
  rf = float(r)
  phi_r = np.abs(phi)**rf
  # ||inv(x) phi((x-k) d)||_r^r d^r, with x = k + y/d
  return np.array([
      d**(rf - 1.0) * float(np.sum(inv(k + y / d)**rf * phi_r)) * dy for k, d in enumerate(delta)
  ])


def _phi_condition(terms: np.ndarray, r: Extended, N_list: Sequence[int]) -> List[float]:
  if r is INF:
    return [float(np.max(terms[:N + 1])) for N in N_list]
  rf = float(r)
  return [math.fsum(terms[:N + 1])**(1.0 / rf) for N in N_list]


def _dirichlet_condition(w: WeightSpec, delta: np.ndarray, r: Extended,
                         N_list: Sequence[int]) -> List[float]:
  """Values of the Dirichlet conditions (2 and 4) at every N."""
  norms = dirichlet_norms(int(max(N_list)), r)
  half = delta / 2.0
  out = []
  if r is INF:
    head_terms = norms[:-1] / w(half[:-1])
    for N in N_list:
      head = float(np.max(head_terms[:N])) if N else 0.0
      tail = norms[N] / float(w(max(half[N] - 1.0, 0.0)))
      out.append(head + tail)
    return out
  rf = float(r)
  head_terms = w(half[:-1])**-rf * np.diff(delta) * norms[:-1]**rf
  for N in N_list:
    head = math.fsum(head_terms[:N])**(1.0 / rf) if N else 0.0
    tail = w.integral(half[N] - 1.0, math.inf, -rf)**(1.0 / rf) * norms[N]
    out.append(head + tail)
  return out


def corollary_supremum(pair: WeightPair, which: int, p, q, N_list: Sequence[int],
                       kernel: BumpKernel) -> List[float]:
  """Value of condition `which` (1..4) at each N of N_list.

  Raises:
      UserError: for an unknown condition or a non-monotone weight.
      IntegrationError: when a weight tail integral diverges.
  """
  if which not in (1, 2, 3, 4):
    raise UserError(f"condition must be 1, 2, 3 or 4, got {which}")
  N_list = [int(N) for N in N_list]
  if not N_list or min(N_list) < 0:
    raise UserError("N_list must be a non-empty list of non-negative integers")
  pconj, qconj = conjugate(to_extended(p)), conjugate(to_extended(q))
  K = max(N_list)
  tilde = which in (3, 4)
  delta = pair.scales(tilde, K)
  if which == 1:
    return _phi_condition(_phi_terms(pair.u, delta, pconj, kernel), pconj, N_list)
  if which == 3:
    return _phi_condition(_phi_terms(pair.v, delta, qconj, kernel), qconj, N_list)
  if which == 2:
    return _dirichlet_condition(pair.v, delta, qconj, N_list)
  return _dirichlet_condition(pair.u, delta, pconj, N_list)


@dataclass
class WeightsReport:
  tag: Verdict
  N_list: List[int]
  values: Dict[int, List[float]]
  slopes: Dict[int, float]
  unchecked_hypotheses: List[str] = field(default_factory=lambda: [DENSITY_HYPOTHESIS])

  def to_frame(self) -> pd.DataFrame:
    rows = []
    for which in sorted(self.values):
      for N, value in zip(self.N_list, self.values[which]):
        rows.append({"condition": which, "N": N, "value": value, "slope": self.slopes[which]})
    return pd.DataFrame(rows, columns=["condition", "N", "value", "slope"])

  def to_dict(self) -> Dict:
    return {
        "verdict": self.tag.value,
        "slopes": {str(k): v for k, v in self.slopes.items()},
        "unchecked_hypotheses": self.unchecked_hypotheses,
    }


def verdict(pair: WeightPair, p, q, N_list: Sequence[int], kernel: BumpKernel,
            growth_threshold: float = ec.GROWTH_THRESHOLD,
            threads: Optional[int] = None) -> WeightsReport:
  """Slope fit on the four sequences.

  All slopes below `growth_threshold` is LikelyBounded, any slope above twice the
  threshold is Growing, anything else Inconclusive. A divergent tail integral counts
  as unbounded growth.
  """
  N_list = [int(N) for N in N_list]
  if len(N_list) < 4:
    raise UserError(f"the verdict needs at least 4 values of N, got {len(N_list)}")
  if min(N_list) < 1:
    raise UserError("the slope fit needs N >= 1")

  def run(which: int) -> Tuple[List[float], float]:
    try:
      values = corollary_supremum(pair, which, p, q, N_list, kernel)
    except IntegrationError as e:
      logger.info(f"condition {which}: {e}")
      return [math.inf] * len(N_list), math.inf
    return values, loglog_slope(N_list, values)

  results = ordered_map(run, [1, 2, 3, 4], threads=threads, desc="conditions")
  values = {which: res[0] for which, res in zip((1, 2, 3, 4), results)}
  slopes = {which: res[1] for which, res in zip((1, 2, 3, 4), results)}
  if all(s < growth_threshold for s in slopes.values()):
    tag = Verdict.LikelyBounded
  elif any(s > 2 * growth_threshold for s in slopes.values()):
    tag = Verdict.Growing
  else:
    tag = Verdict.Inconclusive
  logger.warning(f"weights verdict {tag.value}; unchecked hypothesis: {DENSITY_HYPOTHESIS}")
  return WeightsReport(tag=tag, N_list=N_list, values=values, slopes=slopes)


def decay_margins(point: ParamPoint, B: Fraction) -> Tuple[Fraction, Fraction, Fraction, Fraction]:
  """How far each power-weight term sequence decays beyond k^-1, conditions 1..4.

  A positive margin means the series converges; for a sup (exponent inf) the margin
  is the decay rate of the terms themselves. Uses ||D_k||_r ~ k^(1 - 1/r).
  """
  B = Fraction(B)
  pc, qc = conjugate(point.p), conjugate(point.q)

  def phi_margin(a: Fraction, r: Extended, scale: Fraction) -> Fraction:
    if r is INF:
      return a - scale
    return a * r - 1 - scale * (r - 1)

  def dirichlet_margin(b: Fraction, r: Extended, scale: Fraction) -> Fraction:
    if r is INF:
      return b * scale - 1
    return scale * (b * r - 1) - (r - 1)

  return (phi_margin(point.alpha, pc, B), dirichlet_margin(point.beta, qc, B),
          phi_margin(point.beta, qc, 1 / B), dirichlet_margin(point.alpha, pc, 1 / B))


def predicted_slopes(point: ParamPoint, B: Fraction) -> Tuple[Fraction, ...]:
  """Log-log growth of each condition when its series diverges (margin / exponent)."""
  pc, qc = conjugate(point.p), conjugate(point.q)
  exponents = (pc, qc, qc, pc)
  return tuple(-m if r is INF else -m / r for m, r in zip(decay_margins(point, B), exponents))


@dataclass(frozen=True)
class SampledPoint:
  point: ParamPoint
  B: Fraction

  def to_dict(self) -> Dict[str, str]:
    out = self.point.to_dict()
    out["B"] = format_extended(self.B)
    return out


EXPECTED_VERDICT = {PsfTag.Holds: Verdict.LikelyBounded, PsfTag.Fails: Verdict.Growing}


def sample_points(regime: PsfTag, count: int, seed: int = ec.DEFAULT_SEED) -> List[SampledPoint]:
  """Seeded power-weight points of one regime.

  Points are drawn by regime alone. B is the default scale exponent, and B and 1/B
  must stay inside [1/3.9, 3.9] so the scales respect the ratio bound.
  """
  regime = PsfTag(regime)
  if regime not in (PsfTag.Holds, PsfTag.Fails):
    raise UserError(f"sample_points draws Holds or Fails points, not {regime.value}")
  rng = np.random.default_rng(seed)
  out: List[SampledPoint] = []
  seen = set()
  if count <= 0:
    return out
  for _ in range(MAX_DRAWS):
    p, q = (PQ_CHOICES[i] for i in rng.integers(0, len(PQ_CHOICES), size=2))
    alpha, beta = (EXPONENT_CHOICES[i] for i in rng.integers(0, len(EXPONENT_CHOICES), size=2))
    point = ParamPoint(p, q, alpha, beta)
    if str(point) in seen or classify_psf(point).tag != regime:
      continue
    B = Fraction(default_scale_exponent(point)).limit_denominator(1000)
    if not 1 / B_LIMIT <= B <= B_LIMIT:
      continue
    seen.add(str(point))
    out.append(SampledPoint(point, B))
    if len(out) == count:
      return out
  raise UserError(f"could only draw {len(out)} of {count} {regime.value} points")


def desk_resolved(sample: SampledPoint) -> bool:
  """Whether the asymptotic slopes of a point clear the verdict thresholds at desk scale.

  Holds points need every decay margin >= 1, Fails points a predicted slope >= 3/10.
  """
  tag = classify_psf(sample.point).tag
  if tag == PsfTag.Holds:
    return min(decay_margins(sample.point, sample.B)) >= HOLDS_MARGIN
  if tag == PsfTag.Fails:
    return max(predicted_slopes(sample.point, sample.B)) >= FAILS_SLOPE
  return False


def check_consistency(samples: Sequence[SampledPoint], N_list: Sequence[int], kernel: BumpKernel,
                      threads: Optional[int] = None) -> pd.DataFrame:
  """Verdict of each sampled point next to its regime and its predicted growth.

  `agrees` compares the verdict with the regime's expected tag. `growth_ok` holds unless
  a resolved Fails point grows slower than GROWTH_FRACTION of its predicted slope on the
  condition predicted to grow fastest.
  """
  rows = []
  for sample in samples:
    pair = power_pair(sample.point, float(sample.B))
    report = verdict(pair, sample.point.p, sample.point.q, N_list, kernel, threads=threads)
    regime = classify_psf(sample.point).tag
    if regime not in EXPECTED_VERDICT:
      raise UserError(f"consistency is defined for Holds and Fails points, not {regime.value}")
    resolved = desk_resolved(sample)
    predicted = predicted_slopes(sample.point, sample.B)
    fastest = max(range(4), key=lambda i: (predicted[i], -i))
    measured = float(report.slopes[fastest + 1])
    growth_ok = not (resolved and regime == PsfTag.Fails and
                     measured < GROWTH_FRACTION * float(predicted[fastest]))
    row = sample.to_dict()
    row.update({
        "regime": regime.value,
        "expected": EXPECTED_VERDICT[regime].value,
        "verdict": report.tag.value,
        "resolved": resolved,
        "agrees": report.tag == EXPECTED_VERDICT[regime],
        "predicted_slope": float(predicted[fastest]),
        "measured_slope": measured,
        "growth_ok": growth_ok,
        **{f"slope_{k}": float(v) for k, v in report.slopes.items()},
    })
    rows.append(row)
  return pd.DataFrame(rows)
