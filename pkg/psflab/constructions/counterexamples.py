"""Step-function families from the divergence and absolute-convergence constructions.

Every constructor re-derives its exponents A and B from the parameter point and
checks the identities that tie them together before building coefficients.
"""

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.special import zeta

from psflab.analysis import psf, stepfn
from psflab.analysis.bump import BumpKernel
from psflab.analysis.norms import (NormResult, SpectralSide, power_weight, sbp_bound_2,
                                   shifted_power_weight, spectral_norm, step_line_norm)
from psflab.analysis.quadrature import adaptive_integrate
from psflab.analysis.regime import (INF, AbsTag, ParamPoint, PsfTag, classify_abs, classify_psf,
                                    format_extended, to_extended)
from psflab.analysis.stepfn import StepSpec
from psflab.constants import experiment as ec
from psflab.errors import CheckFailed, RegimeError, UserError
from psflab.utils.logging import get_logger
from psflab.utils.misc import compensated_sum, loglog_slope
from psflab.utils.parallel import ordered_map

logger = get_logger(logger_level="INFO", name=__name__)


class Support(str, Enum):
  Full = "Full"
  SqrtWindow = "SqrtWindow"


@dataclass(frozen=True)
class FamilyParams:
  """Exponents of a family, derived from its point.

  A = beta/(beta - 1/q') and B = (alpha - 1/p')/(1/p).
  """
  point: ParamPoint
  A: Fraction
  B: Fraction
  p_sharp: int = 0
  support: Support = Support.Full

  def __post_init__(self):
    if not self.A > 1:
      raise ValueError(f"A = {self.A} must exceed 1")

  @property
  def offset(self) -> int:
    return index_offset(self.A, self.B)

  def to_dict(self) -> Dict[str, Any]:
    return {
        **self.point.to_dict(), "A": format_extended(self.A),
        "B": format_extended(self.B),
        "offset": self.offset,
        "p_sharp": self.p_sharp,
        "support": self.support.value
    }


def _exponent_A(point: ParamPoint) -> Fraction:
  if not point.fourier_margin > 0:
    raise RegimeError(f"A = beta/(beta - 1/q') needs beta > 1/q', point {point}")
  return point.beta / point.fourier_margin


def _exponent_B(point: ParamPoint) -> Fraction:
  if point.p is INF:
    raise RegimeError(f"B = (alpha - 1/p')/(1/p) needs finite p, point {point}")
  return point.spatial_margin / point.inv_p


def mainth3_params(point: ParamPoint) -> FamilyParams:
  """A and B on the equality manifold, with both forms of B checked equal."""
  verdict = classify_psf(point)
  if verdict.tag != PsfTag.ConditionalEquality:
    raise RegimeError(f"the divergence family lives on the equality manifold; point {point} is "
                      f"{verdict.tag.value}")
  A, B = _exponent_A(point), _exponent_B(point)
  other = point.inv_q / point.fourier_margin
  if B != other:
    raise RegimeError(f"B = {B} but (1/q)/(beta - 1/q') = {other}")
  return FamilyParams(point, A, B)


def _raw_scale(x: float, A: float, B: float) -> float:
  return x**B * math.log(x + 1.0)**(A - 1.0)


def _shift(k0: int, A: float, B: float) -> float:
  return max(0.0, 1.0 - _raw_scale(float(k0), A, B))


def index_offset(A, B, max_ratio: float = ec.MAX_DELTA_RATIO) -> int:
  """Smallest k0 >= 1 whose shifted scales keep every consecutive ratio within max_ratio.

  raw(x+1)/raw(x) decreases in x and bounds the shifted ratios from the second on, so
  the first ratio and raw(k0+2)/raw(k0+1) decide.
  """
  A, B = float(A), float(B)

  def fits(k0: int) -> bool:
    shift = _shift(k0, A, B)
    first = (_raw_scale(k0 + 1.0, A, B) + shift) / (_raw_scale(float(k0), A, B) + shift)
    later = _raw_scale(k0 + 2.0, A, B) / _raw_scale(k0 + 1.0, A, B)
    return first <= max_ratio and later <= max_ratio

  k0 = 1
  while not fits(k0):
    k0 += 1
  return k0


def _log_family(params: FamilyParams, N: int, signs: Optional[Sequence[float]] = None) -> StepSpec:
  if N < 0:
    raise UserError(f"N must be >= 0, got {N}")
  A, B = float(params.A), float(params.B)
  k0 = params.offset
  kk = np.arange(N + 1, dtype=float) + k0
  logs = np.log(kk + 1.0)
  c = kk**(-1.0 - B) * logs**(-A)
  if signs is not None:
    c = c * _check_signs(signs, N)
  # lifts Delta_0 to 1 when the raw first scale is below it
  shift = _shift(k0, A, B)
  delta = kk**B * logs**(A - 1.0) + shift
  if shift > 0:
    delta[0] = 1.0
  return StepSpec(c, delta)


def _check_signs(signs: Sequence[float], N: int) -> np.ndarray:
  eps = np.asarray(signs, dtype=float)
  if len(eps) != N + 1:
    raise UserError(f"need {N + 1} signs, got {len(eps)}")
  if not np.all(np.abs(eps) == 1.0):
    raise UserError("signs must be +1 or -1")
  return eps


def mainth3_family(point: ParamPoint, N: int) -> StepSpec:
  """c_k = (k+k0)^(-1-B) log(k+k0+1)^-A, Delta_k = (k+k0)^B log(k+k0+1)^(A-1) + shift.

  k0 = index_offset(A, B) keeps consecutive scale ratios within R, and
  shift = max(0, 1 - k0^B log(k0+1)^(A-1)) makes Delta_0 >= 1.

  Example:
      >>> spec = mainth3_family(ParamPoint(2, 2, 1, 1), 4)
      >>> spec.delta[0]
      1.0
  """
  return _log_family(mainth3_params(point), N)


def absolute_sum(spec: StepSpec) -> float:
  """sum_k |c_k| Delta_k."""
  return compensated_sum(np.abs(spec.c) * spec.delta)


def extkah2_params(point: ParamPoint) -> FamilyParams:
  """Exponents for the finite q > 2 absolute-divergence family.

  Needs (alpha - 1/p')(beta - 1/q') = 1/(2p), so that B = (1/2)/(beta - 1/q').
  """
  if point.q is INF or not point.q > 2:
    raise RegimeError(f"this family needs finite q > 2, got q = {format_extended(point.q)}")
  if not point.admissible:
    raise RegimeError(f"point {point} is not admissible")
  if point.product != point.inv_p / 2:
    raise RegimeError(f"the family sits on (alpha - 1/p')(beta - 1/q') = 1/(2p); point {point} has "
                      f"product {format_extended(point.product)}")
  A, B = _exponent_A(point), _exponent_B(point)
  other = Fraction(1, 2) / point.fourier_margin
  if B != other:
    raise RegimeError(f"B = {B} but (1/2)/(beta - 1/q') = {other}")
  return FamilyParams(point, A, B)


def extkah2_family(point: ParamPoint, N: int, signs: Sequence[float]) -> StepSpec:
  """c_k = eps_k/((k+k0)^(1+B) log(k+k0+1)^A) with the scales of the divergence family."""
  spec = _log_family(extkah2_params(point), N, signs)
  logger.debug(f"extkah2 N={N}: sum |c_k| Delta_k = {absolute_sum(spec):.6g}")
  return spec


def extkah2_qinf_params(point: ParamPoint) -> FamilyParams:
  """Exponents for the q = inf family: beta > 1 and (alpha - 1/p')(beta - 1) = 1/(2p)."""
  if point.q is not INF:
    raise RegimeError(f"this family needs q = inf, got q = {format_extended(point.q)}")
  if not point.beta > 1:
    raise RegimeError(f"this family needs beta > 1, got {format_extended(point.beta)}")
  if not point.spatial_margin > 0:
    raise RegimeError(f"point {point} is not admissible")
  if point.spatial_margin * (point.beta - 1) != point.inv_p / 2:
    raise RegimeError(f"the family sits on (alpha - 1/p')(beta - 1) = 1/(2p); point {point} is off it")
  A, B = _exponent_A(point), _exponent_B(point)
  return FamilyParams(point, A, B, p_sharp=1 if point.p == 1 else 0, support=Support.SqrtWindow)


def extkah2_qinf_family(point: ParamPoint, N: int, signs: Sequence[float]) -> StepSpec:
  """c_k = eps_k/(1+k)^(1+B) on ceil(sqrt N) <= k <= N, 0 below.

  Delta_k = 1 + (1+k)^B (log N)^(p#/(4(beta-1))) with p# = 1 for p = 1, else 0.
  """
  params = extkah2_qinf_params(point)
  if N < 2:
    raise UserError(f"the q = inf family needs N >= 2, got {N}")
  eps = _check_signs(signs, N)
  B = float(params.B)
  k1 = np.arange(N + 1, dtype=float) + 1.0
  start = math.isqrt(N - 1) + 1
  c = np.where(np.arange(N + 1) >= start, eps * k1**(-1.0 - B), 0.0)
  power = params.p_sharp / (4.0 * float(point.beta - 1))
  delta = 1.0 + k1**B * math.log(N)**power
  return StepSpec(c, delta)


def qinf_growth_scale(point: ParamPoint, N: int) -> float:
  """(log N)^(p#/(4(beta-1)) + 1), the growth of sum |c_k| Delta_k."""
  params = extkah2_qinf_params(point)
  return math.log(N)**(params.p_sharp / (4.0 * float(point.beta - 1)) + 1.0)


def rapid_schedule(J: int, cap: int = ec.SCHEDULE_CAP, rate: float = ec.SCHEDULE_RATE) -> List[int]:
  """N_j = ceil(exp(exp(rate j + 1))) for j = 1..J, capped at `cap`.

  Entries that would hit the cap twice are dropped with a warning, so the result
  is strictly increasing but may be shorter than J.
  """
  if J < 1 or rate <= 0:
    raise UserError(f"need J >= 1 and rate > 0, got J={J}, rate={rate}")
  out: List[int] = []
  for j in range(1, J + 1):
    exponent = math.exp(rate * j + 1.0)
    value = cap if exponent > math.log(cap) else min(cap, math.ceil(math.exp(exponent)))
    if out and value <= out[-1]:
      logger.warning(f"schedule reached the cap {cap} after {len(out)} terms")
      break
    out.append(int(value))
  return out


def diagonal_function(point: ParamPoint, J: int, schedule: Sequence[int],
                      kernel: BumpKernel) -> psf.FunctionPair:
  """f = sum_{j<=J} ((-1)^j / j^2) F_{N_j} / (log log N_j)^(1/q).

  metadata carries the constituent specs and weights for norm checks.
  """
  params = mainth3_params(point)
  schedule = [int(n) for n in schedule]
  if J < 1 or len(schedule) < J:
    raise UserError(f"need a schedule of at least J={J} entries, got {len(schedule)}")
  schedule = schedule[:J]
  if any(b <= a for a, b in zip(schedule[:-1], schedule[1:])):
    raise UserError(f"schedule must be strictly increasing, got {schedule}")
  if schedule[0] < 3:
    raise UserError("schedule entries must be >= 3 so that log log N_j > 0")
  inv_q = float(point.inv_q)
  specs = [_log_family(params, n) for n in schedule]
  weights = [(-1)**j / j**2 / math.log(math.log(n))**inv_q for j, n in enumerate(schedule, start=1)]
  terms = [psf.stepspec_pair(spec, kernel, name=f"mainth3_{n}") for spec, n in zip(specs, schedule)]
  pair = psf.combine_pairs(terms, weights, name="diagonal")
  pair.metadata.update({"schedule": schedule, "specs": specs, "point": point.to_dict()})
  logger.warning("the alternation of P_{N_k}(f) is only qualitatively visible at desk scale")
  return pair


def diagonal_increments(pair: psf.FunctionPair, threads: Optional[int] = None) -> pd.DataFrame:
  """P_{N_k}(f) along the schedule and the signs of (-1)^k (P_{N_k} - P_{N_{k-1}})."""
  schedule = pair.metadata["schedule"]
  sums = ordered_map(lambda n: float(np.real(psf.partial_sum(pair.f, n))), schedule,
                     threads=threads, desc="diagonal")
  previous = [0.0] + sums[:-1]
  signed = [(-1)**k * (s - prev) for k, (s, prev) in enumerate(zip(sums, previous), start=1)]
  return pd.DataFrame({"k": range(1, len(schedule) + 1), "N_k": schedule, "P_N_f": sums,
                       "signed_increment": signed})


def diagonal_norm_bound(pair: psf.FunctionPair, kernel: BumpKernel, p, alpha) -> float:
  """Triangle-inequality majorant sum_j |weight_j| ||F_{N_j} |x|^alpha||_p.

  The per-term norms are stored in pair.metadata["term_norms"].
  """
  w = power_weight(alpha)
  norms = [step_line_norm(spec, kernel, p, w).value for spec in pair.metadata["specs"]]
  pair.metadata["term_norms"] = norms
  return math.fsum(abs(a) * b for a, b in zip(pair.metadata["weights"], norms))


@dataclass
class Pq11Bound:
  total: float
  fourier_part: float
  spatial_part: float

  @property
  def majorant(self) -> float:
    return self.fourier_part + self.spatial_part

  def to_dict(self) -> Dict[str, float]:
    return {"total": self.total, "fourier_part": self.fourier_part,
            "spatial_part": self.spatial_part, "majorant": self.majorant}


def _bump_comb(x: np.ndarray, deltas: np.ndarray, kernel: BumpKernel) -> np.ndarray:
  """sum_n Delta_n |phi(Delta_n (x - n))| for n = 1..N, skipping arguments beyond the grid."""
  out = np.zeros_like(x)
  for n, d in enumerate(deltas, start=1):
    arg = d * (x - n)
    inside = np.abs(arg) <= kernel.grid_max
    if inside.any():
      out[inside] += d * np.abs(kernel.phi(arg[inside]))
  return out


def pq11_absolute_bound(pair: psf.FunctionPair, alpha, N: int, kernel: BumpKernel,
                        tol: float = ec.DEFAULT_TOL) -> Pq11Bound:
  """Two-part majorant of sum_{n=1}^N |f(n)| with Delta_n = n^alpha.

  f(n) - int Delta_n phi(Delta_n (x-n)) f(x) dx is the inverse transform of
  fhat (1 - phihat(./Delta_n)), so
    fourier_part = int |fhat(xi)| sum_n |1 - phihat(xi/Delta_n)| dxi,
    spatial_part = int |f(x)| sum_n Delta_n |phi(Delta_n (x - n))| dx.

  Raises:
      CheckFailed: if the sum exceeds the majorant.
  """
  if pair.provenance not in (psf.Provenance.ClosedForm, psf.Provenance.StepSpecDerived):
    raise UserError("pq11_absolute_bound needs a closed-form or step-function pair")
  if N < 1:
    raise UserError(f"N must be >= 1, got {N}")
  a = float(to_extended(alpha))
  if not a > 0:
    raise UserError(f"alpha must be positive, got {alpha}")
  n = np.arange(1, N + 1, dtype=float)
  deltas = n**a
  total = compensated_sum(np.abs(pair.f(n)))

  def fourier_integrand(xi):
    window = 1.0 - kernel.phihat(np.abs(xi)[:, None] / deltas[None, :])
    return np.abs(pair.fhat(xi)) * window.sum(axis=1)

  cuts = sorted(set(np.concatenate([deltas / 2.0, deltas, -deltas / 2.0, -deltas]).tolist()))
  fourier_part = adaptive_integrate(fourier_integrand, -math.inf, math.inf, tol=tol,
                                    breakpoints=cuts).value

  reach = kernel.grid_max
  spatial_part = adaptive_integrate(lambda x: np.abs(pair.f(x)) * _bump_comb(x, deltas, kernel),
                                    1.0 - reach, N + reach, tol=tol,
                                    breakpoints=[float(k) for k in range(1, N + 1)]).value
  bound = Pq11Bound(total=total, fourier_part=fourier_part, spatial_part=spatial_part)
  if total > bound.majorant * (1.0 + 1e-9) + tol:
    raise CheckFailed("pq11_absolute_bound", {"alpha": a, "N": N}, total, bound.majorant)
  return bound


@dataclass
class KernelSum:
  xi: float
  value: float
  scale: float

  @property
  def ratio(self) -> float:
    return self.value / self.scale if self.scale > 0 else 0.0


def kernel_sum_bound(xi: float, alpha, M: int) -> KernelSum:
  """sum_{n>=1} min(1, (|xi|/n^alpha)^M) against |xi|^(1/alpha).

  Terms equal 1 while n^alpha <= |xi|; the rest is |xi|^M zeta(alpha M, n0 + 1).
  """
  a = float(to_extended(alpha))
  if not a * M > 1:
    raise UserError(f"the kernel sum converges only for alpha M > 1, got {a * M:g}")
  x = abs(float(xi))
  if x == 0.0:
    return KernelSum(0.0, 0.0, 0.0)
  n0 = int(math.floor(x**(1.0 / a)))
  while (n0 + 1)**a <= x:
    n0 += 1
  while n0 > 0 and n0**a > x:
    n0 -= 1
  value = n0 + x**M * float(zeta(a * M, n0 + 1))
  return KernelSum(xi=float(xi), value=value, scale=x**(1.0 / a))


@dataclass
class Witness:
  psf_tag: PsfTag
  psf_witness: str
  abs_tag: AbsTag
  abs_witness: str

  def to_dict(self) -> Dict[str, str]:
    return {"psf": self.psf_tag.value, "psf_witness": self.psf_witness,
            "abs": self.abs_tag.value, "abs_witness": self.abs_witness}


OUT_OF_SCOPE = "construction out of scope: the failing functions for this regime are not built here"


def witness_construction(point: ParamPoint) -> Witness:
  """Which family, if any, witnesses failure or divergence at the point."""
  psf_tag = classify_psf(point).tag
  abs_tag = classify_abs(point).tag
  if psf_tag == PsfTag.Fails:
    psf_witness = OUT_OF_SCOPE
  elif psf_tag == PsfTag.ConditionalEquality:
    psf_witness = "diagonal (sides may both diverge; built from mainth3)"
  elif psf_tag == PsfTag.Inadmissible:
    psf_witness = "none: out of theorem scope"
  else:
    psf_witness = "none needed"

  if abs_tag != AbsTag.MayDiverge:
    abs_witness = "none needed" if abs_tag == AbsTag.AbsolutelyConverges else "none: out of scope"
  elif psf_tag == PsfTag.ConditionalEquality:
    abs_witness = "mainth3"
  elif point.q is INF and point.beta > 1 and point.spatial_margin * (point.beta - 1) == point.inv_p / 2:
    abs_witness = "extkah2-inf"
  elif point.q is not INF and point.q > 2 and point.product == point.inv_p / 2:
    abs_witness = "extkah2"
  elif psf_tag == PsfTag.Fails:
    abs_witness = OUT_OF_SCOPE
  else:
    abs_witness = "none available at this point"
  return Witness(psf_tag, psf_witness, abs_tag, abs_witness)


@dataclass
class SpikeDominance:
  N: int
  full_ratio: float
  floor_ratio: float
  floor: int


def integer_samples(spec: StepSpec, kernel: BumpKernel) -> np.ndarray:
  """F(0), F(1), ..., F(N)."""
  return np.asarray(stepfn.eval_F(spec, kernel, np.arange(spec.N + 1, dtype=float)))


def spike_dominance(spec: StepSpec, kernel: BumpKernel, floor: int = ec.SPIKE_FLOOR) -> SpikeDominance:
  """sum_n F(n) / (phi(0) sum_n c_n Delta_n), over all n and over n >= floor."""
  if not 0 <= floor <= spec.N:
    raise UserError(f"floor {floor} outside 0..{spec.N}")
  values = integer_samples(spec, kernel)
  spikes = kernel.phi(0.0) * spec.c * spec.delta
  full = compensated_sum(values) / compensated_sum(spikes)
  tail = compensated_sum(values[floor:]) / compensated_sum(spikes[floor:])
  return SpikeDominance(N=spec.N, full_ratio=float(full), floor_ratio=float(tail), floor=floor)


def spike_defects(spec: StepSpec, kernel: BumpKernel, M: int) -> pd.DataFrame:
  """Every spike defect n = 1..N against its bound, as a table.

  The bound does not apply at n = 0; `stepfn.spike_defect(spec, kernel, 0, M)` reports
  that defect alone.

  Raises:
      CheckFailed: at the first n whose defect exceeds the bound.
  """
  spec.require_monotone("the spike bound")
  constant = stepfn.spike_constant(kernel, M)
  values = integer_samples(spec, kernel)
  n = np.arange(1, spec.N + 1)
  defects = np.abs(values[1:] - kernel.phi(0.0) * spec.delta[1:] * spec.c[1:])
  bounds = constant * spec.c_sup * (1.0 / n + 1.0 / spec.delta[n // 2])**M
  bad = np.nonzero(defects > bounds)[0]
  if len(bad):
    k = int(bad[0])
    raise CheckFailed("spike_defect", {"n": int(n[k]), "M": M, "N": spec.N}, float(defects[k]),
                      float(bounds[k]))
  return pd.DataFrame({"n": n, "defect": defects, "bound": bounds})


@dataclass
class FamilySweep:
  frame: pd.DataFrame
  f_slope: float

  def to_dict(self) -> Dict[str, Any]:
    return {"f_slope": self.f_slope, "rows": len(self.frame)}


def family_norm_sweep(point: ParamPoint, N_list: Sequence[int], kernel: BumpKernel,
                      measure_fourier_upto: int = 256, fourier_constant: float = 1.0,
                      threads: Optional[int] = None) -> FamilySweep:
  """Weighted norms of the divergence family along N.

  Columns: f_norm = ||F_N |x|^alpha||_p, majorant = fourier_constant * sbp_bound_2,
  loglog = (log log N)^(1/q), and fhat_norm (measured ||Fhat_N (1+|xi|)^beta||_q,
  only up to `measure_fourier_upto`).
  """
  mainth3_params(point)
  w = power_weight(point.alpha)

  def row(N: int) -> Dict[str, Any]:
    spec = mainth3_family(point, N)
    f_norm = step_line_norm(spec, kernel, point.p, w).value
    majorant = fourier_constant * sbp_bound_2(spec, point.beta, point.q)
    fhat_norm = math.nan
    if N <= measure_fourier_upto:
      measured: NormResult = spectral_norm(spec, kernel, SpectralSide.Fhat,
                                           shifted_power_weight(point.beta), point.q)
      fhat_norm = measured.value
    loglog = math.log(math.log(N))**float(point.inv_q) if N >= 3 else math.nan
    return {"N": N, "f_norm": f_norm, "fhat_norm": fhat_norm, "majorant": majorant, "loglog": loglog}

  rows = ordered_map(row, [int(n) for n in N_list], threads=threads, desc="family")
  frame = pd.DataFrame(rows, columns=["N", "f_norm", "fhat_norm", "majorant", "loglog"])
  return FamilySweep(frame=frame, f_slope=loglog_slope(frame["N"], frame["f_norm"]))
