"""Weighted norms on the line and on the torus, and the coefficient-sum bounds.

Line norms use the adaptive Gauss-Kronrod rule from `quadrature`; torus norms sample
the polynomial on an oversampled grid by FFT. The bound expressions reproduce the
right-hand sides of the step-function estimates; their implied constants are
measured, never assumed.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import zeta

from psflab.analysis.bump import BumpKernel
from psflab.analysis.quadrature import adaptive_integrate, gauss_legendre_panels, tail_integral
from psflab.analysis.regime import INF, Extended, conjugate, to_extended
from psflab.analysis.stepfn import StepSpec, eval_F_bounded, lipschitz_modulus
from psflab.constants import experiment as ec
from psflab.errors import IntegrationError, UserError
from psflab.utils.logging import get_logger

logger = get_logger(logger_level="INFO", name=__name__)

MIN_TORUS_GRID = 64
ROUGH_TORUS_GRID = 1 << 16
SUP_TORUS_OVERSAMPLE = 64
TORUS_BLOCK = 1 << 20
SUP_GRID = 4097
SUP_REFINEMENTS = 6


class NormMethod(str, Enum):
  AdaptiveQuadrature = "AdaptiveQuadrature"
  GridSup = "GridSup"
  DftQuadrature = "DftQuadrature"


@dataclass
class NormResult:
  """A norm with an a-posteriori error estimate.

  `certified` is False when the error is a heuristic (uncertified sup norms).
  """
  value: float
  abs_error: float
  method: NormMethod
  certified: bool = True

  def to_dict(self):
    return {
        "value": self.value,
        "abs_error": self.abs_error,
        "method": self.method.value,
        "certified": self.certified
    }


class WeightKind(str, Enum):
  Power = "Power"
  ShiftedPower = "ShiftedPower"
  General = "General"


class Monotone(str, Enum):
  NonDecreasing = "NonDecreasing"
  NonIncreasing = "NonIncreasing"
  Constant = "Constant"


def _direction(exponent: Fraction) -> Monotone:
  if exponent > 0:
    return Monotone.NonDecreasing
  if exponent < 0:
    return Monotone.NonIncreasing
  return Monotone.Constant


@dataclass(frozen=True, eq=False)
class WeightSpec:
  """An even weight on the line, evaluated on |x|.

  Use the factories `power_weight`, `shifted_power_weight`, `general_weight` and
  `constant_weight` rather than the constructor.
  """
  kind: WeightKind
  name: str
  monotone: Monotone
  exponent: Optional[Fraction] = None
  evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
  factor: float = 1.0
  even: bool = True

  def __post_init__(self):
    if not self.even:
      raise UserError(f"weight '{self.name}' must be even")
    if self.kind == WeightKind.General and self.evaluator is None:
      raise UserError(f"general weight '{self.name}' needs an evaluator")
    if self.factor <= 0:
      raise UserError("weight factor must be positive")

  def __call__(self, x) -> np.ndarray:
    ax = np.abs(np.asarray(x, dtype=float))
    if self.kind == WeightKind.Power:
      with np.errstate(divide="ignore"):
        out = ax**float(self.exponent)
    elif self.kind == WeightKind.ShiftedPower:
      out = (1.0 + ax)**float(self.exponent)
    else:
      out = np.asarray(self.evaluator(ax), dtype=float)
    return self.factor * out

  def scaled(self, factor: float) -> "WeightSpec":
    return replace(self, factor=self.factor * factor, name=f"{factor:g}*{self.name}")

  def power(self, r: float) -> "WeightSpec":
    """w^r as a new weight."""
    if r == 0:
      return constant_weight()
    monotone = self.monotone
    if r < 0 and monotone != Monotone.Constant:
      monotone = (Monotone.NonIncreasing
                  if monotone == Monotone.NonDecreasing else Monotone.NonDecreasing)
    if self.kind in (WeightKind.Power, WeightKind.ShiftedPower):
      exponent = self.exponent * Fraction(r).limit_denominator(10**9)
      return WeightSpec(
          self.kind, f"({self.name})^{r:g}", _direction(exponent), exponent,
          factor=self.factor**r)
    base = self
    return general_weight(f"({self.name})^{r:g}", lambda ax: base(ax)**r, monotone)

  def integral(self, a: float, b: float = math.inf, r: float = 1.0) -> float:
    """int_a^b w^r dx for a <= b (b may be infinite).

    Raises:
        IntegrationError: if the integral diverges.
    """
    if a > b:
      raise UserError("integral needs a <= b")
    if a < 0 < b or (a < 0 and b == 0):
      return self.integral(0.0, -a, r) + self.integral(0.0, b, r)
    if b <= 0:
      return self.integral(-b, -a, r)
    if self.kind == WeightKind.General:
      g = lambda x: self(x)**r
      if math.isinf(b):
        return tail_integral(g, a, cutoff=ec.WEIGHT_TAIL_CUTOFF)
      return adaptive_integrate(g, a, b, tol=1e-12).value
    s = float(self.exponent) * r
    scale = self.factor**r
    if self.kind == WeightKind.Power:
      lo, hi = a, b
    else:
      lo, hi = 1.0 + a, 1.0 + b
    if math.isinf(hi) and s >= -1:
      raise IntegrationError(f"int^inf of {self.name}^{r:g} diverges")
    if lo == 0 and s <= -1:
      raise IntegrationError(f"{self.name}^{r:g} is not integrable at 0")
    if s == -1:
      return scale * math.log(hi / lo)
    hi_term = 0.0 if math.isinf(hi) else hi**(s + 1)
    return scale * (hi_term - lo**(s + 1)) / (s + 1)


def power_weight(alpha) -> WeightSpec:
  """|x|^alpha."""
  alpha = Fraction(to_extended(alpha))
  return WeightSpec(WeightKind.Power, f"|x|^{alpha}", _direction(alpha), alpha)


def shifted_power_weight(alpha) -> WeightSpec:
  """(1+|x|)^alpha."""
  alpha = Fraction(to_extended(alpha))
  return WeightSpec(WeightKind.ShiftedPower, f"(1+|x|)^{alpha}", _direction(alpha), alpha)


def constant_weight() -> WeightSpec:
  return WeightSpec(WeightKind.ShiftedPower, "1", Monotone.Constant, Fraction(0))


def general_weight(name: str, evaluator: Callable[[np.ndarray], np.ndarray],
                   monotone: Monotone, even: bool = True) -> WeightSpec:
  """A user weight; the caller declares evenness and the monotone direction on [0, inf)."""
  return WeightSpec(WeightKind.General, name, Monotone(monotone), None, evaluator, 1.0, even)


def _root_error(integral: float, error: float, p: float) -> float:
  if integral <= 0:
    return error**(1.0 / p)
  return min(error**(1.0 / p), error * integral**(1.0 / p - 1.0) / p)


def line_norm(f: Callable[[np.ndarray], np.ndarray],
              p: Extended,
              w: Optional[WeightSpec] = None,
              domain: Tuple[float, float] = (-math.inf, math.inf),
              tol: float = 1e-10,
              breakpoints: Optional[Sequence[float]] = None,
              lipschitz: Optional[float] = None) -> NormResult:
  """||f w||_p over `domain`.

  Args:
      f: vectorized function.
      p: exponent in [1, inf].
      w: weight, defaults to 1.
      domain: interval, ends may be infinite for p < inf.
      tol: absolute error target for the integral of |f w|^p.
      breakpoints: non-smooth points of f w; 0 is added for power weights.
      lipschitz: Lipschitz modulus of f w, certifies p = inf results.

  Returns:
      NormResult

  Example:
      >>> line_norm(lambda x: np.exp(-np.pi * x**2), 2).value  # 2**-0.25
  """
  p = to_extended(p)
  if p is not INF and p < 1:
    raise UserError(f"p must be >= 1, got {p}")
  w = w or constant_weight()
  a, b = float(domain[0]), float(domain[1])
  cuts = list(breakpoints or [])
  if w.kind == WeightKind.Power and w.exponent != 0:
    cuts.append(0.0)

  def fw(x):
    return np.abs(np.asarray(f(x))) * w(x)

  if p is INF:
    return _grid_sup(fw, a, b, cuts, lipschitz)
  pf = float(p)
  res = adaptive_integrate(lambda x: fw(x)**pf, a, b, tol=tol, breakpoints=cuts)
  value = max(res.value, 0.0)**(1.0 / pf)
  return NormResult(value, _root_error(res.value, res.abs_error, pf), NormMethod.AdaptiveQuadrature)


def _grid_sup(fw: Callable, a: float, b: float, cuts: Sequence[float],
              lipschitz: Optional[float]) -> NormResult:
  if math.isinf(a) or math.isinf(b):
    raise UserError("sup norms need a finite domain")
  grid = np.unique(np.concatenate([np.linspace(a, b, SUP_GRID), [c for c in cuts if a <= c <= b]]))
  values = fw(grid)
  best = float(values.max())
  spacing = (b - a) / (SUP_GRID - 1)
  previous = best
  # zoom around the current maximizer
  center = float(grid[int(values.argmax())])
  for _ in range(SUP_REFINEMENTS):
    lo, hi = max(a, center - spacing), min(b, center + spacing)
    local = np.linspace(lo, hi, 129)
    local_values = fw(local)
    previous, best = best, max(best, float(local_values.max()))
    center = float(local[int(local_values.argmax())]) if local_values.max() >= best else center
    spacing = (hi - lo) / 128
  if lipschitz is not None:
    return NormResult(best, lipschitz * spacing / 2.0, NormMethod.GridSup, certified=True)
  logger.warning("sup norm without a Lipschitz modulus is a heuristic value")
  return NormResult(best, abs(best - previous), NormMethod.GridSup, certified=False)


def _next_pow2(n: int) -> int:
  return 1 << max(0, int(math.ceil(math.log2(max(n, 1)))))


def torus_grid_size(length: int, q: Extended) -> int:
  """Sample count for an L^q norm of a polynomial with `length` coefficients.

  Even integer q makes |P|^q a trigonometric polynomial, sampled exactly;
  other finite q use a dense grid, q = inf a 64x oversampled one.
  """
  q = to_extended(q)
  if q is INF:
    return _next_pow2(max(SUP_TORUS_OVERSAMPLE * length, MIN_TORUS_GRID))
  qf = float(q)
  if q.denominator == 1 and q.numerator % 2 == 0:
    return _next_pow2(max(int(qf) * length + 1, 8 * length, MIN_TORUS_GRID))
  return _next_pow2(max(8 * length, ROUGH_TORUS_GRID))


def _bernstein_margin(sup: float, degree: int, size: int) -> float:
  ratio = math.pi * degree / size
  return sup * ratio / (1.0 - ratio)


def torus_norm(coeffs: Sequence[complex], q: Extended) -> NormResult:
  """||sum_j c_j e^{-2 pi i j xi}||_{L^q(T)}.

  Args:
      coeffs: coefficients of consecutive frequencies.
      q: exponent in [1, inf].

  Returns:
      NormResult: exact Parseval value for q = 2; oversampled DFT quadrature otherwise.
  """
  q = to_extended(q)
  if q is not INF and q < 1:
    raise UserError(f"q must be >= 1, got {q}")
  c = np.asarray(coeffs, dtype=complex)
  if c.size == 0:
    return NormResult(0.0, 0.0, NormMethod.DftQuadrature)
  if q == 2:
    value = math.sqrt(math.fsum(np.abs(c)**2))
    return NormResult(value, 4 * np.finfo(float).eps * value, NormMethod.DftQuadrature)
  size = torus_grid_size(len(c), q)
  samples = np.abs(np.fft.fft(c, n=size))
  if q is INF:
    sup = float(samples.max())
    return NormResult(sup, _bernstein_margin(sup, len(c) - 1, size), NormMethod.DftQuadrature)
  qf = float(q)
  powered = samples**qf
  fine = math.fsum(powered) / size
  coarse = math.fsum(powered[::2]) / (size // 2)
  value = fine**(1.0 / qf)
  exact = q.denominator == 1 and q.numerator % 2 == 0
  err_int = 1e-14 * fine if exact else abs(fine - coarse)
  return NormResult(value, _root_error(fine, err_int, qf), NormMethod.DftQuadrature)


class PolyKind(str, Enum):
  Head = "Head"
  Tail = "Tail"


@dataclass
class TorusNormTable:
  """||S_k||_q (Head) or ||S~_k||_q (Tail) for every k."""
  values: np.ndarray
  abs_errors: np.ndarray


def cumulative_torus_norms(coeffs: Sequence[complex], q: Extended,
                           kind: PolyKind = PolyKind.Head) -> TorusNormTable:
  """Torus norms of every partial (Head) or tail (Tail) sum of `coeffs`."""
  q = to_extended(q)
  kind = PolyKind(kind)
  c = np.asarray(coeffs, dtype=complex)
  n = len(c)
  if n == 0:
    return TorusNormTable(np.zeros(0), np.zeros(0))
  if q == 2:
    energy = np.abs(c)**2
    cum = np.cumsum(energy) if kind == PolyKind.Head else np.cumsum(energy[::-1])[::-1]
    values = np.sqrt(cum)
    return TorusNormTable(values, 4 * np.finfo(float).eps * values)

  size = torus_grid_size(n, q)
  roots = np.exp(-2j * np.pi * np.arange(size) / size)
  j = np.arange(n)
  block = max(1, TORUS_BLOCK // n)
  is_sup = q is INF
  qf = math.inf if is_sup else float(q)
  acc_fine = np.zeros(n)
  acc_coarse = np.zeros(n)
  for start in range(0, size, block):
    m = np.arange(start, min(size, start + block))
    terms = c[:, None] * roots[(j[:, None] * m[None, :]) % size]
    if kind == PolyKind.Head:
      partial = np.abs(np.cumsum(terms, axis=0))
    else:
      partial = np.abs(np.cumsum(terms[::-1], axis=0)[::-1])
    if is_sup:
      acc_fine = np.maximum(acc_fine, partial.max(axis=1))
    else:
      powered = partial**qf
      acc_fine += powered.sum(axis=1)
      acc_coarse += powered[:, (m % 2) == 0].sum(axis=1)

  if is_sup:
    degrees = j if kind == PolyKind.Head else (n - 1 - j)
    margins = np.array([_bernstein_margin(s, int(d), size) for s, d in zip(acc_fine, degrees)])
    return TorusNormTable(acc_fine, margins)
  fine = acc_fine / size
  coarse = acc_coarse / (size // 2)
  values = fine**(1.0 / qf)
  exact = q.denominator == 1 and q.numerator % 2 == 0
  err_int = 1e-14 * fine if exact else np.abs(fine - coarse)
  errors = np.array([_root_error(f, e, qf) for f, e in zip(fine, err_int)])
  return TorusNormTable(values, errors)


def _pnorm_sum(terms: np.ndarray, p: float) -> float:
  """(sum terms)^(1/p) with exactly rounded summation."""
  return math.fsum(terms)**(1.0 / p)


def sbp_bound_1(spec: StepSpec, alpha, p: Extended) -> float:
  """(sum_k |c_k|^p (k+1)^{p alpha} Delta_k^{p-1})^{1/p}; max_k |c_k| (k+1)^alpha Delta_k at p = inf.

  Example:
      >>> sbp_bound_1(StepSpec([1, 1], [1, 2]), 1, 2)
      3.0
  """
  p = to_extended(p)
  alpha = float(to_extended(alpha))
  k1 = spec.indices + 1.0
  if p is INF:
    return float(np.max(np.abs(spec.c) * k1**alpha * spec.delta))
  pf = float(p)
  return _pnorm_sum(np.abs(spec.c)**pf * k1**(pf * alpha) * spec.delta**(pf - 1.0), pf)


def _delta_steps(spec: StepSpec) -> np.ndarray:
  """Delta_k - Delta_{k-1} with Delta_{-1} = 0."""
  return np.diff(np.concatenate([[0.0], spec.delta]))


def sbp_bound_2(spec: StepSpec, beta, q: Extended, kernel: Optional[BumpKernel] = None) -> float:
  """(sum_k Delta_k^{beta q} (Delta_k - Delta_{k-1}) ||S~_k||_q^q)^{1/q}.

  `kernel` is accepted for signature symmetry; the expression does not depend on it.
  """
  spec.require_monotone("sbp_bound_2")
  q = to_extended(q)
  beta = float(to_extended(beta))
  tails = cumulative_torus_norms(spec.c, q, PolyKind.Tail).values
  if q is INF:
    return float(np.max(spec.delta**beta * tails))
  qf = float(q)
  return _pnorm_sum(spec.delta**(beta * qf) * _delta_steps(spec) * tails**qf, qf)


def sbp_bound_3(spec: StepSpec, nu, q: Extended, kernel: Optional[BumpKernel] = None) -> float:
  """Bound for ||Ghat (1+|xi|)^{-nu}||_{q'}, with q the exponent of the Fhat side.

  (sum_{k<N} Delta_k^{-nu q'} (Delta_{k+1} - Delta_k) ||S_k||_{q'}^{q'})^{1/q'}
  + Delta_N^{-nu + 1/q'} ||S_N||_{q'}.
  """
  spec.require_monotone("sbp_bound_3")
  r = conjugate(to_extended(q))
  nu_f = float(to_extended(nu))
  inv_r = 0.0 if r is INF else 1.0 / float(r)
  if not nu_f > inv_r:
    raise UserError(f"sbp_bound_3 needs nu > 1/q' = {inv_r:g}, got {nu_f:g}")
  heads = cumulative_torus_norms(spec.c, r, PolyKind.Head).values
  boundary = spec.delta[-1]**(-nu_f + inv_r) * heads[-1]
  if spec.N == 0:
    return float(boundary)
  steps = np.diff(spec.delta)
  if r is INF:
    head = float(np.max(spec.delta[:-1]**(-nu_f) * heads[:-1]))
  else:
    rf = float(r)
    head = _pnorm_sum(spec.delta[:-1]**(-nu_f * rf) * steps * heads[:-1]**rf, rf)
  return float(head + boundary)


class BoundSide(str, Enum):
  F = "F-side"
  Fhat = "Fhat-side"
  Ghat = "Ghat-side"


def _phi_weight_norm(w: WeightSpec, k: int, delta: float, p: float, y: np.ndarray,
                     phi_p: np.ndarray, dy: float) -> float:
  """||w(x) phi((x-k) Delta)||_p^p through the substitution y = (x-k) Delta."""
  integrand = w(k + y / delta)**p * phi_p
  return float(np.sum(integrand)) * dy / delta


def phi_sample(kernel: BumpKernel, stride: int = 64):
  """Symmetric sample of phi on [-X_max, X_max] with step stride * grid step."""
  half = kernel.grid[::stride]
  vals = kernel.values[::stride]
  y = np.concatenate([-half[:0:-1], half])
  phi = np.concatenate([vals[:0:-1], vals])
  return y, phi, kernel.step * stride


def sbp2_bounds(spec: StepSpec, w: WeightSpec, exponent: Extended, which: BoundSide,
                kernel: BumpKernel) -> float:
  """General-weight bounds.

  F-side:    (sum_k |c_k|^p ||w phi((x-k) Delta_k)||_p^p Delta_k^p)^{1/p}
  Fhat-side: (int_0^{Delta_0+2} w^q)^{1/q} ||S~_0||_q
             + (sum_{k>=1} w(Delta_k)^q (Delta_k - Delta_{k-1}) ||S~_k||_q^q)^{1/q}, w non-decreasing
  Ghat-side: (sum_{k<N} w(Delta_k/2)^r (Delta_{k+1} - Delta_k) ||S_k||_r^r)^{1/r}
             + (int_{Delta_N/2-1}^inf w^r)^{1/r} ||S_N||_r, w non-increasing, r = exponent

  Raises:
      UserError: if the weight's monotone direction does not fit the side.
  """
  which = BoundSide(which)
  e = to_extended(exponent)
  if e is not INF and e < 1:
    raise UserError(f"exponent must be >= 1, got {e}")
  if which == BoundSide.F:
    y, phi, dy = phi_sample(kernel)
    if e is INF:
      terms = [abs(spec.c[k]) * spec.delta[k] * float(np.max(w(k + y / spec.delta[k]) * np.abs(phi)))
               for k in range(spec.N + 1)]
      return float(max(terms))
    pf = float(e)
    phi_p = np.abs(phi)**pf
    terms = np.array([
        abs(spec.c[k])**pf * spec.delta[k]**pf *
        _phi_weight_norm(w, k, spec.delta[k], pf, y, phi_p, dy) for k in range(spec.N + 1)
    ])
    return _pnorm_sum(terms, pf)

  spec.require_monotone(f"sbp2_bounds {which.value}")
  if which == BoundSide.Fhat:
    if w.monotone == Monotone.NonIncreasing:
      raise UserError("the Fhat-side bound needs a non-decreasing weight")
    tails = cumulative_torus_norms(spec.c, e, PolyKind.Tail).values
    upper = spec.delta[0] + 2.0
    if e is INF:
      first = float(w(upper)) * tails[0]
      rest = float(np.max(w(spec.delta[1:]) * tails[1:])) if spec.N else 0.0
      return float(first + rest)
    qf = float(e)
    first = w.integral(0.0, upper, qf)**(1.0 / qf) * tails[0]
    if spec.N == 0:
      return float(first)
    steps = _delta_steps(spec)[1:]
    rest = _pnorm_sum(w(spec.delta[1:])**qf * steps * tails[1:]**qf, qf)
    return float(first + rest)

  if w.monotone == Monotone.NonDecreasing:
    raise UserError("the Ghat-side bound needs a non-increasing weight")
  heads = cumulative_torus_norms(spec.c, e, PolyKind.Head).values
  lower = spec.delta[-1] / 2.0 - 1.0
  if e is INF:
    tail = float(w(max(lower, 0.0))) * heads[-1]
    head = float(np.max(w(spec.delta[:-1] / 2.0) * heads[:-1])) if spec.N else 0.0
    return float(head + tail)
  rf = float(e)
  tail = w.integral(lower, math.inf, rf)**(1.0 / rf) * heads[-1]
  if spec.N == 0:
    return float(tail)
  steps = np.diff(spec.delta)
  head = _pnorm_sum(w(spec.delta[:-1] / 2.0)**rf * steps * heads[:-1]**rf, rf)
  return float(head + tail)


def sbp2_cross_ratio(spec: StepSpec, beta, q: Extended,
                     kernel: Optional[BumpKernel] = None) -> float:
  """Fhat-side general-weight bound with w = (1+|xi|)^beta over sbp_bound_2."""
  general = sbp2_bounds(spec, shifted_power_weight(beta), q, BoundSide.Fhat, kernel)
  return general / sbp_bound_2(spec, beta, q)


def hardy_littlewood_bound(coeffs: Sequence[float], q, kind: PolyKind) -> float:
  """Monotone-coefficient majorant of ||sum_j a_j e^{2 pi i j xi}||_q.

  For a = (a_0..a_n):
  Head (a non-decreasing, the partial sum S_k): (sum_i a_i^q (n-i+1)^{q-2})^{1/q}.
  Tail (a non-increasing, the tail sum S~_k):   (sum_i a_i^q (i+1)^{q-2})^{1/q}.
  """
  kind = PolyKind(kind)
  q = to_extended(q)
  if q is INF or not 1 < q:
    raise UserError(f"the Hardy-Littlewood comparison needs 1 < q < inf, got {q}")
  a = np.asarray(coeffs, dtype=float)
  if a.size == 0:
    return 0.0
  if np.any(a < 0):
    raise UserError("Hardy-Littlewood coefficients must be nonnegative")
  steps = np.diff(a)
  if kind == PolyKind.Head and np.any(steps < 0):
    raise UserError("Head sums need non-decreasing coefficients")
  if kind == PolyKind.Tail and np.any(steps > 0):
    raise UserError("Tail sums need non-increasing coefficients")
  qf = float(q)
  i = np.arange(len(a), dtype=float)
  distance = (len(a) - i) if kind == PolyKind.Head else (i + 1.0)
  return _pnorm_sum(a**qf * distance**(qf - 2.0), qf)


class SpectralSide(str, Enum):
  Fhat = "Fhat"
  Ghat = "Ghat"


def _cell_nodes(spec: StepSpec) -> Tuple[np.ndarray, np.ndarray]:
  return gauss_legendre_panels(np.array([0.0, 1.0]), 2 * (spec.N + 1) + 16)


def spectral_norm(spec: StepSpec,
                  kernel: BumpKernel,
                  side: SpectralSide,
                  w: Optional[WeightSpec] = None,
                  q: Extended = 2) -> NormResult:
  """Measured ||Fhat w||_q or ||Ghat w||_q over the line.

  Integrates cell by cell over [m, m+1]; e^{-2 pi i k (m+t)} does not depend on m, so
  the exponentials are built once per node. |Fhat| and |Ghat| are even. Beyond
  max Delta_k, Ghat equals the 1-periodic S_N and the remaining cells are summed in
  closed form (Hurwitz zeta) for power weights, bracketed by weight integrals otherwise.
  """
  side = SpectralSide(side)
  w = w or constant_weight()
  q = to_extended(q)
  is_sup = q is INF
  qf = math.inf if is_sup else float(q)
  t, wt = _cell_nodes(spec)
  k = spec.indices
  phase = np.exp(-2j * np.pi * np.outer(t, k)) * spec.c[None, :]
  s_n = phase.sum(axis=1)
  # column j: sum_{i>=j} c_i e^{-2 pi i i t}
  tails = np.cumsum(phase[:, ::-1], axis=1)[:, ::-1]
  tails = np.concatenate([tails, np.zeros((len(t), 1))], axis=1)

  first = 0 if side == SpectralSide.Fhat else int(math.floor(spec.delta_min / 2.0))
  last = int(math.ceil(spec.delta_max))
  pieces = []
  sup = 0.0
  for m in range(first, last):
    xi = m + t
    if spec.monotone:
      # phihat(xi/Delta_k) is 0 for Delta_k <= m and 1 for Delta_k >= 2(m+1)
      lo = int(np.searchsorted(spec.delta, m, side="right"))
      hi = int(np.searchsorted(spec.delta, 2.0 * (m + 1), side="left"))
      window = kernel.phihat(xi[:, None] / spec.delta[None, lo:hi])
      fhat = tails[:, hi] + (phase[:, lo:hi] * window).sum(axis=1)
    else:
      window = kernel.phihat(xi[:, None] / spec.delta[None, :])
      fhat = (phase * window).sum(axis=1)
    values = fhat if side == SpectralSide.Fhat else s_n - fhat
    weighted = np.abs(values) * w(xi)
    if is_sup:
      sup = max(sup, float(weighted.max()))
    else:
      pieces.append(float(np.dot(wt, weighted**qf)))

  tail_value, tail_error = 0.0, 0.0
  if side == SpectralSide.Ghat:
    s_abs = np.abs(s_n)
    if is_sup:
      sup = max(sup, float(s_abs.max()) * float(w(last)))
    else:
      tail_value, tail_error = _periodic_tail(s_abs, t, wt, w, qf, last)

  if is_sup:
    logger.debug("spectral sup norm sampled at quadrature nodes only")
    return NormResult(sup, 0.0, NormMethod.DftQuadrature, certified=False)
  total = 2.0 * (math.fsum(pieces) + tail_value)
  err = 2.0 * tail_error + 1e-12 * total
  value = total**(1.0 / qf)
  return NormResult(value, _root_error(total, err, qf), NormMethod.DftQuadrature)


def _periodic_tail(s_abs: np.ndarray, t: np.ndarray, wt: np.ndarray, w: WeightSpec, qf: float,
                   start: int) -> Tuple[float, float]:
  """sum_{m >= start} int_0^1 |S_N(t)|^q w(m+t)^q dt and its error."""
  if w.monotone != Monotone.NonIncreasing:
    raise IntegrationError("Ghat does not decay beyond max Delta_k; the weighted tail needs a "
                           "decreasing weight")
  powered = s_abs**qf
  if w.kind in (WeightKind.Power, WeightKind.ShiftedPower):
    s = -float(w.exponent) * qf
    if s <= 1:
      raise IntegrationError(f"weighted tail diverges: exponent {s:g} <= 1")
    shift = 0.0 if w.kind == WeightKind.Power else 1.0
    hurwitz = zeta(s, start + shift + t)
    return float(np.dot(wt, powered * hurwitz)) * w.factor**qf, 0.0
  mass = float(np.dot(wt, powered))
  upper = w.integral(max(start - 1.0, 0.0), math.inf, qf)
  lower = w.integral(start + 1.0, math.inf, qf)
  return mass * 0.5 * (upper + lower), mass * 0.5 * (upper - lower)


def step_line_norm(spec: StepSpec, kernel: BumpKernel, p: Extended, w: Optional[WeightSpec] = None,
                   tol: float = 1e-10) -> NormResult:
  """||F w||_p for a step function; F vanishes beyond X_max of every bump."""
  reach = kernel.grid_max + 1.0
  domain = (-reach, spec.N + reach)
  breakpoints = [float(k) for k in range(spec.N + 1)]
  lipschitz = None
  if to_extended(p) is INF and (w is None or w.monotone == Monotone.Constant):
    lipschitz = lipschitz_modulus(spec, kernel) * (w.factor if w else 1.0)
  return line_norm(lambda x: eval_F_bounded(spec, kernel, x).values, p, w, domain, tol, breakpoints,
                   lipschitz)
