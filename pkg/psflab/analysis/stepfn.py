"""Step functions built from scaled bumps at the integers.

F(x) = sum_k c_k Delta_k phi((x - k) Delta_k), its transform
Fhat(xi) = sum_k c_k e^{-2 pi i k xi} phihat(xi / Delta_k), and the transform of the
spike measure G = sum_k c_k (delta_k - Delta_k phi((. - k) Delta_k)),
Ghat(xi) = sum_k c_k e^{-2 pi i k xi} (1 - phihat(xi / Delta_k)).
G itself is never materialized.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import zeta

from psflab.analysis.bump import BumpKernel
from psflab.constants import experiment as ec
from psflab.constants import kernel as kc
from psflab.errors import CheckFailed, UserError

ArrayLike = Union[float, np.ndarray]

FHAT_BLOCK = 512


@dataclass(eq=False)
class StepSpec:
  """Coefficients (c_k) and scales (Delta_k), k = 0..N.

  Args:
      c: coefficients.
      delta: scales, Delta_0 >= 1, consecutive ratios within [1/R, R].
      max_ratio: largest accepted R.

  Attributes:
      ratio_bound: the certified R = max_k max(Delta_{k+1}/Delta_k, Delta_k/Delta_{k+1}).
      monotone: whether Delta is strictly increasing.
  """
  c: np.ndarray
  delta: np.ndarray
  max_ratio: float = ec.MAX_DELTA_RATIO
  ratio_bound: float = field(init=False)
  monotone: bool = field(init=False)

  def __post_init__(self):
    c = np.array(self.c, dtype=float)
    delta = np.array(self.delta, dtype=float)
    if c.ndim != 1 or delta.ndim != 1 or len(c) == 0:
      raise UserError("c and delta must be non-empty one-dimensional sequences")
    if len(c) != len(delta):
      raise UserError(f"c has {len(c)} entries but delta has {len(delta)}")
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(delta))):
      raise UserError("c and delta must be finite")
    if delta[0] < 1.0:
      raise UserError(f"Delta_0 must be >= 1, got {delta[0]!r}")
    if np.any(delta <= 0):
      raise UserError("scales must be positive")
    if len(delta) > 1:
      ratios = delta[1:] / delta[:-1]
      ratio_bound = float(max(ratios.max(), (1.0 / ratios).max()))
    else:
      ratio_bound = 1.0
    if ratio_bound > self.max_ratio:
      raise UserError(f"consecutive scale ratio {ratio_bound:.4g} exceeds the bound "
                      f"{self.max_ratio:g}")
    c.setflags(write=False)
    delta.setflags(write=False)
    self.c = c
    self.delta = delta
    self.ratio_bound = ratio_bound
    self.monotone = bool(len(delta) == 1 or np.all(np.diff(delta) > 0))

  @property
  def N(self) -> int:
    return len(self.c) - 1

  @property
  def indices(self) -> np.ndarray:
    return np.arange(len(self.c))

  @property
  def delta_min(self) -> float:
    return float(self.delta.min())

  @property
  def delta_max(self) -> float:
    return float(self.delta.max())

  @property
  def c_sup(self) -> float:
    return float(np.abs(self.c).max())

  def require_monotone(self, what: str) -> None:
    if not self.monotone:
      raise UserError(f"{what} needs strictly increasing scales Delta_k")

  def with_c(self, c: Sequence[float]) -> "StepSpec":
    return StepSpec(c, self.delta, self.max_ratio)

  def scaled(self, factor: float) -> "StepSpec":
    return StepSpec(self.c * factor, self.delta, self.max_ratio)

  def to_dict(self) -> Dict[str, Any]:
    return {"c": [float(v) for v in self.c], "delta": [float(v) for v in self.delta]}

  @classmethod
  def from_dict(cls, data: Dict[str, Any], max_ratio: float = ec.MAX_DELTA_RATIO) -> "StepSpec":
    return cls(data["c"], data["delta"], max_ratio)


@dataclass
class FEvaluation:
  values: ArrayLike
  truncation_bound: float


def _window_radius(spec: StepSpec, kernel: BumpKernel, tol: float) -> np.ndarray:
  """Half-width of the window around k outside which term k is below tol/(N+1)."""
  k8 = kernel.decay_constant(kc.TAIL_ORDER)
  scale = np.abs(spec.c) * spec.delta * k8 * (spec.N + 1) / tol
  with np.errstate(divide="ignore"):
    radius = (np.maximum(scale, 1.0)**(1.0 / kc.TAIL_ORDER) - 1.0) / spec.delta
  return np.minimum(radius, kernel.grid_max / spec.delta)


def eval_F_bounded(spec: StepSpec, kernel: BumpKernel, x: ArrayLike,
                   tol: float = ec.EVAL_F_TOL) -> FEvaluation:
  """Evaluate F with a uniform bound on the dropped terms.

  Term k enters where K_8 (1 + Delta_k |x-k|)^-8 |c_k| Delta_k > tol/(N+1); the
  bound sums the envelope of every term at the edge of its window.
  """
  x_arr = np.asarray(x, dtype=float)
  if not np.all(np.isfinite(x_arr)):
    raise UserError("eval_F needs finite abscissae")
  flat = np.atleast_1d(x_arr).ravel()
  order = np.argsort(flat, kind="stable")
  xs = flat[order]
  acc = np.zeros_like(xs)

  radius = _window_radius(spec, kernel, tol)
  lefts = np.searchsorted(xs, spec.indices - radius, side="left")
  rights = np.searchsorted(xs, spec.indices + radius, side="right")
  for k in np.nonzero((spec.c != 0) & (rights > lefts))[0]:
    lo, hi = lefts[k], rights[k]
    d = spec.delta[k]
    acc[lo:hi] += spec.c[k] * d * kernel.phi((xs[lo:hi] - k) * d)

  out = np.empty_like(acc)
  out[order] = acc
  k8 = kernel.decay_constant(kc.TAIL_ORDER)
  bound = float(
      np.sum(np.abs(spec.c) * spec.delta * k8 * (1.0 + spec.delta * radius)**(-kc.TAIL_ORDER)))
  values = float(out[0]) if x_arr.ndim == 0 else out.reshape(x_arr.shape)
  return FEvaluation(values=values, truncation_bound=bound)


def eval_F(spec: StepSpec, kernel: BumpKernel, x: ArrayLike,
           tol: float = ec.EVAL_F_TOL) -> ArrayLike:
  """F(x) = sum_k c_k Delta_k phi((x - k) Delta_k).

  Example:
      >>> eval_F(StepSpec([1.0], [1.0]), kernel, 0.7) == kernel.phi(0.7)
      True
  """
  return eval_F_bounded(spec, kernel, x, tol).values


def eval_F_direct(spec: StepSpec, kernel: BumpKernel, x: ArrayLike) -> ArrayLike:
  """Untruncated sum over every term."""
  x_arr = np.atleast_1d(np.asarray(x, dtype=float))
  out = np.zeros_like(x_arr)
  for k in range(spec.N + 1):
    out += spec.c[k] * spec.delta[k] * kernel.phi((x_arr - k) * spec.delta[k])
  return float(out[0]) if np.ndim(x) == 0 else out


def _fourier_sum(spec: StepSpec, kernel: BumpKernel, xi: ArrayLike, complement: bool):
  xi_arr = np.asarray(xi, dtype=float)
  if np.isnan(xi_arr).any():
    raise UserError("frequency must not be NaN")
  flat = np.atleast_1d(xi_arr).ravel()
  k = spec.indices
  out = np.empty(len(flat), dtype=complex)
  for start in range(0, len(flat), FHAT_BLOCK):
    block = flat[start:start + FHAT_BLOCK]
    window = kernel.phihat(block[:, None] / spec.delta[None, :])
    if complement:
      window = 1.0 - window
    phase = np.exp(-2j * np.pi * np.outer(block, k))
    out[start:start + len(block)] = (phase * window) @ spec.c
  return complex(out[0]) if xi_arr.ndim == 0 else out.reshape(xi_arr.shape)


def eval_Fhat(spec: StepSpec, kernel: BumpKernel, xi: ArrayLike) -> Union[complex, np.ndarray]:
  """Fhat(xi): exact finite sum, zero for |xi| >= max Delta_k."""
  return _fourier_sum(spec, kernel, xi, complement=False)


def eval_Ghat(spec: StepSpec, kernel: BumpKernel, xi: ArrayLike) -> Union[complex, np.ndarray]:
  """Ghat(xi): zero for |xi| <= min Delta_k / 2, S_N(xi) for |xi| >= max Delta_k."""
  return _fourier_sum(spec, kernel, xi, complement=True)


class TrigKind(str, Enum):
  Head = "Head"
  Tail = "Tail"


@dataclass(frozen=True, eq=False)
class TrigPolyRef:
  """S_k = sum_{j<=k} c_j e^{-2 pi i j xi} (Head) or S~_k = sum_{j>=k} (Tail)."""
  spec: StepSpec
  kind: TrigKind
  k: int

  def __post_init__(self):
    if not 0 <= self.k <= self.spec.N:
      raise UserError(f"index k={self.k} outside 0..{self.spec.N}")

  def coefficients(self) -> Tuple[np.ndarray, np.ndarray]:
    """(frequencies j, coefficients c_j) of the polynomial."""
    if self.kind == TrigKind.Head:
      j = np.arange(0, self.k + 1)
    else:
      j = np.arange(self.k, self.spec.N + 1)
    return j, self.spec.c[j]


def trig_eval(poly: TrigPolyRef, xi: ArrayLike) -> Union[complex, np.ndarray]:
  xi_arr = np.asarray(xi, dtype=float)
  reduced = np.atleast_1d(xi_arr - np.floor(xi_arr)).ravel()
  j, c = poly.coefficients()
  values = np.exp(-2j * np.pi * np.outer(reduced, j)) @ c
  return complex(values[0]) if xi_arr.ndim == 0 else values.reshape(xi_arr.shape)


def abel_identity_check(spec: StepSpec, kernel: BumpKernel, xi: float) -> Tuple[complex, complex]:
  """Fhat(xi) directly and through sum_k S~_k(xi)(phihat(xi/Delta_k) - phihat(xi/Delta_{k-1})).

  phihat(xi/Delta_{-1}) is taken as 0.
  """
  a = np.asarray(kernel.phihat(xi / spec.delta), dtype=float)
  diff = a - np.concatenate([[0.0], a[:-1]])
  phase = np.exp(-2j * np.pi * spec.indices * (xi - math.floor(xi))) * spec.c
  tails = np.cumsum(phase[::-1])[::-1]
  return eval_Fhat(spec, kernel, xi), complex(np.dot(tails, diff))


def lipschitz_modulus(spec: StepSpec, kernel: BumpKernel) -> float:
  """Lipschitz constant of F: sum_k |c_k| Delta_k^2 sup|phi'|."""
  return float(np.sum(np.abs(spec.c) * spec.delta**2) * kernel.phi_lipschitz)


@dataclass
class SpikeDefect:
  """`bound` is None at n = 0, where the estimate does not apply."""
  n: int
  M: int
  defect: float
  bound: Optional[float] = None


def spike_constant(kernel: BumpKernel, M: int) -> float:
  """K'_M = K_E max(2 zeta(M+1), 2^(M+1)) with E the smallest validated order >= M+1."""
  if M < 1:
    raise UserError(f"spike bound needs M >= 1, got {M}")
  envelope = kernel.smallest_validated_order(M + 1)
  return kernel.decay_constant(envelope) * max(2.0 * float(zeta(M + 1)), 2.0**(M + 1))


def spike_defect(spec: StepSpec, kernel: BumpKernel, n: int, M: int) -> SpikeDefect:
  """|F(n) - phi(0) Delta_n c_n| against K'_M ||c||_inf (1/n + 1/Delta_{n//2})^M.

  The bound starts at n = 1; at n = 0 only the defect is reported.

  Raises:
      CheckFailed: if the defect exceeds the bound.
  """
  if not 0 <= n <= spec.N:
    raise UserError(f"n={n} outside 0..{spec.N}")
  spec.require_monotone("the spike bound")
  constant = spike_constant(kernel, M)
  value = eval_F(spec, kernel, float(n))
  defect = abs(value - kernel.phi(0.0) * spec.delta[n] * spec.c[n])
  if n == 0:
    return SpikeDefect(n=0, M=M, defect=float(defect))
  bound = constant * spec.c_sup * (1.0 / n + 1.0 / spec.delta[n // 2])**M
  if defect > bound:
    raise CheckFailed("spike_defect", {"n": n, "M": M, "N": spec.N}, defect, bound)
  return SpikeDefect(n=n, M=M, defect=float(defect), bound=float(bound))
