"""Partial sums, smoothed sums and defect series for the summation formula.

P_N(g) = sum_{|k|<=N} g(k). A defect series compares P_N(f) with P_M(fhat),
M = ceil(N^gamma), along a list of N.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.special import zeta

from psflab.analysis import stepfn
from psflab.analysis.bump import BumpKernel
from psflab.analysis.norms import line_norm, power_weight
from psflab.analysis.quadrature import gauss_legendre_panels
from psflab.analysis.regime import (INF, Extended, ParamPoint, PsfTag, classify_psf,
                                    coupled_index, format_extended, reciprocal, to_extended)
from psflab.constants import experiment as ec
from psflab.errors import CheckFailed, RegimeError, UserError
from psflab.utils.logging import get_logger
from psflab.utils.misc import compensated_sum, count_monotone_violations
from psflab.utils.parallel import ordered_map

logger = get_logger(logger_level="INFO", name=__name__)

DIRICHLET_NODES = 20
DIRICHLET_SUP_OVERSAMPLE = 64
IMAG_TOL = 1e-9


class Provenance(str, Enum):
  ClosedForm = "ClosedForm"
  StepSpecDerived = "StepSpec-derived"
  Composite = "Composite"


@dataclass
class FunctionPair:
  """A function and its Fourier transform, both vectorized.

  Args:
      f: x -> f(x) on arrays.
      fhat: xi -> fhat(xi) on arrays, real or complex.
      provenance: how fhat was obtained.
      name: short identifier used in records.
      metadata: free-form description (parameters, per-term norms).
  """
  f: Callable[[np.ndarray], np.ndarray]
  fhat: Callable[[np.ndarray], np.ndarray]
  provenance: Provenance
  name: str = "pair"
  metadata: Dict[str, Any] = field(default_factory=dict)


def gaussian_pair(t: float = 1.0) -> FunctionPair:
  """f(x) = exp(-pi t x^2), fhat(xi) = t^-1/2 exp(-pi xi^2 / t)."""
  if not t > 0:
    raise UserError(f"Gaussian width t must be positive, got {t}")
  t = float(t)

  def f(x):
    return np.exp(-np.pi * t * np.square(np.asarray(x, dtype=float)))

  def fhat(xi):
    return np.exp(-np.pi * np.square(np.asarray(xi, dtype=float)) / t) / math.sqrt(t)

  return FunctionPair(f, fhat, Provenance.ClosedForm, name="gaussian", metadata={"t": t})


def stepspec_pair(spec: stepfn.StepSpec, kernel: BumpKernel, name: str = "stepspec") -> FunctionPair:
  """(F, Fhat) of a step spec; Fhat is the exact finite sum."""

  def f(x):
    return stepfn.eval_F(spec, kernel, np.asarray(x, dtype=float))

  def fhat(xi):
    return stepfn.eval_Fhat(spec, kernel, np.asarray(xi, dtype=float))

  reach = kernel.grid_max + 1.0
  return FunctionPair(
      f, fhat, Provenance.StepSpecDerived, name=name,
      metadata={"N": spec.N, "R": spec.ratio_bound, "f_domain": (-reach, spec.N + reach),
                "fhat_domain": (-spec.delta_max, spec.delta_max)})


def combine_pairs(terms: Sequence[FunctionPair], weights: Sequence[float],
                  name: str = "composite") -> FunctionPair:
  """sum_j weights[j] * terms[j], evaluated term by term in a fixed order."""
  if len(terms) != len(weights) or not terms:
    raise UserError("combine_pairs needs one weight per term and at least one term")
  weights = [float(w) for w in weights]

  def f(x):
    return sum(w * term.f(x) for w, term in zip(weights, terms))

  def fhat(xi):
    return sum(w * term.fhat(xi) for w, term in zip(weights, terms))

  return FunctionPair(f, fhat, Provenance.Composite, name=name,
                      metadata={"terms": [term.name for term in terms], "weights": weights})


def perturbed_gaussian_pair(t: float, eps: float, spec: stepfn.StepSpec,
                            kernel: BumpKernel) -> FunctionPair:
  """Gaussian plus eps times a step function."""
  pair = combine_pairs([gaussian_pair(t), stepspec_pair(spec, kernel)], [1.0, eps],
                       name="perturbed_gaussian")
  pair.metadata.update({"t": float(t), "eps": float(eps), "N": spec.N})
  return pair


def _as_real(value, what: str) -> float:
  if isinstance(value, complex):
    scale = max(abs(value.real), 1.0)
    if abs(value.imag) > IMAG_TOL * scale:
      logger.warning(f"{what} has imaginary part {value.imag:.3g}; keeping the real part")
    return value.real
  return float(value)


def partial_sum(g: Callable[[np.ndarray], np.ndarray], N: int):
  """P_N(g) = sum_{|k|<=N} g(k), compensated.

  Example:
      >>> round(partial_sum(gaussian_pair().f, 8), 7)
      1.0864348
  """
  if N < 0:
    raise UserError(f"N must be >= 0, got {N}")
  k = np.arange(-N, N + 1, dtype=float)
  return compensated_sum(np.asarray(g(k)))


def smoothed_sum(g: Callable[[np.ndarray], np.ndarray], N: int, kernel: BumpKernel):
  """P_{Phi,N}(g) = sum_{|k|<N} g(k) phihat(k/N)."""
  if N < 1:
    raise UserError(f"N must be >= 1, got {N}")
  k = np.arange(-(N - 1), N, dtype=float)
  return compensated_sum(np.asarray(g(k)) * kernel.phihat(k / N))


def weighted_sum_Q(f: Callable[[np.ndarray], np.ndarray], c: Sequence[float], gamma, N: int):
  """Q_N(f) = N^-gamma sum_{k=0}^N c_k f(k) for a non-decreasing c_k >= 0.

  Raises:
      UserError: for a decreasing or negative c, or fewer than N+1 weights.
  """
  c = np.asarray(c, dtype=float)
  if len(c) < N + 1:
    raise UserError(f"need {N + 1} weights c_0..c_N, got {len(c)}")
  c = c[:N + 1]
  if np.any(c < 0):
    raise UserError("weights c_k must be non-negative")
  if np.any(np.diff(c) < 0):
    raise UserError("weights c_k must be non-decreasing")
  gamma = to_extended(gamma)
  if gamma is INF or gamma < 0:
    raise UserError(f"gamma must be a finite non-negative rational, got {gamma}")
  k = np.arange(N + 1, dtype=float)
  total = compensated_sum(c * np.asarray(f(k)))
  scale = float(N)**-float(gamma) if N > 0 else 1.0
  return total * scale


def dirichlet(M: int, xi):
  """D_M(xi) = sum_{|k|<=M} e^{2 pi i k xi} = sin((2M+1) pi xi) / sin(pi xi).

  Equals 2M+1 at the integers.
  """
  if M < 0:
    raise UserError(f"M must be >= 0, got {M}")
  xi = np.asarray(xi, dtype=float)
  delta = xi - np.round(xi)
  n = 2 * M + 1
  out = n * np.sinc(n * delta) / np.sinc(delta)
  return float(out) if out.ndim == 0 else out


def dirichlet_naive(M: int, xi) -> np.ndarray:
  """Direct exponential sum, for cross-checks."""
  xi = np.atleast_1d(np.asarray(xi, dtype=float))
  k = np.arange(-M, M + 1)
  return np.real(np.exp(2j * np.pi * np.outer(xi, k)).sum(axis=1))


@dataclass
class DirichletTail:
  M: int
  N: int
  beta: Fraction
  qprime: Extended
  left: float
  right: float

  @property
  def ratio(self) -> float:
    return self.left / self.right

  def to_dict(self) -> Dict[str, Any]:
    return {
        "M": self.M,
        "N": self.N,
        "beta": format_extended(self.beta),
        "qprime": format_extended(self.qprime),
        "left": self.left,
        "right": self.right,
        "ratio": self.ratio,
    }


def _dirichlet_cell_nodes(M: int, N: int):
  """GL nodes on [0, 1] with panel edges at the zeros of D_M(N/2 + s)."""
  n = 2 * M + 1
  offset = (N * n / 2.0) % 1.0
  zeros = (np.arange(0, n + 2) - offset) / n
  edges = np.unique(np.clip(np.concatenate([[0.0, 1.0], zeros]), 0.0, 1.0))
  return gauss_legendre_panels(edges, DIRICHLET_NODES)


def dirichlet_tail_bound(M: int, N: int, beta, qprime,
                         constant: float = ec.DIRICHLET_TAIL_CONSTANT) -> DirichletTail:
  """(int_{N/2}^inf |D_M|^q' |xi|^{-q' beta})^{1/q'} against M^{1/q} N^{-beta + 1/q'}.

  The tail is folded onto one period: sum over cells m of |xi|^{-q' beta} at
  xi = N/2 + m + s is the Hurwitz zeta value zeta(q' beta, N/2 + s).

  Raises:
      UserError: if beta <= 1/q' (the tail diverges).
      CheckFailed: if left > constant * right.
  """
  if M < 0 or N < 1:
    raise UserError(f"need M >= 0 and N >= 1, got M={M}, N={N}")
  beta = to_extended(beta)
  qprime = to_extended(qprime)
  inv_qprime = reciprocal(qprime)
  if beta is INF or beta <= inv_qprime:
    raise UserError(f"the Dirichlet tail diverges unless beta > 1/q' = {format_extended(inv_qprime)}; "
                    f"got beta = {format_extended(beta)}")
  start = N / 2.0
  if qprime is INF:
    # |D_M| is 1-periodic and |xi|^-beta decreasing: the sup sits in the first period
    s = np.linspace(0.0, 1.0, DIRICHLET_SUP_OVERSAMPLE * (2 * M + 1) + 1)
    left = float(np.max(np.abs(dirichlet(M, start + s)) * (start + s)**-float(beta)))
  else:
    r = float(qprime)
    s, ws = _dirichlet_cell_nodes(M, N)
    integrand = np.abs(dirichlet(M, start + s))**r * zeta(r * float(beta), start + s)
    left = math.fsum(ws * integrand)**(1.0 / r)
  inv_q = 1 - inv_qprime
  right = float(M)**float(inv_q) * float(N)**(-float(beta) + float(inv_qprime))
  result = DirichletTail(M, N, beta, qprime, float(left), right)
  if result.left > constant * right:
    raise CheckFailed("dirichlet_tail_bound", result.to_dict(), result.left, constant * right)
  return result


@dataclass
class DefectRow:
  N: int
  M: int
  p_n_f: float
  p_m_fhat: float

  @property
  def defect(self) -> float:
    return self.p_n_f - self.p_m_fhat


@dataclass
class DefectSeries:
  """P_N(f) - P_M(fhat) along N with the metadata to reproduce it."""
  rows: List[DefectRow]
  point: ParamPoint
  gamma: Fraction
  family: str
  seed: int = ec.DEFAULT_SEED

  @property
  def defects(self) -> np.ndarray:
    return np.array([row.defect for row in self.rows])

  def monotone_violations(self, floor: float = ec.MONOTONE_NOISE_FLOOR) -> int:
    return count_monotone_violations(list(np.abs(self.defects)), floor)

  def to_frame(self) -> pd.DataFrame:
    return pd.DataFrame({
        "N": [row.N for row in self.rows],
        "M": [row.M for row in self.rows],
        "P_N_f": [row.p_n_f for row in self.rows],
        "P_M_fhat": [row.p_m_fhat for row in self.rows],
        "defect": [row.defect for row in self.rows],
        "gamma": [format_extended(self.gamma)] * len(self.rows),
        "seed": [self.seed] * len(self.rows),
    })


def series_gamma(point: ParamPoint) -> Fraction:
  """gamma used to couple M to N: the equality exponent, or 1 elsewhere.

  Raises:
      RegimeError: in the Fails or Inadmissible regimes.
  """
  verdict = classify_psf(point)
  if verdict.tag in (PsfTag.Fails, PsfTag.Inadmissible):
    raise RegimeError(f"point {point} is {verdict.tag.value}: {verdict.note}; no convergence "
                      f"guarantee exists, so no defect series is computed. Raw partial sums "
                      f"remain available")
  if verdict.tag == PsfTag.ConditionalEquality:
    return verdict.gamma
  return Fraction(1)


def psf_defect_series(pair: FunctionPair,
                      point: ParamPoint,
                      N_list: Sequence[int],
                      seed: int = ec.DEFAULT_SEED,
                      threads: Optional[int] = None,
                      progress: bool = False) -> DefectSeries:
  """Rows (N, M, P_N(f), P_M(fhat)) for each N with M = ceil(N^gamma).

  Each N is independent; rows come back in N_list order.
  """
  gamma = series_gamma(point)

  def row(N: int) -> DefectRow:
    M = coupled_index(N, gamma)
    return DefectRow(
        N=int(N),
        M=M,
        p_n_f=_as_real(partial_sum(pair.f, N), f"P_{N}(f)"),
        p_m_fhat=_as_real(partial_sum(pair.fhat, M), f"P_{M}(fhat)"))

  rows = ordered_map(row, [int(n) for n in N_list], threads=threads, desc="defects",
                     progress=progress)
  logger.debug(f"defect series for {pair.name} at {point}: {len(rows)} rows, gamma={gamma}")
  return DefectSeries(rows=rows, point=point, gamma=gamma, family=pair.name, seed=seed)


@dataclass
class SmoothingDefects:
  N: int
  M: int
  smoothed: float
  spatial: float
  fourier: float

  def to_dict(self) -> Dict[str, Any]:
    return {"N": self.N, "M": self.M, "smoothed": self.smoothed, "spatial": self.spatial,
            "fourier": self.fourier}


def smoothing_defects(pair: FunctionPair, N: int, kernel: BumpKernel,
                      gamma=Fraction(1)) -> SmoothingDefects:
  """Distances of the smoothed sum P_{Phi,N}(fhat) to both sharp sums.

  spatial = |P_{Phi,N}(fhat) - P_M(f)| with M = ceil(N^{1/gamma}),
  fourier = |P_{Phi,N}(fhat) - P_N(fhat)|.
  """
  gamma = Fraction(to_extended(gamma))
  if gamma <= 0:
    raise UserError(f"gamma must be positive, got {gamma}")
  M = coupled_index(N, 1 / gamma)
  smoothed = _as_real(smoothed_sum(pair.fhat, N, kernel), "smoothed sum")
  sharp_fhat = _as_real(partial_sum(pair.fhat, N), "P_N(fhat)")
  sharp_f = _as_real(partial_sum(pair.f, M), "P_M(f)")
  return SmoothingDefects(N=N, M=M, smoothed=smoothed, spatial=abs(smoothed - sharp_f),
                          fourier=abs(smoothed - sharp_fhat))


def theta_defect(t: float, N: int) -> float:
  """|sum_{|n|<=N} e^{-pi t n^2} - t^-1/2 sum_{|n|<=N} e^{-pi n^2/t}|."""
  pair = gaussian_pair(t)
  return abs(partial_sum(pair.f, N) - partial_sum(pair.fhat, N))


@dataclass
class EmbeddingCheck:
  """||f||_1 + ||fhat||_1 (lhs) against ||f |x|^alpha||_p + ||fhat |xi|^beta||_q (rhs)."""
  point: ParamPoint
  lhs: float
  rhs: float

  @property
  def ratio(self) -> float:
    return self.lhs / self.rhs

  def to_dict(self) -> Dict[str, Any]:
    return {**self.point.to_dict(), "lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio}


def embedding_check(pair: FunctionPair, point: ParamPoint, constant: float = ec.EMBEDDING_CONSTANT,
                    tol: float = 1e-8) -> EmbeddingCheck:
  """Checks that the weighted pair norms control ||f||_1 + ||fhat||_1.

  Integrals run over the pair's `f_domain` and `fhat_domain` metadata when present,
  over the whole line otherwise.

  Raises:
      RegimeError: if the point is inadmissible.
      CheckFailed: if lhs > constant * rhs.
  """
  if not point.admissible:
    raise RegimeError(f"the L^1 embedding needs an admissible point, got {point}")
  line = (-math.inf, math.inf)
  f_domain = pair.metadata.get("f_domain", line)
  fhat_domain = pair.metadata.get("fhat_domain", line)
  lhs = (line_norm(pair.f, 1, domain=f_domain, tol=tol).value +
         line_norm(pair.fhat, 1, domain=fhat_domain, tol=tol).value)
  rhs = (line_norm(pair.f, point.p, power_weight(point.alpha), f_domain, tol).value +
         line_norm(pair.fhat, point.q, power_weight(point.beta), fhat_domain, tol).value)
  result = EmbeddingCheck(point, lhs, rhs)
  logger.debug(f"embedding for {pair.name} at {point}: ratio {result.ratio:.4g}")
  if not result.ratio <= constant:
    raise CheckFailed("embedding", {**point.to_dict(), "pair": pair.name}, result.ratio, constant)
  return result
