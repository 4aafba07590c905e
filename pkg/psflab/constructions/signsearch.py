"""Random sign selection for trigonometric partial sums.

For coefficients c and weights w, a choice of signs eps makes
(sum_k w_k ||S_k||_q^q)^(1/q), S_k = sum_{j<=k} eps_j c_j e^{-2 pi i j xi}, as small as
the L^2 value up to the Khintchine constant. A random draw does this on average;
the search keeps the best of many seeded draws and polishes it greedily.
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gamma as gamma_fn

from psflab.analysis.norms import PolyKind, TORUS_BLOCK, cumulative_torus_norms, torus_grid_size
from psflab.analysis.regime import INF, Extended, format_extended, to_extended
from psflab.constants import experiment as ec
from psflab.errors import CheckFailed, UserError
from psflab.utils.logging import get_logger
from psflab.utils.misc import Chunker
from psflab.utils.parallel import ordered_map

logger = get_logger(logger_level="INFO", name=__name__)

CHUNK_TRIALS = 16


@dataclass
class SignSearchProblem:
  """Coefficients, nonnegative weights, exponent and search budget."""
  c: np.ndarray
  w: np.ndarray
  q: Extended
  trials: int = ec.DEFAULT_TRIALS
  seed: int = ec.DEFAULT_SEED

  def __post_init__(self):
    self.c = np.asarray(self.c, dtype=float)
    self.w = np.asarray(self.w, dtype=float)
    self.q = to_extended(self.q)
    if self.c.ndim != 1 or len(self.c) == 0:
      raise UserError("coefficients must be a non-empty sequence")
    if self.w.shape != self.c.shape:
      raise UserError(f"need one weight per coefficient, got {len(self.w)} for {len(self.c)}")
    if np.any(self.w < 0):
      raise UserError("weights must be nonnegative")
    if self.q is not INF and self.q < 1:
      raise UserError(f"q must be >= 1, got {format_extended(self.q)}")
    if self.trials < 1:
      raise UserError(f"trials must be >= 1, got {self.trials}")

  @property
  def length(self) -> int:
    return len(self.c)


@dataclass
class SignSearchResult:
  signs: np.ndarray
  objective: float
  baseline: float
  method: str
  trial: int

  @property
  def ratio(self) -> float:
    return self.objective / self.baseline if self.baseline > 0 else 1.0

  def to_dict(self) -> Dict[str, Any]:
    return {
        "signs": [int(s) for s in self.signs],
        "objective": self.objective,
        "baseline": self.baseline,
        "ratio": self.ratio,
        "method": self.method,
        "trial": self.trial,
    }


def khintchine_constant(q) -> float:
  """Upper Khintchine constant (2^(q/2) Gamma((q+1)/2)/sqrt(pi))^(1/q); 1 for q <= 2."""
  qf = float(to_extended(q))
  if qf <= 2:
    return 1.0
  return (2.0**(qf / 2.0) * float(gamma_fn((qf + 1.0) / 2.0)) / math.sqrt(math.pi))**(1.0 / qf)


def _require_finite(q: Extended) -> float:
  if q is INF:
    raise UserError("the sign objective needs finite q; use salem_zygmund_check for q = inf")
  return float(q)


def khintchine_objective(signs: Sequence[float], problem: SignSearchProblem) -> float:
  """(sum_k w_k ||S_k||_q^q)^(1/q) for the signed coefficients."""
  qf = _require_finite(problem.q)
  eps = np.asarray(signs, dtype=float)
  if eps.shape != problem.c.shape:
    raise UserError(f"need {problem.length} signs, got {len(eps)}")
  norms = cumulative_torus_norms(eps * problem.c, problem.q, PolyKind.Head).values
  return math.fsum(problem.w * norms**qf)**(1.0 / qf)


def baseline(problem: SignSearchProblem) -> float:
  """(sum_k w_k ||S_k||_2^q)^(1/q); ||S_k||_2 does not depend on the signs."""
  qf = _require_finite(problem.q)
  l2 = np.sqrt(np.cumsum(problem.c**2))
  return math.fsum(problem.w * l2**qf)**(1.0 / qf)


class _BatchObjective:
  """The objective for many sign vectors at once on the torus_norm sample grid."""

  def __init__(self, problem: SignSearchProblem):
    self.problem = problem
    self.qf = _require_finite(problem.q)
    n = problem.length
    self.size = torus_grid_size(n, problem.q)
    m = np.arange(self.size)
    j = np.arange(n)
    self.base = problem.c[:, None] * np.exp(-2j * np.pi * np.outer(j, m) / self.size)
    self.batch = max(1, TORUS_BLOCK // (n * self.size))

  def __call__(self, signs: np.ndarray) -> np.ndarray:
    signs = np.atleast_2d(signs)
    out = np.empty(len(signs))
    for start in range(0, len(signs), self.batch):
      block = signs[start:start + self.batch]
      partial = np.cumsum(block[:, :, None] * self.base[None, :, :], axis=1)
      powers = (np.abs(partial)**self.qf).mean(axis=2)
      out[start:start + len(block)] = (powers @ self.problem.w)**(1.0 / self.qf)
    return out


def _trial_signs(seed_seq: np.random.SeedSequence, n: int) -> np.ndarray:
  rng = np.random.default_rng(seed_seq)
  return rng.choice(np.array([-1.0, 1.0]), size=n)


def draw_signs(problem: SignSearchProblem) -> np.ndarray:
  """The seeded Monte-Carlo sign vectors, one row per trial."""
  children = np.random.SeedSequence(problem.seed).spawn(problem.trials)
  return np.array([_trial_signs(child, problem.length) for child in children])


def _greedy_pass(signs: np.ndarray, problem: SignSearchProblem, size: int) -> np.ndarray:
  """Flip each sign in turn, keeping flips that strictly lower the objective.

  Head sums are updated in place: flipping eps_k shifts S_j for j >= k by
  -2 eps_k c_k e^{-2 pi i k m/size}.
  """
  qf = float(problem.q)
  n = problem.length
  m = np.arange(size)
  signs = signs.copy()
  terms = (signs * problem.c)[:, None] * np.exp(-2j * np.pi * np.outer(np.arange(n), m) / size)
  partial = np.cumsum(terms, axis=0)
  powers = (np.abs(partial)**qf).mean(axis=1)
  current = float(powers @ problem.w)
  for k in range(n):
    if problem.c[k] == 0:
      continue
    shift = -2.0 * terms[k]
    moved = partial[k:] + shift[None, :]
    moved_powers = (np.abs(moved)**qf).mean(axis=1)
    candidate = current - float(powers[k:] @ problem.w[k:]) + float(moved_powers @ problem.w[k:])
    if candidate < current:
      signs[k] = -signs[k]
      terms[k] = -terms[k]
      partial[k:] = moved
      powers[k:] = moved_powers
      current = candidate
  return signs


def exhaustive_search(problem: SignSearchProblem) -> SignSearchResult:
  """Every sign vector with eps_0 = +1; the objective is invariant under a global flip.

  Raises:
      UserError: beyond EXHAUSTIVE_MAX_LEN + 1 coefficients.
  """
  n = problem.length
  if n - 1 > ec.EXHAUSTIVE_MAX_LEN:
    raise UserError(f"exhaustive mode is limited to N <= {ec.EXHAUSTIVE_MAX_LEN}, got N = {n - 1}")
  objective = _BatchObjective(problem)
  count = 1 << (n - 1)
  bits = np.arange(n - 1)
  best_value, best_index = math.inf, -1
  for start in range(0, count, 4096):
    index = np.arange(start, min(count, start + 4096))
    flips = (index[:, None] >> bits[None, :]) & 1
    signs = np.concatenate([np.ones((len(index), 1)), 1.0 - 2.0 * flips], axis=1)
    values = objective(signs)
    k = int(np.argmin(values))
    if values[k] < best_value:
      best_value, best_index = float(values[k]), int(index[k])
  flips = (best_index >> np.arange(n - 1)) & 1
  signs = np.concatenate([[1.0], 1.0 - 2.0 * flips])
  return SignSearchResult(signs, khintchine_objective(signs, problem), baseline(problem),
                          "exhaustive", best_index)


def search_signs(problem: SignSearchProblem,
                 threads: Optional[int] = None,
                 polish: int = ec.GREEDY_POLISH,
                 check: bool = True) -> SignSearchResult:
  """Best of `problem.trials` seeded draws, then one greedy pass on the `polish` best.

  Ties between trials go to the lowest trial index. With `check`, the result must
  satisfy objective <= C_q baseline (C_q the Khintchine constant with sampling slack).

  Raises:
      UserError: for q = inf.
      CheckFailed: if the best objective exceeds the Khintchine bound.
  """
  _require_finite(problem.q)
  signs = draw_signs(problem)
  objective = _BatchObjective(problem)
  chunks = Chunker(list(range(problem.trials)), CHUNK_TRIALS).chunk()
  values = np.concatenate(ordered_map(lambda idx: objective(signs[idx]), chunks, threads=threads,
                                      desc="signs"))
  order = np.lexsort((np.arange(len(values)), values))
  best_trial = int(order[0])
  best_signs, best_value, method = signs[best_trial], float(values[best_trial]), "monte-carlo"

  candidates = [int(i) for i in order[:max(0, polish)]]
  polished = ordered_map(lambda i: _greedy_pass(signs[i], problem, objective.size), candidates,
                         threads=threads, desc="greedy")
  if polished:
    polished_values = objective(np.array(polished))
    k = int(np.argmin(polished_values))
    if polished_values[k] < best_value:
      best_signs, best_value, method = polished[k], float(polished_values[k]), "greedy"
      best_trial = candidates[k]

  result = SignSearchResult(np.asarray(best_signs), khintchine_objective(best_signs, problem),
                            baseline(problem), method, best_trial)
  if check:
    constant = khintchine_constant(problem.q) * (1.0 + ec.KHINTCHINE_SLACK)**(1.0 / float(problem.q))
    if result.objective > constant * result.baseline * (1.0 + 1e-12):
      raise CheckFailed("search_signs", {"q": format_extended(problem.q), "N": problem.length - 1,
                                         "trials": problem.trials, "seed": problem.seed},
                        result.objective, constant * result.baseline)
  logger.debug(f"sign search q={problem.q}: objective/baseline = {result.ratio:.4f} ({method})")
  return result


@dataclass
class ExpectationCheck:
  q: Extended
  draws: int
  mean_power: float
  bound_power: float

  @property
  def ratio(self) -> float:
    return self.mean_power / self.bound_power

  def to_dict(self) -> Dict[str, Any]:
    return {"q": format_extended(self.q), "draws": self.draws, "mean_power": self.mean_power,
            "bound_power": self.bound_power, "ratio": self.ratio}


def expectation_check(problem: SignSearchProblem,
                      slack: float = ec.KHINTCHINE_SLACK) -> ExpectationCheck:
  """Average of objective^q over the seeded draws against C_q^q baseline^q.

  Raises:
      CheckFailed: if the average exceeds the bound by more than `slack`.
  """
  qf = _require_finite(problem.q)
  values = _BatchObjective(problem)(draw_signs(problem))
  mean_power = math.fsum(values**qf) / len(values)
  bound_power = (khintchine_constant(problem.q) * baseline(problem))**qf
  result = ExpectationCheck(problem.q, len(values), mean_power, bound_power)
  if mean_power > (1.0 + slack) * bound_power:
    raise CheckFailed("khintchine_expectation", {"q": format_extended(problem.q),
                                                 "draws": problem.trials, "seed": problem.seed},
                      mean_power, (1.0 + slack) * bound_power)
  return result


def salem_zygmund_ratios(signs: Sequence[float], c: Sequence[float]) -> np.ndarray:
  """||S_k||_inf / ((log(k+2))^(1/2) ||S_k||_2) for every k; nan where S_k = 0."""
  coeffs = np.asarray(signs, dtype=float) * np.asarray(c, dtype=float)
  sup = cumulative_torus_norms(coeffs, INF, PolyKind.Head).values
  l2 = np.sqrt(np.cumsum(coeffs**2))
  k = np.arange(len(coeffs))
  with np.errstate(invalid="ignore", divide="ignore"):
    return np.where(l2 > 0, sup / (np.sqrt(np.log(k + 2.0)) * l2), np.nan)


def salem_zygmund_check(c: Sequence[float], trials: int = ec.DEFAULT_TRIALS,
                        seed: int = ec.DEFAULT_SEED,
                        threads: Optional[int] = None,
                        ratio_bound: float = ec.SALEM_ZYGMUND_RATIO) -> Tuple[np.ndarray, float]:
  """Signs whose worst Salem-Zygmund ratio over k is smallest among seeded draws.

  Raises:
      CheckFailed: if even the best draw has a ratio above `ratio_bound`.
  """
  c = np.asarray(c, dtype=float)
  if len(c) < 2:
    raise UserError("the Salem-Zygmund check needs at least two coefficients")
  if trials < 1:
    raise UserError(f"trials must be >= 1, got {trials}")
  children = np.random.SeedSequence(seed).spawn(trials)

  def worst(child) -> Tuple[np.ndarray, float]:
    signs = _trial_signs(child, len(c))
    return signs, float(np.nanmax(salem_zygmund_ratios(signs, c)))

  results: List[Tuple[np.ndarray, float]] = ordered_map(worst, children, threads=threads,
                                                        desc="salem-zygmund")
  best = min(range(len(results)), key=lambda i: (results[i][1], i))
  signs, worst_ratio = results[best]
  if worst_ratio > ratio_bound:
    raise CheckFailed("salem_zygmund", {"n": len(c), "trials": trials, "seed": seed}, worst_ratio,
                      ratio_bound)
  return signs, worst_ratio
