"""Vectorized adaptive Gauss-Kronrod (7/15) quadrature.

Every pass evaluates the 15-point rule on all still-active intervals at once,
accepts intervals whose Kronrod-Gauss difference fits their share of the error
budget and bisects the rest.
"""

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import roots_legendre

from psflab.errors import IntegrationError

# 15-point Kronrod abscissae (positive half, descending) and weights.
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714
])
# 7-point Gauss weights for the abscissae _XGK[1], _XGK[3], _XGK[5], _XGK[7].
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327
])


def _full_rule():
  nodes = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
  wk = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
  wg = np.zeros(15)
  for j in (1, 3, 5):
    wg[j] = _WG[(j - 1) // 2]
    wg[14 - j] = _WG[(j - 1) // 2]
  wg[7] = _WG[3]
  return nodes, wk, wg


_NODES, _WK, _WG15 = _full_rule()

MAX_DEPTH = 60
SINGULAR_DEPTH = 30
SINGULAR_RATIO = 0.98
MAX_INTERVALS = 200000
EVAL_BLOCK = 1 << 16


@dataclass
class QuadResult:
  value: float
  abs_error: float
  intervals: int


def _map_infinite(fn: Callable, a: float, b: float) -> Tuple[Callable, float, float]:
  """Map [a, inf) or (-inf, b] onto [0, 1)."""
  if math.isinf(b) and not math.isinf(a):

    def g(t):
      s = 1.0 - t
      return fn(a + t / s) / (s * s)

    return g, 0.0, 1.0
  if math.isinf(a) and not math.isinf(b):

    def g(t):
      s = 1.0 - t
      return fn(b - t / s) / (s * s)

    return g, 0.0, 1.0
  return fn, a, b


def _evaluate(fn: Callable, lo: np.ndarray, hi: np.ndarray):
  mid = 0.5 * (lo + hi)
  half = 0.5 * (hi - lo)
  x = mid[:, None] + half[:, None] * _NODES[None, :]
  flat = x.ravel()
  values = np.empty_like(flat)
  for start in range(0, len(flat), EVAL_BLOCK):
    values[start:start + EVAL_BLOCK] = fn(flat[start:start + EVAL_BLOCK])
  fx = values.reshape(x.shape)
  kronrod = half * (fx @ _WK)
  gauss = half * (fx @ _WG15)
  mass = half * (np.abs(fx) @ _WK)
  return kronrod, np.abs(kronrod - gauss), mass


def _integrate_finite(fn: Callable, edges: np.ndarray, tol: float) -> QuadResult:
  lo, hi = edges[:-1].copy(), edges[1:].copy()
  depth = np.zeros(len(lo), dtype=int)
  parent_mass = np.full(len(lo), np.inf)
  total_width = float(edges[-1] - edges[0])
  accepted: List[Tuple[np.ndarray, np.ndarray, np.ndarray]] = []
  total_intervals = 0

  while len(lo):
    kronrod, err, mass = _evaluate(fn, lo, hi)
    if not np.all(np.isfinite(kronrod)):
      raise IntegrationError("integrand is not finite on the integration interval")
    total_mass = float(mass.sum()) + sum(float(m.sum()) for _, _, m in accepted) or 1.0
    budget = 0.5 * tol * ((hi - lo) / total_width + mass / total_mass)
    tiny = (hi - lo) <= 64 * np.finfo(float).eps * np.maximum(np.abs(lo), 1.0)
    done = (err <= budget) | tiny | (depth >= MAX_DEPTH)

    singular = (~done) & (depth > SINGULAR_DEPTH) & (mass >= SINGULAR_RATIO * parent_mass)
    if singular.any():
      where = float(lo[singular][0])
      raise IntegrationError(f"non-integrable singularity detected near x={where:.6g}: "
                             f"mass does not shrink under refinement")

    accepted.append((lo[done], kronrod[done], err[done]))
    total_intervals += int(done.sum())
    if total_intervals + 2 * int((~done).sum()) > MAX_INTERVALS:
      raise IntegrationError("adaptive quadrature exceeded its interval limit")

    keep = ~done
    lo, hi, depth, mass_keep = lo[keep], hi[keep], depth[keep], mass[keep]
    mid = 0.5 * (lo + hi)
    lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
    depth = np.concatenate([depth, depth]) + 1
    parent_mass = np.concatenate([mass_keep, mass_keep])

  # fixed left-to-right accumulation order
  starts = np.concatenate([a for a, _, _ in accepted]) if accepted else np.zeros(0)
  values = np.concatenate([v for _, v, _ in accepted]) if accepted else np.zeros(0)
  errors = np.concatenate([e for _, _, e in accepted]) if accepted else np.zeros(0)
  order = np.argsort(starts, kind="stable")
  return QuadResult(
      value=math.fsum(values[order]),
      abs_error=math.fsum(errors[order]),
      intervals=total_intervals)


def adaptive_integrate(fn: Callable[[np.ndarray], np.ndarray],
                       a: float,
                       b: float,
                       tol: float = 1e-10,
                       breakpoints: Optional[Sequence[float]] = None,
                       initial: int = 1) -> QuadResult:
  """Integrate a vectorized function over [a, b]; either end may be infinite.

  Args:
      fn: maps an array of abscissae to an array of values.
      a: left end.
      b: right end.
      tol: absolute error target.
      breakpoints: points inside (a, b) where the integrand is not smooth.
      initial: number of equal pieces each finite segment starts with.

  Returns:
      QuadResult: value, a-posteriori absolute error, number of accepted intervals.

  Raises:
      IntegrationError: on a detected non-integrable singularity or non-finite values.
  """
  if a == b:
    return QuadResult(0.0, 0.0, 0)
  if a > b:
    res = adaptive_integrate(fn, b, a, tol, breakpoints, initial)
    return QuadResult(-res.value, res.abs_error, res.intervals)

  cuts = sorted(set(float(c) for c in (breakpoints or ()) if a < c < b))
  if math.isinf(a) and math.isinf(b) and not cuts:
    cuts = [0.0]
  points = [a] + cuts + [b]
  segments = list(zip(points[:-1], points[1:]))
  share = tol / len(segments)

  value, error, intervals = [], [], 0
  for lo, hi in segments:
    if math.isinf(lo) or math.isinf(hi):
      g, ta, tb = _map_infinite(fn, lo, hi)
      res = _integrate_finite(g, np.linspace(ta, tb, 8 * initial + 1), share)
      value.append(res.value)
      error.append(res.abs_error)
      intervals += res.intervals
    else:
      piece = np.linspace(lo, hi, initial + 1)
      res = _integrate_finite(fn, piece, share)
      value.append(res.value)
      error.append(res.abs_error)
      intervals += res.intervals
  return QuadResult(math.fsum(value), math.fsum(error), intervals)


def gauss_legendre_panels(edges: np.ndarray, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
  """Composite Gauss-Legendre nodes and weights over consecutive panels."""
  x, w = roots_legendre(nodes)
  edges = np.asarray(edges, dtype=float)
  half = 0.5 * np.diff(edges)
  mid = 0.5 * (edges[:-1] + edges[1:])
  t = (mid[:, None] + half[:, None] * x[None, :]).ravel()
  wt = (half[:, None] * w[None, :]).ravel()
  return t, wt


TAIL_CUTOFF = 1e-14
TAIL_MAX_WINDOWS = 200
TAIL_STALL_RATIO = 0.999
TAIL_STALL_COUNT = 4


def tail_integral(fn: Callable[[np.ndarray], np.ndarray], start: float,
                  cutoff: float = TAIL_CUTOFF) -> float:
  """int_start^inf fn over doubling windows [s, s+1], [s+1, s+3], ...

  Stops once the integrand at a window end is below `cutoff` and the last window
  adds less than `cutoff` relative to the total.

  Raises:
      IntegrationError: when window contributions stop shrinking (divergent tail)
          or the window budget runs out.
  """
  total = 0.0
  lo, width = float(start), 1.0
  previous = None
  stalls = 0
  for _ in range(TAIL_MAX_WINDOWS):
    hi = lo + width
    piece = _integrate_finite(fn, np.linspace(lo, hi, 9), cutoff * max(abs(total), 1.0)).value
    total += piece
    edge = float(np.abs(fn(np.array([hi])))[0])
    if edge <= cutoff and abs(piece) <= cutoff * max(abs(total), 1e-300):
      return total
    if previous is not None and previous > 0 and abs(piece) >= TAIL_STALL_RATIO * previous:
      stalls += 1
      if stalls >= TAIL_STALL_COUNT:
        raise IntegrationError(f"tail integral from {start:g} diverges: window contributions "
                               f"do not shrink")
    else:
      stalls = 0
    previous = abs(piece)
    lo, width = hi, 2.0 * width
  raise IntegrationError(f"tail integral from {start:g} did not converge within "
                         f"{TAIL_MAX_WINDOWS} windows")
