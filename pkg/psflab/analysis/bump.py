"""The bump pair (phi, phihat).

phihat is even, equals 1 on [-1/2, 1/2], vanishes outside (-1, 1) and falls through
the smooth transition h(t) = theta(1-t)/(theta(t) + theta(1-t)), theta(t) = exp(-1/t),
on 1/2 < |xi| < 1. phi is its inverse Fourier transform, sampled once on a fine grid
and interpolated.
"""

import functools
import math
from typing import Dict, Union

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.special import expit

from psflab.analysis.quadrature import gauss_legendre_panels
from psflab.constants import kernel as kc
from psflab.errors import UserError
from psflab.utils.logging import get_logger
from psflab.utils.misc import Chunker
from psflab.versions import LAB_VERSION

logger = get_logger(logger_level="INFO", name=__name__)

ArrayLike = Union[float, np.ndarray]


def transition(t: ArrayLike) -> ArrayLike:
  """h(t): 1 for t <= 0, 0 for t >= 1, h(t) + h(1-t) = 1."""
  t = np.asarray(t, dtype=float)
  out = np.where(t <= 0.0, 1.0, 0.0)
  inner = (t > 0.0) & (t < 1.0)
  ti = t[inner]
  # theta(1-t)/(theta(t)+theta(1-t)) = expit(1/t - 1/(1-t))
  out[inner] = expit(1.0 / ti - 1.0 / (1.0 - ti))
  return out if out.ndim else float(out)


def transition_derivative(t: ArrayLike) -> ArrayLike:
  """h'(t) = -h(1-h)(1/t^2 + 1/(1-t)^2) inside (0, 1), 0 outside."""
  t = np.asarray(t, dtype=float)
  out = np.zeros_like(t)
  inner = (t > 0.0) & (t < 1.0)
  ti = t[inner]
  h = expit(1.0 / ti - 1.0 / (1.0 - ti))
  out[inner] = -h * (1.0 - h) * (1.0 / ti**2 + 1.0 / (1.0 - ti)**2)
  return out if out.ndim else float(out)


def _composite_legendre(panels: int, nodes: int):
  """Nodes and weights of a composite Gauss-Legendre rule on [0, 1]."""
  return gauss_legendre_panels(np.linspace(0.0, 1.0, panels + 1), nodes)


def _reject_nan(values: np.ndarray) -> None:
  if np.isnan(values).any():
    raise UserError("bump evaluation received NaN input")


class BumpKernel:
  """Sampled bump pair with decay constants.

  Args:
      grid_max: right end X_max of the sample grid for phi.
      log2_inv_step: the grid step is 2**-log2_inv_step.
      panels: Gauss-Legendre panels for the transition integral.
      nodes: nodes per panel.

  Example:
      >>> kernel = BumpKernel()
      >>> kernel.phi(0.0)
      1.5
  """

  def __init__(self,
               grid_max: float = kc.GRID_MAX,
               log2_inv_step: int = kc.GRID_LOG2_INV_STEP,
               panels: int = kc.TRANSFORM_PANELS,
               nodes: int = kc.TRANSFORM_NODES) -> None:
    self.grid_max = float(grid_max)
    self.log2_inv_step = int(log2_inv_step)
    self.step = 2.0**-self.log2_inv_step
    self.panels = panels
    self.nodes = nodes

    count = int(round(self.grid_max / self.step))
    self.grid = np.arange(count + 1, dtype=float) * self.step
    self.values = self._transform(self.grid)
    self._spline = self._build_spline()
    self.decay_constants = self._fit_decay_constants()
    self.lipschitz = self._fit_lipschitz()
    self.phi_lipschitz = self._fit_phi_lipschitz()
    self._warned_tail = False
    logger.debug(f"bump kernel on [0, {self.grid_max}] step 2^-{self.log2_inv_step}, "
                 f"K_8={self.decay_constants[kc.TAIL_ORDER]:.4g}, L={self.lipschitz:.4g}")

  def _transform(self, x: np.ndarray) -> np.ndarray:
    # phi(x) = sinc(x) + int_0^1 h(t) cos(pi x (1+t)) dt
    t, wt = _composite_legendre(self.panels, self.nodes)
    weighted = wt * transition(t)
    out = np.empty_like(x)
    offsets = range(0, len(x), kc.TRANSFORM_CHUNK)
    for start, block in zip(offsets, Chunker(x, kc.TRANSFORM_CHUNK).chunk()):
      phase = np.pi * np.outer(block, 1.0 + t)
      out[start:start + len(block)] = np.sinc(block) + np.cos(phase) @ weighted
    return out

  def _build_spline(self):
    m = kc.SPLINE_MIRROR
    x = np.concatenate([-self.grid[m:0:-1], self.grid])
    y = np.concatenate([self.values[m:0:-1], self.values])
    return make_interp_spline(x, y, k=kc.SPLINE_DEGREE)

  def _fit_decay_constants(self) -> Dict[int, float]:
    out = {}
    for M in kc.VALIDATED_DECAY_ORDERS:
      envelope = np.abs(self.values) * (1.0 + self.grid)**M
      out[M] = kc.DECAY_HEADROOM * float(envelope.max())
    return out

  def _fit_lipschitz(self) -> float:
    t = np.linspace(0.0, 1.0, 200001)
    # d/dxi h(2(|xi| - 1/2)) = 2 h'
    return kc.DECAY_HEADROOM * 2.0 * float(np.abs(transition_derivative(t)).max())

  def _fit_phi_lipschitz(self) -> float:
    # |phi'| <= 2 pi int |xi| phihat = 4 pi (1/8 + 1/4 int_0^1 (1+t) h(t) dt)
    t, wt = _composite_legendre(self.panels, self.nodes)
    band = 0.25 * float(np.dot(wt, (1.0 + t) * transition(t)))
    return 4.0 * math.pi * (0.125 + band)

  def phihat(self, xi: ArrayLike) -> ArrayLike:
    """phihat(xi); exact plateau and support."""
    xi = np.abs(np.asarray(xi, dtype=float))
    _reject_nan(xi)
    out = transition(2.0 * (xi - 0.5))
    if np.ndim(out):
      out = np.where(xi <= 0.5, 1.0, np.where(xi >= 1.0, 0.0, out))
      return out
    if xi <= 0.5:
      return 1.0
    if xi >= 1.0:
      return 0.0
    return float(out)

  def phihat_derivative(self, xi: ArrayLike) -> ArrayLike:
    """d phihat / d xi; zero on the plateau and outside the support."""
    xi = np.asarray(xi, dtype=float)
    _reject_nan(xi)
    out = 2.0 * np.sign(xi) * transition_derivative(2.0 * (np.abs(xi) - 0.5))
    return out if np.ndim(out) else float(out)

  def phi(self, x: ArrayLike) -> ArrayLike:
    """phi(x) from the cached grid; 0 beyond the validated range."""
    ax = np.abs(np.asarray(x, dtype=float))
    _reject_nan(ax)
    scalar = ax.ndim == 0
    ax = np.atleast_1d(ax)
    out = np.zeros_like(ax)
    inside = ax <= self.grid_max
    if inside.any():
      out[inside] = self._spline(ax[inside])
    if not inside.all() and not self._warned_tail:
      self._warned_tail = True
      logger.warning(f"phi evaluated beyond the validated range |x| <= {self.grid_max}; returning 0 "
                     f"with error bound K_{kc.TAIL_ORDER}(1+|x|)^-{kc.TAIL_ORDER}")
    return float(out[0]) if scalar else out

  def tail_bound(self, x: ArrayLike) -> ArrayLike:
    """Error bound of `phi` at x: the decay envelope beyond the grid, 0 inside it."""
    ax = np.abs(np.asarray(x, dtype=float))
    bound = self.decay_constants[kc.TAIL_ORDER] * (1.0 + ax)**(-kc.TAIL_ORDER)
    return np.where(ax > self.grid_max, bound, 0.0)

  def envelope(self, x: ArrayLike, M: int) -> ArrayLike:
    """K_M (1+|x|)^-M."""
    return self.decay_constant(M) * (1.0 + np.abs(np.asarray(x, dtype=float)))**(-M)

  def decay_constant(self, M: int) -> float:
    if M not in self.decay_constants:
      raise UserError(f"decay order M={M} is not validated; choose one of "
                      f"{sorted(self.decay_constants)}")
    return self.decay_constants[M]

  def smallest_validated_order(self, M: int) -> int:
    """Smallest validated decay order >= M."""
    for order in sorted(self.decay_constants):
      if order >= M:
        return order
    raise UserError(f"no validated decay order >= {M}")

  def params(self) -> Dict:
    """Kernel parameters for manifests and dump headers."""
    return {
        "lab_version": LAB_VERSION,
        "transition": "theta(1-t)/(theta(t)+theta(1-t)), theta(t)=exp(-1/t)",
        "grid_max": self.grid_max,
        "grid_step": self.step,
        "panels": self.panels,
        "nodes": self.nodes,
        "spline_degree": kc.SPLINE_DEGREE,
        "decay_constants": {str(k): v for k, v in self.decay_constants.items()},
        "lipschitz": self.lipschitz,
        "phi_lipschitz": self.phi_lipschitz,
    }


@functools.lru_cache(maxsize=None)
def default_kernel() -> BumpKernel:
  """Process-wide kernel with the default grid."""
  return BumpKernel()


def phihat_eval(kernel: BumpKernel, xi: ArrayLike) -> ArrayLike:
  return kernel.phihat(xi)


def phihat_derivative(kernel: BumpKernel, xi: ArrayLike) -> ArrayLike:
  return kernel.phihat_derivative(xi)


def phi_eval(kernel: BumpKernel, x: ArrayLike) -> ArrayLike:
  return kernel.phi(x)


def decay_constant(kernel: BumpKernel, M: int) -> float:
  return kernel.decay_constant(M)


def lipschitz_constant(kernel: BumpKernel) -> float:
  return kernel.lipschitz
