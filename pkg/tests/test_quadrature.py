import math

import numpy as np
import pytest

from psflab.analysis.quadrature import adaptive_integrate, gauss_legendre_panels, tail_integral
from psflab.errors import IntegrationError


def gaussian(x):
  return np.exp(-np.pi * x * x)


class TestAdaptiveIntegrate:

  def test_whole_line(self):
    res = adaptive_integrate(gaussian, -math.inf, math.inf)
    assert res.value == pytest.approx(1.0, abs=1e-10)
    assert res.abs_error < 1e-8

  def test_half_line(self):
    res = adaptive_integrate(lambda x: np.exp(-x), 0.0, math.inf)
    assert res.value == pytest.approx(1.0, abs=1e-10)

  def test_polynomial(self):
    assert adaptive_integrate(lambda x: x**2, 0.0, 1.0).value == pytest.approx(1 / 3, abs=1e-14)

  def test_reversed_and_empty(self):
    res = adaptive_integrate(lambda x: x**2, 1.0, 0.0)
    assert res.value == pytest.approx(-1 / 3, abs=1e-14)
    assert adaptive_integrate(gaussian, 2.0, 2.0).value == 0.0

  def test_breakpoints(self):
    res = adaptive_integrate(np.abs, -1.0, 2.0, breakpoints=[0.0])
    assert res.value == pytest.approx(2.5, abs=1e-13)

  def test_non_integrable(self):
    with pytest.raises(IntegrationError, match="singularity"):
      adaptive_integrate(lambda x: 1.0 / x, 0.0, 1.0)

  def test_not_finite(self):
    with pytest.raises(IntegrationError, match="not finite"):
      adaptive_integrate(lambda x: np.full_like(x, np.inf), 0.0, 1.0)


class TestTailIntegral:

  def test_exponential(self):
    assert tail_integral(lambda x: np.exp(-x), 0.0) == pytest.approx(1.0, abs=1e-12)

  def test_power(self):
    assert tail_integral(lambda x: x**-4.0, 1.0) == pytest.approx(1 / 3, rel=1e-9)

  def test_divergent(self):
    with pytest.raises(IntegrationError, match="diverges"):
      tail_integral(lambda x: 1.0 / x, 1.0)


def test_gauss_legendre_panels():
  t, w = gauss_legendre_panels(np.array([0.0, 0.5, 2.0]), 4)
  assert len(t) == 8
  assert w.sum() == pytest.approx(2.0, abs=1e-14)
  assert np.dot(w, t**3) == pytest.approx(4.0, abs=1e-13)
