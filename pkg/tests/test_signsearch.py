import math

import numpy as np
import pytest

from psflab.analysis.regime import INF
from psflab.constructions.signsearch import (SignSearchProblem, baseline, draw_signs,
                                             exhaustive_search, expectation_check,
                                             khintchine_constant, khintchine_objective,
                                             salem_zygmund_check, salem_zygmund_ratios,
                                             search_signs)
from psflab.constants import experiment as ec
from psflab.errors import CheckFailed, UserError


def coeffs(n):
  return 1.0 / np.sqrt(np.arange(n) + 1.0)


@pytest.fixture
def problem():
  c = coeffs(17)
  return SignSearchProblem(c, np.ones_like(c), 4, trials=64, seed=3)


class TestProblem:

  @pytest.mark.parametrize("kwargs, match", [
      (dict(c=[], w=[], q=2), "non-empty"),
      (dict(c=[1.0, 2.0], w=[1.0], q=2), "one weight"),
      (dict(c=[1.0], w=[-1.0], q=2), "nonnegative"),
      (dict(c=[1.0], w=[1.0], q=0.5), "q must be"),
      (dict(c=[1.0], w=[1.0], q=2, trials=0), "trials"),
  ])
  def test_rejected(self, kwargs, match):
    with pytest.raises(UserError, match=match):
      SignSearchProblem(**kwargs)

  def test_draws_are_seeded(self, problem):
    first = draw_signs(problem)
    assert first.shape == (64, 17)
    assert set(np.unique(first)) <= {-1.0, 1.0}
    np.testing.assert_array_equal(first, draw_signs(problem))


class TestObjective:

  @pytest.mark.parametrize("q, expected", [(1, 1.0), (2, 1.0), (4, 3**0.25)])
  def test_khintchine_constant(self, q, expected):
    assert khintchine_constant(q) == pytest.approx(expected, rel=1e-12)

  def test_q2_matches_baseline(self):
    c = coeffs(9)
    problem = SignSearchProblem(c, np.ones_like(c), 2)
    signs = np.where(np.arange(9) % 3 == 0, -1.0, 1.0)
    assert khintchine_objective(signs, problem) == pytest.approx(baseline(problem), rel=1e-12)

  def test_single_term(self):
    problem = SignSearchProblem([2.0], [3.0], 4)
    assert khintchine_objective([-1.0], problem) == pytest.approx(3**0.25 * 2.0, rel=1e-12)

  def test_wrong_sign_count(self, problem):
    with pytest.raises(UserError, match="signs"):
      khintchine_objective([1.0, -1.0], problem)

  def test_infinite_q(self):
    problem = SignSearchProblem([1.0, 1.0], [1.0, 1.0], INF)
    with pytest.raises(UserError, match="finite q"):
      baseline(problem)
    with pytest.raises(UserError, match="finite q"):
      search_signs(problem)


class TestSearch:

  def test_within_khintchine_bound(self, problem):
    result = search_signs(problem, threads=2)
    assert result.objective <= 3**0.25 * 1.1**0.25 * result.baseline
    assert result.method in ("monte-carlo", "greedy")
    assert len(result.to_dict()["signs"]) == 17

  def test_thread_count_does_not_change_result(self, problem):
    serial = search_signs(problem, threads=1)
    pooled = search_signs(problem, threads=4)
    np.testing.assert_array_equal(serial.signs, pooled.signs)
    assert serial.objective == pooled.objective
    assert serial.trial == pooled.trial

  def test_exhaustive_is_optimal(self):
    c = coeffs(9)
    problem = SignSearchProblem(c, np.ones_like(c), 4, trials=32, seed=5)
    best = exhaustive_search(problem)
    assert best.signs[0] == 1.0
    assert best.method == "exhaustive"
    searched = search_signs(problem, threads=2)
    assert best.objective <= searched.objective * (1 + 1e-12)

  def test_exhaustive_limit(self):
    c = coeffs(22)
    with pytest.raises(UserError, match="exhaustive"):
      exhaustive_search(SignSearchProblem(c, np.ones_like(c), 4))

  def test_expectation(self):
    c = coeffs(17)
    check = expectation_check(SignSearchProblem(c, np.ones_like(c), 4, trials=128, seed=1))
    assert check.draws == 128
    assert check.ratio <= 1.1


class TestSalemZygmund:

  def test_ratios(self):
    ratios = salem_zygmund_ratios([1, 1], [1.0, 1.0])
    assert ratios[0] == pytest.approx(1.0 / math.sqrt(math.log(2.0)), rel=1e-9)
    assert ratios[1] == pytest.approx(2.0 / (math.sqrt(math.log(3.0)) * math.sqrt(2.0)), rel=1e-9)

  def test_zero_partial_sum_is_nan(self):
    assert math.isnan(salem_zygmund_ratios([1, 1], [0.0, 1.0])[0])

  def test_check_is_deterministic(self):
    c = coeffs(33)
    signs_a, worst_a = salem_zygmund_check(c, trials=16, seed=2, threads=1)
    signs_b, worst_b = salem_zygmund_check(c, trials=16, seed=2, threads=3)
    np.testing.assert_array_equal(signs_a, signs_b)
    assert worst_a == worst_b

  def test_best_draw_within_ratio(self):
    signs, worst = salem_zygmund_check(np.ones(33), trials=64, seed=0, threads=2)
    assert worst <= ec.SALEM_ZYGMUND_RATIO
    assert worst == pytest.approx(float(np.nanmax(salem_zygmund_ratios(signs, np.ones(33)))))

  def test_ratio_above_bound_fails(self):
    # the k = 0 ratio is 1/sqrt(log 2) > 1 for every sign choice
    with pytest.raises(CheckFailed, match="salem_zygmund"):
      salem_zygmund_check(coeffs(9), trials=4, seed=0, threads=1, ratio_bound=1.0)

  def test_check_needs_two_coefficients(self):
    with pytest.raises(UserError, match="two coefficients"):
      salem_zygmund_check([1.0])
