import math
from fractions import Fraction

import numpy as np
import pytest

from psflab.analysis.psf import (Provenance, combine_pairs, dirichlet, dirichlet_naive,
                                 dirichlet_tail_bound, embedding_check, gaussian_pair, partial_sum,
                                 perturbed_gaussian_pair, psf_defect_series, series_gamma,
                                 smoothed_sum, smoothing_defects, stepspec_pair, theta_defect,
                                 weighted_sum_Q)
from psflab.analysis.regime import INF, ParamPoint
from psflab.analysis.stepfn import StepSpec, eval_F, eval_Fhat
from psflab.constants import experiment as ec
from psflab.errors import CheckFailed, RegimeError, UserError


class TestPairs:

  def test_gaussian_is_self_dual_at_one(self):
    pair = gaussian_pair()
    x = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(pair.f(x), pair.fhat(x), rtol=1e-15)
    assert pair.provenance == Provenance.ClosedForm

  def test_gaussian_width(self):
    pair = gaussian_pair(4.0)
    assert pair.fhat(0.0) == pytest.approx(0.5)
    assert pair.f(0.5) == pytest.approx(math.exp(-math.pi))

  @pytest.mark.parametrize("t", [0.0, -1.0])
  def test_gaussian_width_must_be_positive(self, t):
    with pytest.raises(UserError, match="positive"):
      gaussian_pair(t)

  def test_stepspec_pair(self, kernel):
    spec = StepSpec([1.0, -0.5], [1.0, 2.0])
    pair = stepspec_pair(spec, kernel)
    x = np.array([0.0, 0.3, 1.0])
    np.testing.assert_allclose(pair.f(x), eval_F(spec, kernel, x))
    np.testing.assert_allclose(pair.fhat(x), eval_Fhat(spec, kernel, x))
    assert pair.provenance == Provenance.StepSpecDerived
    assert pair.metadata["N"] == 1

  def test_combine(self):
    pair = combine_pairs([gaussian_pair(1.0), gaussian_pair(2.0)], [1.0, 2.0])
    expected = gaussian_pair(1.0).f(0.4) + 2.0 * gaussian_pair(2.0).f(0.4)
    assert pair.f(0.4) == pytest.approx(expected)
    assert pair.provenance == Provenance.Composite
    assert pair.metadata["terms"] == ["gaussian", "gaussian"]

  def test_combine_mismatch(self):
    with pytest.raises(UserError):
      combine_pairs([gaussian_pair()], [1.0, 2.0])
    with pytest.raises(UserError):
      combine_pairs([], [])

  def test_perturbed(self, kernel):
    spec = StepSpec([1.0], [1.0])
    pair = perturbed_gaussian_pair(1.0, 0.1, spec, kernel)
    assert pair.metadata["eps"] == 0.1
    x = np.array([0.0])
    assert pair.f(x)[0] == pytest.approx(1.0 + 0.1 * eval_F(spec, kernel, x)[0])


class TestSums:

  def test_partial_sum(self):
    assert partial_sum(gaussian_pair().f, 8) == pytest.approx(1.0864348113, abs=1e-10)
    assert partial_sum(gaussian_pair().f, 0) == 1.0

  def test_partial_sum_negative_N(self):
    with pytest.raises(UserError):
      partial_sum(gaussian_pair().f, -1)

  def test_smoothed_sum_matches_sharp_for_fast_decay(self, kernel):
    g = gaussian_pair().fhat
    assert smoothed_sum(g, 8, kernel) == pytest.approx(partial_sum(g, 8), abs=1e-14)

  def test_smoothed_sum_needs_positive_N(self, kernel):
    with pytest.raises(UserError):
      smoothed_sum(gaussian_pair().f, 0, kernel)

  def test_weighted_sum(self):
    ones = lambda k: np.ones_like(k)
    assert weighted_sum_Q(ones, [1.0, 1.0, 1.0], 1, 2) == pytest.approx(1.5)
    assert weighted_sum_Q(ones, [1.0, 2.0, 3.0, 99.0], 0, 2) == pytest.approx(6.0)

  @pytest.mark.parametrize("c, match", [
      ([1.0, 0.5, 2.0], "non-decreasing"),
      ([-1.0, 0.0, 1.0], "non-negative"),
      ([1.0, 1.0], "weights"),
  ])
  def test_weighted_sum_rejects(self, c, match):
    with pytest.raises(UserError, match=match):
      weighted_sum_Q(lambda k: k, c, 1, 2)

  def test_theta(self):
    assert theta_defect(1.0, 6) < 1e-14
    assert theta_defect(0.5, 12) < 1e-12


class TestDirichlet:

  @pytest.mark.parametrize("M", [0, 1, 5, 17])
  def test_integers(self, M):
    assert dirichlet(M, 3.0) == pytest.approx(2 * M + 1)
    assert dirichlet(M, -2.0) == pytest.approx(2 * M + 1)

  def test_matches_direct_sum(self):
    xi = np.linspace(-1.3, 2.7, 81)
    np.testing.assert_allclose(dirichlet(6, xi), dirichlet_naive(6, xi), atol=1e-11)

  def test_tail_bound(self):
    tail = dirichlet_tail_bound(4, 16, 1, 2)
    assert tail.ratio < ec.DIRICHLET_TAIL_CONSTANT
    assert tail.to_dict()["qprime"] == "2/1"

  def test_tail_bound_sup(self):
    tail = dirichlet_tail_bound(4, 16, 1, INF)
    assert 0 < tail.ratio < ec.DIRICHLET_TAIL_CONSTANT

  def test_tail_bound_divergent(self):
    with pytest.raises(UserError, match="diverges"):
      dirichlet_tail_bound(4, 16, Fraction(1, 2), 2)


class TestDefectSeries:

  def test_holds(self):
    series = psf_defect_series(gaussian_pair(2.0), ParamPoint(2, 2, 2, 2), [4, 8, 16])
    frame = series.to_frame()
    assert list(frame.columns) == ["N", "M", "P_N_f", "P_M_fhat", "defect", "gamma", "seed"]
    assert list(frame["M"]) == [4, 8, 16]
    assert np.all(np.abs(series.defects) < 1e-12)
    assert series.monotone_violations() == 0

  @pytest.mark.parametrize("text, N, M", [
      ("2,2,3/2,3/4", 4, 16),
      ("2,2,3/4,3/2", 16, 4),
      ("2,2,3/4,3/2", 17, 5),
  ])
  def test_equality_coupling(self, text, N, M):
    series = psf_defect_series(gaussian_pair(), ParamPoint.parse(text), [N])
    assert series.rows[0].M == M

  def test_threads_keep_order(self):
    point = ParamPoint(2, 2, 2, 2)
    serial = psf_defect_series(gaussian_pair(0.5), point, [9, 3, 27, 1], threads=1).to_frame()
    pooled = psf_defect_series(gaussian_pair(0.5), point, [9, 3, 27, 1], threads=4).to_frame()
    assert serial.equals(pooled)
    assert list(pooled["N"]) == [9, 3, 27, 1]

  @pytest.mark.parametrize("text", ["2,2,3/4,3/4", "2,2,1/2,1"])
  def test_no_series_without_guarantee(self, text):
    with pytest.raises(RegimeError):
      series_gamma(ParamPoint.parse(text))

  def test_series_gamma(self):
    assert series_gamma(ParamPoint(2, 2, 2, 2)) == 1
    assert series_gamma(ParamPoint(2, 2, Fraction(3, 2), Fraction(3, 4))) == 2


class TestSmoothing:

  def test_gaussian(self, kernel):
    result = smoothing_defects(gaussian_pair(1.0), 8, kernel)
    assert result.spatial < 1e-12
    assert result.fourier < 1e-12
    assert result.to_dict()["M"] == 8

  def test_gamma_must_be_positive(self, kernel):
    with pytest.raises(UserError):
      smoothing_defects(gaussian_pair(), 8, kernel, 0)


class TestEmbedding:

  @pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
  def test_gaussian_family(self, t):
    result = embedding_check(gaussian_pair(t), ParamPoint(2, 2, 1, 1))
    assert result.lhs == pytest.approx(1.0 + t**-0.5, rel=1e-6)
    assert result.ratio <= ec.EMBEDDING_CONSTANT

  def test_gaussian_values(self):
    result = embedding_check(gaussian_pair(), ParamPoint(2, 2, 1, 1))
    # ||x exp(-pi x^2)||_2^2 = 2^{-5/2} / pi on both sides
    assert result.rhs == pytest.approx(2.0 * (2**-2.5 / math.pi)**0.5, rel=1e-6)
    assert result.to_dict()["ratio"] == pytest.approx(2.0 / result.rhs, rel=1e-6)

  @pytest.mark.parametrize("text", ["2,2,1,1", "2,2,3/2,3/4", "3/2,3,1,1"])
  def test_step_spec(self, kernel, text):
    spec = StepSpec([1.0, -0.5, 0.25], [1.0, 2.0, 4.0])
    result = embedding_check(stepspec_pair(spec, kernel), ParamPoint.parse(text), tol=1e-7)
    assert result.rhs > 0
    assert result.ratio <= ec.EMBEDDING_CONSTANT

  def test_inadmissible_point(self):
    with pytest.raises(RegimeError, match="admissible"):
      embedding_check(gaussian_pair(), ParamPoint(2, 2, Fraction(1, 4), 1))

  def test_ratio_above_constant_fails(self):
    with pytest.raises(CheckFailed, match="embedding"):
      embedding_check(gaussian_pair(), ParamPoint(2, 2, 1, 1), constant=1.0)
