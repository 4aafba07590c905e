import math
from fractions import Fraction

import numpy as np
import pytest

from psflab.analysis.norms import Monotone, general_weight, shifted_power_weight
from psflab.analysis.regime import INF, ParamPoint, PsfTag, classify_psf
from psflab.analysis import weights
from psflab.analysis.weights import (PowerScales, SampledPoint, Verdict, WeightPair,
                                     check_consistency, constant_pair, corollary_supremum,
                                     decay_margins, default_scale_exponent, desk_resolved,
                                     dirichlet_norms, power_pair, predicted_slopes, sample_points,
                                     verdict)
from psflab.errors import UserError

N_LIST = [16, 32, 64, 128, 256]


class TestPairs:

  def test_power_scales(self):
    scales = PowerScales(2.0)
    np.testing.assert_array_equal(scales([0, 1, 3]), [1.0, 2.0, 10.0])
    assert scales.name == "1+k^2"

  def test_default_exponent(self):
    assert default_scale_exponent(ParamPoint(2, 2, 2, 2)) == pytest.approx(1.0)

  def test_power_pair(self):
    pair = power_pair(ParamPoint(2, 2, 2, 2), 2.0)
    np.testing.assert_allclose(pair.scales(False, 3), [1, 2, 5, 10])
    np.testing.assert_allclose(pair.scales(True, 4), 1 + np.sqrt(np.arange(5)))

  def test_scale_exponent_must_be_positive(self):
    with pytest.raises(UserError, match="positive"):
      power_pair(ParamPoint(2, 2, 2, 2), 0.0)

  def test_decreasing_weight(self):
    with pytest.raises(UserError, match="non-decreasing"):
      WeightPair(shifted_power_weight(-1), shifted_power_weight(1), PowerScales(1.0),
                 PowerScales(1.0))

  def test_general_weight_probed(self):
    bumpy = general_weight("bumpy", lambda ax: 2.0 + np.cos(ax), Monotone.NonDecreasing)
    with pytest.raises(UserError, match="decreases"):
      WeightPair(bumpy, shifted_power_weight(1), PowerScales(1.0), PowerScales(1.0))

  def test_odd_weight(self):
    with pytest.raises(UserError, match="even"):
      general_weight("odd", lambda ax: ax, Monotone.NonDecreasing, even=False)


class TestConditions:

  def test_dirichlet_norms(self):
    norms = dirichlet_norms(6, Fraction(2))
    np.testing.assert_allclose(norms, np.sqrt(2 * np.arange(7) + 1), rtol=1e-12)

  def test_dirichlet_sup(self):
    np.testing.assert_allclose(dirichlet_norms(4, INF), 2 * np.arange(5) + 1, rtol=1e-12)

  def test_unknown_condition(self, kernel):
    with pytest.raises(UserError, match="1, 2, 3 or 4"):
      corollary_supremum(constant_pair(), 5, 2, 2, [4], kernel)

  def test_empty_N_list(self, kernel):
    with pytest.raises(UserError, match="non-empty"):
      corollary_supremum(constant_pair(), 1, 2, 2, [], kernel)

  @pytest.mark.parametrize("which", [1, 2, 3, 4])
  def test_values_are_positive(self, kernel, which):
    pair = power_pair(ParamPoint(2, 2, 2, 2), 1.0)
    values = corollary_supremum(pair, which, 2, 2, [4, 8, 16], kernel)
    assert len(values) == 3
    assert all(v > 0 and math.isfinite(v) for v in values)

  def test_nondecreasing_in_N(self, kernel):
    pair = power_pair(ParamPoint(2, 2, 2, 2), 1.0)
    values = corollary_supremum(pair, 1, 2, 2, [4, 8, 16, 32], kernel)
    assert all(a <= b for a, b in zip(values, values[1:]))


class TestVerdict:

  def test_constant_weights_grow(self, kernel):
    report = verdict(constant_pair(), 2, 2, N_LIST, kernel)
    assert report.tag == Verdict.Growing
    frame = report.to_frame()
    assert list(frame.columns) == ["condition", "N", "value", "slope"]
    assert len(frame) == 4 * len(N_LIST)

  def test_power_weights_bounded(self, kernel):
    report = verdict(power_pair(ParamPoint(2, 2, 2, 2)), 2, 2, N_LIST, kernel, threads=2)
    assert report.tag == Verdict.LikelyBounded
    assert report.to_dict()["unchecked_hypotheses"]

  def test_needs_four_values(self, kernel):
    with pytest.raises(UserError, match="at least 4"):
      verdict(constant_pair(), 2, 2, [16, 32, 64], kernel)

  def test_needs_positive_N(self, kernel):
    with pytest.raises(UserError, match="N >= 1"):
      verdict(constant_pair(), 2, 2, [0, 16, 32, 64], kernel)


class TestMargins:

  def test_decay_margins(self):
    assert decay_margins(ParamPoint(2, 2, 2, 2), Fraction(1)) == (2, 2, 2, 2)

  def test_predicted_slopes_sign(self):
    slopes = predicted_slopes(ParamPoint(2, 2, 2, 2), Fraction(1))
    assert all(s < 0 for s in slopes)

  def test_fails_point_has_growing_condition(self):
    point = ParamPoint(2, 2, Fraction(3, 4), Fraction(3, 4))
    B = Fraction(default_scale_exponent(point)).limit_denominator(1000)
    assert max(predicted_slopes(point, B)) > 0


class TestSampling:

  @pytest.mark.parametrize("regime", [PsfTag.Holds, PsfTag.Fails])
  def test_sample_points(self, regime):
    samples = sample_points(regime, 3, seed=7)
    assert len(samples) == 3
    assert all(classify_psf(s.point).tag == regime for s in samples)
    assert len({str(s.point) for s in samples}) == 3
    assert samples == sample_points(regime, 3, seed=7)

  def test_sample_points_regime(self):
    with pytest.raises(UserError, match="Holds or Fails"):
      sample_points(PsfTag.ConditionalEquality, 1)

  def test_zero_count(self):
    assert sample_points(PsfTag.Holds, 0) == []

  def test_sampling_ignores_predictions(self, monkeypatch):

    def unused(*args):
      raise AssertionError("sampling must not consult the predicted growth")

    monkeypatch.setattr(weights, "decay_margins", unused)
    monkeypatch.setattr(weights, "predicted_slopes", unused)
    assert len(sample_points(PsfTag.Holds, 3, seed=7)) == 3
    assert len(sample_points(PsfTag.Fails, 3, seed=7)) == 3

  def test_desk_resolved(self):
    assert desk_resolved(SampledPoint(ParamPoint(2, 2, 2, 2), Fraction(1)))
    fails = ParamPoint(2, 2, Fraction(5, 8), Fraction(5, 8))
    assert desk_resolved(SampledPoint(fails, Fraction(1)))
    # slopes 1/4 sit below the resolution threshold
    assert not desk_resolved(SampledPoint(ParamPoint(2, 2, Fraction(3, 4), Fraction(3, 4)),
                                          Fraction(1)))
    assert not desk_resolved(SampledPoint(ParamPoint(2, 2, 1, 1), Fraction(1)))

  def test_consistency_rejects_equality_points(self, kernel):
    with pytest.raises(UserError, match="Holds and Fails"):
      check_consistency([SampledPoint(ParamPoint(2, 2, 1, 1), Fraction(1))], N_LIST, kernel)

  @pytest.mark.slow
  def test_consistency(self, kernel):
    samples = [
        SampledPoint(ParamPoint(2, 2, 2, 2), Fraction(1)),
        SampledPoint(ParamPoint(2, 2, Fraction(5, 8), Fraction(5, 8)), Fraction(1)),
    ]
    frame = check_consistency(samples, N_LIST, kernel, threads=2)
    assert len(frame) == 2
    assert {"regime", "verdict", "slope_1", "B", "predicted_slope"} <= set(frame.columns)
    assert frame["resolved"].all()
    assert frame["agrees"].all()
    assert frame["growth_ok"].all()
    fails = frame[frame["regime"] == "Fails"].iloc[0]
    assert fails["verdict"] == Verdict.Growing.value
    assert fails["predicted_slope"] == pytest.approx(0.375)
    assert fails["measured_slope"] >= 0.5 * fails["predicted_slope"]

  @pytest.mark.slow
  def test_sampled_points(self, kernel):
    samples = sample_points(PsfTag.Holds, 2, seed=1) + sample_points(PsfTag.Fails, 2, seed=1)
    frame = check_consistency(samples, N_LIST, kernel, threads=2)
    assert len(frame) == 4
    resolved = frame[frame["resolved"]]
    assert resolved["agrees"].all()
    assert frame["growth_ok"].all()
