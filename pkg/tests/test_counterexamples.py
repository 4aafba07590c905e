import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.special import zeta

from psflab.analysis.norms import line_norm, power_weight
from psflab.analysis.psf import combine_pairs, gaussian_pair
from psflab.analysis.regime import INF, AbsTag, ParamPoint, PsfTag
from psflab.analysis.stepfn import StepSpec
from psflab.constructions.counterexamples import (
    OUT_OF_SCOPE, Support, absolute_sum, diagonal_function, diagonal_increments,
    diagonal_norm_bound, extkah2_family, extkah2_params, extkah2_qinf_family, extkah2_qinf_params,
    family_norm_sweep, index_offset, kernel_sum_bound, mainth3_family, mainth3_params,
    pq11_absolute_bound, qinf_growth_scale, rapid_schedule, spike_defects, spike_dominance,
    witness_construction)
from psflab.errors import RegimeError, UserError

EQUALITY = ParamPoint(2, 2, 1, 1)


class TestMainTh3:

  def test_params(self):
    params = mainth3_params(EQUALITY)
    assert params.A == 2
    assert params.B == 1
    assert params.to_dict()["support"] == "Full"

  @pytest.mark.parametrize("text", ["2,2,2,2", "2,2,3/4,3/4", "2,2,1/2,1"])
  def test_off_manifold(self, text):
    with pytest.raises(RegimeError):
      mainth3_params(ParamPoint.parse(text))

  def test_family(self):
    spec = mainth3_family(EQUALITY, 32)
    assert spec.N == 32
    assert spec.delta[0] == 1.0
    assert spec.monotone
    k1 = np.arange(33) + 1.0
    np.testing.assert_allclose(spec.c, k1**-2 * np.log(k1 + 1)**-2)

  def test_steep_equality_point(self):
    point = ParamPoint(2, 2, 2, Fraction(2, 3))
    params = mainth3_params(point)
    assert (params.A, params.B) == (4, 3)
    assert params.offset == 2
    assert params.to_dict()["offset"] == 2
    spec = mainth3_family(point, 16)
    assert spec.ratio_bound <= 8
    assert spec.monotone
    assert spec.delta[0] >= 1
    kk = np.arange(17) + 2.0
    np.testing.assert_allclose(spec.c, kk**-4 * np.log(kk + 1)**-4)

  @pytest.mark.parametrize("A, B, expected", [(2, 1, 1), (4, 2, 1), (4, 3, 2), (2, 5, 3)])
  def test_index_offset(self, A, B, expected):
    assert index_offset(A, B) == expected

  def test_absolute_sum_grows(self):
    sums = [absolute_sum(mainth3_family(EQUALITY, n)) for n in (16, 64, 256)]
    assert sums[0] < sums[1] < sums[2]

  def test_absolute_sum(self):
    assert absolute_sum(StepSpec([1.0, -2.0], [1.0, 2.0])) == pytest.approx(5.0)

  def test_negative_N(self):
    with pytest.raises(UserError):
      mainth3_family(EQUALITY, -1)


class TestExtKah2:

  def test_params(self):
    params = extkah2_params(ParamPoint(2, 4, Fraction(3, 2), 1))
    assert (params.A, params.B) == (4, 2)

  @pytest.mark.parametrize("text", ["2,2,1,1", "2,inf,3/4,2", "2,4,2,2"])
  def test_params_rejected(self, text):
    with pytest.raises(RegimeError):
      extkah2_params(ParamPoint.parse(text))

  def test_family_carries_signs(self):
    point = ParamPoint(2, 4, Fraction(3, 2), 1)
    signs = [1, -1, 1, -1, 1]
    spec = extkah2_family(point, 4, signs)
    np.testing.assert_array_equal(np.sign(spec.c), signs)
    assert spec.delta[0] == 1.0

  @pytest.mark.parametrize("signs, match", [([1, -1], "signs"), ([1, 0.5, 1, 1, 1], r"\+1 or -1")])
  def test_bad_signs(self, signs, match):
    with pytest.raises(UserError, match=match):
      extkah2_family(ParamPoint(2, 4, Fraction(3, 2), 1), 4, signs)


class TestExtKah2Inf:

  POINT = ParamPoint(2, INF, Fraction(3, 4), 2)

  def test_params(self):
    params = extkah2_qinf_params(self.POINT)
    assert (params.A, params.B) == (2, Fraction(1, 2))
    assert params.support == Support.SqrtWindow
    assert params.p_sharp == 0

  def test_window(self):
    spec = extkah2_qinf_family(self.POINT, 10, [1] * 11)
    assert np.all(spec.c[:4] == 0)
    assert np.all(spec.c[4:] > 0)
    np.testing.assert_allclose(spec.delta, 1.0 + np.sqrt(np.arange(11) + 1.0))

  def test_growth_scale(self):
    assert qinf_growth_scale(self.POINT, 20) == pytest.approx(math.log(20))
    spec = extkah2_qinf_family(self.POINT, 400, [1] * 401)
    assert absolute_sum(spec) > 0

  def test_needs_N_two(self):
    with pytest.raises(UserError, match="N >= 2"):
      extkah2_qinf_family(self.POINT, 1, [1, 1])

  def test_needs_infinite_q(self):
    with pytest.raises(RegimeError, match="q = inf"):
      extkah2_qinf_params(ParamPoint(2, 4, Fraction(3, 2), 1))


class TestDiagonal:

  def test_schedule(self):
    assert rapid_schedule(3) == [1619, 10**7]
    assert rapid_schedule(2, rate=0.5) == [89, 1619]
    assert rapid_schedule(1, cap=100) == [100]

  def test_schedule_needs_terms(self):
    with pytest.raises(UserError):
      rapid_schedule(0)

  def test_function(self, kernel):
    pair = diagonal_function(EQUALITY, 2, [89, 1619], kernel)
    assert pair.metadata["schedule"] == [89, 1619]
    assert len(pair.metadata["specs"]) == 2
    assert pair.metadata["weights"][0] == pytest.approx(-1 / math.sqrt(math.log(math.log(89))))
    assert pair.metadata["weights"][1] > 0

  @pytest.mark.parametrize("schedule", [[2, 10], [10, 10], [20, 10], [10]])
  def test_bad_schedule(self, kernel, schedule):
    with pytest.raises(UserError):
      diagonal_function(EQUALITY, 2, schedule, kernel)

  def test_increments(self, kernel):
    pair = diagonal_function(EQUALITY, 3, [4, 9, 20], kernel)
    frame = diagonal_increments(pair, threads=2)
    assert list(frame.columns) == ["k", "N_k", "P_N_f", "signed_increment"]
    assert list(frame["N_k"]) == [4, 9, 20]
    assert np.all(np.isfinite(frame["P_N_f"]))

  def test_norm_bound(self, kernel):
    pair = diagonal_function(EQUALITY, 2, [8, 32], kernel)
    bound = diagonal_norm_bound(pair, kernel, 2, 1)
    assert len(pair.metadata["term_norms"]) == 2
    reach = kernel.grid_max + 1.0
    measured = line_norm(pair.f, 2, power_weight(1), domain=(-reach, 32 + reach),
                         breakpoints=[float(k) for k in range(33)]).value
    assert 0 < measured <= bound * (1 + 1e-6)


class TestAbsoluteBounds:

  def test_pq11(self, kernel):
    bound = pq11_absolute_bound(gaussian_pair(), 1, 4, kernel)
    assert bound.total <= bound.majorant * (1 + 1e-9) + 1e-10
    assert set(bound.to_dict()) == {"total", "fourier_part", "spatial_part", "majorant"}

  def test_pq11_rejects_composite(self, kernel):
    pair = combine_pairs([gaussian_pair()], [1.0])
    with pytest.raises(UserError, match="closed-form"):
      pq11_absolute_bound(pair, 1, 4, kernel)

  def test_kernel_sum(self):
    result = kernel_sum_bound(10.0, 1, 2)
    assert result.value == pytest.approx(10 + 100 * zeta(2, 11), rel=1e-12)
    assert result.scale == 10.0

  def test_kernel_sum_at_zero(self):
    assert kernel_sum_bound(0.0, 1, 2).value == 0.0

  def test_kernel_sum_divergent(self):
    with pytest.raises(UserError, match="alpha M > 1"):
      kernel_sum_bound(10.0, Fraction(1, 2), 2)


class TestWitness:

  @pytest.mark.parametrize("text, psf_tag, psf_witness, abs_tag, abs_witness", [
      ("2,4,3/2,1", PsfTag.Holds, "none needed", AbsTag.MayDiverge, "extkah2"),
      ("2,inf,3/4,2", PsfTag.Holds, "none needed", AbsTag.MayDiverge, "extkah2-inf"),
      ("2,2,3/4,3/4", PsfTag.Fails, OUT_OF_SCOPE, AbsTag.MayDiverge, OUT_OF_SCOPE),
      ("2,2,2,2", PsfTag.Holds, "none needed", AbsTag.AbsolutelyConverges, "none needed"),
  ])
  def test_witness(self, text, psf_tag, psf_witness, abs_tag, abs_witness):
    witness = witness_construction(ParamPoint.parse(text))
    assert witness.psf_tag == psf_tag
    assert witness.psf_witness == psf_witness
    assert witness.abs_tag == abs_tag
    assert witness.abs_witness == abs_witness

  def test_equality_witness(self):
    witness = witness_construction(EQUALITY)
    assert witness.psf_witness.startswith("diagonal")
    assert witness.abs_witness == "mainth3"


class TestSpikes:

  SPEC = StepSpec(np.ones(17), 1.0 + np.arange(17, dtype=float))

  def test_defects(self, kernel):
    frame = spike_defects(self.SPEC, kernel, 2)
    assert list(frame.columns) == ["n", "defect", "bound"]
    assert len(frame) == 16
    assert frame["n"].iloc[0] == 1
    assert np.isfinite(frame["bound"]).all()
    assert (frame["defect"] <= frame["bound"]).all()

  def test_dominance(self, kernel):
    result = spike_dominance(self.SPEC, kernel, floor=8)
    assert result.N == 16
    assert math.isfinite(result.full_ratio)
    assert result.floor_ratio > 0

  def test_dominance_floor_range(self, kernel):
    with pytest.raises(UserError, match="outside"):
      spike_dominance(self.SPEC, kernel, floor=17)


@pytest.mark.slow
def test_family_norm_sweep(kernel):
  sweep = family_norm_sweep(EQUALITY, [4, 8, 16], kernel, measure_fourier_upto=8, threads=2)
  frame = sweep.frame
  assert list(frame["N"]) == [4, 8, 16]
  assert math.isnan(frame["fhat_norm"].iloc[2])
  assert np.all(frame["f_norm"] > 0)
  assert math.isfinite(sweep.f_slope)
