import math

import numpy as np
import pytest

from psflab.analysis.stepfn import (StepSpec, TrigKind, TrigPolyRef, abel_identity_check, eval_F,
                                    eval_F_bounded, eval_F_direct, eval_Fhat, eval_Ghat,
                                    lipschitz_modulus, spike_constant, spike_defect, trig_eval)
from psflab.errors import UserError

C = [1.0, -0.5, 0.25, 0.75, -1.0, 0.3, 0.1, -0.2, 0.6]


def linear_spec(c=C):
  return StepSpec(c, 1.0 + np.arange(len(c), dtype=float))


class TestStepSpec:

  @pytest.mark.parametrize("c, delta, message", [
      ([], [], "non-empty"),
      ([1.0, 2.0], [1.0], "entries"),
      ([1.0], [0.5], "Delta_0"),
      ([1.0, 1.0], [1.0, 10.0], "ratio"),
      ([np.nan], [1.0], "finite"),
  ])
  def test_rejected(self, c, delta, message):
    with pytest.raises(UserError, match=message):
      StepSpec(c, delta)

  def test_derived_fields(self):
    spec = StepSpec([1.0, 2.0, 3.0], [1.0, 2.0, 4.0])
    assert spec.N == 2
    assert spec.ratio_bound == 2.0
    assert spec.monotone
    assert spec.c_sup == 3.0
    assert not StepSpec([1.0, 1.0, 1.0], [1.0, 2.0, 1.5]).monotone

  def test_read_only(self):
    spec = linear_spec()
    with pytest.raises(ValueError):
      spec.c[0] = 5.0

  def test_dict(self):
    spec = StepSpec.from_dict({"c": [1, 2], "delta": [1, 3]})
    assert spec.to_dict() == {"c": [1.0, 2.0], "delta": [1.0, 3.0]}
    assert spec.scaled(2.0).c.tolist() == [2.0, 4.0]
    assert spec.with_c([5, 6]).delta.tolist() == [1.0, 3.0]

  def test_require_monotone(self):
    with pytest.raises(UserError, match="strictly increasing"):
      StepSpec([1.0, 1.0], [2.0, 1.0]).require_monotone("this check")


class TestEvaluation:

  def test_single_bump(self, kernel):
    spec = StepSpec([1.0], [1.0])
    assert eval_F(spec, kernel, 0.7) == pytest.approx(kernel.phi(0.7), rel=1e-15)

  def test_truncation_bound(self, kernel):
    spec = linear_spec()
    x = np.linspace(-3.0, 11.0, 57)
    truncated = eval_F_bounded(spec, kernel, x)
    direct = eval_F_direct(spec, kernel, x)
    assert np.max(np.abs(truncated.values - direct)) <= truncated.truncation_bound + 1e-13

  def test_shape_kept(self, kernel):
    x = np.linspace(0.0, 4.0, 12).reshape(3, 4)
    assert eval_F(linear_spec(), kernel, x).shape == (3, 4)

  def test_non_finite_abscissa(self, kernel):
    with pytest.raises(UserError, match="finite"):
      eval_F(linear_spec(), kernel, np.array([0.0, np.inf]))

  def test_fhat_support(self, kernel):
    spec = StepSpec([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert eval_Fhat(spec, kernel, 3.0) == 0j
    assert eval_Fhat(spec, kernel, -5.5) == 0j
    assert eval_Fhat(spec, kernel, 0.0) == pytest.approx(6.0)

  def test_ghat_vanishes_near_origin(self, kernel):
    spec = linear_spec()
    xi = np.linspace(-0.5, 0.5, 11)
    assert np.all(eval_Ghat(spec, kernel, xi) == 0)

  def test_ghat_is_trig_poly_far_out(self, kernel):
    spec = linear_spec()
    xi = np.linspace(9.0, 12.0, 13)
    head = trig_eval(TrigPolyRef(spec, TrigKind.Head, spec.N), xi)
    np.testing.assert_allclose(eval_Ghat(spec, kernel, xi), head, atol=1e-12)

  def test_fhat_plus_ghat(self, kernel):
    spec = linear_spec()
    xi = np.linspace(-4.0, 4.0, 41)
    head = trig_eval(TrigPolyRef(spec, TrigKind.Head, spec.N), xi)
    np.testing.assert_allclose(eval_Fhat(spec, kernel, xi) + eval_Ghat(spec, kernel, xi), head,
                               atol=1e-12)

  @pytest.mark.parametrize("xi", [0.3, 1.7, 2.25, 4.9, -3.1])
  def test_abel_identity(self, kernel, xi):
    direct, summed = abel_identity_check(linear_spec(), kernel, xi)
    assert abs(direct - summed) < 1e-12

  def test_nan_frequency(self, kernel):
    with pytest.raises(UserError, match="NaN"):
      eval_Fhat(linear_spec(), kernel, np.nan)


class TestTrigPoly:

  def test_head_and_tail(self):
    spec = linear_spec()
    head = TrigPolyRef(spec, TrigKind.Head, 2)
    tail = TrigPolyRef(spec, TrigKind.Tail, 3)
    assert trig_eval(head, 0.0) == pytest.approx(sum(C[:3]))
    assert trig_eval(tail, 0.0) == pytest.approx(sum(C[3:]))
    assert trig_eval(head, 1.25) == pytest.approx(trig_eval(head, 0.25))

  def test_index_range(self):
    with pytest.raises(UserError, match="outside"):
      TrigPolyRef(linear_spec(), TrigKind.Head, 9)


class TestSpike:

  def test_spike_defect_within_bound(self, kernel):
    spec = linear_spec([1.0] * 17)
    result = spike_defect(spec, kernel, 8, 2)
    assert result.defect <= result.bound
    assert result.bound is not None and math.isfinite(result.bound)

  def test_spike_origin_has_no_bound(self, kernel):
    spec = linear_spec([1.0] * 17)
    origin = spike_defect(spec, kernel, 0, 2)
    assert origin.bound is None
    assert origin.defect >= 0

  def test_single_term_origin_is_exact(self, kernel):
    origin = spike_defect(StepSpec([2.0], [3.0]), kernel, 0, 2)
    assert origin.defect == pytest.approx(0.0, abs=1e-12)

  def test_spike_needs_monotone(self, kernel):
    with pytest.raises(UserError, match="strictly increasing"):
      spike_defect(StepSpec([1.0, 1.0, 1.0], [1.0, 2.0, 1.5]), kernel, 1, 2)

  def test_spike_constant(self, kernel):
    assert spike_constant(kernel, 2) == pytest.approx(8.0 * kernel.decay_constant(4))
    with pytest.raises(UserError):
      spike_constant(kernel, 0)

  def test_lipschitz_modulus(self, kernel):
    spec = StepSpec([1.0, -2.0], [1.0, 2.0])
    assert lipschitz_modulus(spec, kernel) == pytest.approx(9.0 * kernel.phi_lipschitz)
