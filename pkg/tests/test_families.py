import numpy as np
import pytest
from schema import SchemaError

from psflab.analysis.psf import Provenance
from psflab.analysis.regime import ParamPoint
from psflab.constants import experiment as ec
from psflab.errors import UserError
from psflab.families.gaussian import WIDTHS
from psflab.families.stepspec import load_stepspec, random_stepspec
from psflab.families.utils import family_class, list_families, load_family

EQUALITY = ParamPoint(2, 2, 1, 1)


def test_list_families():
  assert list_families() == ["gaussian", "perturbed_gaussian", "stepspec", "mainth3", "diagonal"]


@pytest.mark.parametrize("name", ["gaussian", "perturbed-gaussian", "stepspec", "mainth3",
                                  "diagonal"])
def test_family_class(name):
  cls = family_class(name)
  assert cls.name == name.replace("-", "_")


def test_unknown_family():
  with pytest.raises(UserError, match="unknown family"):
    load_family("sinc")


class TestGaussian:

  def test_widths_cycle(self, kernel):
    family = load_family("gaussian", kernel=kernel)
    for i, t in enumerate(WIDTHS):
      assert family.pair(i).metadata["t"] == t
    assert family.pair(len(WIDTHS)).metadata["t"] == WIDTHS[0]

  def test_fixed_width(self, kernel):
    family = load_family("gaussian", kernel=kernel, t=3.0)
    assert family.pair(4).metadata["t"] == 3.0

  def test_not_a_step_function(self, kernel):
    with pytest.raises(NotImplementedError):
      load_family("gaussian", kernel=kernel).spec()


class TestStepSpecFamily:

  def test_seeded_members(self, kernel):
    family = load_family("stepspec", kernel=kernel, seed=9, length=12)
    first, second = family.spec(0), family.spec(1)
    assert first.N == 12
    np.testing.assert_array_equal(first.delta, 1.0 + np.arange(13))
    assert not np.array_equal(first.c, second.c)
    np.testing.assert_array_equal(family.spec(1).c, second.c)
    assert family.pair(0).provenance == Provenance.StepSpecDerived

  def test_default_length(self, kernel):
    assert load_family("stepspec", kernel=kernel).spec().N == 64

  def test_from_file(self, kernel, fixture_path):
    family = load_family("stepspec", kernel=kernel, path=fixture_path("spec_linear.json"))
    assert family.spec(3).N == 4
    np.testing.assert_array_equal(family.spec(0).c, [1.0, -0.5, 0.25, 0.75, -1.0])

  def test_load_stepspec_rejects_bad_file(self, fixture_path):
    with pytest.raises(SchemaError):
      load_stepspec(fixture_path("bad_spec_lengths.json"))

  def test_random_stepspec_respects_limits(self):
    rng = np.random.default_rng(4)
    for _ in range(20):
      spec = random_stepspec(rng)
      assert 1 <= spec.N <= ec.RANDOM_SPEC_MAX_N
      assert spec.delta[-1] <= ec.RANDOM_SPEC_MAX_DELTA
      assert spec.monotone


class TestPerturbedGaussian:

  def test_defaults(self, kernel):
    pair = load_family("perturbed_gaussian", kernel=kernel, seed=2).pair(0)
    assert pair.metadata["eps"] == 0.1
    assert pair.metadata["N"] == 16
    assert pair.provenance == Provenance.Composite

  def test_spec_shared_with_stepspec_family(self, kernel):
    perturbed = load_family("perturbed_gaussian", kernel=kernel, seed=2, length=8)
    steps = load_family("stepspec", kernel=kernel, seed=2, length=8)
    np.testing.assert_array_equal(perturbed.spec(1).c, steps.spec(1).c)


class TestMainTh3Family:

  def test_index_doubles_N(self, kernel):
    family = load_family("mainth3", point=EQUALITY, kernel=kernel, N=8)
    assert family.spec(0).N == 8
    assert family.spec(2).N == 32
    assert family.pair(1).name == "mainth3_16"

  def test_needs_point(self, kernel):
    with pytest.raises(UserError, match="parameter point"):
      load_family("mainth3", kernel=kernel).spec()

  def test_describe(self, kernel):
    described = load_family("mainth3", point=EQUALITY, kernel=kernel, seed=5, N=8).describe()
    assert described == {"family": "mainth3", "seed": 5, "N": 8, "point": str(EQUALITY)}


class TestDiagonalFamily:

  def test_explicit_schedule(self, kernel):
    family = load_family("diagonal", point=EQUALITY, kernel=kernel, schedule=[4, 9, 20])
    assert family.schedule() == [4, 9, 20]
    pair = family.pair()
    assert pair.metadata["schedule"] == [4, 9, 20]

  def test_rapid_schedule(self, kernel):
    family = load_family("diagonal", point=EQUALITY, kernel=kernel, J=2, rate=0.5)
    assert family.schedule() == [89, 1619]

  def test_needs_point(self, kernel):
    with pytest.raises(UserError, match="parameter point"):
      load_family("diagonal", kernel=kernel, schedule=[4, 9]).pair()
