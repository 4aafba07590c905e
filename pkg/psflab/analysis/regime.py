"""Exact classification of weighted-norm parameter points.

A point (p, q, alpha, beta) describes the space of functions with
||f |x|^alpha||_p + ||fhat |xi|^beta||_q finite. Everything here is computed with
`fractions.Fraction`; the exponent infinity is the `INF` tag, never a float.
"""

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Optional, Tuple, Union

from psflab.errors import RegimeError, UserError


class _Infinity:
  """The extended-rational value +infinity."""

  _instance = None

  def __new__(cls):
    if cls._instance is None:
      cls._instance = super().__new__(cls)
    return cls._instance

  def __repr__(self) -> str:
    return "inf"

  def __str__(self) -> str:
    return "inf"

  def __hash__(self) -> int:
    return hash("psflab.inf")

  def __eq__(self, other) -> bool:
    return other is self

  def __lt__(self, other) -> bool:
    return False

  def __le__(self, other) -> bool:
    return other is self

  def __gt__(self, other) -> bool:
    return other is not self

  def __ge__(self, other) -> bool:
    return True

  def __float__(self) -> float:
    return math.inf

  def __reduce__(self):
    return (_Infinity, ())


INF = _Infinity()

Extended = Union[Fraction, _Infinity]


def to_extended(value: Any) -> Extended:
  """Convert user input to an exact extended rational.

  Accepts `INF`, "inf", Fractions, ints, rational strings ("3/4", "0.75") and
  floats (converted through their decimal repr, so 0.1 becomes 1/10).
  """
  if value is INF:
    return INF
  if isinstance(value, Fraction):
    return value
  if isinstance(value, bool):
    raise UserError(f"not an exponent: {value!r}")
  if isinstance(value, int):
    return Fraction(value)
  if isinstance(value, float):
    if math.isnan(value):
      raise UserError("exponent must not be NaN")
    if math.isinf(value):
      if value < 0:
        raise UserError("exponent must not be -inf")
      return INF
    return Fraction(repr(value))
  if isinstance(value, str):
    return parse_extended(value)
  raise UserError(f"not an exponent: {value!r}")


def parse_extended(text: str) -> Extended:
  """Parse "inf", "num/den", integers or decimals exactly."""
  token = text.strip().lower()
  if token in ("inf", "+inf", "infinity", "∞"):
    return INF
  try:
    return Fraction(token)
  except (ValueError, ZeroDivisionError) as e:
    raise UserError(f"cannot parse '{text}' as an exact rational or 'inf'") from e


def format_extended(value: Extended) -> str:
  """Render as "num/den" or "inf"."""
  if value is INF:
    return "inf"
  value = Fraction(value)
  return f"{value.numerator}/{value.denominator}"


def reciprocal(e: Extended) -> Fraction:
  """1/e with 1/inf = 0."""
  if e is INF:
    return Fraction(0)
  if e == 0:
    raise UserError("reciprocal of 0 is not an extended exponent")
  return 1 / Fraction(e)


def conjugate(e: Extended) -> Extended:
  """Hölder conjugate e' with 1/e + 1/e' = 1.

  Args:
      e: exponent in [1, inf].

  Returns:
      The conjugate exponent; conjugate(1) is INF and conjugate(INF) is 1.

  Example:
      >>> conjugate(Fraction(4))
      Fraction(4, 3)
  """
  e = to_extended(e)
  if e is not INF and e < 1:
    raise UserError(f"Hölder exponent must be >= 1, got {format_extended(e)}")
  inv = 1 - reciprocal(e)
  if inv == 0:
    return INF
  return 1 / inv


@dataclass(frozen=True)
class ParamPoint:
  """A point (p, q, alpha, beta); p and q lie in [1, inf]."""
  p: Extended
  q: Extended
  alpha: Fraction
  beta: Fraction

  def __post_init__(self):
    p, q = to_extended(self.p), to_extended(self.q)
    alpha, beta = to_extended(self.alpha), to_extended(self.beta)
    for name, e in (("p", p), ("q", q)):
      if e is not INF and e < 1:
        raise UserError(f"{name} must be >= 1, got {format_extended(e)}")
    for name, e in (("alpha", alpha), ("beta", beta)):
      if e is INF:
        raise UserError(f"{name} must be a finite rational")
    object.__setattr__(self, "p", p)
    object.__setattr__(self, "q", q)
    object.__setattr__(self, "alpha", alpha)
    object.__setattr__(self, "beta", beta)

  @classmethod
  def parse(cls, text: str) -> "ParamPoint":
    """Read "p,q,alpha,beta", e.g. "2,2,1,1" or "inf,inf,2,2"."""
    parts = [part for part in text.split(",")]
    if len(parts) != 4:
      raise UserError(f"a point needs four comma separated values p,q,alpha,beta; got '{text}'")
    return cls(*(parse_extended(part) for part in parts))

  @property
  def inv_p(self) -> Fraction:
    return reciprocal(self.p)

  @property
  def inv_q(self) -> Fraction:
    return reciprocal(self.q)

  @property
  def inv_pconj(self) -> Fraction:
    """1/p' = 1 - 1/p."""
    return 1 - self.inv_p

  @property
  def inv_qconj(self) -> Fraction:
    return 1 - self.inv_q

  @property
  def spatial_margin(self) -> Fraction:
    """alpha - 1/p'."""
    return self.alpha - self.inv_pconj

  @property
  def fourier_margin(self) -> Fraction:
    """beta - 1/q'."""
    return self.beta - self.inv_qconj

  @property
  def product(self) -> Fraction:
    return self.spatial_margin * self.fourier_margin

  @property
  def admissible(self) -> bool:
    return self.spatial_margin > 0 and self.fourier_margin > 0

  @property
  def is_one_one(self) -> bool:
    return self.p == 1 and self.q == 1

  def swapped(self) -> "ParamPoint":
    """The point with (p, alpha) and (q, beta) exchanged."""
    return ParamPoint(self.q, self.p, self.beta, self.alpha)

  def to_dict(self) -> Dict[str, str]:
    return {
        "p": format_extended(self.p),
        "q": format_extended(self.q),
        "alpha": format_extended(self.alpha),
        "beta": format_extended(self.beta),
    }

  def __str__(self) -> str:
    return ",".join(format_extended(v) for v in (self.p, self.q, self.alpha, self.beta))


class PsfTag(str, Enum):
  Holds = "Holds"
  HoldsEquality11 = "HoldsEquality11"
  ConditionalEquality = "ConditionalEquality"
  Fails = "Fails"
  Inadmissible = "Inadmissible"


class AbsTag(str, Enum):
  AbsolutelyConverges = "AbsolutelyConverges"
  MayDiverge = "MayDiverge"
  Inadmissible = "Inadmissible"


class Relation(str, Enum):
  Below = "Below"
  Equal = "Equal"
  Above = "Above"


_PSF_NOTES = {
    PsfTag.Holds: "partial sums of f and fhat converge to the same limit",
    PsfTag.HoldsEquality11: "equality case with p = q = 1; the formula holds",
    PsfTag.ConditionalEquality: ("neither side need converge; if one does the other does with the "
                                 "same limit, and P_N(f) - P_M(fhat) -> 0 with M = ceil(N^gamma); "
                                 "gamma is derived from the divergence construction"),
    PsfTag.Fails: "there are functions in the space for which the formula fails",
    PsfTag.Inadmissible: "out of theorem scope, PSF may fail",
}


@dataclass(frozen=True)
class PsfVerdict:
  tag: PsfTag
  gamma: Optional[Fraction] = None

  def __post_init__(self):
    if self.tag == PsfTag.ConditionalEquality:
      if self.gamma is None or self.gamma <= 0:
        raise ValueError("ConditionalEquality needs a positive gamma")
    elif self.gamma is not None:
      raise ValueError(f"{self.tag.value} carries no gamma")

  @property
  def note(self) -> str:
    return _PSF_NOTES[self.tag]

  @property
  def psf_guaranteed(self) -> bool:
    return self.tag in (PsfTag.Holds, PsfTag.HoldsEquality11, PsfTag.ConditionalEquality)

  def to_dict(self) -> Dict[str, Any]:
    out = {"tag": self.tag.value}
    if self.gamma is not None:
      out["gamma"] = format_extended(self.gamma)
      out["gamma_source"] = "derived from the divergence construction"
    out["note"] = self.note
    return out


@dataclass(frozen=True)
class AbsVerdict:
  tag: AbsTag

  def to_dict(self) -> Dict[str, Any]:
    return {"tag": self.tag.value}


@dataclass(frozen=True)
class ProductPosition:
  lhs: Fraction
  threshold_psf: Fraction
  threshold_abs: Fraction
  relation_psf: Relation
  relation_abs: Relation

  def to_dict(self) -> Dict[str, str]:
    return {
        "lhs": format_extended(self.lhs),
        "threshold_psf": format_extended(self.threshold_psf),
        "threshold_abs": format_extended(self.threshold_abs),
        "relation_psf": self.relation_psf.value,
        "relation_abs": self.relation_abs.value,
    }


def _relation(lhs: Fraction, threshold: Fraction) -> Relation:
  if lhs < threshold:
    return Relation.Below
  if lhs == threshold:
    return Relation.Equal
  return Relation.Above


def product_position(point: ParamPoint) -> ProductPosition:
  """Where the product (alpha - 1/p')(beta - 1/q') sits relative to both thresholds."""
  threshold_psf = point.inv_p * point.inv_q
  threshold_abs = max(threshold_psf, point.inv_p / 2)
  lhs = point.product
  return ProductPosition(
      lhs=lhs,
      threshold_psf=threshold_psf,
      threshold_abs=threshold_abs,
      relation_psf=_relation(lhs, threshold_psf),
      relation_abs=_relation(lhs, threshold_abs))


def classify_psf(point: ParamPoint) -> PsfVerdict:
  """Decide which PSF regime a parameter point lies in.

  Args:
      point: the parameter point.

  Returns:
      PsfVerdict: Holds above the threshold 1/(pq), Fails below it, and one of the
      two equality tags on it. Inadmissible points get their own tag.

  Example:
      >>> classify_psf(ParamPoint(2, 2, 1, 1))
      PsfVerdict(tag=<PsfTag.ConditionalEquality: 'ConditionalEquality'>, gamma=Fraction(1, 1))
  """
  if not point.admissible:
    return PsfVerdict(PsfTag.Inadmissible)
  relation = product_position(point).relation_psf
  if relation == Relation.Above:
    return PsfVerdict(PsfTag.Holds)
  if relation == Relation.Below:
    return PsfVerdict(PsfTag.Fails)
  if point.is_one_one:
    return PsfVerdict(PsfTag.HoldsEquality11)
  # a positive product equal to 1/(pq) forces p, q finite
  return PsfVerdict(PsfTag.ConditionalEquality, gamma=point.spatial_margin * point.p)


def classify_abs(point: ParamPoint) -> AbsVerdict:
  """Decide whether P_N(|f|) stays bounded for every f in the space."""
  if not point.admissible:
    return AbsVerdict(AbsTag.Inadmissible)
  position = product_position(point)
  if position.relation_abs == Relation.Above:
    return AbsVerdict(AbsTag.AbsolutelyConverges)
  if point.is_one_one and point.product == 1:
    return AbsVerdict(AbsTag.AbsolutelyConverges)
  return AbsVerdict(AbsTag.MayDiverge)


def classify_abs_two_sided(point: ParamPoint) -> AbsVerdict:
  """Both P_N(|f|) and P_N(|fhat|) bounded for every f in the space."""
  if not point.admissible:
    return AbsVerdict(AbsTag.Inadmissible)
  if point.is_one_one:
    ok = point.alpha * point.beta >= 1
  else:
    threshold = max(point.inv_p * point.inv_q, point.inv_p / 2, point.inv_q / 2)
    ok = point.product > threshold
  return AbsVerdict(AbsTag.AbsolutelyConverges if ok else AbsTag.MayDiverge)


def gamma_exponent(point: ParamPoint) -> Fraction:
  """gamma = (alpha - 1/p')/(1/p) for points on the equality manifold.

  On the manifold this equals (1/q)/(beta - 1/q') as well.
  """
  verdict = classify_psf(point)
  if verdict.tag != PsfTag.ConditionalEquality:
    raise RegimeError(f"gamma is only defined in the ConditionalEquality regime; point {point} "
                      f"is {verdict.tag.value}")
  return verdict.gamma


def critical_exponents(point: ParamPoint) -> Tuple[Extended, Extended]:
  """Return (lo, hi) = ((1/q)/(beta - 1/q'), (alpha - 1/p')/(1/p)).

  For admissible points the PSF holds iff lo < hi; scale sequences
  Delta_k = 1 + k^B with lo < B < hi make the step-function construction bounded.
  """
  if not point.admissible:
    raise RegimeError(f"critical exponents need an admissible point, got {point}")
  lo = point.inv_q / point.fourier_margin
  hi = INF if point.p is INF else point.spatial_margin * point.p
  return lo, hi


def _ceil_root(x: int, k: int) -> int:
  """Smallest integer r with r**k >= x."""
  if x <= 1:
    return max(x, 0)
  r = int(math.exp(math.log(x) / k))
  while r**k < x:
    r += 1
  while r > 0 and (r - 1)**k >= x:
    r -= 1
  return r


def coupled_index(N: int, gamma: Fraction) -> int:
  """Exact M = ceil(N**gamma) for a positive rational gamma."""
  gamma = Fraction(gamma)
  if gamma <= 0:
    raise UserError(f"gamma must be positive, got {gamma}")
  if N < 0:
    raise UserError(f"N must be non-negative, got {N}")
  return _ceil_root(N**gamma.numerator, gamma.denominator)
