import math
from typing import Any, Dict, List

from schema import And, Optional, Or, Regex, Schema, Use

_number = And(Or(int, float), lambda x: not isinstance(x, bool) and math.isfinite(x))
_sign = And(int, lambda x: x in (-1, 1))
# "3/4", "2", "0.5" or "inf"
_extended = Regex(r'^\s*(inf|[+]?\d+(\.\d+)?(/\d+)?)\s*$')


def get_spec_schema() -> Schema:
  """Schema for a step spec file.

        This schema validates:

        - 'c': non-empty list of finite numbers
        - 'delta': list of positive finite numbers of the same length
        - optional 'meta': dict

        Returns:
            Schema: the step spec schema.
        """
  return Schema(
      And({
          'c': And(list, len, [_number]),
          'delta': And(list, len, [And(_number, lambda x: x > 0)]),
          Optional('meta'): dict,
      }, lambda d: len(d['c']) == len(d['delta'])))


def get_signs_schema() -> Schema:
  """A sign file: {"signs": [+1/-1, ...]} with optional metadata."""
  return Schema({
      'signs': And(list, len, [_sign]),
      Optional('objective'): _number,
      Optional('baseline'): _number,
      Optional(str): object,
  })


def get_sequence_schema(nonnegative: bool = False) -> Schema:
  """A plain JSON list of finite numbers, used for coefficient and weight files."""
  item = And(_number, lambda x: x >= 0) if nonnegative else _number
  return Schema(And(list, len, [item]))


def get_weight_table_schema() -> Schema:
  """A tabulated weight {"x": [...], "w": [...], "tail_exponent": r}.

  x starts at 0 and increases, w is positive and non-decreasing; beyond the last
  abscissa the weight continues as w_last (x/x_last)^r.
  """
  return Schema(
      And({
          'x': And(list, lambda x: len(x) >= 2, [And(_number, lambda v: v >= 0)]),
          'w': And(list, lambda x: len(x) >= 2, [And(_number, lambda v: v > 0)]),
          Optional('tail_exponent', default=0.0): And(_number, lambda v: v >= 0),
      }, lambda d: len(d['x']) == len(d['w']) and d['x'][0] == 0 and
          all(a < b for a, b in zip(d['x'][:-1], d['x'][1:])) and
          all(a <= b for a, b in zip(d['w'][:-1], d['w'][1:]))))


def get_config_schema() -> Schema:
  """Schema for a YAML run configuration; every key is optional."""
  return Schema({
      Optional('seed'): And(int, lambda x: 0 <= x < 2**64),
      Optional('threads'): And(int, lambda x: x >= 1),
      Optional('tol'): And(_number, lambda x: x > 0),
      Optional('out_dir'): And(str, len),
      Optional('log_level'): And(str, Use(str.upper), lambda x: x in
                                 ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')),
      Optional('verify'): {
          Optional('suite'): And(str, lambda x: x in ('primary', 'fast')),
          Optional('criteria'): [And(int, lambda x: 1 <= x <= 14)],
          Optional('random_specs'): And(int, lambda x: x >= 2),
          Optional('weight_points'): And(int, lambda x: x >= 1),
      },
  })


def get_manifest_schema() -> Schema:
  """Schema for the manifest.json written next to every run."""
  return Schema({
      'lab_version': And(str, len),
      'python_version': str,
      'os': str,
      'command': And(str, len),
      'seed': int,
      'config': dict,
      Optional('kernel'): dict,
      Optional('outputs'): [str],
      Optional(str): object,
  })


def validate_spec(data: Any) -> Dict[str, Any]:
  return get_spec_schema().validate(data)


def validate_signs(data: Any) -> List[int]:
  return get_signs_schema().validate(data)['signs']


def validate_sequence(data: Any, nonnegative: bool = False) -> List[float]:
  return get_sequence_schema(nonnegative).validate(data)


def validate_point_field(text: str) -> str:
  return Schema(_extended).validate(text)
