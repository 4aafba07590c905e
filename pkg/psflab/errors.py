# -*- coding: utf-8 -*-
import json
from typing import Any, Dict, Optional

from psflab.versions import LAB_VERSION, OS_VER, PYTHON_VERSION


class UserError(Exception):
  """ User Error """


class RegimeError(UserError):
  """Raised when an operation is called outside the parameter regime it is defined on."""


class IntegrationError(Exception):
  """Raised when quadrature detects a non-integrable singularity or a divergent tail."""


def _jsonable(value: Any) -> Any:
  if isinstance(value, dict):
    return {str(k): _jsonable(v) for k, v in value.items()}
  if isinstance(value, (list, tuple)):
    return [_jsonable(v) for v in value]
  if isinstance(value, (bool, int, float, str)) or value is None:
    return value
  return str(value)


class CheckFailed(Exception):
  """ Numerical check failure """

  def __init__(self,
               check: str,
               params: Dict[str, Any],
               measured: Any,
               bound: Any,
               detail: Optional[str] = None) -> None:
    self.check = check
    self.params = params
    self.measured = measured
    self.bound = bound
    self.detail = detail or 'N/A'

    msg = """%(check)s FAILED.  measured: %(measured)s, bound: %(bound)s, detail: %(detail)s
 >> psflab %(lab_version)s with Python %(python_version)s on %(os_version)s
 >> CHECK %(check)s
 >> PARAMS %(params)s""" % {
        'check': check,
        'measured': measured,
        'bound': bound,
        'detail': self.detail,
        'params': json.dumps(_jsonable(params), indent=2, sort_keys=True),
        'lab_version': LAB_VERSION,
        'python_version': PYTHON_VERSION,
        'os_version': OS_VER
    }

    super(CheckFailed, self).__init__(msg)


def check_le(check: str, measured: float, bound: float, params: Dict[str, Any],
             detail: Optional[str] = None) -> None:
  """Raise CheckFailed unless `measured <= bound`."""
  if not measured <= bound:
    raise CheckFailed(check, params, measured, bound, detail)
