import importlib
import inspect
from typing import Any, List

from psflab.errors import UserError
from psflab.families.base import PairFamily

FAMILY_MODULES = ["gaussian", "perturbed_gaussian", "stepspec", "mainth3", "diagonal"]


def family_class(name: str) -> type:
  """The PairFamily subclass defined in `psflab.families.<name>`."""
  module_name = name.replace("-", "_")
  if module_name not in FAMILY_MODULES:
    raise UserError(f"unknown family '{name}'; choose one of {', '.join(FAMILY_MODULES)}")
  module = importlib.import_module(f"psflab.families.{module_name}")
  # get main family class
  main_cls = None
  for obj_name, obj in module.__dict__.items():
    if inspect.isclass(obj) and issubclass(obj, PairFamily) and "PairFamily" in obj_name \
        and obj.__module__ == module.__name__:
      main_cls = obj
  if main_cls is None:
    raise UserError(f"module psflab.families.{module_name} defines no PairFamily")
  return main_cls


def load_family(name: str, **kwargs: Any) -> PairFamily:
  """Get a family object by name.

  Args:
      name: module name in psflab/families/ ("gaussian", "mainth3", ...).
      kwargs: forwarded to the family constructor (point, kernel, seed, params).

  Returns:
      PairFamily
  """
  return family_class(name)(**kwargs)


def list_families() -> List[str]:
  return list(FAMILY_MODULES)
