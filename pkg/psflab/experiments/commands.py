"""Subcommand bodies behind the `psflab` console script.

Each command takes the parsed arguments and the merged GlobalConfig, writes its
records through a RecordWriter and returns an exit code. JSON verdicts go to
stdout, tables to files.
"""

import json
import math
import os
from argparse import Namespace
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from schema import SchemaError

from psflab.analysis import norms, psf, regime, stepfn
from psflab.analysis.bump import BumpKernel, default_kernel
from psflab.analysis.regime import INF, ParamPoint, format_extended, parse_extended
from psflab.analysis.weights import PowerScales, WeightPair, default_scale_exponent, verdict
from psflab.constants import experiment as ec
from psflab.constructions import counterexamples as cx
from psflab.constructions import signsearch
from psflab.errors import UserError
from psflab.experiments.config import GlobalConfig
from psflab.experiments.records import RecordWriter, dumps_json
from psflab.families.stepspec import load_stepspec
from psflab.families.utils import load_family
from psflab.schema.files import get_weight_table_schema, validate_sequence, validate_signs
from psflab.utils.logging import get_logger, print_table, table_from_dict
from psflab.utils.misc import parse_int_list

logger = get_logger(logger_level="INFO", name=__name__)

DUMP_POINTS = 2049


def _emit(record: Dict[str, Any], single_line: bool = False) -> None:
  if single_line:
    print(json.dumps(record, sort_keys=True))
  else:
    print(dumps_json(record), end="")


def _writer(config: GlobalConfig, command: str, args: Namespace,
            kernel: Optional[BumpKernel] = None) -> RecordWriter:
  echo = config.manifest_echo()
  echo["args"] = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config")}
  return RecordWriter(config.out_dir, command, echo, config.seed,
                      kernel.params() if kernel is not None else None)


def _read_json(path: str) -> Any:
  try:
    with open(path, encoding="utf-8") as f:
      return json.load(f)
  except (OSError, ValueError) as e:
    raise UserError(f"cannot read '{path}': {e}") from e


def parse_range(text: str) -> np.ndarray:
  """"a:b:n" -> n equally spaced points from a to b."""
  parts = text.split(":")
  if len(parts) != 3:
    raise UserError(f"a range is a:b:n, got '{text}'")
  try:
    a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
  except ValueError as e:
    raise UserError(f"cannot parse range '{text}'") from e
  if n < 1 or not (math.isfinite(a) and math.isfinite(b)) or b < a:
    raise UserError(f"a range needs a <= b finite and n >= 1, got '{text}'")
  return np.linspace(a, b, n)


def parse_params(items: Optional[List[str]]) -> Dict[str, Any]:
  """["eps=0.2", "schedule=89,1619"] -> {"eps": 0.2, "schedule": [89, 1619]}."""
  out: Dict[str, Any] = {}
  for item in items or []:
    if "=" not in item:
      raise UserError(f"family parameters are key=value, got '{item}'")
    key, value = item.split("=", 1)
    if "," in value:
      out[key] = parse_int_list(value)
      continue
    for cast in (int, float):
      try:
        out[key] = cast(value)
        break
      except ValueError:
        continue
    else:
      out[key] = value
  return out


def tabulated_weight(path: str) -> norms.WeightSpec:
  """Even weight from {"x": [...], "w": [...], "tail_exponent": r}.

  Linear interpolation on the table, then w_last (x / x_last)^r beyond it.
  """
  try:
    table = get_weight_table_schema().validate(_read_json(path))
  except SchemaError as e:
    raise UserError(f"invalid weight table '{path}': {e}") from e
  x = np.asarray(table["x"], dtype=float)
  w = np.asarray(table["w"], dtype=float)
  r = float(table["tail_exponent"])

  def evaluate(ax: np.ndarray) -> np.ndarray:
    ax = np.asarray(ax, dtype=float)
    inside = np.interp(np.minimum(ax, x[-1]), x, w)
    return np.where(ax <= x[-1], inside, w[-1] * (np.maximum(ax, x[-1]) / x[-1])**r)

  return norms.general_weight(f"table:{os.path.basename(path)}", evaluate,
                              norms.Monotone.NonDecreasing)


def parse_weight(text: str) -> Tuple[norms.WeightSpec, Optional[str]]:
  """"pow:<r>" is (1+|x|)^r, "const" is 1, "file:<path>" a tabulated weight.

  Returns the weight and its power exponent as a string, if it has one.
  """
  if text == "const":
    return norms.constant_weight(), "0"
  if text.startswith("pow:"):
    exponent = parse_extended(text[4:])
    return norms.shifted_power_weight(exponent), format_extended(exponent)
  if text.startswith("file:"):
    return tabulated_weight(text[5:]), None
  raise UserError(f"weights are pow:<r>, const or file:<path>, got '{text}'")


def parse_signs(text: Optional[str], N: int, default_seed: int) -> np.ndarray:
  """"seed:<u64>" draws N+1 signs from SeedSequence(u64); "file:<path>" reads a sign file."""
  text = text or f"seed:{default_seed}"
  if text.startswith("seed:"):
    try:
      seed = int(text[5:])
    except ValueError as e:
      raise UserError(f"bad sign seed in '{text}'") from e
    if not 0 <= seed < 2**64:
      raise UserError(f"sign seed must be a 64-bit unsigned integer, got {seed}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return rng.choice(np.array([-1.0, 1.0]), size=N + 1)
  if text.startswith("file:"):
    try:
      signs = validate_signs(_read_json(text[5:]))
    except SchemaError as e:
      raise UserError(f"invalid sign file '{text[5:]}': {e}") from e
    if len(signs) != N + 1:
      raise UserError(f"sign file has {len(signs)} signs, N = {N} needs {N + 1}")
    return np.asarray(signs, dtype=float)
  raise UserError(f"signs are seed:<u64> or file:<path>, got '{text}'")


def classify(args: Namespace, config: GlobalConfig) -> int:
  point = ParamPoint(args.p, args.q, args.alpha, args.beta)
  verdict_psf = regime.classify_psf(point)
  record: Dict[str, Any] = {"point": point.to_dict(), **verdict_psf.to_dict()}
  record["position"] = regime.product_position(point).to_dict()
  if point.admissible:
    lo, hi = regime.critical_exponents(point)
    record["critical_exponents"] = [format_extended(lo), format_extended(hi)]
  if args.abs:
    record["abs"] = regime.classify_abs(point).tag.value
  if args.two_sided:
    record["abs_two_sided"] = regime.classify_abs_two_sided(point).tag.value
  record["witness"] = cx.witness_construction(point).to_dict()
  with _writer(config, "classify", args) as records:
    if args.out:
      records.document(args.out, record)
  _emit(record, single_line=True)
  return 0


def bump(args: Namespace, config: GlobalConfig) -> int:
  kernel = default_kernel()
  x = np.linspace(0.0, args.x_max, DUMP_POINTS)
  xi = np.linspace(0.0, args.xi_max, DUMP_POINTS)
  frame = pd.DataFrame({
      "kind": ["phi"] * len(x) + ["phihat"] * len(xi) + ["phihat_derivative"] * len(xi),
      "t": np.concatenate([x, xi, xi]),
      "value": np.concatenate([kernel.phi(x), kernel.phihat(xi), kernel.phihat_derivative(xi)]),
  })
  summary = {
      "phi_0": float(kernel.phi(0.0)),
      "decay_constants": {str(k): v for k, v in kernel.decay_constants.items()},
      "lipschitz": kernel.lipschitz,
  }
  with _writer(config, "bump", args, kernel) as records:
    if args.dump:
      path = records.path(args.dump)
      records.table(args.dump, frame)
      _prepend_header(path, kernel.params())
  _emit(summary)
  return 0


def _prepend_header(path: str, params: Dict[str, Any]) -> None:
  with open(path, encoding="utf-8") as f:
    body = f.read()
  with open(path, "w", encoding="utf-8", newline="\n") as f:
    f.write("# kernel " + json.dumps(params, sort_keys=True) + "\n")
    f.write(body)


def stepfn_emit(args: Namespace, config: GlobalConfig) -> int:
  kernel = default_kernel()
  spec = load_stepspec(args.spec)
  grid = parse_range(args.range)
  if args.emit == "F":
    frame = pd.DataFrame({"x": grid, "F": stepfn.eval_F(spec, kernel, grid)})
  else:
    evaluate = stepfn.eval_Fhat if args.emit == "Fhat" else stepfn.eval_Ghat
    values = np.asarray(evaluate(spec, kernel, grid))
    frame = pd.DataFrame({"xi": grid, "re": values.real, "im": values.imag,
                          "abs": np.abs(values)})
  with _writer(config, "stepfn", args, kernel) as records:
    records.table(args.out, frame)
  logger.info(f"{args.emit} at {len(grid)} points written to {args.out}")
  return 0


def norms_report(args: Namespace, config: GlobalConfig) -> int:
  kernel = default_kernel()
  spec = load_stepspec(args.spec)
  p, q = parse_extended(args.p), parse_extended(args.q)
  alpha, beta = parse_extended(args.alpha), parse_extended(args.beta)
  nu = parse_extended(args.nu) if args.nu else beta
  qconj = regime.conjugate(q)
  # sbp_bound_3 validates nu before the Ghat tail is integrated
  bounds = {
      "sbp_bound_1": norms.sbp_bound_1(spec, alpha, p),
      "sbp_bound_2": norms.sbp_bound_2(spec, beta, q),
      "sbp_bound_3": norms.sbp_bound_3(spec, nu, q),
  }

  f_norm = norms.step_line_norm(spec, kernel, p, norms.shifted_power_weight(alpha), config.tol)
  fhat_norm = norms.spectral_norm(spec, kernel, norms.SpectralSide.Fhat,
                                  norms.shifted_power_weight(beta), q)
  ghat_norm = norms.spectral_norm(spec, kernel, norms.SpectralSide.Ghat,
                                  norms.shifted_power_weight(-nu), qconj)
  record = {
      "N": spec.N,
      "R": spec.ratio_bound,
      "measured": {"f": f_norm.to_dict(), "fhat": fhat_norm.to_dict(), "ghat": ghat_norm.to_dict()},
      "bounds": bounds,
      "exponents": {"p": args.p, "q": args.q, "alpha": args.alpha, "beta": args.beta,
                    "nu": format_extended(nu)},
  }
  for key, result in (("f", f_norm), ("fhat", fhat_norm), ("ghat", ghat_norm)):
    if not result.certified:
      logger.warning(f"{key} norm ({result.method.value}) is not certified")
  with _writer(config, "norms", args, kernel) as records:
    if args.out:
      records.document(args.out, record)
  rows = [{"quantity": k, "measured": record["measured"][k]["value"], "bound": record["bounds"][b]}
          for k, b in (("f", "sbp_bound_1"), ("fhat", "sbp_bound_2"), ("ghat", "sbp_bound_3"))]
  print_table(table_from_dict(rows, ["quantity", "measured", "bound"], title="weighted norms"))
  _emit(record)
  return 0


def psf_run(args: Namespace, config: GlobalConfig) -> int:
  kernel = default_kernel()
  point = ParamPoint.parse(args.point)
  family = load_family(args.family, point=point, kernel=kernel, seed=config.seed,
                       **parse_params(args.param))
  pair = family.pair(args.index)
  N_list = parse_int_list(args.N)
  series = psf.psf_defect_series(pair, point, N_list, seed=config.seed, threads=config.threads)
  frame = series.to_frame()
  with _writer(config, "psf-run", args, kernel) as records:
    records.table(args.out, frame)
  violations = series.monotone_violations()
  logger.info(f"{pair.name} at {point}: final |defect| {abs(series.defects[-1]):.3g}, "
              f"{violations} non-monotone steps")
  return 0


def _family_spec(name: str, point: ParamPoint, N: int, signs: Optional[str],
                 seed: int) -> Tuple[stepfn.StepSpec, Dict[str, Any]]:
  if name == "mainth3":
    params = cx.mainth3_params(point)
    return cx.mainth3_family(point, N), params.to_dict()
  if name == "extkah2":
    params = cx.extkah2_params(point)
    return cx.extkah2_family(point, N, parse_signs(signs, N, seed)), params.to_dict()
  if name == "extkah2-inf":
    params = cx.extkah2_qinf_params(point)
    return cx.extkah2_qinf_family(point, N, parse_signs(signs, N, seed)), {
        **params.to_dict(), "growth_scale": cx.qinf_growth_scale(point, N)}
  raise UserError(f"unknown family '{name}'")


def family(args: Namespace, config: GlobalConfig) -> int:
  kernel = default_kernel()
  point = ParamPoint.parse(args.point)
  if args.name == "diagonal":
    schedule = parse_int_list(args.N) if args.N else cx.rapid_schedule(args.J, rate=args.rate)
    pair = cx.diagonal_function(point, len(schedule), schedule, kernel)
    document = {
        "family": "diagonal",
        "point": point.to_dict(),
        "schedule": pair.metadata["schedule"],
        "weights": pair.metadata["weights"],
        "terms": [spec.to_dict() for spec in pair.metadata["specs"]],
    }
    with _writer(config, "family", args, kernel) as records:
      records.document(args.out, document)
      records.table(os.path.splitext(args.out)[0] + "_increments.csv",
                    cx.diagonal_increments(pair, threads=config.threads))
    return 0

  N = parse_int_list(args.N)[0] if args.N else 64
  spec, params = _family_spec(args.name, point, N, args.signs, config.seed)
  document = {**spec.to_dict(), "meta": {"family": args.name, "N": N, **params,
                                         "sum_abs_c_delta": cx.absolute_sum(spec)}}
  with _writer(config, "family", args, kernel) as records:
    records.document(args.out, document)
  return 0


def signs(args: Namespace, config: GlobalConfig) -> int:
  try:
    c = validate_sequence(_read_json(args.coeffs))
    w = validate_sequence(_read_json(args.weights), nonnegative=True) if args.weights \
        else [1.0] * len(c)
  except SchemaError as e:
    raise UserError(f"invalid coefficient or weight file: {e}") from e
  seed = config.seed
  q = parse_extended(args.q)
  if q is INF:
    best, worst = signsearch.salem_zygmund_check(c, args.trials, seed, config.threads)
    document = {"signs": [int(s) for s in best], "objective": worst, "method": "salem-zygmund",
                "ratio_bound": ec.SALEM_ZYGMUND_RATIO}
  else:
    problem = signsearch.SignSearchProblem(c, w, q, args.trials, seed)
    if args.exhaustive:
      result = signsearch.exhaustive_search(problem)
    else:
      result = signsearch.search_signs(problem, config.threads, polish=args.polish)
    document = result.to_dict()
  document["q"] = format_extended(q)
  document["seed"] = seed
  with _writer(config, "signs", args) as records:
    records.document(args.out, document)
  logger.info(f"signs written to {args.out} (objective {document['objective']:.6g})")
  return 0


def weights_check(args: Namespace, config: GlobalConfig) -> int:
  kernel = default_kernel()
  u, u_exp = parse_weight(args.u)
  v, v_exp = parse_weight(args.v)
  p, q = parse_extended(args.p), parse_extended(args.q)
  if args.deltaB:
    B = float(parse_extended(args.deltaB))
  elif u_exp is not None and v_exp is not None:
    B = default_scale_exponent(ParamPoint(p, q, parse_extended(u_exp), parse_extended(v_exp)))
  else:
    raise UserError("--deltaB is required unless both weights are powers")
  pair = WeightPair(u, v, PowerScales(B), PowerScales(1.0 / B))
  report = verdict(pair, p, q, parse_int_list(args.N_list), kernel, threads=config.threads)
  record = {**report.to_dict(), "B": B, "u": u.name, "v": v.name}
  with _writer(config, "weights-check", args, kernel) as records:
    records.table(args.out, report.to_frame())
  _emit(record)
  return 0


COMMANDS: Dict[str, Callable[[Namespace, GlobalConfig], int]] = {
    "classify": classify,
    "bump": bump,
    "stepfn": stepfn_emit,
    "norms": norms_report,
    "psf-run": psf_run,
    "family": family,
    "signs": signs,
    "weights-check": weights_check,
}
