"""Command line interface of the lab: classify, bump, stepfn, norms, psf-run, family,
signs, weights-check and verify."""
import argparse
import sys
from typing import List, Optional

from schema import SchemaError

from psflab.errors import CheckFailed, IntegrationError, UserError
from psflab.experiments.commands import COMMANDS
from psflab.experiments.config import SUITES, GlobalConfig, build_config
from psflab.experiments.records import read_manifest
from psflab.experiments.verify import verify
from psflab.families.utils import list_families
from psflab.utils.logging import get_logger, set_level
from psflab.utils.misc import parse_int_list

logger = get_logger(logger_level="INFO", name=__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


def _global_flags() -> argparse.ArgumentParser:
  # SUPPRESS keeps a flag given before the subcommand from being reset after it
  common = argparse.ArgumentParser(add_help=False)
  common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="64-bit root seed (0)")
  common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="Worker threads")
  common.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="Absolute tolerance")
  common.add_argument(
      "--out-dir", dest="out_dir", default=argparse.SUPPRESS, help="Output directory")
  common.add_argument("--config", default=argparse.SUPPRESS, help="YAML run configuration")
  common.add_argument(
      "--log-level",
      dest="log_level",
      default=argparse.SUPPRESS,
      choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
      help="Logging level")
  return common


def build_parser() -> argparse.ArgumentParser:
  common = _global_flags()
  parser = argparse.ArgumentParser(prog="psflab", description=__doc__, parents=[common])
  sub = parser.add_subparsers(dest="command", required=True)

  p = sub.add_parser("classify", parents=[common], help="PSF regime of a parameter point")
  p.add_argument("--p", required=True, help="Space exponent, rational or inf")
  p.add_argument("--q", required=True, help="Frequency exponent, rational or inf")
  p.add_argument("--alpha", required=True, help="Space weight exponent")
  p.add_argument("--beta", required=True, help="Frequency weight exponent")
  p.add_argument("--abs", action="store_true", help="Also classify absolute convergence")
  p.add_argument(
      "--two-sided", dest="two_sided", action="store_true", help="Absolute convergence of both sums")
  p.add_argument("--out", default=None, help="Also write the verdict to this JSON file")

  p = sub.add_parser("bump", parents=[common], help="Sample the bump pair")
  p.add_argument("--dump", default=None, help="CSV file for (x, phi) and (xi, phihat)")
  p.add_argument("--x-max", dest="x_max", type=float, default=16.0, help="Largest x")
  p.add_argument("--xi-max", dest="xi_max", type=float, default=1.5, help="Largest xi")

  p = sub.add_parser("stepfn", parents=[common], help="Evaluate F, Fhat or Ghat of a step spec")
  p.add_argument("--spec", required=True, help="JSON {c: [...], delta: [...]}")
  p.add_argument("--emit", required=True, choices=["F", "Fhat", "Ghat"])
  p.add_argument("--range", required=True, help="a:b:n")
  p.add_argument("out", help="Output CSV")

  p = sub.add_parser("norms", parents=[common], help="Measured norms against the coefficient bounds")
  p.add_argument("--spec", required=True)
  p.add_argument("--alpha", required=True)
  p.add_argument("--p", required=True)
  p.add_argument("--beta", required=True)
  p.add_argument("--q", required=True)
  p.add_argument("--nu", default=None, help="Decay exponent of the Ghat side (default beta)")
  p.add_argument("--out", default=None, help="Also write the record to this JSON file")

  p = sub.add_parser("psf-run", parents=[common], help="Defect series P_N(f) - P_M(fhat)")
  p.add_argument("--family", required=True, choices=list_families())
  p.add_argument("--point", required=True, help="p,q,alpha,beta")
  p.add_argument("--N", required=True, help="16,32,64 or 16:1024:x2")
  p.add_argument("--index", type=int, default=0, help="Family member")
  p.add_argument("--param", action="append", help="Family parameter key=value (repeatable)")
  p.add_argument("--out", required=True, help="Output CSV")

  p = sub.add_parser("family", parents=[common], help="Build a counterexample family")
  p.add_argument("--name", required=True, choices=["mainth3", "extkah2", "extkah2-inf", "diagonal"])
  p.add_argument("--point", required=True, help="p,q,alpha,beta")
  p.add_argument("--N", default=None, help="N, or the schedule for diagonal")
  p.add_argument("--J", type=int, default=3, help="Schedule length for diagonal")
  p.add_argument("--rate", type=float, default=1.0, help="Schedule rate for diagonal")
  p.add_argument("--signs", default=None, help="seed:<u64> or file:<path>")
  p.add_argument("--out", required=True, help="Output JSON")

  p = sub.add_parser("signs", parents=[common], help="Search signs for small L^q partial sums")
  p.add_argument("--coeffs", required=True, help="JSON list of coefficients")
  p.add_argument("--weights", default=None, help="JSON list of nonnegative weights")
  p.add_argument("--q", required=True)
  p.add_argument("--trials", type=int, default=256)
  p.add_argument("--polish", type=int, default=8, help="Greedy passes on the best draws")
  p.add_argument("--exhaustive", action="store_true", help="Try every sign vector (N <= 20)")
  p.add_argument("--out", required=True, help="Output JSON")

  p = sub.add_parser("weights-check", parents=[common], help="Sufficient conditions for general weights")
  p.add_argument("--u", required=True, help="pow:alpha, const or file:<path>")
  p.add_argument("--v", required=True, help="pow:beta, const or file:<path>")
  p.add_argument("--deltaB", default=None, help="Scale exponent B of Delta_k = 1 + k^B")
  p.add_argument("--p", required=True)
  p.add_argument("--q", required=True)
  p.add_argument("--N-list", dest="N_list", default="16:1024:x2")
  p.add_argument("--out", required=True, help="Output CSV")

  p = sub.add_parser("verify", parents=[common], help="Run the acceptance suite")
  p.add_argument("--suite", choices=SUITES, default=None)
  p.add_argument("--criteria", default=None, help="Subset such as 1,2,9")
  p.add_argument("--manifest", default=None, help="Replay the configuration of a manifest")
  return parser


def _config(args: argparse.Namespace) -> GlobalConfig:
  overrides = {key: getattr(args, key, None) for key in ("seed", "threads", "tol", "out_dir",
                                                         "log_level")}
  if args.command == "verify":
    if args.manifest:
      stored = read_manifest(args.manifest)["config"]
      stored.pop("args", None)
      overrides = {**stored, **{k: v for k, v in overrides.items() if v is not None}}
    verify_overrides = dict(overrides.get("verify") or {})
    if args.suite:
      verify_overrides["suite"] = args.suite
    if args.criteria:
      verify_overrides["criteria"] = parse_int_list(args.criteria)
    overrides["verify"] = verify_overrides
  return build_config(getattr(args, "config", None), overrides)


def run(argv: Optional[List[str]] = None) -> int:
  """Parse, dispatch and map errors to exit codes (0 ok, 1 failed check, 2 usage)."""
  parser = build_parser()
  try:
    args = parser.parse_args(argv)
  except SystemExit as e:
    return EXIT_OK if e.code == 0 else EXIT_USAGE

  try:
    config = _config(args)
    set_level(config.log_level)
    if args.command == "verify":
      return verify(config)
    return COMMANDS[args.command](args, config)
  except CheckFailed as e:
    logger.error(str(e))
    return EXIT_CHECK_FAILED
  except (UserError, SchemaError, IntegrationError) as e:
    logger.error(str(e))
    return EXIT_USAGE


def main() -> None:
  sys.exit(run())


if __name__ == "__main__":
  main()
