"""The acceptance suite behind `psflab verify`.

Every criterion returns an Outcome holding its table; the runner writes one CSV
per criterion plus verify_summary.csv. No timing or host data enters a CSV, so
two runs from the same manifest give byte-identical bodies.
"""

import math
import os
import tempfile
import time
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.integrate import simpson

from psflab.analysis import norms, psf, regime, stepfn
from psflab.analysis.bump import BumpKernel, default_kernel
from psflab.analysis.regime import AbsTag, ParamPoint, PsfTag, format_extended
from psflab.analysis.weights import check_consistency, sample_points
from psflab.constants import experiment as ec
from psflab.constructions import counterexamples as cx
from psflab.constructions import signsearch
from psflab.errors import CheckFailed, IntegrationError, RegimeError
from psflab.experiments.config import GlobalConfig
from psflab.experiments.records import RecordWriter, csv_body, write_csv
from psflab.families.stepspec import random_stepspec
from psflab.families.utils import load_family
from psflab.utils.logging import get_logger, print_table, table_from_dict
from psflab.utils.misc import count_monotone_violations, loglog_slope
from psflab.utils.parallel import ordered_map

logger = get_logger(logger_level="INFO", name=__name__)

SUMMARY_NAME = "verify_summary.csv"

# (p, q, alpha, beta) -> (PSF tag, gamma or None, absolute-convergence tag)
REGIME_TABLE = [
    ("2,2,1,1", PsfTag.ConditionalEquality, "1/1", AbsTag.MayDiverge),
    ("2,2,2,2", PsfTag.Holds, None, AbsTag.AbsolutelyConverges),
    ("2,2,3/4,3/4", PsfTag.Fails, None, AbsTag.MayDiverge),
    ("2,2,1/2,1", PsfTag.Inadmissible, None, AbsTag.Inadmissible),
    ("1,1,1,1", PsfTag.HoldsEquality11, None, AbsTag.AbsolutelyConverges),
    ("1,1,1/2,2", PsfTag.HoldsEquality11, None, AbsTag.AbsolutelyConverges),
    ("1,1,1/2,1/2", PsfTag.Fails, None, AbsTag.MayDiverge),
    ("1,1,2,2", PsfTag.Holds, None, AbsTag.AbsolutelyConverges),
    ("inf,inf,2,2", PsfTag.Holds, None, AbsTag.AbsolutelyConverges),
    ("inf,inf,1,2", PsfTag.Inadmissible, None, AbsTag.Inadmissible),
    ("inf,2,3/2,1", PsfTag.Holds, None, AbsTag.AbsolutelyConverges),
    ("2,inf,1,3/2", PsfTag.Holds, None, AbsTag.MayDiverge),
    ("4,4,1,1", PsfTag.ConditionalEquality, "1/1", AbsTag.MayDiverge),
    ("4,4,5/4,5/4", PsfTag.Holds, None, AbsTag.AbsolutelyConverges),
    ("4,4,1,9/8", PsfTag.Holds, None, AbsTag.MayDiverge),
    ("4,4,1,5/4", PsfTag.Holds, None, AbsTag.MayDiverge),
    ("3/2,3,1,1", PsfTag.ConditionalEquality, "1/1", AbsTag.MayDiverge),
    ("3/2,3,2/3,1", PsfTag.Fails, None, AbsTag.MayDiverge),
    ("2,2,3/2,3/4", PsfTag.ConditionalEquality, "2/1", AbsTag.MayDiverge),
    ("2,2,3/4,3/2", PsfTag.ConditionalEquality, "1/2", AbsTag.MayDiverge),
    ("1,2,1,1", PsfTag.ConditionalEquality, "1/1", AbsTag.MayDiverge),
    ("1,inf,1,2", PsfTag.Holds, None, AbsTag.AbsolutelyConverges),
    ("2,inf,3/2,3/2", PsfTag.Holds, None, AbsTag.AbsolutelyConverges),
    ("1,1,1/2,1", PsfTag.Fails, None, AbsTag.MayDiverge),
]


@dataclass
class Outcome:
  passed: bool
  measured: float
  threshold: float
  frame: pd.DataFrame
  detail: str = ""


@dataclass
class Context:
  """What a criterion may depend on: seed, tolerance, threads and suite size."""
  kernel: BumpKernel
  seed: int
  tol: float
  threads: int
  fast: bool
  random_specs: Optional[int] = None
  weight_points: Optional[int] = None

  def seed_for(self, number: int) -> int:
    """A 64-bit seed of its own for every criterion."""
    state = np.random.SeedSequence([self.seed, number]).generate_state(1, dtype=np.uint64)
    return int(state[0])

  def size(self, primary, fast):
    return fast if self.fast else primary


@dataclass
class Criterion:
  number: int
  name: str
  run: Callable[[Context], Outcome]

  @property
  def file_name(self) -> str:
    return f"criterion_{self.number:02d}_{self.name}.csv"


def theta_oracle(ctx: Context) -> Outcome:
  widths = [0.5, 1.0, 2.0]
  defects = [psf.theta_defect(t, 16) for t in widths]
  worst = max(defects)
  return Outcome(worst <= 1e-10, worst, 1e-10, pd.DataFrame({"t": widths, "defect": defects}))


def regime_table(ctx: Context) -> Outcome:
  rows = []
  for text, tag, gamma, abs_tag in REGIME_TABLE:
    point = ParamPoint.parse(text)
    got = regime.classify_psf(point)
    got_gamma = format_extended(got.gamma) if got.gamma is not None else ""
    got_abs = regime.classify_abs(point).tag
    ok = got.tag == tag and got_gamma == (gamma or "") and got_abs == abs_tag
    rows.append({"point": text, "expected": tag.value, "got": got.tag.value, "gamma": got_gamma,
                 "abs_expected": abs_tag.value, "abs_got": got_abs.value, "match": ok})
  frame = pd.DataFrame(rows)
  mismatches = int((~frame["match"]).sum())
  return Outcome(mismatches == 0, mismatches, 0, frame)


def bump_consistency(ctx: Context) -> Outcome:
  kernel = ctx.kernel
  xi = np.linspace(-2.0, 2.0, 81)
  x = kernel.grid
  # phi is even: phihat(xi) = 2 int_0^X phi(x) cos(2 pi x xi) dx
  transform = np.array(
      [2.0 * simpson(kernel.values * np.cos(2.0 * np.pi * x * v), x=x) for v in xi])
  error = np.abs(transform - kernel.phihat(xi))
  phi0 = abs(float(kernel.phi(0.0)) - 1.5)
  exact = (np.all(kernel.phihat(np.array([0.0, 0.25, -0.5, 0.5])) == 1.0)
           and np.all(kernel.phihat(np.array([1.0, -1.0, 1.5, 3.0])) == 0.0))
  worst = float(error.max())
  frame = pd.DataFrame({"xi": xi, "quadrature": transform, "phihat": kernel.phihat(xi),
                        "error": error})
  return Outcome(worst <= 1e-8 and phi0 <= 1e-10 and bool(exact), worst, 1e-8, frame,
                 f"|phi(0) - 3/2| = {phi0:.3g}, exact plateau/support: {bool(exact)}")


BOUND_EXPONENTS = {"p": Fraction(2), "alpha": Fraction(1), "q": Fraction(2), "beta": Fraction(1),
                   "nu": Fraction(1)}
CROSS_BETA = Fraction(1, 2)


def _bound_ratios(spec: stepfn.StepSpec, kernel: BumpKernel, tol: float) -> Dict[str, float]:
  e = BOUND_EXPONENTS
  f = norms.step_line_norm(spec, kernel, e["p"], norms.shifted_power_weight(e["alpha"]), tol)
  fhat = norms.spectral_norm(spec, kernel, norms.SpectralSide.Fhat,
                             norms.shifted_power_weight(e["beta"]), e["q"])
  ghat = norms.spectral_norm(spec, kernel, norms.SpectralSide.Ghat,
                             norms.shifted_power_weight(-e["nu"]), regime.conjugate(e["q"]))
  return {
      "N": spec.N,
      "delta_max": spec.delta_max,
      "ratio_1": f.value / norms.sbp_bound_1(spec, e["alpha"], e["p"]),
      "ratio_2": fhat.value / norms.sbp_bound_2(spec, e["beta"], e["q"]),
      "ratio_3": ghat.value / norms.sbp_bound_3(spec, e["nu"], e["q"]),
      "cross_2": norms.sbp2_cross_ratio(spec, CROSS_BETA, e["q"], kernel),
  }


def bound_suite(ctx: Context) -> Outcome:
  count = ctx.random_specs or ctx.size(200, 20)
  children = np.random.SeedSequence(ctx.seed_for(4)).spawn(count)
  specs = [random_stepspec(np.random.default_rng(child)) for child in children]
  rows = ordered_map(lambda spec: _bound_ratios(spec, ctx.kernel, ctx.tol), specs,
                     threads=ctx.threads, desc="bounds")
  frame = pd.DataFrame(rows)
  frame.insert(0, "batch", [i * 2 // count for i in range(count)])
  failures = []
  worst_band = 0.0
  for item in (1, 2, 3):
    column = f"ratio_{item}"
    constant = ec.SBP_BOUND_CONSTANTS[item]
    if frame[column].max() > constant:
      failures.append(f"item {item}: ratio {frame[column].max():.4g} > {constant}")
    batch_max = frame.groupby("batch")[column].max()
    band = float(batch_max.max() / batch_max.min())
    worst_band = max(worst_band, band)
    if band > ec.SBP_STABILITY_BAND:
      failures.append(f"item {item}: batch constants differ by {band:.3f}x")
  cross = frame["cross_2"]
  if cross.max() > ec.SBP2_CROSS_FACTOR or cross.min() < 1.0 / ec.SBP2_CROSS_FACTOR:
    failures.append(f"general-weight bound off sbp_bound_2 by {cross.min():.3g}..{cross.max():.3g}")
  return Outcome(not failures, worst_band, ec.SBP_STABILITY_BAND, frame, "; ".join(failures))


def spike_suite(ctx: Context) -> Outcome:
  N = ctx.size(1 << 10, 1 << 8)
  spec = cx.mainth3_family(ParamPoint(2, 2, 1, 1), N)
  frame = cx.spike_defects(spec, ctx.kernel, 6)
  origin = stepfn.spike_defect(spec, ctx.kernel, 0, 6)
  dominance = cx.spike_dominance(spec, ctx.kernel)
  ok = abs(dominance.floor_ratio - 1.0) <= ec.SPIKE_BAND
  return Outcome(ok, dominance.floor_ratio, 1.0 + ec.SPIKE_BAND, frame,
                 f"full-range ratio {dominance.full_ratio:.4f}, n = 0 defect {origin.defect:.3g}")


def _unit_pairs(ctx: Context, count: int) -> List[psf.FunctionPair]:
  """Gaussians and seeded step functions, scaled to unit weighted norm at (2,2,1,1)."""
  w = norms.shifted_power_weight(1)
  gaussians = load_family("gaussian", kernel=ctx.kernel)
  steps = load_family("stepspec", kernel=ctx.kernel, seed=ctx.seed_for(6), length=16)
  out = []
  for i in range(count):
    if i % 4 == 0:
      pair = gaussians.pair(i // 4)
      size = max(norms.line_norm(pair.f, 2, w).value, norms.line_norm(pair.fhat, 2, w).value)
    else:
      spec = steps.spec(i)
      pair = psf.stepspec_pair(spec, ctx.kernel, name=f"stepspec_{i}")
      size = max(norms.step_line_norm(spec, ctx.kernel, 2, w, ctx.tol).value,
                 norms.spectral_norm(spec, ctx.kernel, norms.SpectralSide.Fhat, w, 2).value)
    out.append(psf.combine_pairs([pair], [1.0 / size], name=pair.name))
  return out


def weighted_sum_bound(ctx: Context) -> Outcome:
  pairs = _unit_pairs(ctx, ctx.size(20, 8))
  N_list = [1 << k for k in range(4, 12)]
  c = np.arange(N_list[-1] + 1, dtype=float)
  rows = []
  for pair in pairs:
    for N in N_list:
      rows.append({"pair": pair.name, "N": N,
                   "Q_N": float(np.real(psf.weighted_sum_Q(pair.f, c, 1, N)))})
  frame = pd.DataFrame(rows)
  sup = frame.assign(abs_Q=frame["Q_N"].abs()).groupby("N")["abs_Q"].max()
  slope = loglog_slope(sup.index.to_numpy(), sup.to_numpy())
  return Outcome(slope < ec.FLAT_SLOPE, slope, ec.FLAT_SLOPE, frame,
                 f"max |Q_N| = {sup.max():.4g}")


def _defect_frames(ctx: Context, family: str, point: ParamPoint, count: int, N_list: Sequence[int],
                   **params) -> List[pd.DataFrame]:
  fam = load_family(family, point=point, kernel=ctx.kernel, seed=ctx.seed_for(7), **params)
  frames = []
  for i in range(count):
    series = psf.psf_defect_series(fam.pair(i), point, N_list, seed=fam.seed, threads=ctx.threads)
    frames.append(series.to_frame().assign(member=i))
  return frames


def holds_convergence(ctx: Context) -> Outcome:
  N_list = [16, 32, 64, 128, 256]
  frames = _defect_frames(ctx, "stepspec", ParamPoint(2, 2, 2, 2), ctx.size(5, 2), N_list,
                          length=32)
  failures, worst = [], 0.0
  for frame in frames:
    defects = frame["defect"].abs().to_list()
    violations = count_monotone_violations(defects, ec.MONOTONE_NOISE_FLOOR)
    shrink = defects[-1] / defects[0] if defects[0] > 0 else 0.0
    worst = max(worst, shrink)
    if violations > 1 or shrink >= 0.1:
      failures.append(f"member {int(frame['member'][0])}: {violations} violations, "
                      f"final/initial {shrink:.3g}")
  return Outcome(not failures, worst, 0.1, pd.concat(frames, ignore_index=True), "; ".join(failures))


def equality_coupling(ctx: Context) -> Outcome:
  N_list = [16, 32, 64, 128, 256]
  frames = _defect_frames(ctx, "perturbed_gaussian", ParamPoint(2, 2, 1, 1), ctx.size(3, 1), N_list)
  final = max(abs(frame["defect"].iloc[-1]) for frame in frames)
  return Outcome(final < 1e-6, final, 1e-6, pd.concat(frames, ignore_index=True))


def dirichlet_suite(ctx: Context) -> Outcome:
  rows = []
  for beta, qprime in ((1, 2), (2, 1)):
    for M in (8, 32, 128):
      for N in (2 * M, 4 * M):
        rows.append(psf.dirichlet_tail_bound(M, N, beta, qprime).to_dict())
  frame = pd.DataFrame(rows)
  failures, worst = [], 0.0
  for (beta, qprime), group in frame.groupby(["beta", "qprime"], sort=True):
    median = float(group["ratio"].median())
    spread = float((group["ratio"] / median - 1.0).abs().max())
    worst = max(worst, spread)
    if spread > ec.DIRICHLET_STABILITY_BAND:
      failures.append(f"(beta, q') = ({beta}, {qprime}): ratio spread {spread:.3f}")
    expected = -float(Fraction(beta)) + 1.0 / float(Fraction(qprime))
    for M, pair in group.groupby("M"):
      slope = loglog_slope(pair["N"].to_numpy(), pair["left"].to_numpy())
      if abs(slope - expected) > ec.DIRICHLET_SLOPE_TOL:
        failures.append(f"(beta, q') = ({beta}, {qprime}), M = {M}: slope {slope:.3f} vs {expected}")
  return Outcome(not failures, worst, ec.DIRICHLET_STABILITY_BAND, frame, "; ".join(failures))


def khintchine_suite(ctx: Context) -> Outcome:
  seed = ctx.seed_for(10)
  c = 1.0 / np.sqrt(np.arange(17, dtype=float) + 1.0)
  w = np.ones_like(c)
  rows = []

  square = signsearch.SignSearchProblem(c, w, 2, trials=8, seed=seed)
  l2_spread = max(
      abs(signsearch.khintchine_objective(s, square) - signsearch.baseline(square))
      for s in signsearch.draw_signs(square))
  rows.append({"check": "q2_invariance", "q": "2/1", "value": l2_spread, "bound": 1e-12})

  problem = signsearch.SignSearchProblem(c, w, 4, trials=ec.DEFAULT_TRIALS, seed=seed)
  best = signsearch.search_signs(problem, ctx.threads)
  optimum = signsearch.exhaustive_search(problem)
  gap = best.objective / optimum.objective
  rows.append({"check": "monte_carlo_vs_exhaustive", "q": "4/1", "value": gap, "bound": 1.05})

  for q in (3, 4, 6):
    check = signsearch.expectation_check(
        signsearch.SignSearchProblem(c, w, q, trials=ec.DEFAULT_TRIALS, seed=seed))
    rows.append({"check": "expectation", "q": format_extended(Fraction(q)), "value": check.ratio,
                 "bound": 1.0 + ec.KHINTCHINE_SLACK})

  flat = np.ones(33)
  _, worst = signsearch.salem_zygmund_check(flat, trials=64, seed=seed, threads=ctx.threads)
  rows.append({"check": "salem_zygmund", "q": "inf", "value": worst,
               "bound": ec.SALEM_ZYGMUND_RATIO})
  frame = pd.DataFrame(rows)
  ok = bool((frame["value"] <= frame["bound"]).all())
  return Outcome(ok, gap, 1.05, frame)


def hardy_littlewood_suite(ctx: Context) -> Outcome:
  count = ctx.size(100, 20)
  children = np.random.SeedSequence(ctx.seed_for(11)).spawn(count)
  rows = []
  for i, child in enumerate(children):
    rng = np.random.default_rng(child)
    n = int(rng.integers(8, 257))
    a = np.sort(rng.uniform(0.0, 1.0, size=n))[::-1]
    for q in (Fraction(3, 2), Fraction(2), Fraction(3)):
      qf = float(q)
      measured = norms.torus_norm(a, q).value
      bound = norms.hardy_littlewood_bound(a, q, norms.PolyKind.Tail)
      rows.append({"sequence": i, "n": n, "q": format_extended(q),
                   "ratio": (measured / bound)**qf})
  frame = pd.DataFrame(rows)
  C = ec.HARDY_LITTLEWOOD_BAND
  lo, hi = float(frame["ratio"].min()), float(frame["ratio"].max())
  return Outcome(lo >= 1.0 / C and hi <= C, max(hi, 1.0 / lo), C, frame)


def flatness_suite(ctx: Context) -> Outcome:
  top = ctx.size(12, 9)
  N_list = [1 << k for k in range(6, top + 1)]
  sweep = cx.family_norm_sweep(ParamPoint(2, 2, 1, 1), N_list, ctx.kernel,
                               fourier_constant=ec.SBP_BOUND_CONSTANTS[2], threads=ctx.threads)
  frame = sweep.frame
  measured = frame.dropna(subset=["fhat_norm"])
  below = bool((measured["fhat_norm"] <= measured["majorant"]).all())
  ok = sweep.f_slope < ec.FLAT_SLOPE and below
  return Outcome(ok, sweep.f_slope, ec.FLAT_SLOPE, frame,
                 f"Fourier norm below its majorant: {below}")


def weights_suite(ctx: Context) -> Outcome:
  count = ctx.weight_points or ctx.size(10, 3)
  N_list = [1 << k for k in range(4, 11)]
  frames = []
  for regime_tag in (PsfTag.Holds, PsfTag.Fails):
    samples = sample_points(regime_tag, count, ctx.seed_for(13) + (regime_tag == PsfTag.Fails))
    frames.append(check_consistency(samples, N_list, ctx.kernel, threads=ctx.threads))
  frame = pd.concat(frames, ignore_index=True)
  resolved = frame[frame["resolved"]]
  mismatches = int((~resolved["agrees"]).sum())
  slow = int((~frame["growth_ok"]).sum())
  unresolved = frame[~frame["resolved"]]
  detail = (f"{len(resolved)} of {len(frame)} points resolved at desk scale; "
            f"{int(unresolved['agrees'].sum())} of {len(unresolved)} unresolved agree; "
            f"{slow} grow slower than predicted")
  ok = mismatches == 0 and slow == 0 and len(resolved) > 0
  return Outcome(ok, mismatches, 0, frame, detail)


def determinism_suite(ctx: Context) -> Outcome:
  """Replays thread-dependent criteria with 1 and several threads and compares CSV bodies."""
  subject = [c for c in CRITERIA if c.number in (7, 9, 10, 11)]
  fast_ctx = replace(ctx, fast=True)
  bodies = []
  for threads in (1, max(2, ctx.threads)):
    with tempfile.TemporaryDirectory() as tmp:
      run_criteria(subject, replace(fast_ctx, threads=threads), tmp, write_summary=False)
      bodies.append({c.file_name: csv_body(os.path.join(tmp, c.file_name)) for c in subject})
  rows = [{"file": name, "identical": bodies[0][name] == bodies[1][name]} for name in bodies[0]]
  frame = pd.DataFrame(rows)
  differing = int((~frame["identical"]).sum())
  return Outcome(differing == 0, differing, 0, frame)


CRITERIA = [
    Criterion(1, "theta", theta_oracle),
    Criterion(2, "regime", regime_table),
    Criterion(3, "bump", bump_consistency),
    Criterion(4, "bounds", bound_suite),
    Criterion(5, "spike", spike_suite),
    Criterion(6, "weighted_sum", weighted_sum_bound),
    Criterion(7, "holds_defect", holds_convergence),
    Criterion(8, "equality_defect", equality_coupling),
    Criterion(9, "dirichlet", dirichlet_suite),
    Criterion(10, "khintchine", khintchine_suite),
    Criterion(11, "hardy_littlewood", hardy_littlewood_suite),
    Criterion(12, "flatness", flatness_suite),
    Criterion(13, "weights", weights_suite),
    Criterion(14, "determinism", determinism_suite),
]


def _run_one(criterion: Criterion, ctx: Context) -> Outcome:
  try:
    return criterion.run(ctx)
  except (CheckFailed, IntegrationError, RegimeError) as e:
    check = getattr(e, "check", type(e).__name__)
    logger.error(f"criterion {criterion.number} ({criterion.name}) raised {check}")
    logger.debug(str(e))
    return Outcome(False, getattr(e, "measured", math.nan), getattr(e, "bound", math.nan),
                   pd.DataFrame(), f"{check} raised")


def run_criteria(criteria: Sequence[Criterion], ctx: Context, out_dir: str,
                 write_summary: bool = True) -> pd.DataFrame:
  """Run criteria in order, write their tables, return the summary."""
  os.makedirs(out_dir, exist_ok=True)
  rows = []
  for criterion in criteria:
    started = time.perf_counter()
    outcome = _run_one(criterion, ctx)
    logger.info(f"criterion {criterion.number} {criterion.name}: "
                f"{'pass' if outcome.passed else 'FAIL'} in {time.perf_counter() - started:.1f}s")
    write_csv(outcome.frame, os.path.join(out_dir, criterion.file_name))
    rows.append({"criterion": criterion.number, "name": criterion.name, "passed": outcome.passed,
                 "measured": float(outcome.measured), "threshold": float(outcome.threshold),
                 "detail": outcome.detail})
  summary = pd.DataFrame(rows, columns=["criterion", "name", "passed", "measured", "threshold",
                                        "detail"])
  if write_summary:
    write_csv(summary, os.path.join(out_dir, SUMMARY_NAME))
  return summary


def select_criteria(numbers: Sequence[int]) -> List[Criterion]:
  if not numbers:
    return list(CRITERIA)
  wanted = set(numbers)
  return [c for c in CRITERIA if c.number in wanted]


def verify(config: GlobalConfig, command: str = "verify") -> int:
  """Run the configured suite; 0 when every selected criterion passes, else 1."""
  kernel = default_kernel()
  ctx = Context(kernel=kernel, seed=config.seed, tol=config.tol, threads=config.threads,
                fast=config.verify.suite == "fast", random_specs=config.verify.random_specs,
                weight_points=config.verify.weight_points)
  criteria = select_criteria(config.verify.criteria)
  with RecordWriter(config.out_dir, command, config.manifest_echo(), config.seed,
                    kernel.params()) as records:
    summary = run_criteria(criteria, ctx, config.out_dir)
    records.outputs.extend([c.file_name for c in criteria] + [SUMMARY_NAME])
  print_table(
      table_from_dict(summary.to_dict("records"), ["criterion", "name", "passed", "measured",
                                                   "threshold", "detail"],
                      title=f"verify --suite {config.verify.suite}"))
  return 0 if bool(summary["passed"].all()) else 1
