"""Scenario-driven command line front door.

Parses flat key=value experiment configs, schedules replicas over a process
pool, and emits one CSV of raw samples plus one JSON report.  Replica seeds
are derived from (root seed, scenario, n, replica), so reports are
deterministic for a fixed seed regardless of worker count.

Exit codes: 0 pass, 1 test failure, 2 usage/config error, 3 runtime
(window/field) error.
"""

import argparse
import ast
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from hamlab.increasing_seq import FieldExhaustedError
from hamlab.hammersley import (
    WindowSpec,
    WindowTooSmallError,
    default_window,
    evolve_variational_streamed,
    init_local_equilibrium,
    init_step_bdj,
    required_region,
)
from hamlab.macro_solver import InitialProfile, MacroSolution
from hamlab.poisson_field import Region
from hamlab.stats import SampleSummary
from hamlab.streams import derive_seed

SCENARIOS = ("equilibrium", "shock", "rarefaction", "bdj_step", "tagged", "custom")
_SCEN_CODE = {name: i for i, name in enumerate(SCENARIOS)}

_PRESETS = {
    "equilibrium": dict(
        breakpoints=[], densities=[1.0],
        grid=[(0.0, 1.0), (0.5, 1.0), (1.0, 1.0)],
        n_list=[500], replicas=200, t_horizon=1.0,
    ),
    "shock": dict(
        breakpoints=[0.0], densities=[1.0, 0.0],
        grid=[(-0.5, 1.0), (0.0, 1.0), (0.5, 1.0), (1.0, 1.0), (1.5, 1.0)],
        n_list=[2000], replicas=2000, t_horizon=1.0,
    ),
    "rarefaction": dict(
        breakpoints=[0.0], densities=[0.0, 1.0],
        grid=[(0.2, 1.0), (0.4, 1.0), (0.6, 1.0), (0.8, 1.0), (1.0, 1.0)],
        n_list=[500, 2000, 8000], replicas=200, t_horizon=1.0,
    ),
    "bdj_step": dict(
        breakpoints=[], densities=[0.0],  # placeholder; step data is built in
        grid=[(1.0, 1.0)],
        n_list=[250, 500, 1000, 2000, 4000, 8000], replicas=300, t_horizon=1.0,
    ),
    "tagged": dict(
        breakpoints=[0.0], densities=[1.0, 0.0],
        grid=[(1.0, 0.25), (1.0, 0.5), (1.0, 0.75), (1.0, 1.0), (1.0, 1.25)],
        n_list=[500], replicas=200, t_horizon=1.25,
    ),
    "custom": dict(
        breakpoints=[], densities=[1.0],
        grid=[(0.0, 1.0)], n_list=[500], replicas=100, t_horizon=1.0,
    ),
}


@dataclass
class ScenarioConfig:
    scenario: str = "custom"
    breakpoints: list = field(default_factory=list)
    densities: list = field(default_factory=lambda: [1.0])
    n_list: list = field(default_factory=lambda: [500])
    replicas: int = 100
    grid: list = field(default_factory=lambda: [(0.0, 1.0)])
    t_horizon: float = 1.0
    seed: int = 20240915
    workers: int = 0  # 0 -> os.cpu_count()
    output_path: str = "hamlab_out"
    margin: float = 0.5
    guard_frac: float = 0.5

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; one of {SCENARIOS}")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if not self.n_list:
            raise ValueError("n_list must be nonempty")
        if not self.grid:
            raise ValueError("grid must be nonempty")
        self.grid = [(float(x), float(t)) for (x, t) in self.grid]
        if any(t < 0 for _, t in self.grid):
            raise ValueError("grid times must be >= 0")
        if any(t > self.t_horizon for _, t in self.grid):
            raise ValueError("grid escapes t_horizon")

    @staticmethod
    def preset(scenario: str, **overrides) -> "ScenarioConfig":
        base = dict(_PRESETS[scenario])
        base.update(overrides)
        return ScenarioConfig(scenario=scenario, **base)


@dataclass
class RunReport:
    config: dict
    summaries: dict          # "n=...,x=...,t=..." -> SampleSummary dict
    verdicts: list           # (name, statistic, threshold, passed, retried)
    seeds: dict
    timing_s: float
    retries: int
    csv_path: str = ""
    json_path: str = ""

    @property
    def all_passed(self) -> bool:
        return all(v["passed"] for v in self.verdicts)


# -- config file parsing --------------------------------------------------------


def parse_config_text(text: str) -> dict:
    """Flat `key = value` lines; values are Python literals or bare strings."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        try:
            out[key] = ast.literal_eval(val)
        except (ValueError, SyntaxError):
            out[key] = val
    return out


def load_config(path: str) -> ScenarioConfig:
    with open(path) as fh:
        raw = parse_config_text(fh.read())
    scenario = raw.pop("scenario", "custom")
    known = {f.name for f in ScenarioConfig.__dataclass_fields__.values()}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if scenario != "custom":
        return ScenarioConfig.preset(scenario, **raw)
    return ScenarioConfig(scenario=scenario, **raw)


# -- per-replica work (top level so it pickles) ----------------------------------

_SOL_CACHE = {}


def _solution_for(breakpoints, densities):
    key = (tuple(breakpoints), tuple(densities))
    if key not in _SOL_CACHE:
        prof = InitialProfile(list(breakpoints), list(densities))
        _SOL_CACHE[key] = (prof, MacroSolution(prof))
    return _SOL_CACHE[key]


def replica_task(args):
    """One replica: build initial state + field, evolve, read the grid.

    Returns (n, replica, values, argmins_over_n, attempts_used).
    Window/field enlargement on guard or coverage errors is retried with a
    fresh derived seed and recorded.
    """
    (scenario, n, rep, root_seed, breakpoints, densities, grid, margin, guard_frac) = args
    code = _SCEN_CODE[scenario]
    t_max = max(t for _, t in grid)
    times = sorted({t for _, t in grid if t > 0})
    for attempt in range(4):
        mar = margin * (1.6 ** attempt)
        seed_init = derive_seed(root_seed, code, n, rep, 2 * attempt)
        seed_field = derive_seed(root_seed, code, n, rep, 2 * attempt + 1)
        try:
            if scenario == "bdj_step":
                guard = max(2, int(guard_frac * mar * n))
                i_max = max(math.floor(n * x) for x, _ in grid) + 1
                win = WindowSpec(n=n, i_min=-guard - 2, i_max=i_max, guard=guard)
                st0 = init_step_bdj(win)
                u = lambda x, t: x * x / (4.0 * t)
                sol = None
            else:
                prof, sol = _solution_for(breakpoints, densities)
                win = default_window(sol, n, grid, margin=mar, guard_frac=guard_frac)
                st0 = init_local_equilibrium(prof, win, seed=seed_init)
                u = lambda x, t: sol.u_value(x, t)
            u_max = max(n * u(x, t) for x, t in grid)
            reg = required_region(st0, u_max, t_max, pad_mult=2.0 ** attempt)
            check = sorted({math.floor(n * x) for x, t in grid if t > 0})
            states = evolve_variational_streamed(
                st0, seed_field, reg, 1.0, times, check_labels=check
            )
            values, argm = [], []
            for x, t in grid:
                label = math.floor(n * x)
                st = st0 if t == 0.0 else states[t]
                z = st.z(label)
                values.append((z - n * u(x, t)) / math.sqrt(n))
                if st.argmins is not None:
                    argm.append(st.argmin_of(label) / n)
                else:
                    argm.append(label / n)
            return n, rep, values, argm, attempt + 1
        except (WindowTooSmallError, FieldExhaustedError):
            if attempt == 3:
                raise
    raise AssertionError("unreachable")


def run(config: ScenarioConfig) -> RunReport:
    """Execute the scenario and write CSV + JSON under config.output_path."""
    t_start = time.time()
    tasks = [
        (
            config.scenario, n, rep, config.seed,
            tuple(config.breakpoints), tuple(config.densities),
            tuple(config.grid), config.margin, config.guard_frac,
        )
        for n in config.n_list
        for rep in range(config.replicas)
    ]
    workers = config.workers or os.cpu_count() or 1
    results = {}
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for n, rep, values, argm, attempts in pool.map(
                replica_task, tasks, chunksize=max(1, len(tasks) // (workers * 8))
            ):
                results[(n, rep)] = (values, argm, attempts)
    else:
        for task in tasks:
            n, rep, values, argm, attempts = replica_task(task)
            results[(n, rep)] = (values, argm, attempts)

    os.makedirs(config.output_path, exist_ok=True)
    csv_path = os.path.join(config.output_path, f"{config.scenario}_samples.csv")
    with open(csv_path, "w") as fh:
        fh.write("scenario,n,replica,x,t,zeta_n,argmin_over_n\n")
        for n in config.n_list:
            for rep in range(config.replicas):
                values, argm, _ = results[(n, rep)]
                for (x, t), v, a in zip(config.grid, values, argm):
                    fh.write(
                        f"{config.scenario},{n},{rep},{x:.12g},{t:.12g},{v:.12g},{a:.12g}\n"
                    )

    summaries = {}
    for n in config.n_list:
        for gi, (x, t) in enumerate(config.grid):
            xs = [results[(n, rep)][0][gi] for rep in range(config.replicas)]
            summaries[f"n={n},x={x:g},t={t:g}"] = asdict(SampleSummary.from_sample(xs))
    retries = sum(r[2] - 1 for r in results.values())
    report = RunReport(
        config={k: v for k, v in asdict(config).items()},
        summaries=summaries,
        verdicts=[],
        seeds={"root": config.seed},
        timing_s=time.time() - t_start,
        retries=retries,
        csv_path=csv_path,
    )
    json_path = os.path.join(config.output_path, f"{config.scenario}_report.json")
    body = {k: v for k, v in asdict(report).items() if k != "timing_s"}
    with open(json_path, "w") as fh:
        json.dump({**body, "timing_s": report.timing_s}, fh, indent=1, default=float)
    report.json_path = json_path
    return report


def samples_by_point(report_or_csv, grid=None):
    """Load raw samples back as {(n, x, t): np.array} from a run's CSV."""
    path = report_or_csv.csv_path if hasattr(report_or_csv, "csv_path") else report_or_csv
    data = {}
    with open(path) as fh:
        next(fh)
        for line in fh:
            _, n, _rep, x, t, v, _a = line.rstrip("\n").split(",")
            data.setdefault((int(n), float(x), float(t)), []).append(float(v))
    return {k: np.asarray(v) for k, v in data.items()}


def verify(bundle: str, out_dir: str = "hamlab_out", seed: int = None, workers: int = 0) -> int:
    """Run a built-in acceptance bundle; print a verdict table; 0 iff all pass."""
    from hamlab import acceptance

    if bundle not in acceptance.BUNDLES:
        print(f"unknown bundle {bundle!r}; available: {sorted(acceptance.BUNDLES)}", file=sys.stderr)
        return 2
    try:
        records = acceptance.BUNDLES[bundle](
            seed=seed if seed is not None else _root_seed(None), workers=workers or (os.cpu_count() or 1), out_dir=out_dir
        )
    except (WindowTooSmallError, FieldExhaustedError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    print(f"{'criterion':<44} {'statistic':>12} {'threshold':>12} {'verdict':>8} {'retried':>8}")
    ok = True
    for rec in records:
        ok &= rec["passed"]
        print(
            f"{rec['name']:<44} {rec['statistic']:>12.5g} {rec['threshold']:>12.5g} "
            f"{'PASS' if rec['passed'] else 'FAIL':>8} {('yes' if rec.get('retried') else 'no'):>8}"
        )
    return 0 if ok else 1


def _root_seed(cli_seed):
    if cli_seed is not None:
        return int(cli_seed)
    env = os.environ.get("HAMLAB_SEED")
    return int(env) if env else 20240915


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="hamlab",
        description="Hammersley-process simulation and verification lab",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run a scenario from a config file or preset")
    runp.add_argument("--config", help="path to a key=value config file")
    runp.add_argument("--scenario", choices=SCENARIOS, help="preset scenario (no config file)")
    runp.add_argument("--seed", type=int, default=None)
    runp.add_argument("--workers", type=int, default=None)
    runp.add_argument("--replicas", type=int, default=None)
    runp.add_argument("--out", default=None, help="output directory")
    verp = sub.add_parser("verify", help="run a built-in acceptance bundle")
    verp.add_argument("bundle")
    verp.add_argument("--seed", type=int, default=None)
    verp.add_argument("--workers", type=int, default=0)
    verp.add_argument("--out", default="hamlab_out")
    args = ap.parse_args(argv)

    if args.command == "verify":
        return verify(args.bundle, out_dir=args.out, seed=args.seed, workers=args.workers)

    try:
        if args.config:
            config = load_config(args.config)
        elif args.scenario:
            config = ScenarioConfig.preset(args.scenario)
        else:
            print("need --config or --scenario", file=sys.stderr)
            return 2
        if args.seed is not None:
            config.seed = args.seed
        elif os.environ.get("HAMLAB_SEED"):
            config.seed = int(os.environ["HAMLAB_SEED"])
        if args.workers is not None:
            config.workers = args.workers
        if args.replicas is not None:
            config.replicas = args.replicas
        if args.out is not None:
            config.output_path = args.out
        config = ScenarioConfig(**{**asdict(config)})  # re-validate
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        report = run(config)
    except (WindowTooSmallError, FieldExhaustedError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {report.csv_path} and {report.json_path} in {report.timing_s:.1f}s "
          f"({report.retries} retries)")
    return 1 if (report.verdicts and not report.all_passed) else 0


if __name__ == "__main__":
    sys.exit(main())
