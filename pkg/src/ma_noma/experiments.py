"""Monte Carlo comparison of MA/FPA antennas under NOMA/OMA access.

A trial draws one channel pair and reuses it for every scheme and every grid
value (paired comparison). Per-trial seeds come from
``SeedSequence([master_seed, trial_index])``, so results do not depend on the
order in which trials run or on how many workers run them.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat

import numpy as np

from .alloc import (AllocProblem, InfeasibleError, SearchConfig, solve_noma,
                    solve_noma_fixed_p2, solve_oma)
from .channel import gain, sample_channel_pair
from .placement import ScaConfig, optimize_position

SCHEMES = ("ma_noma", "fpa_noma", "ma_oma", "fpa_oma")
SWEEPS = ("p2", "n", "t0")

# Grid and fixed operating point per sweep. The p2 grid is P2 / Pmax.
SWEEP_DEFAULTS = {
    "p2": {"grid": (0.59, 0.6, 0.61, 0.62, 0.64, 0.67, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95),
           "N": 100, "T0": 1.0},
    "n": {"grid": (20, 50, 100, 200, 500, 1000), "N": 100, "T0": 2.0},
    "t0": {"grid": (1.0, 2.0, 3.0, 4.0, 5.0, 6.0), "N": 200, "T0": 1.0},
}


@dataclass(frozen=True)
class ExperimentConfig:
    sweep: str = "t0"
    grid: tuple = SWEEP_DEFAULTS["t0"]["grid"]
    schemes: tuple = SCHEMES
    trials: int = 1000
    master_seed: int = 0
    d1: float = 20.0
    d2: float = 60.0
    alpha: float = 1.0
    num_paths: int = 4
    wavelength: float = 1.0
    region_side: float = 3.0
    pmax_db: float = 60.0
    noise1: float = 1.0
    noise2: float = 1.0
    N: int = 200
    T0: float = 1.0
    sca: ScaConfig = field(default_factory=ScaConfig)
    search: SearchConfig = field(default_factory=SearchConfig)

    def __post_init__(self):
        if self.sweep not in SWEEPS:
            raise ValueError(f"unknown sweep {self.sweep!r}; expected one of {SWEEPS}")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad or not self.schemes:
            raise ValueError(f"unknown schemes {bad}; expected a subset of {SCHEMES}")
        if self.sweep == "p2" and any(s.endswith("_oma") for s in self.schemes):
            raise ValueError("the P2 sweep is defined for NOMA schemes only")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        grid = tuple(self.grid)
        if not grid or list(grid) != sorted(grid):
            raise ValueError("grid must be non-empty and sorted ascending")
        if self.sweep == "p2" and not all(0.0 <= g <= 1.0 for g in grid):
            raise ValueError("P2 grid values are fractions of Pmax in [0, 1]")
        if self.sweep == "n" and not all(float(g).is_integer() and g >= 2 for g in grid):
            raise ValueError("blocklength grid values must be integers >= 2")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "schemes", tuple(self.schemes))

    @property
    def pmax(self) -> float:
        return 10.0 ** (self.pmax_db / 10.0)


def default_config(sweep: str, **overrides) -> ExperimentConfig:
    """Operating point of the named sweep, with keyword overrides."""
    base = SWEEP_DEFAULTS[sweep]
    params = {"sweep": sweep, "grid": base["grid"], "N": base["N"], "T0": base["T0"]}
    if sweep == "p2":
        params["schemes"] = ("ma_noma", "fpa_noma")
    params.update(overrides)
    return ExperimentConfig(**params)


@dataclass
class TrialOutcome:
    trial_index: int
    gains: dict
    T1: dict
    T2: dict


@dataclass(frozen=True)
class SweepResult:
    sweep_value: float
    scheme: str
    mean_t1: float
    stderr_t1: float
    mean_t2: float
    feasible_rate: float
    trials: int


def trial_seed(master_seed: int, trial_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master_seed), int(trial_index)])


def _problem(config: ExperimentConfig, g1: float, g2: float, value) -> AllocProblem:
    N, T0 = config.N, config.T0
    if config.sweep == "n":
        N = int(value)
    elif config.sweep == "t0":
        T0 = float(value)
    return AllocProblem(g1, g2, config.pmax, N, T0, config.noise1, config.noise2)


def _solve(config: ExperimentConfig, scheme: str, problem: AllocProblem, value):
    if config.sweep == "p2":
        return solve_noma_fixed_p2(problem, float(value) * problem.Pmax, config.search)
    if scheme.endswith("_noma"):
        return solve_noma(problem, config.search)
    return solve_oma(problem, config.search)


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialOutcome:
    """Run every scheme on every grid value for one channel draw.

    Infeasible grid points are recorded as NaN.
    """
    ch1, ch2 = sample_channel_pair(
        trial_seed(config.master_seed, trial_index), config.d1, config.d2,
        config.alpha, config.num_paths, config.wavelength, config.region_side,
        config.noise1, config.noise2)
    gains = {"fpa": (gain(ch1, (0.0, 0.0)), gain(ch2, (0.0, 0.0)))}
    if any(s.startswith("ma_") for s in config.schemes):
        gains["ma"] = (optimize_position(ch1, config.sca).gain,
                       optimize_position(ch2, config.sca).gain)

    t1, t2 = {}, {}
    for scheme in config.schemes:
        g1, g2 = gains[scheme.split("_")[0]]
        r1 = np.full(len(config.grid), np.nan)
        r2 = np.full(len(config.grid), np.nan)
        for k, value in enumerate(config.grid):
            try:
                sol = _solve(config, scheme, _problem(config, g1, g2, value), value)
            except InfeasibleError:
                continue
            r1[k], r2[k] = sol.T1, sol.T2
        t1[scheme], t2[scheme] = r1, r2
    return TrialOutcome(trial_index, gains, t1, t2)


def run_trials(config: ExperimentConfig, workers: int = 1) -> list[TrialOutcome]:
    """All trials, returned in trial-index order."""
    indices = range(config.trials)
    if workers <= 1:
        return [run_trial(config, i) for i in indices]
    chunk = max(1, config.trials // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_trial, repeat(config), indices, chunksize=chunk))


def aggregate(config: ExperimentConfig, outcomes: list[TrialOutcome]) -> list[SweepResult]:
    """Mean over feasible trials, one row per (grid value, scheme)."""
    outcomes = sorted(outcomes, key=lambda o: o.trial_index)
    results = []
    for k, value in enumerate(config.grid):
        for scheme in config.schemes:
            t1 = np.array([o.T1[scheme][k] for o in outcomes])
            t2 = np.array([o.T2[scheme][k] for o in outcomes])
            ok = ~np.isnan(t1)
            n_ok = int(ok.sum())
            mean1 = float(np.mean(t1[ok])) if n_ok else math.nan
            mean2 = float(np.mean(t2[ok])) if n_ok else math.nan
            se = float(np.std(t1[ok], ddof=1) / math.sqrt(n_ok)) if n_ok > 1 else math.nan
            results.append(SweepResult(value, scheme, mean1, se, mean2,
                                       n_ok / len(outcomes), len(outcomes)))
    return results


def run_sweep(config: ExperimentConfig, workers: int = 1) -> list[SweepResult]:
    return aggregate(config, run_trials(config, workers))


