"""Command-line front end.

Subcommands: ``solve`` (one instance end to end), ``sweep-p2``,
``sweep-n``, ``sweep-t0`` (Monte Carlo sweeps, CSV out) and ``selftest``.

Settings resolve as: command-line flag, then config file, then the sweep's
defaults. A config file is flat ``key = value`` text; ``#`` starts a comment.
Keys are the long flag names with dashes or underscores, e.g.::

    # sweep settings
    trials = 200
    seed = 7
    schemes = ma_noma, fpa_noma
    grid = 1, 2, 3
    pmax-db = 60

Exit status: 0 success, 1 infeasible target, 2 usage error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import io
import os
import sys
from dataclasses import replace

from .alloc import (AllocProblem, InfeasibleError, SearchConfig, solve_noma,
                    solve_noma_fixed_p2, solve_oma)
from .channel import ChannelSamplingError, gain, sample_channel_pair
from .experiments import (SCHEMES, ExperimentConfig, default_config, run_sweep,
                          trial_seed)
from .placement import ScaConfig, optimize_position

CSV_HEADER = "sweep_value,scheme,mean_t1,stderr_t1,mean_t2,feasible_rate,trials"

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _float_list(text):
    return tuple(float(v) for v in str(text).replace(";", ",").split(",") if v.strip())


def _str_list(text):
    return tuple(v.strip() for v in str(text).split(",") if v.strip())


# key -> (ExperimentConfig field, converter, help)
SETTINGS = {
    "trials": ("trials", int, "Monte Carlo trials"),
    "seed": ("master_seed", int, "master seed; all randomness derives from it"),
    "schemes": ("schemes", _str_list, f"comma list from {','.join(SCHEMES)}"),
    "grid": ("grid", _float_list, "comma list of sweep values (P2/Pmax for sweep-p2)"),
    "d1": ("d1", float, "core-user distance [m]"),
    "d2": ("d2", float, "edge-user distance [m]"),
    "alpha": ("alpha", float, "path-loss exponent"),
    "paths": ("num_paths", int, "receive paths per user"),
    "wavelength": ("wavelength", float, "carrier wavelength"),
    "region_side": ("region_side", float, "side A of the square movable region"),
    "pmax_db": ("pmax_db", float, "Pmax over unit noise power [dB]"),
    "noise1": ("noise1", float, "core-user noise power"),
    "noise2": ("noise2", float, "edge-user noise power"),
    "n": ("N", int, "blocklength"),
    "t0": ("T0", float, "edge-user throughput target [bit/channel use]"),
}
RUNTIME_KEYS = {"workers": int, "out": str, "plot": lambda v: str(v).lower() in ("1", "true", "yes", "on")}


def read_config_file(path) -> dict:
    """Parse a flat key-value file into ``{key: raw string}``."""
    values = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    with fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_").lower()
            if key not in SETTINGS and key not in RUNTIME_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


def _convert(key, value):
    conv = SETTINGS[key][1] if key in SETTINGS else RUNTIME_KEYS[key]
    try:
        return conv(value)
    except (TypeError, ValueError):
        raise UsageError(f"bad value for {key!r}: {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ma-noma",
        description="Movable-antenna NOMA short-packet optimization and simulation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value settings file")
        for key, (_, _, help_text) in SETTINGS.items():
            p.add_argument("--" + key.replace("_", "-"), dest=key, default=None, help=help_text)

    solve = sub.add_parser("solve", help="optimize one channel draw end to end")
    common(solve)
    solve.add_argument("--fpa", action="store_true", help="keep antennas at the origin")
    solve.add_argument("--oma", action="store_true", help="TDMA baseline instead of NOMA")
    solve.add_argument("--p2", type=float, default=None,
                       help="fix P2 as a fraction of Pmax (NOMA only)")

    for kind in ("p2", "n", "t0"):
        p = sub.add_parser(f"sweep-{kind}", help=f"Monte Carlo sweep over {kind.upper()}")
        common(p)
        p.add_argument("--workers", dest="workers", default=None, help="parallel processes")
        p.add_argument("--out", dest="out", default=None,
                       help="output directory (CSV goes to stdout if omitted)")
        p.add_argument("--plot", dest="plot", action="store_const", const="true",
                       default=None, help="also write an SVG chart")

    st = sub.add_parser("selftest", help="run the built-in invariant checks")
    st.add_argument("--seed", type=int, default=0)
    return parser


def resolve(sweep: str, args) -> tuple[ExperimentConfig, dict]:
    """Merge defaults, config file and flags into a config plus runtime options."""
    raw = read_config_file(args.config) if getattr(args, "config", None) else {}
    for key, value in raw.items():
        _convert(key, value)   # a bad file value is an error even if a flag overrides it
    for key in list(SETTINGS) + list(RUNTIME_KEYS):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    params, runtime = {}, {"workers": 1, "out": None, "plot": False}
    for key, value in raw.items():
        converted = _convert(key, value)
        if key in SETTINGS:
            params[SETTINGS[key][0]] = converted
        else:
            runtime[key] = converted
    try:
        config = default_config(sweep, **params)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    return config, runtime


def format_csv(results) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in results:
        buf.write(",".join([_num(r.sweep_value), r.scheme, _num(r.mean_t1),
                            _num(r.stderr_t1), _num(r.mean_t2), _num(r.feasible_rate),
                            str(r.trials)]) + "\n")
    return buf.getvalue()


def _num(x) -> str:
    return format(float(x), ".10g")


def write_plot(results, sweep: str, path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    labels = {"p2": "P2 / Pmax", "n": "blocklength N", "t0": "T0 [bit/channel use]"}
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for scheme in dict.fromkeys(r.scheme for r in results):
        rows = [r for r in results if r.scheme == scheme]
        ax.errorbar([r.sweep_value for r in rows], [r.mean_t1 for r in rows],
                    yerr=[r.stderr_t1 for r in rows], marker="o", ms=3, capsize=2,
                    label=scheme.replace("_", "-").upper())
    ax.set_xlabel(labels[sweep])
    ax.set_ylabel("mean T1 [bit/channel use]")
    if sweep == "n":
        ax.set_xscale("log")
    ax.grid(alpha=0.3, ls="--")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_sweep(sweep: str, args, stdout) -> int:
    config, runtime = resolve(sweep, args)
    results = run_sweep(config, workers=runtime["workers"])
    text = format_csv(results)
    out = runtime["out"]
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, f"sweep-{sweep}.csv"), "w", encoding="utf-8",
                  newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    if runtime["plot"]:
        write_plot(results, sweep, os.path.join(out or ".", f"sweep-{sweep}.svg"))
    return EXIT_OK


def cmd_solve(args, stdout) -> int:
    config, _ = resolve("t0", args)
    config = replace(config, grid=(config.T0,))
    ch1, ch2 = sample_channel_pair(
        trial_seed(config.master_seed, 0), config.d1, config.d2, config.alpha,
        config.num_paths, config.wavelength, config.region_side,
        config.noise1, config.noise2)

    out = stdout.write
    g_fpa = (gain(ch1, (0.0, 0.0)), gain(ch2, (0.0, 0.0)))
    if args.fpa:
        gains = g_fpa
        out("placement: fixed at origin\n")
    else:
        sca = ScaConfig()
        gains = []
        for name, ch in (("user1", ch1), ("user2", ch2)):
            res = optimize_position(ch, sca)
            d = res.diagnostics
            out(f"placement {name}: position=({res.position.x:.6f}, {res.position.y:.6f}) "
                f"gain={res.gain:.6e} origin_gain={d['initial_gain']:.6e} "
                f"bound={ch.gain_upper_bound:.6e} iterations={d['iterations']} "
                f"converged={d['converged']}\n")
            gains.append(res.gain)
    problem = AllocProblem(gains[0], gains[1], config.pmax, config.N, config.T0,
                           config.noise1, config.noise2)
    search = SearchConfig()
    if args.oma:
        sol = solve_oma(problem, search)
    elif args.p2 is not None:
        sol = solve_noma_fixed_p2(problem, args.p2 * config.pmax, search)
    else:
        sol = solve_noma(problem, search)

    out(f"problem: gain1={problem.gain1:.6e} gain2={problem.gain2:.6e} "
        f"Pmax={problem.Pmax:.6g} N={problem.N} T0={problem.T0:.6g}\n")
    a = sol.allocation
    out("allocation: " + " ".join(f"{k}={v:.10g}" if isinstance(v, float) else f"{k}={v}"
                                  for k, v in vars(a).items()) + "\n")
    out(f"T1={sol.T1:.10g}\nT2={sol.T2:.10g}\n")
    if not args.oma:
        out(f"P2_lower={sol.p2_lower:.10g}\n")
    state = "active" if problem.T0 > 0 else "inactive"
    out(f"T2 constraint: {state}\n")
    for key in ("sic_branch", "R1_dagger", "R1_ddagger", "golden_evaluations",
                "feasible_splits"):
        if key in sol.diagnostics:
            out(f"{key}={sol.diagnostics[key]}\n")
    return EXIT_OK


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if args.command == "selftest":
            from .selftest import run_selftest
            return run_selftest(seed=args.seed, stream=stdout)
        if args.command == "solve":
            return cmd_solve(args, stdout)
        return cmd_sweep(args.command.split("-", 1)[1], args, stdout)
    except UsageError as exc:
        stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except InfeasibleError as exc:
        stderr.write(f"infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    except (ChannelSamplingError, FloatingPointError, ArithmeticError) as exc:
        stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
