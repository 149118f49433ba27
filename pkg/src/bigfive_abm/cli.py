"""Command-line entry point: ``bigfive-abm simulate|sweep|evolve|compare``.

Settings come from an optional ``key = value`` config file, overridden by
flags. Every command writes ``manifest.json`` next to its outputs with the
fully resolved settings and every derived seed.

Exit codes: 0 success, 1 invalid spec or input, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import ga, io, stats, sweep
from .core import TRAIT_CODES, NoiseModel, TraitVector
from .engine import SimConfig, replicate_seed, run_simulation, write_trajectories
from .seeding import derive_seed

log = logging.getLogger("bigfive_abm")

COMMANDS = ("simulate", "sweep", "evolve", "compare")


class SpecError(Exception):
    """Invalid configuration or malformed input (exit code 1)."""


class OutputError(Exception):
    """Output could not be written (exit code 2)."""


# key -> parser; keys double as long flag names with '_' -> '-'
def _floats(s):
    return tuple(float(v) for v in str(s).replace(" ", "").split(",") if v)


def _team(s):
    agents = [a for a in str(s).replace(" ", "").split(";") if a]
    return tuple(TraitVector.from_sequence(_floats(a)) for a in agents)


CONFIG_KEYS = {
    "seed": int,
    "out": str,
    "replicates": int,
    "noise": float,
    "jobs": int,
    "t_max": int,
    # simulate
    "team": _team,
    "team_size": int,
    "traits": _floats,
    # sweep
    "runs_per_cell": int,
    "grid_step": float,
    "noise_levels": _floats,
    "sweep_traits": lambda s: tuple(c for c in str(s).replace(" ", "").split(",") if c),
    # evolve
    "mode": str,
    "population": str,
    "n_pop": int,
    "n_parents": int,
    "n_gen": int,
    "fitness_reps": int,
    # compare
    "a": str,
    "b": str,
}

DEFAULTS = {
    "seed": None,
    "out": "out",
    "replicates": 1,
    "noise": 0.0,
    "jobs": None,
    "t_max": 100,
    "team": None,
    "team_size": 6,
    "traits": (0.5, 0.5, 0.5, 0.5, 0.5),
    "runs_per_cell": 100,
    "grid_step": 0.1,
    "noise_levels": sweep.DEFAULT_NOISE,
    "sweep_traits": TRAIT_CODES,
    "mode": "best",
    "population": "general",
    "n_pop": None,
    "n_parents": None,
    "n_gen": 100,
    "fitness_reps": 100,
    "a": None,
    "b": None,
}


def parse_config_file(path) -> dict:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise SpecError(f"cannot read config file {path}: {e}") from e
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"{path}:{lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise SpecError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _convert(key, value, f"{path}:{lineno}")
    return out


def _convert(key, value, where):
    try:
        return CONFIG_KEYS[key](value)
    except (TypeError, ValueError) as e:
        raise SpecError(f"{where}: bad value for {key}: {e}") from e


@dataclass
class ExperimentSpec:
    command: str
    settings: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.settings[name]
        except KeyError:
            raise AttributeError(name) from None

    @property
    def out_dir(self) -> Path:
        return Path(self.settings["out"])


def resolve_spec(command: str, args: argparse.Namespace) -> ExperimentSpec:
    settings = dict(DEFAULTS)
    if args.config:
        settings.update(parse_config_file(args.config))
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = _convert(key, val, f"--{key.replace('_', '-')}")
    if settings["seed"] is None:
        raise SpecError("a master seed is required (--seed or 'seed =' in the config)")
    if not (0 <= settings["seed"] < 2**64):
        raise SpecError("seed must be an unsigned 64-bit integer")
    if settings["jobs"] is None:
        settings["jobs"] = os.cpu_count() or 1
    if settings["jobs"] < 1 or settings["replicates"] < 1:
        raise SpecError("--jobs and --replicates must be >= 1")
    return ExperimentSpec(command, settings)


@contextmanager
def _pool(jobs: int):
    if jobs <= 1:
        yield None
        return
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        yield ex


def _prepare_out(spec: ExperimentSpec) -> Path:
    out = spec.out_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"cannot create output directory {out}: {e}") from e
    return out


def _manifest(spec: ExperimentSpec, extra: dict) -> dict:
    settings = {}
    for k, v in spec.settings.items():
        if k in ("jobs", "out"):
            continue  # neither affects results; keeps outputs byte-identical across runs
        if isinstance(v, tuple) and v and isinstance(v[0], TraitVector):
            v = [list(tv.as_array()) for tv in v]
        elif isinstance(v, tuple):
            v = list(v)
        settings[k] = v
    return {"command": spec.command, "settings": settings, **extra}


def _sim_job(cfg: SimConfig):
    return run_simulation(cfg)


def cmd_simulate(spec: ExperimentSpec) -> Path:
    if spec.team is not None:
        team = spec.team
    else:
        if spec.team_size < 2:
            raise SpecError("team_size must be >= 2")
        team = (TraitVector.from_sequence(spec.traits),) * spec.team_size
    seeds = [derive_seed(spec.seed, "simulate", r) for r in range(spec.replicates)]
    try:
        configs = [SimConfig(team, noise=NoiseModel(spec.noise), t_max=spec.t_max, seed=s) for s in seeds]
    except ValueError as e:
        raise SpecError(str(e)) from e
    out = _prepare_out(spec)
    with _pool(spec.jobs) as ex:
        results = list((ex.map if ex else map)(_sim_job, configs))
    objective = configs[0].objective
    values = [r.group_best_value for r in results]
    try:
        write_trajectories(out / "trajectories.csv", list(enumerate(results)), objective)
        io.write_json(out / "summary.json", {
            "group_best": values,
            "group_best_position": [list(r.group_best_position) for r in results],
            "mean_over_replicates": float(np.mean(values)),
        })
        io.write_json(out / "manifest.json", _manifest(spec, {"replicate_seeds": seeds}))
    except OSError as e:
        raise OutputError(f"cannot write to {out}: {e}") from e
    return out


def cmd_sweep(spec: ExperimentSpec) -> Path:
    n_steps = round(1.0 / spec.grid_step)
    if n_steps < 1 or abs(n_steps * spec.grid_step - 1.0) > 1e-9:
        raise SpecError("grid_step must divide 1.0 evenly")
    grid = tuple(round(i / n_steps, 10) for i in range(n_steps + 1))
    seed = derive_seed(spec.seed, "sweep")
    try:
        cfgs = {c: sweep.SweepConfig(c, grid=grid, runs_per_cell=spec.runs_per_cell,
                                     team_size=spec.team_size, noise_levels=spec.noise_levels,
                                     t_max=spec.t_max, seed=seed)
                for c in spec.sweep_traits}
    except ValueError as e:
        raise SpecError(str(e)) from e
    out = _prepare_out(spec)
    with _pool(spec.jobs) as ex:
        tables = {c: sweep.run_sweep(cfg, ex) for c, cfg in cfgs.items()}
    cells = [cell for c in cfgs for cell in tables[c]]
    try:
        io.write_csv(out / "sweep.csv", sweep.SWEEP_COLUMNS, sweep.sweep_rows(cells))
        if set(tables) == set(TRAIT_CODES):
            io.write_json(out / "trends.json", sweep.check_trends(tables))
        io.write_json(out / "manifest.json", _manifest(spec, {"sweep_seed": seed}))
    except OSError as e:
        raise OutputError(f"cannot write to {out}: {e}") from e
    return out


def _ga_config(spec: ExperimentSpec, seed: int) -> ga.GAConfig:
    if spec.population == "general":
        lo, hi, n_pop, n_par = ga.GENERAL_TRAIT_MIN, ga.GENERAL_TRAIT_MAX, 30, 5
    elif spec.population == "sample":
        lo, hi, n_pop, n_par = ga.SAMPLE_TRAIT_MIN, ga.SAMPLE_TRAIT_MAX, 50, 20
    else:
        raise SpecError(f"--population must be general or sample, got {spec.population!r}")
    try:
        return ga.GAConfig(
            mode=spec.mode,
            n_pop=spec.n_pop or n_pop,
            n_parents=spec.n_parents or n_par,
            n_gen=spec.n_gen,
            fitness_reps=spec.fitness_reps,
            trait_min=lo,
            trait_max=hi,
            noise=NoiseModel(spec.noise),
            t_max=spec.t_max,
            seed=seed,
        )
    except ValueError as e:
        raise SpecError(str(e)) from e


EVOLVED_COLUMNS = ("run_id", "fitness") + TRAIT_CODES
AGGREGATE_COLUMNS = ("trait", "n", "mean", "sd")


def cmd_evolve(spec: ExperimentSpec) -> Path:
    seeds = [derive_seed(spec.seed, "evolve", r) for r in range(spec.replicates)]
    cfgs = [_ga_config(spec, s) for s in seeds]
    out = _prepare_out(spec)
    with _pool(spec.jobs) as ex:
        if ex is not None and len(cfgs) > 1:
            results = list(ex.map(ga.evolve, cfgs))
        else:
            results = [ga.evolve(cfg, ex) for cfg in cfgs]
    teams = [ga.team_mean_traits(res.best_genotype).as_array() for res in results]
    try:
        for r, res in enumerate(results):
            io.write_csv(out / f"ga_trace_run{r:03d}.csv", ga.GA_TRACE_COLUMNS, ga.trace_rows(r, res))
            io.write_csv(out / f"ga_generations_run{r:03d}.csv", ga.GA_GENERATION_COLUMNS,
                         ga.generation_rows(r, res))
            io.write_json(out / f"best_run{r:03d}.json", {
                "mode": cfgs[r].mode,
                "noise": cfgs[r].noise.eta,
                "genes": list(res.best_genotype.genes),
                "fitness": res.best_fitness,
            })
        io.write_csv(out / "evolved_teams.csv", EVOLVED_COLUMNS,
                     ((r, res.best_fitness, *teams[r]) for r, res in enumerate(results)))
        arr = np.array(teams)
        agg = []
        for k, code in enumerate(TRAIT_CODES):
            s = stats.summarize(arr[:, k])
            agg.append((code, s.n, s.mean, s.sd))
        io.write_csv(out / "aggregate.csv", AGGREGATE_COLUMNS, agg)
        io.write_json(out / "manifest.json", _manifest(spec, {"ga_run_seeds": seeds}))
    except OSError as e:
        raise OutputError(f"cannot write to {out}: {e}") from e
    return out


def read_groups(path) -> dict[str, dict[str, list[float]]]:
    """Load per-run trait values, keyed ``{group: {trait: values}}``.

    Accepts an ``evolved_teams.csv`` style wide file (columns N, E, O, A, C;
    one group named after the file) or a long file with columns
    ``group, trait, value``.
    """
    try:
        fh = open(path, newline="")
    except OSError as e:
        raise OutputError(f"cannot read {path}: {e}") from e
    groups: dict[str, dict[str, list[float]]] = {}
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SpecError(f"{path}:1: empty CSV")
        header = [h.strip() for h in header]
        if {"group", "trait", "value"} <= set(header):
            gi, ti, vi = header.index("group"), header.index("trait"), header.index("value")
            for lineno, row in enumerate(reader, 2):
                if len(row) != len(header):
                    raise SpecError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
                trait = row[ti].strip()
                if trait not in TRAIT_CODES:
                    raise SpecError(f"{path}:{lineno}: unknown trait {trait!r}")
                groups.setdefault(row[gi].strip(), {}).setdefault(trait, []).append(
                    _parse_float(row[vi], path, lineno))
        elif set(TRAIT_CODES) <= set(header):
            idx = {c: header.index(c) for c in TRAIT_CODES}
            g = groups.setdefault(Path(path).stem, {c: [] for c in TRAIT_CODES})
            for lineno, row in enumerate(reader, 2):
                if len(row) != len(header):
                    raise SpecError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
                for c, i in idx.items():
                    g[c].append(_parse_float(row[i], path, lineno))
        else:
            raise SpecError(f"{path}:1: need columns N,E,O,A,C or group,trait,value")
    return groups


def _parse_float(text, path, lineno):
    try:
        return float(text)
    except ValueError:
        raise SpecError(f"{path}:{lineno}: not a number: {text!r}") from None


def cmd_compare(spec: ExperimentSpec) -> Path:
    if spec.a is None:
        raise SpecError("compare needs --a (and --b unless --a holds two groups)")
    groups = read_groups(spec.a)
    if spec.b is not None:
        gb = read_groups(spec.b)
        if len(groups) != 1 or len(gb) != 1:
            raise SpecError("with --a and --b each file must hold exactly one group")
        first, second = next(iter(groups.values())), next(iter(gb.values()))
    else:
        if len(groups) != 2:
            raise SpecError(f"{spec.a}: expected exactly 2 groups, found {len(groups)}")
        first, second = (groups[k] for k in sorted(groups))
    table = {}
    for code in TRAIT_CODES:
        if code not in first or code not in second:
            raise SpecError(f"trait {code} missing from an input group")
        try:
            table[code] = {v: stats.t_test(first[code], second[code], v) for v in ("pooled", "welch")}
        except ValueError as e:
            raise SpecError(f"trait {code}: {e}") from e
    out = _prepare_out(spec)
    try:
        io.write_csv(out / "ttest.csv", stats.COMPARE_COLUMNS, stats.comparison_rows(table))
        io.write_json(out / "manifest.json", _manifest(spec, {}))
    except OSError as e:
        raise OutputError(f"cannot write to {out}: {e}") from e
    return out


HANDLERS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "evolve": cmd_evolve, "compare": cmd_compare}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bigfive-abm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value settings file; flags override it")
        p.add_argument("--seed", help="master seed (unsigned 64-bit)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--replicates")
        p.add_argument("--noise", help="maximum relative perception error, e.g. 0.2")
        p.add_argument("--jobs", help="worker processes (default: CPU count)")
        p.add_argument("--t-max", dest="t_max")
        if name == "simulate":
            p.add_argument("--team", help="'N,E,O,A,C;N,E,O,A,C;...'")
            p.add_argument("--team-size", dest="team_size")
            p.add_argument("--traits", help="homogeneous team traits 'N,E,O,A,C'")
        elif name == "sweep":
            p.add_argument("--runs-per-cell", dest="runs_per_cell")
            p.add_argument("--grid-step", dest="grid_step")
            p.add_argument("--noise-levels", dest="noise_levels", help="e.g. 0,0.1,0.2")
            p.add_argument("--team-size", dest="team_size")
            p.add_argument("--sweep-traits", dest="sweep_traits", help="subset of N,E,O,A,C")
        elif name == "evolve":
            p.add_argument("--mode", choices=("best", "worst"))
            p.add_argument("--population", choices=("general", "sample"))
            p.add_argument("--n-pop", dest="n_pop")
            p.add_argument("--n-parents", dest="n_parents")
            p.add_argument("--n-gen", dest="n_gen")
            p.add_argument("--fitness-reps", dest="fitness_reps")
        elif name == "compare":
            p.add_argument("--a", help="first group CSV")
            p.add_argument("--b", help="second group CSV")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        spec = resolve_spec(args.command, args)
        out = HANDLERS[args.command](spec)
    except SpecError as e:
        log.error("%s", e)
        return 1
    except OutputError as e:
        log.error("%s", e)
        return 2
    log.info("wrote %s output to %s", args.command, out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
