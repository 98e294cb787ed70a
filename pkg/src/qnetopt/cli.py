"""Batch front-end: reproducible studies from TOML config files.

Subcommands: optimize, baseline, confirm, pareto, simulate (qes|cd).
Exit codes: 0 ok, 1 user error (bad config, missing file, bad flags),
2 runtime error (objective failures and other execution problems).
"""

import argparse
import logging
import platform
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from ._accel import USING_NUMBA, accel_mode
from .baselines import Budget, SaSettings, random_search, simulated_annealing
from .cd import (
    CdNetwork,
    CdObjective,
    load_edge_list,
    q_swap_space,
    random_tree_edges,
    simulate as cd_simulate,
    three_node_path,
)
from .errors import ConfigFileError, DomainError, EvaluationError, QnetoptError
from .forest import RfSettings
from .memalloc import AllocationProblem, ExternalObjective, MemallocObjective, allocation_space
from .models import save_model
from .optimizer import Limit, RunSettings, evaluate, run
from .pareto import summarize
from .qes import (
    BrightStateConfig,
    QesObjective,
    QesTopology,
    alpha_space,
    simulate as qes_simulate,
    user_utility,
)
from .space import SearchSpace
from .storage import (
    best_config_payload,
    dataset_payload,
    pareto_payload,
    profile_payload,
    read_best_config,
    read_dataset_csv,
    space_from_jsonable,
    space_to_jsonable,
    write_dataset_csv,
    write_json,
    write_pareto_csv,
)
from .synthetic import RosenbrockObjective, SphereObjective

log = logging.getLogger("qnetopt")


class _Parser(argparse.ArgumentParser):
    """argparse maps usage errors to exit code 2; we reserve 2 for runtime errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(1)


def _load_toml(path: Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigFileError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigFileError(f"{path}: {exc}") from exc


def _space_from_config(cfg: dict) -> SearchSpace:
    spc = cfg.get("space")
    if not spc or "params" not in spc:
        raise ConfigFileError("config needs a [space] table with a params array")
    try:
        return space_from_jsonable(spc)
    except (DomainError, KeyError) as exc:
        raise ConfigFileError(f"bad [space] table: {exc}") from exc


class Study:
    """Everything a run needs, assembled from one TOML file."""

    def __init__(self, cfg: dict, path: Path):
        self.raw = cfg
        study = cfg.get("study", {})
        self.use_case = study.get("use_case", "synthetic")
        self.method = study.get("method", "surrogate")
        if self.method not in ("surrogate", "random", "annealing"):
            raise ConfigFileError(f"unknown method {self.method!r}")
        self.settings_raw = dict(cfg.get("settings", {}))
        self.output_dir = Path(cfg.get("output", {}).get("dir", path.stem + "_out"))
        self.space, self.objective = self._build_use_case(cfg)

    def _build_use_case(self, cfg):
        uc = self.use_case
        if uc == "synthetic":
            syn = cfg.get("synthetic", {})
            fn = syn.get("function", "sphere")
            if fn == "sphere":
                obj = SphereObjective(
                    dim=int(syn.get("dim", 5)),
                    center=float(syn.get("center", 0.5)),
                    noise=float(syn.get("noise", 0.01)),
                )
            elif fn == "rosenbrock":
                obj = RosenbrockObjective(
                    dim=int(syn.get("dim", 10)), noise=float(syn.get("noise", 0.01))
                )
            else:
                raise ConfigFileError(f"unknown synthetic function {fn!r}")
            space = _space_from_config(cfg) if "space" in cfg else obj.space()
            return space, obj
        if uc == "qes":
            topo = self._qes_topology(cfg)
            q = cfg.get("qes", {})
            space = alpha_space(
                topo, low=float(q.get("alpha_low", 1e-3)), high=float(q.get("alpha_high", 0.5))
            )
            return space, QesObjective(topo)
        if uc == "cd":
            network, groups = self._cd_network(cfg)
            return q_swap_space(network, groups), CdObjective(network, groups)
        if uc == "memalloc":
            mem = cfg.get("memalloc", {})
            problem = AllocationProblem(
                budget=int(mem.get("budget", 450)),
                capacities=tuple(mem.get("capacities", (128,) * 9)),
            )
            obj = MemallocObjective(
                problem,
                scale=float(mem.get("scale", 8.0)),
                command=mem.get("command"),
                timeout=float(mem.get("timeout", 30.0)),
            )
            return allocation_space(problem), obj
        if uc == "external":
            ext = cfg.get("external", {})
            if "command" not in ext:
                raise ConfigFileError("[external] needs a command array")
            space = _space_from_config(cfg)
            obj = ExternalObjective(
                command=ext["command"],
                space=space,
                m=int(ext.get("m", 1)),
                timeout=float(ext.get("timeout", 30.0)),
            )
            return space, obj
        raise ConfigFileError(f"unknown use_case {uc!r}")

    def _qes_topology(self, cfg) -> QesTopology:
        q = cfg.get("qes", {})
        if "link_lengths" not in q:
            raise ConfigFileError("[qes] needs link_lengths")
        return QesTopology(
            link_lengths=tuple(q["link_lengths"]),
            server_index=int(q.get("server_index", 0)),
            buffer_size=int(q.get("buffer_size", 20)),
            attempt_period=float(q.get("attempt_period", 1e-3)),
            attenuation=float(q.get("attenuation", 0.2)),
            t_sim=float(q.get("t_sim", 5.0)),
        )

    def _cd_network(self, cfg):
        c = cfg.get("cd", {})
        if "edge_file" in c:
            edges = load_edge_list(c["edge_file"])
        elif "edges" in c:
            edges = tuple((int(a), int(b)) for a, b in c["edges"])
        elif int(c.get("nodes", 0)) == 3:
            edges = three_node_path().edges
        elif "nodes" in c:
            edges = random_tree_edges(int(c["nodes"]), int(c.get("tree_seed", 0)))
        else:
            raise ConfigFileError("[cd] needs edge_file, edges, or nodes")
        users = c.get("users", "leaves")
        if isinstance(users, list):
            users = tuple(int(u) for u in users)
        kwargs = {}
        for key in ("r", "max_hops", "t_cut", "t_sim"):
            if key in c:
                kwargs[key] = int(c[key])
        p_gen = float(c.get("p_gen", 0.9))
        kwargs["p_gen"] = p_gen
        kwargs["p_cons"] = float(c.get("p_cons", p_gen / 4.0))
        network = CdNetwork.from_edges(edges, users=users, **kwargs)
        groups = c.get("param_groups")
        if groups is not None:
            groups = tuple(tuple(int(n) for n in g) for g in groups)
        return network, groups

    def run_settings(self, seed=None, workers=None) -> RunSettings:
        s = self.settings_raw
        if "wall_clock" in s:
            limit = Limit(wall_clock=float(s["wall_clock"]))
        else:
            limit = Limit(cycles=int(s.get("cycles", 10)))
        kwargs = {}
        if "rf_trees" in s:
            kwargs["rf"] = RfSettings(n_trees=int(s["rf_trees"]))
        return RunSettings(
            limit=limit,
            n=int(s.get("n", 20)),
            l=int(s["l"]) if "l" in s else None,
            d=float(s.get("d", 4.0)),
            k0=int(s["k0"]) if "k0" in s else None,
            seed=int(seed if seed is not None else s.get("seed", 0)),
            workers=int(workers if workers is not None else s.get("workers", 1)),
            **kwargs,
        )

    def budget(self, settings: RunSettings) -> Budget:
        s = self.settings_raw
        if "evaluations" in s:
            return Budget(evaluations=int(s["evaluations"]))
        if "wall_clock" in s:
            return Budget(wall_clock=float(s["wall_clock"]))
        # budget-match the surrogate loop: k0 + cycles * l evaluations
        cycles = int(s.get("cycles", 10))
        return Budget(evaluations=settings.resolved_k0 + cycles * settings.resolved_l)

    def sa_settings(self) -> SaSettings:
        s = self.settings_raw
        return SaSettings(
            t0=float(s.get("t0", 1.0)), neighbor_scale=float(s.get("neighbor_scale", 0.1))
        )


def load_study(path, seed=None, workers=None, out=None) -> Study:
    path = Path(path)
    study = Study(_load_toml(path), path)
    if seed is not None:
        study.settings_raw["seed"] = seed
    if workers is not None:
        study.settings_raw["workers"] = workers
    if out is not None:
        study.output_dir = Path(out)
    return study


def _versions() -> dict:
    versions = {
        "qnetopt": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "kernels": accel_mode(),
    }
    if USING_NUMBA:
        import numba

        versions["numba"] = numba.__version__
    return versions


def _write_run_outputs(study: Study, settings: RunSettings, result, outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    write_dataset_csv(outdir / "dataset.csv", result.records, study.space)
    write_json(outdir / "dataset.json", dataset_payload(result.records, study.space, result.seed))
    write_json(outdir / "profile.json", profile_payload(result.profile, result.seed))
    write_json(outdir / "best_config.json", best_config_payload(result, study.space))
    if getattr(result, "final_model", None) is not None:
        save_model(result.final_model, outdir / "model.json")
    meta = {
        "use_case": study.use_case,
        "method": result.method,
        "seed": result.seed,
        "settings": study.settings_raw,
        "resolved": {
            "n": settings.n,
            "l": settings.resolved_l,
            "k0": settings.resolved_k0,
            "d": settings.d,
            "workers": settings.workers,
            "limit": {"cycles": settings.limit.cycles, "wall_clock": settings.limit.wall_clock},
        },
        "space": space_to_jsonable(study.space),
        "versions": _versions(),
        "truncated": result.truncated,
        "records": len(result.records),
    }
    write_json(outdir / "metadata.json", meta)


def cmd_optimize(args) -> int:
    study = load_study(args.config, args.seed, args.workers, args.out)
    settings = study.run_settings()
    method = args.method or study.method
    try:
        if method == "surrogate":
            result = run(study.space, study.objective, settings)
        elif method == "random":
            result = random_search(
                study.space,
                study.objective,
                study.budget(settings),
                n=settings.n,
                seed=settings.seed,
                workers=settings.workers,
            )
        else:
            result = simulated_annealing(
                study.space,
                study.objective,
                study.budget(settings),
                n=settings.n,
                sa=study.sa_settings(),
                seed=settings.seed,
                workers=settings.workers,
            )
    except EvaluationError as exc:
        partial = getattr(exc, "partial_records", None)
        if partial is not None:
            study.output_dir.mkdir(parents=True, exist_ok=True)
            write_dataset_csv(study.output_dir / "dataset.csv", partial, study.space)
            print(
                f"aborted after {len(partial)} evaluations; "
                f"partial dataset flushed to {study.output_dir / 'dataset.csv'}",
                file=sys.stderr,
            )
        raise
    _write_run_outputs(study, settings, result, study.output_dir)
    fr = result.profile.fractions()
    print(f"method={method} records={len(result.records)} best={result.best.aggregate:.6g}")
    print(
        "time: simulation {simulation:.1%} training {training:.1%} "
        "acquisition {acquisition:.1%} remaining {remaining:.1%}".format(**fr)
    )
    print(f"outputs in {study.output_dir}")
    return 0


def cmd_baseline(args) -> int:
    args.method = args.baseline_method
    return cmd_optimize(args)


def cmd_confirm(args) -> int:
    study = load_study(args.config, args.seed, args.workers, args.out)
    best_path = Path(args.best)
    if not best_path.exists():
        raise ConfigFileError(f"best-config file not found: {best_path}")
    config = read_best_config(best_path, study.space)
    n_exec = args.n_exec or int(study.settings_raw.get("n_exec", 1000))
    seed = int(study.settings_raw.get("seed", 0))
    record = evaluate(study.objective, config, n_exec, rng=seed, cycle=0)
    means = record.mean_utilities
    if record.raw_samples is not None and n_exec > 1:
        se = record.raw_samples.std(axis=0, ddof=1) / np.sqrt(n_exec)
        se[np.ptp(record.raw_samples, axis=0) == 0.0] = 0.0
    else:
        se = np.zeros_like(means)
    payload = {
        "params": {k: v for k, v in config.as_dict(study.space).items()},
        "n_exec": n_exec,
        "seed": seed,
        "mean_utilities": [float(x) for x in means],
        "standard_errors": [float(x) for x in se],
        "aggregate": float(means.sum()),
    }
    study.output_dir.mkdir(parents=True, exist_ok=True)
    write_json(study.output_dir / "confirm.json", payload)
    for j, (mu, s) in enumerate(zip(means, se)):
        print(f"U_{j}: mean={mu:.6g} se={s:.3g}")
    print(f"aggregate={means.sum():.6g} (n_exec={n_exec})")
    return 0


def cmd_pareto(args) -> int:
    study = load_study(args.config, None, None, args.out)
    records = read_dataset_csv(args.dataset, study.space)
    report = summarize(records, study.space)
    study.output_dir.mkdir(parents=True, exist_ok=True)
    write_pareto_csv(study.output_dir / "pareto_report.csv", report)
    write_json(study.output_dir / "pareto_report.json", pareto_payload(report))
    print(
        f"dominating: {len(report.dominating_indices)} of {len(records)} "
        f"({report.dominating_fraction:.1%})"
    )
    return 0


def _write_rows(path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(str(x) for x in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_simulate(args) -> int:
    study = load_study(args.config, args.seed, None, None)
    seed = int(study.settings_raw.get("seed", 0))
    if args.simulator == "qes":
        topo = study._qes_topology(study.raw)
        q = study.raw.get("qes", {})
        if "alphas" not in q:
            raise ConfigFileError("[qes] needs alphas for a one-shot simulation")
        stats = qes_simulate(topo, BrightStateConfig(tuple(q["alphas"])), seed)
        rows = [
            (s.node, repr(s.rate), repr(s.mean_fidelity), s.swap_count, repr(user_utility(s)))
            for s in stats
        ]
        _write_rows(args.out, ["node", "rate", "mean_fidelity", "swap_count", "utility"], rows)
        return 0
    network, groups = study._cd_network(study.raw)
    c = study.raw.get("cd", {})
    if "q_swap" not in c:
        raise ConfigFileError("[cd] needs q_swap for a one-shot simulation")
    q_swap = c["q_swap"]
    if groups is not None:
        full = np.empty(network.n_nodes)
        for group, value in zip(groups, q_swap):
            for node in group:
                full[node] = float(value)
        q_swap = full
    means = cd_simulate(network, np.asarray(q_swap, dtype=np.float64), seed)
    rows = [(u, repr(float(v))) for u, v in zip(network.users, means)]
    _write_rows(args.out, ["node", "mean_virtual_neighbors"], rows)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="qnetopt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, workers=True):
        p.add_argument("--config", required=True, help="study TOML file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory")
        if workers:
            p.add_argument("--workers", type=int, default=None, help="evaluation worker threads")

    p = sub.add_parser("optimize", help="run the configured search method")
    common(p)
    p.add_argument(
        "--method", choices=("surrogate", "random", "annealing"), default=None
    )
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("baseline", help="run a baseline method on the same study")
    common(p)
    p.add_argument("--method", dest="baseline_method", choices=("random", "annealing"), required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("confirm", help="re-evaluate a best config with n_exec runs")
    common(p)
    p.add_argument("--best", required=True, help="best_config.json from optimize")
    p.add_argument("--n-exec", type=int, default=None)
    p.set_defaults(func=cmd_confirm)

    p = sub.add_parser("pareto", help="dominating-set report from a dataset CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("simulate", help="one-shot simulator run")
    p.add_argument("simulator", choices=("qes", "cd"))
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="CSV file (default: stdout)")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigFileError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except QnetoptError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
