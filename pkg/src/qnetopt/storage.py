"""Dataset, metadata, and report files.

The dataset CSV has one row per evaluation record with the documented stable
column order: cycle, one column per configurable parameter (space order),
one mean-utility column per objective (U_0..U_{m-1}), aggregate, n. Floats
are written with repr(), so a fixed seed reproduces the file byte for byte.
"""

import csv
import json
from dataclasses import asdict

import numpy as np

from .errors import ConfigFileError
from .optimizer import EvalRecord
from .pareto import ParetoReport
from .space import ConfigPoint, ParamSpec, SearchSpace


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def dataset_columns(space: SearchSpace, m: int) -> list:
    return ["cycle", *space.names, *[f"U_{j}" for j in range(m)], "aggregate", "n"]


def write_dataset_csv(path, records, space: SearchSpace) -> None:
    m = records[0].mean_utilities.shape[0] if records else 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(dataset_columns(space, m))
        for rec in records:
            row = [rec.cycle]
            row.extend(_fmt(v) for v in rec.config.values)
            row.extend(_fmt(u) for u in rec.mean_utilities)
            row.append(_fmt(rec.aggregate))
            row.append(rec.sample_count)
            writer.writerow(row)


def _parse_param(p: ParamSpec, text: str, where: str):
    if p.kind == "continuous":
        return float(text)
    if p.kind == "integer":
        return int(float(text))
    for v in p.values:
        if str(v) == text:
            return v
    raise ConfigFileError(f"{where}: {text!r} is not a value of {p.name}")


def read_dataset_csv(path, space: SearchSpace) -> list:
    """Parse a dataset CSV back into records; parse errors carry the row number."""
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigFileError(f"{path}: empty dataset") from None
        n_params = len(space.params)
        fixed_cols = 1 + n_params  # cycle + params
        m = len(header) - fixed_cols - 2  # minus aggregate, n
        if m < 1 or header[: 1 + n_params] != ["cycle", *space.names]:
            raise ConfigFileError(f"{path}: header does not match the space: {header}")
        for rownum, row in enumerate(reader, start=2):
            where = f"{path}: row {rownum}"
            if len(row) != len(header):
                raise ConfigFileError(f"{where}: expected {len(header)} columns, got {len(row)}")
            try:
                cycle = int(row[0])
                values = tuple(
                    _parse_param(p, text, where)
                    for p, text in zip(space.params, row[1 : 1 + n_params])
                )
                utilities = np.array([float(x) for x in row[fixed_cols : fixed_cols + m]])
                n = int(row[-1])
            except (ValueError, ConfigFileError) as exc:
                if isinstance(exc, ConfigFileError):
                    raise
                raise ConfigFileError(f"{where}: {exc}") from exc
            records.append(
                EvalRecord(
                    config=ConfigPoint(values),
                    mean_utilities=utilities,
                    sample_count=n,
                    raw_samples=None,
                    cycle=cycle,
                )
            )
    if not records:
        raise ConfigFileError(f"{path}: dataset has a header but no rows")
    return records


def dataset_payload(records, space: SearchSpace, seed=None) -> dict:
    return {
        "seed": seed,
        "columns": dataset_columns(space, records[0].mean_utilities.shape[0] if records else 0),
        "records": [
            {
                "cycle": rec.cycle,
                "params": {k: _json_value(v) for k, v in rec.config.as_dict(space).items()},
                "mean_utilities": [float(u) for u in rec.mean_utilities],
                "aggregate": rec.aggregate,
                "n": rec.sample_count,
            }
            for rec in records
        ],
    }


def space_to_jsonable(space: SearchSpace) -> dict:
    params = []
    for p in space.params:
        entry = {"name": p.name, "kind": p.kind}
        if p.bounds is not None:
            entry["bounds"] = list(p.bounds)
        if p.values is not None:
            entry["values"] = list(p.values)
        params.append(entry)
    return {"params": params, "fixed": dict(space.fixed)}


def space_from_jsonable(obj: dict) -> SearchSpace:
    params = tuple(
        ParamSpec(
            name=e["name"],
            kind=e["kind"],
            bounds=tuple(e["bounds"]) if "bounds" in e else None,
            values=tuple(e["values"]) if "values" in e else None,
        )
        for e in obj["params"]
    )
    return SearchSpace(params=params, fixed=obj.get("fixed", {}))


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def profile_payload(profile, seed=None) -> dict:
    return {
        "seed": seed,
        "durations": {
            "simulation": profile.simulation,
            "training": profile.training,
            "acquisition": profile.acquisition,
            "remaining": profile.remaining,
        },
        "fractions": profile.fractions(),
        "cycles_completed": profile.cycles_completed,
        "total": profile.total,
    }


def best_config_payload(result, space: SearchSpace) -> dict:
    best = result.best
    return {
        "format": "qnetopt-best",
        "params": {k: _json_value(v) for k, v in best.config.as_dict(space).items()},
        "mean_utilities": [float(u) for u in best.mean_utilities],
        "aggregate": best.aggregate,
        "sample_count": best.sample_count,
        "cycle": best.cycle,
        "seed": result.seed,
        "method": result.method,
    }


def _json_value(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def read_best_config(path, space: SearchSpace) -> ConfigPoint:
    doc = read_json(path)
    if doc.get("format") != "qnetopt-best":
        raise ConfigFileError(f"{path}: not a best-config file")
    params = doc["params"]
    missing = [n for n in space.names if n not in params]
    if missing:
        raise ConfigFileError(f"{path}: missing parameters {missing}")
    values = []
    for p in space.params:
        v = params[p.name]
        if p.kind == "integer":
            v = int(v)
        elif p.kind == "continuous":
            v = float(v)
        values.append(v)
    return ConfigPoint(tuple(values))


def write_pareto_csv(path, report: ParetoReport) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["parameter", "median", "p2.5", "p97.5", "std", "ks_uniform", "ks_normal", "closer_to_uniform"]
        )
        for name, s in report.summaries.items():
            writer.writerow(
                [
                    name,
                    _fmt(s.median),
                    _fmt(s.p2_5),
                    _fmt(s.p97_5),
                    _fmt(s.std),
                    _fmt(s.ks_uniform),
                    _fmt(s.ks_normal),
                    s.closer_to_uniform,
                ]
            )


def pareto_payload(report: ParetoReport) -> dict:
    return {
        "dominating_indices": list(report.dominating_indices),
        "dominating_fraction": report.dominating_fraction,
        "summaries": {name: asdict(s) for name, s in report.summaries.items()},
        "metadata": report.metadata,
    }
