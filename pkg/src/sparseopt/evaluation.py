"""Experiment harness: batch attacks, persistence, and summary metrics.

Records go to records.jsonl (one line per attack as it completes, flushed
immediately so crashes keep finished work). Per-cell summaries go to
summary.csv with the fixed header

    cell_id,Q,N,p,norm,mode,sr,median_l2,median_linf,mean_pp,median_queries,n

and, with every computed field including the all-records medians and skip
counts, to summary.json. Reruns with the same spec are byte-identical
except for the wall_time_s values inside the JSONL lines.
"""

from __future__ import annotations

import dataclasses
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .inference import WeightedNetOracle, load_dataset, load_weighted_net
from .oracles import HyperplaneOracle, SphereOracle
from .pipeline import PROFILES, AttackConfig, attack
from .signopt import SignOptConfig

RECORDS_NAME = "records.jsonl"
SUMMARY_CSV = "summary.csv"
SUMMARY_JSON = "summary.json"
CSV_HEADER = "cell_id,Q,N,p,norm,mode,sr,median_l2,median_linf,mean_pp,median_queries,n"


class SpecError(ValueError):
    """A bench spec file that cannot be used."""


def record_to_dict(record, extra: dict | None = None) -> dict:
    d = dict(extra) if extra else {}
    d.update(dataclasses.asdict(record))
    return d


def _attempted(records: list[dict]) -> list[dict]:
    return [r for r in records if r.get("kind") == "attack"]


def _successful(records: list[dict]) -> list[dict]:
    return [r for r in _attempted(records) if r.get("success")]


def success_rate(records: list[dict], epsilon: float, norm_name: str = "l2") -> float | None:
    """Percentage of attempted records that succeeded below epsilon.

    Skipped (misclassified-clean) records are not attempts and leave the
    denominator. The norm comparison is strict.
    """
    attempted = _attempted(records)
    if not attempted:
        return None
    hits = [r for r in _successful(records) if r[norm_name] is not None and r[norm_name] < epsilon]
    return 100.0 * len(hits) / len(attempted)


def median_norm(records: list[dict], norm_name: str = "l2", *,
                successful_only: bool = True) -> float | None:
    """Median perturbation norm; an even count averages the central two."""
    pool = _successful(records) if successful_only else _attempted(records)
    vals = [r[norm_name] for r in pool if r.get(norm_name) is not None]
    if not vals:
        return None
    return float(statistics.median(vals))


def mean_pp(records: list[dict]) -> float | None:
    vals = [r["pp"] for r in _successful(records) if r.get("pp") is not None]
    if not vals:
        return None
    return float(sum(vals) / len(vals))


def median_queries(records: list[dict]) -> float | None:
    vals = [r["queries_total"] for r in _attempted(records)]
    if not vals:
        return None
    return float(statistics.median(vals))


@dataclass
class ExperimentSpec:
    oracle: str = "sphere"
    cells: list[tuple[int, int, int]] = field(default_factory=lambda: [(4000, 3000, 10)])
    indices: list[int] = field(default_factory=lambda: list(range(10)))
    norm: str = "l2"
    target: int | None = None
    epsilon: float = 1.5
    seed: int = 0
    clip: bool | None = None
    out: str = "results"
    # synthetic oracle parameters
    dim: int = 8
    radius: float = 1.0
    support: int | None = None
    # model-backed oracle parameters
    model: str | None = None
    data: str | None = None
    labels: str | None = None
    profile: str | None = None
    # optional descent overrides, None means the SignOptConfig default
    probe_count: int | None = None
    num_init_directions: int | None = None
    epsilon_smooth: float | None = None
    eta0: float | None = None
    lambda_tolerance: float | None = None


def _parse_indices(text: str) -> list[int]:
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def _parse_cells(text: str) -> list[tuple[int, int, int]]:
    cells = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        bits = part.split(":")
        if len(bits) != 3:
            raise ValueError(f"cell {part!r} is not Q:N:p")
        cells.append((int(bits[0]), int(bits[1]), int(bits[2])))
    return cells


_SPEC_PARSERS = {
    "oracle": str,
    "cells": _parse_cells,
    "indices": _parse_indices,
    "norm": str,
    "target": int,
    "epsilon": float,
    "seed": int,
    "clip": lambda v: v.lower() in ("1", "true", "yes", "on"),
    "out": str,
    "dim": int,
    "radius": float,
    "support": int,
    "model": str,
    "data": str,
    "labels": str,
    "profile": str,
    "probe_count": int,
    "num_init_directions": int,
    "epsilon_smooth": float,
    "eta0": float,
    "lambda_tolerance": float,
}


def parse_spec_file(path) -> ExperimentSpec:
    """Flat key=value lines; lists are comma-separated; # starts a comment."""
    spec = ExperimentSpec()
    seen: set[str] = set()
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SpecError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _SPEC_PARSERS:
            raise SpecError(f"{path}:{lineno}: unknown key {key!r}")
        if key in seen:
            raise SpecError(f"{path}:{lineno}: duplicate key {key!r}")
        seen.add(key)
        try:
            setattr(spec, key, _SPEC_PARSERS[key](value))
        except ValueError as e:
            raise SpecError(f"{path}:{lineno}: bad value for {key}: {e}") from e
    if spec.profile is not None and spec.profile not in PROFILES:
        raise SpecError(f"{path}: unknown profile {spec.profile!r}")
    return spec


def derive_seed(master: int, image_id: int) -> int:
    """Per-image attack seed, stable across cells so runs are comparable."""
    ss = np.random.SeedSequence([int(master), int(image_id)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def build_oracle_and_samples(spec: ExperimentSpec):
    """The oracle plus (image_id, x0, y0) triples the spec asks to attack."""
    if spec.oracle == "sphere":
        oracle = SphereOracle(center=np.zeros(spec.dim), radius=spec.radius)
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 1]))
        count = max(spec.indices) + 1
        xs = rng.standard_normal((count, spec.dim))
        xs *= 0.3 * spec.radius / np.linalg.norm(xs, axis=1, keepdims=True)
        samples = [(i, xs[i], oracle.decide(xs[i])) for i in spec.indices]
        return oracle, samples
    if spec.oracle == "hyperplane":
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 2]))
        w = np.zeros(spec.dim)
        sup = spec.support or spec.dim
        idx = rng.choice(spec.dim, size=min(sup, spec.dim), replace=False)
        w[idx] = rng.standard_normal(idx.size)
        w /= np.linalg.norm(w)
        oracle = HyperplaneOracle(w=w, b=-0.5)
        count = max(spec.indices) + 1
        xs = 0.1 * rng.standard_normal((count, spec.dim))
        samples = []
        for i in spec.indices:
            x0 = xs[i]
            if oracle.decide(x0) != 0:
                x0 = np.zeros(spec.dim)
            samples.append((i, x0, 0))
        return oracle, samples
    if spec.oracle == "sawt":
        if not spec.model or not spec.data:
            raise SpecError("oracle=sawt needs model= and data=")
        net = load_weighted_net(spec.model)
        images, labels = load_dataset(spec.data, spec.labels)
        if labels is None:
            raise SpecError("oracle=sawt needs labels (IDX pair or labels=)")
        oracle = WeightedNetOracle(net, images.shape[1:])
        samples = []
        for i in spec.indices:
            if not 0 <= i < images.shape[0]:
                raise SpecError(f"index {i} outside the dataset ({images.shape[0]} images)")
            samples.append((i, images[i], int(labels[i])))
        return oracle, samples
    raise SpecError(f"unknown oracle {spec.oracle!r}")


def _signopt_config(spec: ExperimentSpec) -> SignOptConfig:
    cfg = SignOptConfig()
    for name in ("probe_count", "num_init_directions", "epsilon_smooth", "eta0",
                 "lambda_tolerance"):
        value = getattr(spec, name)
        if value is not None:
            cfg = dataclasses.replace(cfg, **{name: value})
    return cfg


def _cell_id(spec: ExperimentSpec, q: int, n: int, p: int) -> str:
    mode = "untargeted" if spec.target is None else f"targeted{spec.target}"
    return f"Q{q}-N{n}-p{p}-{spec.norm}-{mode}"


def _attack_task(args):
    oracle, x0, y0, cfg, image_id = args
    return record_to_dict(attack(oracle, x0, y0, cfg, image_id=image_id))


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def summarize_cell(cell_id: str, q: int, n: int, p: int, spec: ExperimentSpec,
                   records: list[dict]) -> dict:
    mode = "untargeted" if spec.target is None else f"targeted{spec.target}"
    return {
        "cell_id": cell_id,
        "Q": q,
        "N": n,
        "p": p,
        "norm": spec.norm,
        "mode": mode,
        "sr": success_rate(records, spec.epsilon, spec.norm),
        "median_l2": median_norm(records, "l2"),
        "median_linf": median_norm(records, "linf"),
        "mean_pp": mean_pp(records),
        "median_queries": median_queries(records),
        "n": len(_attempted(records)),
        # beyond the fixed CSV columns
        "median_l2_all": median_norm(records, "l2", successful_only=False),
        "median_linf_all": median_norm(records, "linf", successful_only=False),
        "successes": len(_successful(records)),
        "skipped": sum(1 for r in records if r.get("kind") == "skip"),
        "epsilon": spec.epsilon,
    }


def write_summary(rows: list[dict], out_dir: Path) -> None:
    header_keys = CSV_HEADER.split(",")
    lines = [CSV_HEADER]
    lines += [",".join(_format_cell(row[k]) for k in header_keys) for row in rows]
    (out_dir / SUMMARY_CSV).write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out_dir / SUMMARY_JSON).write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")


def run_experiment(spec: ExperimentSpec, jobs: int = 1, log=None) -> list[dict]:
    """Run every (Q, N, p) cell over the spec's samples and persist results.

    jobs > 1 fans the attacks of a cell out to worker processes; results are
    written in submission order either way, so output files are stable. A
    cell that fails to run is logged and skipped, cells already finished
    keep their records.
    """
    say = log or (lambda msg: None)
    out_dir = Path(spec.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    oracle, samples = build_oracle_and_samples(spec)
    base_signopt = _signopt_config(spec)
    clip = spec.clip if spec.clip is not None else (spec.oracle == "sawt")
    rows: list[dict] = []
    with open(out_dir / RECORDS_NAME, "w", encoding="utf-8") as sink:
        for q, n, p in spec.cells:
            cell_id = _cell_id(spec, q, n, p)
            tasks = []
            for image_id, x0, y0 in samples:
                cfg = AttackConfig(
                    total_budget=q, baseline_budget=n, p=p, norm=spec.norm,
                    target=spec.target, clip=clip,
                    seed=derive_seed(spec.seed, image_id), signopt=base_signopt,
                )
                tasks.append((oracle, x0, y0, cfg, image_id))
            try:
                records = []
                if jobs > 1:
                    with ProcessPoolExecutor(max_workers=jobs) as pool:
                        results = pool.map(_attack_task, tasks, chunksize=1)
                        for d in results:
                            d = {"cell_id": cell_id, **d}
                            records.append(d)
                            sink.write(json.dumps(d) + "\n")
                            sink.flush()
                else:
                    for task in tasks:
                        d = {"cell_id": cell_id, **_attack_task(task)}
                        records.append(d)
                        sink.write(json.dumps(d) + "\n")
                        sink.flush()
            except (OSError, ValueError) as e:
                say(f"cell {cell_id} aborted: {e}")
                continue
            rows.append(summarize_cell(cell_id, q, n, p, spec, records))
            say(f"cell {cell_id}: {rows[-1]['successes']}/{rows[-1]['n']} succeeded")
    write_summary(rows, out_dir)
    return rows


def read_records(path) -> list[dict]:
    """Load a records.jsonl back into dicts."""
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line:
            out.append(json.loads(line))
    return out
