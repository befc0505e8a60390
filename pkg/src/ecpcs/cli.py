"""Experiment harness: load a CSV dataset, run repeated consensus experiments,
sweep ensemble size or step length, and write JSON/CSV reports."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import _kernels
from .coassoc import coassociation, enhanced_coassociation
from .consensus import hc_build_dendrogram, hc_cut, mc_partition, mc_vote
from .core import ContractViolation, Dataset, Ensemble
from .ensemble_gen import EnsembleConfig, generate_ensemble
from .metrics import ari, nmi
from .propagation import cluster_similarity, write_matrix_csv

log = logging.getLogger("ecpcs")

SCHEMA_VERSION = 1
METHODS = ("ecpcs-hc", "ecpcs-mc", "eac")
BEST_K_CAP = 30
RUN_FIELDS = [
    "axis", "axis_value", "run", "seed", "method", "k_policy", "k", "nmi", "ari",
    "best_k_nmi", "best_k_ari", "n_clusters", "tie_events", "wall_time", "error",
]


class DatasetError(ValueError):
    """The dataset file could not be parsed into a valid dataset."""


def load_dataset(path: str | Path, label_column: str | None = None, *, name: str | None = None) -> Dataset:
    """Read a headered UTF-8 CSV of numeric features and an optional label column.

    Label values of any type are mapped to ids ``0..K-1`` by first appearance.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DatasetError(f"{path}: empty dataset")
        header = [h.strip() for h in header]
        if label_column is not None and label_column not in header:
            raise DatasetError(f"{path}: no column named {label_column!r}")
        label_idx = header.index(label_column) if label_column is not None else None
        rows, raw_labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DatasetError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            feats = []
            for j, cell in enumerate(row):
                if j == label_idx:
                    raw_labels.append(cell.strip())
                    continue
                try:
                    feats.append(float(cell))
                except ValueError:
                    raise DatasetError(
                        f"{path}:{lineno}: non-numeric value {cell!r} in column {header[j]!r}"
                    ) from None
            rows.append(feats)
    if not rows:
        raise DatasetError(f"{path}: empty dataset")
    labels = None
    if label_idx is not None:
        ids: dict[str, int] = {}
        labels = np.array([ids.setdefault(v, len(ids)) for v in raw_labels], dtype=np.int64)
    try:
        return Dataset(np.array(rows, dtype=np.float64), labels, name or path.stem)
    except ContractViolation as exc:
        raise DatasetError(f"{path}: {exc}") from exc


def load_fixture(path: str | Path) -> tuple[Ensemble, np.ndarray | None]:
    """Pre-built ensemble ``{"assignments": [[...], ...], "labels": [...]?}``."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    ens = Ensemble.from_assignments(payload["assignments"])
    labels = payload.get("labels")
    return ens, None if labels is None else np.asarray(labels, dtype=np.int64)


def derive_seed(seed: int, r: int) -> int:
    """64-bit seed for run ``r`` under base ``seed``."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), r])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class RunSpec:
    data: str | None = None
    label_column: str | None = "label"
    method: str = "ecpcs-hc"
    k: str | int = "true"
    M: int = 20
    t: int = 20
    repeats: int = 20
    seed: int = 0
    k_min: int | None = None
    k_max: int | None = None
    standardize: bool = True
    fixture: str | None = None
    out: str | None = None
    dump_matrices: str | None = None
    workers: int = 1
    backend: str | None = None

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ContractViolation(f"method must be one of {METHODS}, got {self.method!r}")
        if self.repeats < 1:
            raise ContractViolation("repeats must be >= 1")
        if self.data is None and self.fixture is None:
            raise ContractViolation("need a dataset path or a fixture")
        for p in (self.data, self.fixture):
            if p is not None and not Path(p).is_file():
                raise FileNotFoundError(p)
        if isinstance(self.k, str) and self.k not in ("true", "best"):
            raise ContractViolation(f"k policy must be 'true', 'best' or an integer, got {self.k!r}")

    @property
    def k_policy(self) -> str:
        return self.k if isinstance(self.k, str) else "fixed"


@dataclass
class Report:
    dataset: str
    spec: dict
    runs: list[dict] = field(default_factory=list)
    aggregates: list[dict] = field(default_factory=list)
    created: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "created": self.created,
            "dataset": self.dataset,
            "spec": self.spec,
            "runs": self.runs,
            "aggregates": self.aggregates,
        }

    def write(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")
        with path.with_suffix(".csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=RUN_FIELDS, extrasaction="ignore")
            w.writeheader()
            for rec in self.runs:
                w.writerow({k: ("" if rec.get(k) is None else rec.get(k)) for k in RUN_FIELDS})


def _summary(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    mean = math.fsum(values) / len(values)
    sd = statistics.stdev(values) if len(values) > 1 else None
    return mean, sd


def aggregate(runs: list[dict], dataset: str) -> list[dict]:
    """Mean and sample standard deviation per (method, k policy, axis value)."""
    groups: dict[tuple, list[dict]] = {}
    for rec in runs:
        key = (rec["method"], rec["k_policy"], rec.get("axis"), rec.get("axis_value"))
        groups.setdefault(key, []).append(rec)
    out = []
    for (method, policy, axis, value), recs in groups.items():
        ok = [r for r in recs if r["error"] is None]
        row = {
            "dataset": dataset,
            "method": method,
            "k_policy": policy,
            "axis": axis,
            "axis_value": value,
            "n_runs": len(recs),
            "n_failed": len(recs) - len(ok),
            "complete": len(ok) == len(recs),
        }
        for metric in ("nmi", "ari"):
            vals = [r[metric] for r in ok if r[metric] is not None]
            row[f"{metric}_mean"], row[f"{metric}_std"] = _summary(vals)
        out.append(row)
    return out


def _candidate_ks(spec: RunSpec, n_classes: int | None, n_objects: int) -> list[int]:
    if spec.k_policy == "fixed":
        return [int(spec.k)]
    if n_classes is None:
        raise ContractViolation(f"k policy {spec.k!r} needs ground-truth labels")
    if spec.k_policy == "true":
        return [n_classes]
    return list(range(2, min(2 * n_classes, BEST_K_CAP, n_objects) + 1))


def _one_run(spec: RunSpec, r: int, data: Dataset | None, fixture: Ensemble | None,
             labels: np.ndarray | None, dump: tuple[Path, str] | None) -> dict:
    seed_r = derive_seed(spec.seed, r)
    rec = {k: None for k in RUN_FIELDS}
    rec.update(run=r, seed=seed_r, method=spec.method, k_policy=spec.k_policy, tie_events=0)
    start = time.perf_counter()
    try:
        if fixture is not None:
            ens = fixture
        else:
            cfg = EnsembleConfig(M=spec.M, k_min=spec.k_min, k_max=spec.k_max,
                                 seed=seed_r, standardize=spec.standardize)
            ens = generate_ensemble(data, cfg)
        n_classes = None if labels is None else int(labels.max()) + 1
        ks = _candidate_ks(spec, n_classes, ens.n_objects)
        _, _, Z = cluster_similarity(ens, spec.t)
        if dump is not None:
            folder, tag = dump
            folder.mkdir(parents=True, exist_ok=True)
            write_matrix_csv(folder / f"{tag}Z.csv", Z)
            write_matrix_csv(folder / f"{tag}A.csv", coassociation(ens, backend=spec.backend))
            write_matrix_csv(folder / f"{tag}B.csv", enhanced_coassociation(ens, Z, backend=spec.backend))

        results = []
        if spec.method == "ecpcs-mc":
            for k in ks:
                rng = np.random.default_rng(np.random.SeedSequence([seed_r, 1, k]))
                results.append(mc_vote(ens, mc_partition(Z, k, rng), rng))
        else:
            if spec.method == "ecpcs-hc":
                S = enhanced_coassociation(ens, Z, backend=spec.backend)
            else:
                S = coassociation(ens, backend=spec.backend)
            dend = hc_build_dendrogram(S, backend=spec.backend)
            method = "HC" if spec.method == "ecpcs-hc" else "EAC"
            results = [hc_cut(dend, k, method=method) for k in ks]

        rec["tie_events"] = sum(res.provenance.get("tie_events", 0) for res in results)
        if labels is None:
            rec["k"] = ks[0]
            rec["n_clusters"] = results[0].n_clusters
        else:
            scores = [(nmi(res.labels, labels), ari(res.labels, labels)) for res in results]
            i_n = max(range(len(ks)), key=lambda i: scores[i][0])
            i_a = max(range(len(ks)), key=lambda i: scores[i][1])
            rec["nmi"], rec["ari"] = scores[i_n][0], scores[i_a][1]
            rec["n_clusters"] = results[i_n].n_clusters
            if spec.k_policy == "best":
                rec["best_k_nmi"], rec["best_k_ari"] = ks[i_n], ks[i_a]
            else:
                rec["k"] = ks[0]
    except Exception as exc:  # a failing stage aborts only this run
        log.error("run %d failed: %s", r, exc)
        rec["error"] = f"{type(exc).__name__}: {exc}"
    rec["wall_time"] = time.perf_counter() - start
    return rec


def _execute(spec: RunSpec, axis: str | None = None, value=None) -> tuple[str, list[dict]]:
    data = fixture = labels = None
    if spec.data is not None:
        data = load_dataset(spec.data, spec.label_column if _has_column(spec) else None)
        labels = data.labels
    if spec.fixture is not None:
        fixture, fix_labels = load_fixture(spec.fixture)
        if labels is None:
            labels = fix_labels
        if data is not None and data.n_objects != fixture.n_objects:
            raise ContractViolation("fixture and dataset disagree on N")
    name = data.name if data is not None else Path(spec.fixture).stem

    def job(r):
        dump = None
        if spec.dump_matrices and r == 0:
            dump = (Path(spec.dump_matrices), f"{axis}{value}_" if axis else "")
        return _one_run(spec, r, data, fixture, labels, dump)

    if spec.workers > 1:
        with ThreadPoolExecutor(spec.workers) as pool:
            runs = list(pool.map(job, range(spec.repeats)))
    else:
        runs = [job(r) for r in range(spec.repeats)]
    for rec in runs:
        rec["axis"], rec["axis_value"] = axis, value
    return name, runs


def _has_column(spec: RunSpec) -> bool:
    if spec.label_column is None:
        return False
    if spec.label_column != "label":
        return True
    # the default column name is optional; an explicit one must exist
    with open(spec.data, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), [])
    return "label" in [h.strip() for h in header]


def _spec_dict(spec: RunSpec) -> dict:
    d = dataclasses.asdict(spec)
    d.pop("workers")
    d["backend"] = spec.backend or _kernels.BACKEND
    return d


def run(spec: RunSpec) -> Report:
    spec.validate()
    name, runs = _execute(spec)
    report = Report(name, _spec_dict(spec), runs, aggregate(runs, name))
    if spec.out:
        report.write(spec.out)
    return report


def sweep(spec: RunSpec, axis: str, values: list[int]) -> Report:
    """One run block per value of ``axis`` ("M" or "t"), all from the same base seed."""
    spec.validate()
    if axis not in ("M", "t"):
        raise ContractViolation(f"sweep axis must be 'M' or 't', got {axis!r}")
    if not values:
        raise ContractViolation("sweep needs at least one axis value")
    if axis == "M" and spec.fixture is not None:
        raise ContractViolation("an M sweep cannot use a fixed fixture ensemble")
    runs, name = [], None
    for v in values:
        name, block = _execute(dataclasses.replace(spec, **{axis: int(v)}), axis, int(v))
        runs.extend(block)
    d = _spec_dict(spec)
    d["sweep"] = {"axis": axis, "values": [int(v) for v in values]}
    report = Report(name, d, runs, aggregate(runs, name))
    if spec.out:
        report.write(spec.out)
    return report


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(" ", "").split(",") if x]


def _k_arg(text: str):
    return text if text in ("true", "best") else int(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ecpcs", description=__doc__)
    p.add_argument("--data", help="CSV dataset with a header row")
    p.add_argument("--label-col", default="label",
                   help="ground-truth column (default: 'label' when present)")
    p.add_argument("--method", choices=METHODS, default="ecpcs-hc")
    p.add_argument("--k", type=_k_arg, default="true", help="'true', 'best' or an integer")
    p.add_argument("--M", type=int, default=20, help="ensemble size")
    p.add_argument("--t", type=int, default=20, help="random-walk step length")
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k-min", type=int, help="override the lower bound on member cluster counts")
    p.add_argument("--k-max", type=int, help="override the upper bound on member cluster counts")
    p.add_argument("--out", help="report JSON path; per-run CSV is written next to it")
    p.add_argument("--sweep-m", type=_int_list, help="comma-separated ensemble sizes")
    p.add_argument("--sweep-t", type=_int_list, help="comma-separated step lengths")
    p.add_argument("--fixture", help="JSON ensemble to use instead of k-means members")
    p.add_argument("--no-standardize", action="store_true", help="skip z-scoring features")
    p.add_argument("--dump-matrices", metavar="DIR", help="write Z, A, B of the first run as CSV")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    spec = RunSpec(
        data=args.data, label_column=args.label_col, method=args.method, k=args.k,
        M=args.M, t=args.t, repeats=args.repeats, seed=args.seed, k_min=args.k_min,
        k_max=args.k_max, standardize=not args.no_standardize, fixture=args.fixture,
        out=args.out, dump_matrices=args.dump_matrices, workers=args.workers,
    )
    if args.sweep_m is not None and args.sweep_t is not None:
        print("error: choose one of --sweep-m / --sweep-t", file=sys.stderr)
        return 2
    try:
        if args.sweep_m is not None:
            report = sweep(spec, "M", args.sweep_m)
        elif args.sweep_t is not None:
            report = sweep(spec, "t", args.sweep_t)
        else:
            report = run(spec)
    except (ContractViolation, DatasetError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    # keep stdout machine-readable when the report itself goes there
    summary_stream = sys.stdout if args.out else sys.stderr
    for row in report.aggregates:
        axis = f" {row['axis']}={row['axis_value']}" if row["axis"] else ""
        fmt = lambda m, s: "n/a" if m is None else f"{100 * m:.2f}" + ("" if s is None else f" ± {100 * s:.2f}")  # noqa: E731
        print(f"{row['dataset']} {row['method']} {row['k_policy']}{axis}: "
              f"NMI {fmt(row['nmi_mean'], row['nmi_std'])}  ARI {fmt(row['ari_mean'], row['ari_std'])}"
              + ("" if row["complete"] else f"  ({row['n_failed']} failed)"), file=summary_stream)
    if not args.out:
        json.dump(report.to_json(), sys.stdout, indent=2)
        print()
    return 0
