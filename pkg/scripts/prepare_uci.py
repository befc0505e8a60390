"""Rebuild the small UCI benchmark CSVs under data/ from the ``keel_ds`` wheel.

The wheel bundles Wine and Wisconsin (BC, 683 rows after removing missing
values) directly. Ecoli and Yeast only ship as one-vs-rest / group-vs-group
binarizations; the multiclass labels are recovered by intersecting the class
sets each binarized file admits for every row.

Usage::

    python scripts/prepare_uci.py path/to/keel_ds-0.2.5-py3-none-any.whl data/
"""

from __future__ import annotations

import collections
import csv
import re
import sys
import zipfile
from pathlib import Path

ECOLI_CLASSES = ["cp", "im", "imS", "imL", "imU", "om", "omL", "pp"]
YEAST_CLASSES = ["MIT", "NUC", "CYT", "ME1", "ME2", "ME3", "EXC", "VAC", "POX", "ERL"]
# single-class files: name -> positive class index
ECOLI_SINGLE = {"ecoli1": 1, "ecoli2": 7, "ecoli3": 4, "ecoli4": 5}
YEAST_SINGLE = {"yeast1": 1, "yeast3": 5, "yeast4": 4, "yeast5": 3, "yeast6": 6}
# files whose positive/negative naming is inverted relative to "<neg>_vs_<pos>"
INVERTED = {"ecoli-0_vs_1"}


def _rows(zf: zipfile.ZipFile, member: str) -> list[tuple[list[float], str]]:
    text = zf.read(member).decode()
    out = []
    for line in text.splitlines():
        if not line.strip() or line.startswith("@"):
            continue
        parts = [p.strip() for p in line.split(",")]
        out.append(([float(p) for p in parts[:-1]], parts[-1]))
    return out


def _ecoli_key(values: list[float]) -> tuple[float, ...] | None:
    # continuous columns only; KEEL rescales the binary ones inconsistently
    scale = 100.0 if max(values) > 2 else 1.0
    picked = (values[0], values[1], values[-3], values[-2], values[-1])
    return tuple(round(v / scale, 4) for v in picked)


def _yeast_key(values: list[float]) -> tuple[float, ...] | None:
    # some binarizations drop a constant column; those files are skipped
    if len(values) != 8:
        return None
    return tuple(round(v, 4) for v in values)


def _resolve(zf, prefix, universe, single, n_classes, key):
    base = _rows(zf, f"keel_ds/data/imbalanced/raw/{universe}.dat")
    keys = [key(v) for v, _ in base]
    multiplicity = collections.Counter(keys)
    everything = set(range(n_classes))
    candidates = [set(everything) for _ in keys]

    specs = [(name, everything - {c}, {c}) for name, c in single.items()]
    pattern = re.compile(prefix + r"-([\d-]+)_vs_([\d-]+)\.dat$")
    for member in zf.namelist():
        m = pattern.search(member)
        if not m or "/raw/" not in member:
            continue
        neg = {int(x) for x in m.group(1).split("-")}
        pos = {int(x) for x in m.group(2).split("-")}
        name = Path(member).stem
        if name in INVERTED:
            neg, pos = pos, neg
        specs.append((name, neg, pos))

    for name, neg, pos in specs:
        rows = _rows(zf, f"keel_ds/data/imbalanced/raw/{name}.dat")
        if key(rows[0][0]) is None:
            continue
        counts = collections.defaultdict(collections.Counter)
        for values, label in rows:
            counts[key(values)][label] += 1
        outside = everything - neg - pos
        for i, k in enumerate(keys):
            seen = counts.get(k)
            if seen is None:
                allowed = set(outside)
            else:
                allowed = set()
                if seen["negative"]:
                    allowed |= neg
                if seen["positive"]:
                    allowed |= pos
                if sum(seen.values()) < multiplicity[k]:
                    allowed |= outside
            candidates[i] &= allowed
    return base, candidates


def ecoli(zf):
    base, cand = _resolve(zf, "ecoli", "ecoli1", ECOLI_SINGLE, len(ECOLI_CLASSES), _ecoli_key)
    # rows come in UCI class-block order; block sizes settle the rows the
    # binarized files cannot separate (imS / imL / omL)
    sizes = [143, 77, 2, 2, 35, 20, 5, 52]
    labels = [c for c, n in enumerate(sizes) for _ in range(n)]
    for i, (c, allowed) in enumerate(zip(labels, cand)):
        if allowed and c not in allowed:
            raise SystemExit(f"ecoli row {i}: block class {c} contradicts {allowed}")
    return [v for v, _ in base], [ECOLI_CLASSES[c] for c in labels]


def yeast(zf):
    base, cand = _resolve(zf, "yeast", "yeast1", YEAST_SINGLE, len(YEAST_CLASSES), _yeast_key)
    labels = []
    for i, allowed in enumerate(cand):
        if len(allowed) == 1:
            labels.append(next(iter(allowed)))
        elif not allowed:
            # one CYT row was deduplicated out of yeast-2_vs_8
            labels.append(2)
        else:
            raise SystemExit(f"yeast row {i}: ambiguous classes {allowed}")
    counts = collections.Counter(labels)
    expected = [244, 429, 463, 44, 51, 163, 35, 30, 20, 5]
    if [counts[c] for c in range(10)] != expected:
        raise SystemExit(f"yeast class counts {counts} do not match UCI")
    return [v for v, _ in base], [YEAST_CLASSES[c] for c in labels]


def balanced(zf, name, label_names=None):
    rows = _rows(zf, f"keel_ds/data/balanced/raw/{name}.dat")
    labels = [label_names.get(lab, lab) if label_names else lab for _, lab in rows]
    return [v for v, _ in rows], labels


def write_csv(path: Path, features, labels) -> None:
    d = len(features[0])
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j + 1}" for j in range(d)] + ["label"])
        for row, lab in zip(features, labels):
            w.writerow([repr(v) if v != int(v) else str(int(v)) for v in row] + [lab])


def main(argv: list[str]) -> None:
    wheel, out = Path(argv[1]), Path(argv[2])
    out.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(wheel) as zf:
        tables = {
            "wine": balanced(zf, "wine"),
            "bc": balanced(zf, "wisconsin", {"2": "benign", "4": "malignant"}),
            "ecoli": ecoli(zf),
            "yeast": yeast(zf),
        }
    for name, (features, labels) in tables.items():
        write_csv(out / f"{name}.csv", features, labels)
        print(f"{name}: N={len(features)} d={len(features[0])} K={len(set(labels))}")


if __name__ == "__main__":
    main(sys.argv)
