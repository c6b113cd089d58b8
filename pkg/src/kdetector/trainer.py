"""Training data construction and coefficient tuning.

Historical failure records are grouped by following their ``dupe_of``
links with a union-find pass; within-group dump pairs become positive
samples and cross-group pairs that share a top-of-stack component are
sampled (without replacement, up to the positive count) as hard negatives.
Coefficients are tuned by exhaustive AUC grid search over
``m, n in {0.0, 0.1, ..., 2.0}``, keeping the first grid point that
attains the maximum, and the decision threshold is the smallest value
maximizing F1 on the training scores.
"""

from __future__ import annotations

import datetime
import itertools
import json
import logging
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import DegenerateSet
from .sequencer import ComponentSequence
from .similarity import ModelParams, PairFeatures, match_features, score_features

logger = logging.getLogger(__name__)

DUPLICATE = "duplicate"
NON_DUPLICATE = "non-duplicate"

GRID_STEPS = 21  # 0.0 .. 2.0 in exact tenths


@dataclass
class FailureRecord:
    """One historical crash failure as tracked in the bug store."""

    bug_id: int
    dump_id: str
    resolution: str
    creation_time: datetime.datetime
    dupe_of: int | None
    top_component: str
    dump_path: str = ""

    def __post_init__(self) -> None:
        if self.dupe_of == self.bug_id:
            raise ValueError(f"bug {self.bug_id} cannot be a duplicate of itself")


@dataclass(frozen=True)
class LabeledPair:
    """An unordered dump pair with a duplicate / non-duplicate label."""

    dump_id_a: str
    dump_id_b: str
    label: str

    def __post_init__(self) -> None:
        if self.dump_id_a == self.dump_id_b:
            raise ValueError("a pair needs two distinct dumps")
        if self.label not in (DUPLICATE, NON_DUPLICATE):
            raise ValueError(f"unknown label {self.label!r}")
        if self.dump_id_b < self.dump_id_a:
            a, b = self.dump_id_b, self.dump_id_a
            object.__setattr__(self, "dump_id_a", a)
            object.__setattr__(self, "dump_id_b", b)


class UnionFind:
    """Disjoint sets over arbitrary hashable items, with path compression."""

    def __init__(self) -> None:
        self.parent: dict = {}

    def add(self, item) -> None:
        self.parent.setdefault(item, item)

    def find(self, item):
        self.add(item)
        root = item
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[item] != root:
            self.parent[item], item = root, self.parent[item]
        return root

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra

    def groups(self) -> list[set]:
        by_root: dict = {}
        for item in self.parent:
            by_root.setdefault(self.find(item), set()).add(item)
        return sorted(by_root.values(), key=lambda g: min(g))


def build_groups(
    records: Sequence[FailureRecord],
) -> tuple[list[set[int]], list[tuple[int, int]]]:
    """Union-find partition of bug ids along dupe_of edges.

    Returns the groups (sorted by their smallest bug id) and the dangling
    edges whose dupe_of names a bug that is not in the record set; those
    edges are skipped, not fatal.
    """
    uf = UnionFind()
    known = {record.bug_id for record in records}
    dangling: list[tuple[int, int]] = []
    for record in records:
        uf.add(record.bug_id)
        if record.dupe_of is None:
            continue
        if record.dupe_of not in known:
            dangling.append((record.bug_id, record.dupe_of))
            continue
        uf.union(record.bug_id, record.dupe_of)
    return uf.groups(), dangling


def sample_pairs(
    groups: list[set[int]],
    records: Sequence[FailureRecord],
    rng: random.Random | None = None,
    require_same_top: bool = True,
) -> list[LabeledPair]:
    """Positive pairs from within groups, hard negatives from across them.

    Negatives are drawn uniformly without replacement from cross-group
    pairs whose records share a top component (any cross-group pair with
    ``require_same_top=False``), until they balance the positives; when
    fewer candidates exist, all of them are returned and a warning is
    logged.
    """
    rng = rng or random.Random(0)
    by_bug = {record.bug_id: record for record in records}
    positives: list[LabeledPair] = []
    group_of: dict[int, int] = {}
    for idx, group in enumerate(groups):
        members = sorted(group)
        for bug in members:
            group_of[bug] = idx
        for a, b in itertools.combinations(members, 2):
            positives.append(
                LabeledPair(by_bug[a].dump_id, by_bug[b].dump_id, DUPLICATE)
            )
    ordered = sorted(records, key=lambda r: r.bug_id)
    candidates: list[LabeledPair] = []
    for a, b in itertools.combinations(ordered, 2):
        if group_of[a.bug_id] == group_of[b.bug_id]:
            continue
        if not require_same_top or a.top_component == b.top_component:
            candidates.append(LabeledPair(a.dump_id, b.dump_id, NON_DUPLICATE))
    if len(candidates) < len(positives):
        logger.warning(
            "insufficient negatives: %d candidates for %d positives",
            len(candidates),
            len(positives),
        )
        negatives = candidates
    else:
        negatives = rng.sample(candidates, len(positives))
    return positives + negatives


def split_pairs_by_group(
    pairs: Sequence[LabeledPair],
    records: Sequence[FailureRecord],
    groups: list[set[int]],
    ratio: float = 0.5,
    rng: random.Random | None = None,
) -> tuple[list[LabeledPair], list[LabeledPair]]:
    """Group-stratified train/test split; a group never spans both sides.

    Groups are dealt randomly to the training side until it holds roughly
    ``ratio`` of the within-group pair mass. Pairs whose two endpoints fall
    on different sides are dropped to prevent leakage.
    """
    rng = rng or random.Random(0)
    group_by_dump: dict[str, int] = {}
    by_bug = {record.bug_id: record for record in records}
    weights: list[int] = []
    for idx, group in enumerate(groups):
        for bug in group:
            group_by_dump[by_bug[bug].dump_id] = idx
        k = len(group)
        weights.append(k * (k - 1) // 2)
    order = list(range(len(groups)))
    rng.shuffle(order)
    total = sum(weights) or 1
    train_groups: set[int] = set()
    assigned = 0
    for idx in order:
        if assigned / total < ratio:
            train_groups.add(idx)
            assigned += weights[idx]
    train: list[LabeledPair] = []
    test: list[LabeledPair] = []
    for pair in pairs:
        ga = group_by_dump[pair.dump_id_a]
        gb = group_by_dump[pair.dump_id_b]
        if ga in train_groups and gb in train_groups:
            train.append(pair)
        elif ga not in train_groups and gb not in train_groups:
            test.append(pair)
    return train, test


def compute_auc(scored: Iterable[tuple[float, str]]) -> float:
    """ROC AUC by the rank statistic; tied scores contribute one half."""
    items = list(scored)
    positives = sum(1 for _, label in items if label == DUPLICATE)
    negatives = len(items) - positives
    if positives == 0 or negatives == 0:
        raise DegenerateSet("AUC needs at least one positive and one negative")
    items.sort(key=lambda it: it[0])
    rank_sum = 0.0
    i = 0
    while i < len(items):
        j = i
        while j < len(items) and items[j][0] == items[i][0]:
            j += 1
        avg_rank = (i + 1 + j) / 2  # average of ranks i+1 .. j
        rank_sum += avg_rank * sum(
            1 for k in range(i, j) if items[k][1] == DUPLICATE
        )
        i = j
    u_stat = rank_sum - positives * (positives + 1) / 2
    return u_stat / (positives * negatives)


def pair_features(
    pairs: Sequence[LabeledPair], sequences: Mapping[str, ComponentSequence]
) -> list[tuple[PairFeatures, str]]:
    """Precompute the (m, n)-independent match features for every pair."""
    out = []
    for pair in pairs:
        features = match_features(sequences[pair.dump_id_a], sequences[pair.dump_id_b])
        out.append((features, pair.label))
    return out


def score_pairs(
    pairs: Sequence[LabeledPair],
    sequences: Mapping[str, ComponentSequence],
    params: ModelParams,
) -> list[tuple[float, str]]:
    return [
        (score_features(features, params), label)
        for features, label in pair_features(pairs, sequences)
    ]


@dataclass
class TuningResult:
    params: ModelParams
    best_auc: float
    grid: list[tuple[float, float, float]] = field(repr=False)


def tune_parameters(
    pairs: Sequence[LabeledPair], sequences: Mapping[str, ComponentSequence]
) -> TuningResult:
    """Exhaustive AUC grid search over the 21x21 coefficient grid.

    Scans row-major with m outer; only a strictly better AUC displaces the
    incumbent, so the first grid point attaining the maximum wins. Grid
    values are built as i/10 to keep them exact. The returned params carry
    the F1-optimal threshold at the tuned coefficients.
    """
    featured = pair_features(pairs, sequences)
    grid: list[tuple[float, float, float]] = []
    best_auc = -1.0
    best_m = best_n = 0.0
    for mi in range(GRID_STEPS):
        m = mi / 10
        for ni in range(GRID_STEPS):
            n = ni / 10
            params = ModelParams(m, n)
            auc = compute_auc(
                (score_features(features, params), label)
                for features, label in featured
            )
            grid.append((m, n, auc))
            if auc > best_auc:
                best_auc = auc
                best_m, best_n = m, n
    scored = [
        (score_features(features, ModelParams(best_m, best_n)), label)
        for features, label in featured
    ]
    threshold = best_f1_threshold(scored)
    return TuningResult(ModelParams(best_m, best_n, threshold), best_auc, grid)


def best_f1_threshold(scored: Sequence[tuple[float, str]]) -> float:
    """Smallest threshold maximizing F1 for ``predict duplicate iff
    score >= threshold``; perfectly separated scores therefore yield the
    midpoint of the separating gap."""
    positives = sum(1 for _, label in scored if label == DUPLICATE)
    if positives == 0 or positives == len(scored):
        raise DegenerateSet("threshold selection needs both classes")
    distinct = sorted({score for score, _ in scored})
    candidates = sorted(
        set(distinct).union(
            (a + b) / 2 for a, b in zip(distinct, distinct[1:])
        )
    )
    best_t = candidates[0]
    best_f1 = -1.0
    for t in candidates:
        tp = sum(1 for s, label in scored if s >= t and label == DUPLICATE)
        fp = sum(1 for s, label in scored if s >= t and label == NON_DUPLICATE)
        fn = positives - tp
        f1 = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
        if f1 > best_f1:
            best_f1 = f1
            best_t = t
    return best_t


def select_threshold(
    pairs: Sequence[LabeledPair],
    sequences: Mapping[str, ComponentSequence],
    params: ModelParams,
) -> float:
    """F1-optimal cutoff for tuned coefficients on a training set."""
    return best_f1_threshold(score_pairs(pairs, sequences, params))


# --- file formats -----------------------------------------------------------

def format_pairs(pairs: Sequence[LabeledPair]) -> str:
    lines = [f"{p.dump_id_a}\t{p.dump_id_b}\t{p.label}" for p in pairs]
    return "\n".join(lines) + "\n"


def parse_pairs(text: str) -> list[LabeledPair]:
    pairs = []
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        a, b, label = line.split("\t")
        pairs.append(LabeledPair(a, b, label))
    return pairs


def format_params(params: ModelParams) -> str:
    return f"#version 1\nm={params.m!r} n={params.n!r} threshold={params.threshold!r}\n"


def parse_params(text: str) -> ModelParams:
    fields: dict[str, float] = {}
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        for token in line.split():
            key, _, value = token.partition("=")
            fields[key] = float(value)
    return ModelParams(fields["m"], fields["n"], fields.get("threshold", 0.5))


def format_grid_report(result: TuningResult) -> str:
    lines = [f"{m:.1f}\t{n:.1f}\t{auc:.6f}" for m, n, auc in result.grid]
    lines.append(
        f"# best m={result.params.m:.1f} n={result.params.n:.1f} "
        f"auc={result.best_auc:.6f}"
    )
    return "\n".join(lines) + "\n"


def record_to_json(record: FailureRecord) -> str:
    return json.dumps(
        {
            "bug_id": record.bug_id,
            "dump_id": record.dump_id,
            "resolution": record.resolution,
            "creation_time": record.creation_time.isoformat(),
            "dupe_of": record.dupe_of,
            "top_component": record.top_component,
            "dump_path": record.dump_path,
        },
        sort_keys=True,
    )


def record_from_json(line: str) -> FailureRecord:
    data = json.loads(line)
    return FailureRecord(
        bug_id=int(data["bug_id"]),
        dump_id=data["dump_id"],
        resolution=data.get("resolution", ""),
        creation_time=datetime.datetime.fromisoformat(data["creation_time"]),
        dupe_of=data.get("dupe_of"),
        top_component=data.get("top_component", ""),
        dump_path=data.get("dump_path", ""),
    )
