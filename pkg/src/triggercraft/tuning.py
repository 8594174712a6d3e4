"""Rank-based tuning of the per-operation scale factors.

The objective is built from ranks, not raw distances: for a labeled trigger
we ask where it would place in a full ranking of the vocabulary against its
wake word (competition ranking -- tied candidates share the smallest rank).
A grid point is scored by the worst trigger rank per wake word, summed over
wake words; grid search returns the point minimizing that sum, breaking
ties toward the lexicographically smallest (s, d, i).

The grid evaluator runs the edit-distance dynamic program over all grid
points at once (one numpy vector per cell), which keeps exhaustive grids
practical while performing exactly the same float arithmetic as the scalar
scorer.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .candidates import Candidate, normalize_label, rank_candidates
from .distance import CostContext, CostModel, ScaleFactors, WeightTable
from .errors import (
    NoTriggers,
    ParseError,
    TooFewFolds,
    UnknownLabel,
    UnknownWakeWord,
)
from .lexicon import PhoneSeq, WakeWordSpec

__all__ = [
    "Grid",
    "LabeledTrigger",
    "TuningResult",
    "best_achievable_rank",
    "cross_validate",
    "filter_triggers",
    "format_tuning_report",
    "grid_search",
    "load_trigger_labels",
    "rank_of",
]

log = logging.getLogger(__name__)

_TRIGGER_HEADER = ["wake_id", "trigger_label", "times_triggered"]


@dataclass(frozen=True)
class LabeledTrigger:
    """A phrase observed to trigger a wake word, with an optional count."""

    wake_id: str
    trigger_label: str
    times_triggered: int | None = None


def load_trigger_labels(lines: Iterable[str]) -> list[LabeledTrigger]:
    """Parse the tab-separated trigger-label format (header required)."""
    triggers = []
    lineiter = enumerate(lines, 1)
    for lineno, raw in lineiter:
        header = raw.rstrip("\n")
        if not header.strip():
            continue
        if header.split("\t") != _TRIGGER_HEADER:
            raise ParseError(f"bad trigger-label header {header!r}", lineno)
        break
    else:
        raise ParseError("empty trigger-label file")
    for lineno, raw in lineiter:
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) not in (2, 3):
            raise ParseError(f"expected 2 or 3 tab-separated fields, got {len(parts)}", lineno)
        times: int | None = None
        if len(parts) == 3 and parts[2].strip():
            try:
                times = int(parts[2])
            except ValueError:
                raise ParseError(f"bad times_triggered {parts[2]!r}", lineno) from None
        triggers.append(
            LabeledTrigger(
                wake_id=parts[0].strip(),
                trigger_label=normalize_label(parts[1]),
                times_triggered=times,
            )
        )
    return triggers


@dataclass(frozen=True)
class Grid:
    """An inclusive search grid over the three scale factors."""

    lo: tuple[float, float, float] = (0.0, 0.0, 0.0)
    hi: tuple[float, float, float] = (1.0, 1.0, 1.0)
    step: tuple[float, float, float] = (0.05, 0.05, 0.05)

    @classmethod
    def uniform(cls, lo: float, hi: float, step: float) -> "Grid":
        return cls((lo,) * 3, (hi,) * 3, (step,) * 3)

    @classmethod
    def default(cls) -> "Grid":
        """The standard [0, 1] grid with step 0.05 (21 values per axis)."""
        return cls.uniform(0.0, 1.0, 0.05)

    @classmethod
    def extended(cls) -> "Grid":
        """A wider [0, 1.5] grid for optima that sit past 1."""
        return cls.uniform(0.0, 1.5, 0.05)

    def axis_values(self, axis: int) -> list[float]:
        lo, hi, step = self.lo[axis], self.hi[axis], self.step[axis]
        if step <= 0 or hi < lo:
            raise ValueError(f"bad grid axis: lo={lo} hi={hi} step={step}")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [round(lo + k * step, 12) for k in range(count)]

    def point_count(self) -> int:
        return (
            len(self.axis_values(0)) * len(self.axis_values(1)) * len(self.axis_values(2))
        )

    def points(self) -> Iterable[ScaleFactors]:
        """All grid points in lexicographic (s, d, i) order."""
        for s in self.axis_values(0):
            for d in self.axis_values(1):
                for i in self.axis_values(2):
                    yield ScaleFactors(s, d, i)


@dataclass
class TuningResult:
    best: ScaleFactors
    objective: int
    per_wake_worst_rank: dict[str, int]
    grid_points_evaluated: int


def rank_of(
    label: str,
    vocab: Sequence[Candidate],
    wake: WakeWordSpec,
    model: CostModel,
) -> int:
    """Competition rank of ``label`` in a full ranking of ``vocab``.

    Rank 1 + (number of candidates strictly closer); tied candidates share
    the same rank.  Raises :class:`UnknownLabel` when the label is absent.
    """
    wanted = normalize_label(label)
    ctx = CostContext(wake.phones, model)
    costs = []
    target = None
    for cand in vocab:
        cost = ctx.best_cost(cand.prons)
        costs.append(cost)
        if target is None and normalize_label(cand.label) == wanted:
            target = cost
    if target is None:
        raise UnknownLabel(f"label {label!r} not in vocabulary")
    return 1 + sum(1 for c in costs if c < target)


# ---------------------------------------------------------------------------
# Vectorized evaluation over a whole grid.


def _grid_arrays(grid: Grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    s_axis = np.asarray(grid.axis_values(0))
    d_axis = np.asarray(grid.axis_values(1))
    i_axis = np.asarray(grid.axis_values(2))
    n_d, n_i = len(d_axis), len(i_axis)
    s_arr = np.repeat(s_axis, n_d * n_i)
    d_arr = np.tile(np.repeat(d_axis, n_i), len(s_axis))
    i_arr = np.tile(i_axis, len(s_axis) * n_d)
    return s_arr, d_arr, i_arr


class _GridScorer:
    """Rewrite costs for one wake word at every grid point simultaneously."""

    def __init__(
        self,
        wake: PhoneSeq,
        table: WeightTable | None,
        s_arr: np.ndarray,
        d_arr: np.ndarray,
        i_arr: np.ndarray,
    ):
        self.wake = tuple(wake)
        self.table = table
        self.s_arr = s_arr
        self.d_arr = d_arr
        self.i_arr = i_arr
        deletion = table.deletion if table else {}
        self.del_vecs = [d_arr * deletion.get(p, 1.0) for p in self.wake]
        self._sub_vecs: dict[tuple[int, str], np.ndarray] = {}
        self._ins_vecs: dict[str, np.ndarray] = {}

    def _sub_vec(self, position: int, q: str) -> np.ndarray | None:
        p = self.wake[position]
        if p == q:
            return None  # match: no cost added
        key = (position, q)
        vec = self._sub_vecs.get(key)
        if vec is None:
            w = self.table.substitution.get((p, q), 1.0) if self.table else 1.0
            vec = self._sub_vecs[key] = self.s_arr * w
        return vec

    def _ins_vec(self, q: str) -> np.ndarray:
        vec = self._ins_vecs.get(q)
        if vec is None:
            w = self.table.insertion.get(q, 1.0) if self.table else 1.0
            vec = self._ins_vecs[q] = self.i_arr * w
        return vec

    def cost(self, cand: PhoneSeq) -> np.ndarray:
        ins_vecs = [self._ins_vec(q) for q in cand]
        prev: list[np.ndarray] = [np.zeros_like(self.s_arr)]
        for vec in ins_vecs:
            prev.append(prev[-1] + vec)
        for position in range(len(self.wake)):
            del_vec = self.del_vecs[position]
            cur = [prev[0] + del_vec]
            for j, q in enumerate(cand, 1):
                sub = self._sub_vec(position, q)
                diag = prev[j - 1] if sub is None else prev[j - 1] + sub
                cell = np.minimum(diag, prev[j] + del_vec)
                np.minimum(cell, cur[j - 1] + ins_vecs[j - 1], out=cell)
                cur.append(cell)
            prev = cur
        return prev[-1]

    def best_cost(self, prons: Sequence[PhoneSeq]) -> np.ndarray:
        best = self.cost(prons[0])
        for pron in prons[1:]:
            best = np.minimum(best, self.cost(pron))
        return best


def _exclusions(wake: WakeWordSpec, extra: Iterable[str] = ()) -> set[str]:
    blocked = {normalize_label(wake.text)}
    blocked.update(normalize_label(b) for b in wake.explicit_blocklist)
    blocked.update(normalize_label(b) for b in extra)
    return blocked


def _rank_vectors_for_wake(
    wake: WakeWordSpec,
    vocab: Sequence[Candidate],
    labels: Sequence[str],
    grid: Grid,
    table: WeightTable | None,
    extra_blocked: Iterable[str] = (),
) -> dict[str, np.ndarray]:
    """label -> competition rank at every grid point (lexicographic order)."""
    labels = [normalize_label(lbl) for lbl in labels]
    s_arr, d_arr, i_arr = _grid_arrays(grid)
    scorer = _GridScorer(wake.phones, table, s_arr, d_arr, i_arr)
    blocked = _exclusions(wake, extra_blocked)
    kept = [c for c in vocab if normalize_label(c.label) not in blocked]
    by_label: dict[str, np.ndarray] = {}
    for cand in kept:
        key = normalize_label(cand.label)
        if key in labels and key not in by_label:
            by_label[key] = scorer.best_cost(cand.prons)
    missing = [lbl for lbl in labels if lbl not in by_label]
    if missing:
        raise UnknownLabel(f"labels not in vocabulary for {wake.id!r}: {sorted(set(missing))}")
    counts = {lbl: np.zeros(len(s_arr), dtype=np.int64) for lbl in by_label}
    for cand in kept:
        cost = scorer.best_cost(cand.prons)
        for lbl, target in by_label.items():
            counts[lbl] += cost < target
    return {lbl: counts[lbl] + 1 for lbl in counts}


def _wake_map(wakes: Sequence[WakeWordSpec]) -> dict[str, WakeWordSpec]:
    return {w.id: w for w in wakes}


def _variant_table(variant: str, table: WeightTable | None) -> WeightTable | None:
    if variant == "advanced":
        if table is None:
            raise ValueError("advanced tuning requires a weight table")
        return table
    return None


def grid_search(
    triggers: Sequence[LabeledTrigger],
    vocab: Sequence[Candidate],
    wakes: Sequence[WakeWordSpec],
    grid: Grid,
    variant: str = "simple",
    table: WeightTable | None = None,
    blocklists: Mapping[str, Iterable[str]] | None = None,
) -> TuningResult:
    """Exhaustive search for the scale factors with the best rank objective."""
    if not triggers:
        raise NoTriggers("no triggers to tune on")
    table = _variant_table(variant, table)
    wake_map = _wake_map(wakes)
    blocklists = blocklists or {}
    by_wake: dict[str, list[str]] = {}
    for trigger in triggers:
        if trigger.wake_id not in wake_map:
            raise UnknownWakeWord(f"no wake word configured for id {trigger.wake_id!r}")
        by_wake.setdefault(trigger.wake_id, []).append(normalize_label(trigger.trigger_label))

    grid_size = grid.point_count()
    objective = np.zeros(grid_size, dtype=np.int64)
    worst_vecs: dict[str, np.ndarray] = {}
    for wake_id, labels in by_wake.items():
        ranks = _rank_vectors_for_wake(
            wake_map[wake_id], vocab, labels, grid, table,
            extra_blocked=blocklists.get(wake_id, ()),
        )
        worst = ranks[labels[0]].copy()
        for lbl in labels[1:]:
            np.maximum(worst, ranks[lbl], out=worst)
        worst_vecs[wake_id] = worst
        objective += worst

    best_idx = int(np.argmin(objective))  # first occurrence = lexicographic tie-break
    s_arr, d_arr, i_arr = _grid_arrays(grid)
    best = ScaleFactors(float(s_arr[best_idx]), float(d_arr[best_idx]), float(i_arr[best_idx]))
    return TuningResult(
        best=best,
        objective=int(objective[best_idx]),
        per_wake_worst_rank={w: int(v[best_idx]) for w, v in worst_vecs.items()},
        grid_points_evaluated=grid_size,
    )


def best_achievable_rank(
    trigger: LabeledTrigger,
    vocab: Sequence[Candidate],
    wake: WakeWordSpec,
    grid: Grid,
    variant: str = "simple",
    table: WeightTable | None = None,
    blocklist: Iterable[str] = (),
) -> int:
    """The best rank ``trigger`` reaches at any point of ``grid``."""
    table = _variant_table(variant, table)
    label = normalize_label(trigger.trigger_label)
    ranks = _rank_vectors_for_wake(wake, vocab, [label], grid, table, extra_blocked=blocklist)
    return int(ranks[label].min())


def filter_triggers(
    triggers: Sequence[LabeledTrigger],
    vocab: Sequence[Candidate],
    wakes: Sequence[WakeWordSpec],
    grid: Grid,
    threshold: int = 500,
    variant: str = "simple",
    table: WeightTable | None = None,
    blocklists: Mapping[str, Iterable[str]] | None = None,
) -> list[LabeledTrigger]:
    """Keep triggers the model can rank at or under ``threshold`` somewhere
    on the grid; order is preserved."""
    table = _variant_table(variant, table)
    wake_map = _wake_map(wakes)
    blocklists = blocklists or {}
    by_wake: dict[str, list[str]] = {}
    for trigger in triggers:
        if trigger.wake_id not in wake_map:
            raise UnknownWakeWord(f"no wake word configured for id {trigger.wake_id!r}")
        by_wake.setdefault(trigger.wake_id, []).append(normalize_label(trigger.trigger_label))
    best: dict[tuple[str, str], int] = {}
    for wake_id, labels in by_wake.items():
        ranks = _rank_vectors_for_wake(
            wake_map[wake_id], vocab, labels, grid, table,
            extra_blocked=blocklists.get(wake_id, ()),
        )
        for lbl, vec in ranks.items():
            best[(wake_id, lbl)] = int(vec.min())
    kept = [
        t
        for t in triggers
        if best[(t.wake_id, normalize_label(t.trigger_label))] <= threshold
    ]
    if len(kept) < len(triggers):
        log.info(
            "trigger filter kept %d of %d triggers (threshold %s)",
            len(kept), len(triggers), threshold,
        )
    return kept


def cross_validate(
    per_wake_triggers: Mapping[str, Sequence[LabeledTrigger]],
    vocab: Sequence[Candidate],
    wakes: Sequence[WakeWordSpec],
    grid: Grid,
    variant: str = "simple",
    table: WeightTable | None = None,
    k: int = 100,
    seed: int = 0,
    blocklists: Mapping[str, Iterable[str]] | None = None,
) -> dict[str, int]:
    """Leave-one-wake-out evaluation: tune on the others, count hits.

    For each wake word, scale factors are tuned on every *other* wake
    word's triggers, the held-out wake word's vocabulary is ranked top-``k``
    with those factors, and the result counts how many of its triggers made
    the list.  The unweighted variant skips tuning (it has no parameters).
    """
    if len(per_wake_triggers) < 2:
        raise TooFewFolds("cross-validation needs at least two wake words")
    wake_map = _wake_map(wakes)
    blocklists = blocklists or {}
    hits: dict[str, int] = {}
    for fold, wake_id in enumerate(per_wake_triggers):
        if wake_id not in wake_map:
            raise UnknownWakeWord(f"no wake word configured for id {wake_id!r}")
        held_out = per_wake_triggers[wake_id]
        training = [
            t
            for other, ts in per_wake_triggers.items()
            if other != wake_id
            for t in ts
        ]
        if variant == "unweighted":
            model = CostModel.unweighted()
        else:
            tuned = grid_search(training, vocab, wakes, grid, variant, table, blocklists)
            if variant == "advanced":
                model = CostModel.advanced(tuned.best, table)
            else:
                model = CostModel.simple(tuned.best)
        ranked = rank_candidates(
            vocab, wake_map[wake_id], model, k, seed + fold,
            blocklist=blocklists.get(wake_id, ()),
        )
        top = {normalize_label(item.candidate.label) for item in ranked.items}
        hits[wake_id] = sum(1 for t in held_out if normalize_label(t.trigger_label) in top)
    return hits


def format_tuning_report(
    result: TuningResult,
    cross_validation: Mapping[str, int] | None = None,
    filtered: tuple[int, int] | None = None,
) -> str:
    """Human-readable tab-separated tuning report."""
    lines = [
        f"grid_points_evaluated\t{result.grid_points_evaluated}",
        f"best_scales\ts={result.best.s:g}\td={result.best.d:g}\ti={result.best.i:g}",
        f"objective\t{result.objective}",
        "[per_wake_worst_rank]",
    ]
    for wake_id in sorted(result.per_wake_worst_rank):
        lines.append(f"{wake_id}\t{result.per_wake_worst_rank[wake_id]}")
    if filtered is not None:
        lines.append("[trigger_filter]")
        lines.append(f"kept\t{filtered[0]}\tof\t{filtered[1]}")
    if cross_validation is not None:
        lines.append("[cross_validation_hits]")
        for wake_id in sorted(cross_validation):
            lines.append(f"{wake_id}\t{cross_validation[wake_id]}")
    return "\n".join(lines) + "\n"
