"""Weighted phone-level edit distance between a wake word and a candidate.

The distance from a wake-word phone sequence to a candidate phone sequence
is the cheapest way to rewrite the wake word into the candidate using
substitutions, deletions, and insertions.  Each operation carries a global
scale factor and, in the advanced model, a per-phone weight estimated from
acoustic probe data.  The total cost is normalized by the wake word's phone
count, so the score is comparable across candidates of different lengths.

Three model variants share one implementation:

* ``unweighted`` -- every operation costs 1.
* ``simple`` -- per-operation scale factors, no per-phone weights.
* ``advanced`` -- scale factors multiplied by per-phone weight tables.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import EmptyWakeWord, NoPronunciation
from .lexicon import PhoneSeq, WakeWordSpec

__all__ = [
    "CostContext",
    "CostModel",
    "DistanceBreakdown",
    "ScaleFactors",
    "WeightTable",
    "align",
    "distance_to_wakeword",
]

log = logging.getLogger(__name__)

VARIANTS = ("unweighted", "simple", "advanced")

# Backtrack op codes, in tie-break priority order: a match beats a
# substitution, which beats a deletion, which beats an insertion.
_MATCH, _SUB, _DEL, _INS = 0, 1, 2, 3


@dataclass(frozen=True)
class ScaleFactors:
    """Global per-operation cost factors (substitute, delete, insert)."""

    s: float = 1.0
    d: float = 1.0
    i: float = 1.0

    def __post_init__(self):
        for name in ("s", "d", "i"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"scale factor {name}={value!r} must be finite and >= 0")


UNIT_SCALES = ScaleFactors(1.0, 1.0, 1.0)


@dataclass(frozen=True)
class WeightTable:
    """Phone-dependent operation weights for the advanced model.

    ``deletion`` and ``insertion`` map single phones to weights;
    ``substitution`` maps (wake phone, candidate phone) pairs.  Rows of the
    substitution table exist only for phones that occur in the configured
    wake words (``row_phones``); lookups outside the stored entries fall
    back to a neutral weight of 1 at scoring time.
    """

    deletion: dict[str, float]
    insertion: dict[str, float]
    substitution: dict[tuple[str, str], float]
    row_phones: frozenset[str] = frozenset()

    def validate(self, tolerance: float = 1e-9) -> None:
        """Check the normalization invariants of an estimated table.

        Deletion and insertion weights must be non-negative, finite, and
        average to 1 over their domain; every substitution row must average
        to 1 over its stored columns and never contain the diagonal.
        """
        from .errors import FormatError

        for name, mapping in (("deletion", self.deletion), ("insertion", self.insertion)):
            if not mapping:
                raise FormatError(f"{name} section is empty")
            values = list(mapping.values())
            if any(not math.isfinite(v) or v < 0 for v in values):
                raise FormatError(f"{name} weights must be finite and >= 0")
            mean = math.fsum(values) / len(values)
            if abs(mean - 1.0) > tolerance:
                raise FormatError(f"{name} weights have mean {mean!r}, expected 1.0")
        rows: dict[str, list[float]] = {}
        for (row, col), value in self.substitution.items():
            if row == col:
                raise FormatError(f"substitution table contains diagonal entry {row!r}")
            if not math.isfinite(value) or value < 0:
                raise FormatError(f"substitution weight {row}->{col} must be finite and >= 0")
            rows.setdefault(row, []).append(value)
        for row, values in rows.items():
            mean = math.fsum(values) / len(values)
            if abs(mean - 1.0) > tolerance:
                raise FormatError(
                    f"substitution row {row!r} has mean {mean!r}, expected 1.0"
                )


@dataclass(frozen=True)
class CostModel:
    """A fully specified distance model: variant, scales, optional weights."""

    variant: str
    scales: ScaleFactors = UNIT_SCALES
    table: WeightTable | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown model variant {self.variant!r}")
        if self.variant == "unweighted":
            if self.scales != UNIT_SCALES:
                raise ValueError("unweighted model requires unit scale factors")
            if self.table is not None:
                raise ValueError("unweighted model takes no weight table")
        if self.variant == "simple" and self.table is not None:
            raise ValueError("simple model takes no weight table")
        if self.variant == "advanced" and self.table is None:
            raise ValueError("advanced model requires a weight table")

    @classmethod
    def unweighted(cls) -> "CostModel":
        return cls("unweighted")

    @classmethod
    def simple(cls, scales: ScaleFactors) -> "CostModel":
        return cls("simple", scales)

    @classmethod
    def advanced(cls, scales: ScaleFactors, table: WeightTable) -> "CostModel":
        return cls("advanced", scales, table)


@dataclass
class DistanceBreakdown:
    """The score of one alignment plus everything needed to audit it.

    ``S``/``D``/``I`` are the weighted operation masses (sums of per-phone
    weights over the substituted/deleted/inserted positions); ``S_n``/
    ``D_n``/``I_n`` are the raw operation counts.  ``L`` is the normalized
    distance ``(s*S + d*D + i*I) / N`` where ``N`` is the wake word's phone
    count.  ``alignment`` lists the edit script as tuples shaped
    ``("match", p)``, ``("substitute", p, q)``, ``("delete", p)``,
    ``("insert", q)``; replaying it on the wake word yields the candidate.
    """

    L: float
    S: float
    D: float
    I: float
    S_n: int
    D_n: int
    I_n: int
    N: int
    alignment: list[tuple]


class CostContext:
    """Per-(wake word, model) scoring state reused across many candidates.

    Building a context precomputes scaled substitution rows and deletion
    costs for every wake-word position.  Missing advanced-table entries
    fall back to a neutral weight of 1 and are logged once per context.
    """

    __slots__ = (
        "wake", "model", "n", "_del_costs", "_del_weights", "_sub_rows",
        "_sub_weights", "_ins_costs", "_ins_weights", "_warned",
    )

    def __init__(self, wake: PhoneSeq, model: CostModel):
        if not wake:
            raise EmptyWakeWord("wake word has no phones")
        self.wake = tuple(wake)
        self.model = model
        self.n = len(wake)
        self._warned: set[tuple] = set()
        scales = model.scales
        advanced = model.variant == "advanced"
        table = model.table
        self._del_costs = []
        self._del_weights = []
        for p in self.wake:
            w = self._weight(table.deletion, p, "deletion") if advanced else 1.0
            self._del_weights.append(w)
            self._del_costs.append(scales.d * w)
        # One scaled-cost row per wake position; the diagonal entry is the
        # free match.  Rows fill lazily so only phones actually seen in
        # candidates are materialized.
        self._sub_rows: list[dict[str, float]] = [{p: 0.0} for p in self.wake]
        self._sub_weights: list[dict[str, float]] = [{p: 0.0} for p in self.wake]
        self._ins_costs: dict[str, float] = {}
        self._ins_weights: dict[str, float] = {}

    def _weight(self, mapping, key, kind) -> float:
        value = mapping.get(key)
        if value is None:
            if (kind, key) not in self._warned:
                self._warned.add((kind, key))
                log.warning("no %s weight for %r; falling back to 1.0", kind, key)
            return 1.0
        return value

    def _sub_cost(self, position: int, q: str) -> float:
        row = self._sub_rows[position]
        cost = row.get(q)
        if cost is None:
            p = self.wake[position]
            if self.model.variant == "advanced":
                w = self._weight(self.model.table.substitution, (p, q), "substitution")
            else:
                w = 1.0
            self._sub_weights[position][q] = w
            cost = row[q] = self.model.scales.s * w
        return cost

    def _ins_cost(self, q: str) -> float:
        cost = self._ins_costs.get(q)
        if cost is None:
            if self.model.variant == "advanced":
                w = self._weight(self.model.table.insertion, q, "insertion")
            else:
                w = 1.0
            self._ins_weights[q] = w
            cost = self._ins_costs[q] = self.model.scales.i * w
        return cost

    def cost(self, cand: PhoneSeq) -> float:
        """Unnormalized optimal rewrite cost (the distance is ``cost / n``).

        This is the value-only fast path used for bulk ranking; it performs
        the same arithmetic as :func:`align` and returns bit-identical
        totals.
        """
        ins_costs = [self._ins_cost(q) for q in cand]
        prev = [0.0] * (len(cand) + 1)
        acc = 0.0
        for j, c in enumerate(ins_costs, 1):
            acc += c
            prev[j] = acc
        for position in range(self.n):
            del_cost = self._del_costs[position]
            row = self._sub_rows[position]
            sub_cost = self._sub_cost
            cur = [prev[0] + del_cost]
            append = cur.append
            diag = prev[0]
            for j, q in enumerate(cand, 1):
                c = row.get(q)
                if c is None:
                    c = sub_cost(position, q)
                best = diag + c
                alt = prev[j] + del_cost
                if alt < best:
                    best = alt
                alt = cur[j - 1] + ins_costs[j - 1]
                if alt < best:
                    best = alt
                append(best)
                diag = prev[j]
            prev = cur
        return prev[-1]

    def best_cost(self, prons: Sequence[PhoneSeq]) -> float:
        """Minimum rewrite cost over a candidate's pronunciation variants."""
        if not prons:
            raise NoPronunciation("candidate has no pronunciations")
        return min(self.cost(p) for p in prons)


def align(wake: PhoneSeq, cand: PhoneSeq, model: CostModel) -> DistanceBreakdown:
    """Optimal edit script from ``wake`` to ``cand`` under ``model``.

    Dynamic program over prefix pairs; among equal-cost steps the
    tie-break prefers match over substitute over delete over insert, which
    makes the returned alignment deterministic.
    """
    ctx = CostContext(wake, model)
    return _align_in_context(ctx, cand)


def _align_in_context(ctx: CostContext, cand: PhoneSeq) -> DistanceBreakdown:
    n, m = ctx.n, len(cand)
    wake = ctx.wake
    ins_costs = [ctx._ins_cost(q) for q in cand]

    # Full cost/op matrices, row by row.
    cost = [[0.0] * (m + 1) for _ in range(n + 1)]
    ops = [[_INS] * (m + 1) for _ in range(n + 1)]
    acc = 0.0
    for j in range(1, m + 1):
        acc += ins_costs[j - 1]
        cost[0][j] = acc
    for i in range(1, n + 1):
        cost[i][0] = cost[i - 1][0] + ctx._del_costs[i - 1]
        ops[i][0] = _DEL
    for i in range(1, n + 1):
        p = wake[i - 1]
        del_cost = ctx._del_costs[i - 1]
        row_cost = cost[i]
        prev_cost = cost[i - 1]
        row_ops = ops[i]
        for j in range(1, m + 1):
            q = cand[j - 1]
            best = prev_cost[j - 1] + ctx._sub_cost(i - 1, q)
            op = _MATCH if p == q else _SUB
            alt = prev_cost[j] + del_cost
            if alt < best:
                best, op = alt, _DEL
            alt = row_cost[j - 1] + ins_costs[j - 1]
            if alt < best:
                best, op = alt, _INS
            row_cost[j] = best
            row_ops[j] = op

    # Backtrack the chosen script.
    steps: list[tuple] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i == 0:
            op = _INS
        elif j == 0:
            op = _DEL
        else:
            op = ops[i][j]
        if op == _MATCH:
            steps.append(("match", wake[i - 1]))
            i, j = i - 1, j - 1
        elif op == _SUB:
            steps.append(("substitute", wake[i - 1], cand[j - 1]))
            i, j = i - 1, j - 1
        elif op == _DEL:
            steps.append(("delete", wake[i - 1]))
            i -= 1
        else:
            steps.append(("insert", cand[j - 1]))
            j -= 1
    steps.reverse()

    sub_w: list[float] = []
    del_w: list[float] = []
    ins_w: list[float] = []
    i = j = 0
    for step in steps:
        kind = step[0]
        if kind == "match":
            i += 1
            j += 1
        elif kind == "substitute":
            sub_w.append(ctx._sub_weights[i][cand[j]])
            i += 1
            j += 1
        elif kind == "delete":
            del_w.append(ctx._del_weights[i])
            i += 1
        else:
            ins_w.append(ctx._ins_weights[cand[j]])
            j += 1
    return DistanceBreakdown(
        L=cost[n][m] / n,
        S=math.fsum(sub_w),
        D=math.fsum(del_w),
        I=math.fsum(ins_w),
        S_n=len(sub_w),
        D_n=len(del_w),
        I_n=len(ins_w),
        N=n,
        alignment=steps,
    )


def distance_to_wakeword(
    wake: WakeWordSpec,
    cand_prons: Sequence[PhoneSeq],
    model: CostModel,
) -> DistanceBreakdown:
    """Best-variant distance: the minimum over a candidate's pronunciations.

    Ties keep the lowest variant index.
    """
    if not cand_prons:
        raise NoPronunciation(f"no pronunciations to score against {wake.id!r}")
    ctx = CostContext(wake.phones, model)
    best: DistanceBreakdown | None = None
    for pron in cand_prons:
        breakdown = _align_in_context(ctx, pron)
        if best is None or breakdown.L < best.L:
            best = breakdown
    return best
