"""Candidate generation, ranking, and synthesis-manifest export.

Candidates come from two sources: whole dictionary words, and 1/2/3-grams
pulled from subtitle-style transcripts.  Ranking computes each candidate's
distance to a wake word and keeps the top K, with a seeded draw to resolve
candidates tied at the cut-off so the list size is exact and reproducible.
"""

from __future__ import annotations

import logging
import random
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .distance import CostContext, CostModel, DistanceBreakdown, distance_to_wakeword
from .errors import ConfigError, EmptyVocabulary, OutOfVocabulary
from .lexicon import PhoneSeq, PronouncingDictionary, WakeWordSpec, phrase_phones

__all__ = [
    "Candidate",
    "DEFAULT_VOICES",
    "ManifestEntry",
    "RankedItem",
    "RankedList",
    "SynthesisManifest",
    "Voice",
    "build_blocklist",
    "dictionary_candidates",
    "export_manifest",
    "extract_ngrams",
    "rank_candidates",
]

log = logging.getLogger(__name__)

_TOKEN_PATTERN = re.compile(r"[a-z']+")
_SLUG_PATTERN = re.compile(r"[^a-z0-9]+")


@dataclass(frozen=True)
class Candidate:
    """A rankable phrase: its display label and pronunciation variants."""

    label: str
    prons: tuple[PhoneSeq, ...]
    source: str = "dictionary"  # "dictionary" or "<n>-gram"
    count: int = 1  # occurrences in the source corpus

    def __post_init__(self):
        if not self.prons:
            raise ValueError(f"candidate {self.label!r} has no pronunciations")


def normalize_label(label: str) -> str:
    return " ".join(label.lower().split())


def dictionary_candidates(dictionary: PronouncingDictionary) -> list[Candidate]:
    """One candidate per dictionary word, with all its variants."""
    return [
        Candidate(
            label=word.lower(),
            prons=tuple(v.phones for v in dictionary.lookup(word)),
            source="dictionary",
        )
        for word in dictionary.words()
    ]


def _is_contiguous_subsequence(needle: PhoneSeq, haystack: PhoneSeq) -> bool:
    k = len(needle)
    if k > len(haystack):
        return False
    return any(haystack[i : i + k] == needle for i in range(len(haystack) - k + 1))


def build_blocklist(
    wake: WakeWordSpec,
    dictionary: PronouncingDictionary,
) -> set[str]:
    """Labels that must never appear in a ranked list for ``wake``.

    The wake word's own text and its explicitly configured labels are
    always blocked, plus every dictionary word with a pronunciation that is
    a contiguous run of the wake word's phones (such words are the wake
    word, or a piece of it, by sound).
    """
    blocked = {normalize_label(wake.text)}
    blocked.update(normalize_label(b) for b in wake.explicit_blocklist)
    for word in dictionary.words():
        for variant in dictionary.lookup(word):
            if _is_contiguous_subsequence(variant.phones, wake.phones):
                blocked.add(normalize_label(word))
                break
    return blocked


@dataclass(frozen=True)
class RankedItem:
    rank: int
    candidate: Candidate
    distance: float
    breakdown: DistanceBreakdown


@dataclass
class RankedList:
    """Top-K candidates for one wake word under one model."""

    wake: WakeWordSpec
    model: CostModel
    k: int
    seed: int
    items: list[RankedItem]
    boundary_pool_size: int


def _chunk_costs(args):
    wake_phones, model, prons_batch = args
    ctx = CostContext(wake_phones, model)
    return [ctx.best_cost(prons) for prons in prons_batch]


def _candidate_costs(
    wake: WakeWordSpec,
    model: CostModel,
    vocab: Sequence[Candidate],
    workers: int,
) -> list[float]:
    if workers <= 1 or len(vocab) < 2 * workers:
        ctx = CostContext(wake.phones, model)
        return [ctx.best_cost(c.prons) for c in vocab]
    chunk = (len(vocab) + workers - 1) // workers
    batches = [
        (wake.phones, model, [c.prons for c in vocab[start : start + chunk]])
        for start in range(0, len(vocab), chunk)
    ]
    costs: list[float] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_chunk_costs, batches):
            costs.extend(part)
    return costs


def rank_candidates(
    vocab: Sequence[Candidate],
    wake: WakeWordSpec,
    model: CostModel,
    k: int,
    seed: int,
    blocklist: Iterable[str] = (),
    workers: int = 1,
) -> RankedList:
    """The K nearest candidates to ``wake``, deterministically.

    Candidates whose cost is strictly below the K-th smallest make the list
    outright; the remaining slots are filled by a seeded uniform draw
    (without replacement) from the candidates tied exactly at that boundary
    cost.  ``boundary_pool_size`` records the size of the tie pool a random
    draw selected from, and is 0 whenever no randomness was involved (list
    not truncated, or the boundary ties exactly fill the open slots).
    Output is byte-stable for a given seed, and lists produced with
    different seeds can differ only inside the tie pool.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    blocked = {normalize_label(b) for b in blocklist}
    blocked.add(normalize_label(wake.text))
    blocked.update(normalize_label(b) for b in wake.explicit_blocklist)
    kept = [c for c in vocab if normalize_label(c.label) not in blocked]
    if not kept:
        raise EmptyVocabulary(f"no candidates left for {wake.id!r} after blocklist filtering")

    costs = _candidate_costs(wake, model, kept, workers)
    order = sorted(range(len(kept)), key=lambda idx: (costs[idx], kept[idx].label, idx))
    if len(kept) <= k:
        selected = order
        pool_size = 0
    else:
        boundary = costs[order[k - 1]]
        below = [idx for idx in order if costs[idx] < boundary]
        pool = [idx for idx in order if costs[idx] == boundary]
        slots = k - len(below)
        if slots == len(pool):
            pool_size = 0
            selected = below + pool
        else:
            pool_size = len(pool)
            drawn = random.Random(seed).sample(pool, slots)
            position = {idx: pos for pos, idx in enumerate(order)}
            selected = below + sorted(drawn, key=position.__getitem__)

    items = []
    for position, idx in enumerate(selected, 1):
        cand = kept[idx]
        breakdown = distance_to_wakeword(wake, cand.prons, model)
        items.append(RankedItem(position, cand, breakdown.L, breakdown))
    return RankedList(
        wake=wake, model=model, k=k, seed=seed, items=items,
        boundary_pool_size=pool_size,
    )


def extract_ngrams(
    transcripts: Iterable[str],
    n: int,
    dictionary: PronouncingDictionary,
) -> list[Candidate]:
    """Sliding-window n-grams from transcript lines, as candidates.

    Windows never cross line boundaries.  Tokens are lowercased with
    punctuation stripped; duplicate n-grams are merged and counted.
    N-grams containing an out-of-vocabulary word are dropped (a diagnostic
    reports how many).
    """
    if n not in (1, 2, 3):
        raise ValueError(f"n must be 1, 2, or 3, got {n}")
    counts: dict[str, int] = {}
    for line in transcripts:
        tokens = [t for t in _TOKEN_PATTERN.findall(line.lower()) if t.strip("'")]
        for start in range(len(tokens) - n + 1):
            label = " ".join(tokens[start : start + n])
            counts[label] = counts.get(label, 0) + 1
    out = []
    dropped = 0
    for label, count in counts.items():
        try:
            prons = phrase_phones(dictionary, label.split())
        except OutOfVocabulary:
            dropped += 1
            continue
        out.append(Candidate(label=label, prons=tuple(prons), source=f"{n}-gram", count=count))
    if dropped:
        log.warning("dropped %d out-of-vocabulary %d-grams", dropped, n)
    return out


@dataclass(frozen=True)
class Voice:
    """One TTS voice in the synthesis pool."""

    id: str
    kind: str  # "standard" | "wavenet"
    gender: str  # "f" | "m"


DEFAULT_VOICES = (
    Voice("standard-a", "standard", "f"),
    Voice("standard-b", "standard", "m"),
    Voice("standard-c", "standard", "f"),
    Voice("standard-d", "standard", "m"),
    Voice("wavenet-a", "wavenet", "f"),
    Voice("wavenet-b", "wavenet", "m"),
    Voice("wavenet-c", "wavenet", "f"),
    Voice("wavenet-d", "wavenet", "m"),
    Voice("wavenet-e", "wavenet", "f"),
    Voice("wavenet-f", "wavenet", "m"),
)


@dataclass(frozen=True)
class ManifestEntry:
    label: str
    voice_id: str
    voice_kind: str
    gender: str
    file_name: str


@dataclass
class SynthesisManifest:
    entries: list[ManifestEntry]


def _validate_voices(voices: Sequence[Voice]) -> None:
    standard = [v for v in voices if v.kind == "standard"]
    wavenet = [v for v in voices if v.kind == "wavenet"]
    if len(voices) != 10 or len(standard) != 4 or len(wavenet) != 6:
        raise ConfigError("voice pool must hold exactly 4 standard and 6 wavenet voices")
    for kind, group in (("standard", standard), ("wavenet", wavenet)):
        genders = sorted(v.gender for v in group)
        if genders != ["f"] * (len(group) // 2) + ["m"] * (len(group) // 2):
            raise ConfigError(f"{kind} voices must split half female, half male")
    if len({v.id for v in voices}) != len(voices):
        raise ConfigError("voice ids must be unique")


def _slug(label: str) -> str:
    return _SLUG_PATTERN.sub("_", label.lower()).strip("_") or "candidate"


def export_manifest(
    ranked: RankedList,
    voices: Sequence[Voice] = DEFAULT_VOICES,
) -> SynthesisManifest:
    """One synthesis job per (ranked candidate, voice), rank-major order.

    Output file names follow ``<rank>_<slug>_<voice>.wav``.  Distinct labels
    that collapse to the same slug are disambiguated with a numeric suffix
    (and logged).
    """
    _validate_voices(voices)
    slugs: dict[str, str] = {}
    used: set[str] = set()
    for item in ranked.items:
        slug = _slug(item.candidate.label)
        if slug in used:
            k = 2
            while f"{slug}_{k}" in used:
                k += 1
            log.warning("slug collision for %r; using %r", item.candidate.label, f"{slug}_{k}")
            slug = f"{slug}_{k}"
        used.add(slug)
        slugs[item.candidate.label] = slug
    entries = [
        ManifestEntry(
            label=item.candidate.label,
            voice_id=voice.id,
            voice_kind=voice.kind,
            gender=voice.gender,
            file_name=f"{item.rank}_{slugs[item.candidate.label]}_{voice.id}.wav",
        )
        for item in ranked.items
        for voice in voices
    ]
    return SynthesisManifest(entries=entries)
