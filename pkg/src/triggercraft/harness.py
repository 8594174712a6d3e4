"""Bookkeeping for smart-speaker measurement runs.

A measurement rig plays media at a set of smart speakers and logs every
activation as a JSON-lines event.  Each event is then verified by replaying
a short window around the trigger position, classified by how far the
activation went (local detection only vs. audio leaving for the cloud), and
adjudicated by two human reviewers who decide whether the trigger was
accidental.  This module parses those logs and computes the derived
quantities: replay windows, reproducibility bins, activation classes,
adjudication resolutions, inter-rater agreement (Cohen's kappa), and the
per-speaker/per-media summary table.

Event records look like::

    {"ts": "2019-10-01T12:00:00Z", "media": "show_a_e01", "progress_s": 100.0, "speaker": "VA1"}

Verification records add ``replays``/``hits`` (and optionally the observed
activation signals); adjudication records add ``reviewer_a``/``reviewer_b``.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from typing import IO, Iterable, Mapping, Sequence

from .errors import (
    EventBeyondMedia,
    LengthMismatch,
    NegativeProgress,
    OutOfRange,
    ParseError,
)
from .errors import EmptyInput

__all__ = [
    "ActivationObservation",
    "Adjudication",
    "Summary",
    "TriggerAnalysis",
    "TriggerEvent",
    "VerificationResult",
    "adjudicate",
    "bin_reproducibility",
    "classify_activation",
    "cohens_kappa",
    "format_summary",
    "join_records",
    "parse_adjudication_log",
    "parse_event_log",
    "parse_verification_log",
    "summarize",
    "verification_window",
]

log = logging.getLogger(__name__)

# Replay window: rewind this far before the trigger position ...
WINDOW_BEFORE_S = 7.0
# ... and keep playing this far past it.
WINDOW_AFTER_S = 3.0

REVIEW_LABELS = ("accidental", "wake-word-present", "related-word")
RESOLUTIONS = ("accidental", "discarded", "needs-review")
BINS = ("none", "low", "medium", "high")


@dataclass(frozen=True)
class TriggerEvent:
    """One logged activation of a smart speaker during playback."""

    timestamp: datetime
    media_id: str
    progress_s: float
    speaker_id: str


@dataclass(frozen=True)
class VerificationResult:
    """Replay outcome for one event: how often the trigger reproduced."""

    event: TriggerEvent
    replays: int = 10
    hits: int = 0

    def __post_init__(self):
        if self.replays < 1:
            raise ValueError("replays must be >= 1")
        if not 0 <= self.hits <= self.replays:
            raise ValueError(f"hits={self.hits} outside 0..{self.replays}")

    @property
    def bin(self) -> str:
        return bin_reproducibility(self.hits)


@dataclass(frozen=True)
class ActivationObservation:
    """Signals observed while a trigger fired."""

    event: TriggerEvent
    led_on_s: float = 0.0
    voice_response: bool = False
    pattern_cloud_signal: bool = False


@dataclass(frozen=True)
class Adjudication:
    """Two independent reviewer labels for one event."""

    event: TriggerEvent
    reviewer_a: str
    reviewer_b: str

    def __post_init__(self):
        for label in (self.reviewer_a, self.reviewer_b):
            if label not in REVIEW_LABELS:
                raise ValueError(f"unknown review label {label!r}")

    @property
    def resolution(self) -> str:
        return adjudicate(self.reviewer_a, self.reviewer_b)


def _parse_timestamp(value: str) -> datetime:
    return datetime.fromisoformat(value.replace("Z", "+00:00"))


def _parse_event_fields(record: dict, lineno: int) -> TriggerEvent:
    try:
        timestamp = _parse_timestamp(record["ts"])
        media_id = record["media"]
        progress = float(record["progress_s"])
        speaker = record["speaker"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad event record: {exc!r}", lineno) from None
    if progress < 0:
        raise NegativeProgress(f"line {lineno}: negative playback position {progress!r}")
    return TriggerEvent(timestamp, media_id, progress, speaker)


def parse_event_log(lines: Iterable[str]) -> list[TriggerEvent]:
    """Parse a JSON-lines event log; unknown keys are ignored."""
    events = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc}", lineno) from None
        events.append(_parse_event_fields(record, lineno))
    return events


def parse_verification_log(
    lines: Iterable[str],
) -> list[tuple[VerificationResult, ActivationObservation]]:
    """Parse verification records (event fields + replays/hits + signals)."""
    out = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc}", lineno) from None
        event = _parse_event_fields(record, lineno)
        try:
            verification = VerificationResult(
                event=event,
                replays=int(record.get("replays", 10)),
                hits=int(record["hits"]),
            )
            observation = ActivationObservation(
                event=event,
                led_on_s=float(record.get("led_on_s", 0.0)),
                voice_response=bool(record.get("voice_response", False)),
                pattern_cloud_signal=bool(record.get("cloud_pattern", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad verification record: {exc!r}", lineno) from None
        out.append((verification, observation))
    return out


def parse_adjudication_log(lines: Iterable[str]) -> list[Adjudication]:
    """Parse adjudication records (event fields + two reviewer labels)."""
    out = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc}", lineno) from None
        event = _parse_event_fields(record, lineno)
        try:
            out.append(
                Adjudication(
                    event=event,
                    reviewer_a=record["reviewer_a"],
                    reviewer_b=record["reviewer_b"],
                )
            )
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad adjudication record: {exc!r}", lineno) from None
    return out


def verification_window(event: TriggerEvent, media_len_s: float) -> tuple[float, float]:
    """Replay window around a trigger, clamped to the media bounds.

    The window rewinds :data:`WINDOW_BEFORE_S` seconds before the logged
    position and runs :data:`WINDOW_AFTER_S` seconds past it.
    """
    if media_len_s <= 0:
        raise ValueError(f"media length must be positive, got {media_len_s!r}")
    if event.progress_s > media_len_s:
        raise EventBeyondMedia(
            f"event at {event.progress_s}s lies past media end ({media_len_s}s)"
        )
    start = max(0.0, event.progress_s - WINDOW_BEFORE_S)
    end = min(media_len_s, event.progress_s + WINDOW_AFTER_S)
    return (start, end)


def bin_reproducibility(hits: int) -> str:
    """Map a 0-10 replay hit count to its reproducibility bin."""
    if not isinstance(hits, int) or not 0 <= hits <= 10:
        raise OutOfRange(f"hit count {hits!r} outside 0..10")
    if hits == 0:
        return "none"
    if hits <= 3:
        return "low"
    if hits <= 7:
        return "medium"
    return "high"


def classify_activation(
    observation: ActivationObservation,
    threshold_s: float = 2.0,
) -> str:
    """Conservatively decide whether audio reached the vendor cloud.

    A long activation light (at least ``threshold_s`` seconds), a voice
    response, or a known cloud-signal light pattern all count as evidence
    that audio was sent on; anything shorter stays ``"local"``.
    """
    if (
        observation.led_on_s >= threshold_s
        or observation.voice_response
        or observation.pattern_cloud_signal
    ):
        return "local_plus_cloud"
    return "local"


def adjudicate(reviewer_a: str, reviewer_b: str) -> str:
    """Combine two reviewer labels into a resolution.

    Accidental only when both reviewers say accidental; discarded when both
    found the wake word (or a closely related word) in the audio; any
    disagreement goes back for review.
    """
    for label in (reviewer_a, reviewer_b):
        if label not in REVIEW_LABELS:
            raise ValueError(f"unknown review label {label!r}")
    a_accidental = reviewer_a == "accidental"
    b_accidental = reviewer_b == "accidental"
    if a_accidental and b_accidental:
        return "accidental"
    if not a_accidental and not b_accidental:
        return "discarded"
    return "needs-review"


def cohens_kappa(a: Sequence[str], b: Sequence[str]) -> float:
    """Chance-corrected agreement between two raters over the same items.

    ``(p_o - p_e) / (1 - p_e)`` with observed agreement ``p_o`` and the
    marginal chance agreement ``p_e``.  When both raters used one identical
    label throughout (``p_e == 1``), agreement is perfect and the value is
    1.0 by continuity.
    """
    if len(a) != len(b):
        raise LengthMismatch(f"rating lists differ in length: {len(a)} vs {len(b)}")
    if not a:
        raise EmptyInput("no ratings to compare")
    n = len(a)
    observed = sum(1 for x, y in zip(a, b) if x == y) / n
    counts_a = Counter(a)
    counts_b = Counter(b)
    expected = math.fsum(
        (counts_a[label] / n) * (counts_b[label] / n) for label in counts_a
    )
    if expected == 1.0:
        return 1.0
    return (observed - expected) / (1.0 - expected)


@dataclass
class TriggerAnalysis:
    """Everything known about one verified trigger."""

    verification: VerificationResult
    adjudication: Adjudication | None = None
    observation: ActivationObservation | None = None

    @property
    def event(self) -> TriggerEvent:
        return self.verification.event


def _event_key(event: TriggerEvent) -> tuple[str, str, float]:
    return (event.speaker_id, event.media_id, event.progress_s)


def join_records(
    events: Sequence[TriggerEvent],
    verifications: Sequence[tuple[VerificationResult, ActivationObservation]],
    adjudications: Sequence[Adjudication],
) -> list[TriggerAnalysis]:
    """Join the three logs on (speaker, media, position).

    Events without a verification record are skipped with a diagnostic;
    verification or adjudication records without a matching event are
    reported the same way.
    """
    ver_by_key: dict[tuple, list] = {}
    for pair in verifications:
        ver_by_key.setdefault(_event_key(pair[0].event), []).append(pair)
    adj_by_key: dict[tuple, list] = {}
    for adj in adjudications:
        adj_by_key.setdefault(_event_key(adj.event), []).append(adj)

    analyses = []
    unverified = 0
    for event in events:
        key = _event_key(event)
        if not ver_by_key.get(key):
            unverified += 1
            continue
        verification, observation = ver_by_key[key].pop(0)
        adjudication = adj_by_key[key].pop(0) if adj_by_key.get(key) else None
        analyses.append(
            TriggerAnalysis(
                verification=verification,
                adjudication=adjudication,
                observation=observation,
            )
        )
    if unverified:
        log.warning("%d events have no verification record", unverified)
    orphans = sum(len(v) for v in ver_by_key.values()) + sum(
        len(v) for v in adj_by_key.values()
    )
    if orphans:
        log.warning("%d verification/adjudication records match no event", orphans)
    return analyses


@dataclass
class Summary:
    """Aggregated measurement outcomes.

    ``counts`` maps (media_id, speaker_id) to [accidental, discarded,
    needs_review]; ``bins`` and ``activation`` aggregate per speaker.
    """

    counts: dict[tuple[str, str], list[int]]
    bins: dict[str, dict[str, int]]
    activation: dict[str, dict[str, int]]
    kappa: float | None = None


def summarize(analyses: Sequence[TriggerAnalysis]) -> Summary:
    """Fold analyses into the per-media/per-speaker summary."""
    counts: dict[tuple[str, str], list[int]] = {}
    bins: dict[str, dict[str, int]] = {}
    activation: dict[str, dict[str, int]] = {}
    slot = {"accidental": 0, "discarded": 1, "needs-review": 2}
    labels_a: list[str] = []
    labels_b: list[str] = []
    for analysis in analyses:
        event = analysis.event
        row = counts.setdefault((event.media_id, event.speaker_id), [0, 0, 0])
        if analysis.adjudication is not None:
            row[slot[analysis.adjudication.resolution]] += 1
            labels_a.append(analysis.adjudication.reviewer_a)
            labels_b.append(analysis.adjudication.reviewer_b)
        else:
            row[slot["needs-review"]] += 1
        speaker_bins = bins.setdefault(event.speaker_id, {b: 0 for b in BINS})
        speaker_bins[analysis.verification.bin] += 1
        if analysis.observation is not None:
            speaker_act = activation.setdefault(
                event.speaker_id, {"local": 0, "local_plus_cloud": 0}
            )
            speaker_act[classify_activation(analysis.observation)] += 1
    kappa = cohens_kappa(labels_a, labels_b) if labels_a else None
    return Summary(counts=counts, bins=bins, activation=activation, kappa=kappa)


def format_summary(summary: Summary) -> str:
    """Render a summary as sectioned tab-separated text.

    The [counts] section mirrors the usual prevalence table: one row per
    (media, speaker) with accidental (A) and wake-word/discarded (W)
    columns, plus the still-unreviewed count.
    """
    lines = ["[counts]", "media\tspeaker\tA\tW\tneeds_review"]
    totals: dict[str, list[int]] = {}
    for (media_id, speaker_id) in sorted(summary.counts):
        row = summary.counts[(media_id, speaker_id)]
        lines.append(f"{media_id}\t{speaker_id}\t{row[0]}\t{row[1]}\t{row[2]}")
        total = totals.setdefault(speaker_id, [0, 0, 0])
        for idx in range(3):
            total[idx] += row[idx]
    for speaker_id in sorted(totals):
        row = totals[speaker_id]
        lines.append(f"ALL\t{speaker_id}\t{row[0]}\t{row[1]}\t{row[2]}")
    lines.append("[reproducibility]")
    lines.append("speaker\t" + "\t".join(BINS))
    for speaker_id in sorted(summary.bins):
        speaker_bins = summary.bins[speaker_id]
        lines.append(
            speaker_id + "\t" + "\t".join(str(speaker_bins[b]) for b in BINS)
        )
    lines.append("[activation]")
    lines.append("speaker\tlocal\tlocal_plus_cloud")
    for speaker_id in sorted(summary.activation):
        act = summary.activation[speaker_id]
        lines.append(f"{speaker_id}\t{act['local']}\t{act['local_plus_cloud']}")
    if summary.kappa is not None:
        lines.append("[agreement]")
        lines.append(f"cohens_kappa\t{summary.kappa:.6f}")
    return "\n".join(lines) + "\n"
