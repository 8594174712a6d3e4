"""Exception types shared across the package."""

from __future__ import annotations


class TriggerCraftError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(TriggerCraftError):
    """A text input (dictionary, log, table, ...) could not be parsed.

    Carries the 1-based line number of the offending line when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnknownPhone(TriggerCraftError):
    """A phone symbol is not part of the configured inventory."""


class OutOfVocabulary(TriggerCraftError):
    """A word has no entry in the pronouncing dictionary."""


class EmptyWakeWord(TriggerCraftError):
    """A wake-word phone sequence is empty."""


class NoPronunciation(TriggerCraftError):
    """A candidate has no pronunciation variants to score."""


class NoQualifyingWords(TriggerCraftError):
    """No dictionary word contains the phone under test."""


class EmptyInput(TriggerCraftError):
    """An aggregation received no data."""


class ZeroMean(TriggerCraftError):
    """A weight vector cannot be normalized because its mean is zero."""


class MissingRow(TriggerCraftError):
    """Probe scores do not cover every phone required by the wake words.

    ``phones`` lists the uncovered phone symbols.
    """

    def __init__(self, message: str, phones: list[str] | None = None):
        super().__init__(message)
        self.phones = phones or []


class FormatError(TriggerCraftError):
    """A stored weight table is malformed or violates its invariants."""


class EmptyVocabulary(TriggerCraftError):
    """No candidates are left to rank after blocklist filtering."""


class UnknownLabel(TriggerCraftError):
    """A trigger label is absent from the evaluation vocabulary."""


class UnknownWakeWord(TriggerCraftError):
    """A wake-word id has no configured entry."""


class NoTriggers(TriggerCraftError):
    """Tuning was asked to run with an empty trigger set."""


class TooFewFolds(TriggerCraftError):
    """Cross-validation needs at least two wake words."""


class NegativeProgress(TriggerCraftError):
    """An event log records a negative playback position."""


class EventBeyondMedia(TriggerCraftError):
    """An event's playback position lies past the end of its media."""


class OutOfRange(TriggerCraftError):
    """A replay hit count lies outside the supported range."""


class LengthMismatch(TriggerCraftError):
    """Two rating sequences differ in length."""


class ConfigError(TriggerCraftError):
    """The workbench configuration is missing, malformed, or inconsistent."""
