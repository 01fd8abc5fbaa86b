"""Exception hierarchy for the conductor package."""

from __future__ import annotations


class ConductorError(Exception):
    """Base class for all errors raised by this package."""


class TransportError(ConductorError):
    """HTTP-level failure that persisted through every retry."""


class RequestTimeoutError(TransportError):
    """The engine did not answer within the configured request timeout."""


class ProtocolError(ConductorError):
    """The engine returned a response we cannot interpret."""


class NoMatchError(ProtocolError):
    """A scripted engine had no remaining entry matching the prompt."""


class EngineUnavailable(ConductorError):
    """A pipeline run was aborted because the engine stopped responding.

    The partial trace written up to the failure is preserved on disk.
    """


class ExtractionError(ConductorError):
    """No answer could be extracted (only raised for empty input)."""


class NoCodeError(ConductorError):
    """A completion that was expected to carry a fenced code block has none."""


class EmptyVoteError(ConductorError):
    """plurality_vote was called with an empty candidate list."""


class SpawnError(ConductorError):
    """The sandbox could not start an interpreter process."""


class DatasetParseError(ConductorError):
    """A dataset line could not be parsed.

    Carries the 1-based line number of the offending record.
    """

    def __init__(self, message: str, line_number: int | None = None):
        super().__init__(message)
        self.line_number = line_number


class DuplicateIdError(DatasetParseError):
    """Two dataset records share the same problem id."""


class MissingGroundTruth(ConductorError):
    """recall@best_of_N was requested for a problem with no ground truth."""


class CorruptTraceError(ConductorError):
    """A trace file has sequence gaps, a bad hash, or a missing trailer."""


class ReplayMismatchError(ConductorError):
    """Replaying a trace produced a decision that differs from the record.

    ``seq`` points at the first diverging event.
    """

    def __init__(self, message: str, seq: int | None = None):
        super().__init__(message)
        self.seq = seq
