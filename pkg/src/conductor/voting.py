"""Strict-majority and plurality voting over candidate answers.

All routines count canonical forms only; two raw answers with equal
canonicals are interchangeable in every vote.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence, Union

from .errors import EmptyVoteError
from .extraction import CandidateAnswer

Votable = Union[CandidateAnswer, str]


@dataclass(frozen=True)
class VoteOutcome:
    has_majority: bool
    winner: str | None
    modes: frozenset[str]
    counts: dict[str, int] = field(default_factory=dict)

    def to_payload(self) -> dict:
        """JSON-stable form for trace events."""
        return {
            "has_majority": self.has_majority,
            "winner": self.winner,
            "modes": sorted(self.modes),
            "counts": {k: self.counts[k] for k in sorted(self.counts)},
        }

    @classmethod
    def from_payload(cls, d: dict) -> "VoteOutcome":
        return cls(
            has_majority=d["has_majority"],
            winner=d["winner"],
            modes=frozenset(d["modes"]),
            counts=dict(d["counts"]),
        )


def canonicals(answers: Sequence[Votable]) -> list[str]:
    return [a.canonical if isinstance(a, CandidateAnswer) else a for a in answers]


def _tally(answers: Sequence[Votable]) -> tuple[list[str], Counter]:
    values = canonicals(answers)
    return values, Counter(values)


def strict_majority(answers: Sequence[Votable]) -> VoteOutcome:
    """Winner present iff some answer occurs in more than half the list.

    An empty list yields has_majority=False.
    """
    values, counts = _tally(answers)
    if not values:
        return VoteOutcome(has_majority=False, winner=None, modes=frozenset(), counts={})
    top, top_count = counts.most_common(1)[0]
    max_count = top_count
    modes = frozenset(v for v, c in counts.items() if c == max_count)
    if top_count * 2 > len(values):
        return VoteOutcome(has_majority=True, winner=top, modes=modes, counts=dict(counts))
    return VoteOutcome(has_majority=False, winner=None, modes=modes, counts=dict(counts))


def plurality_vote(answers: Sequence[Votable]) -> VoteOutcome:
    """All answers attaining the maximal count; ties are kept.

    has_majority and winner are filled in as strict_majority would, for
    caller convenience.
    """
    if not answers:
        raise EmptyVoteError("plurality_vote requires at least one answer")
    return strict_majority(answers)


def resolve_final(modes: Sequence[str] | frozenset[str], full_pool: Sequence[Votable]) -> str:
    """Collapse a (possibly plural) mode set to one answer.

    Ties break to the mode seen earliest in the pool; pool order encodes
    the pipeline's own pass priority, so earlier passes win ties.
    """
    mode_set = set(modes)
    if not mode_set:
        raise ValueError("resolve_final requires a non-empty mode set")
    if len(mode_set) == 1:
        return next(iter(mode_set))
    for value in canonicals(full_pool):
        if value in mode_set:
            return value
    raise ValueError("no mode occurs in the candidate pool")
