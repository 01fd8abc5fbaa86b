"""Voting routines against an independent brute-force oracle."""

from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conductor import plurality_vote, resolve_final, strict_majority
from conductor.errors import EmptyVoteError
from conductor.extraction import CandidateAnswer

ALPHABET = ("x", "y", "z")


def oracle_counts(values):
    counts = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return counts


def oracle_strict_majority(values):
    for v, c in oracle_counts(values).items():
        if c * 2 > len(values):
            return True, v
    return False, None


def oracle_modes(values):
    counts = oracle_counts(values)
    best = max(counts.values())
    return {v for v, c in counts.items() if c == best}


def all_lists(alphabet, max_len):
    for length in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=length)


class TestStrictMajority:
    def test_simple_majority(self):
        outcome = strict_majority(["735", "147", "735"])
        assert outcome.has_majority
        assert outcome.winner == "735"

    def test_exact_half_is_not_majority(self):
        outcome = strict_majority(["a", "b", "a", "b"])
        assert not outcome.has_majority
        assert outcome.winner is None

    def test_empty(self):
        outcome = strict_majority([])
        assert not outcome.has_majority
        assert outcome.winner is None
        assert outcome.modes == frozenset()
        assert outcome.counts == {}

    def test_accepts_candidate_answers(self):
        answers = [
            CandidateAnswer(raw=v, canonical=v, source="baseline", attempt_index=i)
            for i, v in enumerate(["5", "5", "7"])
        ]
        assert strict_majority(answers).winner == "5"

    def test_exhaustive_oracle_equivalence(self):
        for values in all_lists(ALPHABET, 6):
            values = list(values)
            outcome = strict_majority(values)
            has_maj, winner = oracle_strict_majority(values)
            assert outcome.has_majority == has_maj, values
            assert outcome.winner == winner, values
            assert outcome.counts == oracle_counts(values), values

    def test_random_oracle_equivalence(self):
        rng = random.Random(20240808)
        for _ in range(1000):
            values = [rng.choice(ALPHABET) for _ in range(rng.randint(0, 12))]
            outcome = strict_majority(values)
            has_maj, winner = oracle_strict_majority(values)
            assert outcome.has_majority == has_maj
            assert outcome.winner == winner


class TestPluralityVote:
    def test_unique_mode(self):
        assert plurality_vote(["x", "y", "x", "z"]).modes == {"x"}

    def test_ties_kept(self):
        assert plurality_vote(["x", "y"]).modes == {"x", "y"}

    def test_empty_raises(self):
        with pytest.raises(EmptyVoteError):
            plurality_vote([])

    def test_counts_sum_to_input_size(self):
        values = ["x", "x", "y", "z", "z", "z"]
        outcome = plurality_vote(values)
        assert sum(outcome.counts.values()) == len(values)

    def test_exhaustive_oracle_equivalence(self):
        for values in all_lists(ALPHABET, 6):
            if not values:
                continue
            outcome = plurality_vote(list(values))
            assert outcome.modes == oracle_modes(values), values

    def test_random_oracle_equivalence(self):
        rng = random.Random(11)
        for _ in range(1000):
            values = [rng.choice(ALPHABET) for _ in range(rng.randint(1, 12))]
            assert plurality_vote(values).modes == oracle_modes(values)


class TestProperties:
    @given(st.lists(st.sampled_from(ALPHABET), max_size=20), st.randoms())
    def test_permutation_invariance(self, values, rng):
        shuffled = list(values)
        rng.shuffle(shuffled)
        a, b = strict_majority(values), strict_majority(shuffled)
        assert a.has_majority == b.has_majority
        assert a.winner == b.winner
        assert a.modes == b.modes
        assert a.counts == b.counts

    @given(st.lists(st.sampled_from(ALPHABET), min_size=1, max_size=20))
    def test_majority_implies_unique_mode(self, values):
        outcome = strict_majority(values)
        if outcome.has_majority:
            modes = plurality_vote(values).modes
            assert modes == {outcome.winner}

    @given(st.lists(st.sampled_from(ALPHABET), min_size=1, max_size=20))
    def test_adding_winner_copy_preserves_majority(self, values):
        outcome = strict_majority(values)
        if outcome.has_majority:
            extended = values + [outcome.winner]
            assert strict_majority(extended).winner == outcome.winner

    @given(st.lists(st.sampled_from(ALPHABET), min_size=1, max_size=20))
    def test_plurality_fills_majority_fields(self, values):
        pv = plurality_vote(values)
        sm = strict_majority(values)
        assert pv.has_majority == sm.has_majority
        assert pv.winner == sm.winner

    @given(st.lists(st.sampled_from(ALPHABET), min_size=1, max_size=20))
    def test_equality_congruence_over_raw_forms(self, values):
        # raws differing only in presentation vote identically
        dressed = [
            CandidateAnswer(
                raw=f"$${v}$$", canonical=v, source="baseline", attempt_index=i
            )
            for i, v in enumerate(values)
        ]
        assert plurality_vote(dressed).counts == plurality_vote(values).counts
        assert strict_majority(dressed).winner == strict_majority(values).winner


class TestResolveFinal:
    def test_singleton(self):
        assert resolve_final({"42"}, ["42"]) == "42"

    def test_first_seen_in_pool(self):
        assert resolve_final({"a", "b"}, ["b", "a", "b", "a"]) == "b"

    def test_order_sensitivity(self):
        assert resolve_final({"a", "b"}, ["a", "b"]) == "a"
        assert resolve_final({"a", "b"}, ["b", "a"]) == "b"

    def test_empty_modes_rejected(self):
        with pytest.raises(ValueError):
            resolve_final(set(), ["a"])

    @given(st.lists(st.sampled_from(ALPHABET), min_size=1, max_size=20))
    def test_resolves_to_a_mode(self, values):
        modes = plurality_vote(values).modes
        assert resolve_final(modes, values) in modes
