import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from vaudience.state import (
    TOMBSTONE,
    AudienceState,
    InvalidMask,
    ReactionKind,
    StateDelta,
    UnknownParticipant,
    VersionMismatch,
    VersionOrder,
    add_participant,
    aggregate,
    apply_delta,
    apply_update,
    diff,
    remove_participant,
    set_bit,
)


def recount(masks):
    """Independent per-bit recount used as the aggregation oracle."""
    counts = [0, 0, 0, 0]
    for m in masks:
        for k in range(4):
            if m & (1 << k):
                counts[k] += 1
    return tuple(counts)


masks_st = st.integers(min_value=0, max_value=0x0F)
ids_st = st.integers(min_value=1, max_value=1000)
entries_st = st.dictionaries(ids_st, masks_st, max_size=1000)


class TestApplyUpdate:
    def test_sets_mask_and_bumps_version(self):
        state = AudienceState({7: 0x00}, version=3)
        out = apply_update(state, 7, 0x01)
        assert out.entries == {7: 0x01}
        assert out.version == 4

    def test_identical_mask_is_noop(self):
        state = AudienceState({7: 0x01}, version=4)
        out = apply_update(state, 7, 0x01)
        assert out is state
        assert out.version == 4

    def test_unknown_participant(self):
        state = AudienceState({7: 0x00})
        with pytest.raises(UnknownParticipant):
            apply_update(state, 99, 0x02)

    def test_invalid_mask(self):
        state = AudienceState({7: 0x00})
        with pytest.raises(InvalidMask):
            apply_update(state, 7, 0x10)

    @given(entries_st, st.lists(st.tuples(ids_st, masks_st), max_size=50))
    def test_version_monotone_and_effective_only(self, entries, updates):
        state = AudienceState(dict(entries), version=0)
        for pid, mask in updates:
            if pid not in state.entries:
                continue
            before = state.version
            changed = state.entries[pid] != mask
            state = apply_update(state, pid, mask)
            assert state.version == before + (1 if changed else 0)


class TestAggregate:
    def test_empty(self):
        summary = aggregate(AudienceState())
        assert summary.counts == (0, 0, 0, 0)
        assert summary.total == 0

    def test_mixed_masks(self):
        # oracle: recount([0x01, 0x09, 0x00]) == (2, 0, 0, 1)
        state = AudienceState({1: 0x01, 2: 0x09, 3: 0x00}, version=5)
        summary = aggregate(state)
        assert summary.counts == recount([0x01, 0x09, 0x00]) == (2, 0, 0, 1)
        assert summary.total == 3
        assert summary.version == 5

    def test_all_bits(self):
        summary = aggregate(AudienceState({9: 0x0F}))
        assert summary.counts == (1, 1, 1, 1)
        assert summary.total == 1

    @given(entries_st)
    def test_matches_recount_oracle(self, entries):
        summary = aggregate(AudienceState(dict(entries)))
        assert summary.counts == recount(entries.values())
        assert summary.total == len(entries)
        for c in summary.counts:
            assert c <= summary.total


class TestDiffApplyDelta:
    def test_single_insertion(self):
        a = AudienceState({}, version=0)
        b = AudienceState({1: 0x02}, version=1)
        assert diff(a, b).changes == ((1, 0x02),)

    def test_update_remove_insert(self):
        # oracle: brute-force comparison of the two maps
        a = AudienceState({1: 0x01, 2: 0x00}, version=2)
        b = AudienceState({1: 0x03, 3: 0x08}, version=4)
        d = diff(a, b)
        assert d.changes == ((1, 0x03), (2, TOMBSTONE), (3, 0x08))
        assert d.from_version == 2
        assert d.to_version == 4

    def test_identity(self):
        a = AudienceState({1: 0x01}, version=2)
        assert diff(a, a).changes == ()

    def test_version_order_error(self):
        a = AudienceState({}, version=5)
        b = AudienceState({}, version=4)
        with pytest.raises(VersionOrder):
            diff(a, b)

    def test_apply_insertion(self):
        a = AudienceState({}, version=0)
        d = StateDelta(0, 1, ((1, 0x02),))
        out = apply_delta(a, d)
        assert out.entries == {1: 0x02}
        assert out.version == 1

    def test_apply_version_mismatch(self):
        a = AudienceState({1: 0x01}, version=5)
        with pytest.raises(VersionMismatch):
            apply_delta(a, StateDelta(4, 6, ()))

    def test_round_trip_example(self):
        a = AudienceState({1: 0x01, 2: 0x00}, version=2)
        b = AudienceState({1: 0x03, 3: 0x08}, version=4)
        out = apply_delta(a, diff(a, b))
        assert out.entries == b.entries
        assert out.version == b.version

    @settings(max_examples=200)
    @given(entries_st, entries_st, st.integers(0, 1000))
    def test_round_trip_random_pairs(self, ea, eb, va):
        a = AudienceState(dict(ea), version=va)
        b = AudienceState(dict(eb), version=va + 1)
        out = apply_delta(a, diff(a, b))
        assert out.entries == b.entries
        assert out.version == b.version

    def test_duplicate_id_rejected(self):
        with pytest.raises(Exception):
            StateDelta(0, 1, ((1, 0x01), (1, 0x02)))


class TestRosterHelpers:
    def test_add_remove(self):
        s = AudienceState()
        s = add_participant(s, 1)
        assert s.entries == {1: 0} and s.version == 1
        s = remove_participant(s, 1)
        assert s.entries == {} and s.version == 2

    def test_set_bit(self):
        m = set_bit(0x00, ReactionKind.CLAP, True)
        assert m == 0x01
        m = set_bit(m, ReactionKind.LAUGH, True)
        assert m == 0x09
        assert set_bit(m, ReactionKind.CLAP, False) == 0x08
