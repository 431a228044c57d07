from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from supplytwin.domain import (
    ASSET_ID_RE,
    DESTROYED,
    INTACT,
    PACKAGED,
    AssetRecord,
    AssetState,
    EventKind,
    IdRegistry,
    Kind,
    StateKind,
    canonical_json,
    kind_of,
    mint_asset_id,
    records_for,
    transition,
)
from supplytwin.errors import Reason, SupplyTwinError, TransitionError


def test_mint_format_and_uniqueness():
    registry, rng = IdRegistry(), random.Random(1)
    kinds = list(Kind)
    ids = [registry.mint(kinds[n % len(kinds)], rng) for n in range(100_000)]
    assert len(set(ids)) == len(ids) == len(registry)
    assert all(ASSET_ID_RE.match(i) for i in ids)
    assert [kind_of(i) for i in ids[:5]] == kinds


class StuckRandom(random.Random):
    def getrandbits(self, k):
        return 7


def test_mint_collision_exhausted():
    registry = IdRegistry()
    registry.mint(Kind.ELEMENT, StuckRandom())
    with pytest.raises(SupplyTwinError) as exc:
        mint_asset_id(Kind.ELEMENT, StuckRandom(), registry)
    assert exc.value.reason is Reason.COLLISION_EXHAUSTED


@pytest.mark.parametrize("value", ["E123", "X" + "0" * 32, "e" + "0" * 32, None, 5, "E" + "G" * 32])
def test_malformed_ids_have_no_kind(value):
    assert kind_of(value) is None


def test_transition_requires_owner():
    with pytest.raises(TransitionError) as exc:
        transition(INTACT, EventKind.UPDATE, actor_is_owner=False)
    assert exc.value.reason is Reason.NOT_OWNER


def test_handover_start_carries_designee():
    assert transition(INTACT, EventKind.HANDOVER_STARTED, designee="bob") == AssetState.trans("bob")


@pytest.mark.parametrize("event", list(EventKind))
def test_destroyed_is_terminal(event):
    with pytest.raises(TransitionError):
        transition(DESTROYED, event, designee="x")


def test_trans_needs_designee():
    with pytest.raises(ValueError):
        AssetState(StateKind.TRANS)
    with pytest.raises(ValueError):
        AssetState(StateKind.INTACT, "bob")


@given(st.sampled_from([INTACT, PACKAGED, DESTROYED, AssetState.trans("p1")]))
def test_state_json_roundtrip(state):
    assert AssetState.from_json(state.to_json()) == state


@given(st.lists(st.sampled_from(list(EventKind)), min_size=1, max_size=30))
def test_random_walks_never_leave_destroyed(events):
    state = INTACT
    for event in events:
        try:
            nxt = transition(state, event, designee="d")
        except TransitionError:
            continue
        assert state != DESTROYED
        state = nxt


def test_record_roundtrip_and_references():
    record = AssetRecord("farm", "B" + "1" * 32, EventKind.AGGREGATION, 3, INTACT,
                         {"products": ["E" + "2" * 32, "E" + "3" * 32]})
    assert AssetRecord.from_json(record.to_json()) == record
    assert records_for([record], "E" + "2" * 32) == [record]
    assert records_for([record], "E" + "4" * 32) == []


def test_canonical_json_is_key_order_independent():
    assert canonical_json({"b": 1, "a": [1, 2]}) == canonical_json({"a": [1, 2], "b": 1}) == '{"a":[1,2],"b":1}'
