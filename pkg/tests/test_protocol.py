import random

import pytest
from hypothesis import given, settings, strategies as st

from leadersim.channel import Position
from leadersim.protocol import (
    FAST,
    SLOW,
    LeaderInfo,
    LeaderMessage,
    ProtocolConfig,
    compare,
    coarse_order,
    default_order,
    new_node,
    on_receive,
    tick,
)

ORDER = default_order()


def info(vid, dist, x=None):
    return LeaderInfo(id=vid, position=Position(x if x is not None else dist, 0.0),
                      dist_to_intersection=dist)


def msg(leader, seq, dist=None, relayer=None, neighbors=None):
    return LeaderMessage(
        leader=leader,
        seq=seq,
        info=info(leader, leader * 10.0 if dist is None else dist),
        relayer=leader if relayer is None else relayer,
        neighbors=None if neighbors is None else frozenset(neighbors),
    )


def basic_cfg(**kw):
    return ProtocolConfig(**kw)


def optimized_cfg(**kw):
    return ProtocolConfig(variant="optimized", **kw)


# --- construction -----------------------------------------------------------


def test_new_node_claims_leadership():
    st_ = new_node(7, info(7, 50.0), 0.0, basic_cfg())
    assert st_.believed_leader.id == 7
    assert st_.is_self_leader
    assert st_.mode == FAST
    assert not st_.dedup and not st_.rx_buffer
    assert st_.last_heartbeat == 0.0


def test_new_node_at_stop_line():
    st_ = new_node(0, info(0, 0.0), 0.0, basic_cfg())
    assert st_.is_self_leader


def test_two_fresh_nodes_both_self_leaders():
    a = new_node(1, info(1, 10.0), 0.0, basic_cfg())
    b = new_node(2, info(2, 20.0), 0.0, basic_cfg())
    assert a.is_self_leader and b.is_self_leader


def test_new_node_id_mismatch_rejected():
    with pytest.raises(ValueError):
        new_node(1, info(2, 10.0), 0.0, basic_cfg())


# --- order function ---------------------------------------------------------


def test_compare_smaller_distance_wins():
    assert compare(ORDER, info(1, 10.0), info(2, 20.0)) is True


def test_compare_irreflexive():
    a = info(1, 10.0)
    assert compare(ORDER, a, a) is False


def test_compare_id_breaks_tie():
    # Equal distance: the smaller id wins the tie.
    assert compare(ORDER, info(2, 10.0), info(1, 10.0)) is False
    assert compare(ORDER, info(1, 10.0), info(2, 10.0)) is True


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_order_total_on_distinct_ids(data):
    ids = data.draw(st.lists(st.integers(0, 10_000), min_size=2, max_size=2, unique=True))
    dists = data.draw(st.lists(st.floats(0, 500), min_size=2, max_size=2))
    a, b = info(ids[0], dists[0]), info(ids[1], dists[1])
    assert compare(ORDER, a, b) != compare(ORDER, b, a)


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_order_transitive(data):
    ids = data.draw(st.lists(st.integers(0, 10_000), min_size=3, max_size=3, unique=True))
    dists = data.draw(st.lists(st.floats(0, 500), min_size=3, max_size=3))
    a, b, c = (info(i, d) for i, d in zip(ids, dists))
    for order in (ORDER, coarse_order(2.0)):
        if compare(order, a, b) and compare(order, b, c):
            assert compare(order, a, c)


def test_coarse_order_bands():
    order = coarse_order(10.0)
    assert compare(order, info(5, 10.0), info(6, 20.0)) is True  # distinct bands
    assert compare(order, info(1, 17.0), info(2, 12.0)) is True  # same band, id wins
    assert compare(order, info(2, 12.0), info(1, 17.0)) is False


# --- receive path -----------------------------------------------------------


def test_receive_fresh_message_buffers_and_refreshes():
    cfg = basic_cfg()
    st_ = new_node(1, info(1, 30.0), 0.0, cfg)
    st_.believed_leader = info(3, 5.0)
    st_.is_self_leader = False
    on_receive(st_, msg(3, 5), 1.0)
    assert st_.last_heartbeat == 1.0
    assert len(st_.rx_buffer) == 1
    assert st_.neighbor_table[3] == 1.0


def test_receive_duplicate_refreshes_but_not_buffered():
    cfg = basic_cfg()
    st_ = new_node(1, info(1, 30.0), 0.0, cfg)
    st_.believed_leader = info(3, 5.0)
    st_.is_self_leader = False
    st_.dedup.add((3, 5))  # already relayed this origination
    on_receive(st_, msg(3, 5), 2.0)
    assert st_.last_heartbeat == 2.0
    assert st_.rx_buffer == []


def test_receive_message_naming_self_is_buffered():
    # Conflict handling happens at the tick, not on receive.
    cfg = basic_cfg()
    st_ = new_node(4, info(4, 30.0), 0.0, cfg)
    echo = msg(4, 1, dist=30.0, relayer=9)
    on_receive(st_, echo, 0.5)
    assert st_.rx_buffer == [echo]


def test_receive_other_leader_does_not_refresh_heartbeat():
    # Only messages naming the believed leader count as its heartbeat.
    cfg = basic_cfg()
    st_ = new_node(1, info(1, 30.0), 0.0, cfg)
    st_.believed_leader = info(3, 5.0)
    st_.is_self_leader = False
    st_.last_heartbeat = 0.0
    on_receive(st_, msg(8, 2, dist=50.0), 1.0)
    assert st_.last_heartbeat == 0.0
    assert len(st_.rx_buffer) == 1


# --- tick: adoption and relay ----------------------------------------------


def test_adopts_better_leader_and_relays_once():
    cfg = basic_cfg()
    st_ = new_node(9, info(9, 40.0), 0.0, cfg)
    st_.believed_leader = info(5, 20.0)
    st_.is_self_leader = False
    better = msg(2, 7, dist=5.0)
    on_receive(st_, better, 0.05)
    out = tick(st_, 0.1, ORDER, cfg)
    assert st_.believed_leader.id == 2
    assert not st_.is_self_leader
    assert [(m.leader, m.seq, m.relayer) for m in out] == [(2, 7, 9)]
    assert (2, 7) in st_.dedup
    assert st_.rx_buffer == []
    # the same origination is never relayed again
    on_receive(st_, better, 0.15)
    assert st_.rx_buffer == []
    assert tick(st_, 0.2, ORDER, cfg) == []


def test_relays_fresh_heartbeat_of_current_leader():
    cfg = basic_cfg()
    st_ = new_node(9, info(9, 40.0), 0.0, cfg)
    st_.believed_leader = info(2, 5.0)
    st_.is_self_leader = False
    st_.believed_seq = 7
    on_receive(st_, msg(2, 8, dist=5.0), 0.25)
    out = tick(st_, 0.3, ORDER, cfg)
    assert st_.believed_seq == 8
    assert [(m.leader, m.seq) for m in out] == [(2, 8)]


def test_stale_seq_of_current_leader_ignored():
    cfg = basic_cfg()
    st_ = new_node(9, info(9, 40.0), 0.0, cfg)
    st_.believed_leader = info(2, 5.0)
    st_.is_self_leader = False
    st_.believed_seq = 8
    on_receive(st_, msg(2, 6, dist=5.0), 0.25)
    assert tick(st_, 0.3, ORDER, cfg) == []
    assert st_.believed_seq == 8


def test_silence_triggers_self_promotion_and_origination():
    cfg = basic_cfg()
    st_ = new_node(3, info(3, 25.0), 0.0, cfg)
    st_.believed_leader = info(1, 5.0)
    st_.is_self_leader = False
    st_.last_heartbeat = 0.0
    now = cfg.t_silence + 0.01
    out = tick(st_, now, ORDER, cfg)
    assert st_.is_self_leader
    assert st_.believed_leader.id == 3
    assert st_.mode == FAST
    assert [(m.leader, m.seq) for m in out] == [(3, 1)]


def test_no_self_promotion_while_heartbeats_arrive():
    # The rank-best vehicle does not override a live leader.
    cfg = basic_cfg()
    st_ = new_node(1, info(1, 2.0), 0.0, cfg)  # rank-best (closest)
    st_.believed_leader = info(6, 9.0)
    st_.is_self_leader = False
    t = 0.0
    for k in range(1, 60):
        t = 0.1 * k
        on_receive(st_, msg(6, k, dist=9.0), t)
        tick(st_, t + 0.001, ORDER, cfg)
        assert not st_.is_self_leader
        assert st_.believed_leader.id == 6


def test_ghost_leader_reset_despite_worse_claims():
    # The believed leader went silent; worse-ranked claims must not pin the
    # node to the ghost record forever.
    cfg = basic_cfg()
    st_ = new_node(9, info(9, 40.0), 0.0, cfg)
    st_.believed_leader = info(1, 5.0)  # departed, never heard again
    st_.is_self_leader = False
    st_.last_heartbeat = 0.0
    t = cfg.t_silence + 0.05
    on_receive(st_, msg(7, 3, dist=8.0), t - 0.01)  # worse than the ghost's 5.0
    out = tick(st_, t, ORDER, cfg)
    assert st_.is_self_leader and st_.believed_leader.id == 9
    assert [(m.leader, m.seq) for m in out] == [(9, 1)]


def test_leader_ignores_worse_claim_and_keeps_originating():
    cfg = basic_cfg()
    st_ = new_node(2, info(2, 5.0), 0.0, cfg)
    tick(st_, 0.05, ORDER, cfg)  # originates seq 1
    on_receive(st_, msg(8, 1, dist=50.0), 0.1)
    out = tick(st_, 0.15, ORDER, cfg)
    assert st_.is_self_leader
    assert [(m.leader, m.seq) for m in out] == [(2, 2)]


def test_leader_yields_to_better_claim():
    cfg = basic_cfg()
    st_ = new_node(8, info(8, 50.0), 0.0, cfg)
    tick(st_, 0.05, ORDER, cfg)
    on_receive(st_, msg(2, 1, dist=5.0), 0.1)
    out = tick(st_, 0.15, ORDER, cfg)
    assert not st_.is_self_leader
    assert st_.believed_leader.id == 2
    assert [(m.leader, m.seq) for m in out] == [(2, 1)]


def test_own_echo_never_adopted_or_relayed():
    cfg = basic_cfg()
    st_ = new_node(5, info(5, 30.0), 0.0, cfg)
    tick(st_, 0.05, ORDER, cfg)  # originated (5, 1)
    on_receive(st_, msg(5, 1, dist=29.0, relayer=7), 0.1)
    out = tick(st_, 0.15, ORDER, cfg)
    assert st_.is_self_leader
    assert [(m.leader, m.seq) for m in out] == [(5, 2)]  # only the new origination


def test_seq_strictly_increases_across_reigns():
    cfg = basic_cfg()
    st_ = new_node(3, info(3, 25.0), 0.0, cfg)
    out1 = tick(st_, 0.05, ORDER, cfg)
    on_receive(st_, msg(1, 4, dist=5.0), 0.1)
    tick(st_, 0.15, ORDER, cfg)  # demoted
    st_.last_heartbeat = 0.15
    out2 = tick(st_, 0.15 + cfg.t_silence + 0.01, ORDER, cfg)  # promoted again
    assert out1[0].seq == 1
    assert out2[-1].seq == 2


# --- quiet join -------------------------------------------------------------


def test_quiet_join_adopts_first_heard_leader_even_if_worse():
    cfg = basic_cfg()
    st_ = new_node(1, info(1, 2.0), 10.0, cfg, claim=False)
    assert st_.is_self_leader and st_.provisional
    assert tick(st_, 10.05, ORDER, cfg) == []  # listening, no origination
    on_receive(st_, msg(6, 40, dist=9.0), 10.08)  # incumbent ranks worse than 1
    out = tick(st_, 10.15, ORDER, cfg)
    assert not st_.is_self_leader
    assert st_.believed_leader.id == 6
    assert [(m.leader, m.seq) for m in out] == [(6, 40)]


def test_quiet_join_claims_after_silence():
    cfg = basic_cfg()
    st_ = new_node(1, info(1, 2.0), 10.0, cfg, claim=False)
    t = 10.0
    while t < 10.0 + cfg.t_silence:
        assert tick(st_, t, ORDER, cfg) == []
        t += cfg.t_p
    out = tick(st_, 10.0 + cfg.t_silence + 0.01, ORDER, cfg)
    assert [(m.leader, m.seq) for m in out] == [(1, 1)]
    assert not st_.provisional


# --- optimized variant ------------------------------------------------------


def test_relay_suppressed_when_neighbors_covered():
    # Own live neighbors {4, 6} are inside the advertised set {4, 6, 9}.
    cfg = optimized_cfg()
    st_ = new_node(9, info(9, 40.0), 0.0, cfg)
    st_.believed_leader = info(2, 5.0)
    st_.is_self_leader = False
    st_.believed_seq = 1
    st_.neighbor_table = {4: 0.2, 6: 0.2}
    on_receive(st_, msg(2, 2, dist=5.0, relayer=2, neighbors={4, 6, 9}), 0.25)
    assert tick(st_, 0.3, ORDER, cfg) == []
    assert st_.believed_seq == 2  # adopted, just not relayed
    assert (2, 2) in st_.dedup


def test_relay_goes_out_when_some_neighbor_uncovered():
    cfg = optimized_cfg()
    st_ = new_node(9, info(9, 40.0), 0.0, cfg)
    st_.believed_leader = info(2, 5.0)
    st_.is_self_leader = False
    st_.believed_seq = 1
    st_.neighbor_table = {4: 0.2, 11: 0.2}  # 11 not in anyone's list
    on_receive(st_, msg(2, 2, dist=5.0, relayer=2, neighbors={4, 6, 9}), 0.25)
    out = tick(st_, 0.3, ORDER, cfg)
    assert [(m.leader, m.seq, m.relayer) for m in out] == [(2, 2, 9)]
    assert out[0].neighbors == frozenset({2, 4, 11})  # own live list attached


def test_stale_neighbors_not_counted_for_suppression():
    cfg = optimized_cfg()
    st_ = new_node(9, info(9, 40.0), 0.0, cfg)
    st_.believed_leader = info(2, 5.0)
    st_.is_self_leader = False
    st_.believed_seq = 1
    horizon = 10.0
    st_.neighbor_table = {4: horizon - cfg.t_silence - 1.0, 11: horizon - cfg.t_silence - 1.0}
    on_receive(st_, msg(2, 2, dist=5.0, relayer=2, neighbors={4, 6, 9}), horizon - 0.05)
    out = tick(st_, horizon, ORDER, cfg)
    # stale 11 is ignored, live set is just the relayer (2), which is covered
    assert out == []


def test_leader_change_relay_never_suppressed():
    # Selection traffic floods even when the neighbor check would pass.
    cfg = optimized_cfg()
    st_ = new_node(9, info(9, 40.0), 0.0, cfg)
    st_.believed_leader = info(5, 20.0)
    st_.is_self_leader = False
    st_.neighbor_table = {4: 0.2}
    on_receive(st_, msg(2, 3, dist=5.0, relayer=2, neighbors={4, 9}), 0.25)
    out = tick(st_, 0.3, ORDER, cfg)
    assert [(m.leader, m.seq) for m in out] == [(2, 3)]


def test_leader_slows_down_after_quiet_period():
    cfg = optimized_cfg()
    st_ = new_node(2, info(2, 5.0), 0.0, cfg)
    t, saw_slow = 0.0, None
    for _ in range(40):
        tick(st_, t, ORDER, cfg)
        if st_.mode == SLOW:
            saw_slow = t
            break
        t += cfg.t_p
    assert saw_slow is not None
    assert saw_slow > cfg.consensus_quiet
    # a conflicting claim puts it back into fast mode
    on_receive(st_, msg(8, 1, dist=50.0), saw_slow + 0.01)
    tick(st_, saw_slow + cfg.t_p_slow, ORDER, cfg)
    assert st_.mode == FAST


def test_slow_mode_disabled_when_payload_needs_fast_refresh():
    cfg = optimized_cfg(allow_slow=False)
    st_ = new_node(2, info(2, 5.0), 0.0, cfg)
    t = 0.0
    for _ in range(40):
        tick(st_, t, ORDER, cfg)
        assert st_.mode == FAST
        t += cfg.t_p


def test_basic_variant_messages_carry_no_neighbor_list():
    cfg = basic_cfg()
    st_ = new_node(2, info(2, 5.0), 0.0, cfg)
    st_.neighbor_table = {4: 0.0}
    out = tick(st_, 0.05, ORDER, cfg)
    assert out[0].neighbors is None


# --- config invariants ------------------------------------------------------


def test_protocol_config_validation():
    with pytest.raises(ValueError):
        ProtocolConfig(t_p=0.2, t_p_slow=0.1)
    with pytest.raises(ValueError):
        ProtocolConfig(t_p=0.1, t_silence=0.05)
    with pytest.raises(ValueError):
        ProtocolConfig(consensus_quiet=0.01)
    with pytest.raises(ValueError):
        ProtocolConfig(variant="turbo")


def test_relay_once_over_random_traffic():
    # Property: no (leader, seq) pair is ever transmitted twice as a relay.
    cfg = basic_cfg()
    rng = random.Random(99)
    st_ = new_node(50, info(50, 60.0), 0.0, cfg)
    st_.believed_leader = info(1, 50.0)
    st_.is_self_leader = False
    sent: list[tuple[int, int]] = []
    t = 0.0
    for _ in range(400):
        t += 0.1
        for _ in range(rng.randrange(3)):
            leader = rng.randrange(1, 6)
            on_receive(st_, msg(leader, rng.randrange(1, 30), dist=float(leader)), t)
        for m in tick(st_, t, ORDER, cfg):
            if m.leader != 50:
                sent.append((m.leader, m.seq))
    assert len(sent) == len(set(sent))
