from __future__ import annotations

from collections import Counter

import pytest

from layercast import (
    GatherConfig,
    GatherPacket,
    WaveCapExceeded,
    bfs_layering,
    gather,
    gather_epoch_bound,
    generate_graph,
    mod_coloring,
)
from layercast.gathering import delay_window, max_previous_delay


def colored_path(n, source=0, colors=3):
    g = generate_graph("path", {"n": n}, 0)
    return g, mod_coloring(bfs_layering(g, source), colors)


def test_epoch_bound_examples():
    assert gather_epoch_bound(10, 0, 2, 1) == 14
    assert gather_epoch_bound(20, 8, 256, 4) == 1616


def test_epoch_bound_monotone():
    base = gather_epoch_bound(10, 4, 32, 2)
    assert gather_epoch_bound(11, 4, 32, 2) >= base
    assert gather_epoch_bound(10, 5, 32, 2) >= base
    assert gather_epoch_bound(10, 4, 64, 2) >= base
    assert gather_epoch_bound(10, 4, 32, 3) >= base


def test_zero_messages_complete_immediately():
    g, lay = colored_path(4)
    result, trace = gather(g, GatherConfig(lay, 0), {}, 0)
    assert result.delivered == {}
    assert result.epochs_run == 0
    assert trace.round_count == 0


def test_messages_at_source_deliver_without_transmissions():
    g, lay = colored_path(4)
    result, trace = gather(g, GatherConfig(lay, 3), {0: ["a", "b", "c"]}, 1)
    assert set(result.delivered) == {"a", "b", "c"}
    assert all(epoch == 0 and waves == 0 for epoch, waves in result.delivered.values())
    assert trace.rounds == []


def test_path5_two_messages_replayable_and_scheduled():
    g, lay = colored_path(5)
    result, trace = gather(g, GatherConfig(lay, 2), {4: ["a", "b"]}, 0)
    assert result.delivered == {"b": (12, 0), "a": (21, 0)}
    # Every data-slot reception obeys epoch = depth - layer(sender) + delay.
    depth = lay.depth
    colors = lay.color_count
    packets = 0
    for rec in trace.rounds:
        slot = rec.index % 2
        epoch = rec.index // 2 // colors
        senders = dict(rec.transmitters)
        for listener, sender in rec.receptions:
            payload = senders[sender].payload
            if slot == 0 and isinstance(payload, GatherPacket):
                assert epoch == depth - lay.layer[sender] + payload.delay
                packets += 1
    assert packets >= 8  # two messages, four hops each


def test_no_duplication_and_no_loss_in_trace():
    g = generate_graph("grid", {"rows": 4, "cols": 4}, 0)
    lay = mod_coloring(bfs_layering(g, 0), 3)
    placement = {15: ["m0", "m1"], 10: ["m2"], 3: ["m3"]}
    result, trace = gather(g, GatherConfig(lay, 4), placement, 2)
    holder = {"m0": 15, "m1": 15, "m2": 10, "m3": 3}
    delivered = set()
    colors = lay.color_count
    # Replay: a message moves exactly when its data-slot reception at its
    # destination is followed by an ack back to the old holder.
    rounds = {rec.index: rec for rec in trace.rounds}
    for index in sorted(rounds):
        rec = rounds[index]
        if index % 2 != 0:
            continue
        senders = dict(rec.transmitters)
        ack_rec = rounds.get(index + 1)
        acked_listeners = {v for v, _ in (ack_rec.receptions if ack_rec else ())}
        for listener, sender in rec.receptions:
            packet = senders[sender].payload
            if not isinstance(packet, GatherPacket) or packet.destination != listener:
                continue
            assert holder[packet.message] == sender, "sender must be the unique holder"
            if listener == lay.source:
                delivered.add(packet.message)
            if sender in acked_listeners:
                holder[packet.message] = listener
        counts = Counter(holder.values())
        assert all(node in g.nodes for node in counts)
    assert delivered == set(result.delivered) == {"m0", "m1", "m2", "m3"}


def test_wave_monotonicity_and_disjoint_windows():
    g = generate_graph("grid", {"rows": 4, "cols": 4}, 0)
    lay = mod_coloring(bfs_layering(g, 15), 3)
    placement = {0: ["a"], 5: ["b"], 10: ["c"], 12: ["d"]}
    result, _ = gather(g, GatherConfig(lay, 4), placement, 7)
    history: dict[str, list[tuple[int, int]]] = {}
    for message, wave, delay in result.wave_log:
        history.setdefault(message, []).append((wave, delay))
    n = g.node_count
    for message, entries in history.items():
        waves = [w for w, _ in entries]
        assert waves == sorted(waves), "wave counter never decreases"
        delays = [d for _, d in entries]
        assert delays == sorted(delays) and len(set(delays)) == len(delays)
        for wave, delay in entries:
            low = 0 if wave == 0 else max_previous_delay(4, wave - 1, n)
            assert low <= delay < low + delay_window(4, wave, n)


def test_color_discipline_in_data_slots():
    g = generate_graph("grid", {"rows": 4, "cols": 4}, 0)
    lay = mod_coloring(bfs_layering(g, 0), 3)
    result, trace = gather(g, GatherConfig(lay, 5), {15: ["a", "b"], 7: ["c", "d", "e"]}, 4)
    for rec in trace.rounds:
        if rec.index % 2 != 0:
            continue
        senders = [v for v, p in rec.transmitters if isinstance(p.payload, GatherPacket)]
        assert len({lay.color[v] for v in senders}) <= 1


def test_wave_cap_failure_names_message():
    # Seed 47 draws equal initial delays for both messages, so neither
    # transmits and both must re-wave past the zero cap.
    g, lay = colored_path(3)
    with pytest.raises(WaveCapExceeded) as err:
        gather(g, GatherConfig(lay, 2, wave_cap=0), {2: ["a", "a2"]}, 47)
    assert err.value.message in ("a", "a2")


def test_rejects_uncolored_layering():
    g = generate_graph("path", {"n": 4}, 0)
    lay = bfs_layering(g, 0)
    with pytest.raises(ValueError, match="colored"):
        gather(g, GatherConfig(lay, 1), {3: ["m"]}, 0)


def test_rejects_wrong_k():
    g, lay = colored_path(4)
    with pytest.raises(ValueError, match="config.k"):
        gather(g, GatherConfig(lay, 2), {3: ["m"]}, 0)


def test_rejects_duplicate_tokens():
    g, lay = colored_path(4)
    with pytest.raises(ValueError, match="distinct"):
        gather(g, GatherConfig(lay, 2), {3: ["m", "m"]}, 0)


def test_delivery_from_every_node_one_message_each():
    g = generate_graph("grid", {"rows": 3, "cols": 3}, 0)
    lay = mod_coloring(bfs_layering(g, 4), 3)
    placement = {v: [f"m{v}"] for v in g.nodes}
    result, _ = gather(g, GatherConfig(lay, 9), placement, 11)
    assert set(result.delivered) == {f"m{v}" for v in g.nodes}
