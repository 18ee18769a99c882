import json
import socket
import threading
import time

import numpy as np
import pytest

from adrsim.sim_server import (
    EpisodeServer,
    merge_known_maps,
    rle_decode,
    rle_encode,
)


class Client:
    """Minimal line-JSON client for exercising the server."""

    def __init__(self, address):
        self.sock = socket.create_connection(address, timeout=10)
        self.file = self.sock.makefile("rwb")

    def request(self, obj):
        self.file.write((json.dumps(obj) + "\n").encode())
        self.file.flush()
        return self.raw_request_line()

    def raw_request_line(self):
        line = self.file.readline()
        assert line, "server closed the connection"
        return line

    def call(self, obj):
        return json.loads(self.request(obj))

    def close(self):
        self.file.close()
        self.sock.close()


@pytest.fixture()
def server(tmp_path):
    srv = EpisodeServer(("127.0.0.1", 0), scenario="alley", seed=0,
                        log_dir=tmp_path)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    srv.server_close()
    thread.join(timeout=5)


def test_hello_reports_protocol_version(server):
    c = Client(server.server_address)
    ack = c.call({"type": "hello"})
    assert ack["type"] == "ack"
    assert ack["version"] == "1"
    assert ack["scenario"] == "alley"
    c.close()


def test_reset_registers_agents(server):
    c = Client(server.server_address)
    ack = c.call({"type": "reset", "seed": 3, "scenario": "alley", "agents": 2})
    assert ack["type"] == "ack"
    assert ack["agents"] == ["adr", "av"]
    assert ack["seed"] == 3
    c.close()


def test_step_response_shape(server):
    c = Client(server.server_address)
    c.call({"type": "reset", "seed": 1})
    r = c.call({"type": "step", "agent_id": "adr", "v": 0.5, "phi": 0.0})
    assert r["type"] == "state"
    assert r["agent_id"] == "adr"
    assert len(r["sectors"]) == 8
    assert r["step"] == 1
    assert not r["done"]
    assert r["reason"] == "running"
    assert r["episode_return"] == pytest.approx(r["reward"])
    c.close()


def test_lockstep_determinism_byte_identical(server):
    """Same seed + same requests produce byte-identical response transcripts."""
    def run():
        c = Client(server.server_address)
        lines = [c.request({"type": "reset", "seed": 42})]
        for i in range(20):
            lines.append(c.request({"type": "step", "agent_id": "adr",
                                    "v": 0.5, "phi": 0.1 if i % 3 else -0.1}))
        lines.append(c.request({"type": "observe", "agent_id": "adr"}))
        c.close()
        return b"".join(lines)

    assert run() == run()


def test_episode_return_accumulates_rewards(server):
    c = Client(server.server_address)
    c.call({"type": "reset", "seed": 7})
    total = 0.0
    for _ in range(30):
        r = c.call({"type": "step", "agent_id": "adr", "v": 0.5, "phi": 0.0})
        total += r["reward"]
        assert r["episode_return"] == pytest.approx(total, abs=1e-9)
        if r["done"]:
            break
    c.close()


def test_error_codes(server):
    c = Client(server.server_address)
    r = c.call({"type": "step", "agent_id": "adr", "v": 0.1, "phi": 0})
    assert r == {"type": "error", "code": "protocol_state",
                 "message": "step before reset"}
    c.call({"type": "reset", "seed": 0})
    r = c.call({"type": "step", "agent_id": "ghost", "v": 0.1, "phi": 0})
    assert r["code"] == "unknown_agent"
    r = c.call({"type": "teleport"})
    assert r["code"] == "unknown_request"
    r = c.call({"type": "map_share", "from_agent": "adr", "to_agent": "adr"})
    assert r["code"] == "invalid_target"
    c.file.write(b"{not json}\n")
    c.file.flush()
    assert json.loads(c.raw_request_line())["code"] == "malformed"
    c.close()


def test_step_after_done_is_protocol_error(server):
    c = Client(server.server_address)
    c.call({"type": "reset", "seed": 2})
    while True:
        r = c.call({"type": "step", "agent_id": "adr", "v": 2.0, "phi": 0.5})
        if r.get("done"):
            break
    r = c.call({"type": "step", "agent_id": "adr", "v": 0.5, "phi": 0.0})
    assert r["code"] == "protocol_state"
    c.close()


def test_rle_round_trip():
    rng = np.random.default_rng(0)
    for shape in ((1, 1), (3, 7), (40, 25)):
        known = rng.integers(0, 3, size=shape).astype(np.uint8)
        assert np.array_equal(rle_decode(rle_encode(known), shape), known)
    flat = np.zeros((2, 5), dtype=np.uint8)
    assert rle_encode(flat) == "10U"


def test_merge_union_semantics():
    a = np.array([[0, 1, 2], [2, 0, 1]], dtype=np.uint8)
    b = np.array([[1, 0, 1], [2, 2, 0]], dtype=np.uint8)
    merged = merge_known_maps(a, b)
    assert np.array_equal(merged, np.maximum(a, b))
    # Idempotent and commutative.
    assert np.array_equal(merge_known_maps(merged, b), merged)
    assert np.array_equal(merge_known_maps(b, a), merged)


def test_map_share_union_oracle(server):
    c = Client(server.server_address)
    c.call({"type": "reset", "seed": 5, "agents": 2})
    for _ in range(5):
        c.call({"type": "step", "agent_id": "adr", "v": 0.5, "phi": 0.0})
    c.call({"type": "observe", "agent_id": "av"})  # av sees its own surroundings

    assert c.call({"type": "observe", "agent_id": "adr"})["type"] == "state"

    ack = c.call({"type": "map_share", "from_agent": "adr", "to_agent": "av"})
    assert ack["type"] == "ack"
    shared = c.call({"type": "observe", "agent_id": "av"})
    assert shared["type"] == "map"
    shape = (shared["height"], shared["width"])
    merged_once = rle_decode(shared["payload"], shape)

    # Everything adr knew must now be known to av at least as strongly.
    ack = c.call({"type": "map_share", "from_agent": "av", "to_agent": "adr"})
    back = c.call({"type": "observe", "agent_id": "adr"})
    adr_known = rle_decode(back["payload"], shape)
    assert np.all(merged_once <= adr_known)

    # Repeating the same share is a no-op on the recipient's map.
    c.call({"type": "map_share", "from_agent": "adr", "to_agent": "av"})
    again = c.call({"type": "observe", "agent_id": "av"})
    merged_twice = rle_decode(again["payload"], shape)
    assert np.array_equal(merged_once, merged_twice)
    c.close()


def test_trajectory_log_matches_responses(server, tmp_path):
    c = Client(server.server_address)
    c.call({"type": "reset", "seed": 11})
    poses = [(0, None)]
    for i in range(10):
        r = c.call({"type": "step", "agent_id": "adr", "v": 0.4, "phi": 0.05})
        poses.append((r["step"], (r["x"], r["y"], r["theta"])))
    ack = c.call({"type": "shutdown"})
    assert ack["type"] == "ack"
    c.close()

    path = server.log_dir / "trajectory_adr.csv"
    deadline = time.time() + 5.0
    while not path.exists() and time.time() < deadline:
        time.sleep(0.02)
    log = path.read_text().splitlines()
    assert log[0] == "t,x,y,theta,v,phi"
    assert len(log) == 12  # header + initial pose + 10 steps
    for (step_i, pose), row in zip(poses[1:], log[2:]):
        t, x, y, theta, v, phi = (float(f) for f in row.split(","))
        assert t == pytest.approx(0.1 * step_i)
        assert x == pytest.approx(pose[0], abs=5e-7)
        assert y == pytest.approx(pose[1], abs=5e-7)
        assert theta == pytest.approx(pose[2], abs=5e-7)
        assert v == pytest.approx(0.4)
        assert phi == pytest.approx(0.05)


def test_urban_scenario_two_agents(server):
    c = Client(server.server_address)
    ack = c.call({"type": "reset", "seed": 1, "scenario": "urban", "agents": 2})
    assert ack["scenario"] == "urban"
    adr = c.call({"type": "observe", "agent_id": "adr"})
    av = c.call({"type": "observe", "agent_id": "av"})
    assert adr["x"] != av["x"] or adr["y"] != av["y"]
    r = c.call({"type": "step", "agent_id": "av", "v": 2.0, "phi": 0.0})
    assert r["agent_id"] == "av"
    c.close()
