import os

import pytest

import _afifo as afifo

SERIAL = """
levels 2
queue q0
enq 0 q0 A
enq 0 q0 B
enq 0 q0 C
"""

REORDER = """
levels 3
queue q0
seed q0 A
enq 1 q0 B
enq 2 q0 C
schedule s0 a6 s1 f *
"""


def test_serial_run_is_fifo():
    out = afifo.run(SERIAL)
    assert out["drain"]["q0"] == ["A", "B", "C"]
    assert out["failures"] == []
    assert out["reorder"]["max_abs_arrival"] == 0


def test_reorder_schedule_shoves():
    out = afifo.run(REORDER)
    assert out["drain"]["q0"] == ["A", "C", "B"]
    assert out["failures"] == []
    assert out["reorder"]["max_abs_completion"] == 0
    assert out["reorder"]["max_abs_arrival"] == 1
    assert out["schedule"] == "s0 a6 s1 a22"


def test_trace_round_trip():
    out = afifo.run(REORDER)
    res = afifo.check_trace(out["trace"])
    assert res["ok"], res["message"]


def test_explore_two_level():
    scn = "levels 3\nqueue q0\nenq 1 q0 A\nenq 2 q0 B\n"
    rep = afifo.explore(scn)
    assert rep["failures"] == 0
    assert rep["schedules_visited"] > 1
    assert rep["stall_schedules"] > 0
    again = afifo.explore(scn)
    assert again["schedules_visited"] == rep["schedules_visited"]
    assert again["max_enqueue_steps"] == rep["max_enqueue_steps"]


def test_fuzz_deterministic():
    scn = "levels 3\nqueue q0\nseed q0 X\nenq 1 q0 A\nenq 2 q0 B\ndeq 0 q0\n"
    r1 = afifo.fuzz(scn, seed=9, iterations=300)
    r2 = afifo.fuzz(scn, seed=9, iterations=300)
    assert r1 == r2
    assert r1["failures"] == 0


def test_bad_scenario_raises():
    with pytest.raises(ValueError):
        afifo.parse_scenario("levels 3\nqueue q0\ndeq 2 q0\n")


def test_queue_handle():
    q = afifo.Queue(levels=4, capacity=8)
    assert q.dequeue() is None
    q.enqueue("a")
    q.enqueue("b", level=1)
    assert q.peek(8) == 2
    assert len(q) == 2
    assert q.check() == []
    assert q.dequeue() == "a"
    assert q.dequeue() == "b"
    assert q.dequeue() is None


def test_scenario_files_load():
    scn_dir = os.environ.get("AFIFO_SCENARIO_DIR")
    if not scn_dir:
        pytest.skip("AFIFO_SCENARIO_DIR not set")
    with open(os.path.join(scn_dir, "serial_abc.scn")) as fh:
        out = afifo.run(fh.read())
    assert out["drain"]["q0"] == ["A", "B", "C"]
