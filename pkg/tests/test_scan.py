import logging
import threading

import pytest

from abundanza import scan
from abundanza.exceptions import DomainError, InputFormatError


def test_iter_chunks_covers_range_without_gaps():
    chunks = list(scan.iter_chunks(3, 25, 10))
    assert chunks == [(3, 12), (13, 22), (23, 25)]
    assert list(scan.iter_chunks(5, 5, 10)) == [(5, 5)]


@pytest.mark.parametrize("lo, hi, size", [(10, 9, 5), (1, 10, 0)])
def test_iter_chunks_rejects(lo, hi, size):
    with pytest.raises(DomainError):
        list(scan.iter_chunks(lo, hi, size))


@pytest.mark.parametrize("threads", [1, 2, 4])
def test_map_chunks_keeps_order(threads):
    seen = set()

    def width(start, stop):
        seen.add(threading.get_ident())
        return stop - start + 1

    results = list(scan.map_chunks(width, 1, 1000, 7, threads))
    assert [start for start, _, _ in results] == list(range(1, 1001, 7))
    assert sum(result for _, _, result in results) == 1000
    if threads == 1:
        assert seen == {threading.get_ident()}


def test_map_chunks_propagates_errors():
    def explode(start, stop):
        if start > 50:
            raise DomainError("boom")
        return start

    with pytest.raises(DomainError):
        list(scan.map_chunks(explode, 1, 100, 10, 3))


def test_frontier_round_trip(tmp_path):
    path = tmp_path / "scan.frontier"
    assert scan.read_frontier(path) is None
    scan.write_frontier(path, 123456)
    assert path.read_text() == "last_certified=123456\n"
    assert scan.read_frontier(path) == 123456
    assert not (tmp_path / "scan.frontier.partial").exists()


def test_malformed_frontier(tmp_path):
    path = tmp_path / "scan.frontier"
    path.write_text("done=yes\n")
    with pytest.raises(InputFormatError) as info:
        scan.read_frontier(path)
    assert info.value.line == 1


def test_resume_from(tmp_path, caplog):
    path = tmp_path / "scan.frontier"
    assert scan.resume_from(10, 100, None) == 10
    assert scan.resume_from(10, 100, path) == 10
    scan.write_frontier(path, 5)
    assert scan.resume_from(10, 100, path) == 10
    scan.write_frontier(path, 40)
    with caplog.at_level(logging.WARNING, logger="abundanza.scan"):
        assert scan.resume_from(10, 100, path) == 41
    assert "Resuming from frontier" in caplog.text
    scan.write_frontier(path, 100)
    assert scan.resume_from(10, 100, path) is None


def test_record_writer_appends_with_one_header(tmp_path):
    path = tmp_path / "records.csv"
    with scan.RecordWriter(path, ["n", "sigma"]) as writer:
        writer.write([{"n": 6, "sigma": 12}, {"n": 12, "sigma": 28}])
        assert writer.count == 2
    with scan.RecordWriter(path, ["n", "sigma"]) as writer:
        writer.write([{"n": 60, "sigma": 168}])
    assert path.read_text() == "n,sigma\n6,12\n12,28\n60,168\n"


def test_chunk_timer_logs(caplog):
    timer = scan.ChunkTimer("robin")
    with caplog.at_level(logging.INFO, logger="abundanza.scan"):
        timer.chunk_done(1, 100, 3)
    assert "robin: 1..100" in caplog.text
    assert "3 certified by balls" in caplog.text
    assert timer.elapsed >= 0
