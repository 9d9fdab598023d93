"""
Chunked range scans.

A range [lo, hi] is cut into CHUNK_SIZE pieces. The vectorized float phase of
each chunk runs in a thread pool; results come back in chunk order so that
certification (on the calling thread) and the frontier file always advance
without gaps.
"""

import csv
import logging
import os
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .exceptions import DomainError, InputFormatError
from .settings import CHUNK_SIZE, THREADS

logger = logging.getLogger(__name__)

FRONTIER_KEY = "last_certified"


def iter_chunks(lo, hi, chunk_size=CHUNK_SIZE):
    if hi < lo:
        raise DomainError(f"empty range [{lo}, {hi}]")
    if chunk_size < 1:
        raise DomainError(f"chunk size must be positive, got {chunk_size}")
    start = lo
    while start <= hi:
        stop = min(start + chunk_size - 1, hi)
        yield start, stop
        start = stop + 1


def map_chunks(function, lo, hi, chunk_size=CHUNK_SIZE, threads=THREADS):
    """
    Yield ``(start, stop, function(start, stop))`` for consecutive chunks, in
    order. At most ``2 * threads`` chunks are in flight at any time.
    """
    chunks = iter_chunks(lo, hi, chunk_size)
    if threads <= 1:
        for start, stop in chunks:
            yield start, stop, function(start, stop)
        return
    with ThreadPoolExecutor(max_workers=threads) as executor:
        in_flight = deque()
        for start, stop in chunks:
            in_flight.append((start, stop, executor.submit(function, start, stop)))
            if len(in_flight) >= 2 * threads:
                start, stop, future = in_flight.popleft()
                yield start, stop, future.result()
        while in_flight:
            start, stop, future = in_flight.popleft()
            yield start, stop, future.result()


class ChunkTimer:
    """Logs one INFO line per merged chunk."""

    def __init__(self, label):
        self.label = label
        self.started = time.time()
        self.last = self.started

    def chunk_done(self, start, stop, certified=0):
        now = time.time()
        logger.info(
            f"{self.label}: {start}..{stop} done in {now - self.last:.2f}s "
            f"({certified} certified by balls)"
        )
        self.last = now

    @property
    def elapsed(self):
        return time.time() - self.started


# Frontier files


def read_frontier(path):
    """Last certified n stored in ``path``, or None if there is no file yet."""
    path = Path(path)
    if not path.exists():
        return None
    text = path.read_text().strip()
    key, _, value = text.partition("=")
    if key.strip() != FRONTIER_KEY or not value.strip().isdigit():
        raise InputFormatError(f"frontier file {path} must read '{FRONTIER_KEY}=<n>'", line=1)
    return int(value)


def write_frontier(path, n):
    path = Path(path)
    partial = path.with_name(path.name + ".partial")
    partial.write_text(f"{FRONTIER_KEY}={n}\n")
    os.replace(partial, path)


def resume_from(lo, hi, frontier_path):
    """Start of the remaining range given a frontier file (None when complete)."""
    if frontier_path is None:
        return lo
    last = read_frontier(frontier_path)
    if last is None or last < lo:
        return lo
    logger.warning(f"Resuming from frontier {frontier_path}: last certified n = {last}")
    if last >= hi:
        return None
    return last + 1


class RecordWriter:
    """
    Append-only CSV writer; the header is only written when the file is new
    or empty. Usable as a context manager.
    """

    def __init__(self, path, fields):
        self.path = Path(path)
        self.fields = list(fields)
        new = not self.path.exists() or self.path.stat().st_size == 0
        self.handle = self.path.open("a", newline="")
        self.writer = csv.writer(self.handle, lineterminator="\n")
        if new:
            self.writer.writerow(self.fields)
        self.count = 0

    def write(self, rows):
        for row in rows:
            self.writer.writerow([row[field] for field in self.fields])
            self.count += 1
        self.handle.flush()

    def close(self):
        self.handle.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()
