"""Streaming readers and writers for the on-disk dataset formats.

All files are plain UTF-8 TSV with LF line endings and no header:

* ``txin.tsv`` / ``txout.tsv`` -- one flow per line, ``tx_id<TAB>addr_id<TAB>value_satoshi``
* ``addresses.tsv`` -- optional address universe, one ``addr_id`` per line
* ``thefts.tsv`` -- theft catalog, ``case_id<TAB>case_name<TAB>addr_id``

Amounts stay integer satoshi throughout this module; nothing is converted
to floating point at I/O time. Loaders are single-pass generators with
memory usage independent of file size.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .errors import ParseError, ValidationError

_UNSIGNED = re.compile(r"^[0-9]+$")

VALID_SIDES = ("input", "output")


@dataclass(frozen=True)
class TransactionFlowRecord:
    """One (tx, address, value) edge on one side of a transaction."""

    tx_id: int
    addr_id: int
    value: int


@dataclass(frozen=True)
class TheftCaseEntry:
    case_id: int
    case_name: str
    addr_id: int


@dataclass
class TheftCatalog:
    """Known theft/hack/fraud cases keyed by case id."""

    entries: list[TheftCaseEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def cases(self) -> dict[int, list[TheftCaseEntry]]:
        grouped: dict[int, list[TheftCaseEntry]] = {}
        for e in self.entries:
            grouped.setdefault(e.case_id, []).append(e)
        return grouped

    @property
    def n_cases(self) -> int:
        return len({e.case_id for e in self.entries})


@dataclass
class DatasetStats:
    """Exact stage counters collected while streaming the dataset."""

    n_input_rows: int = 0
    n_output_rows: int = 0
    n_distinct_addresses: int = 0
    n_distinct_transactions: int = 0
    n_wiped_addresses: int = 0


def _parse_unsigned(path, line_no: int, text: str, what: str) -> int:
    if not _UNSIGNED.match(text):
        raise ParseError(path, line_no, f"{what} is not an unsigned decimal integer: {text!r}")
    return int(text)


def load_flow_records(source, side: str = "input") -> Iterator[TransactionFlowRecord]:
    """Stream flow records from a path or an open text stream.

    Yields records in file order. Malformed lines (wrong column count,
    signed or non-decimal fields, blank lines) raise :class:`ParseError`
    naming the offending line. An empty file yields nothing.
    """
    if side not in VALID_SIDES:
        raise ValueError(f"side must be one of {VALID_SIDES}, got {side!r}")
    if hasattr(source, "read"):
        yield from _iter_flow_stream(source, getattr(source, "name", "<stream>"))
    else:
        with open(source, "r", encoding="utf-8", newline="\n") as fh:
            yield from _iter_flow_stream(fh, source)


def _iter_flow_stream(fh: IO[str], path) -> Iterator[TransactionFlowRecord]:
    for line_no, line in enumerate(fh, start=1):
        line = line.rstrip("\n")
        if not line:
            raise ParseError(path, line_no, "blank line")
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError(path, line_no, f"expected 3 tab-separated fields, got {len(parts)}")
        tx_id = _parse_unsigned(path, line_no, parts[0], "tx_id")
        addr_id = _parse_unsigned(path, line_no, parts[1], "addr_id")
        value = _parse_unsigned(path, line_no, parts[2], "value")
        yield TransactionFlowRecord(tx_id, addr_id, value)


def write_flow_records(path, records: Iterable[TransactionFlowRecord]) -> int:
    """Write records in order; returns the number of rows written."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(f"{r.tx_id}\t{r.addr_id}\t{r.value}\n")
            n += 1
    return n


def load_address_universe(path) -> set[int]:
    """Read the optional one-column address universe file."""
    universe: set[int] = set()
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                raise ParseError(path, line_no, "blank line")
            universe.add(_parse_unsigned(path, line_no, line, "addr_id"))
    return universe


def load_theft_catalog(path) -> TheftCatalog:
    """Parse the theft catalog; duplicate (case_id, addr_id) pairs are rejected."""
    entries: list[TheftCaseEntry] = []
    seen: set[tuple[int, int]] = set()
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                raise ParseError(path, line_no, "blank line")
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError(
                    path, line_no,
                    f"expected 3 tab-separated fields, got {len(parts)} "
                    "(tab characters are not allowed inside case names)",
                )
            case_id = _parse_unsigned(path, line_no, parts[0], "case_id")
            if case_id < 1:
                raise ParseError(path, line_no, "case_id must be positive")
            addr_id = _parse_unsigned(path, line_no, parts[2], "addr_id")
            key = (case_id, addr_id)
            if key in seen:
                raise ValidationError(
                    f"{path}:{line_no}: duplicate catalog entry (case {case_id}, address {addr_id})"
                )
            seen.add(key)
            entries.append(TheftCaseEntry(case_id, parts[1], addr_id))
    return TheftCatalog(entries)


def wipe_addresses(
    txin_records: Iterable[TransactionFlowRecord],
    txout_records: Iterable[TransactionFlowRecord],
    universe: set[int] | None = None,
) -> tuple[set[int], DatasetStats]:
    """Drop addresses that appear in neither stream; count everything.

    The retained set is every address seen in at least one input or output
    row. With an explicit ``universe`` the wiped count is the number of
    universe addresses never seen; with a derived universe it is zero by
    construction. Counters are exact, no sampling.
    """
    stats = DatasetStats()
    seen_addrs: set[int] = set()
    seen_txs: set[int] = set()
    for r in txin_records:
        stats.n_input_rows += 1
        seen_addrs.add(r.addr_id)
        seen_txs.add(r.tx_id)
    for r in txout_records:
        stats.n_output_rows += 1
        seen_addrs.add(r.addr_id)
        seen_txs.add(r.tx_id)
    if universe is None:
        retained = seen_addrs
        stats.n_wiped_addresses = 0
    else:
        retained = universe & seen_addrs
        stats.n_wiped_addresses = len(universe) - len(retained)
    stats.n_distinct_addresses = len(retained)
    stats.n_distinct_transactions = len(seen_txs)
    return retained, stats
