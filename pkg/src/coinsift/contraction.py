"""Collapse wallet addresses into users.

Two sources for the address -> user mapping:

* :func:`build_contraction` derives it with the common-input-ownership
  heuristic: all input addresses of one transaction belong to one user,
  closed transitively across transactions (union-find).
* :func:`load_contraction` reads a precomputed ``contraction.tsv``.

Derived user ids are canonical: the smallest address id of each
equivalence class, which makes the mapping independent of stream order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .errors import ParseError, ValidationError
from .ingest import TransactionFlowRecord, _parse_unsigned


class UnionFind:
    """Disjoint sets over sparse integer keys, path compression + union by size."""

    def __init__(self):
        self.parent: dict[int, int] = {}
        self.size: dict[int, int] = {}

    def add(self, x: int) -> None:
        if x not in self.parent:
            self.parent[x] = x
            self.size[x] = 1

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        self.add(a)
        self.add(b)
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


@dataclass
class AddressUserMap:
    """Total mapping from address ids to user ids.

    Addresses absent from ``mapping`` resolve to themselves (singleton
    users), so the map covers any address universe without error.
    """

    mapping: dict[int, int] = field(default_factory=dict)
    derived: bool = False

    def resolve(self, addr_id: int) -> int:
        return self.mapping.get(addr_id, addr_id)

    @property
    def n_users(self) -> int:
        return len(set(self.mapping.values()))

    @staticmethod
    def identity() -> "AddressUserMap":
        return AddressUserMap(mapping={}, derived=False)


def build_contraction(txin_records: Iterable[TransactionFlowRecord]) -> AddressUserMap:
    """Union all input addresses of each transaction, then canonicalize.

    Works on streams in any order: records of one transaction need not be
    adjacent. The canonical user id of a class is its minimum address id,
    so the resulting mapping is identical for any permutation of the input.
    """
    uf = UnionFind()
    first_addr: dict[int, int] = {}
    for r in txin_records:
        anchor = first_addr.setdefault(r.tx_id, r.addr_id)
        if anchor == r.addr_id:
            uf.add(r.addr_id)
        else:
            uf.union(anchor, r.addr_id)
    class_min: dict[int, int] = {}
    for addr in uf.parent:
        root = uf.find(addr)
        cur = class_min.get(root)
        if cur is None or addr < cur:
            class_min[root] = addr
    mapping = {addr: class_min[uf.find(addr)] for addr in uf.parent}
    return AddressUserMap(mapping=mapping, derived=True)


def load_contraction(path) -> AddressUserMap:
    """Read ``addr_id<TAB>user_id`` rows verbatim.

    Conflicting duplicate rows for one address are a validation error; an
    empty file yields the identity mapping.
    """
    mapping: dict[int, int] = {}
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                raise ParseError(path, line_no, "blank line")
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError(path, line_no, f"expected 2 tab-separated fields, got {len(parts)}")
            addr_id = _parse_unsigned(path, line_no, parts[0], "addr_id")
            user_id = _parse_unsigned(path, line_no, parts[1], "user_id")
            if addr_id in mapping and mapping[addr_id] != user_id:
                raise ValidationError(
                    f"{path}:{line_no}: conflicting user ids for address {addr_id} "
                    f"({mapping[addr_id]} vs {user_id})"
                )
            mapping[addr_id] = user_id
    return AddressUserMap(mapping=mapping, derived=False)


def write_contraction(amap: AddressUserMap, path) -> int:
    """Export the mapping sorted by address id; returns rows written."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for addr_id in sorted(amap.mapping):
            fh.write(f"{addr_id}\t{amap.mapping[addr_id]}\n")
            n += 1
    return n
