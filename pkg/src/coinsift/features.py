"""User-level flow graph and the ten per-user features.

The graph is a directed multigraph over contracted users: for each
transaction with distinct input users I and distinct output users O,
every pair (u, v) in I x O with u != v is one edge instance. Self-loops
are excluded from adjacency and degrees but a user's flows still count
toward its amount totals.

Per-user feature vector, in fixed column order:

* ``avg_in``        mean satoshi received per receiving transaction
* ``avg_out``       mean satoshi sent per sending transaction
* ``total_sent``    satoshi sent
* ``total_received`` satoshi received
* ``std_received``  population std of per-transaction received totals
* ``std_sent``      population std of per-transaction sent totals
* ``nb_in_in``      mean in-degree over distinct in-neighbors
* ``nb_in_out``     mean out-degree over distinct in-neighbors
* ``nb_out_in``     mean in-degree over distinct out-neighbors
* ``nb_out_out``    mean out-degree over distinct out-neighbors

Amounts are accumulated as exact integers (Python ints, so total-supply
scale sums cannot overflow) and converted to floats only here, at the
feature boundary. Means/stds iterate per-transaction totals in ascending
tx order, so the matrix is bit-identical under any permutation of the
input rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .contraction import AddressUserMap
from .errors import ParseError
from .ingest import TransactionFlowRecord

FEATURE_NAMES = (
    "avg_in",
    "avg_out",
    "total_sent",
    "total_received",
    "std_received",
    "std_sent",
    "nb_in_in",
    "nb_in_out",
    "nb_out_in",
    "nb_out_out",
)

FEATURES_HEADER = "user_id," + ",".join(FEATURE_NAMES)


@dataclass
class UserGraph:
    """Per-user aggregates of the contracted transaction graph.

    ``received`` / ``sent`` hold per-transaction totals (satoshi, ints) in
    ascending tx order. Degrees count edge instances, one per (tx, neighbor).
    """

    received: dict[int, list[int]]
    sent: dict[int, list[int]]
    in_neighbors: dict[int, set[int]]
    out_neighbors: dict[int, set[int]]
    in_degree: dict[int, int]
    out_degree: dict[int, int]
    users: list[int]

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_edge_instances(self) -> int:
        return sum(self.in_degree.values())


def build_user_graph(
    txin_records: Iterable[TransactionFlowRecord],
    txout_records: Iterable[TransactionFlowRecord],
    amap: AddressUserMap,
) -> UserGraph:
    """Fold both flow streams into per-user aggregates.

    A transaction with inputs but no outputs (or vice versa) is kept: its
    flows count toward totals but contribute no edges. A transaction whose
    only input and output user coincide contributes totals only.
    """
    sent_acc: dict[int, dict[int, int]] = {}
    recv_acc: dict[int, dict[int, int]] = {}
    tx_in_users: dict[int, set[int]] = {}
    tx_out_users: dict[int, set[int]] = {}

    for r in txin_records:
        u = amap.resolve(r.addr_id)
        per_tx = sent_acc.setdefault(u, {})
        per_tx[r.tx_id] = per_tx.get(r.tx_id, 0) + r.value
        tx_in_users.setdefault(r.tx_id, set()).add(u)
    for r in txout_records:
        u = amap.resolve(r.addr_id)
        per_tx = recv_acc.setdefault(u, {})
        per_tx[r.tx_id] = per_tx.get(r.tx_id, 0) + r.value
        tx_out_users.setdefault(r.tx_id, set()).add(u)

    in_neighbors: dict[int, set[int]] = {}
    out_neighbors: dict[int, set[int]] = {}
    in_degree: dict[int, int] = {}
    out_degree: dict[int, int] = {}
    for tx_id, in_users in tx_in_users.items():
        out_users = tx_out_users.get(tx_id)
        if not out_users:
            continue
        for u in out_users:
            sources = in_users - {u}
            if sources:
                in_degree[u] = in_degree.get(u, 0) + len(sources)
                in_neighbors.setdefault(u, set()).update(sources)
        for v in in_users:
            sinks = out_users - {v}
            if sinks:
                out_degree[v] = out_degree.get(v, 0) + len(sinks)
                out_neighbors.setdefault(v, set()).update(sinks)

    received = {u: [per_tx[t] for t in sorted(per_tx)] for u, per_tx in recv_acc.items()}
    sent = {u: [per_tx[t] for t in sorted(per_tx)] for u, per_tx in sent_acc.items()}
    users = sorted(set(received) | set(sent))
    return UserGraph(received, sent, in_neighbors, out_neighbors, in_degree, out_degree, users)


def _mean_std(per_tx_totals: list[int]) -> tuple[float, float, int]:
    """(mean, population std, integer total) of per-transaction totals."""
    n = len(per_tx_totals)
    if n == 0:
        return 0.0, 0.0, 0
    total = sum(per_tx_totals)
    mean = total / n
    var = 0.0
    for v in per_tx_totals:
        d = v - mean
        var += d * d
    return mean, math.sqrt(var / n), total


def amount_features(graph: UserGraph, user: int) -> tuple[float, float, float, float, float, float]:
    """(avg_in, avg_out, total_sent, total_received, std_received, std_sent)."""
    avg_in, std_received, total_received = _mean_std(graph.received.get(user, []))
    avg_out, std_sent, total_sent = _mean_std(graph.sent.get(user, []))
    return avg_in, avg_out, float(total_sent), float(total_received), std_received, std_sent


def _mean_neighbor_degree(neighbors: set[int], degree: dict[int, int]) -> float:
    if not neighbors:
        return 0.0
    return sum(degree.get(v, 0) for v in neighbors) / len(neighbors)


def neighborhood_features(graph: UserGraph, user: int) -> tuple[float, float, float, float]:
    """(nb_in_in, nb_in_out, nb_out_in, nb_out_out): average degree of the
    distinct in-/out-neighborhood; 0 for an empty neighbor set."""
    ins = graph.in_neighbors.get(user, set())
    outs = graph.out_neighbors.get(user, set())
    return (
        _mean_neighbor_degree(ins, graph.in_degree),
        _mean_neighbor_degree(ins, graph.out_degree),
        _mean_neighbor_degree(outs, graph.in_degree),
        _mean_neighbor_degree(outs, graph.out_degree),
    )


@dataclass
class FeatureMatrix:
    """Rows: users sorted by user id; columns: FEATURE_NAMES order."""

    user_ids: np.ndarray  # (n,) int64
    values: np.ndarray  # (n, 10) float64

    @property
    def n_rows(self) -> int:
        return int(self.user_ids.shape[0])


def assemble_feature_matrix(graph: UserGraph) -> FeatureMatrix:
    """One row per user present in the graph, deterministic row order."""
    n = graph.n_users
    user_ids = np.array(graph.users, dtype=np.int64)
    values = np.zeros((n, len(FEATURE_NAMES)), dtype=np.float64)
    for i, u in enumerate(graph.users):
        values[i, 0:6] = amount_features(graph, u)
        values[i, 6:10] = neighborhood_features(graph, u)
    return FeatureMatrix(user_ids, values)


def write_features_csv(matrix: FeatureMatrix, path, header: str = FEATURES_HEADER) -> None:
    """Write user_id plus the ten columns; floats via repr for exact round-trip."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for uid, row in zip(matrix.user_ids, matrix.values):
            fh.write(str(int(uid)) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def read_features_csv(path, header: str = FEATURES_HEADER) -> FeatureMatrix:
    user_ids: list[int] = []
    rows: list[list[float]] = []
    n_cols = len(header.split(",")) - 1
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        first = fh.readline().rstrip("\n")
        if first != header:
            raise ParseError(path, 1, f"unexpected header {first!r}")
        for line_no, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(",")
            if len(parts) != n_cols + 1:
                raise ParseError(path, line_no, f"expected {n_cols + 1} fields, got {len(parts)}")
            try:
                user_ids.append(int(parts[0]))
                rows.append([float(p) for p in parts[1:]])
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc)) from None
    values = np.array(rows, dtype=np.float64) if rows else np.zeros((0, n_cols))
    return FeatureMatrix(np.array(user_ids, dtype=np.int64), values)
