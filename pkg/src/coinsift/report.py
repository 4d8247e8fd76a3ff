"""Anomaly report: cluster summaries, dispersion export, theft matching.

A catalog address is matched by resolving it to its user and looking that
user up in the assignment table. Users absent from the clustered matrix
are reported with an explicit absent marker, never dropped. A match is
flagged when its cluster label is in the flag set; by default that is
{0}, the trimmed outlier group.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .cluster import AssignmentTable, ClusterModel
from .contraction import AddressUserMap
from .errors import ValidationError
from .ingest import TheftCatalog

DEFAULT_FLAG_LABELS = frozenset({0})

MATCHES_HEADER = "case_id,case_name,addr_id,user_id,label,flagged"
DISPERSION_HEADER = "user_id,label,distance"


@dataclass
class ClusterSummary:
    label: int
    size: int
    mean_distance: float
    max_distance: float
    share: float


@dataclass
class TheftMatch:
    case_id: int
    case_name: str
    addr_id: int
    user_id: int
    label: int | None  # None = user absent from the clustered matrix
    flagged: bool

    @property
    def present(self) -> bool:
        return self.label is not None


@dataclass
class AnomalyReport:
    summaries: list[ClusterSummary]
    matches: list[TheftMatch]
    flagged_users: int
    flagged_addresses: int
    flagged_cases: int
    n_rows: int
    flag_labels: tuple[int, ...] = (0,)
    config_echo: dict = field(default_factory=dict)


def summarize(table: AssignmentTable, model: ClusterModel) -> list[ClusterSummary]:
    """One summary per label 0..k, including empty clusters."""
    n = table.labels.shape[0]
    k = model.centers.shape[0]
    out = []
    for label in range(k + 1):
        mask = table.labels == label
        size = int(np.count_nonzero(mask))
        if size:
            dists = table.distances[mask]
            mean_d, max_d = float(dists.mean()), float(dists.max())
        else:
            mean_d = max_d = 0.0
        out.append(ClusterSummary(label, size, mean_d, max_d, size / n if n else 0.0))
    return out


def match_catalog(
    catalog: TheftCatalog,
    amap: AddressUserMap,
    user_ids: np.ndarray,
    table: AssignmentTable,
    flag_labels=DEFAULT_FLAG_LABELS,
) -> tuple[list[TheftMatch], int, int, int]:
    """Resolve every catalog address; returns (matches, users, addresses, cases).

    The three counts deduplicate flagged users, flagged addresses and
    flagged cases across the match rows.
    """
    flag_set = frozenset(int(v) for v in flag_labels)
    label_of = {int(u): int(l) for u, l in zip(user_ids, table.labels)}
    matches: list[TheftMatch] = []
    for e in catalog.entries:
        user = amap.resolve(e.addr_id)
        label = label_of.get(user)
        flagged = label is not None and label in flag_set
        matches.append(TheftMatch(e.case_id, e.case_name, e.addr_id, user, label, flagged))
    users = {m.user_id for m in matches if m.flagged}
    addrs = {m.addr_id for m in matches if m.flagged}
    cases = {m.case_id for m in matches if m.flagged}
    return matches, len(users), len(addrs), len(cases)


def build_report(
    user_ids: np.ndarray,
    table: AssignmentTable,
    model: ClusterModel,
    catalog: TheftCatalog | None = None,
    amap: AddressUserMap | None = None,
    flag_labels=DEFAULT_FLAG_LABELS,
    config_echo: dict | None = None,
) -> AnomalyReport:
    if user_ids.shape[0] != table.labels.shape[0]:
        raise ValidationError("assignments do not cover the matrix")
    summaries = summarize(table, model)
    if catalog is not None:
        matches, n_users, n_addrs, n_cases = match_catalog(
            catalog, amap or AddressUserMap.identity(), user_ids, table, flag_labels
        )
    else:
        matches, n_users, n_addrs, n_cases = [], 0, 0, 0
    return AnomalyReport(
        summaries=summaries,
        matches=matches,
        flagged_users=n_users,
        flagged_addresses=n_addrs,
        flagged_cases=n_cases,
        n_rows=int(user_ids.shape[0]),
        flag_labels=tuple(sorted(int(v) for v in flag_labels)),
        config_echo=dict(config_echo or {}),
    )


def write_report_json(report: AnomalyReport, path) -> None:
    payload = {
        "n_rows": report.n_rows,
        "flag_labels": list(report.flag_labels),
        "counts": {
            "flagged_users": report.flagged_users,
            "flagged_addresses": report.flagged_addresses,
            "flagged_cases": report.flagged_cases,
        },
        "summaries": [
            {
                "label": s.label,
                "size": s.size,
                "mean_distance": s.mean_distance,
                "max_distance": s.max_distance,
                "share": s.share,
            }
            for s in report.summaries
        ],
        "matches": [
            {
                "case_id": m.case_id,
                "case_name": m.case_name,
                "addr_id": m.addr_id,
                "user_id": m.user_id,
                "label": m.label,
                "flagged": m.flagged,
            }
            for m in report.matches
        ],
        "config": report.config_echo,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def read_report_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_dispersion_csv(user_ids: np.ndarray, table: AssignmentTable, path) -> None:
    """Per-row (label, distance) table for external plotting."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(DISPERSION_HEADER + "\n")
        for uid, label, dist in zip(user_ids, table.labels, table.distances):
            fh.write(f"{int(uid)},{int(label)},{repr(float(dist))}\n")


def write_matches_csv(matches: list[TheftMatch], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(MATCHES_HEADER + "\n")
        for m in matches:
            label = "absent" if m.label is None else str(m.label)
            fh.write(
                f"{m.case_id},{m.case_name},{m.addr_id},{m.user_id},{label},{str(m.flagged).lower()}\n"
            )
