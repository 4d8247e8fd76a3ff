"""Deterministic synthetic transaction data with injected anomalous users.

Background users own a single address and send log-uniform amounts to
random background addresses. Anomalous users own several addresses and
move multiplier-scaled volume, with every transaction's input side split
equally across all their addresses: each address on its own looks m times
smaller than the user behind it, which is the behavior the user-level
pipeline is meant to expose.

The generator also writes the true address -> user mapping (canonical id
= smallest owned address) and a ground-truth file, so derived contraction
and end-to-end detection can be checked exactly. Identical seed, identical
bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError

TXIN_FILE = "txin.tsv"
TXOUT_FILE = "txout.tsv"
CONTRACTION_FILE = "contraction.tsv"
GROUND_TRUTH_FILE = "ground_truth.json"


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 42
    n_background_users: int = 1000
    n_anomalous_users: int = 10
    txs_per_user: tuple[int, int] = (2, 6)
    amount_range: tuple[int, int] = (1_000_000, 10_000_000)  # satoshi, log-uniform
    anomaly_scale: float = 100.0
    addresses_per_anomalous_user: tuple[int, int] = (2, 4)

    def validate(self) -> None:
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.n_background_users < 2 or self.n_anomalous_users < 0:
            raise ConfigError("need >= 2 background users and >= 0 anomalous users")
        lo, hi = self.txs_per_user
        if lo < 1 or hi < lo:
            raise ConfigError(f"invalid txs_per_user range {self.txs_per_user}")
        alo, ahi = self.amount_range
        if alo < 1 or ahi < alo:
            raise ConfigError(f"invalid amount_range {self.amount_range}")
        if not self.anomaly_scale > 1.0:
            raise ConfigError(f"anomaly_scale must be > 1, got {self.anomaly_scale}")
        mlo, mhi = self.addresses_per_anomalous_user
        if mlo < 2 or mhi < mlo:
            raise ConfigError(
                f"addresses_per_anomalous_user must be >= 2, got {self.addresses_per_anomalous_user}"
            )


@dataclass
class GroundTruth:
    anomalous_users: set[int] = field(default_factory=set)
    addresses: dict[int, list[int]] = field(default_factory=dict)  # user -> owned addrs

    @property
    def partition(self) -> dict[int, int]:
        """addr -> user over every generated address."""
        return {a: u for u, addrs in self.addresses.items() for a in addrs}


def generate(config: SynthConfig, out_dir) -> GroundTruth:
    """Write txin.tsv / txout.tsv / contraction.tsv / ground_truth.json."""
    config.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.seed)
    n_bg = config.n_background_users

    # address layout: one per background user, then blocks for anomalous users
    truth = GroundTruth()
    owner_addrs: list[list[int]] = [[a] for a in range(n_bg)]
    next_addr = n_bg
    mlo, mhi = config.addresses_per_anomalous_user
    for _ in range(config.n_anomalous_users):
        m = int(rng.integers(mlo, mhi + 1))
        addrs = list(range(next_addr, next_addr + m))
        next_addr += m
        owner_addrs.append(addrs)
        truth.anomalous_users.add(addrs[0])
    for addrs in owner_addrs:
        truth.addresses[addrs[0]] = addrs

    tlo, thi = config.txs_per_user
    log_lo, log_hi = math.log(config.amount_range[0]), math.log(config.amount_range[1])
    tx_id = 0
    txin_lines: list[str] = []
    txout_lines: list[str] = []

    def draw_amount() -> int:
        return max(1, int(round(math.exp(rng.uniform(log_lo, log_hi)))))

    def draw_recipient(own: list[int]) -> int:
        while True:
            a = int(rng.integers(n_bg))
            if a not in own:
                return a

    for user_index, addrs in enumerate(owner_addrs):
        anomalous = user_index >= n_bg
        for _ in range(int(rng.integers(tlo, thi + 1))):
            amount = draw_amount()
            recipient = draw_recipient(addrs)
            if anomalous:
                m = len(addrs)
                share = max(1, int(amount * config.anomaly_scale) // m)
                for a in addrs:
                    txin_lines.append(f"{tx_id}\t{a}\t{share}")
                txout_lines.append(f"{tx_id}\t{recipient}\t{share * m}")
            else:
                txin_lines.append(f"{tx_id}\t{addrs[0]}\t{amount}")
                txout_lines.append(f"{tx_id}\t{recipient}\t{amount}")
            tx_id += 1

    (out / TXIN_FILE).write_text("\n".join(txin_lines) + "\n", encoding="utf-8")
    (out / TXOUT_FILE).write_text("\n".join(txout_lines) + "\n", encoding="utf-8")
    partition = truth.partition
    with open(out / CONTRACTION_FILE, "w", encoding="utf-8", newline="\n") as fh:
        for addr in sorted(partition):
            fh.write(f"{addr}\t{partition[addr]}\n")
    with open(out / GROUND_TRUTH_FILE, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(
            {
                "anomalous_users": sorted(truth.anomalous_users),
                "addresses": {str(u): truth.addresses[u] for u in sorted(truth.addresses)},
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    return truth


def load_ground_truth(path) -> GroundTruth:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return GroundTruth(
        anomalous_users=set(data["anomalous_users"]),
        addresses={int(u): list(addrs) for u, addrs in data["addresses"].items()},
    )
