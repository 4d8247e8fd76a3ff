"""Trimmed k-means clustering with a plain Lloyd baseline.

The trimmed variant runs concentration steps: against the current centers,
(a) compute each row's squared distance to its nearest center, (b) trim
the ceil(alpha * n) rows with the largest such distances, (c) assign the
retained rows to their nearest center, (d) recompute centers as the means
of their assigned rows. The trimmed rows form the outlier group and get
label 0; clusters are labeled 1..k after renumbering centers into
lexicographic coordinate order.

Every choice is deterministic: k-means++ initialization is seeded (start
s of a run with seed q uses seed q + s), equidistant centers resolve to
the lowest center index, and trim-boundary ties retain the lower row
index. Starts are independent, so results do not depend on how many
worker threads execute them.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, ParseError, ValidationError

DEFAULT_K = 8
DEFAULT_ALPHA = 0.01
DEFAULT_N_STARTS = 10
DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class TrimmedKMeansConfig:
    k: int
    alpha: float = DEFAULT_ALPHA
    n_starts: int = DEFAULT_N_STARTS
    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL
    seed: int = 0

    def validate(self, n_rows: int | None = None) -> None:
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not 0.0 <= self.alpha < 1.0:
            raise ConfigError(f"alpha must be in [0, 1), got {self.alpha}")
        if self.n_starts < 1:
            raise ConfigError(f"n_starts must be >= 1, got {self.n_starts}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.tol > 0.0:
            raise ConfigError(f"tol must be > 0, got {self.tol}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if n_rows is not None:
            h = trim_count(self.alpha, n_rows)
            if n_rows - h < self.k:
                raise ConfigError(
                    f"infeasible: n={n_rows} rows minus trim count {h} leaves fewer than k={self.k}"
                )


def trim_count(alpha: float, n: int) -> int:
    # ceil(alpha * n); the round() guards against FP noise such as
    # 0.1 * 10 == 1.0000000000000002 ceiling to 2.
    return math.ceil(round(alpha * n, 9))


@dataclass
class ClusterModel:
    """k centers in lexicographic coordinate order plus the trimmed objective."""

    centers: np.ndarray  # (k, d) float64
    objective: float
    best_start: int = 0
    n_iterations: int = 0


@dataclass
class AssignmentTable:
    """Per-row label in {0..k} (0 = trimmed) and Euclidean distance.

    The distance is to the assigned center for retained rows and to the
    nearest center for trimmed rows.
    """

    labels: np.ndarray  # (n,) int64
    distances: np.ndarray  # (n,) float64

    @property
    def n_trimmed(self) -> int:
        return int(np.count_nonzero(self.labels == 0))


def _as_matrix(matrix) -> np.ndarray:
    x = np.ascontiguousarray(matrix, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError(f"matrix must be 2-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("matrix contains non-finite values")
    return x


def _kmeanspp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded greedy k-means++ over all rows.

    Each new center is the best of 2 + floor(log k) candidates sampled
    proportionally to squared distance, judged by the resulting potential.
    """
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]), dtype=np.float64)
    centers[0] = x[int(rng.integers(n))]
    if k == 1:
        return centers
    n_trials = 2 + int(math.log(k))
    closest = kernels.pairwise_sqdist(x, centers[0:1])[:, 0]
    for c in range(1, k):
        total = float(closest.sum())
        if total > 0.0:
            cum = np.cumsum(closest)
            draws = rng.random(n_trials) * total
            candidates = np.minimum(np.searchsorted(cum, draws, side="right"), n - 1)
            best_pot = math.inf
            best_closest = closest
            idx = int(candidates[0])
            for cand in candidates:
                cand_closest = np.minimum(
                    closest, kernels.pairwise_sqdist(x, x[int(cand) : int(cand) + 1])[:, 0]
                )
                pot = float(cand_closest.sum())
                if pot < best_pot:
                    best_pot, best_closest, idx = pot, cand_closest, int(cand)
            centers[c] = x[idx]
            closest = best_closest
        else:
            # all rows coincide with chosen centers; duplicate one
            centers[c] = x[int(rng.integers(n))]
            closest = np.minimum(
                closest, kernels.pairwise_sqdist(x, centers[c : c + 1])[:, 0]
            )
    return centers


def _trim_assign(x: np.ndarray, centers: np.ndarray, h: int):
    """One trim-and-assign evaluation against fixed centers.

    Returns (retained row indices ascending, their labels, nearest-center
    squared distance per row). Boundary ties keep the lower row index
    retained; equidistant centers resolve to the lowest center index.
    """
    n = x.shape[0]
    d2 = kernels.pairwise_sqdist(x, centers)
    nearest = d2.argmin(axis=1)
    ndist = d2[np.arange(n), nearest]
    if h:
        order = np.argsort(ndist, kind="stable")
        retained = np.sort(order[: n - h])
    else:
        retained = np.arange(n)
    return retained, nearest[retained], ndist


def _run_start(x: np.ndarray, k: int, h: int, max_iter: int, tol: float, seed: int):
    """One seeded start; returns (objective, centers, labels, sqdist, iters).

    labels is full length with -1 for trimmed rows; sqdist holds every
    row's squared distance to its nearest center.
    """
    rng = np.random.default_rng(seed)
    centers = _kmeanspp_init(x, k, rng)
    prev_obj = None
    prev_retained = None
    prev_labels = None
    iters = 0
    for iters in range(1, max_iter + 1):
        retained, labels_r, ndist = _trim_assign(x, centers, h)
        retained_x = x[retained]
        sums, counts = kernels.accumulate_centers(retained_x, labels_r, k)
        new_centers = np.empty_like(centers)
        nonempty = counts > 0
        new_centers[nonempty] = sums[nonempty] / counts[nonempty, None]
        if not np.all(nonempty):
            # reseed each empty cluster at the farthest retained row not
            # already consumed by an earlier reseed this iteration
            far_d = ndist[retained].copy()
            for c in np.flatnonzero(~nonempty):
                pick = int(far_d.argmax())
                new_centers[c] = retained_x[pick]
                far_d[pick] = -1.0
        obj = float(np.sum(kernels.assigned_sqdist(retained_x, new_centers, labels_r)))
        if prev_obj is not None and obj > prev_obj * (1.0 + 1e-12) + 1e-15:
            raise AssertionError(
                f"objective increased within a start: {prev_obj!r} -> {obj!r}"
            )
        centers = new_centers
        converged = (
            prev_retained is not None
            and np.array_equal(retained, prev_retained)
            and np.array_equal(labels_r, prev_labels)
        )
        small_gain = (
            prev_obj is not None
            and prev_obj > 0.0
            and (prev_obj - obj) / prev_obj < tol
        )
        if converged or small_gain or prev_obj == 0.0:
            break
        prev_obj, prev_retained, prev_labels = obj, retained, labels_r
    # final consistency pass against the final centers: guarantees the
    # reported assignment is exactly a trim/assign of those centers, so
    # trim exactness and the separation invariant hold by construction
    retained, labels_r, ndist = _trim_assign(x, centers, h)
    labels = np.full(x.shape[0], -1, dtype=np.int64)
    labels[retained] = labels_r
    obj = float(np.sum(ndist[retained]))
    return obj, centers, labels, ndist, iters


def _renumber(centers: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort centers lexicographically; map labels to 1..k (0 = trimmed)."""
    k = centers.shape[0]
    perm = np.lexsort(centers.T[::-1])
    rank = np.empty(k, dtype=np.int64)
    rank[perm] = np.arange(k)
    out_labels = np.where(labels < 0, 0, rank[np.clip(labels, 0, k - 1)] + 1)
    return centers[perm], out_labels.astype(np.int64)


def trimmed_kmeans(
    matrix, config: TrimmedKMeansConfig, threads: int = 1
) -> tuple[ClusterModel, AssignmentTable]:
    """Best-of-n_starts trimmed k-means; pure function of (matrix, config)."""
    x = _as_matrix(matrix)
    config.validate(x.shape[0])
    h = trim_count(config.alpha, x.shape[0])
    return _multi_start(x, config, h, threads)


def lloyd_kmeans(
    matrix, config: TrimmedKMeansConfig, threads: int = 1
) -> tuple[ClusterModel, AssignmentTable]:
    """Plain Lloyd iteration: identical engine with the trim count forced to 0."""
    x = _as_matrix(matrix)
    config.validate(x.shape[0])
    return _multi_start(x, config, 0, threads)


def _multi_start(
    x: np.ndarray, config: TrimmedKMeansConfig, h: int, threads: int
) -> tuple[ClusterModel, AssignmentTable]:
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")

    def one(s: int):
        return _run_start(x, config.k, h, config.max_iter, config.tol, config.seed + s)

    if threads == 1 or config.n_starts == 1:
        results = [one(s) for s in range(config.n_starts)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(config.n_starts)))

    best_start = 0
    for s in range(1, config.n_starts):
        if results[s][0] < results[best_start][0]:
            best_start = s
    obj, centers, labels, ndist, iters = results[best_start]
    centers, pub_labels = _renumber(centers, labels)
    distances = np.sqrt(ndist)
    model = ClusterModel(
        centers=centers, objective=obj, best_start=best_start, n_iterations=iters
    )
    return model, AssignmentTable(labels=pub_labels, distances=distances)


def objective(matrix, centers, labels) -> float:
    """Sum of squared distances of retained rows (label != 0) to their centers."""
    x = _as_matrix(matrix)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape[0] != x.shape[0]:
        raise ValidationError("labels length does not match matrix")
    k = centers.shape[0]
    if labels.min(initial=0) < 0 or labels.max(initial=0) > k:
        raise ValidationError(f"labels must lie in 0..{k}")
    retained = labels > 0
    if not retained.any():
        return 0.0
    d2 = kernels.assigned_sqdist(x[retained], centers, labels[retained] - 1)
    return float(np.sum(d2))


ORACLE_MAX_N = 12
ORACLE_MAX_K = 2
ORACLE_MAX_TRIM = 2


def brute_force_trimmed_kmeans(matrix, k: int, alpha: float) -> float:
    """Exhaustive global optimum over all trim subsets and assignments.

    Test oracle for tiny instances only; cluster cost uses the moment
    identity sum ||x - mean||^2 = sum ||x||^2 - ||sum x||^2 / count, a
    different evaluation route than the iterative algorithm.
    """
    x = _as_matrix(matrix)
    n = x.shape[0]
    h = trim_count(alpha, n)
    if n > ORACLE_MAX_N or k > ORACLE_MAX_K or h > ORACLE_MAX_TRIM or k < 1:
        raise ValidationError(
            f"oracle size guard: need n <= {ORACLE_MAX_N}, k <= {ORACLE_MAX_K}, "
            f"trim <= {ORACLE_MAX_TRIM}; got n={n}, k={k}, trim={h}"
        )
    if n - h < k:
        raise ConfigError(f"infeasible: n={n}, trim={h}, k={k}")
    sq = np.einsum("ij,ij->i", x, x)
    best = math.inf
    for trimmed in itertools.combinations(range(n), h):
        keep = [i for i in range(n) if i not in trimmed]
        r = x[keep]
        rsq = sq[keep]
        total_s = r.sum(axis=0)
        total_q = float(rsq.sum())
        m = len(keep)
        if k == 1:
            best = min(best, _moment_cost(total_s, total_q, m))
            continue
        # Gray-code walk over cluster-0 membership: one point toggles per step
        s0 = np.zeros(x.shape[1])
        q0 = 0.0
        c0 = 0
        inside = [False] * m
        best = min(best, _moment_cost(total_s - s0, total_q - q0, m - c0))
        for step in range(1, 1 << m):
            i = (step & -step).bit_length() - 1
            if inside[i]:
                s0 = s0 - r[i]
                q0 -= float(rsq[i])
                c0 -= 1
            else:
                s0 = s0 + r[i]
                q0 += float(rsq[i])
                c0 += 1
            inside[i] = not inside[i]
            cost = _moment_cost(s0, q0, c0) + _moment_cost(total_s - s0, total_q - q0, m - c0)
            if cost < best:
                best = cost
    return best


def _moment_cost(s: np.ndarray, q: float, c: int) -> float:
    if c <= 0:
        return 0.0
    return max(q - float(s @ s) / c, 0.0)


def write_model_json(model: ClusterModel, config: TrimmedKMeansConfig, path) -> None:
    """Centers at full precision plus a config echo."""
    payload = {
        "k": config.k,
        "alpha": config.alpha,
        "n_starts": config.n_starts,
        "max_iter": config.max_iter,
        "tol": config.tol,
        "seed": config.seed,
        "objective": model.objective,
        "best_start": model.best_start,
        "n_iterations": model.n_iterations,
        "centers": [[float(v) for v in row] for row in model.centers],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def read_model_json(path) -> tuple[ClusterModel, TrimmedKMeansConfig]:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    config = TrimmedKMeansConfig(
        k=data["k"],
        alpha=data["alpha"],
        n_starts=data["n_starts"],
        max_iter=data["max_iter"],
        tol=data["tol"],
        seed=data["seed"],
    )
    model = ClusterModel(
        centers=np.array(data["centers"], dtype=np.float64),
        objective=data["objective"],
        best_start=data["best_start"],
        n_iterations=data["n_iterations"],
    )
    return model, config


ASSIGNMENTS_HEADER = "user_id,label,distance"


def write_assignments_csv(user_ids, table: AssignmentTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(ASSIGNMENTS_HEADER + "\n")
        for uid, label, dist in zip(user_ids, table.labels, table.distances):
            fh.write(f"{int(uid)},{int(label)},{repr(float(dist))}\n")


def read_assignments_csv(path) -> tuple[np.ndarray, AssignmentTable]:
    user_ids: list[int] = []
    labels: list[int] = []
    dists: list[float] = []
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        first = fh.readline().rstrip("\n")
        if first != ASSIGNMENTS_HEADER:
            raise ParseError(path, 1, f"unexpected header {first!r}")
        for line_no, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(",")
            if len(parts) != 3:
                raise ParseError(path, line_no, f"expected 3 fields, got {len(parts)}")
            try:
                user_ids.append(int(parts[0]))
                labels.append(int(parts[1]))
                dists.append(float(parts[2]))
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc)) from None
    table = AssignmentTable(
        labels=np.array(labels, dtype=np.int64),
        distances=np.array(dists, dtype=np.float64),
    )
    return np.array(user_ids, dtype=np.int64), table
