"""Command-line pipeline: ingest -> contract -> features -> normalize -> cluster -> report.

Every stage is exposed as a subcommand that reads the previous stage's
artifact from the output directory and writes its own, and ``run``
executes them all in order; staged and one-shot execution produce
byte-identical artifacts. Defaults are k=8 and alpha=0.01. Exit codes:
0 success, 1 input/parse error, 2 config error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, cluster, contraction, features, ingest, normalize, report, synth
from .errors import ConfigError, ParseError, ValidationError

log = logging.getLogger("coinsift")

STAGE_COUNTS_FILE = "stage_counts.json"
FEATURES_FILE = "features.csv"
NORMALIZED_FILE = "normalized.csv"
SCALER_FILE = "scaler.json"
MODEL_FILE = "model.json"
ASSIGNMENTS_FILE = "assignments.csv"
REPORT_FILE = "report.json"
DISPERSION_FILE = "dispersion.csv"
MATCHES_FILE = "matches.csv"
CONTRACTION_FILE = "contraction.tsv"

NORMALIZED_HEADER = features.FEATURES_HEADER


def _update_stage_counts(out_dir: Path, **counts) -> None:
    """Cumulative stage-count log; stable key order for reproducible bytes."""
    path = out_dir / STAGE_COUNTS_FILE
    data = json.loads(path.read_text(encoding="utf-8")) if path.exists() else {}
    data.update(counts)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_amap(args, out_dir: Path) -> contraction.AddressUserMap:
    if getattr(args, "contraction", None):
        return contraction.load_contraction(args.contraction)
    return contraction.load_contraction(out_dir / CONTRACTION_FILE)


def stage_ingest_stats(args, out_dir: Path) -> ingest.DatasetStats:
    universe = ingest.load_address_universe(args.addresses) if args.addresses else None
    retained, stats = ingest.wipe_addresses(
        ingest.load_flow_records(args.txin, "input"),
        ingest.load_flow_records(args.txout, "output"),
        universe,
    )
    before = len(universe) if universe is not None else stats.n_distinct_addresses
    log.info("input rows: %d, output rows: %d", stats.n_input_rows, stats.n_output_rows)
    log.info("addresses before wipe: %d", before)
    log.info("addresses after wipe: %d (wiped %d)", stats.n_distinct_addresses, stats.n_wiped_addresses)
    log.info("distinct transactions: %d", stats.n_distinct_transactions)
    _update_stage_counts(
        out_dir,
        n_input_rows=stats.n_input_rows,
        n_output_rows=stats.n_output_rows,
        n_distinct_transactions=stats.n_distinct_transactions,
        addresses_before_wipe=before,
        addresses_after_wipe=stats.n_distinct_addresses,
        n_wiped_addresses=stats.n_wiped_addresses,
    )
    return stats


def stage_contract(args, out_dir: Path) -> Path:
    """Derive the contraction from the input side and export it."""
    amap = contraction.build_contraction(ingest.load_flow_records(args.txin, "input"))
    path = out_dir / CONTRACTION_FILE
    n = contraction.write_contraction(amap, path)
    log.info("contraction: %d addresses -> %d users", n, amap.n_users)
    return path


def stage_features(args, out_dir: Path) -> Path:
    amap = _load_amap(args, out_dir)
    graph = features.build_user_graph(
        ingest.load_flow_records(args.txin, "input"),
        ingest.load_flow_records(args.txout, "output"),
        amap,
    )
    matrix = features.assemble_feature_matrix(graph)
    path = out_dir / FEATURES_FILE
    features.write_features_csv(matrix, path)
    log.info("users after contraction: %d (feature rows)", matrix.n_rows)
    _update_stage_counts(out_dir, users_after_contraction=matrix.n_rows)
    return path


def stage_normalize(args, out_dir: Path) -> Path:
    matrix = features.read_features_csv(out_dir / FEATURES_FILE)
    scaler = normalize.fit(matrix.values)
    normalize.write_scaler_json(scaler, out_dir / SCALER_FILE)
    normalized = features.FeatureMatrix(matrix.user_ids, normalize.transform(scaler, matrix.values))
    path = out_dir / NORMALIZED_FILE
    features.write_features_csv(normalized, path, header=NORMALIZED_HEADER)
    log.info("normalized %d rows x %d columns", normalized.n_rows, scaler.n_columns)
    return path


def _cluster_config(args) -> cluster.TrimmedKMeansConfig:
    return cluster.TrimmedKMeansConfig(
        k=args.k,
        alpha=args.alpha,
        n_starts=args.starts,
        max_iter=args.max_iter,
        tol=args.tol,
        seed=args.seed,
    )


def stage_cluster(args, out_dir: Path) -> Path:
    matrix = features.read_features_csv(out_dir / NORMALIZED_FILE, header=NORMALIZED_HEADER)
    config = _cluster_config(args)
    log.info(
        "clustering: k=%d alpha=%s starts=%d max_iter=%d tol=%s seed=%d threads=%d",
        config.k, config.alpha, config.n_starts, config.max_iter, config.tol,
        config.seed, args.threads,
    )
    model, table = cluster.trimmed_kmeans(matrix.values, config, threads=args.threads)
    cluster.write_model_json(model, config, out_dir / MODEL_FILE)
    cluster.write_assignments_csv(matrix.user_ids, table, out_dir / ASSIGNMENTS_FILE)
    log.info(
        "objective %.6g, trimmed %d of %d rows (best start %d)",
        model.objective, table.n_trimmed, matrix.n_rows, model.best_start,
    )
    return out_dir / MODEL_FILE


def stage_report(args, out_dir: Path) -> Path:
    user_ids, table = cluster.read_assignments_csv(out_dir / ASSIGNMENTS_FILE)
    model, config = cluster.read_model_json(out_dir / MODEL_FILE)
    catalog = ingest.load_theft_catalog(args.thefts) if args.thefts else None
    amap = _load_amap(args, out_dir) if catalog is not None else None
    flag_labels = _parse_flag_labels(args.flag_labels, config.k)
    rep = report.build_report(
        user_ids,
        table,
        model,
        catalog=catalog,
        amap=amap,
        flag_labels=flag_labels,
        config_echo={
            "k": config.k,
            "alpha": config.alpha,
            "n_starts": config.n_starts,
            "max_iter": config.max_iter,
            "tol": config.tol,
            "seed": config.seed,
            "flag_labels": sorted(flag_labels),
        },
    )
    report.write_report_json(rep, out_dir / REPORT_FILE)
    report.write_dispersion_csv(user_ids, table, out_dir / DISPERSION_FILE)
    report.write_matches_csv(rep.matches, out_dir / MATCHES_FILE)
    log.info(
        "flagged: %d users, %d addresses, %d cases",
        rep.flagged_users, rep.flagged_addresses, rep.flagged_cases,
    )
    _update_stage_counts(
        out_dir,
        flagged_users=rep.flagged_users,
        flagged_addresses=rep.flagged_addresses,
        flagged_cases=rep.flagged_cases,
    )
    return out_dir / REPORT_FILE


def _parse_flag_labels(text: str, k: int) -> frozenset[int]:
    try:
        labels = frozenset(int(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"--flag-labels must be comma-separated integers, got {text!r}") from None
    if any(not 0 <= v <= k for v in labels):
        raise ConfigError(f"--flag-labels values must lie in 0..{k}, got {text!r}")
    return labels


PIPELINE_ARTIFACTS = (
    STAGE_COUNTS_FILE,
    CONTRACTION_FILE,
    FEATURES_FILE,
    SCALER_FILE,
    NORMALIZED_FILE,
    MODEL_FILE,
    ASSIGNMENTS_FILE,
    REPORT_FILE,
    DISPERSION_FILE,
    MATCHES_FILE,
)


def run_pipeline(args) -> int:
    """All stages in order; partial artifacts are removed on failure."""
    # validate configuration up front so a bad config writes nothing
    _cluster_config(args).validate()
    _parse_flag_labels(args.flag_labels, args.k)
    if args.contraction and args.derive_contraction:
        raise ConfigError("--contraction and --derive-contraction are mutually exclusive")
    if not args.contraction and not args.derive_contraction:
        raise ConfigError("exactly one of --contraction or --derive-contraction is required")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        stage_ingest_stats(args, out_dir)
        if args.derive_contraction:
            stage_contract(args, out_dir)
        stage_features(args, out_dir)
        stage_normalize(args, out_dir)
        stage_cluster(args, out_dir)
        stage_report(args, out_dir)
    except BaseException:
        for name in PIPELINE_ARTIFACTS:
            (out_dir / name).unlink(missing_ok=True)
        raise
    return 0


def run_synth(args) -> int:
    config = synth.SynthConfig(
        seed=args.seed,
        n_background_users=args.background_users,
        n_anomalous_users=args.anomalous_users,
        txs_per_user=(args.txs_per_user[0], args.txs_per_user[1]),
        amount_range=(args.amount_range[0], args.amount_range[1]),
        anomaly_scale=args.scale,
        addresses_per_anomalous_user=(
            args.addresses_per_anomalous[0],
            args.addresses_per_anomalous[1],
        ),
    )
    truth = synth.generate(config, args.out)
    log.info(
        "synth: %d background + %d anomalous users under %s",
        args.background_users, len(truth.anomalous_users), args.out,
    )
    return 0


def _add_io_args(p: argparse.ArgumentParser, txout: bool = True) -> None:
    p.add_argument("--txin", required=True, help="transaction input rows (TSV)")
    if txout:
        p.add_argument("--txout", required=True, help="transaction output rows (TSV)")
    p.add_argument("--out", required=True, help="output directory for artifacts")


def _add_contraction_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--contraction", help="precomputed address->user TSV")
    p.add_argument(
        "--derive-contraction",
        action="store_true",
        help="derive users from shared transaction inputs",
    )


def _add_cluster_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=cluster.DEFAULT_K, help="cluster count")
    p.add_argument("--alpha", type=float, default=cluster.DEFAULT_ALPHA, help="trim fraction")
    p.add_argument("--starts", type=int, default=cluster.DEFAULT_N_STARTS, help="random restarts")
    p.add_argument("--max-iter", type=int, default=cluster.DEFAULT_MAX_ITER)
    p.add_argument("--tol", type=float, default=cluster.DEFAULT_TOL)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1, help="worker threads (never changes results)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coinsift",
        description="Collective anomaly detection over transaction data via "
        "user aggregation and trimmed k-means outlier clustering.",
    )
    parser.add_argument("--version", action="version", version=f"coinsift {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full pipeline")
    _add_io_args(p)
    p.add_argument("--addresses", help="optional address universe (one id per line)")
    _add_contraction_args(p)
    p.add_argument("--thefts", help="theft catalog TSV")
    _add_cluster_args(p)
    p.add_argument("--flag-labels", default="0", help="labels treated as anomalous (default: 0)")
    p.set_defaults(func=run_pipeline)

    p = sub.add_parser("ingest-stats", help="dataset stage counts")
    _add_io_args(p)
    p.add_argument("--addresses")
    p.set_defaults(func=_stage_command(stage_ingest_stats))

    p = sub.add_parser("contract", help="derive the address->user mapping")
    _add_io_args(p, txout=False)
    p.set_defaults(func=_stage_command(stage_contract))

    p = sub.add_parser("features", help="build the per-user feature matrix")
    _add_io_args(p)
    _add_contraction_args(p)
    p.set_defaults(func=_stage_command(stage_features))

    p = sub.add_parser("normalize", help="fit and apply min-max scaling")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_stage_command(stage_normalize))

    p = sub.add_parser("cluster", help="trimmed k-means over the normalized matrix")
    p.add_argument("--out", required=True)
    _add_cluster_args(p)
    p.set_defaults(func=_stage_command(stage_cluster))

    p = sub.add_parser("report", help="summaries, dispersion export, theft matching")
    p.add_argument("--out", required=True)
    p.add_argument("--thefts")
    p.add_argument("--contraction")
    p.add_argument("--flag-labels", default="0")
    p.set_defaults(func=_stage_command(stage_report))

    p = sub.add_parser("synth", help="generate a synthetic dataset with known anomalies")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--background-users", type=int, default=1000)
    p.add_argument("--anomalous-users", type=int, default=10)
    p.add_argument("--txs-per-user", type=int, nargs=2, default=[2, 6], metavar=("LO", "HI"))
    p.add_argument(
        "--amount-range", type=int, nargs=2, default=[1_000_000, 10_000_000], metavar=("LO", "HI")
    )
    p.add_argument("--scale", type=float, default=100.0, help="anomalous volume multiplier")
    p.add_argument("--addresses-per-anomalous", type=int, nargs=2, default=[2, 4], metavar=("LO", "HI"))
    p.set_defaults(func=run_synth)

    return parser


def _stage_command(stage):
    def command(args) -> int:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        stage(args, out_dir)
        return 0

    return command


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return 2
    except (ParseError, ValidationError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
