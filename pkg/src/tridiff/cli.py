"""Command-line interface.

Subcommands cover the whole pipeline: ingest (parse + purify), split
(manifest emission), recommend (one user's list), sweep (the full
repeated-split lambda protocol with TSV + figure output), synth
(surrogate data generation) and oracle (dense-matrix reference scores
for small graphs).

Exit codes: 0 success; 1 usage or configuration error; 2 data error
(including I/O); 3 internal invariant violation; 141 when the output
pipe closes early.
"""

from __future__ import annotations

import argparse
import os
import sys

from .diffusion import check_lambda
from .errors import ConfigError, DataError
from .experiment import DEFAULT_GRID, ExperimentConfig, emit_report, sweep
from .graph import build_graph
from .ingestion import (
    PurificationPolicy,
    purify,
    read_interactions,
    write_interactions,
)
from .oracle import oracle_score_user
from .recommend import recommend, write_lists
from .splitting import split, write_manifest
from .synth import SynthConfig, synth_generate

ORACLE_ITEM_LIMIT = 2000


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting, so bad usage maps to exit code 1."""

    def error(self, message):
        raise ConfigError(message)


def _parse_grid(text: str) -> tuple[float, ...]:
    """Either `start:stop:step` or a comma-separated list of values."""
    try:
        if ":" in text:
            start_s, stop_s, step_s = text.split(":")
            start, stop, step = float(start_s), float(stop_s), float(step_s)
            if step <= 0:
                raise ConfigError(f"grid step must be positive in {text!r}")
            values = []
            k = 0
            while (v := round(start + k * step, 10)) <= stop + 1e-12:
                values.append(min(v, stop))
                k += 1
            return tuple(values)
        return tuple(float(v) for v in text.split(","))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"cannot parse lambda grid {text!r}: {exc}") from exc


def _parse_lengths(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse list lengths {text!r}: {exc}") from exc


def _load_purified(path: str, policy: PurificationPolicy = PurificationPolicy()):
    records = read_interactions(path)
    records, stats = purify(records, policy)
    if stats.passes:
        print(
            f"purification: removed {stats.users_removed} users, "
            f"{stats.items_removed} items, {stats.tags_removed} tags "
            f"in {len(stats.passes)} passes "
            f"({stats.input_records} -> {stats.output_records} records)",
            file=sys.stderr,
        )
    return records


def _lookup_user(graph, label: str) -> int:
    user = graph.user_index.get(label)
    if user is None:
        raise DataError(f"unknown user label {label!r}")
    return user


def _cmd_ingest(args) -> int:
    policy = PurificationPolicy(
        min_users_per_item=args.min_item_users,
        drop_singleton_tags=not args.no_singleton_tag_drop,
    )
    records = _load_purified(args.input, policy)
    write_interactions(records, args.output)
    print(f"wrote {len(records)} records to {args.output}", file=sys.stderr)
    return 0


def _cmd_split(args) -> int:
    records = _load_purified(args.input)
    dataset = split(records, args.fraction, args.seed)
    write_manifest(dataset, records, args.manifest)
    orphans = dataset.orphan_stats
    print(
        f"split seed {args.seed}: {dataset.n_test_pairs} test pairs retained, "
        f"{orphans.users} orphaned by user, {orphans.items} by item; "
        f"manifest: {args.manifest}",
        file=sys.stderr,
    )
    return 0


def _cmd_recommend(args) -> int:
    records = _load_purified(args.input)
    graph = build_graph(records)
    user = _lookup_user(graph, args.user)
    lst = recommend(graph, user, args.lam, args.top)
    write_lists([lst], graph, sys.stdout)
    if lst.short:
        print(
            f"note: only {len(lst.items)} candidates exist, list is short",
            file=sys.stderr,
        )
    return 0


def _cmd_sweep(args) -> int:
    records = _load_purified(args.input)
    config = ExperimentConfig(
        lambda_grid=_parse_grid(args.grid),
        runs=args.runs,
        test_fraction=args.fraction,
        list_lengths=_parse_lengths(args.lengths),
        master_seed=args.seed,
        pair_sample_threshold=args.pair_sample_threshold,
        pair_sample_size=args.pair_sample_size,
        workers=args.workers,
        fine_opt=args.fine_opt,
    )
    result = sweep(records, config)
    emit_report(result, args.out, figures=not args.no_figures)
    opt_lam, opt_val = result.optima[("auc", config.list_lengths[0])]
    print(
        f"sweep done: {len(result.reports)} rows, "
        f"AUC optimum {opt_val:.4f} at lambda={opt_lam:.4f}; reports in {args.out}",
        file=sys.stderr,
    )
    return 0


def _cmd_synth(args) -> int:
    cfg = SynthConfig(
        users=args.users,
        items=args.items,
        tags=args.tags,
        topics=args.topics,
        mean_profile=args.mean_profile,
        mean_tags=args.mean_tags,
        tag_signal=args.signal,
        collect_affinity=args.affinity,
        popularity_exponent=args.pop_exponent,
        seed=args.seed,
    )
    records = synth_generate(cfg)
    write_interactions(records, args.output)
    print(f"wrote {len(records)} synthetic records to {args.output}", file=sys.stderr)
    return 0


def _cmd_oracle(args) -> int:
    records = _load_purified(args.input)
    graph = build_graph(records)
    if graph.n_items > ORACLE_ITEM_LIMIT:
        raise ConfigError(
            f"oracle is dense and refuses graphs with more than "
            f"{ORACLE_ITEM_LIMIT} items (got {graph.n_items})"
        )
    user = _lookup_user(graph, args.user)
    scores = oracle_score_user(graph, user, args.lam)
    for i, label in enumerate(graph.item_labels):
        sys.stdout.write(f"{label}\t{repr(float(scores[i]))}\n")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(
        prog="tridiff",
        description="Tag-aware diffusion recommender and evaluation harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and purify an interaction file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--no-singleton-tag-drop", action="store_true",
                   help="keep tags attached to a single item")
    p.add_argument("--min-item-users", type=int, default=2,
                   help="minimum distinct users per item (default 2)")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("split", help="emit a train/test split manifest")
    p.add_argument("--input", required=True)
    p.add_argument("--fraction", type=float, default=0.05)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("recommend", help="print one user's top-L list")
    p.add_argument("--input", required=True)
    p.add_argument("--user", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--top", type=int, default=10)
    p.set_defaults(func=_cmd_recommend)

    p = sub.add_parser("sweep", help="repeated-split lambda sweep with reports")
    p.add_argument("--input", required=True)
    p.add_argument("--grid", default="0:1:0.05",
                   help="start:stop:step or comma-separated lambdas (default 0:1:0.05)")
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--fraction", type=float, default=0.05)
    p.add_argument("--lengths", default="10,20,50",
                   help="comma-separated recommendation list lengths")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--fine-opt", action="store_true",
                   help="refine the AUC optimum at 0.01 lambda steps")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-figures", action="store_true",
                   help="skip PNG rendering, write TSV only")
    p.add_argument("--pair-sample-threshold", type=int, default=None,
                   help="sample diversification pairs above this many users")
    p.add_argument("--pair-sample-size", type=int, default=100_000)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("synth", help="generate seeded synthetic interactions")
    p.add_argument("--users", type=int, required=True)
    p.add_argument("--items", type=int, required=True)
    p.add_argument("--tags", type=int, required=True)
    p.add_argument("--topics", type=int, default=20)
    p.add_argument("--signal", type=float, default=0.9,
                   help="probability a tag reflects its item's topic")
    p.add_argument("--mean-profile", type=float, default=10.0)
    p.add_argument("--mean-tags", type=float, default=3.0)
    p.add_argument("--affinity", type=float, default=0.75,
                   help="probability a collection stays within the user's topic")
    p.add_argument("--pop-exponent", type=float, default=0.8)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("oracle", help="dense reference scores (small graphs)")
    p.add_argument("--input", required=True)
    p.add_argument("--user", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.set_defaults(func=_cmd_oracle)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if hasattr(args, "lam"):
        check_lambda(args.lam)
    return args.func(args)


def entrypoint(argv=None) -> int:
    try:
        code = main(argv)
        sys.stdout.flush()  # surface a closed pipe here, not at shutdown
        return code
    except SystemExit as exc:  # argparse --help
        code = exc.code
        return code if isinstance(code, int) else 0
    except BrokenPipeError:
        # a downstream consumer (head, less) went away; repoint the fd at
        # devnull so the interpreter's final flush stays quiet
        try:
            devnull = os.open(os.devnull, os.O_WRONLY)
            os.dup2(devnull, sys.stdout.fileno())
            os.close(devnull)
        except OSError:
            pass
        return 141
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001  internal invariant violations
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(entrypoint())
