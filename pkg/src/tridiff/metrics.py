"""The four evaluation measures, exact by default.

AUC is the exact Mann-Whitney statistic with half credit for ties,
computed by sorting rather than pair enumeration. Diversification uses
a counting identity: the total overlap over all unordered list pairs
equals sum_i C(c_i, 2) where c_i counts the lists containing item i, so
the exact value costs one pass over the lists. A seeded pair-sampling
estimator exists for callers who want it anyway; nothing in the default
path samples.

`evaluate_split` is the workhorse: it scores every evaluable user of a
split once, blends at every requested lambda, and accumulates all four
metrics for every requested list length in a single pass. Users are
processed in fixed-size chunks; chunk boundaries depend only on the
chunk size, and partial results merge in chunk order, so the outcome is
identical for one worker and many.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass

import numpy as np

from .diffusion import diffuse_both, integrate
from .errors import ContractError, DataError
from .graph import TripartiteGraph
from .recommend import RecommendationList, candidate_items, top_candidates
from .splitting import SplitDataset

METRIC_NAMES = ("auc", "recall", "diversification", "novelty")


@dataclass(frozen=True)
class MetricsReport:
    """One evaluated (lambda, list length, run) cell.

    ``lam`` is the blend parameter; ``length`` the nominal L of the three
    list metrics (AUC does not depend on it and repeats across lengths).
    ``seed`` is the derived split seed of the run.
    """

    lam: float
    length: int
    auc: float
    recall: float
    diversification: float
    novelty: float
    evaluated_users: int
    skipped_users: int
    seed: int

    def row(self) -> str:
        """The report TSV line for this cell."""
        fields = [
            repr(float(self.lam)),
            str(self.length),
            repr(float(self.auc)),
            repr(float(self.recall)),
            repr(float(self.diversification)),
            repr(float(self.novelty)),
            str(self.evaluated_users),
            str(self.skipped_users),
            str(self.seed),
        ]
        return "\t".join(fields)


REPORT_HEADER = (
    "lambda\tL\tauc\trecall\tdiversification\tnovelty"
    "\tevaluated_users\tskipped_users\tseed"
)


def auc_user(test_scores: np.ndarray, other_scores: np.ndarray) -> float:
    """Probability that a random test item outscores a random non-test one.

    Tied pairs count half. Exact: equals brute-force enumeration over
    all |H| x |Z| pairs.
    """
    h = np.asarray(test_scores, dtype=np.float64)
    z = np.asarray(other_scores, dtype=np.float64)
    if len(h) == 0:
        raise ContractError("AUC needs at least one test item")
    if len(z) == 0:
        raise ContractError("AUC is undefined without non-test candidates")
    z_sorted = np.sort(z)
    lo = np.searchsorted(z_sorted, h, side="left")
    hi = np.searchsorted(z_sorted, h, side="right")
    wins = float(lo.sum()) + 0.5 * float((hi - lo).sum())
    return wins / (len(h) * len(z))


def recall(lists, test_sets, length: int) -> float:
    """Per-user-averaged recovery rate of held-out items (not pooled).

    Each user contributes |top-L ∩ test| / |test|; the mean over users
    with a nonempty test set is returned.
    """
    total = 0.0
    n = 0
    for lst in lists:
        test = test_sets.get(lst.user)
        if test is None or len(test) == 0:
            continue
        n += 1
        total += float(np.isin(lst.items[:length], test).sum()) / len(test)
    if n == 0:
        raise DataError("recall over zero evaluable users")
    return total / n


def _overlap_sum(lists, length: int) -> tuple[int, int]:
    """(sum of pairwise list overlaps, number of lists) via item counts."""
    concat = []
    n = 0
    for lst in lists:
        n += 1
        concat.append(np.asarray(lst.items[:length], dtype=np.int64))
    if n < 2:
        return 0, n
    counts = np.bincount(np.concatenate(concat))
    return int((counts * (counts - 1) // 2).sum()), n


def diversification(lists, length: int) -> float:
    """Mean over user pairs of (1 - overlap / L), exact over all pairs.

    The denominator is the nominal L even when a list is short. Returns
    NaN with fewer than two lists (the mean over zero pairs).
    """
    overlap, n = _overlap_sum(lists, length)
    if n < 2:
        return float("nan")
    pairs = n * (n - 1) // 2
    return 1.0 - overlap / (length * pairs)


def diversification_sampled(
    lists, length: int, sample_size: int, seed: int
) -> tuple[float, float]:
    """Uniform-pair estimator of diversification with its standard error.

    Draws ``sample_size`` unordered pairs (with replacement across
    draws) from a seeded generator. Only worthwhile when the number of
    lists is so large that even the counting identity's bincount over
    items is not; provided for completeness and cross-checking.
    """
    mat = [np.asarray(lst.items[:length], dtype=np.int64) for lst in lists]
    n = len(mat)
    if n < 2:
        return float("nan"), float("nan")
    rng = np.random.default_rng(seed)
    a = rng.integers(0, n, size=sample_size)
    b = rng.integers(0, n - 1, size=sample_size)
    b = np.where(b >= a, b + 1, b)  # uniform over off-diagonal ordered pairs
    vals = np.empty(sample_size, dtype=np.float64)
    for k in range(sample_size):
        vals[k] = 1.0 - len(np.intersect1d(mat[a[k]], mat[b[k]], assume_unique=True)) / length
    est = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(sample_size)) if sample_size > 1 else float("nan")
    return est, stderr


def novelty(lists, graph: TripartiteGraph, length: int) -> float:
    """Average training degree of recommended items; lower reads as more novel.

    Normalised by the nominal list length L times the list count, per
    the formula, even when some lists are short.
    """
    total = 0.0
    n = 0
    for lst in lists:
        n += 1
        total += float(graph.item_degree[np.asarray(lst.items[:length], dtype=np.int64)].sum())
    if n == 0:
        raise DataError("novelty over zero lists")
    return total / (n * length)


# ---------------------------------------------------------------------------
# Whole-split evaluation


@dataclass
class SplitEvaluation:
    """All metrics of one split over a lambda grid and several list lengths."""

    lambdas: tuple[float, ...]
    list_lengths: tuple[int, ...]
    auc: np.ndarray                 # (n_lambda,)
    recall: np.ndarray              # (n_lambda, n_length)
    diversification: np.ndarray     # (n_lambda, n_length), NaN when < 2 lists
    novelty: np.ndarray             # (n_lambda, n_length)
    evaluated_users: int
    skipped_users: int
    short_lists: np.ndarray         # (n_lambda, n_length) users with < L candidates
    diversification_stderr: np.ndarray | None = None  # set on the sampled path


class _Partial:
    """Accumulator for one chunk of users."""

    def __init__(self, n_lambda: int, n_length: int, n_items: int, collect: bool):
        self.auc_sum = np.zeros(n_lambda)
        self.recall_sum = np.zeros((n_lambda, n_length))
        self.novelty_sum = np.zeros((n_lambda, n_length))
        self.item_counts = np.zeros((n_lambda, n_length, n_items), dtype=np.int64)
        self.short = np.zeros((n_lambda, n_length), dtype=np.int64)
        self.evaluated = 0
        self.skipped = 0
        self.lists: list[list[list[np.ndarray]]] | None = (
            [[[] for _ in range(n_length)] for _ in range(n_lambda)] if collect else None
        )

    def merge(self, other: "_Partial") -> None:
        self.auc_sum += other.auc_sum
        self.recall_sum += other.recall_sum
        self.novelty_sum += other.novelty_sum
        self.item_counts += other.item_counts
        self.short += other.short
        self.evaluated += other.evaluated
        self.skipped += other.skipped
        if self.lists is not None and other.lists is not None:
            for li, per_len in enumerate(other.lists):
                for gi, lsts in enumerate(per_len):
                    self.lists[li][gi].extend(lsts)


def _member_mask(sorted_ref: np.ndarray, query: np.ndarray) -> np.ndarray:
    """query ∈ sorted_ref, elementwise, both unique."""
    if len(sorted_ref) == 0:
        return np.zeros(len(query), dtype=bool)
    pos = np.searchsorted(sorted_ref, query)
    pos_c = np.minimum(pos, len(sorted_ref) - 1)
    return (pos < len(sorted_ref)) & (sorted_ref[pos_c] == query)


def _evaluate_users(
    split: SplitDataset,
    lambdas: tuple[float, ...],
    lengths: tuple[int, ...],
    users: np.ndarray,
    collect_lists: bool,
) -> _Partial:
    g = split.training_graph
    part = _Partial(len(lambdas), len(lengths), g.n_items, collect_lists)
    max_len = max(lengths) if lengths else 0
    degree = g.item_degree

    for u in users:
        u = int(u)
        test = split.test_sets[u]
        cand = candidate_items(g, u)
        n_other = len(cand) - len(test)
        if n_other == 0:
            part.skipped += 1
            continue
        part.evaluated += 1
        f_prime, f_dprime = diffuse_both(g, u)
        test_mask = _member_mask(test, cand)
        other = cand[~test_mask]
        for li, lam in enumerate(lambdas):
            scores = integrate(f_prime, f_dprime, lam)
            part.auc_sum[li] += auc_user(scores[test], scores[other])
            if not lengths:
                continue
            top = cand[top_candidates(cand, scores[cand], max_len)]
            hits = _member_mask(test, top)
            for gi, length in enumerate(lengths):
                prefix = top[:length]
                part.recall_sum[li, gi] += float(hits[:length].sum()) / len(test)
                part.novelty_sum[li, gi] += float(degree[prefix].sum())
                part.item_counts[li, gi][prefix] += 1
                if len(prefix) < length:
                    part.short[li, gi] += 1
                if part.lists is not None:
                    part.lists[li][gi].append(prefix)
    return part


# module globals inherited by forked pool workers; see evaluate_split
_CHUNK_CTX: tuple | None = None


def _chunk_worker(chunk_index: int) -> _Partial:
    split, lambdas, lengths, chunks, collect = _CHUNK_CTX
    return _evaluate_users(split, lambdas, lengths, chunks[chunk_index], collect)


def evaluate_split(
    split: SplitDataset,
    lambdas,
    list_lengths=(10, 20, 50),
    workers: int = 1,
    chunk_size: int = 512,
    pair_sample_threshold: int | None = None,
    pair_sample_size: int = 100_000,
) -> SplitEvaluation:
    """Score all evaluable users and compute every metric in one pass.

    A user is evaluable when they hold at least one retained test item
    and at least one non-test candidate; others are skipped and counted.
    Diversification is exact unless ``pair_sample_threshold`` is set and
    exceeded by the evaluated-user count, in which case the seeded
    sampling estimator is used and its standard error reported.

    Deterministic for a fixed split and parameter set, including under
    chunk-level parallelism: identical results for any ``workers``.
    """
    lambdas = tuple(float(l) for l in lambdas)
    lengths = tuple(int(x) for x in list_lengths)
    if not lambdas:
        raise ContractError("evaluate_split needs at least one lambda")
    users = np.array(sorted(split.test_sets), dtype=np.int64)
    if len(users) == 0:
        raise DataError("split has no users with retained test items")
    collect = pair_sample_threshold is not None and len(users) > pair_sample_threshold
    chunks = [users[i:i + chunk_size] for i in range(0, len(users), chunk_size)]

    global _CHUNK_CTX
    if workers > 1 and len(chunks) > 1:
        _CHUNK_CTX = (split, lambdas, lengths, chunks, collect)
        try:
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(min(workers, len(chunks))) as pool:
                partials = list(pool.imap(_chunk_worker, range(len(chunks))))
        finally:
            _CHUNK_CTX = None
    else:
        partials = [
            _evaluate_users(split, lambdas, lengths, chunk, collect) for chunk in chunks
        ]

    total = partials[0]
    for part in partials[1:]:
        total.merge(part)
    if total.evaluated == 0:
        raise DataError("no evaluable users: every test-holding user lacks candidates")

    n_l, n_g = len(lambdas), len(lengths)
    auc = total.auc_sum / total.evaluated
    rec = total.recall_sum / total.evaluated
    nov = np.zeros((n_l, n_g))
    div = np.full((n_l, n_g), float("nan"))
    div_err: np.ndarray | None = None
    pairs = total.evaluated * (total.evaluated - 1) // 2
    use_sampling = collect and total.evaluated > (pair_sample_threshold or 0)
    if use_sampling:
        div_err = np.full((n_l, n_g), float("nan"))
    for li in range(n_l):
        for gi in range(n_g):
            nov[li, gi] = total.novelty_sum[li, gi] / (total.evaluated * lengths[gi])
            if pairs == 0:
                continue
            if use_sampling:
                wrapped = [
                    RecommendationList(0, items, np.empty(0), lengths[gi])
                    for items in total.lists[li][gi]
                ]
                seed = int(
                    np.random.SeedSequence(split.seed, spawn_key=(li, gi, 1))
                    .generate_state(1, np.uint64)[0]
                )
                div[li, gi], div_err[li, gi] = diversification_sampled(
                    wrapped, lengths[gi], pair_sample_size, seed
                )
            else:
                counts = total.item_counts[li, gi]
                overlap = int((counts * (counts - 1) // 2).sum())
                div[li, gi] = 1.0 - overlap / (lengths[gi] * pairs)

    return SplitEvaluation(
        lambdas=lambdas,
        list_lengths=lengths,
        auc=auc,
        recall=rec,
        diversification=div,
        novelty=nov,
        evaluated_users=total.evaluated,
        skipped_users=total.skipped,
        short_lists=total.short,
        diversification_stderr=div_err,
    )


def auc(split: SplitDataset, lam: float, workers: int = 1) -> float:
    """System AUC at one lambda: the mean of auc_user over evaluable users."""
    result = evaluate_split(split, [lam], list_lengths=(), workers=workers)
    return float(result.auc[0])
