import numpy as np
import pytest

from tridiff import InteractionRecord, derive_run_seed, split
from tridiff.errors import ConfigError
from tridiff.splitting import split_run, write_manifest


def _clique_records(n_users=12, n_items=10):
    """Every user collects every item; dense enough that no orphans appear."""
    recs = []
    for u in range(n_users):
        for i in range(n_items):
            recs.append(InteractionRecord(f"u{u}", f"i{i}", (f"t{i % 3}",)))
    return recs


class TestSplit:
    def test_heldout_count_is_ceiling(self):
        recs = _clique_records(10, 10)  # 100 distinct pairs
        ds = split(recs, 0.05, seed=1)
        total_test = ds.n_test_pairs + ds.orphan_stats.total
        assert total_test == 5

    def test_determinism(self):
        recs = _clique_records()
        a = split(recs, 0.1, seed=123)
        b = split(recs, 0.1, seed=123)
        assert a.test_sets.keys() == b.test_sets.keys()
        for u in a.test_sets:
            np.testing.assert_array_equal(a.test_sets[u], b.test_sets[u])
        assert a.training_graph.user_labels == b.training_graph.user_labels

    def test_different_seeds_differ(self):
        recs = _clique_records()
        a = split(recs, 0.2, seed=1)
        b = split(recs, 0.2, seed=2)
        same = all(
            u in b.test_sets and np.array_equal(a.test_sets[u], b.test_sets[u])
            for u in a.test_sets
        ) and a.test_sets.keys() == b.test_sets.keys()
        assert not same

    def test_no_pair_in_both_parts(self):
        recs = _clique_records()
        ds = split(recs, 0.3, seed=5)
        g = ds.training_graph
        for u, items in ds.test_sets.items():
            assert not np.isin(items, g.user_items(u)).any()

    def test_union_property(self):
        recs = _clique_records(8, 8)
        ds = split(recs, 0.25, seed=9)
        g = ds.training_graph
        train = g.n_collect_edges
        assert train + ds.n_test_pairs + ds.orphan_stats.total == 64

    def test_orphan_item_dropped_and_counted(self):
        # i_solo occurs in exactly one pair; force it out by trying seeds
        base = _clique_records(6, 6)
        base.append(InteractionRecord("u0", "i_solo", ("t0",)))
        for seed in range(200):
            ds = split(base, 0.1, seed=seed)
            if "i_solo" not in ds.training_graph.item_index:
                assert ds.orphan_stats.items >= 1
                break
        else:
            pytest.fail("i_solo never held out in 200 seeds")

    def test_tags_of_heldout_pairs_leave_graph(self):
        # tag t_only is attested by a single pair; when that pair is held
        # out the training graph must not contain the tag
        base = _clique_records(6, 6)
        base.append(InteractionRecord("u5", "i0", ("t_only",)))
        for seed in range(300):
            ds = split(base, 0.1, seed=seed)
            g = ds.training_graph
            u5, i0 = g.user_index.get("u5"), g.item_index.get("i0")
            pair_in_train = (
                u5 is not None and i0 is not None and g.has_edge(u5, i0)
            )
            if not pair_in_train:
                assert "t_only" not in g.tag_index
                return
        pytest.fail("pair (u5, i0) never held out in 300 seeds")

    def test_fraction_bounds(self):
        recs = _clique_records(4, 4)
        with pytest.raises(ConfigError):
            split(recs, 0.0, seed=1)
        with pytest.raises(ConfigError):
            split(recs, 1.0, seed=1)

    def test_all_pairs_heldout_rejected(self):
        recs = [
            InteractionRecord("a", "x", ()),
            InteractionRecord("b", "x", ()),
        ]
        with pytest.raises(ConfigError, match="holds out all"):
            split(recs, 0.99, seed=1)

    def test_heldout_frequency_is_binomial(self):
        """Each pair's held-out rate over many seeds stays near the fraction."""
        recs = _clique_records(5, 8)  # 40 pairs
        fraction, trials = 0.1, 400
        counts = {}
        for seed in range(trials):
            ds = split(recs, fraction, seed=seed)
            g = ds.training_graph
            for u, items in ds.test_sets.items():
                for i in items:
                    key = (g.user_labels[u], g.item_labels[int(i)])
                    counts[key] = counts.get(key, 0) + 1
        sigma = np.sqrt(fraction * (1 - fraction) / trials)
        rates = np.array([counts.get((f"u{u}", f"i{i}"), 0) / trials
                          for u in range(5) for i in range(8)])
        assert np.all(np.abs(rates - fraction) < 4 * sigma + 1e-9)


class TestRunSeeds:
    def test_derivation_is_stable_and_order_free(self):
        seeds = [derive_run_seed(77, k) for k in range(10)]
        assert len(set(seeds)) == 10
        assert derive_run_seed(77, 3) == seeds[3]

    def test_split_run_matches_manual_derivation(self):
        recs = _clique_records()
        a = split_run(recs, 0.1, master_seed=7, run_index=2)
        b = split(recs, 0.1, derive_run_seed(7, 2))
        assert a.test_sets.keys() == b.test_sets.keys()


def test_manifest_covers_all_pairs(tmp_path):
    recs = _clique_records(6, 5)
    ds = split(recs, 0.2, seed=3)
    path = tmp_path / "manifest.tsv"
    write_manifest(ds, recs, path)
    lines = path.read_text().strip().split("\n")
    assert len(lines) == 30
    labels = {line.rsplit("\t", 1)[1] for line in lines}
    assert labels == {"train", "test"}
    n_test = sum(1 for line in lines if line.endswith("\ttest"))
    assert n_test == ds.n_test_pairs + ds.orphan_stats.total
