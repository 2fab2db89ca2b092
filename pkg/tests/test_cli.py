import os
import shutil
import subprocess
import sys

import pytest

from tridiff import (
    SynthConfig,
    build_graph,
    read_interactions,
    synth_generate,
    write_interactions,
)
from tridiff.cli import entrypoint
from tridiff.oracle import oracle_score_user

# a dataset the default purification policy leaves untouched: every item
# has two collectors, every tag spans two items
STABLE = """\
u1\ta\tta
u1\tb\tta
u2\ta\ttc
u2\tc\ttc
u3\tb\ttb
u3\tc\ttb
"""


@pytest.fixture(scope="module")
def stable_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "stable.tsv"
    path.write_text(STABLE)
    return path


@pytest.fixture(scope="module")
def synth_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "synth.tsv"
    records = synth_generate(SynthConfig(users=60, items=80, tags=30, seed=7))
    write_interactions(records, path)
    return path


class TestIngest:
    def test_purifies_and_writes(self, tmp_path, capsys):
        src = tmp_path / "raw.tsv"
        src.write_text(
            "# comment\n"
            + STABLE
            + "u4\tlonely_item\tta\n"  # item with a single collector
        )
        out = tmp_path / "clean.tsv"
        code = entrypoint(["ingest", "--input", str(src), "--output", str(out)])
        assert code == 0
        records = read_interactions(out)
        assert {r.item for r in records} == {"a", "b", "c"}
        assert "purification" in capsys.readouterr().err

    def test_min_item_users_relaxed(self, tmp_path):
        src = tmp_path / "raw.tsv"
        src.write_text(STABLE + "u4\tlonely_item\tta\n")
        out = tmp_path / "clean.tsv"
        code = entrypoint([
            "ingest", "--input", str(src), "--output", str(out),
            "--min-item-users", "1",
        ])
        assert code == 0
        assert "lonely_item" in {r.item for r in read_interactions(out)}

    def test_parse_error_is_data_exit(self, tmp_path, capsys):
        src = tmp_path / "bad.tsv"
        src.write_text("u1\tonly_two_fields\n")
        code = entrypoint(["ingest", "--input", str(src), "--output", str(tmp_path / "o")])
        assert code == 2
        assert "line 1" in capsys.readouterr().err

    def test_missing_input_is_data_exit(self, tmp_path, capsys):
        code = entrypoint([
            "ingest", "--input", str(tmp_path / "absent.tsv"),
            "--output", str(tmp_path / "o"),
        ])
        assert code == 2


class TestSplit:
    def test_writes_manifest(self, stable_file, tmp_path, capsys):
        manifest = tmp_path / "manifest.tsv"
        code = entrypoint([
            "split", "--input", str(stable_file), "--seed", "5",
            "--manifest", str(manifest),
        ])
        assert code == 0
        lines = manifest.read_text().splitlines()
        assert len(lines) == 6
        labels = {line.split("\t")[2] for line in lines}
        assert labels == {"train", "test"}
        assert "test pairs retained" in capsys.readouterr().err

    def test_bad_fraction(self, stable_file, tmp_path):
        code = entrypoint([
            "split", "--input", str(stable_file), "--seed", "5",
            "--fraction", "1.5", "--manifest", str(tmp_path / "m"),
        ])
        assert code == 1


class TestRecommend:
    def test_prints_list(self, stable_file, capsys):
        code = entrypoint([
            "recommend", "--input", str(stable_file), "--user", "u1",
            "--lambda", "0.5", "--top", "2",
        ])
        assert code == 0
        captured = capsys.readouterr()
        lines = captured.out.splitlines()
        # u1 already collects a and b, so c is the single candidate
        assert len(lines) == 1
        user, rank, item, score = lines[0].split("\t")
        assert (user, rank, item) == ("u1", "1", "c")
        float(score)
        assert "short" in captured.err

    def test_unknown_user(self, stable_file, capsys):
        code = entrypoint([
            "recommend", "--input", str(stable_file), "--user", "nobody",
            "--lambda", "0.5",
        ])
        assert code == 2
        assert "nobody" in capsys.readouterr().err

    def test_lambda_out_of_range(self, stable_file):
        code = entrypoint([
            "recommend", "--input", str(stable_file), "--user", "u1",
            "--lambda", "1.5",
        ])
        assert code == 1

    def test_unparsable_flag_value(self, stable_file):
        code = entrypoint([
            "recommend", "--input", str(stable_file), "--user", "u1",
            "--lambda", "0.5", "--top", "many",
        ])
        assert code == 1


class TestSweep:
    def test_full_run_without_figures(self, synth_file, tmp_path, capsys):
        out = tmp_path / "report"
        code = entrypoint([
            "sweep", "--input", str(synth_file), "--grid", "0:1:0.5",
            "--runs", "2", "--fraction", "0.2", "--lengths", "2,5",
            "--seed", "9", "--out", str(out), "--no-figures",
        ])
        assert code == 0
        lines = (out / "runs.tsv").read_text().splitlines()
        assert len(lines) == 1 + 3 * 2 * 2
        assert (out / "aggregate.tsv").exists()
        assert (out / "optima.tsv").exists()
        assert not (out / "figures").exists()
        assert "AUC optimum" in capsys.readouterr().err

    def test_figures_rendered(self, synth_file, tmp_path):
        out = tmp_path / "report"
        code = entrypoint([
            "sweep", "--input", str(synth_file), "--grid", "0,1",
            "--runs", "1", "--fraction", "0.2", "--lengths", "3",
            "--seed", "9", "--out", str(out),
        ])
        assert code == 0
        pngs = sorted(p.name for p in (out / "figures").iterdir())
        assert pngs == [
            "auc_vs_lambda.png",
            "diversification_vs_lambda.png",
            "novelty_vs_lambda.png",
            "recall_vs_lambda.png",
        ]

    def test_grid_missing_endpoint(self, synth_file, tmp_path):
        code = entrypoint([
            "sweep", "--input", str(synth_file), "--grid", "0,0.5",
            "--runs", "1", "--seed", "9", "--out", str(tmp_path / "r"),
        ])
        assert code == 1


class TestSynth:
    def test_generates_file(self, tmp_path, capsys):
        out = tmp_path / "synthetic.tsv"
        code = entrypoint([
            "synth", "--users", "50", "--items", "70", "--tags", "25",
            "--seed", "13", "--output", str(out),
        ])
        assert code == 0
        records = read_interactions(out)
        assert len(records) > 200
        assert "synthetic records" in capsys.readouterr().err

    def test_matches_library_call(self, tmp_path):
        out = tmp_path / "synthetic.tsv"
        entrypoint([
            "synth", "--users", "50", "--items", "70", "--tags", "25",
            "--seed", "13", "--output", str(out),
        ])
        assert read_interactions(out) == synth_generate(
            SynthConfig(users=50, items=70, tags=25, seed=13)
        )

    def test_invalid_signal(self, tmp_path):
        code = entrypoint([
            "synth", "--users", "5", "--items", "5", "--tags", "5",
            "--signal", "2.0", "--seed", "1", "--output", str(tmp_path / "f"),
        ])
        assert code == 1


class TestOracle:
    def test_scores_match_library_oracle(self, stable_file, capsys):
        code = entrypoint([
            "oracle", "--input", str(stable_file), "--user", "u1",
            "--lambda", "1.0",
        ])
        assert code == 0
        out = capsys.readouterr().out.splitlines()
        graph = build_graph(read_interactions(stable_file))
        expected = oracle_score_user(graph, 0, 1.0)
        assert len(out) == graph.n_items
        for line in out:
            label, score = line.split("\t")
            assert float(score) == expected[graph.item_index[label]]

    def test_refuses_large_graphs(self, tmp_path, capsys):
        big = tmp_path / "big.tsv"
        records = synth_generate(
            SynthConfig(users=2000, items=2500, tags=50, seed=3)
        )
        write_interactions(records, big)
        code = entrypoint([
            "oracle", "--input", str(big), "--user", "u0", "--lambda", "0.5",
        ])
        assert code == 1
        assert "oracle" in capsys.readouterr().err


class TestExitCodes:
    def test_no_subcommand(self):
        assert entrypoint([]) == 1

    def test_unknown_subcommand(self):
        assert entrypoint(["frobnicate"]) == 1

    def test_help_exits_zero(self, capsys):
        assert entrypoint(["--help"]) == 0
        assert "sweep" in capsys.readouterr().out

    def test_internal_error_exit(self, stable_file, capsys, monkeypatch):
        def boom(records):
            raise RuntimeError("wired to fail")

        monkeypatch.setattr("tridiff.cli.build_graph", boom)
        code = entrypoint([
            "recommend", "--input", str(stable_file), "--user", "u1",
            "--lambda", "0.5",
        ])
        assert code == 3
        assert "internal error" in capsys.readouterr().err

    def test_closed_pipe_exits_141(self, stable_file, monkeypatch):
        # reader side closed before the command writes, as under `| head`
        read_fd, write_fd = os.pipe()
        os.close(read_fd)
        writer = os.fdopen(write_fd, "w")
        monkeypatch.setattr(sys, "stdout", writer)
        code = entrypoint([
            "recommend", "--input", str(stable_file), "--user", "u1",
            "--lambda", "1.0", "--top", "1",
        ])
        assert code == 141


class TestConsoleScript:
    def test_installed_entrypoint(self):
        exe = shutil.which("tridiff")
        assert exe, "console script tridiff not on PATH"
        proc = subprocess.run(
            [exe, "--help"], capture_output=True, text=True, timeout=60
        )
        assert proc.returncode == 0
        assert "sweep" in proc.stdout
