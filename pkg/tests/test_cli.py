import json

import numpy as np
import pytest

from conftest import write_tu_files
from hypograph import lowrank
from hypograph.cli import EXIT_CHECK, EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from hypograph.verify import run_equivalence_suite
from hypograph.exact import OracleScaleError


@pytest.fixture
def tiny_dataset(tmp_path):
    data_dir = tmp_path / "data"
    data_dir.mkdir()
    write_tu_files(
        data_dir,
        "tiny",
        [(1, 2), (2, 1), (3, 4), (4, 3), (4, 5), (5, 4)],
        [1, 1, 2, 2, 2],
        node_labels=[0, 1, 1, 0, 1],
        graph_labels=[1, 0],
    )
    return data_dir


def extract_args(data_dir, out, **extra):
    args = [
        "extract",
        "--dataset", str(data_dir),
        "--name", "tiny",
        "--walk-length", "2",
        "--max-degree", "2",
        "--rank", "4",
        "--seed", "11",
        "--out", str(out),
    ]
    for key, value in extra.items():
        flag = "--" + key.replace("_", "-")
        if value is True:
            args.append(flag)
        else:
            args.extend([flag, str(value)])
    return args


class TestExtract:
    def test_one_row_per_graph(self, tiny_dataset, tmp_path):
        out = tmp_path / "features.csv"
        assert main(extract_args(tiny_dataset, out)) == EXIT_OK
        lines = out.read_text().strip().split("\n")
        header, rows = lines[0], lines[1:]
        assert header.split(",")[:2] == ["graph", "label"]
        assert len(header.split(",")) == 2 + 4  # rank columns
        assert len(rows) == 2
        assert rows[0].split(",")[0] == "0" and rows[0].split(",")[1] == "1"

    def test_rerun_is_byte_identical(self, tiny_dataset, tmp_path):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(extract_args(tiny_dataset, out1)) == EXIT_OK
        assert main(extract_args(tiny_dataset, out2)) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()

    def test_different_seed_changes_output(self, tiny_dataset, tmp_path):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        main(extract_args(tiny_dataset, out1))
        main(extract_args(tiny_dataset, out2, seed=12))
        assert out1.read_bytes() != out2.read_bytes()

    def test_per_node_rows(self, tiny_dataset, tmp_path):
        out = tmp_path / "nodes.csv"
        assert main(extract_args(tiny_dataset, out, per_node=True)) == EXIT_OK
        rows = out.read_text().strip().split("\n")[1:]
        assert len(rows) == 5  # total node count
        assert rows[0].split(",")[:3] == ["0", "0", "1"]

    def test_jsonl_mirrors_csv_fields(self, tiny_dataset, tmp_path):
        out_csv, out_jsonl = tmp_path / "f.csv", tmp_path / "f.jsonl"
        main(extract_args(tiny_dataset, out_csv))
        main(extract_args(tiny_dataset, out_jsonl, format="jsonl"))
        csv_rows = out_csv.read_text().strip().split("\n")[1:]
        json_rows = [json.loads(ln) for ln in out_jsonl.read_text().strip().split("\n")]
        assert len(json_rows) == len(csv_rows) == 2
        for csv_row, obj in zip(csv_rows, json_rows):
            parts = csv_row.split(",")
            assert obj["graph"] == int(parts[0])
            assert obj["label"] == int(parts[1])
            np.testing.assert_allclose(
                obj["features"], [float(x) for x in parts[2:]], rtol=1e-16
            )

    def test_threads_match_single_threaded(self, tiny_dataset, tmp_path):
        out1, out4 = tmp_path / "t1.csv", tmp_path / "t4.csv"
        main(extract_args(tiny_dataset, out1, threads=1))
        main(extract_args(tiny_dataset, out4, threads=4))
        assert out1.read_bytes() == out4.read_bytes()

    def test_layer_stacking_and_attention_run(self, tiny_dataset, tmp_path):
        out = tmp_path / "deep.csv"
        rc = main(extract_args(tiny_dataset, out, layers=3, attention=True, heads=2))
        assert rc == EXIT_OK
        assert len(out.read_text().strip().split("\n")) == 3

    def test_missing_out_is_usage_error(self, tiny_dataset):
        rc = main(["extract", "--dataset", str(tiny_dataset), "--name", "tiny"])
        assert rc == EXIT_USAGE

    def test_unreadable_dataset_is_data_error(self, tmp_path):
        rc = main(
            extract_args(tmp_path / "nope", tmp_path / "out.csv")
        )
        assert rc == EXIT_DATA

    def test_invalid_degree_is_usage_error(self, tiny_dataset, tmp_path):
        rc = main(extract_args(tiny_dataset, tmp_path / "x.csv", max_degree=0))
        assert rc == EXIT_USAGE


class TestCheck:
    def test_default_run_passes(self, capsys):
        rc = main(["check", "--cases", "24", "--seed", "3"])
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        assert "max_rel_err" in out and "transition=" in out

    def test_sign_flip_fault_detected(self, monkeypatch):
        real = lowrank._edge_attr_inputs

        def flipped(g, cfg):
            return -real(g, cfg)

        monkeypatch.setattr(lowrank, "_edge_attr_inputs", flipped)
        rc = main(["check", "--cases", "24", "--seed", "3"])
        assert rc == EXIT_CHECK

    def test_oracle_guard_rejected(self, capsys):
        rc = main(["check", "--cases", "4", "--nodes", "100"])
        assert rc == EXIT_USAGE
        assert "guard" in capsys.readouterr().err

    def test_suite_guard_raises_directly(self):
        with pytest.raises(OracleScaleError):
            run_equivalence_suite(cases=1, max_nodes=100)

    def test_all_buckets_covered(self):
        report = run_equivalence_suite(cases=24, seed=5)
        assert len(report.buckets) == 24  # 3 transitions x 8 flag combos
        assert report.passed


class TestBench:
    def test_small_ladder_table(self, capsys):
        rc = main(
            ["bench", "--min-exp", "5", "--max-exp", "7", "--repeats", "1",
             "--walk-length", "2", "--rank", "2"]
        )
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        assert "ns/edge" in out
        assert out.count("\n") >= 4

    def test_zero_walk_length_reported(self, capsys):
        rc = main(
            ["bench", "--min-exp", "5", "--max-exp", "6", "--repeats", "1",
             "--walk-length", "0", "--rank", "2"]
        )
        assert rc == EXIT_OK
        assert "degree" in capsys.readouterr().out

    def test_grid_topology(self, capsys):
        rc = main(
            ["bench", "--min-exp", "6", "--max-exp", "7", "--repeats", "1",
             "--walk-length", "2", "--rank", "2", "--topology", "grid"]
        )
        assert rc == EXIT_OK
        assert "ns/edge" in capsys.readouterr().out


class TestDescribe:
    def test_summary(self, tiny_dataset, capsys):
        rc = main(["describe", "--dataset", str(tiny_dataset), "--name", "tiny"])
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        assert "graphs:         2" in out
        assert "label 0: 1" in out and "label 1: 1" in out

    def test_exact_echo_for_single_graph(self, tmp_path, capsys):
        write_tu_files(tmp_path, "one", [(1, 2), (2, 1), (2, 3), (3, 2)], [1, 1, 1],
                       node_labels=[0, 0, 1])
        main(["describe", "--dataset", str(tmp_path), "--name", "one"])
        out = capsys.readouterr().out
        assert "graphs:         1" in out
        assert "total 3" in out  # nodes
        assert "total 2" in out  # edges

    def test_empty_directory_is_data_error(self, tmp_path):
        rc = main(["describe", "--dataset", str(tmp_path), "--name", "ghost"])
        assert rc == EXIT_DATA


class TestFullScalePipeline:
    """End-to-end run of the full extraction configuration (walk length 5,
    degree 2, rank 128, 4 layers) on a synthetic stand-in shaped like the
    NCI datasets.  This checks the code path only; the real-dataset
    acceptance check lives in test_acceptance.py and needs the TU files.
    """

    def test_deep_wide_extract_is_deterministic(self, tmp_path):
        from hypograph.graphs import LabelledGraph, save_tu_dataset

        rng = np.random.default_rng(5)
        graphs = []
        for _ in range(40):
            n = int(rng.integers(20, 42))
            edges = {(i, i + 1) for i in range(n - 1)}
            for _ in range(n // 3):
                i, j = sorted(rng.integers(0, n, 2).tolist())
                if i != j:
                    edges.add((i, j))
            attrs = np.zeros((n, 37))
            attrs[np.arange(n), rng.integers(0, 37, n)] = 1.0
            graphs.append((LabelledGraph(n, sorted(edges), attrs), int(rng.integers(0, 2))))
        data_dir = tmp_path / "fake"
        save_tu_dataset(str(data_dir), "FAKE", graphs)
        args = [
            "extract", "--dataset", str(data_dir), "--name", "FAKE",
            "--walk-length", "5", "--max-degree", "2", "--rank", "128",
            "--layers", "4", "--seed", "0",
        ]
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--out", str(out1)]) == EXIT_OK
        assert main(args + ["--out", str(out2), "--threads", "4"]) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()
        rows = out1.read_text().strip().split("\n")
        assert len(rows) == 41  # header + one row per graph
        assert len(rows[1].split(",")) == 2 + 128


class TestFlags:
    def test_threads_env_default(self, tiny_dataset, tmp_path, monkeypatch):
        monkeypatch.setenv("HYPOGRAPH_THREADS", "2")
        out = tmp_path / "env.csv"
        assert main(extract_args(tiny_dataset, out)) == EXIT_OK

    def test_unknown_flag_exits_one(self):
        with pytest.raises(SystemExit) as err:
            main(["extract", "--bogus"])
        assert err.value.code == EXIT_USAGE

    def test_boolean_flag_pairs(self, tiny_dataset, tmp_path):
        out1, out2 = tmp_path / "d.csv", tmp_path / "nd.csv"
        main(extract_args(tiny_dataset, out1))
        main(
            [
                "extract", "--dataset", str(tiny_dataset), "--name", "tiny",
                "--walk-length", "2", "--max-degree", "2", "--rank", "4",
                "--seed", "11", "--out", str(out2),
                "--no-diff", "--no-zero-start", "--time-param",
            ]
        )
        assert out1.read_bytes() != out2.read_bytes()
