import json
import subprocess
import sys

import numpy as np
import pytest

from yamabe import cli, geometry, mesh


def run_cli(argv):
    return cli.main([str(a) for a in argv])


class TestGenerate:
    def test_hex_radius_one(self, tmp_path):
        out = tmp_path / "hex1.plmesh"
        assert run_cli(["generate", "hex", "--radius", 1, "--out", out]) == 0
        t = mesh.load_mesh(out)
        assert (t.num_vertices, t.num_edges, t.num_faces) == (7, 12, 6)

    def test_hex_radius_zero(self, tmp_path):
        out = tmp_path / "hex0.plmesh"
        assert run_cli(["generate", "hex", "--radius", 0, "--out", out]) == 0
        t = mesh.load_mesh(out)
        assert (t.num_vertices, t.num_edges, t.num_faces) == (1, 0, 0)

    def test_tetra_fixture(self, tmp_path):
        out = tmp_path / "tetra.plmesh"
        assert run_cli(["generate", "tetra", "--out", out]) == 0
        t, lengths = mesh.load_mesh_file(out)
        assert mesh.euler_characteristic(t) == 2
        np.testing.assert_array_equal(lengths, 1.0)

    def test_bad_radius(self, tmp_path):
        assert run_cli(["generate", "hex", "--radius", -2,
                        "--out", tmp_path / "x"]) == 1
        assert run_cli(["generate", "hex", "--out", tmp_path / "x"]) == 1


class TestFlow:
    def test_zero_factor_regular_mesh(self, tmp_path):
        out = tmp_path / "run.csv"
        code = run_cli(["flow", "--hex-radius", 3, "--t-max", 5,
                        "--out", out])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "t,sup_K,l2_u,dirichlet,ndg_margin,del_margin"
        assert len(lines) == 2  # single sample: already at the fixed point
        assert float(lines[1].split(",")[1]) < 1e-12
        assert (tmp_path / "run.u.txt").exists()
        assert (tmp_path / "run.K.txt").exists()

    def test_byte_identical_reruns(self, tmp_path):
        blobs = []
        for k in range(2):
            out = tmp_path / f"run{k}.csv"
            code = run_cli(["flow", "--hex-radius", 4, "--u0", "random",
                            "--u0-seed", 9, "--u0-norm", 0.05,
                            "--u0-support", 2, "--h", 1e-2, "--t-max", 1,
                            "--stride", 5, "--stop-tol", 0, "--out", out])
            assert code == 0
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1]

    def test_standard_rejects_pseudo_metric_file(self, tmp_path):
        t = mesh.build_hexagonal_disk(2)
        lengths = np.ones(t.num_edges)
        lengths[int(np.flatnonzero(t.boundary_edges)[0])] = 2.5
        path = tmp_path / "pseudo.plmesh"
        mesh.save_mesh(t, path, lengths)
        out = tmp_path / "out.csv"
        assert run_cli(["flow", "--mesh", path, "--variant", "standard",
                        "--t-max", 1, "--out", out]) == 1
        assert run_cli(["flow", "--mesh", path, "--variant", "extended",
                        "--t-max", 1, "--out", out]) == 0

    def test_degeneration_exit_code(self, tmp_path, capsys):
        t = mesh.build_hexagonal_disk(2)
        path = tmp_path / "reg.plmesh"
        mesh.save_mesh(t, path, np.ones(t.num_edges))
        u0 = np.zeros(t.num_vertices)
        i, j = t.edges[0]
        u0[i] = u0[j] = 3.0
        u0_path = tmp_path / "u0.txt"
        geometry.save_vertex_field(u0_path, u0)
        code = run_cli(["flow", "--mesh", path, "--u0", "file",
                        "--u0-file", u0_path, "--t-max", 1,
                        "--out", tmp_path / "out.csv"])
        assert code == 2
        captured = capsys.readouterr()
        assert "t-bracket" in captured.err

    def test_config_file_with_flag_override(self, tmp_path):
        config = {"hex_radius": 3, "u0": "random", "u0_seed": 4,
                  "u0_norm": 0.05, "h": 1e-2, "t_max": 0.3, "stride": 5,
                  "stop_tol": 0.0, "out": str(tmp_path / "a.csv")}
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(config))
        assert run_cli(["flow", "--config", cfg]) == 0
        assert run_cli(["flow", "--config", cfg, "--out",
                        tmp_path / "b.csv"]) == 0
        assert (tmp_path / "a.csv").read_bytes() == \
            (tmp_path / "b.csv").read_bytes()
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"bogus_key": 1}))
        assert run_cli(["flow", "--config", bad]) == 1

    def test_trace_output(self, tmp_path):
        trace = tmp_path / "trace.csv"
        code = run_cli(["flow", "--hex-radius", 2, "--u0", "random",
                        "--u0-seed", 3, "--u0-norm", 0.05, "--t-max", 0.1,
                        "--stride", 2, "--stop-tol", 0,
                        "--out", tmp_path / "r.csv",
                        "--trace-out", trace, "--track", 0, 1])
        assert code == 0
        assert trace.read_text().splitlines()[0] == "t,vid,u,K"

    def test_missing_required_settings(self, tmp_path):
        assert run_cli(["flow", "--t-max", 1,
                        "--out", tmp_path / "x.csv"]) == 1
        assert run_cli(["flow", "--hex-radius", 2, "--u0", "random",
                        "--out", tmp_path / "x.csv"]) == 1


class TestVerify:
    def test_single_suite_with_bundle(self, tmp_path):
        out = tmp_path / "report.json"
        code = run_cli(["verify", "gaussbonnet", "--seed", 7, "--out", out])
        assert code == 0
        bundle = json.loads(out.read_text())
        assert bundle["suite"] == "gaussbonnet"
        assert bundle["seed"] == 7
        assert all(r["pass"] for r in bundle["reports"])

    def test_unknown_suite(self):
        assert run_cli(["verify", "nope"]) == 1

    def test_bundle_byte_identical(self, tmp_path):
        blobs = []
        for k in range(2):
            out = tmp_path / f"b{k}.json"
            assert run_cli(["verify", "delta", "--seed", 3,
                            "--out", out]) == 0
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1]


class TestExhaust:
    def test_writes_report(self, tmp_path):
        out = tmp_path / "exh.json"
        code = run_cli(["exhaust", "--radius", 4, "--levels", 4,
                        "--seed", 5, "--t-max", 0.2, "--out", out])
        assert code == 0
        data = json.loads(out.read_text())
        assert len(data["level_vertex_counts"]) == 4
        assert len(data["successive_diffs"]) == 3


class TestEntryPoint:
    def test_module_invocation(self):
        proc = subprocess.run([sys.executable, "-m", "yamabe.cli",
                               "verify", "delta", "--seed", "1"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "PASS" in proc.stdout

    def test_threads_env_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("YAMABE_THREADS", "1")
        assert run_cli(["flow", "--hex-radius", 2, "--t-max", 0.1,
                        "--out", tmp_path / "t.csv"]) == 0
        monkeypatch.setenv("YAMABE_THREADS", "zebra")
        assert run_cli(["flow", "--hex-radius", 2, "--t-max", 0.1,
                        "--out", tmp_path / "t.csv"]) == 1


@pytest.mark.parametrize("argv", [["verify", "variational"]])
def test_verify_summary_line_format(argv, capsys):
    # one-line pass/fail per check
    code = run_cli(argv + ["--seed", 11])
    captured = capsys.readouterr()
    lines = [ln for ln in captured.out.splitlines() if ln]
    assert code == 0
    assert all(ln.startswith(("PASS", "FAIL")) for ln in lines)
