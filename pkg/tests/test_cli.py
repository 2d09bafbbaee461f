import json
import subprocess
import sys

import numpy as np
import pytest

from minkowski_immersion.cli import main
from minkowski_immersion.fields_io import read_manifest, write_fields
from minkowski_immersion.grid import GridChart, TensorField


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json")
    assert code == 0, err
    return json.loads(out)


class TestDecompose:
    def test_text(self, capsys):
        code, out, _ = run(capsys, "decompose", "--matrix", "[[-4, 0], [0, 9]]")
        assert code == 0
        assert out.strip() == "F = [[2, 0], [0, 3]]"

    def test_anchor_json(self, capsys):
        rep = run_json(capsys, "decompose", "--matrix", "[[-1.01, 0], [0, 1]]", "--anchor", "[[-1, 0], [0, 1]]",
                       "--epsilon", "0.5")
        assert np.allclose(rep["F"], np.diag([1.01 ** 0.5, 1.0]), atol=1e-12)

    def test_wrong_signature_exit_2(self, capsys):
        code, _, err = run(capsys, "decompose", "--matrix", "[[1, 0], [0, 1]]")
        assert code == 2
        assert json.loads(err)["error"] == "WrongSignature"


class TestUsage:
    @pytest.mark.parametrize("argv", [
        [],
        ["nosuch"],
        ["decompose"],
        ["decompose", "--matrix", "[[1,"],
        ["pfaff", "integrate", "m.json"],
        ["stability", "minkowski"],
        ["generate", "rindler", "-o", "x", "--samples", "3"],
    ])
    def test_exit_64(self, capsys, argv):
        assert run(capsys, *argv)[0] == 64

    def test_missing_manifest_exit_74(self, capsys, tmp_path):
        code, _, err = run(capsys, "curvature", tmp_path / "absent.json")
        assert code == 74
        assert "error" in json.loads(err)

    def test_unknown_fixture_exit_2(self, capsys, tmp_path):
        code, _, err = run(capsys, "generate", "torus", "-o", tmp_path)
        assert code == 2
        assert json.loads(err)["error"] == "UnknownFixture"


class TestPipeline:
    def test_smoke_rindler(self, capsys, tmp_path):
        run_json(capsys, "generate", "rindler", "-o", tmp_path / "in", "--samples", 33)
        curv = run_json(capsys, "curvature", tmp_path / "in")
        assert curv["nonflat"] is False
        rep = run_json(capsys, "immerse", tmp_path / "in", "-o", tmp_path / "out")
        assert rep["isometry_residual"]["recomputed"]["max_abs"] < 1e-2
        chart, fields, meta = read_manifest(tmp_path / "out")
        assert set(fields) == {"f", "frame"} and meta["kind"] == "manifold"
        assert (tmp_path / "out" / "report.json").exists()
        al = run_json(capsys, "align", tmp_path / "out", tmp_path / "out",
                      "--inputs1", tmp_path / "in", "--inputs2", tmp_path / "in")
        assert al["aligned_gap_w2p"] == 0.0

    def test_desitter_nonflat(self, capsys, tmp_path):
        run_json(capsys, "generate", "desitter_slice", "-o", tmp_path, "--samples", 9)
        assert run_json(capsys, "curvature", tmp_path)["nonflat"] is True
        code, out, _ = run(capsys, "curvature", tmp_path)
        assert code == 0 and "nonflat" in out

    def test_hyper_forms(self, capsys, tmp_path):
        run_json(capsys, "generate", "hyperboloid_forms", "-o", tmp_path / "in", "--samples", 17, "--encoding", "csv")
        gc = run_json(capsys, "hyper", "check-gc", tmp_path / "in")
        assert gc["kind"] == "classical"
        rep = run_json(capsys, "hyper", "immerse-forms", tmp_path / "in", "-o", tmp_path / "out")
        assert rep["lambda"] == -1
        _, fields, meta = read_manifest(tmp_path / "out")
        assert set(fields) == {"f", "frame", "rigging"} and meta["kind"] == "hypersurface"
        al = run_json(capsys, "align", tmp_path / "out", tmp_path / "out", "--inputs1", tmp_path / "in",
                      "--inputs2", tmp_path / "in", "--proper")
        assert al["aligned_gap_w2p"] == 0.0 and al["map"]

    def test_hyper_rigged_zero_ops(self, capsys, tmp_path):
        ch = GridChart.uniform(2, 0.0, 1.0, 5)
        z = lambda *s: TensorField(ch, np.zeros(ch.shape + s))
        write_fields(tmp_path / "ops", {"Gamma": z(2, 2, 2), "K": z(2, 2), "L": z(2, 2), "M": z(2)})
        assert run_json(capsys, "hyper", "check-gc", tmp_path / "ops")["kind"] == "generalized"
        rep = run_json(capsys, "hyper", "immerse-rigged", tmp_path / "ops", "-o", tmp_path / "out",
                       "--f-star", "[[2,0,0],[0,1,0],[0,0,1]]")
        assert rep["defect"]["max_abs"] < 1e-12
        code, _, err = run(capsys, "hyper", "immerse-rigged", tmp_path / "ops", "-o", tmp_path / "o2",
                           "--f-star", "[[0,0,0],[0,1,0],[0,0,1]]")
        assert code == 2 and json.loads(err)["error"] == "SingularFstar"

    def test_pfaff_verbs(self, capsys, tmp_path):
        ch = GridChart.uniform(2, 0.0, 1.0, 9)
        A = np.zeros(ch.shape + (2, 1, 1))
        A[..., 0, 0, 0] = 1.0
        write_fields(tmp_path / "c1", {"A": TensorField(ch, A)})
        write_fields(tmp_path / "c2", {"A": TensorField(ch, 1.01 * A)})
        assert run_json(capsys, "pfaff", "check", tmp_path / "c1")["max_abs"] < 1e-13
        run_json(capsys, "pfaff", "integrate", tmp_path / "c1", "--y0", "[[1.0]]", "--x0", "[0, 0]",
                 "-o", tmp_path / "y")
        _, fields, _ = read_manifest(tmp_path / "y")
        x, _ = ch.mesh()
        assert np.max(np.abs(fields["Y"].data[..., 0, 0] - np.exp(x))) < 1e-5
        dep = run_json(capsys, "pfaff", "depend", tmp_path / "c1", tmp_path / "c2", "--y0", "[[1.0]]")
        assert dep["gap_norm"] > 0 and dep["input_gap"] > 0

    def test_convert_and_stability(self, capsys, tmp_path):
        run_json(capsys, "generate", "boosted_flat", "-o", tmp_path / "a", "--samples", 5, "--dim", 3,
                 "--param", "rapidity=0.3")
        run_json(capsys, "convert", tmp_path / "a", "-o", tmp_path / "b", "--encoding", "csv")
        _, fa, ma = read_manifest(tmp_path / "a")
        _, fb, mb = read_manifest(tmp_path / "b")
        assert np.max(np.abs(fa["g"].data - fb["g"].data)) <= 1e-15 and ma == mb
        table = run_json(capsys, "stability", "rindler", "--samples", 9, "--deltas", "[1e-3, 1e-4]")
        assert len(table["rows"]) == 2 and table["ratio_spread"] < 3
        code, out, _ = run(capsys, "stability", "hyperboloid_forms", "--samples", 9, "--direction", "random")
        assert code == 0 and "ratio spread" in out

    def test_bounds_and_bad_index(self, capsys, tmp_path):
        run_json(capsys, "generate", "minkowski", "-o", tmp_path, "--samples", 5, "--bounds", "[[0, 2], [0, 1]]")
        chart, _, _ = read_manifest(tmp_path)
        assert chart.maxs == (2.0, 1.0)
        code, _, err = run(capsys, "immerse", tmp_path, "-o", tmp_path / "o", "--x-star", "[7, 0]")
        assert code == 2 and json.loads(err)["error"] == "BadParams"


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "minkowski_immersion", "decompose", "--matrix", "[[-4,0],[0,9]]"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "F = [[2, 0], [0, 3]]" in proc.stdout
