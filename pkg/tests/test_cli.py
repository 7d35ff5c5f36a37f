import json
import subprocess
import sys

import numpy as np
import pytest

from embedlab.cli import analytic_certificates, main
from embedlab.formats import FormatError, load_matrix_file, matrix_document, parse_matrix_document, write_matrix_file
from embedlab.scan import CSV_HEADER, cell_seed, grid_points, read_scan_csv, rows_to_csv, scan_qubit
from embedlab.stochastic import StochasticMatrix, theorem2_detect

from .test_stochastic import D3_NON_EMBEDDABLE, copied_chain_family


def write(tmp_path, name, M, **extra):
    M = np.asarray(M, dtype=float)
    doc = {"d": M.shape[0], "entries_row_major": M.ravel().tolist(), "convention": "column-stochastic", **extra}
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestFormats:
    def test_round_trip(self, tmp_path):
        T = StochasticMatrix.from_ab(0.3, 0.4)
        write_matrix_file(tmp_path / "m.json", T, 1e-8)
        back = load_matrix_file(tmp_path / "m.json")
        assert back == T and back.tolerance == 1e-8

    def test_document(self):
        doc = matrix_document(StochasticMatrix(np.eye(2)))
        assert doc == {"d": 2, "entries_row_major": [1.0, 0.0, 0.0, 1.0], "convention": "column-stochastic"}

    @pytest.mark.parametrize(
        "doc,match",
        [
            ([], "JSON object"),
            ({"d": 2, "entries_row_major": [1, 0, 0, 1]}, "convention"),
            ({"d": 2, "entries_row_major": [1, 0, 0, 1], "convention": "row-stochastic"}, "convention"),
            ({"d": 0, "entries_row_major": [], "convention": "column-stochastic"}, "positive integer"),
            ({"d": 2, "entries_row_major": [1, 0, 0], "convention": "column-stochastic"}, "expected 4"),
            ({"d": 2, "entries_row_major": [1, "0", 0, 1], "convention": "column-stochastic"}, "flat list"),
            ({"d": 2, "entries_row_major": [1, 0, 0, 1], "convention": "column-stochastic", "tolerance": -1}, "tolerance"),
        ],
    )
    def test_rejects(self, doc, match):
        with pytest.raises(Exception, match=match):
            parse_matrix_document(doc)

    def test_column_sum_error(self):
        with pytest.raises(Exception, match="column 1"):
            parse_matrix_document({"d": 2, "entries_row_major": [0.5, 0.6, 0.5, 0.5], "convention": "column-stochastic"})

    def test_bad_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(FormatError, match="line 1"):
            load_matrix_file(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FormatError):
            load_matrix_file(tmp_path / "absent.json")


class TestCheck:
    def test_identity(self, tmp_path, capsys):
        code, out, _ = run(capsys, "check", write(tmp_path, "id.json", np.eye(2)))
        doc = json.loads(out)
        assert code == 0
        assert doc["certificate"]["certificate"] == "classical generator L=0"

    def test_d3_listed_first(self, tmp_path, capsys):
        code, out, _ = run(capsys, "check", write(tmp_path, "d3.json", D3_NON_EMBEDDABLE[0]))
        doc = json.loads(out)
        assert code == 1
        assert doc["certificate"]["layer"] == "theorem2"
        assert doc["certificate"]["certificate"]["witness_i"] == 2

    def test_theorem1_point(self, tmp_path, capsys):
        code, out, _ = run(capsys, "check", write(tmp_path, "t1.json", [[1e-7, 0.5], [1 - 1e-7, 0.5]]))
        assert code == 1 and json.loads(out)["certificate"]["layer"] == "theorem1"

    def test_swap_via_extreme_witness(self, tmp_path, capsys):
        code, out, _ = run(capsys, "check", write(tmp_path, "swap.json", [[0, 1], [1, 0]]))
        doc = json.loads(out)
        assert code == 0 and doc["witness"]["objective"] < 1e-8

    def test_interior_point_uses_search(self, tmp_path, capsys):
        path = write(tmp_path, "p.json", [[0.3, 0.6], [0.7, 0.4]])
        code, out, _ = run(capsys, "check", path, "--restarts", "4", "--seed", "1", "--parameterization", "reduced-qubit")
        doc = json.loads(out)
        assert code in (0, 2)
        assert doc["search"]["seed"] == 1
        if code == 0:
            assert doc["witness"]["objective"] <= 1e-4

    def test_malformed(self, tmp_path, capsys):
        p = tmp_path / "x.json"
        p.write_text('{"d": 2}')
        code, _, err = run(capsys, "check", str(p))
        assert code == 64 and "missing" in err

    def test_usage_error(self, capsys):
        assert main(["check"]) == 64


class TestCertify:
    def test_theorem1(self, tmp_path, capsys):
        code, out, _ = run(capsys, "certify", write(tmp_path, "a.json", [[1e-7, 0.5], [1 - 1e-7, 0.5]]))
        doc = json.loads(out)
        assert code == 1 and doc["decisive_layer"] == "theorem1"

    def test_copied_chain_member(self, tmp_path, capsys):
        code, out, _ = run(capsys, "certify", write(tmp_path, "b.json", copied_chain_family(0.3)[0]))
        assert code == 1 and json.loads(out)["decisive_layer"] == "theorem2"

    def test_identity(self, tmp_path, capsys):
        code, out, _ = run(capsys, "certify", write(tmp_path, "c.json", np.eye(3)))
        doc = json.loads(out)
        assert code == 0
        layers = {layer["layer"]: layer for layer in doc["layers"]}
        assert layers["classical-embedding"]["embeddable"] is True
        assert layers["theorem2"]["certificate"] is None

    def test_every_certificate_reverifies(self):
        for M in D3_NON_EMBEDDABLE + copied_chain_family(0.4):
            T = StochasticMatrix(np.array(M, dtype=float))
            report = analytic_certificates(T)
            assert report["decision"] == "not-embeddable"
            assert theorem2_detect(T).verify(T) == []


class TestClassifyExtreme:
    def test_d3(self, capsys):
        code, out, _ = run(capsys, "classify-extreme", "--d", "3", "--list-non-embeddable")
        doc = json.loads(out)
        assert code == 0 and doc["embeddable"] == 21 and doc["total"] == 27
        listed = sorted(tuple(map(tuple, m["matrix"])) for m in doc["non_embeddable"])
        assert listed == sorted(tuple(map(tuple, m)) for m in D3_NON_EMBEDDABLE)
        assert doc["non_embeddable_fraction"] == pytest.approx(6 / 27)

    def test_d2(self, capsys):
        doc = json.loads(run(capsys, "classify-extreme", "--d", "2", "--list-non-embeddable")[1])
        assert doc["embeddable"] == 4 and doc["non_embeddable"] == []

    def test_d4(self, capsys):
        doc = json.loads(run(capsys, "classify-extreme", "--d", "4")[1])
        assert (doc["embeddable"], doc["total"]) == (148, 256)

    def test_guard(self, capsys):
        code, _, err = run(capsys, "classify-extreme", "--d", "7", "--list-non-embeddable")
        assert code == 64 and "limited" in err


class TestEmbedConstruct:
    def test_unitary_swap(self, tmp_path, capsys):
        code, out, _ = run(capsys, "embed-construct", "--target", write(tmp_path, "s.json", [[0, 1], [1, 0]]), "--method", "unitary")
        doc = json.loads(out)
        assert code == 0 and doc["objective"] < 1e-8
        assert doc["lindbladian"]["dim"] == 2

    def test_theorem3_gamma(self, tmp_path, capsys):
        R = StochasticMatrix.from_ab(0.7, 0.8).entries
        M = np.zeros((3, 3))
        M[:2, :2] = R
        M[:2, 2] = R[:, 1]
        path = write(tmp_path, "t3.json", M)
        errs = []
        for gamma in ("100", "1000", "10000"):
            code, out, _ = run(capsys, "embed-construct", "--target", path, "--method", "theorem3", "--gamma", gamma)
            assert code == 0
            errs.append(json.loads(out)["objective"])
        assert errs[1] < 1e-2 and errs[0] > errs[1] > errs[2]

    def test_classical_lift(self, tmp_path, capsys):
        code, out, _ = run(capsys, "embed-construct", "--target", write(tmp_path, "c.json", [[0.7, 0.2], [0.3, 0.8]]), "--method", "classical-lift")
        assert code == 0 and json.loads(out)["objective"] < 1e-9

    def test_structural_mismatch(self, tmp_path, capsys):
        code, _, err = run(capsys, "embed-construct", "--target", write(tmp_path, "s.json", [[0, 1], [1, 0]]), "--method", "theorem3")
        assert code == 64 and "copied columns" in err


class TestScan:
    def test_grid(self):
        pts = grid_points(3)
        assert pts[0] == (0.0, 0.0) and pts[1] == (0.0, 0.5) and pts[-1] == (1.0, 1.0)
        with pytest.raises(ValueError):
            grid_points(1)

    def test_cell_seed_stable(self):
        assert cell_seed(0, 5) == cell_seed(0, 5) != cell_seed(1, 5)

    def test_corners(self):
        rows = scan_qubit(3, restarts=8, seed=0, workers=1)
        by_point = {(r.a, r.b): r for r in rows}
        for corner in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]:
            assert by_point[corner].verdict == "embeddable_at_delta", corner
        assert by_point[(1.0, 1.0)].classical and not by_point[(0.0, 0.0)].classical
        for edge in [(0.0, 0.5), (0.5, 0.0)]:
            assert by_point[edge].theorem1_blocked and by_point[edge].verdict == "inconclusive"
        assert not any(r.classical and r.theorem1_blocked for r in rows)

    def test_csv_round_trip(self):
        rows = scan_qubit(2, restarts=1, seed=3, workers=1)
        text = rows_to_csv(rows)
        assert text.splitlines()[0] == CSV_HEADER == "a,b,best_objective,verdict,classical,theorem1_blocked,seed"
        assert read_scan_csv(text) == rows

    def test_cli_byte_identical(self, tmp_path, capsys):
        outs = []
        for name in ("one.csv", "two.csv"):
            code, _, _ = run(capsys, "scan-qubit", "--grid", "2", "--restarts", "2", "--seed", "4", "--out", str(tmp_path / name))
            assert code == 0
            outs.append((tmp_path / name).read_bytes())
        assert outs[0] == outs[1]

    def test_parallel_matches_serial(self):
        serial = scan_qubit(2, restarts=1, seed=6, workers=1)
        parallel = scan_qubit(2, restarts=1, seed=6, workers=2)
        assert serial == parallel

    def test_unwritable(self, tmp_path, capsys):
        code, _, err = run(capsys, "scan-qubit", "--grid", "2", "--restarts", "1", "--out", str(tmp_path / "no" / "x.csv"))
        assert code == 64 and "no" in err


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "embedlab", "classify-extreme", "--d", "2"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["embeddable"] == 4
