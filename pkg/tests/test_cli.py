import json
import subprocess
import sys

import numpy as np
import pytest

from seppres import __version__
from seppres.cli import main
from seppres.io import dump
from seppres.superop import SuperOp
from seppres.tensor import Ket, Opr, Permutation, kron_all, maximally_entangled, sample, swap_operator

CNOT = Opr(np.eye(4)[[0, 1, 3, 2]], (2, 2), (2, 2))


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    doc = json.loads(capsys.readouterr().out)
    assert doc["exit_code"] == code
    return code, doc


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        path = tmp_path / name
        dump(obj, path)
        return path

    return write


def superop_file(files, name, phi):
    dd = phi.dims + phi.dims
    return files(name, Opr(phi.matrix, dd, dd))


def test_schmidt_bell(capsys, files):
    code, doc = run(capsys, "schmidt", "--input", files("bell.json", maximally_entangled(2)), "--cut", 1)
    assert code == 0
    np.testing.assert_allclose(doc["report"]["coefficients"], [2**-0.5] * 2)
    assert doc["report"]["rank"] == 2
    assert doc["meta"]["command"] == "schmidt" and doc["meta"]["version"] == __version__


def test_norms(capsys, files):
    code, doc = run(capsys, "norm", "--input", files("bell.json", maximally_entangled(2)),
                    "--kind", "s", "--k", 1)
    assert code == 0 and doc["report"]["value"] == pytest.approx(2**-0.5)
    phi3 = maximally_entangled(3)
    code, doc = run(capsys, "norm", "--input", files("p.json", Opr.outer(phi3, phi3)),
                    "--k", 2, "--restarts", 10, "--seed", 7)
    assert code == 0 and doc["report"]["value"] == pytest.approx(2 / 3, abs=1e-8)
    assert doc["meta"]["seed"] == 7


def test_k_out_of_range_is_input_error(capsys, files):
    code, doc = run(capsys, "norm", "--input", files("bell.json", maximally_entangled(2)),
                    "--kind", "s", "--k", 5)
    assert code == 4 and doc["field"] == "k"


def test_classify_local_form_and_preserver(capsys, files):
    code, doc = run(capsys, "classify", "local-form", "--input", files("c.json", CNOT))
    assert code == 0 and doc["report"]["verdict"] == "Neither"
    code, doc = run(capsys, "classify", "preserver", "--input", files("c.json", CNOT), "--k", 1)
    assert code == 2 and doc["report"]["status"] == "ViolationWitnessed"
    u = kron_all([sample("haar_unitary", seed=1, dims=2), sample("haar_unitary", seed=2, dims=2)])
    code, doc = run(capsys, "classify", "preserver", "--input", files("u.json", u), "--k", 1)
    assert code == 0 and doc["report"]["consistent"]


def test_singular_operator_is_hypothesis_failure(capsys, files):
    e11, e12 = np.diag([1.0, 0]), np.array([[0, 1.0], [0, 0]])
    op = Opr(np.kron(e11, e11) + np.kron(e12, e12), (2, 2), (2, 2))
    code, doc = run(capsys, "classify", "preserver", "--input", files("s.json", op), "--k", 1)
    assert code == 3 and doc["report"]["status"] == "InvertibilityUnknown"
    code, doc = run(capsys, "recover", "--input", files("s.json", op))
    assert code == 3


def test_classify_cp(capsys, files):
    u = kron_all([sample("haar_unitary", seed=3, dims=2), sample("haar_unitary", seed=4, dims=2)])
    phi = SuperOp.conjugation(u)
    code, doc = run(capsys, "classify", "cp", "--superop", superop_file(files, "phi.json", phi), "--k", 1)
    assert code == 0 and doc["report"]["local_form"]["verdict"] == "Product"
    assert doc["report"]["unitary"]
    choi = Opr(phi.choi(), (2, 2, 2, 2), (2, 2, 2, 2))
    code, doc = run(capsys, "classify", "cp", "--choi", files("choi.json", choi), "--k", 1)
    assert code == 0
    dep = SuperOp.depolarizing((2, 2))
    code, doc = run(capsys, "classify", "cp", "--superop", superop_file(files, "d.json", dep), "--k", 1)
    assert code == 2 and doc["status"] == "MultipleKrausDirections"
    assert doc["witness"] is not None
    tr = SuperOp.transpose_map((2, 2))
    code, doc = run(capsys, "classify", "cp", "--superop", superop_file(files, "t.json", tr), "--k", 1)
    assert code == 3 and doc["status"] == "NotCompletelyPositive"


def test_classify_isometry(capsys, files):
    pt2 = SuperOp.partial_transpose_map((2, 2))
    code, doc = run(capsys, "classify", "isometry", "--superop", superop_file(files, "pt.json", pt2),
                    "--k", 1)
    assert code == 0 and doc["report"]["used_partial_transpose"]
    pt3 = SuperOp.partial_transpose_map((3, 3))
    code, doc = run(capsys, "classify", "isometry", "--superop", superop_file(files, "pt3.json", pt3),
                    "--k", 2)
    assert code == 2 and doc["status"] == "NotIsometry"
    assert doc["details"]["gap"] > 1e-3


def test_superop_file_shape_check(capsys, files):
    bad = sample("gaussian_opr", seed=1, dims=(2, 3))
    code, doc = run(capsys, "classify", "isometry", "--superop", files("bad.json", bad), "--k", 1)
    assert code == 4 and doc["field"] == "row_dims"


def test_gme_and_recover(capsys, files):
    ghz = Ket(np.array([1, 0, 0, 0, 0, 0, 0, 1]) / np.sqrt(2), (2, 2, 2))
    code, doc = run(capsys, "gme", "--input", files("ghz.json", ghz))
    assert code == 0 and doc["report"]["E"] == pytest.approx(0.5, abs=1e-10)
    rng = np.random.default_rng(0)
    sigma = Permutation((2, 0, 1))
    op = swap_operator(sigma, (2, 2, 2)) @ kron_all([sample("invertible_opr", dims=2, rng=rng)
                                                       for _ in range(3)])
    code, doc = run(capsys, "recover", "--input", files("l.json", op))
    assert code == 0 and doc["report"]["sigma"] == [3, 1, 2]
    code, doc = run(capsys, "recover", "--input", files("cnot.json", CNOT))
    assert code == 2 and doc["report"]["status"] == "NotSeparabilityPreserving"


def test_gme_invariance(capsys, files):
    code, doc = run(capsys, "gme-invariance", "--input", files("cnot.json", CNOT), "--samples", 10)
    assert code == 2 and doc["report"]["max_deviation"] > 0.1
    u = kron_all([sample("haar_unitary", seed=s, dims=2) for s in (1, 2)])
    code, doc = run(capsys, "gme-invariance", "--input", files("u.json", u), "--samples", 10)
    assert code == 0 and doc["report"]["consistent"]


def test_search(capsys):
    code, doc = run(capsys, "search", "--question", "multipartite-k", "--shape", "2,2,2",
                    "--k", 2, "--trials", 30, "--seed", 1)
    assert code == 0 and doc["report"]["candidates"] == []
    assert doc["report"]["config"]["shape"] == [2, 2, 2]


def test_selftest_subset(capsys):
    code, doc = run(capsys, "selftest", "--only", "1")
    assert code == 0 and doc["report"]["passed"]


@pytest.mark.parametrize("argv,field", [
    (["norm", "--input", "missing.json", "--k", "1"], "input"),
    (["bogus"], "argv"),
    (["norm", "--k", "1"], "argv"),
    (["search", "--question", "multipartite-k", "--shape", "2,x"], "shape"),
    (["selftest", "--only", "99"], "only"),
])
def test_input_errors_exit_four(capsys, tmp_path, argv, field):
    argv = [str(tmp_path / a) if a.endswith(".json") else a for a in argv]
    code, doc = run(capsys, *argv)
    assert code == 4
    assert doc["field"] == field


def test_malformed_file(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"dims": [2, 2], "re": [1, 0]}')
    code, doc = run(capsys, "gme", "--input", path)
    assert code == 4 and doc["field"] == "dims"


def test_out_flag_and_determinism(capsys, tmp_path, files):
    v = files("v.json", sample("haar_ket", seed=3, dims=(2, 3)))
    out = tmp_path / "report.json"
    assert main(["gme", "--input", str(v), "--seed", "4", "--out", str(out)]) == 0
    first = out.read_bytes()
    assert main(["gme", "--input", str(v), "--seed", "4", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert out.read_bytes() == first
    assert json.loads(first)["meta"]["seed"] == 4


def test_module_entry_point(tmp_path):
    path = tmp_path / "bell.json"
    dump(maximally_entangled(2), path)
    proc = subprocess.run([sys.executable, "-m", "seppres", "schmidt", "--input", str(path)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["report"]["rank"] == 2
