import json

import numpy as np
import pytest

from seppres.io import FormatError, dump, load_ket, load_opr, opr_from_dict, ket_from_dict
from seppres.tensor import Ket, Opr, sample


def test_ket_json_roundtrip(tmp_path):
    v = sample("haar_ket", seed=1, dims=(2, 3))
    path = tmp_path / "v.json"
    dump(v, path)
    w = load_ket(path)
    assert w.dims == (2, 3)
    np.testing.assert_array_equal(w.amps, v.amps)


def test_opr_json_roundtrip(tmp_path):
    x = Opr(sample("gaussian_opr", seed=2, dims=6).entries, (2, 3), (3, 2))
    path = tmp_path / "x.json"
    dump(x, path)
    y = load_opr(path)
    assert (y.row_dims, y.col_dims) == ((2, 3), (3, 2))
    np.testing.assert_array_equal(y.entries, x.entries)


def test_nested_real_operator():
    x = opr_from_dict({"dims": [2, 2], "re": np.eye(4).tolist()})
    assert x.row_dims == (2, 2)
    np.testing.assert_array_equal(x.entries, np.eye(4))


def test_text_format(tmp_path):
    path = tmp_path / "bell.txt"
    path.write_text("# Bell state\n2 2\n0.7071067811865476 0\n0 0\n0 0\n0.7071067811865476 0\n")
    v = load_ket(path)
    assert v.dims == (2, 2)
    assert v.norm() == pytest.approx(1.0)
    path = tmp_path / "op.txt"
    path.write_text("2 | 2\n1 0\n0 1\n0 -1\n1 0\n")
    np.testing.assert_array_equal(load_opr(path).entries, [[1, 1j], [-1j, 1]])


@pytest.mark.parametrize("doc,field", [
    ({"re": [1, 0]}, "dims"),
    ({"dims": [2], "im": [0, 0]}, "re"),
    ({"dims": [2, 2], "re": [1, 0, 0]}, "dims"),
    ({"dims": [2], "re": [1, 0], "im": [0]}, "im"),
    ({"dims": [0], "re": []}, "dims"),
    ({"dims": "two", "re": [1]}, "dims"),
])
def test_ket_format_errors_name_field(doc, field):
    with pytest.raises(FormatError) as err:
        ket_from_dict(doc)
    assert err.value.field == field


def test_operator_size_mismatch():
    with pytest.raises(FormatError) as err:
        opr_from_dict({"row_dims": [2], "col_dims": [3], "re": [1, 2, 3, 4]})
    assert err.value.field == "row_dims"


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{oops")
    with pytest.raises(FormatError, match="malformed JSON"):
        load_ket(path)
    path.write_text(json.dumps([1, 2]))
    with pytest.raises(FormatError):
        load_ket(path)


def test_missing_file(tmp_path):
    with pytest.raises(FormatError, match="cannot read"):
        load_opr(tmp_path / "nope.json")


def test_unknown_object():
    from seppres.io import to_dict

    with pytest.raises(TypeError):
        to_dict([1, 2])
    assert to_dict(Ket.basis(2, 1))["re"] == [0.0, 1.0]
