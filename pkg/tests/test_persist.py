import json
import math

import numpy as np
import pytest

import nlreg
from nlreg import persist
from nlreg.errors import InputError
from nlreg.model import expand_model
from nlreg.monomial import ORDERING_TAG
from nlreg.persist import expansion_document, load_solution, save_json, solution_document
from nlreg.runtime import Controller

OPTIONS = {"order": 6, "alpha_max": 50.0, "sqrt_method": "principal"}


@pytest.fixture
def f8_file(tmp_path, solved):
    spec, sol, _ = solved("f8", 6)
    path = tmp_path / "solution.json"
    save_json(solution_document(spec, sol, OPTIONS), path)
    return path, spec, sol


def test_roundtrip(f8_file, rng):
    path, spec, sol = f8_file
    spec2, sol2 = load_solution(path)
    assert sol2.model_hash == sol.model_hash and sol2.order == 6 and sol2.transformed
    for a, b in zip(sol.P, sol2.P):
        np.testing.assert_array_equal(a.matrix, b.matrix)
    x = rng.uniform(-0.2, 0.2, size=3)
    np.testing.assert_array_equal(Controller(sol, spec)(x), Controller(sol2, spec2)(x))


def test_document_metadata(f8_file):
    path, _, sol = f8_file
    doc = json.loads(path.read_text())
    assert doc["ordering"] == ORDERING_TAG and doc["tool"] == "nlreg" and doc["version"] == nlreg.__version__
    assert doc["model_hash"] == sol.model_hash
    assert [len(b["exponents"]) for b in doc["basis"]] == [3, 6, 10, 15, 21, 28]
    assert doc["transform"]["alpha_before"] == "inf"


def test_refuses_overwrite(f8_file):
    path, spec, sol = f8_file
    with pytest.raises(FileExistsError):
        save_json({}, path)
    save_json({"a": 1}, path, force=True)
    assert json.loads(path.read_text()) == {"a": 1}


def test_size_warning(tmp_path, monkeypatch):
    monkeypatch.setattr(persist, "SIZE_WARNING_BYTES", 10)
    with pytest.warns(ResourceWarning):
        save_json({"data": list(range(20))}, tmp_path / "big.json")


def test_rejects_foreign_files(tmp_path, f8_file):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"format": "other"}))
    with pytest.raises(InputError):
        load_solution(bad)
    path, _, _ = f8_file
    doc = json.loads(path.read_text())
    doc["ordering"] = "colex-v0"
    bad.write_text(json.dumps(doc))
    with pytest.raises(InputError, match="ordering"):
        load_solution(bad)


def test_hash_mismatch_warns(tmp_path, f8_file):
    path, _, _ = f8_file
    doc = json.loads(path.read_text())
    doc["model"]["Q"] = "0.25*(x1^2 + x2^2 + x3^2)"
    edited = tmp_path / "edited.json"
    edited.write_text(json.dumps(doc))
    with pytest.warns(RuntimeWarning, match="hash"):
        load_solution(edited)


def test_expansion_document():
    spec = nlreg.load_fixture("example51")
    system, cost = expand_model(spec, 5)
    doc = expansion_document(spec, system, cost)
    assert doc["F"][0]["data"][0][1] == 3.0
    assert len(doc["G"]) == 2 and len(doc["G"][0]) == 6
    assert doc["assumptions"]["stabilizable"] is True
    assert doc["assumptions"]["Q1_min_eigenvalue"] == pytest.approx(100.0)
    json.dumps(doc, allow_nan=False)


def test_nonfinite_numbers():
    assert persist._num(math.inf) == "inf" and persist._num(-math.inf) == "-inf"
    assert persist._num(math.nan) == "nan" and persist._num(2) == 2.0
    assert math.isinf(persist._from_num("inf"))
