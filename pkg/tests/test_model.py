import json
import random
from fractions import Fraction
from pathlib import Path

import pytest

from gsaw.model import (
    FIXTURE_DIR,
    CouplingModel,
    ModelError,
    homogeneous,
    load_model,
    model_from_json,
    random_model,
    save_model,
    validate_model,
)
from gsaw.scalars import FLOAT

TOP = Path(__file__).resolve().parents[1] / "fixtures"


def test_i2_covariance(i2):
    assert i2.cov.entries == [[Fraction(3, 8), Fraction(1, 8)], [Fraction(1, 8), Fraction(3, 8)]]


def test_i3_covariance(i3):
    c = i3.cov.entries
    assert all(c[x][x] == Fraction(1, 2) for x in range(3))
    assert all(c[x][y] == Fraction(1, 4) for x in range(3) for y in range(3) if x != y)


def test_i1_covariance(i1):
    assert i1.C(1, 1) == Fraction(1, 2)


def test_validation_of_fixture(i2):
    rep = validate_model(i2)
    assert rep.ok and rep.markov_valid and rep.hermitian_positive is True
    assert rep.rho == pytest.approx(1 / 3)


def test_validation_of_non_dominant_model():
    rep = validate_model(load_model(TOP / "bad_rho.json"))
    assert not rep.diagonally_dominant
    assert rep.rho == 2
    assert rep.hermitian_positive is False


def test_float_certificate_indeterminate():
    # singular Hermitian part: the pivot falls below threshold
    m = CouplingModel(2, [1, 1], [[0, 1], [1, 0]], None, FLOAT)
    assert validate_model(m).hermitian_positive is None
    assert validate_model(m).as_dict()["hermitian_positive"] == "indeterminate"


def test_markov_validity_flags_complex_coupling():
    m = CouplingModel(2, [3, 3], [[0, ["1", "1"]], [1, 0]])
    rep = validate_model(m)
    assert not rep.markov_valid and rep.markov_reasons


def test_rejects_nonzero_diagonal_of_j():
    with pytest.raises(ModelError):
        CouplingModel(2, [3, 3], [[1, 1], [1, 0]])


def test_rejects_zero_d():
    with pytest.raises(ModelError):
        CouplingModel(1, [0], [[0]])


def test_missing_keys():
    with pytest.raises(ModelError, match="missing"):
        model_from_json({"size": 1})


def test_malformed_json_reports_line(tmp_path):
    p = tmp_path / "m.json"
    p.write_text('{\n  "size": 1,\n  "diag": [2,,]\n}\n')
    with pytest.raises(ModelError) as exc:
        load_model(p)
    assert ":3:" in str(exc.value) and '"diag": [2,,]' in str(exc.value)


def test_json_round_trip(tmp_path):
    m = random_model(random.Random(3), 4, complex_entries=True)
    p = tmp_path / "m.json"
    save_model(m, p)
    assert load_model(p) == m
    assert json.loads(json.dumps(m.to_json())) == m.to_json()


def test_shipped_fixtures_match_top_level_copies():
    for name in ("i1", "i2", "i3"):
        assert json.loads((FIXTURE_DIR / f"{name}.json").read_text()) == json.loads((TOP / f"{name}.json").read_text())


def test_random_models_are_dominant():
    rng = random.Random(0)
    for _ in range(50):
        m = random_model(rng, rng.randint(1, 5), complex_entries=rng.random() < 0.5)
        assert validate_model(m).diagonally_dominant


def test_homogeneous_and_shift():
    m = homogeneous(3, 3, 1)
    assert m.shifted(1).diag == (4, 4, 4)
    assert m.with_mode(FLOAT).C(1, 2) == pytest.approx(0.25)
