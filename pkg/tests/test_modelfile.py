import math
from pathlib import Path

import pytest

from bellsim.core import MAXIMAL_VIOLATION_SETTINGS
from bellsim.modelfile import ModelFileError, load_config, load_model, parse_model
from bellsim.montecarlo import FactorizableSource, JointSource, P16Source, VisibilitySource, exact_chsh

MODELS = Path(__file__).resolve().parents[1] / "models"
S = MAXIMAL_VIOLATION_SETTINGS


@pytest.mark.parametrize(
    "name, kind, B",
    [
        ("vertex1.model", P16Source, 2.0),
        ("row6.model", P16Source, 2.0),
        ("factorizable.model", FactorizableSource, 1.875),
        ("joint.model", JointSource, 1.5),
        ("aspect.model", VisibilitySource, 2.70),
    ],
)
def test_sample_models(name, kind, B):
    src = load_model(MODELS / name)
    assert isinstance(src, kind)
    assert exact_chsh(src, S) == pytest.approx(B, abs=1e-12)


def test_factorizable_radians():
    src = parse_model({
        "kind": "factorizable",
        "angle_unit": "rad",
        "lambdas": [{"weight": 1.0, "A": {0: [1, 1], math.pi / 2: [1, 1]}, "B": {math.pi / 4: [1, 1], 3 * math.pi / 4: [1, 1]}}],
    })
    assert exact_chsh(src, S) == 2.0


@pytest.mark.parametrize(
    "doc",
    [
        [1, 2],
        {"p": [1] + [0] * 15},
        {"kind": "bogus"},
        {"kind": "p16", "p": [1] + [0] * 15, "extra": 1},
        {"kind": "p16", "p": [0.5] * 16},
        {"kind": "visibility", "V": 1.5},
        {"kind": "joint", "lambdas": []},
        {"kind": "joint", "lambdas": [{"weight": 1.0, "table": [[1, 0], [0, 0]], "colour": "red"}]},
        {"kind": "joint", "lambdas": [{"weight": 1.0, "table": [[0.5, 0], [0, 0]]}]},
        {"kind": "factorizable", "angle_unit": "grad", "lambdas": [{"weight": 1, "A": {0: [1, 1]}, "B": {0: [1, 1]}}]},
        {"kind": "factorizable", "lambdas": [{"weight": 1, "A": {0: [1]}, "B": {0: [1, 1]}}]},
        {"kind": "factorizable", "lambdas": [{"label": "x", "weight": 0.5, "A": {0: [1, 1]}, "B": {0: [1, 1]}},
                                             {"label": "x", "weight": 0.5, "A": {0: [1, 1]}, "B": {0: [1, 1]}}]},
    ],
)
def test_invalid_documents(doc):
    with pytest.raises(ValueError):
        parse_model(doc)


def test_invalid_yaml(tmp_path):
    path = tmp_path / "bad.model"
    path.write_text("kind: [unclosed\n")
    with pytest.raises(ModelFileError):
        load_model(path)


def test_missing_file_is_os_error(tmp_path):
    with pytest.raises(OSError):
        load_model(tmp_path / "absent.model")


def test_config_dashes_and_unknown_keys(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("alpha-prime: 10\nn: 5\n")
    assert load_config(path, {"alpha_prime", "n"}) == {"alpha_prime": 10, "n": 5}
    with pytest.raises(ModelFileError, match="unknown"):
        load_config(path, {"n"})
