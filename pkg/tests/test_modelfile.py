import json

import pytest

from mrplab.errors import SchemaError
from mrplab.exact import BoxQuery
from mrplab.modelfile import (
    bundled_model_path,
    load_bundled_model,
    load_model_file,
    parse_model_document,
    parse_queries_document,
)


def test_bundled_models_load():
    gh, meta = load_bundled_model("gamma_half")
    assert gh.is_proper_mrp
    assert meta["name"] == "gamma_half"

    bi, meta = load_bundled_model("bivariate")
    assert bi.is_proper_mrp and bi.param_dim == 2

    e16, meta = load_bundled_model("example16")
    assert not e16.is_proper_mrp
    assert meta["expects_rejection"] is True


def test_unknown_bundled_model():
    with pytest.raises(SchemaError):
        bundled_model_path("nonexistent")


def test_unknown_field_rejected_with_path():
    doc = {
        "kernel": {"family": "exponential", "extra": 1},
        "mixing": {"kind": "gamma", "rate": 2.0, "shape": 1.0},
    }
    with pytest.raises(SchemaError, match="kernel.*extra"):
        parse_model_document(doc)
    doc2 = {
        "kernel": {"family": "exponential"},
        "mixing": {"kind": "gamma", "rate": 2.0, "shape": 1.0},
        "meta": {"name": "x", "color": "blue"},
    }
    with pytest.raises(SchemaError, match="meta.*color"):
        parse_model_document(doc2)
    with pytest.raises(SchemaError, match="missing"):
        parse_model_document({"kernel": {"family": "exponential"}})


def test_marginal_schema_strict():
    doc = {
        "kernel": {"family": "gamma", "shape": "theta2"},
        "mixing": {
            "kind": "product_rectangle",
            "marginals": [
                {"kind": "gamma", "rate": 2.0, "shape": 2.0},
                {"kind": "uniform", "lo": 0.2, "hi": 0.8, "mid": 0.5},
            ],
        },
    }
    with pytest.raises(SchemaError, match=r"marginals\[1\]"):
        parse_model_document(doc)


def test_bad_json_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "kernel": {\n}')
    with pytest.raises(SchemaError, match="line"):
        load_model_file(str(p))


def test_shape_string_validation():
    doc = {
        "kernel": {"family": "gamma", "shape": "theta3"},
        "mixing": {"kind": "gamma", "rate": 2.0, "shape": 1.0},
    }
    with pytest.raises(Exception):
        parse_model_document(doc)


def test_queries_parse_boxes_and_counts():
    doc = [
        {"id": "a", "bounds": [[None, 2.0], [None, 1.0]]},
        {"type": "box", "bounds": [[0.5, 1.5]]},
        {"id": "c", "type": "count", "t": 2.0, "n": 3},
    ]
    parsed = parse_queries_document(doc)
    assert parsed[0]["query"] == BoxQuery.upper(2.0, 1.0)
    assert parsed[1]["id"] == 1
    assert parsed[1]["query"].bounds == ((0.5, 1.5),)
    assert parsed[2]["type"] == "count" and parsed[2]["n"] == 3


def test_queries_schema_errors():
    with pytest.raises(SchemaError):
        parse_queries_document({"not": "a list"})
    with pytest.raises(SchemaError):
        parse_queries_document([{"type": "box"}])
    with pytest.raises(SchemaError):
        parse_queries_document([{"type": "box", "bounds": [[1.0]]}])
    with pytest.raises(SchemaError):
        parse_queries_document([{"type": "ellipse"}])
    with pytest.raises(SchemaError):
        parse_queries_document([{"type": "box", "bounds": [["a", 2.0]]}])


def test_model_round_trip_through_to_dict():
    model, _ = load_bundled_model("bivariate")
    doc = {"kernel": model.kernel.to_dict(), "mixing": model.mixing.to_dict()}
    again, _ = parse_model_document(json.loads(json.dumps(doc)))
    assert again.model_hash() == model.model_hash()
