import numpy as np
import pandas as pd

from eikolab.reports.models import WindingRecord
from eikolab.reports.writer import (
    build_envelope,
    canonical_json,
    config_hash,
    read_ladder,
    to_jsonable,
    write_characteristics,
    write_ladder,
)
from eikolab.tools.characteristics import trace


def test_to_jsonable_handles_numpy_and_non_finite():
    data = {"a": np.float64(0.5), "b": (1, 2), "c": np.array([1.0, np.nan]), "d": np.bool_(True), "e": np.inf}
    assert to_jsonable(data) == {"a": 0.5, "b": [1, 2], "c": [1.0, None], "d": True, "e": None}


def test_config_hash_ignores_key_order():
    assert config_hash({"a": 1, "b": [1.5, 2]}) == config_hash({"b": [1.5, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
    assert canonical_json({"b": 1, "a": 0.1}) == '{"a":0.1,"b":1}'


def test_ladder_lines_carry_the_header(tmp_path):
    envelope = build_envelope("classify", "f" * 64, [WindingRecord(loop={"radius": 0.5}, degree=1), {"degree": 0}])
    path = tmp_path / "ladder.jsonl"
    write_ladder(envelope, path)
    records = read_ladder(path)
    assert [r["degree"] for r in records] == [1, 0]
    assert all(r["command"] == "classify" and r["config_hash"] == "f" * 64 for r in records)


def test_characteristics_csv(tmp_path, constant):
    chars = [trace(constant, (0.0, 0.0), max_steps=3), trace(constant, (0.5, 0.0), max_steps=2)]
    path = tmp_path / "traces.csv"
    assert write_characteristics(chars, path) == 7
    frame = pd.read_csv(path)
    assert frame["seed"].tolist() == [0, 0, 0, 0, 1, 1, 1]
    np.testing.assert_allclose(frame["x1"].iloc[4:], 0.5)
