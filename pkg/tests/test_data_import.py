import json

import pandas as pd
import pytest

from lap.data_import import (
    detect_file_type,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    load_joint_table,
    parse_schedule,
    save_instance,
)
from lap.errors import InvalidInstance, NonMonotoneSchedule
from lap.mech import PoolSchedule


@pytest.mark.parametrize("path, kind", [
    ("a.json", "json"),
    ("b.XLSX", "xlsx"),
    ("e.xls", "unknown"),
    ("c.csv", "csv"),
    ("d.txt", "unknown"),
])
def test_detect_file_type(path, kind):
    assert detect_file_type(path) == kind


def test_parse_schedule():
    assert parse_schedule("") == PoolSchedule()
    assert parse_schedule("[]") == PoolSchedule()
    assert parse_schedule("[1,2];[3, 5]").jumps == ((1.0, 2.0), (3.0, 5.0))
    assert parse_schedule("[[1, 100]]").jumps == ((1.0, 100.0),)
    with pytest.raises(InvalidInstance):
        parse_schedule("pool everything")
    with pytest.raises(NonMonotoneSchedule):
        parse_schedule("[3,5];[1,2]")


def test_instance_document(example1):
    doc = instance_to_dict(example1, PoolSchedule(((1, 100),)))
    assert doc["bidders"] == 2
    assert doc["pool_schedule"] == [[1.0, 100.0]]
    inst, schedule = instance_from_dict(json.loads(json.dumps(doc)))
    assert inst.supports() == example1.supports()
    assert str(schedule) == "[1,100]"


def test_instance_document_errors():
    with pytest.raises(InvalidInstance):
        instance_from_dict({})
    with pytest.raises(InvalidInstance):
        instance_from_dict({"prior": {"mixed": []}})
    with pytest.raises(InvalidInstance):
        instance_from_dict({"bidders": 3, "prior": {"independent": [[[1, 1.0]], [[2, 1.0]]]}})


def test_joint_document():
    inst, schedule = instance_from_dict({"prior": {"joint": [[[1, 1], 0.5], [[2, 3], 0.5]]}})
    assert not inst.is_independent
    assert inst.bidders == 2
    assert schedule is None


def test_save_and_load(tmp_path, two_point_iid):
    path = tmp_path / "iid.json"
    save_instance(two_point_iid, str(path))
    inst, schedule = load_instance(str(path))
    assert inst.is_independent
    assert inst.supports() == two_point_iid.supports()
    assert schedule is None


def test_load_joint_csv(tmp_path):
    path = tmp_path / "joint.csv"
    pd.DataFrame({"V1": [1, 2], "v2": [1, 3], "Mass": [0.25, 0.75]}).to_csv(path, index=False)
    inst = load_joint_table(str(path))
    assert inst.profiles() == [((1.0, 1.0), 0.25), ((2.0, 3.0), 0.75)]


def test_load_joint_table_needs_columns(tmp_path):
    path = tmp_path / "bad.csv"
    pd.DataFrame({"a": [1], "b": [1.0]}).to_csv(path, index=False)
    with pytest.raises(InvalidInstance):
        load_joint_table(str(path))
