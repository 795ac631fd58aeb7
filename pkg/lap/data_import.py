"""
Reading and writing instance files.

Instance documents are JSON:

    {"bidders": 2,
     "prior": {"independent": [[[1, 1.0]], [[1.01, 0.99], [100, 0.01]]]},
     "pool_schedule": [[1, 100]]}

A joint prior is written as ``{"joint": [[[v1, v2], mass], ...]}``. Joint
tables may also come from a CSV or Excel sheet with one value column per
bidder and a mass column.
"""
import json
import logging
import os
import re

import pandas as pd

from lap.dist import from_pairs, to_pairs
from lap.errors import InvalidInstance
from lap.mech import AuctionInstance, PoolSchedule

logger = logging.getLogger(__name__)

_JUMP = re.compile(r"\[\s*([^,\[\]]+)\s*,\s*([^,\[\]]+)\s*\]")


def detect_file_type(filepath):
    """
    Detect file type based on extension

    Parameters:
        filepath (str): Path to the file

    Returns:
        str: 'json', 'xlsx', 'csv', or 'unknown'
    """
    _, ext = os.path.splitext(filepath)
    ext = ext.lower()

    if ext == '.json':
        return 'json'
    elif ext == '.xlsx':
        return 'xlsx'
    elif ext == '.csv':
        return 'csv'
    else:
        return 'unknown'


def parse_schedule(text):
    """
    Parse a pool schedule literal

    Parameters:
        text (str): jumps as "[s,t]" separated by ';' (or JSON "[[s,t],...]");
            "" or "[]" is the empty schedule

    Returns:
        PoolSchedule: the validated schedule
    """
    text = (text or "").strip()
    if text in ("", "[]"):
        return PoolSchedule()
    jumps = [(float(s), float(t)) for s, t in _JUMP.findall(text)]
    if not jumps:
        raise InvalidInstance(f"cannot parse pool schedule {text!r}")
    return PoolSchedule(tuple(jumps))


def instance_from_dict(doc):
    """
    Build an instance (and optional schedule) from a decoded JSON document

    Returns:
        tuple: (AuctionInstance, PoolSchedule or None)
    """
    if not isinstance(doc, dict):
        raise InvalidInstance("instance document must be a JSON object")
    prior = doc.get("prior")
    if not isinstance(prior, dict):
        raise InvalidInstance("instance document needs a 'prior' object")

    if "independent" in prior:
        marginals = prior["independent"]
        if not isinstance(marginals, list) or not all(isinstance(pairs, list) for pairs in marginals):
            raise InvalidInstance("'independent' must be a list of [value, mass] lists, one per bidder")
        inst = AuctionInstance.independent([from_pairs(pairs) for pairs in marginals])
    elif "joint" in prior:
        if not isinstance(prior["joint"], list):
            raise InvalidInstance("'joint' must be a list of [profile, mass] rows")
        inst = AuctionInstance.from_joint(prior["joint"])
    else:
        raise InvalidInstance("prior must be 'independent' or 'joint'")

    declared = doc.get("bidders")
    if declared is not None:
        try:
            declared = int(declared)
        except (TypeError, ValueError) as exc:
            raise InvalidInstance(f"'bidders' must be an integer, got {declared!r}") from exc
        if declared != inst.bidders:
            raise InvalidInstance(f"document declares {declared} bidders but the prior has {inst.bidders}")

    schedule = doc.get("pool_schedule")
    if schedule is not None:
        if not isinstance(schedule, list):
            raise InvalidInstance("'pool_schedule' must be a list of [s, t] jumps")
        schedule = PoolSchedule(tuple(schedule))
    return inst, schedule


def instance_to_dict(inst, schedule=None):
    """JSON-ready document for an instance and an optional schedule."""
    if inst.is_independent:
        prior = {"independent": [to_pairs(d) for d in inst.marginals]}
    else:
        prior = {"joint": [[list(p), m] for p, m in inst.joint]}
    doc = {"bidders": inst.bidders, "prior": prior}
    if schedule is not None:
        doc["pool_schedule"] = [list(jump) for jump in schedule]
    return doc


def load_joint_table(filepath, sheet_name=0):
    """
    Read a joint prior from a CSV or Excel table

    Value columns are those whose name starts with 'v' (v1, v2, ...) in
    name order; the probability column is 'mass' or 'prob'.

    Returns:
        AuctionInstance: joint prior
    """
    file_type = detect_file_type(filepath)
    if file_type == 'xlsx':
        df = pd.read_excel(filepath, sheet_name=sheet_name)
    elif file_type == 'csv':
        df = pd.read_csv(filepath)
    else:
        raise InvalidInstance(f"unsupported table format: {filepath}")

    lowercase_columns = {str(col).strip().lower(): col for col in df.columns}
    mass_col = next((lowercase_columns[c] for c in ('mass', 'prob', 'probability') if c in lowercase_columns), None)
    value_cols = sorted(
        (c for c in lowercase_columns if re.fullmatch(r"v\d+", c)),
        key=lambda c: int(c[1:]),
    )
    if mass_col is None or not value_cols:
        raise InvalidInstance(f"table needs v1..vn and mass columns, found {df.columns.tolist()}")

    values = df[[lowercase_columns[c] for c in value_cols]].astype(float).to_numpy()
    masses = df[mass_col].astype(float).to_numpy()
    logger.debug("read %d joint rows over %d bidders from %s", len(df), len(value_cols), filepath)
    return AuctionInstance.from_joint([(tuple(row), m) for row, m in zip(values, masses)])


def load_instance(filepath):
    """
    Load an instance file

    Parameters:
        filepath (str): JSON document, or CSV/XLSX joint table

    Returns:
        tuple: (AuctionInstance, PoolSchedule or None)
    """
    file_type = detect_file_type(filepath)
    if file_type in ('csv', 'xlsx'):
        return load_joint_table(filepath), None
    with open(filepath, encoding="utf-8") as fh:
        doc = json.load(fh)
    return instance_from_dict(doc)


def save_instance(inst, filepath, schedule=None):
    with open(filepath, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(inst, schedule), fh, indent=2)
