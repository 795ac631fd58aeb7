"""Writing summaries and tables."""
import json
import logging
import math
import os

import numpy as np

from lap.config import output_dir

logger = logging.getLogger(__name__)


def resolve_output(path):
    """
    Place a bare file name under LAP_OUTPUT_DIR

    Parameters:
        path (str): target path; anything with a directory part is kept

    Returns:
        str: the path to write
    """
    if os.path.dirname(path):
        return path
    return os.path.join(output_dir(), path)


def write_table(df, path):
    """
    Save a DataFrame as CSV, or as Excel when the suffix is .xlsx

    Returns:
        str: the path written
    """
    target = resolve_output(path)
    folder = os.path.dirname(target)
    if folder:
        os.makedirs(folder, exist_ok=True)
    if target.lower().endswith(".xlsx"):
        df.to_excel(target, index=False, engine="openpyxl")
    else:
        df.to_csv(target, index=False, float_format="%.12g")
    logger.debug("wrote %d rows to %s", len(df), target)
    return target


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        # 12 significant digits keep the output stable across platforms
        return float(f"{value:.12g}")
    return value


def dump_summary(summary):
    """Canonical JSON text: sorted keys, rounded floats, trailing newline."""
    return json.dumps(_plain(summary), sort_keys=True, indent=2) + "\n"


def write_summary(summary, path):
    target = resolve_output(path)
    with open(target, "w", encoding="utf-8") as fh:
        fh.write(dump_summary(summary))
    return target
