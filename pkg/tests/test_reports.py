import json
import math

import numpy as np
import pandas as pd
import plotly.graph_objects as go

from lap.dist import revenue_curve
from lap.exante import lemma1_mechanism
from lap.reports import dump_summary, resolve_output, write_summary, write_table
from lap.visualization import plot_lemma1_candidates, plot_revenue_curve, save_figure


def test_dump_summary_is_canonical():
    text = dump_summary({"b": np.float64(1 / 3), "a": [np.int64(2), math.inf, float("nan"), np.bool_(True)]})
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"')
    doc = json.loads(text)
    assert doc["a"] == [2, "inf", None, True]
    assert doc["b"] == 0.333333333333


def test_resolve_output_uses_env(monkeypatch, tmp_path):
    monkeypatch.setenv("LAP_OUTPUT_DIR", str(tmp_path))
    assert resolve_output("table.csv") == str(tmp_path / "table.csv")
    assert resolve_output("sub/table.csv") == "sub/table.csv"


def test_write_table_and_summary(tmp_path):
    df = pd.DataFrame({"x": [0.1, 0.2], "y": ["a", "b"]})
    target = write_table(df, str(tmp_path / "t.csv"))
    assert pd.read_csv(target).equals(df)
    path = write_summary({"k": 1}, str(tmp_path / "s.json"))
    with open(path, encoding="utf-8") as fh:
        assert json.load(fh) == {"k": 1}


def test_figures(tmp_path, irregular, two_point):
    fig = plot_revenue_curve(revenue_curve(irregular))
    assert isinstance(fig, go.Figure)
    assert len(fig.data) == 2

    _, report = lemma1_mechanism(two_point, two_point, 1.0)
    bars = plot_lemma1_candidates(report)
    assert isinstance(bars, go.Figure)

    path = save_figure(fig, str(tmp_path / "curve.html"))
    assert path.endswith("curve.html")
    assert save_figure(None, str(tmp_path / "none.html")) is None
