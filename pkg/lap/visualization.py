import logging

import plotly.express as px
import plotly.graph_objects as go

from lap.config import FOUR_SEVENTHS
from lap.reports import resolve_output

logger = logging.getLogger(__name__)


def plot_revenue_curve(curve, title='Revenue Curve'):
    """
    Create a plotly figure of a revenue curve and its concave envelope

    Parameters:
        curve (RevenueCurve): output of dist.revenue_curve
        title (str): figure title

    Returns:
        plotly.graph_objects.Figure: Plotly figure object
    """
    fig = go.Figure()

    # Shade ironed intervals first so the curves sit on top
    for a, b in curve.ironed_intervals:
        fig.add_vrect(x0=a, x1=b, fillcolor='orange', opacity=0.15, line_width=0)

    fig.add_trace(go.Scatter(
        x=curve.quantiles,
        y=curve.revenues,
        mode='lines+markers',
        name='R(q)',
        line=dict(color='blue', width=2)
    ))

    fig.add_trace(go.Scatter(
        x=[q for q, _ in curve.envelope],
        y=[r for _, r in curve.envelope],
        mode='lines',
        name='Ironed envelope',
        line=dict(color='red', width=3, dash='dash')
    ))

    fig.update_layout(
        title=title,
        xaxis_title='Quantile q = Pr[v >= p]',
        yaxis_title='Revenue',
        height=500
    )

    return fig


def plot_ratio_ladder(df):
    """
    Create a plotly line chart of revenue ratios against eps1

    Parameters:
        df (pandas.DataFrame): output of scenarios.correlated_ladder

    Returns:
        plotly.graph_objects.Figure: Plotly figure object
    """
    if df.empty:
        return None

    melted_df = df.melt(
        id_vars='eps1',
        value_vars=[c for c in ('ratio', 'la_ratio') if c in df.columns],
        var_name='Mechanism',
        value_name='Ratio'
    )
    melted_df['Mechanism'] = melted_df['Mechanism'].map({'ratio': 'best LAP', 'la_ratio': 'LA'})

    fig = px.line(
        melted_df,
        x='eps1',
        y='Ratio',
        color='Mechanism',
        markers=True,
        log_x=True,
        title='Revenue Ratio vs eps1',
        height=500
    )

    fig.add_hline(y=0.5, line_dash='dot', annotation_text='1/2')
    fig.add_hline(y=FOUR_SEVENTHS, line_dash='dot', annotation_text='4/7')
    fig.update_xaxes(autorange='reversed')

    return fig


def plot_lemma1_candidates(report):
    """
    Create a plotly bar chart of every candidate pooling mechanism's revenue

    Parameters:
        report (LemmaOneReport): output of exante.lemma1_mechanism

    Returns:
        plotly.graph_objects.Figure: Plotly figure object
    """
    table = report.candidate_table()
    if table.empty:
        return None

    table = table.drop_duplicates(subset=['family', 'schedule'])
    table['label'] = table['family'].astype(str) + ': ' + table['schedule']

    fig = px.bar(
        table,
        x='label',
        y='revenue',
        color=table['family'].astype(str),
        title='Candidate Mechanisms',
        labels={'label': 'Candidate', 'revenue': 'Expected revenue', 'color': 'Family'},
        height=500
    )

    fig.add_hline(y=report.opt_exante, line_dash='dash', annotation_text='ex-ante benchmark')
    fig.add_hline(y=FOUR_SEVENTHS * report.opt_exante, line_dash='dot', annotation_text='4/7 of benchmark')

    return fig


def save_figure(fig, path):
    """
    Write a figure as standalone HTML

    Returns:
        str: the path written, or None when there is no figure
    """
    if fig is None:
        logger.warning("no figure to save at %s", path)
        return None
    target = resolve_output(path)
    fig.write_html(target, include_plotlyjs='cdn')
    return target
