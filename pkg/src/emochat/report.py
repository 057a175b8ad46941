"""Report rendering: pretty tables, CSV exports, and figure files.

The evaluate/agreement table layout puts one column per target in the
fixed order valence, arousal, then the seven categories.
"""

from __future__ import annotations

import csv
import os

from .evaluation import AgreementReport, MetricsReport
from .features import FEATURE_NAMES, FeatureRow
from .fusion import TARGETS

METRIC_ROWS = ("accuracy", "precision", "recall", "f1")

_METRIC_ATTR = {
    "accuracy": "accuracy",
    "precision": "weighted_precision",
    "recall": "weighted_recall",
    "f1": "weighted_f1",
}

AGREEMENT_TARGETS = TARGETS + ("categories_mean",)


def _target_title(target: str) -> str:
    return target.capitalize()


def metrics_matrix(reports: dict[str, MetricsReport]) -> dict[str, dict[str, float]]:
    return {
        metric: {t: getattr(reports[t], _METRIC_ATTR[metric]) for t in TARGETS}
        for metric in METRIC_ROWS
    }


def format_metrics_table(reports: dict[str, MetricsReport]) -> str:
    matrix = metrics_matrix(reports)
    width = 11
    header = "".ljust(width) + "".join(_target_title(t).rjust(width) for t in TARGETS)
    lines = [header]
    for metric in METRIC_ROWS:
        row = metric.capitalize().ljust(width)
        row += "".join(f"{matrix[metric][t]:.3f}".rjust(width) for t in TARGETS)
        lines.append(row)
    return "\n".join(lines)


def metrics_to_csv(reports: dict[str, MetricsReport], path: str) -> None:
    matrix = metrics_matrix(reports)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric"] + [_target_title(t) for t in TARGETS])
        for metric in METRIC_ROWS:
            writer.writerow([metric] + [f"{matrix[metric][t]:.6f}" for t in TARGETS])


def render_metrics_figure(reports: dict[str, MetricsReport], path: str) -> None:
    """Grouped bar chart of the four metrics per target, saved to a file."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matrix = metrics_matrix(reports)
    x = range(len(TARGETS))
    bar_w = 0.2
    fig, ax = plt.subplots(figsize=(11, 4.5))
    for i, metric in enumerate(METRIC_ROWS):
        xs = [xi + (i - 1.5) * bar_w for xi in x]
        ax.bar(xs, [matrix[metric][t] for t in TARGETS], width=bar_w, label=metric)
    ax.set_xticks(list(x))
    ax.set_xticklabels([_target_title(t) for t in TARGETS], rotation=30, ha="right")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score")
    ax.legend(ncol=4, loc="lower right")
    ax.set_title("Per-target metrics")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def format_agreement_table(summary: dict[str, AgreementReport]) -> str:
    width = 16
    lines = ["target".ljust(width) + "metric".ljust(10) + "alpha".rjust(8)]
    for target in AGREEMENT_TARGETS:
        report = summary[target]
        lines.append(
            target.ljust(width) + report.metric.ljust(10) + f"{report.alpha:.4f}".rjust(8)
        )
    return "\n".join(lines)


def agreement_to_csv(summary: dict[str, AgreementReport], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["target", "metric", "alpha", "units", "annotators"])
        for target in AGREEMENT_TARGETS:
            r = summary[target]
            writer.writerow([target, r.metric, f"{r.alpha:.6f}", r.unit_count, r.annotator_count])


def render_agreement_figure(summary: dict[str, AgreementReport], path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    targets = list(AGREEMENT_TARGETS)
    alphas = [summary[t].alpha for t in targets]
    fig, ax = plt.subplots(figsize=(9, 4))
    ax.bar(range(len(targets)), alphas, color="#4878a8")
    ax.set_xticks(range(len(targets)))
    ax.set_xticklabels(targets, rotation=30, ha="right")
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_ylim(min(-0.1, min(alphas) - 0.05), 1.05)
    ax.set_ylabel("Krippendorff alpha")
    ax.set_title("Inter-annotator agreement")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def feature_rows_to_csv(rows: list[FeatureRow], path: str) -> None:
    """CSV with one message per row; column order is the feature dictionary."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["message_id", "kd_valid", *FEATURE_NAMES])
        for row in rows:
            writer.writerow(
                [row.message_id, int(row.kd_valid)]
                + [repr(float(v)) for v in row.as_array()]
            )


def ensure_outdir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
