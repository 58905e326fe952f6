"""
Report output
─────────────
EvalReport JSON (sorted keys, so reruns are byte-identical), one CSV row per
cell, the per-user breakdown with bootstrap intervals, and SVG box plots of
EER against window size.
"""
from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib
import numpy as np
import pandas as pd

from ppgauth.errors import ParseError
from ppgauth.schemas import BreakdownRow, BreakdownTable, EvalReport
from ppgauth.utils.codec import read_json, write_json
from ppgauth.utils.logger import get_logger

logger = get_logger(__name__)

CELL_COLUMNS = ["protocol", "classifier", "user", "window", "enrol", "eer", "threshold", "n_genuine", "n_impostor"]


def write_report(report: EvalReport, path: str | Path) -> None:
    write_json(report.model_dump(mode="json"), path)


def read_report(path: str | Path) -> EvalReport:
    doc = read_json(path)
    try:
        return EvalReport.model_validate(doc)
    except ValueError as exc:
        raise ParseError(f"not an evaluation report: {exc}", path=path) from exc


def cells_frame(report: EvalReport) -> pd.DataFrame:
    rows = [
        {
            "protocol": c.protocol,
            "classifier": c.classifier,
            "user": c.user_id,
            "window": c.window,
            "enrol": c.enrol if c.enrol is not None else "",
            "eer": c.eer,
            "threshold": c.threshold,
            "n_genuine": c.n_genuine,
            "n_impostor": c.n_impostor,
        }
        for c in report.cells
    ]
    return pd.DataFrame(rows, columns=CELL_COLUMNS)


def write_cells_csv(report: EvalReport, path: str | Path) -> None:
    cells_frame(report).to_csv(path, index=False, float_format="%.17g")


# ─── Per-user breakdown ───────────────────────────────────────────────────────

def per_user_breakdown(report: EvalReport, resamples: int = 1000, seed: int = 0) -> BreakdownTable:
    """95% bootstrap interval of each cell's mean EER over its folds or repeats."""
    rows: list[BreakdownRow] = []
    rng = np.random.default_rng(seed)
    for cell in report.cells:
        eers = np.asarray(cell.eers, dtype=np.float64)
        if eers.size > 1:
            means = eers[rng.integers(0, eers.size, size=(resamples, eers.size))].mean(axis=1)
            low, high = np.percentile(means, [2.5, 97.5])
        else:
            low = high = cell.eer
        rows.append(
            BreakdownRow(
                protocol=cell.protocol,
                classifier=cell.classifier,
                window=cell.window,
                enrol=cell.enrol,
                user_id=cell.user_id,
                eer=cell.eer,
                ci_low=float(low),
                ci_high=float(high),
            )
        )
    if not rows:
        return BreakdownTable()
    worst = max(rows, key=lambda r: r.eer)
    return BreakdownTable(rows=rows, worst_user=worst.user_id, worst_eer=worst.eer)


def write_breakdown_csv(table: BreakdownTable, path: str | Path) -> None:
    pd.DataFrame([r.model_dump() for r in table.rows], columns=list(BreakdownRow.model_fields)).to_csv(
        path, index=False, float_format="%.17g"
    )


# ─── Plots ────────────────────────────────────────────────────────────────────

def plot_boxplots(report: EvalReport, out_dir: str | Path) -> list[Path]:
    """One SVG per (protocol, enrolment); boxes of per-user EER per window, grouped by classifier."""
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "ppgauth"
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    groups: dict[tuple[str, int | None], dict[str, dict[int, list[float]]]] = defaultdict(
        lambda: defaultdict(lambda: defaultdict(list))
    )
    for c in report.cells:
        groups[(c.protocol, c.enrol)][c.classifier][c.window].append(c.eer)

    written = []
    for (protocol, enrol), by_classifier in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1] or 0)):
        windows = sorted({n for per_window in by_classifier.values() for n in per_window})
        classifiers = sorted(by_classifier)
        width = 0.8 / len(classifiers)
        fig, ax = plt.subplots(figsize=(7, 4))
        for k, clf in enumerate(classifiers):
            positions = [i + (k - (len(classifiers) - 1) / 2) * width for i in range(len(windows))]
            data = [by_classifier[clf].get(n, []) or [np.nan] for n in windows]
            box = ax.boxplot(data, positions=positions, widths=width * 0.9, patch_artist=True, manage_ticks=False)
            for patch in box["boxes"]:
                patch.set_facecolor(f"C{k}")
            ax.plot([], [], color=f"C{k}", label=clf, linewidth=6)
        ax.set_xticks(range(len(windows)), [str(n) for n in windows])
        ax.set_xlabel("aggregation window n")
        ax.set_ylabel("EER")
        title = protocol if enrol is None else f"{protocol}, enrolment {enrol}"
        ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        name = f"eer_{protocol}" + (f"_enrol{enrol}" if enrol is not None else "") + ".svg"
        path = out / name
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    logger.info("eval.plots_written", files=len(written), out=str(out))
    return written
