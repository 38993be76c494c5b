"""Result aggregation and reward-curve figures from harness CSVs.

Post-fault episodes are grouped by (variant, episode index) and averaged
across seeds; each pair of variants present gets one comparison figure
with a mean line and a +/-1 sample-std band.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from itertools import combinations
from math import sqrt

from .harness import CSV_HEADER

_COLUMNS = CSV_HEADER.split(",")


@dataclass
class CurveSummary:
    variant: str
    episode_index: int
    mean_reward: float
    reward_std: float
    n_seeds: int
    mean_smooth: float = 0.0


def _check_header(cols: list) -> None:
    if cols == _COLUMNS:
        return
    for i, want in enumerate(_COLUMNS):
        got = cols[i] if i < len(cols) else "<missing>"
        if got != want:
            raise ValueError(f"column {i}: expected {want!r}, found {got!r}")
    raise ValueError(f"unexpected extra columns {cols[len(_COLUMNS):]}")


def summarize(csv_path: str, window: int = 10) -> list:
    """Per-(variant, episode) mean and sample std of post-fault rewards
    across seeds, plus a trailing moving average of the means."""
    if window < 1:
        raise ValueError("window must be >= 1")
    groups: dict = {}
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError("empty CSV")
        _check_header(header)
        for row in reader:
            if len(row) != len(_COLUMNS):
                raise ValueError(f"row has {len(row)} fields, expected {len(_COLUMNS)}")
            if row[3] != "post_fault":
                continue
            key = (row[1], int(row[4]))
            groups.setdefault(key, []).append(float(row[6]))

    out = []
    for (variant, episode), vals in sorted(groups.items()):
        n = len(vals)
        mean = sum(vals) / n
        std = sqrt(sum((v - mean) ** 2 for v in vals) / (n - 1)) if n > 1 else 0.0
        out.append(CurveSummary(variant, episode, mean, std, n))

    by_variant: dict = {}
    for s in out:
        by_variant.setdefault(s.variant, []).append(s)
    for series in by_variant.values():
        for i, s in enumerate(series):
            lo = max(0, i - window + 1)
            chunk = series[lo : i + 1]
            s.mean_smooth = sum(c.mean_reward for c in chunk) / len(chunk)
    return out


def render(summaries: list, out_dir: str, scenario: str = "results") -> list:
    """Comparison figures plus a sidecar CSV of the plotted numbers."""
    if not summaries:
        raise ValueError("nothing to plot: no post-fault records")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(out_dir, exist_ok=True)
    by_variant: dict = {}
    for s in summaries:
        by_variant.setdefault(s.variant, []).append(s)
    written = []

    side_path = os.path.join(out_dir, f"{scenario}_summary.csv")
    with open(side_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("variant,episode_index,mean_reward,reward_std,n_seeds,mean_smooth\n")
        for s in summaries:
            fh.write(
                f"{s.variant},{s.episode_index},{s.mean_reward:.6f},"
                f"{s.reward_std:.6f},{s.n_seeds},{s.mean_smooth:.6f}\n"
            )
    written.append(side_path)

    for a, b in combinations(sorted(by_variant), 2):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for variant in (a, b):
            series = by_variant[variant]
            x = [s.episode_index for s in series]
            y = [s.mean_smooth for s in series]
            lo = [s.mean_smooth - s.reward_std for s in series]
            hi = [s.mean_smooth + s.reward_std for s in series]
            ax.plot(x, y, label=variant)
            ax.fill_between(x, lo, hi, alpha=0.2)
        ax.set_xlabel("episode")
        ax.set_ylabel("episodic reward")
        ax.legend()
        fig.tight_layout()
        path = os.path.join(out_dir, f"{scenario}_{a}_vs_{b}.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written
