"""Run outputs: metrics.csv, summary.json, qtable.csv, events.csv, compare.csv.

Numbers are written with Python's repr so a read-back reproduces the exact
values, and every writer is deterministic given the same run (no timestamps,
no environment echo), so identical configs produce byte-identical files.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import SimConfig
from .engine import EpisodeMetrics

_METRIC_FIELDS = [f.name for f in dataclasses.fields(EpisodeMetrics)]
_METRIC_TYPES = {f.name: (int if f.type == "int" else float)
                 for f in dataclasses.fields(EpisodeMetrics)}

EVENT_FIELDS = ("slot", "kind", "node", "peer", "value")
COMPARE_FIELDS = ("policy", "seed", "l3_delivered", "final_residual_j",
                  "cumulative_reward", "dropped", "decisions")


def _cell(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def metrics_to_csv(metrics: Sequence[EpisodeMetrics], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_METRIC_FIELDS)
        for m in metrics:
            w.writerow(_cell(getattr(m, name)) for name in _METRIC_FIELDS)


def metrics_from_csv(path: str | Path) -> list[EpisodeMetrics]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != _METRIC_FIELDS:
            raise ValueError(f"{path}: unexpected metrics header {header}")
        return [EpisodeMetrics(**{name: _METRIC_TYPES[name](cell)
                                  for name, cell in zip(header, row)})
                for row in r]


def summarize(metrics: Sequence[EpisodeMetrics], cfg: SimConfig,
              label: str = "run") -> dict:
    out = {"label": label, "config": cfg.to_dict(), "episodes": len(metrics)}
    if not metrics:
        return out
    last = metrics[-1]
    decisions = sum(m.decisions for m in metrics)
    transmissions = last.pac_tx_l2_total
    out.update({
        "decisions": decisions,
        "n_h_zero": sum(m.n_h_zero for m in metrics),
        "transmissions": transmissions,
        "l3_delivered": last.l3_delivered_cum,
        "ack_l2_total": last.ack_l2_total,
        "ack_l3_total": last.ack_l3_total,
        "pac_tx_l3_total": last.pac_tx_l3_total,
        "dropped": last.dropped_cum,
        "queued_final": last.queued_total,
        # every admitted packet is eventually delivered, dropped, or queued
        "packets_generated": last.l3_delivered_cum + last.dropped_cum + last.queued_total,
        "final_residual_j": last.total_residual_j,
        "cumulative_reward": last.cumulative_reward,
        "mean_reward_per_decision": last.cumulative_reward / max(1, decisions),
        "mean_p_coll": sum(m.p_coll_sum for m in metrics) / max(1, transmissions),
        "mean_p_cov": sum(m.p_cov_sum for m in metrics) / max(1, transmissions),
    })
    return out


def summary_to_json(summary: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def qtable_to_csv(q: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("node", "action", "q"))
        for node, action in sorted(q):
            w.writerow((node, action, _cell(q[(node, action)])))


def qtable_from_csv(path: str | Path) -> dict:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["node", "action", "q"]:
            raise ValueError(f"{path}: unexpected qtable header {header}")
        return {(int(n), int(a)): float(v) for n, a, v in r}


def events_to_csv(events: Iterable[tuple], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EVENT_FIELDS)
        for slot, kind, node, peer, value in events:
            w.writerow((slot, kind, node, peer, _cell(float(value))))


def compare_to_csv(rows: Sequence[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COMPARE_FIELDS)
        for row in rows:
            w.writerow(_cell(row[k]) for k in COMPARE_FIELDS)


def convergence_episode(rewards: Sequence[float], window: int = 100,
                        rel_tol: float = 0.05) -> int:
    """First rolling-window start after which every window mean stays within
    rel_tol of the final window mean. 0 means converged from the start."""
    r = np.asarray(rewards, dtype=float)
    if r.size == 0:
        return 0
    w = max(1, min(window, r.size))
    means = np.convolve(r, np.ones(w) / w, mode="valid")
    final = means[-1]
    band = rel_tol * max(abs(final), 1e-12)
    bad = np.nonzero(np.abs(means - final) > band)[0]
    return int(bad[-1] + 1) if bad.size else 0
