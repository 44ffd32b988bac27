"""Run metrics and aggregation over seeds."""

from __future__ import annotations

import math

import numpy as np

from .runner import STAGES


def timing_stats(samples):
    """Mean/std/min/max of a list of durations in µs (``None`` when empty)."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        return None
    return {"mean": float(x.mean()), "std": float(x.std()), "min": float(x.min()),
            "max": float(x.max()), "count": int(x.size)}


def metrics(report):
    """Deterministic summary of a run plus (separately) its timing stats.

    Returns ``(summary, timing)``. ``summary`` depends only on the simulated
    outcome; wall-clock timings vary between runs and live in ``timing``.
    """
    at_goal = sum(r is not None for r in report.reached)
    makespan = max(report.reached) if at_goal == report.n_robots and report.n_robots else None
    summary = {
        "scenario": report.scenario,
        "mode": report.mode,
        "seed": int(report.seed),
        "robots": int(report.n_robots),
        "success": bool(report.success),
        "success_fraction": at_goal / report.n_robots if report.n_robots else 1.0,
        "collisions": len(report.collisions),
        "deadlocks": len(report.deadlocks),
        "planner_errors": len(report.planner_errors),
        "min_separation": None if math.isinf(report.min_separation) else float(report.min_separation),
        "makespan": None if makespan is None else round(float(makespan), 6),
        "termination": report.termination,
        "final_time": round(float(report.final_time), 6),
        "replans": int(report.replans),
        "duration_jumps": int(report.duration_jumps),
    }
    timing = {k: timing_stats(report.timings.get(k, [])) for k in STAGES}
    return summary, timing


def aggregate(summaries, timings=None):
    """One row over many runs: success rate, collision/deadlock totals, timing."""
    n = len(summaries)
    if n == 0:
        raise ValueError("nothing to aggregate")
    row = {
        "runs": n,
        "success_rate": sum(s["success"] for s in summaries) / n,
        "mean_success_fraction": float(np.mean([s["success_fraction"] for s in summaries])),
        "collisions": int(sum(s["collisions"] for s in summaries)),
        "deadlocks": int(sum(s["deadlocks"] for s in summaries)),
        "min_separation": min(
            (s["min_separation"] for s in summaries if s["min_separation"] is not None),
            default=None,
        ),
    }
    spans = [s["makespan"] for s in summaries if s["makespan"] is not None]
    row["mean_makespan"] = float(np.mean(spans)) if spans else None
    if timings is not None:
        row["timing"] = {}
        for k in STAGES:
            parts = [t[k] for t in timings if t.get(k)]
            if not parts:
                row["timing"][k] = None
                continue
            count = sum(p["count"] for p in parts)
            mean = sum(p["mean"] * p["count"] for p in parts) / count
            second = sum((p["std"] ** 2 + p["mean"] ** 2) * p["count"] for p in parts) / count
            row["timing"][k] = {
                "mean": mean, "std": math.sqrt(max(second - mean * mean, 0.0)),
                "min": min(p["min"] for p in parts), "max": max(p["max"] for p in parts),
                "count": count,
            }
    return row
