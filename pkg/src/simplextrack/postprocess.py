"""Trajectory filtering, type simplification/smoothing and time slicing."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .slicing import slice_polyline


@dataclass(frozen=True)
class TrajectoryFilterSpec:
    """Thresholds a trajectory must meet to be kept.

    min_duration is counted in layers covered (see
    :attr:`CriticalTrajectory.duration`); min_persistence is the max - min
    scalar value along the trajectory and only applies in scalar mode.
    """

    min_duration: float = 0
    drop_loops: bool = False
    min_persistence: Optional[float] = None
    types: Optional[frozenset] = None

    def __post_init__(self):
        if self.min_duration < 0:
            raise ValueError("min_duration must be >= 0")
        if self.min_persistence is not None and self.min_persistence < 0:
            raise ValueError("min_persistence must be >= 0")
        if self.types is not None:
            object.__setattr__(self, "types", frozenset(self.types))

    def accepts(self, traj):
        if traj.duration < self.min_duration:
            return False
        if self.drop_loops and traj.loop:
            return False
        if self.min_persistence is not None:
            p = traj.persistence
            if p is not None and p < self.min_persistence:
                return False
        if self.types is not None and not set(traj.types) <= self.types:
            return False
        return True


def filter_trajectories(trajectories, spec):
    return [t for t in trajectories if spec.accepts(t)]


def _runs(types):
    """[(type, start, stop)] of maximal equal-type runs."""
    out = []
    for i, t in enumerate(types):
        if out and out[-1][0] == t:
            out[-1][2] = i + 1
        else:
            out.append([t, i, i + 1])
    return out


def simplify(traj, min_span):
    """Absorb type runs spanning less than ``min_span`` time into a neighbour.

    The shortest run goes first and joins the longer of its neighbouring
    runs (the earlier one on ties); runs at the chain ends are kept unless
    the whole chain is one type anyway. Coordinates are not touched.
    """
    if min_span <= 0 or len(traj.points) < 2:
        return traj
    types = list(traj.types)
    t = traj.times

    def span(r):
        a, b = r[1], r[2] - 1
        lo = t[a - 1] if a > 0 else t[a]
        hi = t[b + 1] if b + 1 < len(t) else t[b]
        return abs(hi - lo)

    while True:
        runs = _runs(types)
        inner = [(span(r), r[1], i) for i, r in enumerate(runs) if 0 < i < len(runs) - 1]
        inner = [c for c in inner if c[0] < min_span]
        if not inner:
            break
        _, _, i = min(inner)
        prev, nxt = runs[i - 1], runs[i + 1]
        target = prev if span(prev) >= span(nxt) else nxt
        for j in range(runs[i][1], runs[i][2]):
            types[j] = target[0]
    return traj.with_types(types)


def smooth_types(traj, half_window=2):
    """Majority vote for points whose type differs from both neighbours.

    Points are marked first and relabelled afterwards, so a relabel never
    feeds into another vote.
    """
    types = list(traj.types)
    m = len(types)
    if half_window <= 0 or m < 3:
        return traj
    marked = [i for i in range(1, m - 1) if types[i] != types[i - 1] and types[i] != types[i + 1]]
    if not marked:
        return traj
    new = list(types)
    for i in marked:
        window = types[max(0, i - half_window):i] + types[i + 1:i + 1 + half_window]
        counts = Counter(window).most_common()
        best = counts[0][1]
        # ties: the type closest to the point wins
        tied = {k for k, c in counts if c == best}
        for d in range(1, half_window + 1):
            hit = [types[j] for j in (i - d, i + d) if 0 <= j < m and types[j] in tied]
            if hit:
                new[i] = hit[0]
                break
    return traj.with_types(new)


def slice_trajectories(trajectories, t0, t_min=None):
    """Positions ``[(trajectory id, coords)]`` where trajectories meet ``t = t0``."""
    out = []
    for traj in trajectories:
        pts = np.array([p.x for p in traj.points], dtype=np.float64)
        if len(pts) == 1:
            if pts[0, -1] == t0:
                out.append((traj.id, pts[0, :-1]))
            continue
        for x in slice_polyline(pts, t0, loop=traj.loop, t_min=t_min):
            out.append((traj.id, x))
    return out
