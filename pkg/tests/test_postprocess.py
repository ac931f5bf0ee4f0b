import pytest
from hypothesis import given
from hypothesis import strategies as st

from simplextrack.critical import CriticalIntersection, CriticalTrajectory
from simplextrack.postprocess import (
    TrajectoryFilterSpec,
    filter_trajectories,
    simplify,
    slice_trajectories,
    smooth_types,
)


def make_traj(times, types=None, scalars=None, loop=False, tid=0):
    types = types or ["min"] * len(times)
    scalars = scalars or [None] * len(times)
    pts = [CriticalIntersection(i, None, (float(i), float(t)), (1.0,), ty, s)
           for i, (t, ty, s) in enumerate(zip(times, types, scalars))]
    return CriticalTrajectory(tid, None, pts, loop)


def test_filter_duration_loops_persistence_types():
    short = make_traj([0.2, 0.8], tid=0)
    long = make_traj([0, 1, 2, 3], scalars=[0.0, 0.1, 0.3, 0.2], tid=1)
    loop = make_traj([0, 1, 2, 3], loop=True, tid=2)
    saddle = make_traj([0, 1, 2], types=["saddle-scalar"] * 3, tid=3)
    trajs = [short, long, loop, saddle]
    assert short.duration == 0 and long.duration == 4
    ids = [t.id for t in filter_trajectories(trajs, TrajectoryFilterSpec(min_duration=3))]
    assert ids == [1, 2, 3]
    ids = [t.id for t in filter_trajectories(trajs, TrajectoryFilterSpec(drop_loops=True))]
    assert ids == [0, 1, 3]
    spec = TrajectoryFilterSpec(min_persistence=0.5)
    assert long not in filter_trajectories(trajs, spec)
    assert loop in filter_trajectories(trajs, spec)  # no scalars: not judged
    spec = TrajectoryFilterSpec(types={"min"})
    assert saddle not in filter_trajectories(trajs, spec)


def test_filter_validation():
    with pytest.raises(ValueError):
        TrajectoryFilterSpec(min_duration=-1)
    with pytest.raises(ValueError):
        TrajectoryFilterSpec(min_persistence=-0.1)


def test_simplify_absorbs_short_run():
    types = ["min"] * 5 + ["saddle-scalar"] + ["min"] * 5
    traj = make_traj(list(range(11)), types)
    assert set(simplify(traj, 3).types) == {"min"}
    assert simplify(traj, 1).types == types  # span 2 survives min_span 1


def test_simplify_keeps_end_runs_and_coordinates():
    types = ["max"] + ["min"] * 6
    traj = make_traj(list(range(7)), types)
    out = simplify(traj, 5)
    assert out.types == types
    assert [p.x for p in out.points] == [p.x for p in traj.points]


@given(st.lists(st.sampled_from(["min", "max", "saddle-scalar"]), min_size=1, max_size=25),
       st.floats(0, 10))
def test_simplify_properties(types, span):
    traj = make_traj(list(range(len(types))), types)
    out = simplify(traj, span)
    assert len(out.types) == len(types)
    assert out.types[0] == types[0] and out.types[-1] == types[-1]
    assert set(out.types) <= set(types)
    # idempotent
    assert simplify(out, span).types == out.types


def test_smooth_isolated_flip():
    traj = make_traj(list(range(7)), ["min", "min", "min", "max", "min", "min", "min"])
    assert set(smooth_types(traj).types) == {"min"}


def test_smooth_tie_nearest():
    types = ["max", "min", "saddle-scalar", "min", "max"]
    # window of point 2: max, min | min, max -> tie, nearest is min
    assert smooth_types(make_traj(list(range(5)), types)).types[2] == "min"


def test_smooth_leaves_runs_alone():
    types = ["min", "min", "max", "max", "min"]
    assert smooth_types(make_traj(list(range(5)), types)).types == types


def test_slice_trajectories():
    a = make_traj([0, 1, 2], tid=0)
    b = make_traj([1.5], tid=1)
    out = slice_trajectories([a, b], 1.5)
    assert [i for i, _ in out] == [0, 1]
    assert out[0][1] == pytest.approx([1.5])
