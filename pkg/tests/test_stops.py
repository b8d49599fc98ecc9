import datetime

import numpy as np
import pytest

from cellvec import geo
from cellvec.ingest import RawTrajectory
from cellvec.stops import StopDetector, collapse_to_cells, trajectory_cell_sequence
from conftest import wp

GRID = geo.GridSpec(30.0)


def traj(points):
    return RawTrajectory("v1", datetime.date(2024, 1, 1), list(points))


def default_detector():
    return StopDetector(min_duration=300.0, radius=50.0, max_noise_run=2)


class TestDetectStops:
    def test_pure_dwell(self):
        # 12 points at one coordinate spanning 360 s
        times = list(range(0, 301, 30)) + [360]
        stops = default_detector().detect(traj([wp(t) for t in times]))
        assert len(stops) == 1
        assert stops[0].duration == 360
        assert stops[0].n_points == 12

    def test_constant_motion_yields_nothing(self):
        # 100 m advance every 30 s exceeds the 50 m radius
        points = [wp(30 * i, east=100.0 * i) for i in range(40)]
        assert default_detector().detect(traj(points)) == []

    def test_noisy_dwell_survives_two_isolated_spikes(self):
        # 8 min dwell with two isolated 500 m GPS spikes
        points = [wp(30 * i) for i in range(17)]
        points[5] = wp(150, east=500.0)
        points[11] = wp(330, north=500.0)
        stops = default_detector().detect(traj(points))
        assert len(stops) == 1
        assert stops[0].duration == 480
        assert stops[0].n_points == 15  # spikes excluded from the cluster
        assert abs(stops[0].lon - wp(0).lon) < 1e-9
        assert abs(stops[0].lat - wp(0).lat) < 1e-9

    def test_noise_run_within_budget_never_changes_stop_count(self):
        base = [wp(30 * i) for i in range(20)]
        rng = np.random.default_rng(4)
        for run_len in (1, 2):
            for _ in range(20):
                at = int(rng.integers(2, 16))
                noisy = base[:at] + [
                    wp(base[at - 1].t + 1 + j, east=600.0 + 100 * j) for j in range(run_len)
                ] + base[at:]
                stops = default_detector().detect(traj(noisy))
                assert len(stops) == 1

    def test_short_dwell_not_emitted(self):
        points = [wp(30 * i) for i in range(9)]  # 240 s < 300 s
        assert default_detector().detect(traj(points)) == []

    def test_two_dwells_separated_by_move(self):
        a = [wp(30 * i) for i in range(12)]
        b = [wp(600 + 30 * i, east=400.0) for i in range(12)]
        stops = default_detector().detect(traj(a + b))
        assert len(stops) == 2
        # second cluster keeps its full point count after the reseed replay
        assert stops[1].n_points == 12

    def test_time_gap_closes_cluster(self):
        # 4 min of dwell, a 15 min gap, then 4 more minutes: the gap rule
        # (> 2 * min_duration) splits them and neither half reaches 300 s
        a = [wp(30 * i) for i in range(9)]
        b = [wp(1500 + 30 * i) for i in range(9)]
        assert default_detector().detect(traj(a + b)) == []

    def test_stops_disjoint_and_sorted(self):
        rng = np.random.default_rng(8)
        points = []
        t = 0
        for block in range(6):
            east = 300.0 * block
            for _ in range(rng.integers(5, 15)):
                points.append(wp(t, east=east + rng.normal(0, 5.0)))
                t += 30
        stops = default_detector().detect(traj(points))
        for s in stops:
            assert s.duration >= 300
        for prev, cur in zip(stops, stops[1:]):
            assert prev.t_end < cur.t_start

    def test_param_validation(self):
        with pytest.raises(ValueError):
            StopDetector(min_duration=-1).detect(traj([wp(0)]))

    def test_transform_maps_over_trajectories(self):
        trajectories = [traj([wp(30 * i) for i in range(12)]) for _ in range(3)]
        detector = default_detector().fit(trajectories)
        out = detector.transform(trajectories)
        assert [len(stops) for stops in out] == [1, 1, 1]

    def test_sklearn_params_round_trip(self):
        detector = StopDetector(min_duration=120.0, radius=75.0)
        params = detector.get_params()
        assert params["min_duration"] == 120.0
        clone = StopDetector(**params)
        assert clone.get_params() == params


class TestCellSequences:
    def test_consecutive_duplicates_collapse(self):
        d = default_detector()
        cells = []
        t = 0
        for east in (0.0, 0.0, 200.0, 0.0):  # c1, c1, c2, c1
            stops = d.detect(traj([wp(t + 30 * i, east=east) for i in range(12)]))
            cells.extend(stops)
            t += 1000
        codes = collapse_to_cells(cells, GRID)
        assert len(codes) == 3
        assert codes[0] == codes[2] != codes[1]

    def test_empty_stops(self):
        assert collapse_to_cells([], GRID) == []

    def test_single_stop(self):
        (stop,) = default_detector().detect(traj([wp(30 * i) for i in range(12)]))
        assert len(collapse_to_cells([stop], GRID)) == 1

    def test_no_adjacent_duplicates_in_random_walks(self):
        rng = np.random.default_rng(12)
        d = default_detector()
        for _ in range(20):
            points = []
            t = 0
            east = 0.0
            for _ in range(rng.integers(2, 8)):
                east += float(rng.uniform(-40, 220))
                for _ in range(rng.integers(8, 14)):
                    points.append(wp(t, east=east))
                    t += 30
            seq = trajectory_cell_sequence(traj(points), d, GRID)
            if seq is not None:
                assert all(a != b for a, b in zip(seq.cells, seq.cells[1:]))
