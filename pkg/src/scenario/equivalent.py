import numpy as np
from scipy.spatial import Delaunay

from errors import ScenarioError
from scenario.base import Scenario

_HULL_TOL = 1.0e-9


def inside_hull(points: np.ndarray, p: np.ndarray) -> bool:
    """Whether p lies in the convex hull of the 2-D points (boundary included)."""
    points = np.asarray(points, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    scale = max(float(np.ptp(points, axis=0).max()), 1.0)
    offsets = points - points[0]
    if np.linalg.matrix_rank(offsets, tol=_HULL_TOL * scale) < 2:
        # collinear loops: the hull is a segment
        direction = offsets[np.argmax(np.linalg.norm(offsets, axis=1))]
        length = np.linalg.norm(direction)
        if length == 0.0:
            return bool(np.linalg.norm(p - points[0]) <= _HULL_TOL * scale)
        along = offsets @ direction / length
        q = (p - points[0]) @ direction / length
        off_line = np.linalg.norm(p - points[0] - q * direction / length)
        return bool(off_line <= _HULL_TOL * scale and along.min() - _HULL_TOL * scale <= q <= along.max() + _HULL_TOL * scale)
    return bool(Delaunay(points).find_simplex(p, tol=_HULL_TOL) >= 0)


def fit_loop_currents(positions: np.ndarray, centroid: np.ndarray, current: float) -> np.ndarray:
    """
    Minimum-norm loop currents with sum I_i = current and sum I_i (r_i - r_p) = 0.

    positions are (N, 2) loop (r, z) pairs, centroid the plasma (r_p, z_p).
    """
    positions = np.asarray(positions, dtype=np.float64)
    centroid = np.asarray(centroid, dtype=np.float64)
    if not inside_hull(positions, centroid):
        raise ScenarioError(f"plasma centroid {tuple(centroid)} lies outside the equivalent-loop crown")
    C = np.vstack([np.ones(len(positions)), (positions - centroid).T])
    rhs = np.array([current, 0.0, 0.0])
    solution, *_ = np.linalg.lstsq(C, rhs, rcond=None)
    return solution


def crown_positions(scenario: Scenario) -> np.ndarray:
    return np.array([(loop.radius, loop.center[2]) for loop in scenario.equivalent_loops()]).reshape(-1, 2)


def fit_equivalent_currents(scenario: Scenario, t: float) -> np.ndarray:
    """Equivalent-loop currents (A) reproducing I_p(t) at r_p(t)."""
    positions = crown_positions(scenario)
    if len(positions) == 0:
        return np.zeros(0)
    r, z, current = scenario.plasma_state(t)
    return fit_loop_currents(positions, np.array([r[0], z[0]]), float(current[0]))


def check_crown(scenario: Scenario) -> None:
    """Reject a trajectory that leaves the crown, naming the first offending sample."""
    positions = crown_positions(scenario)
    for sample in scenario.trajectory:
        if not inside_hull(positions, np.array([sample.r, sample.z])):
            raise ScenarioError(
                f"scenario {scenario.name}: centroid ({sample.r}, {sample.z}) leaves the crown at t={sample.t}"
            )


def sample_currents(scenario: Scenario, times: np.ndarray) -> np.ndarray:
    """
    Currents (n_times, N_coils) in all_coils() order: static coils held at
    their table values, equivalent loops fitted at every time.
    """
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    static = np.broadcast_to(scenario.static_vector, (len(times), len(scenario.coils)))
    positions = crown_positions(scenario)
    dynamic = np.zeros((len(times), len(positions)))
    if len(positions):
        r, z, current = scenario.plasma_state(times)
        for k in range(len(times)):
            dynamic[k] = fit_loop_currents(positions, np.array([r[k], z[k]]), float(current[k]))
    return np.hstack([static, dynamic])


def training_bounds(scenario: Scenario, margin: float = 1.25, n_samples: int = 200) -> np.ndarray:
    """Per equivalent-loop current bound for randomized training traces."""
    n_static = len(scenario.coils)
    if not scenario.trajectory:
        return np.zeros(len(crown_positions(scenario)))
    times = np.linspace(scenario.trajectory[0].t, scenario.trajectory[-1].t, n_samples)
    dynamic = sample_currents(scenario, times)[:, n_static:]
    return margin * np.max(np.abs(dynamic), axis=0)
