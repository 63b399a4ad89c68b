"""Trajectory pools to operator-learning datasets.

An input function u is the fault-on window [0, t_cl] of a trajectory sampled
at m sensor times; a target is the post-fault value at a query time y in
(t_cl, T]. Training draws Q random queries per trajectory; testing evaluates
on a fixed 500-point mesh over the post-fault interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gridsim import Trajectory

__all__ = [
    "SplitSpec",
    "OperatorSample",
    "sensor_times",
    "query_mesh",
    "trajectory_rng",
    "build_train",
    "build_test",
    "split_pools",
    "add_input_noise",
]

_KIND_CODE = {"N1": 1, "N2": 2}


@dataclass(frozen=True)
class SplitSpec:
    m: int = 200  # branch sensors on [0, t_cl]
    Q: int = 10  # training queries per trajectory
    train_frac: float = 0.7
    t_cl: float = 2.0
    T: float = 9.0
    n_mesh: int = 500  # test query mesh size

    def __post_init__(self):
        if self.m < 2 or self.Q < 1 or not (0.0 < self.train_frac < 1.0):
            raise ValueError(f"invalid split spec {self}")
        if not (0.0 < self.t_cl < self.T):
            raise ValueError(f"need 0 < t_cl < T, got {self.t_cl}, {self.T}")


@dataclass(frozen=True)
class OperatorSample:
    traj_id: int
    u_disc: np.ndarray  # (m,)
    y: float
    target: float


def sensor_times(spec: SplitSpec) -> np.ndarray:
    """x_i = i * t_cl / m for i=1..m; lands exactly on a 100 Hz grid at defaults."""
    return np.arange(1, spec.m + 1) * (spec.t_cl / spec.m)


def query_mesh(spec: SplitSpec) -> np.ndarray:
    """n_mesh equispaced points in (t_cl, T], last point exactly T."""
    j = np.arange(1, spec.n_mesh + 1)
    return spec.t_cl + (spec.T - spec.t_cl) * j / spec.n_mesh


def _check_coverage(tr: Trajectory, spec: SplitSpec):
    if tr.times[-1] < spec.T - 1e-9:
        raise ValueError(
            f"trajectory {tr.traj_id} ends at {tr.times[-1]:.3f}s, needs {spec.T}s"
        )


def _u_disc(tr: Trajectory, spec: SplitSpec) -> np.ndarray:
    return np.interp(sensor_times(spec), tr.times, tr.values)


def trajectory_rng(seed: int, tr: Trajectory) -> np.random.Generator:
    """Stream keyed by (seed, pool kind, trajectory id): fully reproducible."""
    return np.random.default_rng([seed, _KIND_CODE[tr.scenario.kind], tr.traj_id])


def build_train(pool, spec: SplitSpec, seed: int) -> list[OperatorSample]:
    """Q uniform queries per trajectory, targets linearly interpolated.

    Queries come from a per-trajectory stream, so the first Q' draws of a
    larger Q are a superset run's prefix; the assembled list is shuffled with
    the top-level seed.
    """
    samples = []
    for tr in pool:
        _check_coverage(tr, spec)
        u = _u_disc(tr, spec)
        rng = trajectory_rng(seed, tr)
        ys = rng.uniform(spec.t_cl, spec.T, size=spec.Q)
        targets = np.interp(ys, tr.times, tr.values)
        for y, g in zip(ys, targets):
            samples.append(OperatorSample(tr.traj_id, u, float(y), float(g)))
    order = np.random.default_rng([seed, 0]).permutation(len(samples))
    return [samples[i] for i in order]


def build_test(pool, spec: SplitSpec):
    """(u_disc, Y_mesh, targets) per trajectory on the fixed evaluation mesh."""
    mesh = query_mesh(spec)
    out = []
    for tr in pool:
        _check_coverage(tr, spec)
        out.append((_u_disc(tr, spec), mesh, np.interp(mesh, tr.times, tr.values)))
    return out


def split_pools(n1_pool, n2_pool, train_frac: float, seed: int):
    """Concatenate, shuffle, split at floor(frac * N). Both sides non-empty."""
    if not n1_pool or not n2_pool:
        raise ValueError("both pools must be non-empty")
    merged = list(n1_pool) + list(n2_pool)
    order = np.random.default_rng([seed, 1]).permutation(len(merged))
    cut = int(np.floor(train_frac * len(merged)))
    if cut == 0 or cut == len(merged):
        raise ValueError(f"train_frac {train_frac} leaves an empty split for N={len(merged)}")
    train = [merged[i] for i in order[:cut]]
    test = [merged[i] for i in order[cut:]]
    return train, test


def add_input_noise(u_disc: np.ndarray, sigma: float, seed) -> np.ndarray:
    """i.i.d. Gaussian measurement noise per sensor."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0.0:
        return np.asarray(u_disc, dtype=float).copy()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = np.asarray(u_disc, dtype=float)
    return u + rng.normal(0.0, sigma, size=u.shape)
