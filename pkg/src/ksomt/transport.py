"""Optimal-transport combination of the replica cloud into a single p-value.

The B+1 statistic vectors are matched, by an exact linear assignment under
squared Euclidean cost, to a deterministic grid in the positive-orthant
unit ball: n_R radii i/(n_R+1) times n_S Halton-generated directions. The
norm of the image of T_0 yields the p-values and the per-pair contribution
diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist
from scipy.special import betainc

from .errors import ConfigError, DataValidationError, KsomtError
from .permutation import ReplicaSet


def _primes(count: int) -> list:
    out, cand = [], 2
    while len(out) < count:
        if all(cand % p for p in out):
            out.append(cand)
        cand += 1
    return out


def radical_inverse(index: int, base: int) -> float:
    """Reflect the base-b digits of index about the radix point.

    Computed as an exact integer ratio, so the result is the correctly
    rounded double (no accumulation error).
    """
    rev, denom = 0, 1
    while index:
        rev = rev * base + index % base
        denom *= base
        index //= base
    return rev / denom


def halton(count: int, dim: int) -> np.ndarray:
    """First `count` Halton points in [0,1]^dim, index starting at 1."""
    if count < 1 or dim < 1:
        raise DataValidationError("halton needs count >= 1 and dim >= 1")
    bases = _primes(dim)
    return np.array(
        [[radical_inverse(i, b) for b in bases] for i in range(1, count + 1)]
    )


def _cos_quarter(u: float) -> float:
    # exact at the endpoints so grid corners land on the axes
    if u == 0.0:
        return 1.0
    if u == 1.0:
        return 0.0
    return math.cos(math.pi * u / 2.0)


def _sin_quarter(u: float) -> float:
    if u == 0.0:
        return 0.0
    if u == 1.0:
        return 1.0
    return math.sin(math.pi * u / 2.0)


def _invert_sin_power_cdf(x: float, power: int) -> float:
    """theta in [0, pi/2] with CDF proportional to sin^power, by bisection.

    The normalized CDF is the regularized incomplete beta
    I(sin^2 theta; (power+1)/2, 1/2).
    """
    a = (power + 1) / 2.0
    lo, hi = 0.0, math.pi / 2.0
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if hi - lo < 1e-12:
            break
        if betainc(a, 0.5, math.sin(mid) ** 2) < x:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def _tau_general(x: np.ndarray, d: int) -> np.ndarray:
    """Inverse-CDF spherical construction for the positive orthant sphere.

    Angle k (k = 1..d-2) inverts the marginal CDF proportional to
    sin^(d-1-k) on [0, pi/2]; the final angle is pi*x/2. Reduces to the
    d = 3 closed form.
    """
    s = np.empty(d)
    prefix = 1.0
    for k in range(d - 2):
        theta = _invert_sin_power_cdf(float(x[k]), d - 2 - k)
        s[k] = prefix * math.cos(theta)
        prefix *= math.sin(theta)
    s[d - 2] = prefix * _cos_quarter(float(x[d - 2]))
    s[d - 1] = prefix * _sin_quarter(float(x[d - 2]))
    return s


def tau_map(x, d: int) -> np.ndarray:
    """Map a point of [0,1]^(d-1) to a unit vector in the positive orthant.

    Uniform inputs map to uniform directions. Closed forms for d = 2, 3;
    the general inverse-CDF construction otherwise.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if d < 2 or x.shape != (d - 1,):
        raise DataValidationError(f"tau_map needs a point of [0,1]^{d - 1}")
    if np.any((x < 0) | (x > 1)):
        raise DataValidationError("tau_map coordinates must lie in [0, 1]")
    if d == 2:
        return np.array([_cos_quarter(x[0]), _sin_quarter(x[0])])
    if d == 3:
        flank = math.sqrt(max(2.0 * x[0] - x[0] ** 2, 0.0))
        return np.array(
            [1.0 - x[0], flank * _cos_quarter(x[1]), flank * _sin_quarter(x[1])]
        )
    return _tau_general(x, d)


@dataclass(frozen=True)
class GridSpec:
    n_R: int
    n_S: int
    d: int

    def __post_init__(self):
        if self.n_R < 1 or self.n_S < 1:
            raise ConfigError("n_R and n_S must be positive")
        if self.d < 2:
            raise ConfigError("grid dimension must be >= 2 (d = 1 is bypassed)")

    @property
    def size(self) -> int:
        return self.n_R * self.n_S


@dataclass(frozen=True)
class GridSet:
    """The n_R * n_S reference points with their radius/direction indices."""

    points: np.ndarray  # (n_R * n_S, d)
    radius_index: np.ndarray  # 1..n_R per point
    direction_index: np.ndarray  # 1..n_S per point
    spec: GridSpec

    @property
    def radii(self) -> np.ndarray:
        return self.radius_index / (self.spec.n_R + 1)


def build_grid(spec: GridSpec) -> GridSet:
    """Radius-direction product grid with Halton-generated directions."""
    base = halton(spec.n_S, spec.d - 1)
    directions = np.array([tau_map(row, spec.d) for row in base])
    if len({tuple(s) for s in directions}) != spec.n_S:
        raise KsomtError("duplicate grid directions; pathological inputs")
    radii = np.arange(1, spec.n_R + 1) / (spec.n_R + 1)
    points = (radii[:, None, None] * directions[None, :, :]).reshape(-1, spec.d)
    r_idx = np.repeat(np.arange(1, spec.n_R + 1), spec.n_S)
    s_idx = np.tile(np.arange(1, spec.n_S + 1), spec.n_R)
    return GridSet(points, r_idx, s_idx, spec)


def solve_assignment(cloud: np.ndarray, grid: GridSet) -> np.ndarray:
    """Exact minimum-cost bijection cloud -> grid under squared distance.

    Returns the grid index assigned to each cloud point.
    """
    cloud = np.asarray(cloud, dtype=float)
    if cloud.shape != grid.points.shape:
        raise DataValidationError(
            f"cloud shape {cloud.shape} does not match grid {grid.points.shape}"
        )
    if not np.all(np.isfinite(cloud)):
        raise DataValidationError("cloud contains non-finite coordinates")
    cost = cdist(cloud, grid.points, "sqeuclidean")
    rows, cols = linear_sum_assignment(cost)
    out = np.empty(len(cols), dtype=int)
    out[rows] = cols
    return out


@dataclass(frozen=True)
class OmtResult:
    assignment: np.ndarray  # grid index per cloud point, T_0 first
    image_of_t0: np.ndarray  # F*(T_0)
    radius_of_t0: int  # its radius index i0 in 1..n_R
    p_hat: float
    p_tilde: float
    nonconformity: float
    contributions: np.ndarray  # D_j^2, sums to 1


def evaluate(replicas: ReplicaSet, spec: GridSpec) -> OmtResult:
    """Full combiner: grid, assignment, p-values, contributions."""
    if spec.size != replicas.plan.B + 1:
        raise ConfigError(
            f"n_R*n_S = {spec.size} but B+1 = {replicas.plan.B + 1}; "
            "the factorization B+1 = n_R*n_S is required"
        )
    if spec.d != replicas.d:
        raise ConfigError(
            f"grid dimension {spec.d} does not match statistic dimension {replicas.d}"
        )
    grid = build_grid(spec)
    cloud = replicas.cloud()
    assignment = solve_assignment(cloud, grid)
    image = grid.points[assignment[0]]
    i0 = int(grid.radius_index[assignment[0]])
    # compare replica extremeness through exact radius indices, not floats
    replica_radii = grid.radius_index[assignment[1:]]
    p_hat = (1 + int(np.sum(replica_radii >= i0))) / (replicas.plan.B + 1)
    p_tilde = 1.0 - i0 / (spec.n_R + 1)
    nonconformity = (1.0 - p_tilde) ** 2
    sq = image**2
    contributions = sq / sq.sum()
    return OmtResult(
        assignment=assignment,
        image_of_t0=image,
        radius_of_t0=i0,
        p_hat=p_hat,
        p_tilde=p_tilde,
        nonconformity=nonconformity,
        contributions=contributions,
    )


def classical_p_value(replicas: ReplicaSet) -> float:
    """One-sided permutation p-value for a scalar statistic (d = 1 bypass)."""
    if replicas.d != 1:
        raise ConfigError("classical p-value applies only to d = 1")
    t0 = replicas.t0.values[0]
    count = int(np.sum(replicas.replicas[:, 0] >= t0))
    return (1 + count) / (replicas.plan.B + 1)


def dump_points(
    replicas: ReplicaSet, grid: GridSet, assignment: np.ndarray, directory
) -> list:
    """Write cloud.csv, grid.csv, and map.csv for external plotting."""
    import os

    os.makedirs(directory, exist_ok=True)
    cloud_path = os.path.join(directory, "cloud.csv")
    grid_path = os.path.join(directory, "grid.csv")
    map_path = os.path.join(directory, "map.csv")
    d = replicas.d
    header = ",".join(f"x{j + 1}" for j in range(d))
    np.savetxt(cloud_path, replicas.cloud(), delimiter=",", header=header, comments="")
    np.savetxt(grid_path, grid.points, delimiter=",", header=header, comments="")
    pairs = np.column_stack([np.arange(len(assignment)), assignment])
    np.savetxt(
        map_path,
        pairs,
        delimiter=",",
        header="cloud_index,grid_index",
        comments="",
        fmt="%d",
    )
    return [cloud_path, grid_path, map_path]
