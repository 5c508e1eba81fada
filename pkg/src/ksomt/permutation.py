"""Seeded permutation replicas of the pairwise vector statistic.

Each replica draws its own permutation from a Philox counter-based
generator keyed by (master_seed, replica_index), so replicas are
reproducible independently of evaluation order or parallelism.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import PooledDataset
from .errors import DataValidationError, KsomtError
from .stats import PairwiseEvaluator, StatConfig, StatVector


@dataclass(frozen=True)
class PermutationPlan:
    B: int
    master_seed: int = 0

    def __post_init__(self):
        if self.B < 1:
            raise DataValidationError("replica count B must be >= 1")
        if not 0 <= int(self.master_seed) < 2**64:
            raise DataValidationError("master seed must fit in 64 bits")


def replica_permutation(N: int, replica_index: int, plan: PermutationPlan) -> np.ndarray:
    """Uniform permutation of range(N) for one replica, deterministically."""
    if not 1 <= replica_index <= plan.B:
        raise DataValidationError(
            f"replica index {replica_index} outside 1..{plan.B}"
        )
    bits = np.random.Philox(key=[int(plan.master_seed), int(replica_index)])
    return np.random.Generator(bits).permutation(N)


def permute_dataset(
    dataset: PooledDataset, replica_index: int, plan: PermutationPlan
) -> PooledDataset:
    """Random relabeling of the pooled curves preserving group sizes."""
    order = replica_permutation(dataset.N, replica_index, plan)
    return dataset.regroup(order)


@dataclass(frozen=True)
class ReplicaSet:
    """Original statistic T_0 plus B permutation replicas."""

    t0: StatVector
    replicas: np.ndarray  # shape (B, d)
    plan: PermutationPlan

    def __post_init__(self):
        r = np.asarray(self.replicas, dtype=float)
        object.__setattr__(self, "replicas", r)
        if r.shape != (self.plan.B, self.t0.d):
            raise DataValidationError("replica array shape disagrees with plan")

    @property
    def d(self) -> int:
        return self.t0.d

    @property
    def pairs(self) -> tuple:
        return self.t0.pairs

    def cloud(self) -> np.ndarray:
        """All B+1 vectors with T_0 first."""
        return np.vstack([self.t0.values, self.replicas])


def replicate(
    dataset: PooledDataset, config: StatConfig, plan: PermutationPlan
) -> ReplicaSet:
    """T_0 from the original grouping, T_b from replica b's permutation."""
    evaluator = PairwiseEvaluator(dataset, config)
    t0 = evaluator.evaluate_identity()
    replicas = np.empty((plan.B, t0.d))
    for b in range(1, plan.B + 1):
        order = replica_permutation(dataset.N, b, plan)
        try:
            replicas[b - 1] = evaluator.evaluate(order).values
        except KsomtError as exc:
            raise type(exc)(f"replica {b}: {exc}")
    return ReplicaSet(t0, replicas, plan)
