"""Monte Carlo cross-check: ancestral sampling plus plug-in estimation.

Trajectories are drawn with a Philox counter-based generator (seeded through
numpy's SeedSequence), so identical (system, count, seed) always reproduces
the same sample set.  Estimates feed the empirical distribution through the
exact evaluators; standard errors come from a seeded multinomial bootstrap
over trajectories.  No bias correction is applied - acceptance bands are
statistical, never the exact-engine tolerance.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .engine import (
    JointTable,
    MESSAGE,
    causal_mutual_info,
    cross_term,
    directed_info,
    directed_info_causal,
    feedback_directed_info,
)
from .model import ValidatedSystem

DEFAULT_SAMPLE_BUDGET = 10**8
BOOTSTRAP_RESAMPLES = 200
_BOOTSTRAP_STREAM = 1  # derived-stream tag so the bootstrap never reuses sampling draws


class SampleBudgetError(RuntimeError):
    """Requested more trajectories than the sampling budget allows."""


QUANTITIES = {
    "directed_info": directed_info,
    "directed_info_causal": lambda j: directed_info_causal(j),
    "message_info": lambda j: causal_mutual_info(j, MESSAGE),
    "cross_term": lambda j: cross_term(j),
    "feedback_directed_info": lambda j: feedback_directed_info(j),
    "conservation_residual": lambda j: directed_info_causal(j)
    - (
        causal_mutual_info(j, MESSAGE)
        + cross_term(j)
        + feedback_directed_info(j)
    ),
}


@dataclass(frozen=True)
class SampleSet:
    """Occurrence counts of sampled trajectories, keyed by trajectory index."""

    system: ValidatedSystem
    count: int
    indices: np.ndarray
    counts: np.ndarray
    seed: int

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.int64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if indices.shape != counts.shape or indices.ndim != 1:
            raise ValueError("indices and counts must be matching 1-D arrays")
        if int(counts.sum()) != self.count:
            raise ValueError(f"counts sum to {int(counts.sum())}, expected {self.count}")
        if indices.size and (indices.min() < 0 or indices.max() >= self.system.trajectory_count):
            raise ValueError("trajectory index out of range")
        for name, arr in (("indices", indices), ("counts", counts)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def empirical(self) -> JointTable:
        """Plug-in joint table: each trajectory weighted by its relative frequency."""
        dense = np.zeros(self.system.trajectory_count)
        dense[self.indices] = self.counts / self.count
        return JointTable(system=self.system, array=dense.reshape(self.system.shape))


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float
    count: int

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be nonnegative")


def _generator(seed: int, stream: int | None = None) -> np.random.Generator:
    entropy = int(seed) if stream is None else (int(seed), int(stream))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def _draw(rng: np.random.Generator, cumulative: np.ndarray, width: int) -> np.ndarray:
    """Inverse-CDF draw, one row of ``cumulative`` per sample."""
    u = rng.random(cumulative.shape[0])
    picked = (cumulative <= u[:, None]).sum(axis=1)
    return np.minimum(picked, width - 1)


def sample_trajectories(
    system: ValidatedSystem,
    count: int,
    seed: int,
    budget: int = DEFAULT_SAMPLE_BUDGET,
) -> SampleSet:
    """Draw ``count`` i.i.d. trajectories by ancestral sampling in generative order."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if count > budget:
        raise SampleBudgetError(f"{count} samples exceed the sampling budget of {budget}")
    rng = _generator(seed)
    spec = system.spec

    values: dict = {}
    prior_cum = np.cumsum(spec.message_prior)
    u = rng.random(count)
    values[("x0", 0)] = np.minimum(np.searchsorted(prior_cum, u, side="right"), len(prior_cum) - 1)

    for kernel in spec.kernels_in_order():
        sizes = [system.coord_size(c) for c in kernel.parents]
        hist = np.zeros(count, dtype=np.int64)
        for coord, size in zip(kernel.parents, sizes):
            hist = hist * size + values[coord]
        cumulative = np.cumsum(kernel.table, axis=1)[hist]
        width = system.coord_size(kernel.child)
        values[kernel.child] = _draw(rng, cumulative, width)

    flat = np.ravel_multi_index(tuple(values[c] for c in system.coords), system.shape)
    indices, counts = np.unique(flat, return_counts=True)
    return SampleSet(system=system, count=count, indices=indices, counts=counts, seed=int(seed))


def plugin_estimate(
    samples: SampleSet,
    quantity: str,
    resamples: int = BOOTSTRAP_RESAMPLES,
) -> Estimate:
    """Plug-in value of a named quantity with a bootstrap standard error (bits)."""
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}; choose from {sorted(QUANTITIES)}")
    if samples.count < 1 or samples.indices.size == 0:
        raise ValueError("empty sample set")
    evaluate = QUANTITIES[quantity]
    value = evaluate(samples.empirical())

    rng = _generator(samples.seed, _BOOTSTRAP_STREAM)
    weights = samples.counts / samples.count
    replicas = np.empty(resamples)
    dense = np.zeros(samples.system.trajectory_count)
    for b in range(resamples):
        resampled = rng.multinomial(samples.count, weights)
        dense[:] = 0.0
        dense[samples.indices] = resampled / samples.count
        replicas[b] = evaluate(
            JointTable(system=samples.system, array=dense.reshape(samples.system.shape))
        )
    std_error = float(np.std(replicas, ddof=1)) if resamples > 1 else 0.0
    return Estimate(value=float(value), std_error=std_error, count=samples.count)


@dataclass(frozen=True)
class ConvergenceRow:
    count: int
    estimate_bits: float
    std_error_bits: float
    exact_bits: float
    abs_error_bits: float


CONVERGENCE_COLUMNS = ("count", "estimate_bits", "std_error_bits", "exact_bits", "abs_error_bits")


def convergence_report(
    system: ValidatedSystem,
    quantity: str,
    counts: list[int],
    seed: int,
    budget: int = DEFAULT_SAMPLE_BUDGET,
) -> list[ConvergenceRow]:
    """Estimate one quantity at growing sample counts against the exact value."""
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}; choose from {sorted(QUANTITIES)}")
    from .engine import build_joint

    exact = float(QUANTITIES[quantity](build_joint(system)))
    rows = []
    for count in counts:
        estimate = plugin_estimate(sample_trajectories(system, int(count), seed, budget), quantity)
        rows.append(
            ConvergenceRow(
                count=int(count),
                estimate_bits=estimate.value,
                std_error_bits=estimate.std_error,
                exact_bits=exact,
                abs_error_bits=abs(estimate.value - exact),
            )
        )
    return rows


def convergence_csv(rows: list[ConvergenceRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CONVERGENCE_COLUMNS)
    for row in rows:
        writer.writerow([row.count, row.estimate_bits, row.std_error_bits, row.exact_bits, row.abs_error_bits])
    return out.getvalue()
