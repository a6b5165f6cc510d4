"""Exact information quantities over the full trajectory distribution.

Everything here is marginalization of one shared joint table, so the identity
residuals reported by the verifiers test the mathematics rather than two
copies of the same formula.  Conventions: 0*log(0) = 0, terms conditioned on
zero-probability events contribute 0, and all values are in bits unless the
table is tagged "nats" (nats = bits * ln 2).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .model import (
    Coord,
    SpecError,
    ValidatedSystem,
    build_joint_budget_check,
    expand_rows,
    span,
)

LN2 = math.log(2.0)
DEFAULT_TOL = 1e-9
MASS_TOL = 1e-12

MESSAGE: tuple[Coord, ...] = (("x0", 0),)

Selector = Iterable[Coord]


class SelectorError(ValueError):
    """A variable selector is out of range, duplicated, or overlapping."""


class StateDependenceError(SpecError):
    """The stateless reduction was requested for a system that uses its state."""


@dataclass(frozen=True)
class JointTable:
    """Exact probability of every complete trajectory, shaped one axis per coordinate."""

    system: ValidatedSystem
    array: np.ndarray
    units: str = "bits"

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.array, dtype=np.float64))
        if arr.shape != self.system.shape:
            raise ValueError(f"joint table shape {arr.shape} != trajectory shape {self.system.shape}")
        if (arr < 0).any():
            raise ValueError("joint table has a negative entry")
        mass = float(arr.sum())
        if abs(mass - 1.0) > MASS_TOL:
            raise ValueError(f"joint table mass {mass:.17g} is not 1 within {MASS_TOL}")
        if self.units not in ("bits", "nats"):
            raise ValueError(f"unknown units tag {self.units!r}")
        arr.flags.writeable = False
        object.__setattr__(self, "array", arr)

    @property
    def probabilities(self) -> np.ndarray:
        """Flat dense vector indexed by trajectory_index."""
        return self.array.reshape(-1)

    @property
    def scale(self) -> float:
        return 1.0 if self.units == "bits" else LN2


def _embed(system: ValidatedSystem, block: np.ndarray, coords: tuple[Coord, ...]) -> np.ndarray:
    """View ``block`` (one axis per coord, in the given order) broadcastable over trajectory space."""
    axes = [system.axis[c] for c in coords]
    arr = np.asarray(block).transpose(np.argsort(axes))
    shape = [1] * len(system.shape)
    for c in coords:
        shape[system.axis[c]] = system.coord_size(c)
    return arr.reshape(shape)


def build_joint(system: ValidatedSystem, units: str = "bits") -> JointTable:
    """Multiply every kernel factor into the exact product measure over trajectories."""
    build_joint_budget_check(system)
    joint = np.ones(system.shape, dtype=np.float64)
    joint *= _embed(system, system.spec.message_prior, (("x0", 0),))
    for kernel in system.spec.kernels_in_order():
        sizes = tuple(system.coord_size(c) for c in kernel.parents)
        child_size = system.coord_size(kernel.child)
        block = kernel.table.reshape(sizes + (child_size,))
        joint *= _embed(system, block, kernel.parents + (kernel.child,))
    return JointTable(system=system, array=joint, units=units)


def _resolve(j: JointTable, selector: Selector, label: str) -> tuple[int, ...]:
    axes = []
    seen = set()
    for item in selector:
        try:
            name, t = item
        except (TypeError, ValueError):
            raise SelectorError(f"{label}: malformed coordinate {item!r}") from None
        coord = (name, int(t))
        if coord not in j.system.axis:
            raise SelectorError(f"{label}: coordinate {coord} does not exist at horizon {j.system.horizon}")
        if coord in seen:
            raise SelectorError(f"{label}: duplicate coordinate {coord}")
        seen.add(coord)
        axes.append(j.system.axis[coord])
    return tuple(axes)


def cond_entropy_term(j: JointTable, target: Selector, given: Selector = ()) -> float:
    """H(target | given) = -sum p(t,g) log p(t|g) over the support of (t,g)."""
    t_axes = _resolve(j, target, "target")
    g_axes = _resolve(j, given, "given")
    if not t_axes:
        raise SelectorError("target selector must be nonempty")
    if set(t_axes) & set(g_axes):
        raise SelectorError("target and given selectors overlap")
    keep = sorted(set(t_axes) | set(g_axes))
    drop = tuple(a for a in range(len(j.system.shape)) if a not in keep)
    joint = j.array.sum(axis=drop) if drop else j.array
    t_pos = tuple(k for k, a in enumerate(keep) if a in t_axes)
    cond = joint.sum(axis=t_pos, keepdims=True)
    nz = joint > 0.0
    ratio = joint[nz] / np.broadcast_to(cond, joint.shape)[nz]
    value = -float(np.dot(joint[nz], np.log2(ratio)))
    return value * j.scale + 0.0  # normalize -0.0


def _causal_extras(j: JointTable, i: int, causal_shift: Mapping[str, int]) -> tuple[Coord, ...]:
    extras: tuple[Coord, ...] = ()
    for name, delay in causal_shift.items():
        if name not in ("s", "x", "e") or int(delay) < 0:
            raise SelectorError(f"invalid delay map entry {name!r}: {delay!r}")
        if name == "e" and int(delay) < 1:
            raise SelectorError("the feedback track has no symbol at the current step; delay must be >= 1")
        extras += span(name, 1, i - int(delay))
    return extras


def causal_entropy(
    j: JointTable,
    cond: Selector = (),
    causal_shift: Mapping[str, int] | None = None,
) -> float:
    """Per-step output entropy with causal conditioning.

    Returns sum_i H(y_i | y^{i-1}, cond, c^{i-delay(c)} for each causal track c).
    The default delay map {"s": 0} conditions each term on the state up to the
    current step; {"s": 0, "e": 1} additionally conditions on feedback up to
    the previous step; {} drops causal conditioning entirely.
    """
    if causal_shift is None:
        causal_shift = {"s": 0}
    cond = tuple(cond)
    total = 0.0
    for i in range(1, j.system.horizon + 1):
        given = span("y", 1, i - 1) + cond + _causal_extras(j, i, causal_shift)
        total += cond_entropy_term(j, (("y", i),), given)
    return total


def _track_terms(j: JointTable, i: int, track: str) -> tuple[tuple[Coord, ...], tuple[Coord, ...]]:
    if track == "y":
        return (("y", i),), span("y", 1, i - 1)
    if track == "ey":
        # Paired track: the step-i block is (e_{i-1}, y_i), its history (e^{i-2}, y^{i-1}).
        target = (("y", i),) + (() if i == 1 else ((("e", i - 1)),))
        history = span("y", 1, i - 1) + span("e", 1, i - 2)
        return target, history
    raise SelectorError(f"unknown track {track!r}")


def causal_mutual_info(
    j: JointTable,
    message: Selector,
    cond: Selector = (),
    track: str = "y",
    condition_on_state: bool = True,
) -> float:
    """Mutual information between ``message`` and a causal track.

    track="y" decomposes the output sequence step by step; track="ey" uses the
    paired blocks (e_{i-1}, y_i), which is how the joint feedback-and-output
    record shares information with the message.  ``cond`` is held fixed in
    every term; the state enters causally unless condition_on_state=False.
    """
    message = tuple(message)
    if not message:
        raise SelectorError("message selector must be nonempty")
    cond = tuple(cond)
    causal = {"s": 0} if condition_on_state else {}
    total = 0.0
    for i in range(1, j.system.horizon + 1):
        target, history = _track_terms(j, i, track)
        given = history + cond + _causal_extras(j, i, causal)
        total += cond_entropy_term(j, target, given) - cond_entropy_term(j, target, given + message)
    return total


def directed_info(j: JointTable) -> float:
    """sum_i I(x^i; y_i | y^{i-1}): stepwise information carried forward by the inputs."""
    total = 0.0
    for i in range(1, j.system.horizon + 1):
        given = span("y", 1, i - 1)
        total += cond_entropy_term(j, (("y", i),), given) - cond_entropy_term(
            j, (("y", i),), given + span("x", 1, i)
        )
    return total


def directed_info_causal(
    j: JointTable,
    extra_cond: Selector = (),
    condition_on_state: bool = True,
) -> float:
    """sum_i I(x^i; y_i | y^{i-1}, extra_cond, s^i)."""
    extra_cond = tuple(extra_cond)
    for name, _ in extra_cond:
        if name in ("x", "y", "s"):
            raise SelectorError(f"extra_cond may not contain {name!r} coordinates")
    total = 0.0
    for i in range(1, j.system.horizon + 1):
        given = span("y", 1, i - 1) + extra_cond
        if condition_on_state:
            given += span("s", 1, i)
        total += cond_entropy_term(j, (("y", i),), given) - cond_entropy_term(
            j, (("y", i),), given + span("x", 1, i)
        )
    return total


def feedback_directed_info(j: JointTable, condition_on_state: bool = True) -> float:
    """Information the feedback record pushes into the outputs.

    Equals the causal output entropy minus the same entropy further
    conditioned on feedback up to the previous step; nonnegative because each
    term only adds conditioning variables.
    """
    base = {"s": 0} if condition_on_state else {}
    return causal_entropy(j, (), base) - causal_entropy(j, (), {**base, "e": 1})


def cross_term(j: JointTable, condition_on_state: bool = True) -> float:
    """Chain-rule difference measuring message/feedback interference.

    Defined as the paired-track message information minus the output-only
    message information; it has no intrinsic entropy form and can be negative,
    which the reports flag rather than forbid.
    """
    paired = causal_mutual_info(j, MESSAGE, track="ey", condition_on_state=condition_on_state)
    output_only = causal_mutual_info(j, MESSAGE, track="y", condition_on_state=condition_on_state)
    return paired - output_only


# ---------------------------------------------------------------------------
# Structural detectors (exact table inspection, no tolerance)
# ---------------------------------------------------------------------------


def _constant_along(kernel, system: ValidatedSystem, coord_name: str) -> bool:
    sizes = tuple(system.coord_size(c) for c in kernel.parents)
    child = system.coord_size(kernel.child)
    nd = kernel.table.reshape(sizes + (child,))
    for k, (name, _) in enumerate(kernel.parents):
        if name == coord_name and not bool((nd == nd.take([0], axis=k)).all()):
            return False
    return True


def is_state_blind(system: ValidatedSystem) -> bool:
    """True when neither the forward channel nor the encoder reads the state track."""
    kernels = list(system.spec.forward_kernels) + list(system.spec.encoder_kernels)
    return all(_constant_along(k, system, "s") for k in kernels)


def is_feedback_blind(system: ValidatedSystem) -> bool:
    """True when the encoder ignores the feedback track."""
    return all(_constant_along(k, system, "e") for k in system.spec.encoder_kernels)


def is_noiseless_feedback(system: ValidatedSystem) -> bool:
    """True when every feedback kernel copies the current output exactly."""
    a = system.alphabets
    if a.feedback != a.output:
        return False
    for kernel in system.spec.feedback_kernels:
        i = kernel.time_index
        copy_rows = expand_rows(
            np.eye(a.output), kernel.parents, (("y", i),), a.feedback, a
        )
        if not np.array_equal(kernel.table, copy_rows):
            return False
    return True


# ---------------------------------------------------------------------------
# Identity verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IdentityReport:
    """All conservation-law quantities in one place, with literal residuals.

    residual_chain_rule is zero by construction (the cross term is defined
    through the chain rule); it is stored so the report is explicit about
    which differences were taken.
    """

    units: str
    tolerance: float
    trajectory_count: int
    forward_directed_info: float
    message_info: float
    cross_term: float
    feedback_directed_info: float
    directed_info_given_message: float
    message_info_with_feedback: float
    output_message_info: float
    residual_conservation: float
    residual_markov_step: float
    residual_decomposition: float
    residual_chain_rule: float
    cross_term_negative: bool
    passed: bool
    duration_seconds: float

    def residuals(self) -> dict[str, float]:
        return {
            "conservation": self.residual_conservation,
            "markov_step": self.residual_markov_step,
            "decomposition": self.residual_decomposition,
            "chain_rule": self.residual_chain_rule,
        }

    def quantities(self) -> dict[str, float]:
        return {
            "forward_directed_info": self.forward_directed_info,
            "message_info": self.message_info,
            "cross_term": self.cross_term,
            "feedback_directed_info": self.feedback_directed_info,
            "directed_info_given_message": self.directed_info_given_message,
            "message_info_with_feedback": self.message_info_with_feedback,
            "output_message_info": self.output_message_info,
        }

    def to_dict(self, include_timing: bool = True) -> dict:
        doc = {
            "units": self.units,
            "tolerance": self.tolerance,
            "trajectory_count": self.trajectory_count,
            "quantities": self.quantities(),
            "residuals": self.residuals(),
            "cross_term_negative": self.cross_term_negative,
            "passed": self.passed,
        }
        if include_timing:
            doc["duration_seconds"] = self.duration_seconds
        return doc


def _full_report(system: ValidatedSystem, tol: float, units: str) -> IdentityReport:
    start = time.perf_counter()
    j = build_joint(system, units)

    forward = directed_info_causal(j)
    message = causal_mutual_info(j, MESSAGE)
    output_message = message  # same per-step expansion, two names in the decomposition
    paired_message = causal_mutual_info(j, MESSAGE, track="ey")
    cross = paired_message - output_message
    feedback = feedback_directed_info(j)
    forward_given_message = directed_info_causal(j, extra_cond=MESSAGE)

    residual_conservation = forward - (message + cross + feedback)
    residual_markov = message - (forward - forward_given_message)
    residual_decomposition = forward_given_message - (cross + feedback)
    residual_chain = cross - (paired_message - output_message)
    residuals = (residual_conservation, residual_markov, residual_decomposition, residual_chain)

    return IdentityReport(
        units=units,
        tolerance=tol,
        trajectory_count=system.trajectory_count,
        forward_directed_info=forward,
        message_info=message,
        cross_term=cross,
        feedback_directed_info=feedback,
        directed_info_given_message=forward_given_message,
        message_info_with_feedback=paired_message,
        output_message_info=output_message,
        residual_conservation=residual_conservation,
        residual_markov_step=residual_markov,
        residual_decomposition=residual_decomposition,
        residual_chain_rule=residual_chain,
        cross_term_negative=cross < 0.0,
        passed=all(abs(r) <= tol for r in residuals),
        duration_seconds=time.perf_counter() - start,
    )


def verify_conservation(system: ValidatedSystem, tol: float = DEFAULT_TOL, units: str = "bits") -> IdentityReport:
    """Check that forward flow splits into message + cross + feedback terms within ``tol``."""
    return _full_report(system, tol, units)


def verify_proof_steps(system: ValidatedSystem, tol: float = DEFAULT_TOL, units: str = "bits") -> IdentityReport:
    """Check the three intermediate identities behind the conservation law within ``tol``."""
    return _full_report(system, tol, units)


@dataclass(frozen=True)
class StatelessReport:
    """Comparison of state-conditioned quantities against their unconditioned forms."""

    units: str
    tolerance: float
    trajectory_count: int
    pairs: dict[str, tuple[float, float]]  # name -> (with state conditioning, without)
    identity_residual: float
    max_gap: float
    passed: bool
    duration_seconds: float

    def to_dict(self, include_timing: bool = True) -> dict:
        doc = {
            "units": self.units,
            "tolerance": self.tolerance,
            "trajectory_count": self.trajectory_count,
            "quantities": {
                name: {
                    "state_conditioned": with_s,
                    "unconditioned": without_s,
                    "gap": with_s - without_s,
                }
                for name, (with_s, without_s) in self.pairs.items()
            },
            "identity_residual": self.identity_residual,
            "max_gap": self.max_gap,
            "passed": self.passed,
        }
        if include_timing:
            doc["duration_seconds"] = self.duration_seconds
        return doc


def verify_stateless_reduction(
    system: ValidatedSystem, tol: float = DEFAULT_TOL, units: str = "bits"
) -> StatelessReport:
    """For systems whose forward/encoder kernels ignore the state, check that
    dropping the causal state conditioning changes nothing and that the
    unconditioned identity still closes."""
    if not is_state_blind(system):
        raise StateDependenceError(
            "stateless reduction requires forward and encoder kernels constant in every state coordinate"
        )
    start = time.perf_counter()
    j = build_joint(system, units)

    def both(fn) -> tuple[float, float]:
        return fn(True), fn(False)

    pairs = {
        "forward_directed_info": (directed_info_causal(j), directed_info(j)),
        "message_info": both(lambda c: causal_mutual_info(j, MESSAGE, condition_on_state=c)),
        "message_info_with_feedback": both(
            lambda c: causal_mutual_info(j, MESSAGE, track="ey", condition_on_state=c)
        ),
        "cross_term": both(lambda c: cross_term(j, condition_on_state=c)),
        "feedback_directed_info": both(lambda c: feedback_directed_info(j, condition_on_state=c)),
        "directed_info_given_message": (
            directed_info_causal(j, extra_cond=MESSAGE),
            directed_info_causal(j, extra_cond=MESSAGE, condition_on_state=False),
        ),
    }
    identity_residual = pairs["forward_directed_info"][1] - (
        pairs["message_info"][1] + pairs["cross_term"][1] + pairs["feedback_directed_info"][1]
    )
    max_gap = max(abs(a - b) for a, b in pairs.values())
    return StatelessReport(
        units=units,
        tolerance=tol,
        trajectory_count=system.trajectory_count,
        pairs=pairs,
        identity_residual=identity_residual,
        max_gap=max_gap,
        passed=max_gap <= tol and abs(identity_residual) <= tol,
        duration_seconds=time.perf_counter() - start,
    )
