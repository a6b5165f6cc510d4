"""Finite-alphabet generative model of a state-dependent channel with noisy feedback.

The system runs for a horizon of n steps.  A message symbol x0 is drawn first;
at each step i the state s_i, the channel input x_i and the channel output y_i
are drawn in that order, and for i < n a feedback symbol e_i is produced from
the outputs seen so far.  Every conditional law is a dense per-step table over
the full history, so the joint distribution over complete trajectories is an
exact finite product measure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import json

import numpy as np

ROW_SUM_TOL = 1e-12
DEFAULT_BUDGET = 10**8

# A trajectory coordinate: ("x0", 0), ("s", i), ("x", i), ("y", i) or ("e", i).
Coord = tuple[str, int]

COORD_NAMES = ("x0", "s", "x", "y", "e")

KERNEL_ROLES = ("state", "encoder", "forward", "feedback")

_CHILD_NAME = {"state": "s", "encoder": "x", "forward": "y", "feedback": "e"}


class SpecError(ValueError):
    """The system description violates a structural or normalization invariant."""


class BudgetError(RuntimeError):
    """The trajectory space exceeds the configured enumeration budget."""


@dataclass(frozen=True)
class Alphabets:
    """Sizes of the five finite alphabets; symbols are always 0..size-1."""

    message: int
    input: int
    output: int
    state: int
    feedback: int

    def __post_init__(self):
        for name in ("message", "input", "output", "state", "feedback"):
            size = getattr(self, name)
            if not isinstance(size, int) or size < 1:
                raise SpecError(f"alphabet size '{name}' must be a positive integer, got {size!r}")

    def size_of(self, coord_name: str) -> int:
        return {
            "x0": self.message,
            "s": self.state,
            "x": self.input,
            "y": self.output,
            "e": self.feedback,
        }[coord_name]


def span(name: str, lo: int, hi: int) -> tuple[Coord, ...]:
    """Coordinates (name, lo) .. (name, hi); empty when hi < lo."""
    return tuple((name, t) for t in range(lo, hi + 1))


def trajectory_coords(horizon: int) -> tuple[Coord, ...]:
    """Canonical coordinate order: x0, then s_i, x_i, y_i per step, with e_i after y_i for i < n."""
    coords: list[Coord] = [("x0", 0)]
    for i in range(1, horizon + 1):
        coords += [("s", i), ("x", i), ("y", i)]
        if i < horizon:
            coords.append(("e", i))
    return tuple(coords)


def kernel_parents(role: str, i: int) -> tuple[Coord, ...]:
    """Conditioning coordinates of the step-i kernel for a role, in canonical table order."""
    if role == "state":
        return span("s", 1, i - 1)
    if role == "encoder":
        return (("x0", 0),) + span("x", 1, i - 1) + span("e", 1, i - 1) + span("s", 1, i)
    if role == "forward":
        return span("y", 1, i - 1) + span("x", 1, i) + span("s", 1, i)
    if role == "feedback":
        return span("e", 1, i - 1) + span("y", 1, i)
    raise ValueError(f"unknown kernel role {role!r}")


def _sizes(coords: Sequence[Coord], alphabets: Alphabets) -> tuple[int, ...]:
    return tuple(alphabets.size_of(name) for name, _ in coords)


@dataclass(frozen=True)
class ConditionalKernel:
    """One time step's conditional law: a row-stochastic table over a history.

    ``table`` has shape (number of parent histories, child alphabet size); row
    r holds the distribution of the child symbol given the parent tuple whose
    mixed-radix index is r (first listed parent most significant).
    """

    role: str
    time_index: int
    parents: tuple[Coord, ...]
    child: Coord
    table: np.ndarray

    def __post_init__(self):
        table = np.ascontiguousarray(np.asarray(self.table, dtype=np.float64))
        if table.ndim != 2:
            raise SpecError(
                f"{self.role} kernel at time {self.time_index}: table must be 2-D, got shape {table.shape}"
            )
        table.flags.writeable = False
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "parents", tuple((str(n), int(t)) for n, t in self.parents))
        object.__setattr__(self, "child", (str(self.child[0]), int(self.child[1])))

    def parent_tuple(self, row: int, alphabets: Alphabets) -> tuple[int, ...]:
        """Decode a table row index back into the parent symbol tuple."""
        sizes = _sizes(self.parents, alphabets)
        if not sizes:
            return ()
        return tuple(int(v) for v in np.unravel_index(row, sizes))


def make_kernel(role: str, i: int, alphabets: Alphabets, table: np.ndarray) -> ConditionalKernel:
    """Wrap a dense table as the step-i kernel of the given role."""
    return ConditionalKernel(
        role=role,
        time_index=i,
        parents=kernel_parents(role, i),
        child=(_CHILD_NAME[role], i),
        table=table,
    )


def expand_rows(
    reduced: np.ndarray,
    parents: Sequence[Coord],
    present: Sequence[Coord],
    child_size: int,
    alphabets: Alphabets,
) -> np.ndarray:
    """Tile a table over ``present`` parents out to the full parent set.

    ``present`` must be a subsequence of ``parents``; the returned table is
    constant in every dropped coordinate.
    """
    present = tuple(present)
    order = [p for p in parents if p in present]
    if order != list(present):
        raise ValueError("present coordinates must appear in parent order")
    view_shape = tuple(alphabets.size_of(n) if (n, t) in present else 1 for n, t in parents)
    full_shape = _sizes(parents, alphabets)
    block = np.asarray(reduced, dtype=np.float64).reshape(view_shape + (child_size,))
    full = np.broadcast_to(block, full_shape + (child_size,))
    return full.reshape(-1, child_size).copy()


@dataclass(frozen=True)
class StationaryShorthand:
    """Time-invariant kernel given only through its most recent parents.

    kinds and their reduced parent tuples:
      memoryless-forward   rows over (x_i, s_i)
      memoryless-feedback  rows over (y_i,)
      markov-state         rows over (s_{i-1},); ``initial`` is the step-1
                           distribution (defaults to row 0 of the table)
      stationary-encoder   rows over (x0, e_{i-1}, s_i); step 1 uses the
                           rows with the e slot fixed at 0
    """

    kind: str
    table: np.ndarray
    initial: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "table", np.asarray(self.table, dtype=np.float64))
        if self.initial is not None:
            object.__setattr__(self, "initial", np.asarray(self.initial, dtype=np.float64))


_SHORTHAND_ROLE = {
    "memoryless-forward": "forward",
    "memoryless-feedback": "feedback",
    "markov-state": "state",
    "stationary-encoder": "encoder",
}


def expand_shorthand(sh: StationaryShorthand, horizon: int, alphabets: Alphabets) -> list[ConditionalKernel]:
    """Materialize per-step kernels whose rows repeat the shorthand row for the recent parents."""
    if sh.kind not in _SHORTHAND_ROLE:
        raise SpecError(f"unknown shorthand kind {sh.kind!r}")
    role = _SHORTHAND_ROLE[sh.kind]
    child_name = _CHILD_NAME[role]
    child_size = alphabets.size_of(child_name)

    expected = {
        "memoryless-forward": (alphabets.input * alphabets.state, alphabets.output),
        "memoryless-feedback": (alphabets.output, alphabets.feedback),
        "markov-state": (alphabets.state, alphabets.state),
        "stationary-encoder": (alphabets.message * alphabets.feedback * alphabets.state, alphabets.input),
    }[sh.kind]
    if sh.table.shape != expected:
        raise SpecError(
            f"{sh.kind} shorthand table has shape {sh.table.shape}, expected {expected}"
        )

    steps = horizon - 1 if role == "feedback" else horizon
    kernels = []
    for i in range(1, steps + 1):
        parents = kernel_parents(role, i)
        if sh.kind == "memoryless-forward":
            present = (("x", i), ("s", i))
            reduced = sh.table
        elif sh.kind == "memoryless-feedback":
            present = (("y", i),)
            reduced = sh.table
        elif sh.kind == "markov-state":
            if i == 1:
                first = sh.initial if sh.initial is not None else sh.table[0]
                if np.asarray(first).shape != (alphabets.state,):
                    raise SpecError("markov-state initial distribution has wrong length")
                present = ()
                reduced = np.asarray(first, dtype=np.float64)
            else:
                present = (("s", i - 1),)
                reduced = sh.table
        else:  # stationary-encoder
            cube = sh.table.reshape(alphabets.message, alphabets.feedback, alphabets.state, alphabets.input)
            if i == 1:
                present = (("x0", 0), ("s", 1))
                reduced = cube[:, 0, :, :]
            else:
                present = (("x0", 0), ("e", i - 1), ("s", i))
                reduced = cube
        table = expand_rows(reduced, parents, present, child_size, alphabets)
        kernels.append(make_kernel(role, i, alphabets, table))
    return kernels


@dataclass(frozen=True)
class SystemSpec:
    """Complete generative description of one noisy-feedback system."""

    horizon: int
    alphabets: Alphabets
    message_prior: np.ndarray
    state_kernels: tuple[ConditionalKernel, ...]
    encoder_kernels: tuple[ConditionalKernel, ...]
    forward_kernels: tuple[ConditionalKernel, ...]
    feedback_kernels: tuple[ConditionalKernel, ...]

    def __post_init__(self):
        prior = np.ascontiguousarray(np.asarray(self.message_prior, dtype=np.float64))
        prior.flags.writeable = False
        object.__setattr__(self, "message_prior", prior)
        for name in ("state_kernels", "encoder_kernels", "forward_kernels", "feedback_kernels"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    def kernels_in_order(self) -> Iterator[ConditionalKernel]:
        """All kernels in generative order (state, encoder, forward, feedback per step)."""
        for i in range(1, self.horizon + 1):
            yield self.state_kernels[i - 1]
            yield self.encoder_kernels[i - 1]
            yield self.forward_kernels[i - 1]
            if i < self.horizon:
                yield self.feedback_kernels[i - 1]


class ValidatedSystem:
    """A SystemSpec known to satisfy every invariant, plus trajectory-space layout."""

    __slots__ = ("spec", "coords", "shape", "axis", "trajectory_count", "budget")

    def __init__(self, spec: SystemSpec, budget: int):
        self.spec = spec
        self.coords = trajectory_coords(spec.horizon)
        self.shape = _sizes(self.coords, spec.alphabets)
        self.axis = {coord: k for k, coord in enumerate(self.coords)}
        self.trajectory_count = int(np.prod([np.int64(s) for s in self.shape]))
        self.budget = budget

    @property
    def horizon(self) -> int:
        return self.spec.horizon

    @property
    def alphabets(self) -> Alphabets:
        return self.spec.alphabets

    def coord_size(self, coord: Coord) -> int:
        return self.spec.alphabets.size_of(coord[0])

    def __repr__(self):
        return f"ValidatedSystem(horizon={self.horizon}, trajectories={self.trajectory_count})"


def _check_rows(kernel: ConditionalKernel, alphabets: Alphabets) -> None:
    n_hist = int(np.prod([np.int64(s) for s in _sizes(kernel.parents, alphabets)])) if kernel.parents else 1
    child_size = alphabets.size_of(kernel.child[0])
    where = f"{kernel.role} kernel at time {kernel.time_index}"
    if kernel.table.shape != (n_hist, child_size):
        raise SpecError(
            f"{where}: missing table entries, shape {kernel.table.shape} != ({n_hist}, {child_size})"
        )
    if np.isnan(kernel.table).any():
        row = int(np.argwhere(np.isnan(kernel.table))[0][0])
        raise SpecError(f"{where}: missing table entry for parents {kernel.parent_tuple(row, alphabets)}")
    if (kernel.table < 0).any():
        row = int(np.argwhere((kernel.table < 0).any(axis=1))[0][0])
        raise SpecError(f"{where}: negative probability for parents {kernel.parent_tuple(row, alphabets)}")
    sums = kernel.table.sum(axis=1)
    bad = np.abs(sums - 1.0) > ROW_SUM_TOL
    if bad.any():
        row = int(np.argmax(bad))
        raise SpecError(
            f"{where}: row for parents {kernel.parent_tuple(row, alphabets)} sums to {sums[row]:.17g}"
        )


def validate_system(spec: SystemSpec, budget: int = DEFAULT_BUDGET) -> ValidatedSystem:
    """Check every invariant of the spec and return an immutable validated handle.

    Raises SpecError naming the offending kernel/time/parent tuple, or
    BudgetError when the trajectory space exceeds ``budget``.
    """
    n = spec.horizon
    if not isinstance(n, int) or n < 1:
        raise SpecError(f"horizon must be a positive integer, got {n!r}")
    a = spec.alphabets

    count = a.message * (a.state * a.input * a.output) ** n * a.feedback ** max(n - 1, 0)
    if count > budget:
        raise BudgetError(
            f"{count} trajectories exceed the enumeration budget of {budget}"
        )

    if spec.message_prior.shape != (a.message,):
        raise SpecError(
            f"message prior has length {spec.message_prior.shape}, expected ({a.message},)"
        )
    if (spec.message_prior < 0).any():
        raise SpecError("message prior has a negative entry")
    if abs(float(spec.message_prior.sum()) - 1.0) > ROW_SUM_TOL:
        raise SpecError(f"message prior sums to {float(spec.message_prior.sum()):.17g}")

    expected_counts = {"state": n, "encoder": n, "forward": n, "feedback": n - 1}
    groups = {
        "state": spec.state_kernels,
        "encoder": spec.encoder_kernels,
        "forward": spec.forward_kernels,
        "feedback": spec.feedback_kernels,
    }
    for role, kernels in groups.items():
        if len(kernels) != expected_counts[role]:
            raise SpecError(
                f"{role} kernels: got {len(kernels)} steps, horizon {n} requires {expected_counts[role]}"
            )
        for pos, kernel in enumerate(kernels, start=1):
            if kernel.role != role or kernel.time_index != pos:
                raise SpecError(f"{role} kernel at position {pos} is labeled ({kernel.role}, {kernel.time_index})")
            if kernel.parents != kernel_parents(role, pos):
                raise SpecError(f"{role} kernel at time {pos} has a non-canonical parent list")
            if kernel.child != (_CHILD_NAME[role], pos):
                raise SpecError(f"{role} kernel at time {pos} has child {kernel.child}")
            _check_rows(kernel, a)

    return ValidatedSystem(spec, budget)


def build_joint_budget_check(system: ValidatedSystem) -> None:
    """Fail fast before allocating a trajectory table larger than the budget."""
    if system.trajectory_count > system.budget:
        raise BudgetError(
            f"{system.trajectory_count} trajectories exceed the enumeration budget of {system.budget}"
        )


def trajectory_index(system: ValidatedSystem, trajectory: Sequence[int]) -> int:
    """Mixed-radix index of a complete trajectory (x0 most significant)."""
    if len(trajectory) != len(system.coords):
        raise SpecError(
            f"trajectory has {len(trajectory)} symbols, expected {len(system.coords)}"
        )
    for value, coord, size in zip(trajectory, system.coords, system.shape):
        if not 0 <= int(value) < size:
            raise SpecError(f"symbol {value} out of range for coordinate {coord} (size {size})")
    return int(np.ravel_multi_index(tuple(int(v) for v in trajectory), system.shape))


def trajectory_from_index(system: ValidatedSystem, index: int) -> tuple[int, ...]:
    """Inverse of trajectory_index."""
    if not 0 <= index < system.trajectory_count:
        raise SpecError(f"trajectory index {index} out of range")
    return tuple(int(v) for v in np.unravel_index(int(index), system.shape))


# ---------------------------------------------------------------------------
# JSON system documents
#
# {
#   "horizon": 3,
#   "alphabets": {"message": 2, "input": 2, "output": 2, "state": 1, "feedback": 2},
#   "message_prior": [0.5, 0.5],
#   "state":    {"kind": "markov", "table": [[1.0]], "initial": [1.0]},
#   "encoder":  {"kind": "table", "steps": [[[...], ...], ...]},
#   "forward":  {"kind": "memoryless", "table": [[0.9, 0.1], [0.1, 0.9]]},
#   "feedback": {"kind": "memoryless", "table": [[0.8, 0.2], [0.2, 0.8]]}
# }
#
# "table" carries one row-list per step in mixed-radix parent order; the
# shorthand kinds are "memoryless" (forward/feedback), "markov" (state) and
# "stationary" (encoder).
# ---------------------------------------------------------------------------

_ROLE_SHORTHAND = {
    ("forward", "memoryless"): "memoryless-forward",
    ("feedback", "memoryless"): "memoryless-feedback",
    ("state", "markov"): "markov-state",
    ("encoder", "stationary"): "stationary-encoder",
}


def _kernels_from_entry(role: str, entry, horizon: int, alphabets: Alphabets) -> list[ConditionalKernel]:
    if not isinstance(entry, dict) or "kind" not in entry:
        raise SpecError(f"'{role}' entry must be an object with a 'kind' tag")
    kind = entry["kind"]
    steps = horizon - 1 if role == "feedback" else horizon
    if kind == "table":
        rows_per_step = entry.get("steps")
        if not isinstance(rows_per_step, list) or len(rows_per_step) != steps:
            raise SpecError(f"'{role}' table entry needs {steps} steps")
        return [
            make_kernel(role, i, alphabets, np.asarray(rows, dtype=np.float64))
            for i, rows in enumerate(rows_per_step, start=1)
        ]
    shorthand_kind = _ROLE_SHORTHAND.get((role, kind))
    if shorthand_kind is None:
        raise SpecError(f"'{role}' entry has unsupported kind {kind!r}")
    if "table" not in entry:
        raise SpecError(f"'{role}' {kind} entry is missing its table")
    initial = entry.get("initial")
    sh = StationaryShorthand(
        kind=shorthand_kind,
        table=np.asarray(entry["table"], dtype=np.float64),
        initial=None if initial is None else np.asarray(initial, dtype=np.float64),
    )
    return expand_shorthand(sh, horizon, alphabets)


def system_from_dict(doc: dict) -> SystemSpec:
    """Build a SystemSpec from a parsed system document (raises SpecError on bad input)."""
    try:
        horizon = int(doc["horizon"])
        sizes = doc["alphabets"]
        alphabets = Alphabets(
            message=int(sizes["message"]),
            input=int(sizes["input"]),
            output=int(sizes["output"]),
            state=int(sizes["state"]),
            feedback=int(sizes["feedback"]),
        )
        prior = np.asarray(doc["message_prior"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed system document: {exc}") from exc
    if horizon < 1:
        raise SpecError(f"horizon must be positive, got {horizon}")
    kernels = {
        role: _kernels_from_entry(role, doc.get(role), horizon, alphabets)
        for role in KERNEL_ROLES
    }
    return SystemSpec(
        horizon=horizon,
        alphabets=alphabets,
        message_prior=prior,
        state_kernels=tuple(kernels["state"]),
        encoder_kernels=tuple(kernels["encoder"]),
        forward_kernels=tuple(kernels["forward"]),
        feedback_kernels=tuple(kernels["feedback"]),
    )


def system_to_dict(spec: SystemSpec) -> dict:
    """Serialize a SystemSpec to the JSON document form (always dense 'table' kind)."""
    a = spec.alphabets
    doc = {
        "horizon": spec.horizon,
        "alphabets": {
            "message": a.message,
            "input": a.input,
            "output": a.output,
            "state": a.state,
            "feedback": a.feedback,
        },
        "message_prior": spec.message_prior.tolist(),
    }
    groups = {
        "state": spec.state_kernels,
        "encoder": spec.encoder_kernels,
        "forward": spec.forward_kernels,
        "feedback": spec.feedback_kernels,
    }
    for role, kernels in groups.items():
        doc[role] = {"kind": "table", "steps": [k.table.tolist() for k in kernels]}
    return doc


def load_system(path) -> SystemSpec:
    """Read a system document from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: not valid JSON ({exc})") from exc
    return system_from_dict(doc)


def save_system(spec: SystemSpec, path) -> None:
    """Write a system document to a JSON file."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(system_to_dict(spec), fh, sort_keys=True)
        fh.write("\n")
