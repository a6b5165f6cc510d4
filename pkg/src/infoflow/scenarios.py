"""Seeded random systems and canonical closed-form systems for verification runs.

Random kernel rows are uniform on the probability simplex (normalized i.i.d.
exponentials).  Encoders are always drawn deterministic - a uniformly random
function of their parents - because the conservation decomposition only holds
when the channel inputs are determined by message, feedback and state; the
engine still accepts stochastic encoders and will report the broken identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    Alphabets,
    BudgetError,
    ConditionalKernel,
    DEFAULT_BUDGET,
    SpecError,
    StationaryShorthand,
    SystemSpec,
    expand_rows,
    expand_shorthand,
    kernel_parents,
    make_kernel,
)


@dataclass(frozen=True)
class Dims:
    """Shape of a generated system plus structural flags.

    noiseless_feedback forces e_i = y_i exactly (requires matching alphabet
    sizes); feedback_blind_encoder makes encoder rows constant in every
    feedback coordinate; state_blind makes both the forward channel and the
    encoder constant in every state coordinate.
    """

    horizon: int
    alphabets: Alphabets
    feedback_blind_encoder: bool = False
    state_blind: bool = False
    noiseless_feedback: bool = False

    def __post_init__(self):
        if not isinstance(self.horizon, int) or self.horizon < 1:
            raise SpecError(f"horizon must be a positive integer, got {self.horizon!r}")
        if self.noiseless_feedback and self.alphabets.feedback != self.alphabets.output:
            raise SpecError(
                "noiseless feedback needs matching feedback/output alphabets, got "
                f"{self.alphabets.feedback} != {self.alphabets.output}"
            )


def _rng(seed: int) -> np.random.Generator:
    # Philox is counter-based, so streams are stable across platforms.
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def _simplex_rows(rng: np.random.Generator, n_rows: int, width: int) -> np.ndarray:
    rows = rng.standard_exponential((n_rows, width))
    rows /= rows.sum(axis=1, keepdims=True)
    return rows


def _unit_rows(choices: np.ndarray, width: int) -> np.ndarray:
    return np.eye(width, dtype=np.float64)[np.asarray(choices, dtype=np.intp)]


def _hist_count(parents, alphabets: Alphabets) -> int:
    count = 1
    for name, _ in parents:
        count *= alphabets.size_of(name)
    return count


def random_system(dims: Dims, seed: int, budget: int = DEFAULT_BUDGET) -> SystemSpec:
    """Draw a full system; identical (dims, seed) gives an identical spec."""
    a = dims.alphabets
    n = dims.horizon
    count = a.message * (a.state * a.input * a.output) ** n * a.feedback ** max(n - 1, 0)
    if count > budget:
        raise BudgetError(f"{count} trajectories exceed the enumeration budget of {budget}")
    rng = _rng(seed)

    prior = _simplex_rows(rng, 1, a.message)[0]

    state_kernels = []
    encoder_kernels = []
    forward_kernels = []
    feedback_kernels = []
    for i in range(1, n + 1):
        state_parents = kernel_parents("state", i)
        state_kernels.append(
            make_kernel("state", i, a, _simplex_rows(rng, _hist_count(state_parents, a), a.state))
        )

        enc_parents = kernel_parents("encoder", i)
        present = list(enc_parents)
        if dims.feedback_blind_encoder:
            present = [c for c in present if c[0] != "e"]
        if dims.state_blind:
            present = [c for c in present if c[0] != "s"]
        reduced_hist = _hist_count(present, a)
        reduced = _unit_rows(rng.integers(0, a.input, reduced_hist), a.input)
        encoder_kernels.append(
            make_kernel("encoder", i, a, expand_rows(reduced, enc_parents, present, a.input, a))
        )

        fwd_parents = kernel_parents("forward", i)
        if dims.state_blind:
            fwd_present = [c for c in fwd_parents if c[0] != "s"]
            reduced = _simplex_rows(rng, _hist_count(fwd_present, a), a.output)
            table = expand_rows(reduced, fwd_parents, fwd_present, a.output, a)
        else:
            table = _simplex_rows(rng, _hist_count(fwd_parents, a), a.output)
        forward_kernels.append(make_kernel("forward", i, a, table))

        if i < n:
            fb_parents = kernel_parents("feedback", i)
            if dims.noiseless_feedback:
                table = expand_rows(np.eye(a.output), fb_parents, (("y", i),), a.feedback, a)
            else:
                table = _simplex_rows(rng, _hist_count(fb_parents, a), a.feedback)
            feedback_kernels.append(make_kernel("feedback", i, a, table))

    return SystemSpec(
        horizon=n,
        alphabets=a,
        message_prior=prior,
        state_kernels=tuple(state_kernels),
        encoder_kernels=tuple(encoder_kernels),
        forward_kernels=tuple(forward_kernels),
        feedback_kernels=tuple(feedback_kernels),
    )


# ---------------------------------------------------------------------------
# Canonical systems
# ---------------------------------------------------------------------------


def _check_prob(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value}")
    return value


def _bsc_table(eps: float) -> np.ndarray:
    return np.array([[1.0 - eps, eps], [eps, 1.0 - eps]])


def _deterministic_kernel(role: str, i: int, alphabets: Alphabets, fn) -> ConditionalKernel:
    """Tabulate a deterministic law; fn maps a dict of parent values to the child symbol."""
    parents = kernel_parents(role, i)
    sizes = tuple(alphabets.size_of(name) for name, _ in parents)
    child_size = alphabets.size_of({"state": "s", "encoder": "x", "forward": "y", "feedback": "e"}[role])
    n_hist = int(np.prod(sizes)) if sizes else 1
    table = np.zeros((n_hist, child_size))
    for row, values in enumerate(np.ndindex(*sizes) if sizes else [()]):
        env = {coord: int(v) for coord, v in zip(parents, values)}
        table[row, int(fn(env))] = 1.0
    return make_kernel(role, i, alphabets, table)


def _trivial_state(n: int, alphabets: Alphabets):
    sh = StationaryShorthand("markov-state", np.ones((alphabets.state, alphabets.state)) / alphabets.state)
    return tuple(expand_shorthand(sh, n, alphabets))


def _repeat_encoder(n: int, alphabets: Alphabets):
    return tuple(
        _deterministic_kernel("encoder", i, alphabets, lambda env: env[("x0", 0)] % alphabets.input)
        for i in range(1, n + 1)
    )


def _xor_feedback_encoder(n: int, alphabets: Alphabets):
    def fn_at(i):
        def fn(env):
            if i == 1:
                return env[("x0", 0)]
            return env[("x0", 0)] ^ env[("e", i - 1)]

        return fn

    return tuple(_deterministic_kernel("encoder", i, alphabets, fn_at(i)) for i in range(1, n + 1))


def _binary_system(n, forward_sh, feedback_sh, encoder_kernels, state_size=1):
    a = Alphabets(message=2, input=2, output=2, state=state_size, feedback=2)
    return a, SystemSpec(
        horizon=n,
        alphabets=a,
        message_prior=np.array([0.5, 0.5]),
        state_kernels=_trivial_state(n, a),
        encoder_kernels=encoder_kernels(a),
        forward_kernels=tuple(expand_shorthand(forward_sh(a), n, a)),
        feedback_kernels=tuple(expand_shorthand(feedback_sh(a), n, a)),
    )


def _memoryless_forward(table: np.ndarray, alphabets: Alphabets) -> StationaryShorthand:
    # rows over (x_i, s_i): tile the x-indexed table across states
    tiled = np.repeat(table, alphabets.state, axis=0)
    return StationaryShorthand("memoryless-forward", tiled)


def canonical(name: str, params: dict | None = None) -> SystemSpec:
    """Documented closed-form systems used by sweeps and sanity checks.

    Tags: bsc-bsc, identity-noiseless-fb, input-independent, state-flip,
    feedback-blind.  All encoders are deterministic so the expected values
    stay hand-checkable.
    """
    params = dict(params or {})
    n = int(params.pop("n", 3))
    if n < 1:
        raise ValueError(f"horizon must be positive, got {n}")

    def done():
        if params:
            raise ValueError(f"unknown parameters for {name!r}: {sorted(params)}")

    if name == "bsc-bsc":
        eps_f = _check_prob("eps_f", params.pop("eps_f", 0.1))
        eps_b = _check_prob("eps_b", params.pop("eps_b", 0.2))
        done()
        _, spec = _binary_system(
            n,
            lambda a: _memoryless_forward(_bsc_table(eps_f), a),
            lambda a: StationaryShorthand("memoryless-feedback", _bsc_table(eps_b)),
            lambda a: _xor_feedback_encoder(n, a),
        )
        return spec

    if name == "identity-noiseless-fb":
        done()
        _, spec = _binary_system(
            n,
            lambda a: _memoryless_forward(np.eye(2), a),
            lambda a: StationaryShorthand("memoryless-feedback", np.eye(2)),
            lambda a: _repeat_encoder(n, a),
        )
        return spec

    if name == "input-independent":
        done()
        _, spec = _binary_system(
            n,
            lambda a: _memoryless_forward(np.full((2, 2), 0.5), a),
            lambda a: StationaryShorthand("memoryless-feedback", _bsc_table(0.25)),
            lambda a: _xor_feedback_encoder(n, a),
        )
        return spec

    if name == "feedback-blind":
        eps_f = _check_prob("eps_f", params.pop("eps_f", 0.1))
        eps_b = _check_prob("eps_b", params.pop("eps_b", 0.2))
        done()
        _, spec = _binary_system(
            n,
            lambda a: _memoryless_forward(_bsc_table(eps_f), a),
            lambda a: StationaryShorthand("memoryless-feedback", _bsc_table(eps_b)),
            lambda a: _repeat_encoder(n, a),
        )
        return spec

    if name == "state-flip":
        eps = _check_prob("eps", params.pop("eps", 0.1))
        done()
        a = Alphabets(message=2, input=2, output=2, state=2, feedback=1)
        # y_i is x_i XOR s_i pushed through a binary symmetric channel
        rows = np.zeros((4, 2))
        for row, (x, s) in enumerate(np.ndindex(2, 2)):
            clean = x ^ s
            rows[row, clean] = 1.0 - eps
            rows[row, 1 - clean] = eps
        return SystemSpec(
            horizon=n,
            alphabets=a,
            message_prior=np.array([0.5, 0.5]),
            state_kernels=tuple(
                expand_shorthand(StationaryShorthand("markov-state", np.full((2, 2), 0.5)), n, a)
            ),
            encoder_kernels=_repeat_encoder(n, a),
            forward_kernels=tuple(expand_shorthand(StationaryShorthand("memoryless-forward", rows), n, a)),
            feedback_kernels=tuple(
                make_kernel("feedback", i, a, np.ones((_hist_count(kernel_parents("feedback", i), a), 1)))
                for i in range(1, n)
            ),
        )

    raise ValueError(f"unknown canonical system {name!r}")


CANONICAL_NAMES = ("bsc-bsc", "identity-noiseless-fb", "input-independent", "state-flip", "feedback-blind")


# ---------------------------------------------------------------------------
# Alphabet relabeling
# ---------------------------------------------------------------------------


def permute_alphabet(spec: SystemSpec, coord_name: str, perm) -> SystemSpec:
    """Relabel one alphabet by ``perm`` (new label = perm[old]) across the whole spec."""
    perm = np.asarray(perm, dtype=np.intp)
    a = spec.alphabets
    size = a.size_of(coord_name)
    if sorted(perm.tolist()) != list(range(size)):
        raise ValueError(f"not a permutation of 0..{size - 1}: {perm.tolist()}")
    inverse = np.argsort(perm)

    def relabel(kernel: ConditionalKernel) -> ConditionalKernel:
        sizes = tuple(a.size_of(name) for name, _ in kernel.parents)
        child_size = a.size_of(kernel.child[0])
        nd = kernel.table.reshape(sizes + (child_size,))
        for axis, (name, _) in enumerate(kernel.parents):
            if name == coord_name:
                nd = np.take(nd, inverse, axis=axis)
        if kernel.child[0] == coord_name:
            nd = np.take(nd, inverse, axis=-1)
        return make_kernel(kernel.role, kernel.time_index, a, nd.reshape(-1, child_size))

    prior = spec.message_prior
    if coord_name == "x0":
        prior = np.take(prior, inverse)

    return SystemSpec(
        horizon=spec.horizon,
        alphabets=a,
        message_prior=prior,
        state_kernels=tuple(relabel(k) for k in spec.state_kernels),
        encoder_kernels=tuple(relabel(k) for k in spec.encoder_kernels),
        forward_kernels=tuple(relabel(k) for k in spec.forward_kernels),
        feedback_kernels=tuple(relabel(k) for k in spec.feedback_kernels),
    )
