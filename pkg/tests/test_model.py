import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import infoflow as fl
from infoflow.model import kernel_parents, make_kernel

from conftest import binary_alphabets, random_binary_system


def test_trajectory_count_n1_all_binary():
    system = random_binary_system(1, seed=0)
    assert system.trajectory_count == 2 * (2 * 2 * 2) ** 1 * 2**0 == 16


def test_trajectory_count_n3_all_binary():
    system = random_binary_system(3, seed=0)
    assert system.trajectory_count == 2 * 8**3 * 4 == 4096


def test_row_sum_violation_names_kernel_time_and_parents():
    spec = fl.random_system(fl.Dims(horizon=2, alphabets=binary_alphabets()), seed=1)
    table = spec.forward_kernels[1].table.copy()
    table[3, 0] += 0.01  # now sums to 1.01
    bad = make_kernel("forward", 2, spec.alphabets, table)
    broken = fl.SystemSpec(
        horizon=2,
        alphabets=spec.alphabets,
        message_prior=spec.message_prior,
        state_kernels=spec.state_kernels,
        encoder_kernels=spec.encoder_kernels,
        forward_kernels=(spec.forward_kernels[0], bad),
        feedback_kernels=spec.feedback_kernels,
    )
    with pytest.raises(fl.SpecError) as err:
        fl.validate_system(broken)
    message = str(err.value)
    assert "forward" in message and "time 2" in message
    assert str(bad.parent_tuple(3, spec.alphabets)) in message


def test_negative_probability_rejected():
    a = fl.Alphabets(message=2, input=2, output=2, state=1, feedback=1)
    table = np.array([[1.5, -0.5], [0.0, 1.0]])
    spec = fl.SystemSpec(
        horizon=1,
        alphabets=a,
        message_prior=np.array([0.5, 0.5]),
        state_kernels=(make_kernel("state", 1, a, np.array([[1.0]])),),
        encoder_kernels=(make_kernel("encoder", 1, a, np.eye(2)),),
        forward_kernels=(make_kernel("forward", 1, a, table),),
        feedback_kernels=(),
    )
    with pytest.raises(fl.SpecError, match="negative"):
        fl.validate_system(spec)


def test_kernel_count_mismatch():
    spec = fl.random_system(fl.Dims(horizon=3, alphabets=binary_alphabets()), seed=2)
    truncated = fl.SystemSpec(
        horizon=3,
        alphabets=spec.alphabets,
        message_prior=spec.message_prior,
        state_kernels=spec.state_kernels,
        encoder_kernels=spec.encoder_kernels,
        forward_kernels=spec.forward_kernels[:2],
        feedback_kernels=spec.feedback_kernels,
    )
    with pytest.raises(fl.SpecError, match="forward kernels"):
        fl.validate_system(truncated)


def test_budget_fails_fast():
    spec = fl.random_system(fl.Dims(horizon=3, alphabets=binary_alphabets()), seed=3)
    with pytest.raises(fl.BudgetError):
        fl.validate_system(spec, budget=1000)


def test_bad_prior_rejected():
    spec = fl.random_system(fl.Dims(horizon=1, alphabets=binary_alphabets()), seed=4)
    skewed = fl.SystemSpec(
        horizon=1,
        alphabets=spec.alphabets,
        message_prior=np.array([0.6, 0.6]),
        state_kernels=spec.state_kernels,
        encoder_kernels=spec.encoder_kernels,
        forward_kernels=spec.forward_kernels,
        feedback_kernels=spec.feedback_kernels,
    )
    with pytest.raises(fl.SpecError, match="prior"):
        fl.validate_system(skewed)


# ---------------------------------------------------------------------------
# Shorthand expansion
# ---------------------------------------------------------------------------


def test_memoryless_forward_bsc_rows():
    a = binary_alphabets(state=1)
    sh = fl.StationaryShorthand("memoryless-forward", np.array([[0.9, 0.1], [0.1, 0.9]]))
    kernels = fl.expand_shorthand(sh, 2, a)
    k2 = kernels[1]
    assert k2.parents == kernel_parents("forward", 2)
    sizes = (2, 2, 2, 1, 1)  # y1, x1, x2, s1, s2
    nd = k2.table.reshape(sizes + (2,))
    for y1 in range(2):
        for x1 in range(2):
            assert np.allclose(nd[y1, x1, 0, 0, 0], [0.9, 0.1])
            assert np.allclose(nd[y1, x1, 1, 0, 0], [0.1, 0.9])


def test_memoryless_forward_identity_rows():
    a = binary_alphabets(state=1)
    sh = fl.StationaryShorthand("memoryless-forward", np.eye(2))
    for kernel in fl.expand_shorthand(sh, 3, a):
        sizes = tuple(a.size_of(name) for name, _ in kernel.parents)
        nd = kernel.table.reshape(sizes + (2,))
        x_axis = kernel.parents.index(("x", kernel.time_index))
        moved = np.moveaxis(nd, x_axis, 0)
        assert np.array_equal(moved[0, ..., :], np.broadcast_to([1.0, 0.0], moved[0].shape))
        assert np.array_equal(moved[1, ..., :], np.broadcast_to([0.0, 1.0], moved[1].shape))


def test_markov_state_uniform_rows():
    a = binary_alphabets()
    sh = fl.StationaryShorthand("markov-state", np.full((2, 2), 0.5))
    for kernel in fl.expand_shorthand(sh, 3, a):
        assert np.array_equal(kernel.table, np.full(kernel.table.shape, 0.5))


def test_shorthand_dimension_mismatch():
    a = binary_alphabets(state=3)
    sh = fl.StationaryShorthand("memoryless-forward", np.eye(2))  # needs 2*3 rows
    with pytest.raises(fl.SpecError, match="shape"):
        fl.expand_shorthand(sh, 2, a)


def test_expanded_shorthand_validates():
    a = binary_alphabets(state=1)
    spec = fl.canonical("bsc-bsc", {"n": 2})
    assert fl.validate_system(spec).trajectory_count == 2 * 8**2 * 2


# ---------------------------------------------------------------------------
# Trajectory indexing
# ---------------------------------------------------------------------------


def test_all_zero_trajectory_is_index_zero():
    system = random_binary_system(3, seed=5)
    assert fl.trajectory_index(system, (0,) * len(system.coords)) == 0


def test_all_max_trajectory_is_last_index():
    system = random_binary_system(3, seed=5)
    top = tuple(size - 1 for size in system.shape)
    assert fl.trajectory_index(system, top) == system.trajectory_count - 1


def test_round_trip_is_identity_for_all_4096_indices():
    system = random_binary_system(3, seed=5)
    for index in range(system.trajectory_count):
        assert fl.trajectory_index(system, fl.trajectory_from_index(system, index)) == index


def test_out_of_range_symbol_rejected():
    system = random_binary_system(2, seed=6)
    bad = [0] * len(system.coords)
    bad[1] = 2
    with pytest.raises(fl.SpecError, match="out of range"):
        fl.trajectory_index(system, bad)


@settings(max_examples=20, deadline=None)
@given(
    horizon=st.integers(1, 3),
    sizes=st.tuples(*[st.integers(1, 3)] * 5),
    data=st.data(),
)
def test_round_trip_property(horizon, sizes, data):
    a = fl.Alphabets(*sizes)
    system = fl.validate_system(fl.random_system(fl.Dims(horizon=horizon, alphabets=a), seed=0))
    index = data.draw(st.integers(0, system.trajectory_count - 1))
    trajectory = fl.trajectory_from_index(system, index)
    assert fl.trajectory_index(system, trajectory) == index


# ---------------------------------------------------------------------------
# JSON documents
# ---------------------------------------------------------------------------


def test_document_round_trip_is_bit_exact(tmp_path):
    spec = fl.random_system(fl.Dims(horizon=2, alphabets=fl.Alphabets(3, 2, 2, 2, 2)), seed=7)
    path = tmp_path / "system.json"
    fl.save_system(spec, path)
    loaded = fl.load_system(path)
    assert loaded.horizon == spec.horizon
    assert loaded.alphabets == spec.alphabets
    assert np.array_equal(loaded.message_prior, spec.message_prior)
    for got, want in zip(loaded.kernels_in_order(), spec.kernels_in_order()):
        assert got.parents == want.parents
        assert np.array_equal(got.table, want.table)


def test_document_with_shorthand_kinds():
    doc = {
        "horizon": 2,
        "alphabets": {"message": 2, "input": 2, "output": 2, "state": 2, "feedback": 2},
        "message_prior": [0.5, 0.5],
        "state": {"kind": "markov", "table": [[0.7, 0.3], [0.3, 0.7]], "initial": [1.0, 0.0]},
        "encoder": {"kind": "stationary", "table": [[1, 0]] * 4 + [[0, 1]] * 4},
        "forward": {"kind": "memoryless", "table": [[0.9, 0.1]] * 2 + [[0.1, 0.9]] * 2},
        "feedback": {"kind": "memoryless", "table": [[0.8, 0.2], [0.2, 0.8]]},
    }
    system = fl.validate_system(fl.system_from_dict(doc))
    assert np.array_equal(system.spec.state_kernels[0].table, [[1.0, 0.0]])
    assert system.trajectory_count == 2 * (2 * 2 * 2) ** 2 * 2


def test_malformed_document_rejected():
    with pytest.raises(fl.SpecError, match="malformed"):
        fl.system_from_dict({"horizon": 2})


def test_missing_step_rejected():
    doc = fl.system_to_dict(fl.canonical("bsc-bsc", {"n": 2}))
    doc["encoder"]["steps"] = doc["encoder"]["steps"][:1]
    with pytest.raises(fl.SpecError, match="steps"):
        fl.system_from_dict(doc)


def test_not_json_rejected(tmp_path):
    path = tmp_path / "junk.json"
    path.write_text("not json at all {")
    with pytest.raises(fl.SpecError, match="JSON"):
        fl.load_system(path)


def test_tables_are_immutable_after_validation():
    system = random_binary_system(1, seed=8)
    with pytest.raises(ValueError):
        system.spec.forward_kernels[0].table[0, 0] = 0.5
