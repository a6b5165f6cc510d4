import numpy as np
import pytest

import infoflow as fl
from infoflow.model import make_kernel


def binary_alphabets(message=2, state=2, feedback=2):
    return fl.Alphabets(message=message, input=2, output=2, state=state, feedback=feedback)


def single_use_system(eps):
    """Horizon 1, uniform binary message, x1 = x0, forward BSC(eps), no state/feedback."""
    a = fl.Alphabets(message=2, input=2, output=2, state=1, feedback=1)
    spec = fl.SystemSpec(
        horizon=1,
        alphabets=a,
        message_prior=np.array([0.5, 0.5]),
        state_kernels=(make_kernel("state", 1, a, np.array([[1.0]])),),
        encoder_kernels=(make_kernel("encoder", 1, a, np.eye(2)),),
        forward_kernels=(make_kernel("forward", 1, a, np.array([[1 - eps, eps], [eps, 1 - eps]])),),
        feedback_kernels=(),
    )
    return fl.validate_system(spec)


def random_binary_system(n, seed, **flags):
    dims = fl.Dims(horizon=n, alphabets=binary_alphabets(), **flags)
    return fl.validate_system(fl.random_system(dims, seed))


@pytest.fixture(scope="session")
def bsc_bsc_system():
    return fl.validate_system(fl.canonical("bsc-bsc", {"eps_f": 0.1, "eps_b": 0.2, "n": 3}))


@pytest.fixture(scope="session")
def random_4096_joint():
    """Seeded all-binary n=3 system (4096 trajectories) with its exact joint."""
    system = random_binary_system(3, seed=42)
    return system, fl.build_joint(system)
