import numpy as np
import pytest

from arrowlab import _verlet


@pytest.fixture(scope="session")
def warm_kernel():
    """Compile the jitted integrator once so timed tests measure physics,
    not JIT latency."""
    pos = np.array([[5 << 20, 5 << 20]], dtype=np.int64)
    prev = pos.copy()
    _verlet.run_steps(pos, prev, 1, 1 << 20, 4 << 20, 1 << 20, 1 << 20,
                      10 << 20, 10 << 20, 256)
    return True
