import numpy as np
import pytest

import lqturnpike as lab


@pytest.fixture(scope="session")
def scalar():
    """Canonical scalar instance (system, target, initial state)."""
    return lab.scalar_example()


@pytest.fixture(scope="session")
def rand4():
    """Seeded 4x4 random stable system with companion target and state."""
    sys_ = lab.random_stable(4, 2, 42)
    z, x0 = np.ones(4), np.zeros(4)
    return sys_, z, x0


@pytest.fixture(scope="session")
def scalar_pipeline(scalar):
    """Stationary triple and Riccati solution of the scalar instance."""
    sys_, z, _ = scalar
    return lab.solve_stationary(sys_, z), lab.solve_are(sys_)
