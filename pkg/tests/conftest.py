import numpy as np
import pytest

from sparsedoa import (
    AngularGrid,
    ArraySpec,
    SourceScenario,
    build_sensing_matrix,
)


@pytest.fixture(scope="session")
def array20():
    return ArraySpec(20)


@pytest.fixture(scope="session")
def grid_half_deg():
    return AngularGrid.from_range(-90.0, 90.0, 0.5)


@pytest.fixture(scope="session")
def grid_five_deg():
    return AngularGrid.from_range(-90.0, 90.0, 5.0)


@pytest.fixture(scope="session")
def A_fine(array20, grid_half_deg):
    return build_sensing_matrix(grid_half_deg, array20)


@pytest.fixture(scope="session")
def A_coarse(array20, grid_five_deg):
    return build_sensing_matrix(grid_five_deg, array20)


@pytest.fixture(scope="session")
def two_source_scenario():
    """Two well-separated sources, magnitudes 22 and 20 dB."""
    return SourceScenario.from_db([2.0, 75.0], [22.0, 20.0])


@pytest.fixture(scope="session")
def three_source_scenario():
    """Close pair at -3 and 2 degrees plus a source at 75 degrees."""
    return SourceScenario.from_db([-3.0, 2.0, 75.0], [12.0, 22.0, 20.0])


def random_steering_instance(rng, M, N, L, snr_db, k_sources=2):
    """Random on-grid scenario -> (SensingMatrix, Y) for solver tests."""
    from sparsedoa import synthesize

    grid = AngularGrid.from_range(-90.0, 90.0, 180.0 / (N - 1))
    array = ArraySpec(M)
    A = build_sensing_matrix(grid, array)
    idx = rng.choice(N, size=k_sources, replace=False)
    mags = rng.uniform(0.5, 2.0, size=k_sources)
    scenario = SourceScenario(grid.angles_deg[np.sort(idx)], mags)
    seed = int(rng.integers(0, 2**63 - 1))
    snaps, _ = synthesize(scenario, array, L, snr_db, seed)
    return A, snaps.data
