import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsedoa import (
    AngularGrid,
    ArraySpec,
    build_sensing_matrix,
    mutual_coherence,
    steering_vector,
)

from oracles import steering_element


def test_broadside_steering_is_uniform():
    a = steering_vector(0.0, ArraySpec(4))
    assert np.allclose(a, 0.5 * np.ones(4))


def test_endfire_steering_alternates_sign():
    a = steering_vector(90.0, ArraySpec(2))
    assert np.allclose(a, np.array([1.0, -1.0]) / np.sqrt(2))


def test_steering_matches_scalar_formula():
    arr = ArraySpec(20)
    a = steering_vector(20.0, arr)
    for m in range(20):
        assert a[m] == pytest.approx(steering_element(20.0, m, 20), abs=1e-15)


def test_steering_rejects_out_of_range():
    with pytest.raises(ValueError):
        steering_vector(91.0, ArraySpec(4))
    with pytest.raises(ValueError):
        steering_vector(-90.5, ArraySpec(4))


@settings(max_examples=50, deadline=None)
@given(
    theta=st.floats(-90.0, 90.0),
    m=st.integers(2, 40),
    spacing=st.floats(0.1, 2.0),
)
def test_steering_unit_norm_and_conjugate_symmetry(theta, m, spacing):
    arr = ArraySpec(m, spacing)
    a = steering_vector(theta, arr)
    assert abs(np.linalg.norm(a) - 1.0) < 1e-12
    assert np.allclose(steering_vector(-theta, arr), a.conj(), atol=1e-14)


def test_grid_from_range_snaps_endpoint():
    g = AngularGrid.from_range(-90.0, 90.0, 0.5)
    assert g.size == 361
    assert g.angles_deg[0] == -90.0
    assert g.angles_deg[-1] == pytest.approx(90.0, abs=1e-9)
    g5 = AngularGrid.from_range(-90.0, 90.0, 5.0)
    assert g5.size == 37


def test_grid_validation():
    with pytest.raises(ValueError):
        AngularGrid(np.array([0.0, 0.0]))  # not strictly increasing
    with pytest.raises(ValueError):
        AngularGrid(np.array([-91.0, 0.0]))
    with pytest.raises(ValueError):
        AngularGrid(np.array([5.0]))  # too short


def test_sensing_matrix_shapes_and_norms(A_coarse, A_fine):
    assert A_coarse.shape == (20, 37)
    assert A_fine.shape == (20, 361)
    for A in (A_coarse, A_fine):
        norms = np.linalg.norm(A.entries, axis=0)
        assert np.abs(norms - 1.0).max() < 1e-12
        for i in (0, A.shape[1] // 2, A.shape[1] - 1):
            expected = steering_vector(A.grid.angles_deg[i], A.array)
            assert np.allclose(A.entries[:, i], expected)


def test_single_angle_steering_matrix():
    # one look direction: the M x 1 matrix is just that steering vector
    arr = ArraySpec(6)
    mat = steering_vector([17.0], arr)
    assert mat.shape == (6, 1)
    assert np.allclose(mat[:, 0], steering_vector(17.0, arr))


def test_mutual_coherence_orthogonal_grid():
    # sin(theta) spaced by 2/M makes half-wavelength columns orthogonal
    M = 8
    sines = -1.0 + 2.0 * np.arange(M) / M
    grid = AngularGrid(np.degrees(np.arcsin(sines)))
    A = build_sensing_matrix(grid, ArraySpec(M))
    assert mutual_coherence(A) < 1e-12


def test_mutual_coherence_duplicate_column_is_one():
    # -90 and +90 degrees alias to the same column at half-wavelength
    grid = AngularGrid(np.array([-90.0, 0.0, 90.0]))
    A = build_sensing_matrix(grid, ArraySpec(8))
    assert mutual_coherence(A) == pytest.approx(1.0, abs=1e-12)


def test_mutual_coherence_increases_with_grid_density():
    arr = ArraySpec(20)
    c_fine = mutual_coherence(
        build_sensing_matrix(AngularGrid.from_range(-45, 45, 1.0), arr)
    )
    c_coarse = mutual_coherence(
        build_sensing_matrix(AngularGrid.from_range(-45, 45, 5.0), arr)
    )
    assert c_fine > c_coarse


def test_mutual_coherence_nondecreasing_under_refinement():
    arr = ArraySpec(20)
    coh = [
        mutual_coherence(
            build_sensing_matrix(AngularGrid.from_range(-50, 50, step), arr)
        )
        for step in (4.0, 2.0, 1.0)  # nested grids
    ]
    assert coh[0] <= coh[1] <= coh[2]


def test_sensing_matrix_rejects_shape_mismatch():
    arr = ArraySpec(4)
    from sparsedoa.geometry import SensingMatrix

    with pytest.raises(ValueError):
        SensingMatrix(
            steering_vector([0.0], arr),  # one column
            arr,
            AngularGrid(np.array([0.0, 10.0])),  # two angles
        )


def test_array_spec_validation():
    with pytest.raises(ValueError):
        ArraySpec(1)
    with pytest.raises(ValueError):
        ArraySpec(4, 0.0)
