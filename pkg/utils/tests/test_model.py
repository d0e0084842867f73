#  BSD 3-Clause License
#
#  Copyright (c) 2023., reset-delay-certifier contributors
#  All rights reserved.
#
import numpy as np
import pytest

from reset_delay_certifier.__common__.exceptions import ModelConstructionError
from reset_delay_certifier.__model__.model import (
    ResetSequenceBounds,
    base_system_matrices,
    build_closed_loop,
    build_sampled_data,
    check_minimality,
    delay_free_spectrum,
    make_controller,
    make_plant,
    plant_from_transfer_function,
)


def example1_plant():
    return make_plant([[0.0]], [[1.0]], [[1.0]])


def example2_plant():
    return make_plant([[0.0, 0.0], [1.0, 0.5]], [[1.0], [1.0]], [[0.0, 1.0]])


def test_build_closed_loop_example1():
    model = build_closed_loop(example1_plant(), make_controller(1.4, 0.3, 0.5), 1.0)
    assert model.n == 3
    assert model.n_p == 1
    assert np.array_equal(
        model.A, np.array([[0, 0.5, 0.5], [0, 0, 0], [0, 0, 0]], dtype=float)
    )
    assert np.allclose(
        model.A_d, np.array([[-1.4, 0, 0], [-0.3, 0, 0], [-0.3, 0, 0]]), atol=1e-15
    )
    assert np.array_equal(model.A_R, np.diag([1.0, 1.0, 0.0]))
    assert np.array_equal(model.A_R @ model.A_R, model.A_R)


def test_build_closed_loop_pure_pi():
    model = build_closed_loop(example1_plant(), make_controller(1.4, 0.3, 0.0), 1.0)
    # reset integrator output does not reach the plant
    assert model.A[0, 2] == 0.0
    assert model.A[0, 1] == 1.0


def test_build_closed_loop_example2_structure():
    model = build_closed_loop(example2_plant(), make_controller(1.0, 1.0, 0.5), 0.1)
    assert model.n == 4
    assert np.array_equal(model.A[:2, :2], np.array([[0.0, 0.0], [1.0, 0.5]]))
    assert np.array_equal(model.A[:2, 2:], np.array([[0.5, 0.5], [0.5, 0.5]]))
    assert np.array_equal(model.A[2:, :], np.zeros((2, 4)))
    assert np.array_equal(model.A_d[:2, :2], -np.array([[0.0, 1.0], [0.0, 1.0]]))
    assert np.array_equal(model.A_d[2:, :2], -np.array([[0.0, 1.0], [0.0, 1.0]]))
    assert np.array_equal(model.A_d[:, 2:], np.zeros((4, 2)))


def test_build_sampled_data_example1():
    model = build_sampled_data(example1_plant(), make_controller(1.4, 0.3, 0.5), 1.0)
    assert model.n == 2
    assert np.array_equal(model.Lambda, np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert np.allclose(model.Lambda_d, np.array([[-1.4, 0.0], [-0.3, 0.0]]))
    assert np.array_equal(model.K, np.array([[0.0, 0.0], [0.0, -0.5]]))


def test_build_sampled_data_structure():
    model = build_sampled_data(example2_plant(), make_controller(1.0, 1.0, 0.5), 0.1)
    assert model.Lambda.shape == (3, 3)
    assert np.array_equal(model.Lambda[-1], np.zeros(3))
    assert np.array_equal(model.Lambda_d[:, -1], np.zeros(3))
    assert np.count_nonzero(model.K) == 1
    assert model.K[2, 2] == -0.5
    eig_lambda = np.sort_complex(np.linalg.eigvals(model.Lambda))
    eig_expected = np.sort_complex(np.append(np.linalg.eigvals(example2_plant().A_p), 0))
    assert np.allclose(eig_lambda, eig_expected)

    no_reset = build_sampled_data(
        example2_plant(), make_controller(1.0, 1.0, 0.0), 0.1
    )
    assert np.array_equal(no_reset.K, np.zeros((3, 3)))


def test_model_construction_errors():
    with pytest.raises(ModelConstructionError):
        make_plant([[0.0, 1.0]], [[1.0]], [[1.0]])
    with pytest.raises(ModelConstructionError):
        make_plant([[0.0]], [[1.0, 1.0]], [[1.0]])
    with pytest.raises(ModelConstructionError):
        make_plant([[0.0, 0.0], [0.0, 0.0]], [[1.0]], [[1.0, 0.0]])
    with pytest.raises(ModelConstructionError):
        make_controller(1.0, 1.0, 1.5)
    with pytest.raises(ModelConstructionError):
        build_closed_loop(example1_plant(), make_controller(1.4, 0.3, 0.5), 0.0)
    with pytest.raises(ModelConstructionError):
        ResetSequenceBounds(1.0, 0.5)
    # model errors are still ValueErrors
    with pytest.raises(ValueError):
        make_controller(1.0, 1.0, -0.1)


def test_plant_from_transfer_function():
    plant = plant_from_transfer_function([1.0], [1.0, 0.0])
    assert plant.n_p == 1
    assert np.allclose(plant.A_p, 0.0)
    assert np.isclose((plant.C_p @ plant.B_p).item(), 1.0)
    assert check_minimality(plant) == (True, True)
    with pytest.raises(ModelConstructionError):
        plant_from_transfer_function([1.0, 0.0], [1.0, 1.0])

    # (s + 1) / ((s + 1)(s + 2)) realizes as the first-order lag 1 / (s + 2)
    plant = plant_from_transfer_function([1.0, 1.0], [1.0, 3.0, 2.0])
    assert plant.n_p == 1
    assert np.allclose(plant.A_p, -2.0)
    assert np.isclose((plant.C_p @ plant.B_p).item(), 1.0)
    assert check_minimality(plant) == (True, True)

    plant = plant_from_transfer_function([2.0, 1.0], [1.0, 3.0, 2.0])
    assert plant.n_p == 2
    assert np.allclose(np.sort(np.linalg.eigvals(plant.A_p).real), [-2.0, -1.0])
    for num, den in (([1.0, 0.0, 0.0], [1.0, 1.0]), ([0.0], [1.0, 1.0])):
        with pytest.raises(ModelConstructionError):
            plant_from_transfer_function(num, den)


def test_base_system_and_spectrum():
    model = build_closed_loop(example1_plant(), make_controller(1.4, 0.3, 0.5), 1.0)
    A, A_d = base_system_matrices(model)
    assert np.array_equal(A, model.A)
    A[0, 0] = 42.0
    assert model.A[0, 0] == 0.0
    spectrum = delay_free_spectrum(model)
    assert np.allclose(
        np.sort_complex(spectrum), np.sort_complex(np.linalg.eigvals(model.A + model.A_d))
    )
