import math

import numpy as np
import pytest

from cimeter import geometry
from cimeter.errors import InputError
from cimeter.geometry import (
    DiracDiscrete,
    DistanceInduced,
    Euclidean,
    EuclideanPower,
    Gaussian,
    GaussianDensity,
    KernelInduced,
    Laplacian,
    Product,
    check_negative_type,
    distance_induced_kernel,
    distance_matrix,
    eval_kernel,
    eval_semimetric,
    gram_matrix,
    kernel_induced_semimetric,
    median_bandwidth,
    quadratic_form_check,
)


def test_euclidean_345():
    assert eval_semimetric(Euclidean(), (0.0, 0.0), (3.0, 4.0)) == pytest.approx(5.0)


def test_kernel_induced_semimetric_values():
    rho = kernel_induced_semimetric(Gaussian(bandwidth=1.0))
    assert eval_semimetric(rho, 0.0, 0.0) == 0.0
    assert eval_semimetric(rho, 0.0, 1.0) == pytest.approx(1.0 - math.exp(-0.5), abs=1e-15)


def test_distance_induced_kernel_values():
    k = distance_induced_kernel(Euclidean(), 0.0)
    assert eval_kernel(k, 2.0, 3.0) == pytest.approx(4.0)
    # the one-dimensional Euclidean case reads |x| + |x'| - |x - x'|
    assert eval_kernel(k, -2.0, 3.0) == pytest.approx(2.0 + 3.0 - 5.0, abs=1e-15)
    assert eval_kernel(k, 0.0, 0.0) == 0.0


def test_gaussian_diag_and_dirac():
    assert eval_kernel(Gaussian(bandwidth=2.0), (1.0, 2.0), (1.0, 2.0)) == 1.0
    assert eval_kernel(DiracDiscrete(), "u", "v") == 0.0
    assert eval_kernel(DiracDiscrete(), "u", "u") == 1.0


def test_anchor_evaluates_to_zero_exactly():
    rng = np.random.default_rng(0)
    anchor = rng.normal(size=3)
    k = distance_induced_kernel(Euclidean(), anchor)
    for _ in range(5):
        x = rng.normal(size=3)
        assert eval_kernel(k, anchor, x) == 0.0


def test_round_trip_distance_kernel_distance():
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(20, 2))
    for rho in (Euclidean(), EuclideanPower(alpha=1.5), EuclideanPower(alpha=0.5)):
        k = distance_induced_kernel(rho, rng.normal(size=2))
        back = kernel_induced_semimetric(k)
        for _ in range(10):
            i, j = rng.integers(0, 20, size=2)
            d0 = eval_semimetric(rho, pts[i], pts[j])
            d1 = eval_semimetric(back, pts[i], pts[j])
            assert abs(d0 - d1) <= 1e-12


def test_kernel_induced_is_negative_type():
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(20, 2))
    for k in (Gaussian(bandwidth=1.0), Laplacian(scale=0.7)):
        rho = kernel_induced_semimetric(k)
        res = check_negative_type(rho, pts, trials=50, rng_seed=3)
        assert res.ok, res


def test_gram_matrix_psd_across_specs():
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(25, 3))
    specs = [
        Gaussian(bandwidth=0.8),
        Laplacian(scale=1.2),
        GaussianDensity(bandwidth=0.5),
        distance_induced_kernel(Euclidean(), rng.normal(size=3)),
        distance_induced_kernel(EuclideanPower(alpha=1.3), np.zeros(3)),
    ]
    for spec in specs:
        g = gram_matrix(spec, pts)
        assert np.allclose(g.entries, g.entries.T)
        assert g.psd_defect() >= -geometry.PSD_RTOL * np.trace(g.entries)


def test_product_kernel_gram_psd():
    rng = np.random.default_rng(4)
    a = rng.normal(size=(15, 2))
    b = rng.normal(size=(15, 1))
    spec = Product(Gaussian(bandwidth=1.0), Laplacian(scale=1.0))
    g = gram_matrix(spec, (a, b))
    assert g.psd_defect() >= -geometry.PSD_RTOL * np.trace(g.entries)
    assert eval_kernel(spec, (a[0], b[0]), (a[1], b[1])) == pytest.approx(g.entries[0, 1])


def test_gram_matrix_matches_eval_loop():
    rng = np.random.default_rng(5)
    pts = rng.normal(size=(3, 2))
    g = gram_matrix(Gaussian(bandwidth=1.4), pts).entries
    for i in range(3):
        for j in range(3):
            assert g[i, j] == pytest.approx(
                eval_kernel(Gaussian(bandwidth=1.4), pts[i], pts[j]), abs=1e-14)


def test_gram_matrix_single_point():
    g = gram_matrix(Gaussian(bandwidth=1.0), [[0.5]])
    assert g.entries.shape == (1, 1)
    assert g.entries[0, 0] == 1.0


def test_distance_matrix_values_and_loop():
    d = distance_matrix(Euclidean(), [0.0, 1.0, 3.0]).entries
    assert np.allclose(d, [[0, 1, 3], [1, 0, 2], [3, 2, 0]])
    rng = np.random.default_rng(6)
    pts = rng.normal(size=(4, 3))
    rho = EuclideanPower(alpha=1.5)
    m = distance_matrix(rho, pts).entries
    for i in range(4):
        for j in range(4):
            assert m[i, j] == pytest.approx(eval_semimetric(rho, pts[i], pts[j]), abs=1e-12)
    assert distance_matrix(Euclidean(), [2.5]).entries.tolist() == [[0.0]]


def test_check_negative_type_euclidean_and_square():
    rng = np.random.default_rng(7)
    pts = rng.normal(size=(12, 2))
    assert check_negative_type(Euclidean(), pts, trials=100, rng_seed=0).ok
    assert check_negative_type(EuclideanPower(alpha=2.0), pts, trials=100, rng_seed=0).ok


def test_cubed_distance_is_not_negative_type():
    # |x - x'|^3 on a line: searched as a raw table over fixed point sets
    rng = np.random.default_rng(8)
    violated = False
    for _ in range(20):
        x = rng.normal(size=6)
        cube = np.abs(x[:, None] - x[None, :]) ** 3
        res = quadratic_form_check(cube, trials=200, rng_seed=9)
        if not res.ok:
            violated = True
            break
    assert violated


def test_dimension_mismatch_raises():
    with pytest.raises(InputError):
        eval_semimetric(Euclidean(), (0.0, 0.0), (1.0, 2.0, 3.0))
    with pytest.raises(InputError):
        eval_kernel(Gaussian(bandwidth=1.0), (0.0,), (1.0, 2.0))


def test_empty_points_raise():
    with pytest.raises(InputError):
        gram_matrix(Gaussian(bandwidth=1.0), [])
    with pytest.raises(InputError):
        distance_matrix(Euclidean(), [])


def test_spec_validation():
    with pytest.raises(InputError):
        EuclideanPower(alpha=0.0)
    with pytest.raises(InputError):
        EuclideanPower(alpha=2.5)
    with pytest.raises(InputError):
        Gaussian(bandwidth=-1.0)
    with pytest.raises(InputError):
        GaussianDensity(bandwidth=0.0)


def test_median_bandwidth():
    assert median_bandwidth([0.0, 1.0, 2.0]) == pytest.approx(1.0)
    assert median_bandwidth([3.0]) == 1.0  # no nonzero distances

    rng = np.random.default_rng(10)
    pts = rng.normal(size=(30, 2))
    d = geometry.pairwise_semimetric(Euclidean(), pts)
    vals = d[np.triu_indices_from(d, k=1)]
    assert median_bandwidth(pts) == pytest.approx(np.median(vals[vals > 0]))


def test_negative_type_check_needs_two_points():
    with pytest.raises(InputError):
        check_negative_type(Euclidean(), [1.0], trials=5, rng_seed=0)


def test_dirac_gram_on_labels():
    g = gram_matrix(DiracDiscrete(), np.array(["a", "b", "a"]))
    assert np.allclose(g.entries, [[1, 0, 1], [0, 1, 0], [1, 0, 1]])


def test_kernel_induced_dirac_semimetric():
    rho = kernel_induced_semimetric(DiracDiscrete())
    assert eval_semimetric(rho, "a", "a") == 0.0
    assert eval_semimetric(rho, "a", "b") == 1.0
