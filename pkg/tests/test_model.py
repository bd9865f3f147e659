import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from momentpoly.errors import EmptySampleError, InputError, ModelLoadError
from momentpoly.events import EventSet
from momentpoly.model import FitConfig, PolyModel, Preprocessor, fit, fit_report
from momentpoly.tensor_index import basis_size, get_basis
from oracles import naive_powers


def point_mass_model():
    events = EventSet(np.array([[1.0], [-1.0]]), np.array([1.0, -1.0]))
    return fit(events, FitConfig(degree=1, preproc="none"))


def test_constant_model():
    c = np.zeros(basis_size(2, 3))
    c[0] = 0.7
    m = PolyModel(2, 3, Preprocessor.identity(2), c)
    assert m.evaluate([3.0, -9.0]) == 0.7
    np.testing.assert_array_equal(m.evaluate(np.random.default_rng(0).normal(size=(5, 2))), 0.7)


def test_point_mass_fit():
    m = point_mass_model()
    np.testing.assert_allclose(m.coefficients, [0, 1], atol=1e-14)
    assert m.evaluate([0.3]) == pytest.approx(0.3, abs=1e-15)


def test_two_dim_arithmetic():
    c = np.zeros(basis_size(2, 2))
    c[0], c[1] = 0.5, 2.0
    m = PolyModel(2, 2, Preprocessor.identity(2), c)
    assert m.evaluate([1.0, 1.0]) == 2.5


def test_evaluate_errors():
    m = point_mass_model()
    with pytest.raises(InputError):
        m.evaluate([1.0, 2.0])
    with pytest.raises(InputError):
        m.evaluate([np.nan])


def test_degree_zero_balanced_is_zero(rng):
    x = rng.normal(size=(40, 2))
    events = EventSet(x, np.r_[np.ones(20), -np.ones(20)])
    m = fit(events, FitConfig(degree=0))
    assert m.coefficients.tolist() == [0.0]


def test_empty_class():
    events = EventSet(np.ones((3, 1)), np.ones(3))
    with pytest.raises(EmptySampleError):
        fit(events, FitConfig(degree=1))


def test_binary_labels_checked():
    events = EventSet(np.ones((2, 1)), np.array([1.0, 0.5]))
    with pytest.raises(InputError):
        fit(events, FitConfig(degree=1))


def test_round_trip_point_mass(tmp_path):
    m = point_mass_model()
    m.save(tmp_path / "m.json")
    m2 = PolyModel.load(tmp_path / "m.json")
    assert m2.evaluate([0.3]) == m.evaluate([0.3]) == pytest.approx(0.3)
    doc = json.loads((tmp_path / "m.json").read_text())
    assert set(doc) >= {"format_version", "dimension", "degree", "preprocessor", "coefficients", "metadata"}
    assert set(doc["metadata"]) >= {"n_signal", "n_background", "lambda", "condition_estimate", "seed"}
    assert doc["ordering"] == "lexical"


@given(st.integers(1, 3), st.integers(0, 5), st.sampled_from(["none", "affine", "squash"]), st.integers(0, 2**32))
def test_round_trip_bit_exact(d, degree, mode, seed):
    rng = np.random.default_rng(seed)
    pre = Preprocessor.fit(mode, rng.normal(size=(10, d)) * rng.uniform(0.1, 5))
    m = PolyModel(d, degree, pre, rng.normal(size=basis_size(d, degree)) * 10.0 ** rng.integers(-5, 5))
    m2 = PolyModel.loads(m.dumps())
    x = rng.normal(size=(100, d))
    assert np.array_equal(m.evaluate(x), m2.evaluate(x))
    assert np.array_equal(m.evaluate(x), m.evaluate(x))


def test_load_rejects_short_coefficients():
    doc = point_mass_model().to_document()
    doc["coefficients"] = doc["coefficients"][:-1]
    with pytest.raises(ModelLoadError, match="coefficients"):
        PolyModel.from_document(doc)


def test_load_rejects_unknown_version():
    doc = point_mass_model().to_document()
    doc["format_version"] = 99
    with pytest.raises(ModelLoadError, match="99"):
        PolyModel.from_document(doc)


@pytest.mark.parametrize("text", ["not json", "[]", '{"format_version": 1}'])
def test_load_rejects_garbage(text):
    with pytest.raises(ModelLoadError):
        PolyModel.loads(text)


@pytest.mark.parametrize("d,degree", [(1, 8), (2, 6), (3, 8)])
def test_incremental_evaluation_matches_naive(d, degree, rng):
    c = rng.normal(size=basis_size(d, degree))
    m = PolyModel(d, degree, Preprocessor.identity(d), c)
    x = rng.uniform(-1, 1, size=(50, d))
    np.testing.assert_allclose(m.evaluate(x), naive_powers(x, get_basis(d, degree).exponents) @ c,
                               rtol=1e-12, atol=1e-12 * np.abs(c).sum())


@pytest.mark.parametrize("d,degree", [(1, 3), (2, 2), (2, 3)])
def test_regression_recovers_polynomial(d, degree, rng):
    basis = get_basis(d, degree)
    true = rng.normal(size=basis.size)
    z = rng.uniform(-1, 1, size=(5000, d))
    y = naive_powers(z, basis.exponents) @ true
    m = fit(EventSet(z, y), FitConfig(degree=degree, preproc="none", mode="regression"))
    np.testing.assert_allclose(m.coefficients, true, rtol=1e-8, atol=1e-8 * np.abs(true).max())


def test_affine_rescaling_invariance(rng):
    x = np.vstack([rng.normal(0.3, 1, size=(200, 2)), rng.normal(-0.3, 1, size=(200, 2))])
    labels = np.r_[np.ones(200), -np.ones(200)]
    scale, shift = np.array([3.0, 0.2]), np.array([-5.0, 11.0])
    m1 = fit(EventSet(x, labels), FitConfig(degree=4))
    m2 = fit(EventSet(x * scale + shift, labels), FitConfig(degree=4))
    probe = rng.normal(size=(30, 2))
    np.testing.assert_allclose(m1.evaluate(probe), m2.evaluate(probe * scale + shift), atol=1e-9)


def test_preprocessors():
    x = np.array([[0.0, 10.0], [4.0, 10.0], [2.0, 10.0]])
    aff = Preprocessor.fit("affine", x)
    np.testing.assert_allclose(aff.transform(x)[:, 0], [-1, 1, 0])
    assert aff.scales[1] == 1.0  # constant feature keeps a positive scale
    np.testing.assert_allclose(aff.inverse(aff.transform(x)), x)
    sq = Preprocessor.fit("squash", np.array([[0.0], [1e6], [-3.0], [2.0]]))
    z = sq.transform(np.array([[1e9], [-1e9], [0.5]]))
    assert np.all(np.abs(z) <= 1)
    assert z[0, 0] > z[2, 0] > z[1, 0]
    with pytest.raises(InputError):
        Preprocessor("affine", (0.0,), (0.0,))


def test_fit_report_fields(rng):
    x = rng.normal(size=(100, 3))
    _, rep = fit_report(EventSet(x, np.r_[np.ones(50), -np.ones(50)]), FitConfig(degree=2))
    assert rep["basis_size"] == 10
    assert rep["n_signal"] == rep["n_background"] == 50
    for key in ("condition_estimate", "residual_norm", "accumulate_seconds", "assemble_seconds", "solve_seconds"):
        assert key in rep


def test_affine_clamps_outside_training_box():
    pre = Preprocessor.fit("affine", np.array([[0.0], [4.0]]))
    assert pre.clip
    np.testing.assert_array_equal(pre.transform(np.array([[-10.0], [2.0], [9.0]]))[:, 0], [-1.0, 0.0, 1.0])
    c = np.zeros(basis_size(1, 3))
    c[3] = 1.0
    m = PolyModel(1, 3, pre, c)
    assert m.evaluate([100.0]) == m.evaluate([4.0]) == 1.0
    assert PolyModel.loads(m.dumps()).evaluate([100.0]) == 1.0
    legacy = m.to_document()
    del legacy["preprocessor"]["clip"]
    assert PolyModel.from_document(legacy).evaluate([100.0]) == pytest.approx(49.0 ** 3)
