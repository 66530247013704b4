"""Scikit-learn front end: API contract, recovery on synthetic data."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_is_fitted

from muntzfit.estimator import PowerLawRegressor


def _sqrt_data(n=120, seed=0):
    rng = np.random.Generator(np.random.PCG64(seed))
    x = np.sort(rng.uniform(0.01, 1.0, n))
    return x, np.sqrt(x)


class TestApiContract:
    def test_get_set_params_roundtrip(self):
        est = PowerLawRegressor(n_terms=3, epochs=500)
        params = est.get_params()
        assert params["n_terms"] == 3 and params["epochs"] == 500
        est.set_params(epochs=100)
        assert est.epochs == 100

    def test_clone_preserves_params(self):
        est = PowerLawRegressor(n_terms=5, sparsity=0.01, random_state=7)
        c = clone(est)
        assert c.get_params() == est.get_params()

    def test_predict_before_fit_raises(self):
        with pytest.raises(NotFittedError):
            PowerLawRegressor().predict([0.5])

    def test_fit_returns_self_and_sets_attributes(self):
        x, y = _sqrt_data()
        est = PowerLawRegressor(n_terms=3, epochs=300)
        assert est.fit(x, y) is est
        check_is_fitted(est)
        assert est.exponents_.shape == (3,)
        assert est.coefficients_.shape == (3,)
        assert np.isscalar(est.dominant_exponent_) or est.dominant_exponent_.ndim == 0

    def test_column_vector_input_accepted(self):
        x, y = _sqrt_data()
        est = PowerLawRegressor(n_terms=2, epochs=200).fit(x[:, None], y)
        assert est.predict(x[:5, None]).shape == (5,)

    def test_multi_feature_rejected(self):
        with pytest.raises(ValueError, match="single feature"):
            PowerLawRegressor().fit(np.ones((10, 2)), np.ones(10))

    def test_nonpositive_x_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            PowerLawRegressor().fit([-0.1, 0.5], [1.0, 1.0])


class TestRecovery:
    def test_recovers_sqrt_exponent(self):
        x, y = _sqrt_data()
        est = PowerLawRegressor(n_terms=3, epochs=5000, random_state=0).fit(x, y)
        assert est.dominant_exponent_ == pytest.approx(0.5, rel=0.05)

    def test_predict_matches_training_target(self):
        x, y = _sqrt_data()
        est = PowerLawRegressor(n_terms=3, epochs=5000, random_state=0).fit(x, y)
        pred = est.predict(x)
        assert np.max(np.abs(pred - y)) < 0.02

    def test_score_is_r2_and_high(self):
        x, y = _sqrt_data()
        est = PowerLawRegressor(n_terms=3, epochs=5000, random_state=0).fit(x, y)
        assert est.score(x, y) > 0.999

    def test_deterministic_under_random_state(self):
        x, y = _sqrt_data()
        a = PowerLawRegressor(n_terms=3, epochs=300, random_state=1).fit(x, y)
        b = PowerLawRegressor(n_terms=3, epochs=300, random_state=1).fit(x, y)
        np.testing.assert_array_equal(a.exponents_, b.exponents_)
        np.testing.assert_array_equal(a.coefficients_, b.coefficients_)
