"""Shared fixtures and numerical helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from muntzfit.basis import ExponentBounds, MuntzModel


def make_model(mus, coeffs, bounds=(0.1, 3.0), angular=None) -> MuntzModel:
    """Model whose effective exponents equal ``mus`` exactly."""
    return MuntzModel.from_exponents(
        np.asarray(mus, float), np.asarray(coeffs, float),
        ExponentBounds(*bounds), angular,
    )


def random_model(rng, K, bounds=(0.1, 3.0), angular=None) -> MuntzModel:
    b = ExponentBounds(*bounds)
    margin = 0.05 * b.width
    mus = rng.uniform(b.mu_min + margin, b.mu_max - margin, K)
    coeffs = rng.normal(0.0, 1.0, K)
    return MuntzModel.from_exponents(mus, coeffs, b, angular)


def central_diff(f, x0, h=1e-6):
    """Central finite difference of a scalar function over a flat vector."""
    x0 = np.asarray(x0, dtype=float)
    g = np.empty_like(x0)
    for i in range(x0.size):
        e = np.zeros_like(x0)
        e[i] = h
        g[i] = (f(x0 + e) - f(x0 - e)) / (2.0 * h)
    return g


def assert_grad_close(analytic, numeric, rtol=1e-4, atol=1e-8):
    analytic = np.asarray(analytic, float)
    numeric = np.asarray(numeric, float)
    scale = np.maximum(np.abs(numeric), np.abs(analytic))
    err = np.abs(analytic - numeric)
    ok = err <= atol + rtol * scale
    assert ok.all(), (
        f"gradient mismatch: analytic={analytic[~ok]} numeric={numeric[~ok]} "
        f"rel={(err / np.maximum(scale, 1e-300))[~ok]}"
    )


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))
