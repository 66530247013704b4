"""Trainable power-law expansion u(x) = sum_k c_k x^mu_k.

Exponents are stored in unconstrained ("raw") form and mapped into an open
interval through a sigmoid, so they can never leave their admissible range
during gradient descent.  All spatial and parameter derivatives are closed
form; nothing here needs automatic differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit, logit

__all__ = [
    "ExponentBounds",
    "MuntzModel",
    "SignedMuntzModel",
    "reparam",
    "effective_exponents",
    "evaluate",
    "d1",
    "d2",
    "param_grads",
    "wedge_eval",
    "wedge_dtheta",
    "wedge_param_grads",
    "signed_eval",
]

RAW_LIMIT = 16.0  # |raw| beyond this sits in sigmoid saturation; clamp at init


@dataclass(frozen=True)
class ExponentBounds:
    """Open interval (mu_min, mu_max) that effective exponents live in."""

    mu_min: float
    mu_max: float

    def __post_init__(self):
        if not self.mu_min < self.mu_max:
            raise ValueError(f"need mu_min < mu_max, got [{self.mu_min}, {self.mu_max}]")

    @property
    def width(self) -> float:
        return self.mu_max - self.mu_min


DEFAULT_BOUNDS = ExponentBounds(0.1, 3.0)


@dataclass(frozen=True)
class MuntzModel:
    """K-term power sum with trainable raw exponents and coefficients.

    ``angular`` selects the polar extension r^mu * sin(mu*theta) (or cos)
    used on wedge domains; ``None`` means the plain 1D form on (0, 1].
    """

    raw_exponents: np.ndarray
    coefficients: np.ndarray
    bounds: ExponentBounds = DEFAULT_BOUNDS
    angular: str | None = None  # None | "sin" | "cos"

    def __post_init__(self):
        raw = np.asarray(self.raw_exponents, dtype=float)
        c = np.asarray(self.coefficients, dtype=float)
        if raw.ndim != 1 or c.shape != raw.shape or raw.size < 1:
            raise ValueError("raw_exponents and coefficients must be equal-length 1D, K >= 1")
        if self.angular not in (None, "sin", "cos"):
            raise ValueError(f"angular must be None, 'sin' or 'cos', got {self.angular!r}")
        object.__setattr__(self, "raw_exponents", raw)
        object.__setattr__(self, "coefficients", c)

    @property
    def K(self) -> int:
        return self.raw_exponents.size

    def with_params(self, raw: np.ndarray, coeffs: np.ndarray) -> "MuntzModel":
        return replace(self, raw_exponents=np.asarray(raw, float), coefficients=np.asarray(coeffs, float))

    @classmethod
    def from_exponents(cls, mus, coeffs, bounds: ExponentBounds | None = None,
                       angular: str | None = None) -> "MuntzModel":
        """Build a model whose effective exponents equal ``mus`` exactly."""
        mus = np.asarray(mus, dtype=float)
        if bounds is None:
            pad = max(1.0, 0.5 * (mus.max() - mus.min() if mus.size > 1 else 1.0))
            bounds = ExponentBounds(float(mus.min()) - pad, float(mus.max()) + pad)
        t = (mus - bounds.mu_min) / bounds.width
        if np.any(t <= 0) or np.any(t >= 1):
            raise ValueError(f"exponents {mus} not strictly inside {bounds}")
        raw = np.clip(logit(t), -RAW_LIMIT, RAW_LIMIT)
        return cls(raw, np.asarray(coeffs, float), bounds, angular)


@dataclass(frozen=True)
class SignedMuntzModel:
    """Even/odd power expansion on all of R: sum a|x|^mu + sum b sign(x)|x|^lam."""

    even_coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    even_exponents: np.ndarray = field(default_factory=lambda: np.zeros(0))
    odd_coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    odd_exponents: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        for name in ("even_coeffs", "even_exponents", "odd_coeffs", "odd_exponents"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.even_coeffs.shape != self.even_exponents.shape:
            raise ValueError("even block length mismatch")
        if self.odd_coeffs.shape != self.odd_exponents.shape:
            raise ValueError("odd block length mismatch")


def reparam(raw, bounds: ExponentBounds):
    """Map raw parameter(s) to effective exponent(s) strictly inside bounds.

    Returns ``(mu, dmu_draw)`` where the second output is the derivative of
    mu with respect to raw, needed to chain loss gradients.
    """
    s = expit(np.asarray(raw, dtype=float))
    mu = bounds.mu_min + bounds.width * s
    dmu_draw = bounds.width * s * (1.0 - s)
    return mu, dmu_draw


def effective_exponents(model: MuntzModel) -> np.ndarray:
    return reparam(model.raw_exponents, model.bounds)[0]


def _powers(x: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """x[:,None] ** mu[None,:] for x > 0, computed as exp(mu log x).

    x == 0 is allowed when every mu > 0 (each power is exactly 0).
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((x.size, mu.size))
    pos = x > 0
    out[pos] = np.exp(np.outer(np.log(x[pos]), mu))
    if not np.all(pos):
        if np.any(x < 0):
            raise ValueError("negative x outside the signed-domain extension")
        if np.any(mu <= 0):
            raise ValueError("x = 0 requires all exponents > 0")
        out[~pos] = 0.0
    return out


def _check_positive(x, what="x"):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0):
        raise ValueError(f"{what} must be strictly positive")
    return x


def evaluate(model: MuntzModel, x) -> np.ndarray:
    """u(x) = sum_k c_k x^mu_k for x in [0, 1] (x = 0 needs mu_k > 0)."""
    if model.angular is not None:
        raise ValueError("angular model: use wedge_eval(model, r, theta)")
    mu, _ = reparam(model.raw_exponents, model.bounds)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return _powers(x, mu) @ model.coefficients


def d1(model: MuntzModel, x) -> np.ndarray:
    """First derivative sum c_k mu_k x^(mu_k - 1); requires x > 0."""
    mu, _ = reparam(model.raw_exponents, model.bounds)
    x = _check_positive(x)
    return _powers(x, mu - 1.0) @ (model.coefficients * mu)


def d2(model: MuntzModel, x) -> np.ndarray:
    """Second derivative sum c_k mu_k (mu_k - 1) x^(mu_k - 2); requires x > 0."""
    mu, _ = reparam(model.raw_exponents, model.bounds)
    x = _check_positive(x)
    return _powers(x, mu - 2.0) @ (model.coefficients * mu * (mu - 1.0))


def param_grads(model: MuntzModel, x):
    """All parameter sensitivities of u, u' and u'' at the given points.

    Returns a dict with (N, K) arrays::

        du_dc, du_draw       for u
        dd1_dc, dd1_draw     for u'
        dd2_dc, dd2_draw     for u''

    The ``*_draw`` entries are already chained through the sigmoid
    reparameterization.  At x -> 0+ with mu > 0 the limit x^mu log x = 0 is
    returned exactly, so a boundary point at 0 never produces NaN.
    """
    mu, dmu_draw = reparam(model.raw_exponents, model.bounds)
    c = model.coefficients
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0):
        raise ValueError("x must be non-negative")
    zero = x == 0
    if np.any(zero) and np.any(mu <= 0):
        raise ValueError("x = 0 requires all exponents > 0")
    logx = np.where(zero, 0.0, np.log(np.where(zero, 1.0, x)))[:, None]

    xm = _powers(x, mu)
    du_dc = xm
    du_dmu = c * xm * logx  # 0 at x=0 since xm row is 0 there

    out = {"du_dc": du_dc, "du_draw": du_dmu * dmu_draw}
    if np.any(zero):
        # derivatives below need x > 0; callers exclude 0 for those
        out["dd1_dc"] = out["dd1_draw"] = out["dd2_dc"] = out["dd2_draw"] = None
        return out

    xm1 = _powers(x, mu - 1.0)
    xm2 = _powers(x, mu - 2.0)
    out["dd1_dc"] = mu * xm1
    out["dd1_draw"] = c * xm1 * (1.0 + mu * logx) * dmu_draw
    out["dd2_dc"] = mu * (mu - 1.0) * xm2
    out["dd2_draw"] = c * xm2 * ((2.0 * mu - 1.0) + mu * (mu - 1.0) * logx) * dmu_draw
    return out


def _angular_fns(angular: str):
    if angular == "sin":
        return np.sin, np.cos, lambda z: -np.sin(z)
    if angular == "cos":
        return np.cos, lambda z: -np.sin(z), lambda z: -np.cos(z)
    raise ValueError("wedge evaluation requires angular = 'sin' or 'cos'")


def wedge_eval(model: MuntzModel, r, theta) -> np.ndarray:
    """u(r, theta) = sum c_k r^mu_k phi(mu_k theta) with phi = sin or cos."""
    phi, _, _ = _angular_fns(model.angular)
    mu, _ = reparam(model.raw_exponents, model.bounds)
    r = _check_positive(r, "r")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    return np.sum(model.coefficients * _powers(r, mu) * phi(np.outer(theta, mu)), axis=1)


def wedge_dtheta(model: MuntzModel, r, theta) -> np.ndarray:
    """Angular derivative d u / d theta = sum c_k mu_k r^mu_k phi'(mu_k theta).

    Divide by r to obtain the edge normal derivative (1/r) du/dtheta.
    """
    _, dphi, _ = _angular_fns(model.angular)
    mu, _ = reparam(model.raw_exponents, model.bounds)
    r = _check_positive(r, "r")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    return np.sum(model.coefficients * mu * _powers(r, mu) * dphi(np.outer(theta, mu)), axis=1)


def wedge_param_grads(model: MuntzModel, r, theta):
    """Parameter sensitivities of u and v = du/dtheta on a wedge.

    Returns (N, K) arrays du_dc, du_draw, dv_dc, dv_draw.
    """
    phi, dphi, d2phi = _angular_fns(model.angular)
    mu, dmu_draw = reparam(model.raw_exponents, model.bounds)
    c = model.coefficients
    r = _check_positive(r, "r")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))[:, None]

    rm = _powers(r.ravel(), mu)
    logr = np.log(r.ravel())[:, None]
    z = theta * mu
    p, dp, d2p = phi(z), dphi(z), d2phi(z)

    du_dc = rm * p
    du_dmu = c * rm * (logr * p + theta * dp)
    dv_dc = mu * rm * dp
    dv_dmu = c * rm * (dp + mu * logr * dp + mu * theta * d2p)
    return {
        "du_dc": du_dc,
        "du_draw": du_dmu * dmu_draw,
        "dv_dc": dv_dc,
        "dv_draw": dv_dmu * dmu_draw,
    }


def signed_eval(model: SignedMuntzModel, x) -> np.ndarray:
    """Even/odd extension sum a|x|^mu + sum b sign(x)|x|^lam, defined on all reals."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ax = np.abs(x)
    out = np.zeros_like(ax)
    if model.even_coeffs.size:
        out += _powers(ax, model.even_exponents) @ model.even_coeffs
    if model.odd_coeffs.size:
        out += np.sign(x) * (_powers(ax, model.odd_exponents) @ model.odd_coeffs)
    return out
