"""Loss components: PDE residual, boundary mismatch, sparsity, quantization.

Every component returns its value together with exact gradients with
respect to (raw exponents, coefficients), assembled from the closed-form
basis derivatives.  Gradients here are what the finite-difference property
tests check against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import basis
from .basis import MuntzModel, reparam
from .problems import SingularODE, SingularPoisson, SupervisedFit, Wedge
from .sampling import DIRICHLET, NEUMANN, CollocationSet

__all__ = [
    "LossWeights",
    "LossBreakdown",
    "residual_loss",
    "bc_loss",
    "sparsity_loss",
    "constraint_loss",
    "total_loss",
]


@dataclass(frozen=True)
class LossWeights:
    w_r: float = 1.0
    w_b: float = 100.0
    w_s: float = 0.001
    w_con: float = 0.0

    def __post_init__(self):
        if min(self.w_r, self.w_b, self.w_s, self.w_con) < 0:
            raise ValueError("loss weights must be non-negative")


@dataclass(frozen=True)
class LossBreakdown:
    residual: float
    bc: float
    sparsity: float
    constraint: float
    total: float
    grad_raw: np.ndarray
    grad_c: np.ndarray


def _zero_grads(model: MuntzModel):
    return np.zeros(model.K), np.zeros(model.K)


def _mean_square(mismatch, d_dc, d_draw):
    """mean(mismatch^2) and its parameter gradients given mismatch sensitivities."""
    n = mismatch.size
    value = float(np.mean(mismatch**2))
    grad_c = (2.0 / n) * (mismatch @ d_dc)
    grad_raw = (2.0 / n) * (mismatch @ d_draw)
    return value, grad_raw, grad_c


def residual_loss(model: MuntzModel, problem, pts: CollocationSet):
    """Mean squared violation of the governing equation over residual points.

    For wedge problems every r^mu phi(mu theta) is harmonic, so the value
    and gradient are identically zero by construction.
    """
    if isinstance(problem, Wedge):
        return 0.0, *_zero_grads(model)

    x = np.asarray(pts.residual_x, dtype=float)
    if x.size == 0:
        return 0.0, *_zero_grads(model)
    if problem.residual_cutoff > 0 and np.any(x < problem.residual_cutoff):
        raise ValueError(
            f"residual points below the exclusion cutoff {problem.residual_cutoff}"
        )

    if isinstance(problem, SupervisedFit):
        g = basis.param_grads(model, x)
        mismatch = basis.evaluate(model, x) - pts.residual_data
        return _mean_square(mismatch, g["du_dc"], g["du_draw"])

    if np.any(x <= 0):
        raise ValueError("PDE residual points must be strictly positive")
    g = basis.param_grads(model, x)

    if isinstance(problem, SingularODE):
        # D[u] = x u'' + u'/2, f = 0
        op = x * basis.d2(model, x) + 0.5 * basis.d1(model, x)
        d_dc = x[:, None] * g["dd2_dc"] + 0.5 * g["dd1_dc"]
        d_draw = x[:, None] * g["dd2_draw"] + 0.5 * g["dd1_draw"]
        return _mean_square(op, d_dc, d_draw)

    if isinstance(problem, SingularPoisson):
        # D[u] = -u'', f = x^beta
        mismatch = -basis.d2(model, x) - x**problem.beta
        return _mean_square(mismatch, -g["dd2_dc"], -g["dd2_draw"])

    raise TypeError(f"unknown problem type {type(problem).__name__}")


def bc_loss(model: MuntzModel, problem, pts: CollocationSet):
    """Mean squared boundary mismatch over tagged boundary points."""
    if pts.n_boundary == 0:
        return 0.0, *_zero_grads(model)

    if isinstance(problem, Wedge):
        r, theta = pts.bc_x[:, 0], pts.bc_x[:, 1]
        g = basis.wedge_param_grads(model, r, theta)
        dirich = pts.bc_kind == DIRICHLET
        mismatch = np.empty(pts.n_boundary)
        d_dc = np.empty_like(g["du_dc"])
        d_draw = np.empty_like(g["du_draw"])
        if np.any(dirich):
            mismatch[dirich] = basis.wedge_eval(model, r[dirich], theta[dirich]) - pts.bc_value[dirich]
            d_dc[dirich] = g["du_dc"][dirich]
            d_draw[dirich] = g["du_draw"][dirich]
        neum = ~dirich
        if np.any(neum):
            # normal derivative on an edge is (1/r) du/dtheta
            inv_r = 1.0 / r[neum, None]
            mismatch[neum] = basis.wedge_dtheta(model, r[neum], theta[neum]) / r[neum] - pts.bc_value[neum]
            d_dc[neum] = g["dv_dc"][neum] * inv_r
            d_draw[neum] = g["dv_draw"][neum] * inv_r
        return _mean_square(mismatch, d_dc, d_draw)

    x = np.asarray(pts.bc_x, dtype=float)
    if np.any(pts.bc_kind != DIRICHLET):
        raise ValueError("1D problems support Dirichlet boundary values only")
    g = basis.param_grads(model, x)
    mismatch = basis.evaluate(model, x) - pts.bc_value
    return _mean_square(mismatch, g["du_dc"], g["du_draw"])


def sparsity_loss(model: MuntzModel):
    """(1/K) sum |c_k|; subgradient at c = 0 is taken as 0."""
    value = float(np.mean(np.abs(model.coefficients)))
    grad_c = np.sign(model.coefficients) / model.K
    return value, np.zeros(model.K), grad_c


def constraint_loss(model: MuntzModel, omega: float, trig: str):
    """Quantization penalty sum_k |c_k| trig^2(mu_k omega), trig in {sin, cos}.

    The |c_k| weight is differentiated through (no stop-gradient), so the
    coefficient gradient carries a sign(c_k) trig^2 term.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    mu, dmu_draw = reparam(model.raw_exponents, model.bounds)
    c = model.coefficients
    z = mu * omega
    if trig == "sin":
        t2 = np.sin(z) ** 2
        dt2_dmu = omega * np.sin(2.0 * z)
    elif trig == "cos":
        t2 = np.cos(z) ** 2
        dt2_dmu = -omega * np.sin(2.0 * z)
    else:
        raise ValueError(f"trig must be 'sin' or 'cos', got {trig!r}")
    value = float(np.sum(np.abs(c) * t2))
    grad_raw = np.abs(c) * dt2_dmu * dmu_draw
    grad_c = np.sign(c) * t2
    return value, grad_raw, grad_c


def constraint_multiplier_value(schedule_state) -> float:
    """Accepts either a plain float in [0, 1] or an object with .multiplier."""
    if schedule_state is None:
        return 1.0
    if hasattr(schedule_state, "multiplier"):
        return float(schedule_state.multiplier)
    return float(schedule_state)


def total_loss(model: MuntzModel, problem, pts: CollocationSet,
               weights: LossWeights, schedule_state=None) -> LossBreakdown:
    """Weighted sum of all components with matching summed gradients.

    ``schedule_state`` supplies the warm-up/ramp multiplier in [0, 1]
    applied to the constraint weight; omitted means fully active.
    """
    mult = constraint_multiplier_value(schedule_state)

    r_val, r_graw, r_gc = residual_loss(model, problem, pts)
    b_val, b_graw, b_gc = bc_loss(model, problem, pts)
    s_val, s_graw, s_gc = sparsity_loss(model)
    if isinstance(problem, Wedge) and weights.w_con * mult != 0.0:
        c_val, c_graw, c_gc = constraint_loss(model, problem.omega, problem.constraint_trig)
    else:
        c_val, (c_graw, c_gc) = 0.0, _zero_grads(model)

    w_con = weights.w_con * mult
    total = weights.w_r * r_val + weights.w_b * b_val + weights.w_s * s_val + w_con * c_val
    grad_raw = (weights.w_r * r_graw + weights.w_b * b_graw
                + weights.w_s * s_graw + w_con * c_graw)
    grad_c = (weights.w_r * r_gc + weights.w_b * b_gc
              + weights.w_s * s_gc + w_con * c_gc)
    return LossBreakdown(
        residual=r_val, bc=b_val, sparsity=s_val, constraint=c_val,
        total=float(total), grad_raw=grad_raw, grad_c=grad_c,
    )
