"""Two-timescale Adam training loop.

Coefficients (fast, near-linear subproblem) and raw exponents (slow,
nonconvex) get separate learning rates and moment accumulators but share a
single loss evaluation per epoch.  The joint gradient is norm-clipped once
per epoch before either update, preserving the learning-rate ratio.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logit

from .basis import RAW_LIMIT, ExponentBounds, MuntzModel, effective_exponents
from .losses import LossBreakdown, LossWeights, total_loss
from .problems import Wedge
from .sampling import CollocationSet

__all__ = [
    "TrainSchedule",
    "InitSpec",
    "TrainTrace",
    "TrainingDiverged",
    "init_model",
    "constraint_multiplier",
    "train",
]


class TrainingDiverged(RuntimeError):
    """Raised when a loss or gradient becomes non-finite; no silent recovery."""

    def __init__(self, epoch: int, message: str):
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch


@dataclass(frozen=True)
class TrainSchedule:
    epochs: int
    eta_mu: float = 0.005
    eta_c: float = 0.01
    clip_norm: float = 1.0
    warmup_epochs: int = 0
    ramp_epochs: int = 0
    phases: tuple[tuple[int, LossWeights], ...] = ()
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1 or self.eta_mu < 0 or self.eta_c <= 0 or self.clip_norm <= 0:
            raise ValueError("invalid schedule")
        if self.eta_mu > self.eta_c:
            raise ValueError("two-timescale regime requires eta_mu <= eta_c")
        if self.warmup_epochs + self.ramp_epochs > self.epochs:
            raise ValueError("warmup + ramp exceeds total epochs")
        if any(a[0] > b[0] for a, b in zip(self.phases, self.phases[1:])):
            raise ValueError("phases must be sorted by start epoch")


@dataclass(frozen=True)
class InitSpec:
    """Seeded initialization.

    mode "uniform": exponents uniform in bounds plus N(0, perturb_sigma^2).
    mode "pinned": first exponent at pin_factor * pin_target, rest uniform.
    Coefficients are N(0, coeff_sigma^2) either way.
    """

    seed: int = 0
    mode: str = "uniform"
    pin_target: float | None = None
    pin_factor: float = 0.98
    perturb_sigma: float = 0.1
    coeff_sigma: float = 0.1

    def __post_init__(self):
        if self.mode not in ("uniform", "pinned"):
            raise ValueError(f"unknown init mode {self.mode!r}")
        if self.perturb_sigma < 0 or self.coeff_sigma < 0:
            raise ValueError("sigmas must be non-negative")
        if self.mode == "pinned" and self.pin_target is None:
            raise ValueError("pinned init needs pin_target")


@dataclass(frozen=True)
class TrainTrace:
    """Complete per-epoch record of one training run."""

    losses: np.ndarray       # (T, 5): total, residual, bc, sparsity, constraint
    exponents: np.ndarray    # (T, K) effective exponents after each epoch's update
    coefficients: np.ndarray  # (T, K)
    model: MuntzModel
    seed: int | None = None
    wall_time: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def epochs(self) -> int:
        return self.losses.shape[0]

    @property
    def final(self) -> LossBreakdown:
        t, r, b, s, c = self.losses[-1]
        return LossBreakdown(r, b, s, c, t, np.zeros(0), np.zeros(0))


def _mu_to_raw(mu: np.ndarray, bounds: ExponentBounds) -> np.ndarray:
    t = (mu - bounds.mu_min) / bounds.width
    return np.clip(logit(t), -RAW_LIMIT, RAW_LIMIT)


def init_model(K: int, bounds: ExponentBounds, init: InitSpec,
               angular: str | None = None) -> MuntzModel:
    """Draw a fresh model; fully determined by init.seed."""
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = np.random.Generator(np.random.PCG64(init.seed))
    margin = 1e-3 * bounds.width
    mu = rng.uniform(bounds.mu_min, bounds.mu_max, K)
    mu = mu + init.perturb_sigma * rng.standard_normal(K)
    if init.mode == "pinned":
        target = init.pin_factor * init.pin_target
        if not bounds.mu_min < target < bounds.mu_max:
            raise ValueError(f"pinned exponent {target} outside {bounds}")
        mu[0] = target
    mu = np.clip(mu, bounds.mu_min + margin, bounds.mu_max - margin)
    coeffs = init.coeff_sigma * rng.standard_normal(K)
    return MuntzModel(_mu_to_raw(mu, bounds), coeffs, bounds, angular)


def constraint_multiplier(epoch: int, schedule: TrainSchedule) -> float:
    """0 during warm-up, linear 0 -> 1 over the ramp, 1 afterward."""
    if not 0 <= epoch < schedule.epochs:
        raise ValueError(f"epoch {epoch} outside [0, {schedule.epochs})")
    if epoch < schedule.warmup_epochs:
        return 0.0
    if schedule.ramp_epochs == 0:
        return 1.0
    return min(1.0, (epoch - schedule.warmup_epochs) / schedule.ramp_epochs)


def _weights_at(epoch: int, base: LossWeights, phases) -> LossWeights:
    w = base
    for start, override in phases:
        if epoch >= start:
            w = override
    return w


def train(model: MuntzModel, problem, pts: CollocationSet,
          weights: LossWeights, schedule: TrainSchedule,
          seed: int | None = None) -> TrainTrace:
    """Run full-batch two-timescale Adam for schedule.epochs epochs."""
    t0 = time.perf_counter()
    K = model.K
    raw = model.raw_exponents.copy()
    c = model.coefficients.copy()

    m_raw = np.zeros(K)
    v_raw = np.zeros(K)
    m_c = np.zeros(K)
    v_c = np.zeros(K)

    T = schedule.epochs
    losses = np.empty((T, 5))
    mus = np.empty((T, K))
    cs = np.empty((T, K))

    cur = model
    for t in range(T):
        w = _weights_at(t, weights, schedule.phases)
        mult = constraint_multiplier(t, schedule)
        bd = total_loss(cur, problem, pts, w, mult)
        g = np.concatenate([bd.grad_raw, bd.grad_c])
        if not (np.isfinite(bd.total) and np.all(np.isfinite(g))):
            raise TrainingDiverged(t, "non-finite loss or gradient")

        norm = float(np.linalg.norm(g))
        if norm > schedule.clip_norm:
            g = g * (schedule.clip_norm / norm)
        g_raw, g_c = g[:K], g[K:]

        b1, b2 = schedule.beta1, schedule.beta2
        bc1 = 1.0 - b1 ** (t + 1)
        bc2 = 1.0 - b2 ** (t + 1)
        # fast coefficient update, then slow exponent update (same gradient)
        m_c = b1 * m_c + (1 - b1) * g_c
        v_c = b2 * v_c + (1 - b2) * g_c**2
        c = c - schedule.eta_c * (m_c / bc1) / (np.sqrt(v_c / bc2) + schedule.eps)
        m_raw = b1 * m_raw + (1 - b1) * g_raw
        v_raw = b2 * v_raw + (1 - b2) * g_raw**2
        raw = raw - schedule.eta_mu * (m_raw / bc1) / (np.sqrt(v_raw / bc2) + schedule.eps)

        cur = cur.with_params(raw, c)
        losses[t] = (bd.total, bd.residual, bd.bc, bd.sparsity, bd.constraint)
        mus[t] = effective_exponents(cur)
        cs[t] = c

    meta = {"problem": type(problem).__name__}
    if isinstance(problem, Wedge):
        meta["bc"] = problem.bc
        meta["omega"] = problem.omega
    return TrainTrace(losses, mus, cs, cur, seed=seed,
                      wall_time=time.perf_counter() - t0, meta=meta)
