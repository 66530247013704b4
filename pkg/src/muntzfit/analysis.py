"""Post-training analysis: exponent extraction, matching, diagnostics.

Also houses the closed-form projection-error curve for single power-law
targets and the brute-force uniqueness check used as a test oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import MuntzModel, effective_exponents
from .losses import constraint_loss

__all__ = [
    "RecoveryReport",
    "ACTIVE_COEFF_THRESHOLD",
    "CLUSTER_RADIUS",
    "SUCCESS_REL_ERR_PCT",
    "active_terms",
    "dominant_exponent",
    "cluster_exponents",
    "match_exponents",
    "constraint_violation",
    "gram_condition",
    "rate_curve",
    "identifiability_oracle",
]

ACTIVE_COEFF_THRESHOLD = 0.01  # |c| above this counts as an active term
CLUSTER_RADIUS = 0.02          # redundant terms this close are merged before matching
SUCCESS_REL_ERR_PCT = 5.0      # benchmark success cutoff on relative error


@dataclass(frozen=True)
class RecoveryReport:
    """What a trained model discovered, measured against ground truth."""

    dominant_mu: float
    active: tuple[tuple[float, float], ...]      # (mu, c) with |c| above threshold
    matched: tuple[tuple[float, float, float], ...]  # (target, matched mu, rel err %)
    max_rel_err_pct: float
    under_resolved: bool
    constraint_violation: float = 0.0
    gram_condition: float = math.inf
    extras: dict = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return not self.under_resolved and self.max_rel_err_pct < SUCCESS_REL_ERR_PCT

    def to_dict(self) -> dict:
        return {
            "dominant_mu": self.dominant_mu,
            "active": [list(t) for t in self.active],
            "matched": [list(t) for t in self.matched],
            "max_rel_err_pct": self.max_rel_err_pct,
            "under_resolved": self.under_resolved,
            "constraint_violation": self.constraint_violation,
            # non-finite floats are not valid JSON; serialize as a string
            "gram_condition": (self.gram_condition
                               if math.isfinite(self.gram_condition) else "inf"),
            "success": self.success,
            **self.extras,
        }


def active_terms(model: MuntzModel, threshold: float = ACTIVE_COEFF_THRESHOLD):
    """(mu, c) pairs whose coefficient magnitude clears the threshold."""
    mu = effective_exponents(model)
    c = model.coefficients
    keep = np.abs(c) > threshold
    return [(float(m), float(k)) for m, k in zip(mu[keep], c[keep])]


def dominant_exponent(model: MuntzModel) -> float:
    """Effective exponent of the largest-|c| term; ties go to the smaller mu."""
    mu = effective_exponents(model)
    c = np.abs(model.coefficients)
    best = np.lexsort((mu, -c))[0]
    return float(mu[best])


def cluster_exponents(mus_and_cs, radius: float = CLUSTER_RADIUS):
    """Merge exponents within ``radius`` of a neighbor; |c|-weighted means.

    Input is a sequence of (mu, c); output is a list of (mu, total_|c|)
    sorted ascending in mu.  Redundant terms converging to the same value
    collapse to one cluster.
    """
    items = sorted(mus_and_cs)
    clusters = []
    for mu, c in items:
        if clusters and mu - clusters[-1][-1][0] <= radius:
            clusters[-1].append((mu, c))
        else:
            clusters.append([(mu, c)])
    out = []
    for group in clusters:
        w = np.array([abs(c) for _, c in group])
        m = np.array([mu for mu, _ in group])
        center = float(np.average(m, weights=w)) if w.sum() > 0 else float(m.mean())
        out.append((center, float(w.sum())))
    return out


def match_exponents(active_mus, targets, radius: float = CLUSTER_RADIUS):
    """Assign targets to clustered discovered exponents, minimizing the max
    relative error over all assignments.

    ``active_mus`` is a sequence of (mu, c) pairs.  Returns
    (assignment, max_rel_err_pct, under_resolved); when clusters are fewer
    than targets the recovery is reported as under-resolved and the
    assignment pairs each target with the nearest cluster instead.
    """
    targets = sorted(float(t) for t in targets)
    clusters = cluster_exponents(active_mus, radius)
    mus = [m for m, _ in clusters]
    if not targets:
        return [], 0.0, False
    if len(mus) < len(targets):
        assignment = []
        for t in targets:
            near = min(mus, key=lambda m: abs(m - t)) if mus else math.nan
            err = abs(near - t) / abs(t) * 100.0 if mus else math.inf
            assignment.append((t, near, err))
        worst = max(e for _, _, e in assignment)
        return assignment, worst, True

    best = None
    for perm in itertools.permutations(range(len(mus)), len(targets)):
        errs = [abs(mus[j] - t) / abs(t) * 100.0 for j, t in zip(perm, targets)]
        worst = max(errs)
        if best is None or worst < best[0]:
            best = (worst, perm, errs)
    worst, perm, errs = best
    assignment = [(t, mus[j], e) for j, t, e in zip(perm, targets, errs)]
    return assignment, worst, False


def constraint_violation(model: MuntzModel, omega: float, trig: str) -> float:
    """Read-only view of the quantization penalty value for reports."""
    return constraint_loss(model, omega, trig)[0]


def gram_condition(exponents, points) -> float:
    """Condition number of G_jk = mean_i x_i^(mu_j + mu_k).

    Returns inf when the matrix is numerically singular (e.g. duplicate
    exponents), which is itself the diagnostic signal.
    """
    mu = np.asarray(exponents, dtype=float)
    x = np.asarray(points, dtype=float)
    if mu.size < 2 or x.size < 2:
        raise ValueError("need at least 2 exponents and 2 points")
    powers = x[:, None] ** mu[None, :]
    gram = powers.T @ powers / x.size
    eig = np.linalg.eigvalsh(gram)
    lo, hi = float(eig[0]), float(eig[-1])
    if lo <= hi * np.finfo(float).eps * mu.size:
        return math.inf
    return hi / lo

def rate_curve(alpha: float, mus):
    """Best single-term L2 projection of x^alpha onto span{x^mu} on [0, 1].

    For each mu returns (mu, c*(mu), R(mu)) where
    c*(mu) = (2 mu + 1) / (alpha + mu + 1) and
    R(mu) = 1/(2 alpha + 1) - (2 mu + 1) / (alpha + mu + 1)^2,
    assembled from int_0^1 x^a dx = 1/(a + 1).  R vanishes quadratically
    as mu -> alpha.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    out = []
    for mu in np.atleast_1d(np.asarray(mus, dtype=float)):
        if mu <= -0.5:
            raise ValueError("mu must exceed -1/2 for square integrability")
        c_star = (2.0 * mu + 1.0) / (alpha + mu + 1.0)
        r = 1.0 / (2.0 * alpha + 1.0) - (2.0 * mu + 1.0) / (alpha + mu + 1.0) ** 2
        out.append((float(mu), float(c_star), float(max(r, 0.0))))
    return out


def identifiability_oracle(targets, coefficients, grid=None, *,
                           lattice_step: float = 0.01,
                           lattice_range=(0.1, 3.0),
                           tol: float = 1e-8) -> bool:
    """Brute-force uniqueness check for small power sums (K* <= 3).

    Sweeps all exponent tuples on a lattice; for each tuple solves the
    least-squares coefficient fit on the grid and records the sup error.
    Returns True iff every tuple reproducing f to within ``tol`` contains
    all the true exponents (to lattice resolution).
    """
    targets = [float(t) for t in targets]
    coefficients = [float(c) for c in coefficients]
    if len(targets) != len(coefficients) or not targets:
        raise ValueError("targets and coefficients must be equal-length, non-empty")
    if any(c == 0 for c in coefficients):
        raise ValueError("coefficients must be nonzero")
    if len(set(round(t / lattice_step) for t in targets)) != len(targets):
        raise ValueError("targets must be distinct at lattice resolution")
    k = len(targets)
    if k > 3:
        raise ValueError("oracle is intended for K* <= 3")

    if grid is None:
        grid = np.linspace(0.05, 1.0, 40)
    grid = np.asarray(grid, dtype=float)
    f = sum(c * grid**t for t, c in zip(targets, coefficients))

    lattice = np.round(np.arange(lattice_range[0], lattice_range[1] + 1e-9,
                                 lattice_step), 10)
    half_step = lattice_step / 2 + 1e-12

    def contains_targets(tup):
        return all(any(abs(m - t) <= half_step for m in tup) for t in targets)

    pow_table = grid[:, None] ** lattice[None, :]

    if k == 1:
        gram = np.sum(pow_table**2, axis=0)
        proj = pow_table.T @ f
        coef = proj / gram
        sup_err = np.max(np.abs(pow_table * coef[None, :] - f[:, None]), axis=0)
        bad = sup_err < tol
        return all(contains_targets((m,)) for m in lattice[bad])

    if k == 2:
        gram = pow_table.T @ pow_table
        proj = pow_table.T @ f
        ii, jj = np.triu_indices(lattice.size, k=1)
        g11, g22, g12 = gram[ii, ii], gram[jj, jj], gram[ii, jj]
        det = g11 * g22 - g12**2
        ok = det > 1e-12 * g11 * g22  # near-collinear pairs handled per-pair below
        c1 = np.where(ok, (g22 * proj[ii] - g12 * proj[jj]) / np.where(ok, det, 1.0), 0.0)
        c2 = np.where(ok, (g11 * proj[jj] - g12 * proj[ii]) / np.where(ok, det, 1.0), 0.0)
        fit = pow_table[:, ii] * c1[None, :] + pow_table[:, jj] * c2[None, :]
        sup_err = np.max(np.abs(fit - f[:, None]), axis=0)
        for a, b in zip(ii[~ok], jj[~ok]):
            cols = pow_table[:, [a, b]]
            coef, *_ = np.linalg.lstsq(cols, f, rcond=None)
            if np.max(np.abs(cols @ coef - f)) < tol and not contains_targets(lattice[[a, b]]):
                return False
        bad = (sup_err < tol) & ok
        return all(contains_targets((lattice[a], lattice[b]))
                   for a, b in zip(ii[bad], jj[bad]))

    for idxs in itertools.combinations(range(lattice.size), k):
        a = pow_table[:, list(idxs)]
        coef, *_ = np.linalg.lstsq(a, f, rcond=None)
        sup_err = float(np.max(np.abs(a @ coef - f)))
        if sup_err < tol and not contains_targets(lattice[list(idxs)]):
            return False
    return True
