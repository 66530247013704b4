"""Catalog of problems the trainer can be pointed at.

Each problem knows its differential/boundary operators, the admissible
domain, and (where one exists) the closed-form solution with its true
exponents, which downstream analysis treats as ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .basis import ExponentBounds

__all__ = [
    "SupervisedFit",
    "SingularODE",
    "SingularPoisson",
    "Wedge",
    "ExactSolution",
    "poisson_exact",
    "ode_exact",
    "wedge_spectrum",
    "wedge_problem",
    "supervised_targets",
    "build_problem",
    "SUPERVISED_CATALOG",
    "bc_adaptive_bounds",
]

BC_TYPES = ("DD", "NN", "DN", "ND")


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form reference: callable plus its power-law decomposition."""

    fn: Callable[[np.ndarray], np.ndarray]
    exponents: tuple[float, ...]
    coefficients: tuple[float, ...]
    power_law: bool = True  # False when the target is not a finite power sum


@dataclass(frozen=True)
class SupervisedFit:
    """Fit y = target(x) (+ Gaussian noise) directly, no differential operator."""

    name: str
    exact: ExactSolution
    noise_sigma: float = 0.0

    kind = "supervised"
    residual_cutoff = 0.0


@dataclass(frozen=True)
class SingularODE:
    """x u'' + u'/2 = 0 on (0, 1] with u(1) = 1; solution sqrt(x)."""

    kind = "ode"
    residual_cutoff = 0.0

    @property
    def exact(self) -> ExactSolution:
        return ode_exact()


@dataclass(frozen=True)
class SingularPoisson:
    """-u'' = x^beta on (0, 1) with u(0) = u(1) = 0, beta > -1."""

    beta: float = -0.5

    kind = "poisson"

    def __post_init__(self):
        if not self.beta > -1:
            raise ValueError(f"need beta > -1, got {self.beta}")

    @property
    def residual_cutoff(self) -> float:
        # singular forcing blows up at 0; residual points below this are rejected
        return 0.01 if self.beta < 0 else 0.0

    @property
    def exact(self) -> ExactSolution:
        return poisson_exact(self.beta)


@dataclass(frozen=True)
class Wedge:
    """Laplace equation on a wedge of opening angle omega with D/N edge conditions.

    ``angular`` is the basis family that satisfies the theta = 0 edge
    identically; ``constraint_trig`` is the trig whose zeros quantize the
    admissible exponent spectrum for this BC combination.
    """

    omega: float
    bc: str
    angular: str = field(init=False)
    constraint_trig: str = field(init=False)

    kind = "wedge"
    residual_cutoff = 0.0

    def __post_init__(self):
        if not 0 < self.omega < 2 * math.pi:
            raise ValueError(f"omega must be in (0, 2*pi), got {self.omega}")
        if self.bc not in BC_TYPES:
            raise ValueError(f"bc must be one of {BC_TYPES}, got {self.bc!r}")
        object.__setattr__(self, "angular", "sin" if self.bc in ("DD", "DN") else "cos")
        object.__setattr__(self, "constraint_trig", "sin" if self.bc in ("DD", "NN") else "cos")

    @property
    def fundamental(self) -> float:
        return wedge_spectrum(self.omega, self.bc, 1)[0]

    def arc_data(self, theta: np.ndarray) -> np.ndarray:
        """Boundary data on the arc r = 1: the fundamental angular mode."""
        phi = np.sin if self.angular == "sin" else np.cos
        return phi(self.fundamental * np.asarray(theta, dtype=float))

    @property
    def exact(self) -> ExactSolution:
        mu1 = self.fundamental
        phi = np.sin if self.angular == "sin" else np.cos

        def fn(r, theta):
            return np.asarray(r, float) ** mu1 * phi(mu1 * np.asarray(theta, float))

        return ExactSolution(fn, (mu1,), (1.0,))


def ode_exact() -> ExactSolution:
    return ExactSolution(lambda x: np.sqrt(np.asarray(x, float)), (0.5,), (1.0,))


def poisson_exact(beta: float) -> ExactSolution:
    """Solution of -u'' = x^beta with u(0) = u(1) = 0: a (x - x^(beta+2))."""
    if not beta > -1:
        raise ValueError(f"need beta > -1, got {beta}")
    a = 1.0 / ((beta + 1.0) * (beta + 2.0))

    def fn(x):
        x = np.asarray(x, dtype=float)
        return a * (x - x ** (beta + 2.0))

    return ExactSolution(fn, (1.0, beta + 2.0), (a, -a))


def wedge_spectrum(omega: float, bc: str, n_modes: int) -> list[float]:
    """First admissible exponents for a wedge: zeros of sin(mu w) or cos(mu w).

    DD/NN give {n pi / w}; mixed DN/ND give {(2n - 1) pi / (2w)}.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    if bc in ("DD", "NN"):
        return [n * math.pi / omega for n in range(1, n_modes + 1)]
    if bc in ("DN", "ND"):
        return [(2 * n - 1) * math.pi / (2 * omega) for n in range(1, n_modes + 1)]
    raise ValueError(f"unknown bc {bc!r}")


def wedge_problem(omega: float, bc: str) -> Wedge:
    return Wedge(omega=omega, bc=bc)


def bc_adaptive_bounds(omega: float, bc: str) -> ExponentBounds:
    """Search range [0.3 mu1, 2.5 mu1] bracketing the fundamental mode."""
    mu1 = wedge_spectrum(omega, bc, 1)[0]
    return ExponentBounds(0.3 * mu1, 2.5 * mu1)


def _power_sum(exponents, coefficients) -> Callable[[np.ndarray], np.ndarray]:
    exponents = tuple(exponents)
    coefficients = tuple(coefficients)

    def fn(x):
        x = np.asarray(x, dtype=float)
        return sum(c * x ** a for a, c in zip(exponents, coefficients))

    return fn


def _close_pair(delta: float) -> ExactSolution:
    return ExactSolution(_power_sum((0.5, 0.5 + delta), (1.0, 1.0)),
                         (0.5, 0.5 + delta), (1.0, 1.0))


SUPERVISED_CATALOG: dict[str, ExactSolution] = {
    "single": ExactSolution(_power_sum((0.5,), (1.0,)), (0.5,), (1.0,)),
    "three-term": ExactSolution(
        _power_sum((0.1, 0.5, 1.5), (0.5, 1.0, 0.3)), (0.1, 0.5, 1.5), (0.5, 1.0, 0.3)
    ),
    "log-correction": ExactSolution(
        lambda x: np.sqrt(np.asarray(x, float)) * np.log(np.asarray(x, float)),
        (), (), power_law=False,
    ),
}
for _d in (0.02, 0.05, 0.1, 0.2, 0.3):
    SUPERVISED_CATALOG[f"close-pair-{_d:g}"] = _close_pair(_d)


def build_problem(kind: str, **params):
    """Construct a problem from plain serializable parameters.

    Used by the benchmark runner so run specs stay picklable and can be
    echoed into result records verbatim.
    """
    if kind == "supervised":
        return supervised_targets(params["name"], params.get("noise_sigma", 0.0))
    if kind == "ode":
        return SingularODE()
    if kind == "poisson":
        return SingularPoisson(beta=params.get("beta", -0.5))
    if kind == "wedge":
        return wedge_problem(params["omega"], params["bc"])
    raise ValueError(f"unknown problem kind {kind!r}")


def supervised_targets(name: str, noise_sigma: float = 0.0) -> SupervisedFit:
    """Look up a named supervised target; raises KeyError on unknown names."""
    try:
        exact = SUPERVISED_CATALOG[name]
    except KeyError:
        known = ", ".join(sorted(SUPERVISED_CATALOG))
        raise KeyError(f"unknown target {name!r}; known targets: {known}") from None
    return SupervisedFit(name=name, exact=exact, noise_sigma=noise_sigma)
