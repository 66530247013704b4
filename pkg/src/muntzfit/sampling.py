"""Collocation point generation: graded 1D grids and seeded wedge sampling.

1D grids are fully deterministic.  Wedge interiors use numpy's PCG64
generator with an explicit seed, so the same seed regenerates the same set
on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .problems import SingularODE, SingularPoisson, SupervisedFit, Wedge

__all__ = ["CollocationSet", "graded_1d", "wedge_sample", "make_collocation"]

DIRICHLET = 0
NEUMANN = 1

EDGE_MIN_R = 1e-3  # edge points exclude the corner itself; derivatives diverge there


@dataclass(frozen=True)
class CollocationSet:
    """Residual and boundary points plus everything needed to regenerate them.

    ``residual_x`` is (N,) for 1D problems or (N, 2) polar (r, theta) for
    wedges.  ``residual_data`` holds supervised target values (with noise
    baked in) and is None for PDE problems.  Boundary rows carry a kind tag
    (0 = Dirichlet value, 1 = Neumann normal derivative) and the data value.
    """

    residual_x: np.ndarray
    bc_x: np.ndarray
    bc_kind: np.ndarray
    bc_value: np.ndarray
    residual_data: np.ndarray | None = None
    record: dict[str, Any] = field(default_factory=dict)

    @property
    def n_residual(self) -> int:
        return self.residual_x.shape[0]

    @property
    def n_boundary(self) -> int:
        return self.bc_x.shape[0]


def graded_1d(n: int, p: float, cutoff: float = 0.0) -> np.ndarray:
    """Grid x_i = t_i^p for t_i uniform on [0, 1], dropping x_i < cutoff.

    p >= 1 clusters points toward 0, where singular behavior lives.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if p < 1:
        raise ValueError("need p >= 1")
    x = np.linspace(0.0, 1.0, n) ** p
    return x[x >= cutoff]


def wedge_sample(omega: float, n_interior: int = 500, n_arc: int = 200,
                 n_edge: int = 100, seed: int = 0) -> CollocationSet:
    """Sample a wedge of opening angle omega (boundary data filled in later).

    Interior r is graded toward the corner (r = t^2, t uniform random), arc
    points sit exactly at r = 1, and each edge gets n_edge points graded
    toward the corner but excluding it.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    t = rng.uniform(0.0, 1.0, n_interior)
    r_int = np.clip(t, EDGE_MIN_R, None) ** 2
    th_int = rng.uniform(0.0, omega, n_interior)
    interior = np.column_stack([r_int, th_int])

    th_arc = np.linspace(0.0, omega, n_arc)
    arc = np.column_stack([np.ones(n_arc), th_arc])

    r_edge = np.clip(np.linspace(0.0, 1.0, n_edge) ** 2, EDGE_MIN_R, None)
    edge0 = np.column_stack([r_edge, np.zeros(n_edge)])
    edge1 = np.column_stack([r_edge, np.full(n_edge, omega)])

    bc_x = np.vstack([arc, edge0, edge1])
    record = {
        "omega": omega, "n_interior": n_interior, "n_arc": n_arc,
        "n_edge": n_edge, "seed": seed, "grading_p": 2, "rng": "PCG64",
    }
    return CollocationSet(
        residual_x=interior,
        bc_x=bc_x,
        bc_kind=np.zeros(bc_x.shape[0], dtype=int),  # tags assigned per problem
        bc_value=np.zeros(bc_x.shape[0]),
        record=record,
    )


def make_collocation(problem, *, n_residual: int = 200, grading: float = 2.0,
                     n_interior: int = 500, n_arc: int = 200, n_edge: int = 100,
                     seed: int = 0) -> CollocationSet:
    """Build the full collocation set (points, tags, data) for a problem."""
    if isinstance(problem, Wedge):
        cs = wedge_sample(problem.omega, n_interior, n_arc, n_edge, seed)
        kind = cs.bc_kind.copy()
        value = cs.bc_value.copy()
        # arc carries the fundamental-mode Dirichlet data
        value[:n_arc] = problem.arc_data(cs.bc_x[:n_arc, 1])
        # edge tags per BC type: first letter is theta=0, second is theta=omega
        edge_kinds = {"D": DIRICHLET, "N": NEUMANN}
        kind[n_arc:n_arc + n_edge] = edge_kinds[problem.bc[0]]
        kind[n_arc + n_edge:] = edge_kinds[problem.bc[1]]
        rec = dict(cs.record, problem=f"wedge-{problem.bc}")
        return CollocationSet(cs.residual_x, cs.bc_x, kind, value, None, rec)

    cutoff = problem.residual_cutoff
    record = {"n": n_residual, "grading_p": grading, "cutoff": cutoff, "seed": seed}

    if isinstance(problem, SupervisedFit):
        x = graded_1d(n_residual, grading, cutoff=max(cutoff, 0.01))
        y = problem.exact.fn(x)
        if problem.noise_sigma > 0:
            rng = np.random.Generator(np.random.PCG64(seed))
            y = y + problem.noise_sigma * rng.standard_normal(x.size)
        record["noise_sigma"] = problem.noise_sigma
        return CollocationSet(x, np.zeros(0), np.zeros(0, int), np.zeros(0), y, record)

    if isinstance(problem, SingularODE):
        x = graded_1d(n_residual, grading, cutoff=cutoff)
        x = x[x > 0]
        return CollocationSet(
            x, np.array([1.0]), np.array([DIRICHLET]), np.array([1.0]), None, record
        )

    if isinstance(problem, SingularPoisson):
        x = graded_1d(n_residual, grading, cutoff=cutoff)
        x = x[x > 0]
        return CollocationSet(
            x,
            np.array([0.0, 1.0]),
            np.array([DIRICHLET, DIRICHLET]),
            np.array([0.0, 0.0]),
            None,
            record,
        )

    raise TypeError(f"unknown problem type {type(problem).__name__}")
