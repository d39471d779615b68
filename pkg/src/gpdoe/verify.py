"""Equivalence-theorem sensitivity checks and structural property verifiers.

A design maximizes the D-criterion exactly when its sensitivity function
stays below the trace bound everywhere on the region, with equality on
the support.  The checker brute-forces a tensor grid over the region
rather than restricting to edges, so it is independent of the geometric
arguments used to derive the closed-form designs.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import numerics
from .exceptions import DimensionMismatch, IneligibleCriterion, SingularInfo
from .criteria import C, DA, DS, L, CriterionSpec, criterion_value
from .model import (
    POISSON,
    POISSON_GAMMA,
    Design,
    DesignRegion,
    ModelSpec,
    PopulationDesign,
    _m_po,
    design_matrix,
    info_pg,
    info_population,
    merge_population,
    regressor,
)

D_PG = "d-pg"
D_POISSON = "d-poisson"
CRIT_KINDS = (D_PG, D_POISSON)


@dataclass(frozen=True)
class EquivalenceReport:
    """Outcome of an equivalence-theorem check.

    violation = max_sensitivity - trace_bound; the design passes when the
    violation and every support-point equality gap stay within
    tol * trace_bound.
    """

    max_sensitivity: float
    trace_bound: float
    worst_point: tuple
    violation: float
    passes: bool
    support_equalities: tuple

    def to_json(self) -> dict:
        return {
            "max_sensitivity": self.max_sensitivity,
            "trace_bound": self.trace_bound,
            "worst_point": list(self.worst_point),
            "violation": self.violation,
            "passes": self.passes,
            "support_equalities": list(self.support_equalities),
        }


def _worker_count() -> int:
    raw = os.environ.get("GPDOE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    if n == 0:
        return os.cpu_count() or 1
    return max(1, n)


def _sensitivity_kernel(design: Design, model: ModelSpec, crit_kind: str):
    """Quadratic-form matrix G and trace bound for the requested criterion.

    The sensitivity at x is exp(f(x)'beta) * f(x)' G f(x).  For the
    Poisson-Gamma D-criterion G is the Poisson inverse minus a rank-one
    intercept correction, and the bound is p minus the corrected share;
    both are free of the Gamma shape a.
    """
    if crit_kind not in CRIT_KINDS:
        raise ValueError(f"unknown criterion kind {crit_kind!r}")
    M_po = _m_po(design, model)
    p = model.p
    if numerics.sym_rank(M_po, 1e-9) < p:
        raise SingularInfo("sensitivity needs a regular information matrix")
    M_inv = np.linalg.inv(M_po)
    if crit_kind == D_POISSON:
        return M_inv, float(p)
    denom = M_po[0, 0] + model.gamma_b / model.m
    G = M_inv.copy()
    G[0, 0] -= 1.0 / denom
    return G, p - M_po[0, 0] / denom


def _sensitivity_values(F: np.ndarray, beta: np.ndarray, G: np.ndarray) -> np.ndarray:
    eta = F @ beta
    quad = np.einsum("ij,jk,ik->i", F, G, F)
    return np.exp(eta) * quad


def sensitivity_pg(x, design: Design, model: ModelSpec) -> float:
    """Sensitivity of the Poisson-Gamma D-criterion at a single point x."""
    G, _ = _sensitivity_kernel(design, model, D_PG)
    f = regressor(x)
    return float(np.exp(f @ model.beta_arr) * (f @ G @ f))


def _default_grid(k: int) -> int:
    if k <= 2:
        return 201
    if k == 3:
        return 41
    return 11


def _tensor_grid(region: DesignRegion, per_axis: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, per_axis)
            for lo, hi in zip(region.lower, region.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def check_equivalence(design: Design, model: ModelSpec, region: DesignRegion,
                      crit_kind: str = D_PG, grid_per_axis: int = None,
                      tol: float = 1e-6) -> EquivalenceReport:
    """Grid-based equivalence-theorem check for a claimed D-optimal design.

    Evaluates the sensitivity on a full tensor grid over the region plus
    the support points, and reports the worst violation of the trace
    bound together with the equality gap at each support point.
    """
    if region.k != model.p - 1:
        raise DimensionMismatch("region dimension must equal p-1")
    G, bound = _sensitivity_kernel(design, model, crit_kind)
    beta = model.beta_arr
    per_axis = grid_per_axis if grid_per_axis is not None else _default_grid(region.k)
    grid = _tensor_grid(region, per_axis)
    F_grid = np.hstack([np.ones((grid.shape[0], 1)), grid])

    workers = _worker_count()
    if workers > 1 and grid.shape[0] >= 4 * workers:
        chunks = np.array_split(np.arange(grid.shape[0]), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda idx: _sensitivity_values(F_grid[idx], beta, G), chunks))
        sens = np.concatenate(parts)
    else:
        sens = _sensitivity_values(F_grid, beta, G)

    support_sens = _sensitivity_values(design_matrix(design), beta, G)
    all_sens = np.concatenate([sens, support_sens])
    all_points = np.vstack([grid, design.points_arr])
    worst = int(np.argmax(all_sens))
    max_sens = float(all_sens[worst])
    gaps = tuple(float(abs(v - bound)) for v in support_sens)
    violation = max_sens - bound
    threshold = tol * bound
    return EquivalenceReport(
        max_sensitivity=max_sens,
        trace_bound=float(bound),
        worst_point=tuple(float(v) for v in all_points[worst]),
        violation=float(violation),
        passes=bool(violation <= threshold and all(g <= threshold for g in gaps)),
        support_equalities=gaps,
    )


def check_superadditivity(xi1: Design, xi2: Design, alphas, model: ModelSpec,
                          tol: float = 1e-9) -> bool:
    """Mixture information dominates the mixed information, for every alpha."""
    if xi1.k != xi2.k:
        raise DimensionMismatch("designs must share the covariate dimension")
    M1 = info_pg(xi1, model).matrix
    M2 = info_pg(xi2, model).matrix
    for alpha in alphas:
        a = float(alpha)
        mix = merge_population(PopulationDesign(designs=(xi1, xi2), q=(a, 1.0 - a)))
        M_mix = info_pg(mix, model).matrix
        if not numerics.loewner_geq(M_mix, a * M1 + (1.0 - a) * M2, tol):
            return False
    return True


def check_corollary_merge(pop: PopulationDesign, model: ModelSpec,
                          tol: float = 1e-9) -> bool:
    """Merging a population into one shared design never loses information."""
    merged = merge_population(pop)
    return numerics.loewner_geq(
        info_pg(merged, model).matrix, info_population(pop, model).matrix, tol)


def _eligible_cross_model(crit: CriterionSpec) -> bool:
    if crit.variant in (L, C):
        return True
    if crit.variant == DA:
        A = np.asarray(crit.matrix, dtype=float)
        return bool(np.all(A[0, :] == 0.0))
    if crit.variant == DS:
        return 0 not in crit.indices
    return False


def check_cross_model_optima(design: Design, model: ModelSpec, crit: CriterionSpec,
                             candidates) -> bool:
    """Whether both model kinds pick the same winner among the candidates.

    Applies to the linear criteria and to aspect criteria that exclude
    the intercept, where the two models' criterion values differ only by
    a design-independent offset or constant factor.
    """
    if not _eligible_cross_model(crit):
        raise IneligibleCriterion(
            f"criterion {crit.variant!r} does not transfer across models here")
    pool = [design] + list(candidates)
    vals_po = [criterion_value(d, model, crit, POISSON) for d in pool]
    vals_pg = [criterion_value(d, model, crit, POISSON_GAMMA) for d in pool]
    return int(np.argmin(vals_po)) == int(np.argmin(vals_pg))
