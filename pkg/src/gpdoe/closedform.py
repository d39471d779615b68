"""Closed-form locally optimal designs on rectangular regions.

All constructions share one geometry: one support point at the vertex
of the region where the intensity exp(f(x)'beta) is maximal, and one
point on each adjacent edge at linear-predictor distance z from the
vertex.  The three constructors differ only in z and in the weights:

* Poisson D-optimal: z = 2, all weights equal.
* Poisson-Gamma D-optimal: z solves a scalar equation coupling the
  weights with the Gamma rate b and per-unit size m.
* D_s-optimal for the slopes (same design in both models): z solves
  z * (1 - w_vertex(z)) = 2 and does not depend on a, b or m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .exceptions import BadP, NonpositiveZ, ZeroSlope
from .model import Design, DesignRegion, ModelSpec, regressor


@dataclass(frozen=True)
class ClosedFormResult:
    """A constructed design plus its distance parameter and feasibility.

    feasible is True when z_star fits inside the region, i.e.
    z_star <= bound = min_i |beta_i| * (v_i - u_i).  An infeasible result
    still carries the unconstrained construction, with no optimality
    claim for the given region.
    """

    design: Design
    z_star: float
    feasible: bool
    bound: float

    def to_json(self) -> dict:
        return {
            "design": self.design.to_json(),
            "z_star": self.z_star,
            "feasible": self.feasible,
            "bound": self.bound,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ClosedFormResult":
        return cls(
            design=Design.from_json(obj["design"]),
            z_star=float(obj["z_star"]),
            feasible=bool(obj["feasible"]),
            bound=float(obj["bound"]),
        )


def _check_geometry(model: ModelSpec, region: DesignRegion):
    if model.p < 2:
        raise BadP("closed-form designs need p >= 2")
    if region.k != model.p - 1:
        raise ZeroSlope(
            f"region dimension {region.k} does not match p-1={model.p - 1}")


def vertex_d(region: DesignRegion, beta) -> np.ndarray:
    """Vertex of the region where the intensity exp(f(x)'beta) is maximal.

    Coordinate i is the upper bound for beta_i > 0 and the lower bound
    for beta_i < 0; a zero slope leaves the vertex undefined.
    """
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    slopes = beta[1:]
    if len(slopes) != region.k:
        raise ZeroSlope(f"expected {region.k} slopes, got {len(slopes)}")
    d = np.empty(region.k)
    for i, (s, lo, hi) in enumerate(zip(slopes, region.lower, region.upper)):
        if s == 0.0:
            raise ZeroSlope(f"slope beta_{i + 1} is zero")
        d[i] = hi if s > 0 else lo
    return d


def weights_pg(p: int, m: int, b: float, eta_vertex: float, z: float) -> tuple:
    """Optimal weights (w_edge, w_vertex) for the Poisson-Gamma D design.

    The vertex weight solves a quadratic in the weight; the p-1 edge
    points share the remaining mass equally.  The intensity ratio between
    vertex and edge hyperplane enters through (1 + (m/b) e^eta) terms,
    evaluated in log space to stay safe for extreme m/b.
    """
    if p < 2:
        raise BadP("weights need p >= 2")
    if not z > 0:
        raise NonpositiveZ(f"z must be positive, got {z}")
    log_mb = math.log(m) - math.log(b)
    ratio = math.exp(
        np.logaddexp(0.0, log_mb + eta_vertex)
        - np.logaddexp(0.0, log_mb + eta_vertex - z)
    )
    wp = 2.0 / (p + math.sqrt((p - 2) ** 2 + 4.0 * (p - 1) * ratio))
    return (1.0 - wp) / (p - 1), wp


def weights_ds(p: int, z: float) -> tuple:
    """Optimal weights (w_edge, w_vertex) for the slope-subset design."""
    if p < 2:
        raise BadP("weights need p >= 2")
    if not z > 0:
        raise NonpositiveZ(f"z must be positive, got {z}")
    wp = 2.0 / (p + math.sqrt((p - 2) ** 2 + 4.0 * (p - 1) * math.exp(z)))
    return (1.0 - wp) / (p - 1), wp


_NUDGE = 1e-9
_ROOT_TOL = 1e-12


def zstar_pg(model: ModelSpec, region: DesignRegion) -> float:
    """Optimal vertex distance z* for the Poisson-Gamma D design.

    Unique root of

        0 = m * ((p-1) w1(z) e^(eta_d - z) + wp(z) e^eta_d)
              * (z (p-1) w1(z) - 2)
          + b * (z p w1(z) - 2)

    which always lies strictly between 2(p-1)/p and 2p/(p-1).
    """
    _check_geometry(model, region)
    p, m, b = model.p, model.m, model.gamma_b
    d = vertex_d(region, model.beta_arr)
    eta_d = float(regressor(d) @ model.beta_arr)

    def equation(z: float) -> float:
        w1, wp = weights_pg(p, m, b, eta_d, z)
        avg_intensity = (p - 1) * w1 * math.exp(eta_d - z) + wp * math.exp(eta_d)
        return m * avg_intensity * (z * (p - 1) * w1 - 2.0) + b * (z * p * w1 - 2.0)

    lo = 2.0 * (p - 1) / p + _NUDGE
    hi = 2.0 * p / (p - 1) - _NUDGE
    return numerics.solve_root_bracketed(equation, lo, hi, tol=_ROOT_TOL)


def zstar_ds(p: int) -> float:
    """Optimal vertex distance for the slope-subset design: z (1 - wp(z)) = 2.

    The root lies strictly between 2 and 2p/(p-1) and depends on nothing
    but the number of parameters.
    """
    if p < 2:
        raise BadP("z* needs p >= 2")

    def equation(z: float) -> float:
        _, wp = weights_ds(p, z)
        return z * (1.0 - wp) - 2.0

    return numerics.solve_root_bracketed(
        equation, 2.0 + _NUDGE, 2.0 * p / (p - 1) - _NUDGE, tol=_ROOT_TOL)


def _edge_design(model: ModelSpec, region: DesignRegion, z: float,
                 w1: float, wp: float) -> ClosedFormResult:
    beta = model.beta_arr
    d = vertex_d(region, beta)
    points = []
    for i in range(model.p - 1):
        x = d.copy()
        x[i] -= z / beta[i + 1]
        points.append(x)
    points.append(d)
    weights = [w1] * (model.p - 1) + [wp]
    spans = [abs(beta[i + 1]) * (hi - lo)
             for i, (lo, hi) in enumerate(zip(region.lower, region.upper))]
    bound = min(spans)
    return ClosedFormResult(
        design=Design(points=points, weights=weights),
        z_star=z,
        feasible=z <= bound,
        bound=bound,
    )


def d_optimal_pg(model: ModelSpec, region: DesignRegion) -> ClosedFormResult:
    """D-optimal design for the Poisson-Gamma model on a rectangle."""
    _check_geometry(model, region)
    z = zstar_pg(model, region)
    d = vertex_d(region, model.beta_arr)
    eta_d = float(regressor(d) @ model.beta_arr)
    w1, wp = weights_pg(model.p, model.m, model.gamma_b, eta_d, z)
    return _edge_design(model, region, z, w1, wp)


def ds_optimal(model: ModelSpec, region: DesignRegion) -> ClosedFormResult:
    """Slope-subset optimal design, identical for Poisson and Poisson-Gamma."""
    _check_geometry(model, region)
    z = zstar_ds(model.p)
    w1, wp = weights_ds(model.p, z)
    return _edge_design(model, region, z, w1, wp)


def d_optimal_poisson(model: ModelSpec, region: DesignRegion) -> ClosedFormResult:
    """Classical Poisson D-optimal design: distance 2, equal weights."""
    _check_geometry(model, region)
    w = 1.0 / model.p
    return _edge_design(model, region, 2.0, w, w)
