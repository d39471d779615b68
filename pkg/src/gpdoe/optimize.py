"""Numerical design oracles independent of the closed-form constructions.

Two routes confirm the analytic designs without reusing their
derivations: a weight optimizer over a fixed candidate grid, and a
one-dimensional scan over the vertex-plus-edges design family indexed
by the distance z.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .closedform import vertex_d, weights_ds, weights_pg
from .criteria import C, D, DA, DS, L, CriterionSpec, aspect_matrix, det_pg_via_poisson
from .exceptions import NoImprovement, SingularStart, ZeroSlope
from .model import (
    POISSON,
    POISSON_GAMMA,
    Design,
    DesignRegion,
    ModelSpec,
    regressor,
)

FAMILY_PG_D = "pg-d"
FAMILY_POISSON_DS = "poisson-ds"

_PRUNE = 1e-9


@dataclass(frozen=True)
class GridOptions:
    """Candidate grid and stopping rules for the weight optimizer."""

    candidates: tuple
    criterion: CriterionSpec
    model_kind: str = POISSON_GAMMA
    max_iters: int = 5000
    step_tol: float = 1e-12

    def __post_init__(self):
        pts = tuple(tuple(float(v) for v in np.atleast_1d(np.asarray(x, dtype=float)))
                    for x in self.candidates)
        if len(pts) < 1:
            raise ValueError("candidate set must be nonempty")
        if len(set(pts)) != len(pts):
            raise ValueError("candidate points must be pairwise distinct")
        object.__setattr__(self, "candidates", pts)

    def to_json(self) -> dict:
        return {
            "candidates": [list(x) for x in self.candidates],
            "criterion": self.criterion.to_json(),
            "model_kind": self.model_kind,
            "max_iters": self.max_iters,
            "step_tol": self.step_tol,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GridOptions":
        return cls(
            candidates=obj["candidates"],
            criterion=CriterionSpec.from_json(obj["criterion"]),
            model_kind=obj.get("model_kind", POISSON_GAMMA),
            max_iters=obj.get("max_iters", 5000),
            step_tol=obj.get("step_tol", 1e-12),
        )


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, len(v) + 1)
    rho = np.nonzero(u + (1.0 - css) / j > 0)[0][-1]
    theta = (1.0 - css[rho]) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


class _Objective:
    """Criterion in maximize orientation, on the active candidate set.

    All variants reduce to Poisson-side linear algebra: the mixed-model
    determinant factorizes through the Poisson information, and the
    aspect criteria differ from their Poisson versions only by constant
    factors and offsets in the inverse.
    """

    def __init__(self, X: np.ndarray, lam: np.ndarray, model: ModelSpec,
                 crit: CriterionSpec, model_kind: str):
        self.X = X
        self.lam = lam
        self.model = model
        self.crit = crit
        self.kind = model_kind
        self.p = model.p
        if crit.variant != D:
            self.A = aspect_matrix(crit, model.p)
        if crit.variant == L:
            self.B = np.asarray(crit.matrix, dtype=float)
        elif crit.variant == C:
            self.B = np.outer(crit.vector, crit.vector)

    def _m_po(self, w: np.ndarray, idx: np.ndarray) -> np.ndarray:
        Xa = self.X[idx]
        M = (Xa * (w * self.lam[idx])[:, None]).T @ Xa
        return 0.5 * (M + M.T)

    def value(self, w: np.ndarray, idx: np.ndarray) -> float:
        a, b, m = self.model.gamma_a, self.model.gamma_b, self.model.m
        M_po = self._m_po(w, idx)
        sign, logdet = np.linalg.slogdet(M_po)
        if sign <= 0 or not np.isfinite(logdet):
            return -np.inf
        if self.crit.variant == D:
            if self.kind == POISSON:
                return float(logdet)
            return float(self.p * np.log(a / b) + logdet
                         - np.log1p((m / b) * M_po[0, 0]))
        M_inv = np.linalg.inv(M_po)
        if self.kind == POISSON:
            G = M_inv
        else:
            G = (b / a) * M_inv
            G[0, 0] += m / a
        if self.crit.variant in (DA, DS):
            V = self.A.T @ G @ self.A
            sign_v, logdet_v = np.linalg.slogdet(V)
            if sign_v <= 0 or not np.isfinite(logdet_v):
                return -np.inf
            return float(-logdet_v)
        return float(-np.trace(G @ self.B))

    def gradient(self, w: np.ndarray, idx: np.ndarray) -> np.ndarray:
        a, b, m = self.model.gamma_a, self.model.gamma_b, self.model.m
        Xa = self.X[idx]
        lam = self.lam[idx]
        M_po = self._m_po(w, idx)
        M_inv = np.linalg.inv(M_po)
        if self.crit.variant == D:
            quad = np.einsum("ij,jk,ik->i", Xa, M_inv, Xa)
            if self.kind == POISSON:
                return lam * quad
            return lam * (quad - 1.0 / (M_po[0, 0] + b / m))
        scale = 1.0 if self.kind == POISSON else b / a
        if self.crit.variant in (DA, DS):
            if self.kind == POISSON:
                V = self.A.T @ M_inv @ self.A
            else:
                V = (b / a) * (self.A.T @ M_inv @ self.A) \
                    + (m / a) * np.outer(self.A[0], self.A[0])
            Gmat = Xa @ (M_inv @ self.A)
            return scale * lam * np.einsum("ij,jk,ik->i", Gmat, np.linalg.inv(V), Gmat)
        K = M_inv @ self.B @ M_inv
        return scale * lam * np.einsum("ij,jk,ik->i", Xa, K, Xa)

    def mult_kernel(self, w: np.ndarray, idx: np.ndarray) -> np.ndarray:
        """Sensitivity values driving the multiplicative update (D only)."""
        return self.gradient(w, idx)


def optimize_weights(opts: GridOptions, model: ModelSpec) -> Design:
    """Optimal weights on a fixed candidate set for the requested criterion.

    Multiplicative updates proportional to the sensitivity function drive
    the D-type criteria; when an update fails to improve, and for the
    aspect criteria throughout, a projected-gradient step with
    backtracking halving is used instead.  Iteration is monotone in the
    criterion; weights below 1e-9 are pruned and the rest renormalized.
    """
    pts = np.asarray(opts.candidates, dtype=float).reshape(len(opts.candidates), -1)
    if pts.shape[1] != model.p - 1:
        raise ValueError(f"candidates have dimension {pts.shape[1]}, expected {model.p - 1}")
    X = np.hstack([np.ones((pts.shape[0], 1)), pts])
    lam = np.exp(X @ model.beta_arr)
    obj = _Objective(X, lam, model, opts.criterion, opts.model_kind)

    idx = np.arange(pts.shape[0])
    w = np.full(len(idx), 1.0 / len(idx))
    val = obj.value(w, idx)
    if not np.isfinite(val):
        raise SingularStart("uniform weights on the candidates give a singular matrix")

    use_multiplicative = opts.criterion.variant == D
    for it in range(opts.max_iters):
        accepted = None
        if use_multiplicative:
            psi = obj.mult_kernel(w, idx)
            tau = float(w @ psi)
            if tau > 0 and np.all(psi >= 0):
                w_try = w * psi
                w_try /= w_try.sum()
                val_try = obj.value(w_try, idx)
                if val_try > val:
                    accepted = (w_try, val_try)
        if accepted is None:
            grad = obj.gradient(w, idx)
            step = 1.0
            for _ in range(80):
                w_try = _project_simplex(w + step * grad)
                val_try = obj.value(w_try, idx)
                if val_try > val:
                    accepted = (w_try, val_try)
                    break
                step *= 0.5
        if accepted is None:
            gap = float(np.max(grad) - w @ grad)
            if it == 0 and gap > 1e-6 * (1.0 + abs(val)):
                raise NoImprovement("no ascent step improves the start")
            break
        improvement = accepted[1] - val
        w, val = accepted
        keep = w > _PRUNE
        if keep.sum() < len(w):
            idx = idx[keep]
            w = w[keep] / w[keep].sum()
            val = obj.value(w, idx)
        if improvement < opts.step_tol:
            break
    return Design(points=[tuple(pts[i]) for i in idx], weights=w)


def _family_design(model: ModelSpec, region: DesignRegion, z: float,
                   family: str) -> Design:
    beta = model.beta_arr
    d = vertex_d(region, beta)
    eta_d = float(regressor(d) @ beta)
    if family == FAMILY_PG_D:
        w1, wp = weights_pg(model.p, model.m, model.gamma_b, eta_d, z)
    elif family == FAMILY_POISSON_DS:
        w1, wp = weights_ds(model.p, z)
    else:
        raise ValueError(f"unknown design family {family!r}")
    points = []
    for i in range(model.p - 1):
        x = d.copy()
        x[i] -= z / beta[i + 1]
        points.append(tuple(x))
    points.append(tuple(d))
    return Design(points=points, weights=[w1] * (model.p - 1) + [wp])


def zscan(model: ModelSpec, region: DesignRegion, z_grid, family: str) -> tuple:
    """Brute-force scan of the vertex-plus-edges family over a z grid.

    Returns (z_best, value_best): for the mixed-model D family the value
    is the determinant (maximized), for the slope-subset family the value
    is det(A' M_po^-1 A) (minimized).
    """
    z_grid = [float(z) for z in z_grid]
    if not z_grid or any(z <= 0 for z in z_grid):
        raise ValueError("z grid must be nonempty and positive")
    if sorted(z_grid) != z_grid:
        raise ValueError("z grid must be sorted ascending")
    if any(v == 0.0 for v in model.beta[1:]):
        raise ZeroSlope("design family needs nonzero slopes")

    slope_sel = None
    if family == FAMILY_POISSON_DS:
        slope_sel = np.zeros((model.p, model.p - 1))
        slope_sel[1:, :] = np.eye(model.p - 1)

    best_z, best_val = None, None
    for z in z_grid:
        design = _family_design(model, region, z, family)
        if family == FAMILY_PG_D:
            val = det_pg_via_poisson(design, model)
            better = best_val is None or val > best_val
        else:
            from .model import _m_po

            M_inv = np.linalg.inv(_m_po(design, model))
            val = float(np.linalg.det(slope_sel.T @ M_inv @ slope_sel))
            better = best_val is None or val < best_val
        if better:
            best_z, best_val = z, val
    return best_z, best_val
