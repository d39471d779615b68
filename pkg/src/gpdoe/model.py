"""Poisson-Gamma count model: designs, densities, scores, information matrices.

Each statistical unit carries a multiplicative Gamma(a, b) block effect
(shape a, rate b).  Given the effect theta, the unit's m counts are
independent Poisson with intensity theta * exp(f(x)' beta), where
f(x) = (1, x_1, ..., x_{p-1}) is the first-order regression vector.
Because the block effect is shared within a unit, the m counts are
dependent and the per-unit information matrix is not a sum of
per-observation contributions; it equals a rank-one correction of the
Poisson information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .exceptions import (
    DimensionMismatch,
    ModelMNotOne,
    NegativeCount,
    RankDeficientA,
)

POISSON = "poisson"
POISSON_GAMMA = "poisson-gamma"
MODEL_KINDS = (POISSON, POISSON_GAMMA)

_WEIGHT_SUM_TOL = 1e-12


def _point_tuple(x) -> tuple:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise DimensionMismatch("design points must be flat coordinate vectors")
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class ModelSpec:
    """Model parameters: regression coefficients and Gamma block-effect law.

    beta     -- (beta_0, ..., beta_{p-1}), intercept first
    gamma_a  -- Gamma shape a > 0
    gamma_b  -- Gamma rate b > 0
    m        -- observations per statistical unit, m >= 1
    """

    beta: tuple
    gamma_a: float
    gamma_b: float
    m: int

    def __post_init__(self):
        beta = tuple(float(v) for v in np.atleast_1d(np.asarray(self.beta, dtype=float)))
        if len(beta) < 1:
            raise DimensionMismatch("beta must have at least the intercept entry")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma_a", float(self.gamma_a))
        object.__setattr__(self, "gamma_b", float(self.gamma_b))
        object.__setattr__(self, "m", int(self.m))
        if not self.gamma_a > 0:
            raise ValueError("gamma_a must be > 0")
        if not self.gamma_b > 0:
            raise ValueError("gamma_b must be > 0")
        if self.m < 1:
            raise ValueError("m must be >= 1")

    @property
    def p(self) -> int:
        return len(self.beta)

    @property
    def beta_arr(self) -> np.ndarray:
        return np.asarray(self.beta, dtype=float)

    def to_json(self) -> dict:
        return {"beta": list(self.beta), "a": self.gamma_a, "b": self.gamma_b, "m": self.m}

    @classmethod
    def from_json(cls, obj: dict) -> "ModelSpec":
        return cls(beta=obj["beta"], gamma_a=obj["a"], gamma_b=obj["b"], m=obj["m"])


@dataclass(frozen=True)
class Design:
    """Approximate design: finite support points with probability weights.

    Duplicate points are coalesced (weights summed) at construction, so
    the stored support is pairwise distinct.  Weights must be nonnegative
    and sum to one within 1e-12.
    """

    points: tuple
    weights: tuple

    def __post_init__(self):
        pts = [_point_tuple(x) for x in self.points]
        wts = [float(w) for w in np.atleast_1d(np.asarray(self.weights, dtype=float))]
        if len(pts) != len(wts):
            raise DimensionMismatch("points and weights must have equal length")
        if len(pts) < 1:
            raise ValueError("design needs at least one support point")
        if any(len(x) != len(pts[0]) for x in pts):
            raise DimensionMismatch("all design points must share one dimension")
        if any(w < 0 for w in wts):
            raise ValueError("design weights must be nonnegative")
        merged: dict = {}
        for x, w in zip(pts, wts):
            merged[x] = merged.get(x, 0.0) + w
        total = math.fsum(merged.values())
        if abs(total - 1.0) > _WEIGHT_SUM_TOL:
            raise ValueError(f"design weights sum to {total!r}, expected 1")
        object.__setattr__(self, "points", tuple(merged.keys()))
        object.__setattr__(self, "weights", tuple(merged.values()))

    @property
    def k(self) -> int:
        """Covariate dimension (p - 1)."""
        return len(self.points[0])

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def points_arr(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float).reshape(self.size, self.k)

    @property
    def weights_arr(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def to_json(self) -> dict:
        return {"points": [list(x) for x in self.points], "weights": list(self.weights)}

    @classmethod
    def from_json(cls, obj: dict) -> "Design":
        return cls(points=obj["points"], weights=obj["weights"])


@dataclass(frozen=True)
class PopulationDesign:
    """Mixture of individual designs with unit proportions q."""

    designs: tuple
    q: tuple

    def __post_init__(self):
        designs = tuple(self.designs)
        q = tuple(float(v) for v in np.atleast_1d(np.asarray(self.q, dtype=float)))
        if len(designs) != len(q):
            raise DimensionMismatch("designs and q must have equal length")
        if len(designs) < 1:
            raise ValueError("population design needs at least one component")
        if any(v < 0 for v in q):
            raise ValueError("unit proportions must be nonnegative")
        if abs(math.fsum(q) - 1.0) > _WEIGHT_SUM_TOL:
            raise ValueError("unit proportions must sum to 1")
        if any(d.k != designs[0].k for d in designs):
            raise DimensionMismatch("all component designs must share one dimension")
        object.__setattr__(self, "designs", designs)
        object.__setattr__(self, "q", q)

    def to_json(self) -> dict:
        return {"designs": [d.to_json() for d in self.designs], "q": list(self.q)}

    @classmethod
    def from_json(cls, obj: dict) -> "PopulationDesign":
        return cls(designs=tuple(Design.from_json(d) for d in obj["designs"]), q=obj["q"])


@dataclass(frozen=True)
class DesignRegion:
    """Axis-aligned rectangle [u_1, v_1] x ... x [u_{p-1}, v_{p-1}]."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lower = _point_tuple(self.lower)
        upper = _point_tuple(self.upper)
        if len(lower) != len(upper):
            raise DimensionMismatch("lower and upper must have equal length")
        if any(not lo < hi for lo, hi in zip(lower, upper)):
            raise ValueError("region needs lower[i] < upper[i] for every axis")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def k(self) -> int:
        return len(self.lower)

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = _point_tuple(x)
        return all(lo - tol <= v <= hi + tol for v, lo, hi in zip(x, self.lower, self.upper))

    def to_json(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper)}

    @classmethod
    def from_json(cls, obj: dict) -> "DesignRegion":
        return cls(lower=obj["lower"], upper=obj["upper"])


@dataclass(frozen=True, eq=False)
class InfoMatrix:
    """Symmetric PSD information matrix tagged with its model kind."""

    matrix: np.ndarray
    kind: str

    def __post_init__(self):
        M = numerics.as_sym_matrix(self.matrix)
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if float(np.linalg.eigvalsh(M).min()) < -1e-10:
            raise ValueError("information matrix must be positive semidefinite")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def regressor(x) -> np.ndarray:
    """Regression vector f(x) = (1, x_1, ..., x_{p-1})."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise DimensionMismatch("regressor input must be a flat coordinate vector")
    return np.concatenate(([1.0], x))


def design_matrix(design: Design) -> np.ndarray:
    """Rows f(x_j) for the support points of a design (l x p)."""
    return np.hstack([np.ones((design.size, 1)), design.points_arr])


def _check_dims(design: Design, model: ModelSpec):
    if design.k != model.p - 1:
        raise DimensionMismatch(
            f"design points have dimension {design.k}, expected p-1={model.p - 1}")


def _m_po(design: Design, model: ModelSpec) -> np.ndarray:
    X = design_matrix(design)
    lam = np.exp(X @ model.beta_arr)
    M = (X * (design.weights_arr * lam)[:, None]).T @ X
    return 0.5 * (M + M.T)


def info_poisson(design: Design, model: ModelSpec) -> InfoMatrix:
    """Poisson-model information matrix sum_j w_j exp(f(x_j)'beta) f f'."""
    _check_dims(design, model)
    return InfoMatrix(_m_po(design, model), POISSON)


def _pg_from_po(M_po: np.ndarray, model: ModelSpec) -> np.ndarray:
    me1 = M_po[:, 0]
    denom = M_po[0, 0] + model.gamma_b / model.m
    M = (model.gamma_a / model.gamma_b) * (M_po - np.outer(me1, me1) / denom)
    return 0.5 * (M + M.T)


def info_pg(design: Design, model: ModelSpec) -> InfoMatrix:
    """Poisson-Gamma information matrix of a design.

    Equals (a/b) * (M_po - M_po e1 e1' M_po / (e1' M_po e1 + b/m)) where
    M_po is the Poisson information and e1 selects the intercept; it has
    the same rank as M_po.
    """
    _check_dims(design, model)
    return InfoMatrix(_pg_from_po(_m_po(design, model), model), POISSON_GAMMA)


def l_matrix(design: Design, model: ModelSpec) -> np.ndarray:
    """Regular factor L with info_pg == (a/b) L M_po == (a/b) M_po L'.

    L = I - M_po e1 e1' / (e1' M_po e1 + b/m); only its first column
    differs from the identity, and det(L) = 1 - e1'M_po e1 / (e1'M_po e1 + b/m).
    """
    _check_dims(design, model)
    M_po = _m_po(design, model)
    denom = M_po[0, 0] + model.gamma_b / model.m
    L = np.eye(model.p)
    L[:, 0] -= M_po[:, 0] / denom
    return L


def pg_inverse_from_poisson(design: Design, model: ModelSpec) -> np.ndarray:
    """Generalized inverse of info_pg built from the Poisson-side pseudoinverse.

    (b/a) * pinv(M_po) + (m/a) * e1 e1' satisfies M G M == M for
    M = info_pg; when M_po is regular it is the exact inverse.
    """
    _check_dims(design, model)
    M_po = _m_po(design, model)
    G = (model.gamma_b / model.gamma_a) * numerics.generalized_inverse(M_po)
    G[0, 0] += model.m / model.gamma_a
    return G


def _check_obs(model: ModelSpec, xs, ys=None) -> tuple:
    xs = [_point_tuple(x) for x in xs]
    if len(xs) != model.m:
        raise DimensionMismatch(f"expected {model.m} observation points, got {len(xs)}")
    if any(len(x) != model.p - 1 for x in xs):
        raise DimensionMismatch("observation points must have dimension p-1")
    F = np.array([regressor(x) for x in xs])
    if ys is None:
        return F, None
    ys = np.atleast_1d(np.asarray(ys))
    if ys.shape != (model.m,):
        raise DimensionMismatch(f"expected {model.m} counts, got shape {ys.shape}")
    if np.any(ys < 0) or np.any(ys != np.floor(ys)):
        raise NegativeCount("counts must be nonnegative integers")
    return F, ys.astype(float)


def log_density(model: ModelSpec, xs, ys) -> float:
    """Log joint density of the m counts of one unit, block effect integrated out."""
    F, y = _check_obs(model, xs, ys)
    a, b = model.gamma_a, model.gamma_b
    eta = F @ model.beta_arr
    total = float(y.sum())
    s = float(np.exp(eta).sum())
    return (
        math.lgamma(a + total)
        - math.lgamma(a)
        - float(sum(math.lgamma(v + 1.0) for v in y))
        + float(eta @ y)
        - (a + total) * math.log(b + s)
        + a * math.log(b)
    )


def score(model: ModelSpec, xs, ys) -> np.ndarray:
    """Gradient of log_density with respect to beta."""
    F, y = _check_obs(model, xs, ys)
    a, b = model.gamma_a, model.gamma_b
    lam = np.exp(F @ model.beta_arr)
    total = float(y.sum())
    s = float(lam.sum())
    return F.T @ y - ((a + total) / (b + s)) * (F.T @ lam)


def fisher_info_unit(model: ModelSpec, xs) -> np.ndarray:
    """Fisher information of one unit's m observations at points xs.

    Replication is expressed by repeating points in xs.  For a design
    with integer replication weights r_j/m this equals m * info_pg.
    """
    F, _ = _check_obs(model, xs)
    lam = np.exp(F @ model.beta_arr)
    I_po = (F * lam[:, None]).T @ F
    me1 = I_po[:, 0]
    denom = I_po[0, 0] + model.gamma_b
    I = (model.gamma_a / model.gamma_b) * (I_po - np.outer(me1, me1) / denom)
    return 0.5 * (I + I.T)


def negbin_total_info(points, model: ModelSpec) -> np.ndarray:
    """Total information over independent single-observation units (m == 1).

    sum_i a * lam_i / (lam_i + b) * f(x_i) f(x_i)' with lam_i = exp(f(x_i)'beta).
    """
    if model.m != 1:
        raise ModelMNotOne(f"requires m == 1, got m = {model.m}")
    F = np.array([regressor(x) for x in points])
    if F.shape[1] != model.p:
        raise DimensionMismatch("points must have dimension p-1")
    lam = np.exp(F @ model.beta_arr)
    coef = model.gamma_a * lam / (lam + model.gamma_b)
    M = (F * coef[:, None]).T @ F
    return 0.5 * (M + M.T)


def info_population(pop: PopulationDesign, model: ModelSpec) -> InfoMatrix:
    """Convex combination of the component designs' Poisson-Gamma information."""
    M = sum(q * info_pg(d, model).matrix for d, q in zip(pop.designs, pop.q))
    return InfoMatrix(M, POISSON_GAMMA)


def merge_population(pop: PopulationDesign) -> Design:
    """Mixture design sum_i q_i xi_i with overlapping support coalesced."""
    points = []
    weights = []
    for d, q in zip(pop.designs, pop.q):
        points.extend(d.points)
        weights.extend(q * w for w in d.weights)
    return Design(points=points, weights=weights)


def identifiable(design: Design, model: ModelSpec, A, model_kind: str = POISSON_GAMMA,
                 tol: float = 1e-9) -> bool:
    """Whether the linear aspect A'beta is identifiable under the design.

    True iff the columns of A lie in the column space of the information
    matrix of the requested model kind; the answer is the same for both
    kinds because the two matrices share their column space.
    """
    _check_dims(design, model)
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.shape[0] != model.p:
        raise DimensionMismatch(f"A must have {model.p} rows, got {A.shape[0]}")
    s = A.shape[1]
    if not 1 <= s <= model.p or numerics.general_rank(A, tol) < s:
        raise RankDeficientA("A must have full column rank s <= p")
    if model_kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {model_kind!r}")
    M_po = _m_po(design, model)
    M = M_po if model_kind == POISSON else _pg_from_po(M_po, model)
    return numerics.general_rank(M, tol) == numerics.general_rank(np.hstack([M, A]), tol)
