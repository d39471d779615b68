"""Design optimality criteria: D, D_A/D_s, L and c, plus efficiencies.

Criterion values follow the conventional orientation: D is maximized,
the determinant- and trace-based aspect criteria are minimized.  The
orientation helper lets optimizers maximize uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .exceptions import (
    BadIndexSet,
    NotIdentifiable,
    SingularForD,
    ZeroCriterion,
)
from .model import (
    POISSON,
    POISSON_GAMMA,
    Design,
    ModelSpec,
    _m_po,
    _pg_from_po,
    identifiable,
)

D = "D"
DA = "DA"
DS = "Ds"
L = "L"
C = "c"

_MAXIMIZING = {D: True, DA: False, DS: False, L: False, C: False}


@dataclass(frozen=True)
class CriterionSpec:
    """Tagged criterion choice.

    variant -- one of "D", "DA", "Ds", "L", "c"
    matrix  -- A (p x s) for DA, or B (p x p, symmetric PSD) for L
    vector  -- c (length p) for the c-criterion
    indices -- parameter indices for Ds
    """

    variant: str
    matrix: tuple = None
    vector: tuple = None
    indices: tuple = None

    def __post_init__(self):
        if self.variant not in _MAXIMIZING:
            raise ValueError(f"unknown criterion variant {self.variant!r}")
        if self.variant == DA:
            A = np.atleast_2d(np.asarray(self.matrix, dtype=float))
            p, s = A.shape
            if not 1 <= s < p:
                raise ValueError("DA needs A with s columns, 1 <= s < p rows")
            if numerics.general_rank(A) < s:
                raise ValueError("DA needs A with full column rank")
            object.__setattr__(self, "matrix", tuple(map(tuple, A)))
        elif self.variant == L:
            B = numerics.as_sym_matrix(self.matrix)
            if float(np.linalg.eigvalsh(B).min()) < -1e-10:
                raise ValueError("L needs a symmetric positive semidefinite B")
            object.__setattr__(self, "matrix", tuple(map(tuple, B)))
        elif self.variant == C:
            c = np.atleast_1d(np.asarray(self.vector, dtype=float))
            if not np.any(c != 0):
                raise ValueError("c-criterion needs a nonzero vector")
            object.__setattr__(self, "vector", tuple(c))
        elif self.variant == DS:
            idx = tuple(sorted({int(i) for i in self.indices}))
            if len(idx) < 1:
                raise BadIndexSet("index set must be nonempty")
            object.__setattr__(self, "indices", idx)

    @classmethod
    def d(cls) -> "CriterionSpec":
        return cls(variant=D)

    @classmethod
    def da(cls, A) -> "CriterionSpec":
        return cls(variant=DA, matrix=A)

    @classmethod
    def ds(cls, indices) -> "CriterionSpec":
        return cls(variant=DS, indices=tuple(indices))

    @classmethod
    def l(cls, B) -> "CriterionSpec":
        return cls(variant=L, matrix=B)

    @classmethod
    def c(cls, c) -> "CriterionSpec":
        return cls(variant=C, vector=c)

    def to_json(self) -> dict:
        if self.variant == D:
            return {"type": "D"}
        if self.variant == DA:
            return {"type": "DA", "A": [list(r) for r in self.matrix]}
        if self.variant == DS:
            return {"type": "Ds", "indices": list(self.indices)}
        if self.variant == L:
            return {"type": "L", "B": [list(r) for r in self.matrix]}
        return {"type": "c", "c": list(self.vector)}

    @classmethod
    def from_json(cls, obj: dict) -> "CriterionSpec":
        t = obj["type"]
        if t == "D":
            return cls.d()
        if t == "DA":
            return cls.da(obj["A"])
        if t == "Ds":
            return cls.ds(obj["indices"])
        if t == "L":
            return cls.l(obj["B"])
        if t == "c":
            return cls.c(obj["c"])
        raise ValueError(f"unknown criterion type {t!r}")


def is_maximizing(crit: CriterionSpec) -> bool:
    """True for criteria where larger values are better (only D)."""
    return _MAXIMIZING[crit.variant]


def selector_matrix(indices, p: int) -> np.ndarray:
    """Column selector A with A[i, j] = 1 for the j-th requested index."""
    idx = tuple(sorted({int(i) for i in indices}))
    if not idx or len(idx) >= p or any(i < 0 or i >= p for i in idx):
        raise BadIndexSet(f"indices must be a nonempty proper subset of 0..{p - 1}")
    A = np.zeros((p, len(idx)))
    for j, i in enumerate(idx):
        A[i, j] = 1.0
    return A


def ds_spec(indices, p: int) -> CriterionSpec:
    """Subset criterion as an explicit DA spec with a coordinate selector."""
    return CriterionSpec.da(selector_matrix(indices, p))


def aspect_matrix(crit: CriterionSpec, p: int) -> np.ndarray:
    """The p x s matrix whose columns span the targeted linear aspect."""
    if crit.variant == DA:
        return np.asarray(crit.matrix, dtype=float)
    if crit.variant == DS:
        return selector_matrix(crit.indices, p)
    if crit.variant == C:
        return np.asarray(crit.vector, dtype=float)[:, None]
    if crit.variant == L:
        B = np.asarray(crit.matrix, dtype=float)
        vals, vecs = np.linalg.eigh(B)
        cut = 1e-12 * max(1.0, float(np.max(np.abs(vals))))
        keep = vals > cut
        if not np.any(keep):
            raise ValueError("L-criterion matrix B is zero")
        return vecs[:, keep] * np.sqrt(vals[keep])
    raise ValueError(f"criterion {crit.variant!r} has no aspect matrix")


def _info(design: Design, model: ModelSpec, model_kind: str) -> np.ndarray:
    M_po = _m_po(design, model)
    if model_kind == POISSON:
        return M_po
    if model_kind == POISSON_GAMMA:
        return _pg_from_po(M_po, model)
    raise ValueError(f"unknown model kind {model_kind!r}")


def _ginv(M: np.ndarray) -> np.ndarray:
    if numerics.sym_rank(M, 1e-9) == M.shape[0]:
        return np.linalg.inv(M)
    return numerics.generalized_inverse(M)


def criterion_value(design: Design, model: ModelSpec, crit: CriterionSpec,
                    model_kind: str = POISSON_GAMMA) -> float:
    """Criterion value of a design under the requested model kind.

    D returns det(M) (larger is better).  DA/Ds return det(A' M^- A),
    L returns tr(M^- B) and c returns c' M^- c (all smaller is better);
    a generalized inverse is used when M is singular but the aspect is
    identifiable, where the value does not depend on the choice.
    """
    M = _info(design, model, model_kind)
    if crit.variant == D:
        if numerics.sym_rank(M, 1e-9) < model.p:
            raise SingularForD("D-criterion needs a regular information matrix")
        return float(np.linalg.det(M))
    A = aspect_matrix(crit, model.p)
    if not identifiable(design, model, A, model_kind):
        raise NotIdentifiable("requested aspect not identifiable under this design")
    G = _ginv(M)
    if crit.variant in (DA, DS):
        return float(np.linalg.det(A.T @ G @ A))
    if crit.variant == L:
        return float(np.trace(G @ np.asarray(crit.matrix, dtype=float)))
    c = np.asarray(crit.vector, dtype=float)
    return float(c @ G @ c)


def det_pg_via_poisson(design: Design, model: ModelSpec) -> float:
    """det of the Poisson-Gamma information via its Poisson-side decomposition.

    (a/b)^p * det(M_po) / (1 + (m/b) e1' M_po e1); equals det(info_pg)
    including the singular case, where both sides vanish.
    """
    M_po = _m_po(design, model)
    a, b, m = model.gamma_a, model.gamma_b, model.m
    return (a / b) ** model.p * float(np.linalg.det(M_po)) / (1.0 + (m / b) * M_po[0, 0])


def _aspect_dim(crit: CriterionSpec, p: int) -> int:
    return aspect_matrix(crit, p).shape[1]


def efficiency(design: Design, model: ModelSpec, crit: CriterionSpec,
               model_kind: str, optimal: Design) -> float:
    """Efficiency of a design relative to an optimal one.

    Homogeneous-version ratios: [det/det]^(1/p) for D,
    [det_opt/det]^(1/s) for DA/Ds, and the plain ratio optimal/candidate
    for L and c.  Values lie in (0, 1] when `optimal` is truly optimal.
    """
    if crit.variant == D:
        num = float(np.linalg.det(_info(design, model, model_kind)))
        den = float(np.linalg.det(_info(optimal, model, model_kind)))
        if den <= 0.0:
            raise ZeroCriterion("optimal design has zero D-criterion value")
        return (num / den) ** (1.0 / model.p)
    val_design = criterion_value(design, model, crit, model_kind)
    val_opt = criterion_value(optimal, model, crit, model_kind)
    if val_design <= 0.0:
        raise ZeroCriterion("candidate design has zero criterion value")
    if crit.variant in (DA, DS):
        s = _aspect_dim(crit, model.p)
        return (val_opt / val_design) ** (1.0 / s)
    return val_opt / val_design
