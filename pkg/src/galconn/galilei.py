"""Galilei structures, observers, and degenerate-metric index gymnastics."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .checks import Report, finish, lower_bound_check, residual_check
from .expr import Evaluator, mul
from .linalg import inverse
from .tensor import DOWN, UP, TensorField, VarianceError, einsum, tensor_product

TOL = 1e-10
EIG_TOL = 1e-8


class StructureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GalileiStructure:
    """Clock form ``tau`` (DOWN) and space metric ``h`` (UP, UP) on an (n+1)-chart."""

    tau: TensorField
    h: TensorField

    def __post_init__(self):
        if self.tau.sig != "D":
            raise VarianceError(f"clock form must have signature D, got {self.tau.sig}")
        if self.h.sig != "UU":
            raise VarianceError(f"space metric must have signature UU, got {self.h.sig}")
        if self.tau.dim != self.h.dim:
            raise ValueError("tau and h live on charts of different dimension")
        if self.tau.dim < 2:
            raise StructureError("a Galilei structure needs n >= 1 spatial dimensions (dim >= 2)")

    @property
    def dim(self) -> int:
        return self.tau.dim

    @property
    def n(self) -> int:
        return self.dim - 1


@dataclass(frozen=True, eq=False)
class Observer:
    """Unit timelike vector field ``v`` (tau(v) = 1 is checked, not enforced)."""

    v: TensorField

    def __post_init__(self):
        if self.v.sig != "U":
            raise VarianceError(f"observer must be a vector field, got {self.v.sig}")

    @property
    def dim(self) -> int:
        return self.v.dim


def _v(v) -> TensorField:
    return v.v if isinstance(v, Observer) else v


def flat_structure(dim: int) -> GalileiStructure:
    """``tau = dt`` and ``h = sum_i d_i (x) d_i`` in a chart ``(t, x^1, ..., x^n)``."""
    tau = TensorField.from_function(dim, "D", lambda m: 1.0 if m == 0 else 0.0)
    h = TensorField.from_function(dim, "UU", lambda a, b: 1.0 if a == b and a > 0 else 0.0)
    return GalileiStructure(tau, h)


def rest_observer(dim: int) -> Observer:
    return Observer(TensorField.from_function(dim, "U", lambda m: 1.0 if m == 0 else 0.0))


def identity(dim: int) -> TensorField:
    return TensorField.from_function(dim, "UD", lambda a, b: 1.0 if a == b else 0.0)


# ---------------------------------------------------------------------------


def validate_structure(g: GalileiStructure, points, evaluator: Evaluator | None = None) -> Report:
    """Check the defining conditions of a Galilei structure at sample points."""
    ev = evaluator or Evaluator(points)
    rep = Report()
    tau, tbad = ev.array(g.tau.components)
    rep.add(lower_bound_check("tau_nonvanishing", np.abs(tau).max(axis=1), tbad, TOL))
    rep.add(residual_check("h_symmetric", g.h, g.h.permute((1, 0)), ev, TOL))
    rep.add(residual_check("tau_h_zero", einsum("m,mn->n", g.tau, g.h), None, ev, TOL))

    h, hbad = ev.array(g.h.components)
    ok = ~hbad & np.isfinite(h).all(axis=(1, 2))
    n_pts = h.shape[0]
    negative = np.zeros(n_pts)
    kernel = np.zeros(n_pts)
    spatial_min = np.zeros(n_pts)
    for k in np.flatnonzero(ok):
        hs = 0.5 * (h[k] + h[k].T)
        lam = np.linalg.eigvalsh(hs)
        order = np.argsort(np.abs(lam))
        kernel[k] = abs(lam[order[0]])
        spatial_min[k] = np.min(lam[order[1:]])
        negative[k] = max(0.0, -lam.min())
    rep.add(finish("h_positive_semidefinite", negative, ~ok, EIG_TOL))
    rep.add(finish("h_degenerate_direction", kernel, ~ok, EIG_TOL))
    rep.add(lower_bound_check("h_rank_n", spatial_min, ~ok, EIG_TOL))
    return rep


def validate_observer(g: GalileiStructure, v, points, evaluator: Evaluator | None = None) -> Report:
    ev = evaluator or Evaluator(points)
    rep = Report()
    rep.add(residual_check("observer_unit_timelike", einsum("m,m->", g.tau, _v(v)), 1.0, ev, TOL))
    return rep


def spatial_projector(g: GalileiStructure, v) -> TensorField:
    """``P^mu_nu = delta^mu_nu - v^mu tau_nu``."""
    return identity(g.dim) - tensor_product(_v(v), g.tau)


@lru_cache(maxsize=128)
def _hv_cached(g: GalileiStructure, v: TensorField) -> TensorField:
    m = (g.h + tensor_product(v, v)).components
    inv = inverse(m)
    inv_f = TensorField(g.dim, "DD", inv)
    return inv_f - tensor_product(g.tau, g.tau)


def covariant_space_metric(g: GalileiStructure, v) -> TensorField:
    """Covariant space metric ``h_v`` as a symbolic field.

    Uses the closed form ``(h + v v)^-1 - tau tau`` with the inverse
    taken by cofactors, so downstream derivatives stay exact. Poles of
    the result are exactly the points where ``h + v v`` is singular.
    """
    return _hv_cached(g, _v(v))


def covariant_space_metric_lstsq(g: GalileiStructure, v, point) -> np.ndarray:
    """Pointwise h_v from the defining equations ``h_v v = 0``, ``h_v h = P``.

    An independent numeric route: the symmetric unknown is solved by
    least squares on the stacked linear system.
    """
    ev = Evaluator([point])
    tau = ev.array(g.tau.components)[0][0]
    h = ev.array(g.h.components)[0][0]
    vv = ev.array(_v(v).components)[0][0]
    d = tau.size
    P = np.eye(d) - np.outer(vv, tau)
    pairs = [(i, j) for i in range(d) for j in range(i, d)]
    col = {p: k for k, p in enumerate(pairs)}

    def var(i, j):
        return col[(min(i, j), max(i, j))]

    rows, rhs = [], []
    for mu in range(d):
        r = np.zeros(len(pairs))
        for nu in range(d):
            r[var(mu, nu)] += vv[nu]
        rows.append(r)
        rhs.append(0.0)
    for mu in range(d):
        for rho in range(d):
            r = np.zeros(len(pairs))
            for nu in range(d):
                r[var(mu, nu)] += h[nu, rho]
            rows.append(r)
            rhs.append(P[rho, mu])
    sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    out = np.empty((d, d))
    for (i, j), k in col.items():
        out[i, j] = out[j, i] = sol[k]
    return out


def check_covariant_space_metric(g: GalileiStructure, v, points, evaluator: Evaluator | None = None) -> Report:
    """Residuals of the defining equations of h_v, tolerance 1e-9."""
    ev = evaluator or Evaluator(points)
    hv = covariant_space_metric(g, v)
    P = spatial_projector(g, v)
    rep = Report()
    rep.add(residual_check("hv_annihilates_v", einsum("mn,n->m", hv, _v(v)), None, ev, 1e-9))
    rep.add(residual_check("hv_h_is_projector", einsum("mn,nr->rm", hv, g.h), P, ev, 1e-9))
    rep.add(residual_check("hv_symmetric", hv, hv.permute((1, 0)), ev, 1e-9))
    return rep


def raise_index(a: TensorField, slot: int, g: GalileiStructure) -> TensorField:
    """Contract DOWN slot ``slot`` with ``h``; the slot keeps its position."""
    if a.signature[slot] is not DOWN:
        raise VarianceError(f"slot {slot} is not a DOWN slot")
    return _swap_slot(a, slot, g.h, UP)


def lower_index(a: TensorField, slot: int, g: GalileiStructure, v) -> TensorField:
    """Contract UP slot ``slot`` with ``h_v``; the slot keeps its position."""
    if a.signature[slot] is not UP:
        raise VarianceError(f"slot {slot} is not an UP slot")
    return _swap_slot(a, slot, covariant_space_metric(g, v), DOWN)


def _swap_slot(a: TensorField, slot: int, metric: TensorField, new: object) -> TensorField:
    letters = "abcdefghijkl"[: a.rank]
    src = letters
    out = letters[:slot] + "z" + letters[slot + 1 :]
    res = einsum(f"{src},{letters[slot]}z->{out}", a.components, metric.components)
    sig = a.signature[:slot] + (new,) + a.signature[slot + 1 :]
    return TensorField(a.dim, sig, res)


def split(x: TensorField, g: GalileiStructure, v) -> tuple[TensorField, TensorField]:
    """Timelike and spacelike parts of a vector or covector with respect to ``v``.

    Vector X: ``(v tau(X), P X)``; covector alpha: ``(tau alpha(v), alpha P)``.
    """
    if x.rank != 1:
        raise ValueError(f"split needs a rank-1 field, got rank {x.rank}")
    vv = _v(v)
    P = spatial_projector(g, v)
    if x.signature[0] is UP:
        s = einsum("m,m->", g.tau, x).components[()]
        time = vv.map(lambda e: mul(e, s))
        space = einsum("mn,n->m", P, x)
    else:
        s = einsum("m,m->", vv, x).components[()]
        time = g.tau.map(lambda e: mul(e, s))
        space = einsum("nm,n->m", P, x, signature="D")
    return time, space


__all__ = [
    "StructureError",
    "GalileiStructure",
    "Observer",
    "flat_structure",
    "rest_observer",
    "identity",
    "validate_structure",
    "validate_observer",
    "spatial_projector",
    "covariant_space_metric",
    "covariant_space_metric_lstsq",
    "check_covariant_space_metric",
    "raise_index",
    "lower_index",
    "split",
]
