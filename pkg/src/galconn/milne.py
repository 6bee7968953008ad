"""Milne boosts: changing the observer that represents a fixed connection.

No closed-form transformation law for the free data is used. The data
in the new gauge is obtained by re-extracting from the rebuilt
connection, and invariance is certified by rebuilding once more.
"""

from __future__ import annotations

from .checks import CheckResult, residual_check
from .connection import ROUNDTRIP_TOL, Connection, ConnectionData, build_connection, extract_data
from .expr import Evaluator
from .galilei import GalileiStructure, Observer, _v
from .tensor import TensorField, einsum

SPACELIKE_TOL = 1e-10


class NotSpacelikeError(ValueError):
    pass


def boost(v, w: TensorField, g: GalileiStructure, points) -> Observer:
    """Boost the observer ``v`` by the spacelike field ``w``: ``v' = v + w``.

    ``tau(w) = 0`` is checked at ``points`` and a violation raises
    :class:`NotSpacelikeError`.
    """
    if w.sig != "U":
        raise NotSpacelikeError(f"boost must be a vector field, got signature {w.sig}")
    res = residual_check("boost_spacelike", einsum("m,m->", g.tau, w), None, Evaluator(points), SPACELIKE_TOL)
    if not res.passed:
        raise NotSpacelikeError(f"tau(w) != 0 (max |tau(w)| = {res.max_residual:.3e})")
    return Observer(_v(v) + w)


def transform_data(c: Connection, g: GalileiStructure, v, v_new) -> ConnectionData:
    """Free data of the same connection ``c`` relative to the new observer.

    ``v`` is accepted for symmetry with the call sites; the result only
    depends on ``c`` and ``v_new``.
    """
    return extract_data(c, g, v_new)


def verify_milne_invariance(
    g: GalileiStructure,
    v,
    v_new,
    data: ConnectionData,
    points,
    tol: float = ROUNDTRIP_TOL,
    evaluator: Evaluator | None = None,
) -> CheckResult:
    """Max coefficient residual between the connection built from ``(v, data)``
    and the one rebuilt from its representation relative to ``v_new``."""
    ev = evaluator or Evaluator(points)
    c = build_connection(g, v, data)
    data_new = transform_data(c, g, v, v_new)
    c_new = build_connection(g, v_new, data_new)
    return residual_check("milne_invariance", c.gamma, c_new.gamma, ev, tol)


__all__ = ["NotSpacelikeError", "boost", "transform_data", "verify_milne_invariance"]
