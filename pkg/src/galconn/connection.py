"""Affine connections on Galilei manifolds and their free-field classification.

Conventions: ``gamma[r, m, n]`` is the coefficient of ``d_r`` in
``nabla_{d_m} d_n`` (first lower index differentiates), torsion is
``T^r_mn = Gamma^r_mn - Gamma^r_nm``, and for any field the covariant
derivative slot is prepended.

Index positions in the classification formulas: indices are raised
with ``h`` and lowered with the covariant space metric ``h_v``. For the
non-metricity ``Q_r^{ab}`` a lowered rear index keeps its slot, e.g.
``Q_{mn}^l = Q_m^{sl} h_{sn}``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .checks import Report, residual_check
from .expr import Evaluator, add, mul
from .galilei import GalileiStructure, Observer, _v, covariant_space_metric, spatial_projector
from .tensor import DOWN, UP, TensorField, einsum, obj_array, partial_derivative

ROUNDTRIP_TOL = 1e-8
IDENTITY_TOL = 1e-9
TIGHT_TOL = 1e-10


class DataInvariantError(ValueError):
    """Raised when free-field connection data violates its symmetry or spacelike constraints."""


@dataclass(frozen=True, eq=False)
class Connection:
    """Connection coefficients ``Gamma^r_mn`` as an object array of shape (dim, dim, dim)."""

    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=object)
        d = g.shape[0]
        if g.shape != (d, d, d):
            raise ValueError(f"connection coefficients must have shape (d, d, d), got {g.shape}")
        # route through TensorField for Expr coercion and immutability
        object.__setattr__(self, "gamma", TensorField(d, "UDD", g).components)

    @property
    def dim(self) -> int:
        return self.gamma.shape[0]

    @classmethod
    def zero(cls, dim: int) -> "Connection":
        return cls(obj_array((dim,) * 3))

    @classmethod
    def from_function(cls, dim: int, fn) -> "Connection":
        return cls(TensorField.from_function(dim, "UDD", fn).components)

    def as_field(self) -> TensorField:
        """Coefficients packaged with signature UDD (they do not transform as a tensor)."""
        return TensorField(self.dim, "UDD", self.gamma)

    def __sub__(self, other: "Connection") -> TensorField:
        return self.as_field() - other.as_field()


@dataclass(frozen=True, eq=False)
class ConnectionData:
    """Free fields representing a connection relative to an observer.

    ``spatial_torsion`` (UDD) is ``P^r_l T^l_mn``, ``qhat`` (DD) is
    ``nabla tau``, ``spatial_q`` (DUU) is ``Q_r^{kl} P^m_k P^n_l`` and
    ``omega`` (DD) is the Newton-Coriolis form.
    """

    spatial_torsion: TensorField
    qhat: TensorField
    spatial_q: TensorField
    omega: TensorField

    def __post_init__(self):
        for name, sig in (("spatial_torsion", "UDD"), ("qhat", "DD"), ("spatial_q", "DUU"), ("omega", "DD")):
            f = getattr(self, name)
            if f.sig != sig:
                raise DataInvariantError(f"{name} must have signature {sig}, got {f.sig}")

    @property
    def dim(self) -> int:
        return self.qhat.dim

    @classmethod
    def zero(cls, dim: int) -> "ConnectionData":
        return cls(
            TensorField.zeros(dim, "UDD"),
            TensorField.zeros(dim, "DD"),
            TensorField.zeros(dim, "DUU"),
            TensorField.zeros(dim, "DD"),
        )

    def fields(self) -> dict[str, TensorField]:
        return {
            "spatial_torsion": self.spatial_torsion,
            "qhat": self.qhat,
            "spatial_q": self.spatial_q,
            "omega": self.omega,
        }


@dataclass(frozen=True, eq=False)
class FullFields:
    """Torsion, both non-metricities and the Newton-Coriolis form, unprojected."""

    torsion: TensorField
    qhat: TensorField
    q: TensorField
    omega: TensorField


@dataclass(frozen=True, eq=False)
class DifferenceTensor:
    """``S^r_mn = Gamma^r_mn - Gamma'^r_mn``; a genuine (1,2) tensor."""

    s: TensorField


# ---------------------------------------------------------------------------
# basic operations


def covariant_derivative(c: Connection, a: TensorField) -> TensorField:
    """``nabla a`` with the derivative slot prepended (Leibniz extension)."""
    if c.dim != a.dim:
        raise ValueError(f"dimension mismatch: connection {c.dim}, field {a.dim}")
    d = a.dim
    out = partial_derivative(a).components.copy()
    gam = c.gamma
    comps = a.components
    for mu in range(d):
        for idx in itertools.product(range(d), repeat=a.rank):
            terms = [out[(mu,) + idx]]
            for k, var in enumerate(a.signature):
                for lam in range(d):
                    swapped = idx[:k] + (lam,) + idx[k + 1 :]
                    if var is UP:
                        terms.append(mul(gam[idx[k], mu, lam], comps[swapped]))
                    else:
                        terms.append(mul(-1.0, gam[lam, mu, idx[k]], comps[swapped]))
            out[(mu,) + idx] = add(*terms)
    return TensorField(d, (DOWN,) + a.signature, out)


def torsion(c: Connection) -> TensorField:
    """``T^r_mn = 2 Gamma^r_[mn]``."""
    f = c.as_field()
    return f - f.permute((0, 2, 1))


def nonmetricities(c: Connection, g: GalileiStructure) -> tuple[TensorField, TensorField]:
    """``(qhat, q) = (nabla tau, nabla h)``."""
    return covariant_derivative(c, g.tau), covariant_derivative(c, g.h)


def newton_coriolis(c: Connection, g: GalileiStructure, v) -> TensorField:
    """``Omega_mn = 2 (nabla_[m v^r) h_n]r`` with ``h_v`` the covariant space metric."""
    lam = covariant_derivative(c, _v(v))
    hv = covariant_space_metric(g, v)
    x = einsum("mr,nr->mn", lam, hv)
    return x - x.permute((1, 0))


def exterior_derivative_1form(a: TensorField) -> TensorField:
    """``(d a)_mn = d_m a_n - d_n a_m``."""
    da = partial_derivative(a)
    return da - da.permute((1, 0))


def decompose_nc(omega: TensorField, g: GalileiStructure, v) -> tuple[TensorField, TensorField]:
    """Split ``Omega = 2 tau_[m alpha_n] + 2 w_mn`` into ``(alpha, w)``.

    ``alpha_n = v^m Omega_mn`` (so ``alpha(v) = 0``) and ``w`` is half
    the doubly projected form.
    """
    alpha = einsum("m,mn->n", _v(v), omega)
    P = spatial_projector(g, v)
    w = einsum("km,ln,kl->mn", P, P, omega, signature="DD") * 0.5
    return alpha, w


def recompose_nc(alpha: TensorField, w: TensorField, g: GalileiStructure) -> TensorField:
    ta = einsum("m,n->mn", g.tau, alpha)
    return ta - ta.permute((1, 0)) + w * 2.0


# ---------------------------------------------------------------------------
# special connection and classification


def _christoffel_part(g: GalileiStructure, v) -> TensorField:
    """``1/2 h^rs (d_m h_ns + d_n h_ms - d_s h_mn)`` with ``h_v`` lowered."""
    dh = partial_derivative(covariant_space_metric(g, v)).components
    d = g.dim
    comb = obj_array((d, d, d))
    for m, n, s in itertools.product(range(d), repeat=3):
        comb[m, n, s] = add(dh[m, n, s], dh[n, m, s], mul(-1.0, dh[s, m, n]))
    return einsum("rs,mns->rmn", g.h.components, comb, signature="UDD") * 0.5


def special_connection(g: GalileiStructure, v) -> Connection:
    """The special Galilei connection of ``v``.

    ``Gamma^r_mn = v^r d_m tau_n + 1/2 h^rs (d_m h_ns + d_n h_ms - d_s h_mn)``.
    """
    dtau = partial_derivative(g.tau)
    gam = einsum("r,mn->rmn", _v(v), dtau) + _christoffel_part(g, v)
    return Connection(gam.components)


def complete_data(g: GalileiStructure, v, data: ConnectionData) -> FullFields:
    """Restore the constrained parts of torsion and ``nabla h`` from free data.

    Temporal torsion comes from ``tau_r T^r_mn = (d tau)_mn - 2 qhat_[mn]``,
    the timelike rear parts of Q from ``tau_m Q_r^{mn} = -qhat_rm h^{mn}``.
    """
    vv = _v(v)
    qh = data.qhat
    temporal = exterior_derivative_1form(g.tau) - (qh - qh.permute((1, 0)))
    T = data.spatial_torsion + einsum("r,mn->rmn", vv, temporal)
    qh_up = einsum("rk,kb->rb", qh, g.h)  # qhat_r^b
    timelike = einsum("a,rb->rab", vv, qh_up)
    Q = data.spatial_q - timelike - timelike.permute((0, 2, 1))
    return FullFields(T, qh, Q, data.omega)


def _shared_terms(g: GalileiStructure, v, full: FullFields) -> dict[str, TensorField]:
    """Pieces common to the three coefficient formulas, each indexed (r, m, n)."""
    hv = covariant_space_metric(g, v)
    h = g.h
    T, Q, Om = full.torsion, full.q, full.omega
    # T_(mn)^r = h_ml T^l_ns h^sr, symmetrised over m n
    t_low_up = einsum("ml,lns,sr->rmn", hv, T, h, signature="UDD")
    t_sym = (t_low_up + t_low_up.permute((0, 2, 1))) * 0.5
    # tau_(m Omega_n)^r
    om_up = einsum("ns,sr->nr", Om, h)
    tom = einsum("m,nr->rmn", g.tau, om_up, signature="UDD")
    tau_om = (tom + tom.permute((0, 2, 1))) * 0.5
    # Q^r_mn = h^rs Q_s^{ab} h_am h_bn
    q_up = einsum("rs,sab,am,bn->rmn", h, Q, hv, hv, signature="UDD")
    # Q_(mn)^l = Q_m^{sl} h_sn, symmetrised, index order (l, m, n)
    q_mn_l = einsum("msl,sn->lmn", Q, hv, signature="UDD")
    q_sym = (q_mn_l + q_mn_l.permute((0, 2, 1))) * 0.5
    return {
        "christoffel": _christoffel_part(g, v),
        "t_sym": t_sym,
        "tau_omega": tau_om,
        "q_up": q_up,
        "q_sym": q_sym,
    }


def coefficients_form1(g: GalileiStructure, v, full: FullFields) -> TensorField:
    vv = _v(v)
    P = spatial_projector(g, v)
    s = _shared_terms(g, v, full)
    dtau = partial_derivative(g.tau)
    return (
        einsum("r,mn->rmn", vv, dtau)
        + s["christoffel"]
        + einsum("rl,lmn->rmn", P, full.torsion) * 0.5
        - s["t_sym"]
        + s["tau_omega"]
        - s["q_up"] * 0.5
        + einsum("rl,lmn->rmn", P, s["q_sym"])
        - einsum("r,mn->rmn", vv, full.qhat)
    )


def coefficients_form2(g: GalileiStructure, v, full: FullFields) -> TensorField:
    vv = _v(v)
    P = spatial_projector(g, v)
    s = _shared_terms(g, v, full)
    dtau = partial_derivative(g.tau)
    dtau_sym = (dtau + dtau.permute((1, 0))) * 0.5
    qh_sym = (full.qhat + full.qhat.permute((1, 0))) * 0.5
    return (
        einsum("r,mn->rmn", vv, dtau_sym)
        + s["christoffel"]
        + full.torsion * 0.5
        - s["t_sym"]
        + s["tau_omega"]
        - s["q_up"] * 0.5
        + einsum("rl,lmn->rmn", P, s["q_sym"])
        - einsum("r,mn->rmn", vv, qh_sym)
    )


def coefficients_form3(g: GalileiStructure, v, full: FullFields) -> TensorField:
    vv = _v(v)
    s = _shared_terms(g, v, full)
    dtau = partial_derivative(g.tau)
    dtau_sym = (dtau + dtau.permute((1, 0))) * 0.5
    # v^r v^s tau_(m qhat_n)s
    tq = einsum("r,s,m,ns->rmn", vv, vv, g.tau, full.qhat, signature="UDD")
    tq_sym = (tq + tq.permute((0, 2, 1))) * 0.5
    return (
        einsum("r,mn->rmn", vv, dtau_sym)
        + s["christoffel"]
        + full.torsion * 0.5
        - s["t_sym"]
        + s["tau_omega"]
        - s["q_up"] * 0.5
        + s["q_sym"]
        - tq_sym
    )


def coefficients_three_ways(
    g: GalileiStructure, v, T: TensorField, qhat: TensorField, q: TensorField, omega: TensorField
) -> tuple[Connection, Connection, Connection]:
    """Coefficients from the three equivalent closed forms.

    They agree only when ``(T, qhat, q)`` satisfy the classification
    identities; use :func:`check_identities` first.
    """
    full = FullFields(T, qhat, q, omega)
    return (
        Connection(coefficients_form1(g, v, full).components),
        Connection(coefficients_form2(g, v, full).components),
        Connection(coefficients_form3(g, v, full).components),
    )


def check_data(g: GalileiStructure, v, data: ConnectionData, points, evaluator: Evaluator | None = None) -> Report:
    """Symmetry and spacelike constraints on free data, tolerance 1e-10."""
    ev = evaluator or Evaluator(points)
    P = spatial_projector(g, v)
    st, sq, om = data.spatial_torsion, data.spatial_q, data.omega
    rep = Report()
    rep.add(residual_check("spatial_torsion_antisymmetric", st, -st.permute((0, 2, 1)), ev, TIGHT_TOL))
    rep.add(residual_check("spatial_torsion_spacelike", einsum("rl,lmn->rmn", P, st), st, ev, TIGHT_TOL))
    rep.add(residual_check("spatial_q_symmetric", sq, sq.permute((0, 2, 1)), ev, TIGHT_TOL))
    rep.add(residual_check("spatial_q_spacelike", einsum("a,rab->rb", g.tau, sq), None, ev, TIGHT_TOL))
    rep.add(residual_check("omega_antisymmetric", om, -om.permute((1, 0)), ev, TIGHT_TOL))
    return rep


def build_connection(
    g: GalileiStructure, v, data: ConnectionData, points=None, evaluator: Evaluator | None = None
) -> Connection:
    """Assemble the connection represented by ``data`` relative to ``v``.

    When sample ``points`` (or an evaluator) are given, the data
    constraints are checked first and violations raise
    :class:`DataInvariantError`.
    """
    if points is not None or evaluator is not None:
        rep = check_data(g, v, data, points, evaluator)
        if not rep.passed:
            bad = ", ".join(c.name for c in rep if not c.passed)
            raise DataInvariantError(f"connection data violates: {bad}")
    full = complete_data(g, v, data)
    return Connection(coefficients_form1(g, v, full).components)


def extract_full(c: Connection, g: GalileiStructure, v) -> FullFields:
    qhat, q = nonmetricities(c, g)
    return FullFields(torsion(c), qhat, q, newton_coriolis(c, g, v))


def extract_data(c: Connection, g: GalileiStructure, v) -> ConnectionData:
    """The free fields ``(P T, nabla tau, P P nabla h, Omega)`` of ``c`` relative to ``v``."""
    full = extract_full(c, g, v)
    P = spatial_projector(g, v)
    st = einsum("rl,lmn->rmn", P, full.torsion)
    sq = einsum("ak,bl,rkl->rab", P, P, full.q, signature="DUU")
    return ConnectionData(st, full.qhat, sq, full.omega)


# ---------------------------------------------------------------------------
# verification


def identity_residuals(T: TensorField, qhat: TensorField, q: TensorField, g: GalileiStructure) -> tuple[TensorField, TensorField]:
    """Left-minus-right of both classification identities, as fields."""
    first = einsum("m,rmn->rn", g.tau, q) + einsum("rm,mn->rn", qhat, g.h)
    second = (
        einsum("r,rmn->mn", g.tau, T)
        - exterior_derivative_1form(g.tau)
        + (qhat - qhat.permute((1, 0)))
    )
    return first, second


def check_identities(
    T: TensorField, qhat: TensorField, q: TensorField, g: GalileiStructure, points, tol: float = IDENTITY_TOL,
    evaluator: Evaluator | None = None,
) -> Report:
    ev = evaluator or Evaluator(points)
    first, second = identity_residuals(T, qhat, q, g)
    rep = Report()
    rep.add(residual_check("identity_tau_q", first, None, ev, tol))
    rep.add(residual_check("identity_temporal_torsion", second, None, ev, tol))
    return rep


def connection_residual(c1: Connection, c2: Connection, points, tol: float = ROUNDTRIP_TOL, name: str = "coefficients",
                        evaluator: Evaluator | None = None):
    ev = evaluator or Evaluator(points)
    return residual_check(name, c1.gamma, c2.gamma, ev, tol)


def data_residuals(d1: ConnectionData, d2: ConnectionData, points, tol: float = ROUNDTRIP_TOL,
                   evaluator: Evaluator | None = None) -> Report:
    ev = evaluator or Evaluator(points)
    rep = Report()
    for (name, a), b in zip(d1.fields().items(), d2.fields().values()):
        rep.add(residual_check(name, a, b, ev, tol))
    return rep


def check_three_forms(g: GalileiStructure, v, full: FullFields, points, tol: float = IDENTITY_TOL,
                      evaluator: Evaluator | None = None) -> Report:
    ev = evaluator or Evaluator(points)
    g1, g2, g3 = coefficients_three_ways(g, v, full.torsion, full.qhat, full.q, full.omega)
    rep = Report()
    rep.add(connection_residual(g1, g2, None, tol, "form1_vs_form2", ev))
    rep.add(connection_residual(g2, g3, None, tol, "form2_vs_form3", ev))
    rep.add(connection_residual(g1, g3, None, tol, "form1_vs_form3", ev))
    return rep


def check_postconditions(c: Connection, g: GalileiStructure, v, full: FullFields, points,
                         tol: float = ROUNDTRIP_TOL, evaluator: Evaluator | None = None) -> Report:
    """Torsion, nabla tau, nabla h and Omega of ``c`` against the prescribed fields."""
    ev = evaluator or Evaluator(points)
    got = extract_full(c, g, v)
    rep = Report()
    rep.add(residual_check("torsion", got.torsion, full.torsion, ev, tol))
    rep.add(residual_check("nabla_tau", got.qhat, full.qhat, ev, tol))
    rep.add(residual_check("nabla_h", got.q, full.q, ev, tol))
    rep.add(residual_check("newton_coriolis", got.omega, full.omega, ev, tol))
    return rep


def check_special_connection(g: GalileiStructure, v, points, evaluator: Evaluator | None = None) -> Report:
    """Compatibility, vanishing Newton-Coriolis form and torsion ``v (x) d tau``."""
    ev = evaluator or Evaluator(points)
    c = special_connection(g, v)
    qhat, q = nonmetricities(c, g)
    rep = Report()
    rep.add(residual_check("special_nabla_tau", qhat, None, ev, IDENTITY_TOL))
    rep.add(residual_check("special_nabla_h", q, None, ev, IDENTITY_TOL))
    rep.add(residual_check("special_newton_coriolis", newton_coriolis(c, g, v), None, ev, IDENTITY_TOL))
    expected = einsum("r,mn->rmn", _v(v), exterior_derivative_1form(g.tau))
    rep.add(residual_check("special_torsion", torsion(c), expected, ev, TIGHT_TOL))
    return rep


def lemma_temporal_torsion_check(c: Connection, g: GalileiStructure, points, tol: float = IDENTITY_TOL,
                                 evaluator: Evaluator | None = None):
    """``tau_r T^r_mn = (d tau)_mn - 2 nabla_[m tau_n]``."""
    ev = evaluator or Evaluator(points)
    lhs = einsum("r,rmn->mn", g.tau, torsion(c))
    qhat = covariant_derivative(c, g.tau)
    rhs = exterior_derivative_1form(g.tau) - (qhat - qhat.permute((1, 0)))
    return residual_check("lemma_temporal_torsion", lhs, rhs, ev, tol)


def lemma_cov_der_hv_check(c: Connection, g: GalileiStructure, v, points, tol: float = IDENTITY_TOL,
                           evaluator: Evaluator | None = None):
    """``nabla_r h_mn = -2 Lambda_r(m tau_n) - Q_rmn`` with ``Lambda = nabla v``."""
    ev = evaluator or Evaluator(points)
    hv = covariant_space_metric(g, v)
    lhs = covariant_derivative(c, hv)
    lam_low = einsum("rk,km->rm", covariant_derivative(c, _v(v)), hv)
    lt = einsum("rm,n->rmn", lam_low, g.tau)
    q = covariant_derivative(c, g.h)
    q_low = einsum("rab,am,bn->rmn", q, hv, hv)
    rhs = -(lt + lt.permute((0, 2, 1))) - q_low
    return residual_check("lemma_cov_der_hv", lhs, rhs, ev, tol)


def difference_tensor(c1: Connection, c2: Connection) -> DifferenceTensor:
    if c1.dim != c2.dim:
        raise ValueError("connections live on charts of different dimension")
    return DifferenceTensor(c1 - c2)


def check_difference_relations(c1: Connection, c2: Connection, g: GalileiStructure, v, points,
                               tol: float = IDENTITY_TOL, evaluator: Evaluator | None = None) -> Report:
    """Non-metricity and Newton-Coriolis differences expressed through ``S = Gamma1 - Gamma2``.

    ``nabla1 h - nabla2 h = S^r_ml h^ls + S^s_ml h^rl`` and
    ``Omega1_mr - Omega2_mr = S_rmn v^n - S_mrn v^n`` (first index lowered with ``h_v``).
    """
    ev = evaluator or Evaluator(points)
    S = difference_tensor(c1, c2).s
    q1, q2 = covariant_derivative(c1, g.h), covariant_derivative(c2, g.h)
    shs = einsum("rml,ls->mrs", S, g.h)
    rep = Report()
    rep.add(residual_check("nonmetricity_via_difference", q1 - q2, shs + shs.permute((0, 2, 1)), ev, tol))
    hv = covariant_space_metric(g, v)
    s_low_v = einsum("rk,kmn,n->rm", hv, S, _v(v))
    om_diff = newton_coriolis(c1, g, v) - newton_coriolis(c2, g, v)
    rep.add(residual_check("nc_form_via_difference", om_diff, s_low_v.permute((1, 0)) - s_low_v, ev, tol))
    return rep


__all__ = [
    "DataInvariantError",
    "Connection",
    "ConnectionData",
    "FullFields",
    "DifferenceTensor",
    "covariant_derivative",
    "torsion",
    "nonmetricities",
    "newton_coriolis",
    "exterior_derivative_1form",
    "decompose_nc",
    "recompose_nc",
    "special_connection",
    "complete_data",
    "coefficients_form1",
    "coefficients_form2",
    "coefficients_form3",
    "coefficients_three_ways",
    "check_data",
    "build_connection",
    "extract_full",
    "extract_data",
    "identity_residuals",
    "check_identities",
    "connection_residual",
    "data_residuals",
    "check_three_forms",
    "check_postconditions",
    "check_special_connection",
    "lemma_temporal_torsion_check",
    "lemma_cov_der_hv_check",
    "difference_tensor",
    "check_difference_relations",
    "Observer",
]
