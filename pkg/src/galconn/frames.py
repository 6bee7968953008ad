"""Galilei frames and the frame-level description of a connection.

Frame index ``A`` runs over ``(t, 1, ..., n)`` with ``A = 0`` the
timelike leg ``e_t`` and ``A = a >= 1`` spatial. Local connection form
components are stored as ``omega[A, B, mu]``: the ``mu`` component of
the one-form ``omega^A_B`` defined by ``nabla e_B = omega^A_B (x) e_A``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .checks import Report, residual_check
from .connection import Connection, covariant_derivative, newton_coriolis, nonmetricities, torsion
from .expr import Evaluator, add, as_expr, mul
from .galilei import GalileiStructure, _v
from .linalg import inverse
from .tensor import TensorField, einsum, obj_array, partial_derivative

FRAME_TOL = 1e-9
DUALITY_TOL = 1e-10
POINT_TOL = 1e-10


class FrameError(ValueError):
    pass


def _const_array(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    out = obj_array(m.shape)
    for idx in np.ndindex(m.shape):
        out[idx] = as_expr(float(m[idx]))
    return out


@dataclass(frozen=True, eq=False)
class GalileiFrame:
    """Vector fields ``e[A]`` and dual covectors ``dual[A]`` with ``<dual[A], e[B]> = delta``."""

    e: tuple[TensorField, ...]
    dual: tuple[TensorField, ...]

    def __post_init__(self):
        e, dual = tuple(self.e), tuple(self.dual)
        d = len(e)
        if d < 2 or len(dual) != d:
            raise FrameError(f"need dim >= 2 vectors and as many covectors, got {len(e)} and {len(dual)}")
        for x in e:
            if x.sig != "U" or x.dim != d:
                raise FrameError(f"frame vectors must be vector fields of dim {d}")
        for x in dual:
            if x.sig != "D" or x.dim != d:
                raise FrameError(f"dual frame entries must be covector fields of dim {d}")
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "dual", dual)

    @property
    def dim(self) -> int:
        return len(self.e)

    @classmethod
    def from_vectors(cls, vectors: Sequence[TensorField]) -> "GalileiFrame":
        """Frame from ``(e_t, e_1, ..., e_n)``; the dual is the symbolic matrix inverse."""
        d = len(vectors)
        E = obj_array((d, d))
        for A, x in enumerate(vectors):
            for mu in range(d):
                E[mu, A] = x[mu]
        inv = inverse(E)
        dual = [TensorField(d, "D", inv[A, :]) for A in range(d)]
        return cls(tuple(vectors), tuple(dual))

    @classmethod
    def from_observer(cls, v, spatial: Sequence[TensorField]) -> "GalileiFrame":
        return cls.from_vectors([_v(v)] + list(spatial))

    @classmethod
    def from_coframe(cls, covectors: Sequence[TensorField]) -> "GalileiFrame":
        d = len(covectors)
        C = obj_array((d, d))
        for A, x in enumerate(covectors):
            for mu in range(d):
                C[A, mu] = x[mu]
        inv = inverse(C)
        vectors = [TensorField(d, "U", inv[:, A]) for A in range(d)]
        return cls(tuple(vectors), tuple(covectors))

    def vector_matrix(self) -> np.ndarray:
        """Object array ``E[mu, A] = e_A^mu``."""
        return np.stack([x.components for x in self.e], axis=1)

    def covector_matrix(self) -> np.ndarray:
        """Object array ``C[A, mu] = e^A_mu``."""
        return np.stack([x.components for x in self.dual], axis=0)


def validate_frame(f: GalileiFrame, g: GalileiStructure, points, evaluator: Evaluator | None = None) -> Report:
    """Residuals of the Galilei frame conditions, the dual clock form and duality."""
    if f.dim != g.dim:
        raise FrameError(f"frame has dim {f.dim}, structure has dim {g.dim}")
    ev = evaluator or Evaluator(points)
    d = f.dim
    rep = Report()
    rep.add(residual_check("frame_unit_time", einsum("m,m->", g.tau, f.e[0]), 1.0, ev, FRAME_TOL))
    h_frame = TensorField.zeros(d, "UU")
    for x in f.e[1:]:
        h_frame = h_frame + einsum("m,n->mn", x, x)
    rep.add(residual_check("frame_spatial_metric", g.h, h_frame, ev, FRAME_TOL))
    rep.add(residual_check("frame_dual_clock", f.dual[0], g.tau, ev, FRAME_TOL))
    pairing = einsum("Am,mB->AB", f.covector_matrix(), f.vector_matrix())
    ident = _const_array(np.eye(d))
    rep.add(residual_check("frame_duality", pairing, ident, ev, DUALITY_TOL))
    return rep


# ---------------------------------------------------------------------------
# pointwise numeric frames


@dataclass(frozen=True)
class PointFrame:
    """Numeric frame at one point: ``e[:, A]`` are the vectors, ``dual[A, :]`` the covectors."""

    point: np.ndarray
    e: np.ndarray
    dual: np.ndarray
    residual: float


def frame_at_point(g: GalileiStructure, v, p, tol: float = POINT_TOL) -> PointFrame:
    """Galilei frame ``(v|_p, e_a|_p)`` built from the Gram matrix of ``h_v`` on ``ker tau``.

    The spatial legs are ``B G^{-1/2}`` for a basis ``B`` of ``ker tau``
    and ``G = B^T h_v B``; the symmetric inverse square root comes from
    an eigendecomposition. Raises :class:`FrameError` on rank deficiency
    or when the frame conditions fail at ``tol``.
    """
    p = np.asarray(p, dtype=float)
    ev = Evaluator(p[None, :])
    tau, tb = ev.array(g.tau.components)
    h, hb = ev.array(g.h.components)
    vv, vb = ev.array(_v(v).components)
    if tb[0] or hb[0] or vb[0]:
        raise FrameError(f"structure undefined at {p.tolist()}")
    tau, h, vv = tau[0], h[0], vv[0]
    d = tau.size
    if np.linalg.norm(tau) < tol:
        raise FrameError(f"tau vanishes at {p.tolist()}")
    _, _, vt = np.linalg.svd(tau[None, :])
    basis = vt[1:].T
    m = h + np.outer(vv, vv)
    if abs(np.linalg.det(m)) < tol:
        raise FrameError(f"h + v v is singular at {p.tolist()}")
    hv = np.linalg.inv(m) - np.outer(tau, tau)
    gram = basis.T @ hv @ basis
    gram = 0.5 * (gram + gram.T)
    lam, vecs = np.linalg.eigh(gram)
    if lam.min() <= tol:
        raise FrameError(f"space metric is rank deficient at {p.tolist()} (min eigenvalue {lam.min():.3e})")
    spatial = basis @ (vecs / np.sqrt(lam)) @ vecs.T
    e = np.column_stack([vv, spatial])
    dual = np.linalg.inv(e)
    res = max(
        abs(tau @ vv - 1.0),
        np.abs(h - spatial @ spatial.T).max(),
        np.abs(dual[0] - tau).max(),
        np.abs(dual @ e - np.eye(d)).max(),
    )
    if not res < tol:
        raise FrameError(f"frame conditions fail at {p.tolist()} (residual {res:.3e})")
    return PointFrame(p, e, dual, float(res))


# ---------------------------------------------------------------------------
# local connection form


@dataclass(frozen=True, eq=False)
class LocalConnectionForm:
    """``omega[A, B, mu]`` components of the matrix-valued one-form ``omega^A_B``."""

    omega: np.ndarray

    def __post_init__(self):
        arr = np.array(self.omega, dtype=object)
        d = arr.shape[0]
        if arr.shape != (d, d, d):
            raise ValueError(f"local connection form must have shape (d, d, d), got {arr.shape}")
        flat = arr.reshape(-1)
        for j, x in enumerate(flat):
            flat[j] = as_expr(x)
        arr.flags.writeable = False
        object.__setattr__(self, "omega", arr)

    @property
    def dim(self) -> int:
        return self.omega.shape[0]

    def component(self, A: int, B: int) -> TensorField:
        return TensorField(self.dim, "D", self.omega[A, B])

    def boost_part(self) -> list[TensorField]:
        """``varpi^a = omega^a_t`` for ``a = 1..n``."""
        return [self.component(a, 0) for a in range(1, self.dim)]

    def rotation_part(self) -> np.ndarray:
        """``omega^a_b`` for spatial ``a, b`` (shape ``(n, n, dim)``)."""
        return self.omega[1:, 1:]


def local_connection_form(c: Connection, f: GalileiFrame) -> LocalConnectionForm:
    """``omega^A_B_mu = e^A_r (nabla_mu e_B)^r``."""
    d = f.dim
    C = f.covector_matrix()
    out = obj_array((d, d, d))
    for B, eb in enumerate(f.e):
        ne = covariant_derivative(c, eb).components
        out[:, B, :] = einsum("Ar,mr->Am", C, ne)
    return LocalConnectionForm(out)


def check_dual_form(c: Connection, f: GalileiFrame, w: LocalConnectionForm, points,
                    tol: float = FRAME_TOL, evaluator: Evaluator | None = None):
    """``nabla_mu e^A_nu = -omega^A_B_mu e^B_nu``."""
    ev = evaluator or Evaluator(points)
    d = f.dim
    lhs = obj_array((d, d, d))
    for A, ea in enumerate(f.dual):
        lhs[A] = covariant_derivative(c, ea).components
    rhs = einsum("ABm,Bn->Amn", w.omega, f.covector_matrix())
    return residual_check("dual_connection_form", lhs, -TensorField(d, "DDD", rhs).components, ev, tol)


@dataclass(frozen=True, eq=False)
class FrameNonmetricities:
    """``qhat[mu, B]`` and ``q[mu, A, B]``: frame components, derivative slot first."""

    qhat: np.ndarray
    q: np.ndarray


def frame_nonmetricities(w: LocalConnectionForm) -> FrameNonmetricities:
    """``qhat_B = -omega^t_B``; ``Q^tt = 0``, ``Q^ta = Q^at = omega^t_a``, ``Q^ab = omega^a_b + omega^b_a``."""
    d = w.dim
    om = w.omega
    qhat = obj_array((d, d))
    q = obj_array((d, d, d))
    for mu in range(d):
        for B in range(d):
            qhat[mu, B] = mul(-1.0, om[0, B, mu])
        for a in range(1, d):
            q[mu, 0, a] = om[0, a, mu]
            q[mu, a, 0] = om[0, a, mu]
            for b in range(1, d):
                q[mu, a, b] = add(om[a, b, mu], om[b, a, mu])
    return FrameNonmetricities(qhat, q)


def coordinate_nonmetricities_in_frame(c: Connection, g: GalileiStructure, f: GalileiFrame) -> FrameNonmetricities:
    """``nabla tau`` and ``nabla h`` computed in coordinates, then transported into the frame."""
    qhat, q = nonmetricities(c, g)
    E, C = f.vector_matrix(), f.covector_matrix()
    return FrameNonmetricities(
        einsum("mn,nB->mB", qhat.components, E),
        einsum("mrs,Ar,Bs->mAB", q.components, C, C),
    )


def check_frame_nonmetricities(c: Connection, g: GalileiStructure, f: GalileiFrame, w: LocalConnectionForm,
                               points, tol: float = FRAME_TOL, evaluator: Evaluator | None = None) -> Report:
    ev = evaluator or Evaluator(points)
    got = frame_nonmetricities(w)
    want = coordinate_nonmetricities_in_frame(c, g, f)
    rep = Report()
    rep.add(residual_check("frame_qhat", got.qhat, want.qhat, ev, tol))
    rep.add(residual_check("frame_q", got.q, want.q, ev, tol))
    return rep


def cartan_torsion(f: GalileiFrame, w: LocalConnectionForm) -> np.ndarray:
    """``T^A = d e^A + omega^A_B ^ e^B`` as components ``[A, mu, nu]``."""
    d = f.dim
    C = f.covector_matrix()
    out = obj_array((d, d, d))
    wedge = einsum("ABm,Bn->Amn", w.omega, C)
    for A, ea in enumerate(f.dual):
        de = partial_derivative(ea).components
        for mu in range(d):
            for nu in range(d):
                out[A, mu, nu] = add(
                    de[mu, nu], mul(-1.0, de[nu, mu]), wedge[A, mu, nu], mul(-1.0, wedge[A, nu, mu])
                )
    return out


def check_cartan_torsion(c: Connection, g: GalileiStructure, f: GalileiFrame, w: LocalConnectionForm, points,
                         tol: float = FRAME_TOL, evaluator: Evaluator | None = None) -> Report:
    """Cartan torsion against ``e^A_r T^r_mn``, and its temporal leg against ``d tau - 2 qhat_[mn]``."""
    ev = evaluator or Evaluator(points)
    got = cartan_torsion(f, w)
    want = einsum("Ar,rmn->Amn", f.covector_matrix(), torsion(c).components)
    rep = Report()
    rep.add(residual_check("cartan_torsion", got, want, ev, tol))
    qhat = covariant_derivative(c, g.tau)
    dtau = partial_derivative(g.tau)
    temporal = (dtau - dtau.permute((1, 0))) - (qhat - qhat.permute((1, 0)))
    rep.add(residual_check("cartan_temporal_torsion", got[0], temporal, ev, tol))
    return rep


def frame_nc_form(w: LocalConnectionForm, f: GalileiFrame) -> TensorField:
    """``Omega = delta_ab varpi^a ^ e^b``."""
    d = f.dim
    x = obj_array((d, d))
    for mu in range(d):
        for nu in range(d):
            x[mu, nu] = add(*[mul(w.omega[a, 0, mu], f.dual[a][nu]) for a in range(1, d)])
    x = TensorField(d, "DD", x)
    return x - x.permute((1, 0))


def check_frame_nc_form(c: Connection, g: GalileiStructure, f: GalileiFrame, w: LocalConnectionForm, points,
                        tol: float = FRAME_TOL, evaluator: Evaluator | None = None):
    ev = evaluator or Evaluator(points)
    return residual_check("frame_newton_coriolis", frame_nc_form(w, f), newton_coriolis(c, g, f.e[0]), ev, tol)


def decompose_gal(w: LocalConnectionForm) -> tuple[LocalConnectionForm, LocalConnectionForm]:
    """Split ``omega`` into its Galilei-algebra part and the remainder.

    The gal part has a zero first row, ``varpi^a`` in the first column and
    the antisymmetric spatial block. The remainder holds the first row and
    the symmetric spatial block.
    """
    d = w.dim
    om = w.omega
    gal = obj_array((d, d, d))
    rest = obj_array((d, d, d))
    for mu in range(d):
        for B in range(d):
            rest[0, B, mu] = om[0, B, mu]
        for a in range(1, d):
            gal[a, 0, mu] = om[a, 0, mu]
            for b in range(1, d):
                gal[a, b, mu] = add(mul(0.5, om[a, b, mu]), mul(-0.5, om[b, a, mu]))
                rest[a, b, mu] = add(mul(0.5, om[a, b, mu]), mul(0.5, om[b, a, mu]))
    return LocalConnectionForm(gal), LocalConnectionForm(rest)


def check_frame_suite(c: Connection, g: GalileiStructure, f: GalileiFrame, points,
                      evaluator: Evaluator | None = None) -> Report:
    """Every frame-level check for one connection and frame."""
    ev = evaluator or Evaluator(points)
    w = local_connection_form(c, f)
    rep = Report()
    rep.extend(validate_frame(f, g, None, ev))
    rep.add(check_dual_form(c, f, w, None, evaluator=ev))
    rep.extend(check_frame_nonmetricities(c, g, f, w, None, evaluator=ev))
    rep.extend(check_cartan_torsion(c, g, f, w, None, evaluator=ev))
    rep.add(check_frame_nc_form(c, g, f, w, None, evaluator=ev))
    gal, rest = decompose_gal(w)
    recon = TensorField(g.dim, "DDD", gal.omega) + TensorField(g.dim, "DDD", rest.omega)
    rep.add(residual_check("gal_split_partition", recon.components, w.omega, ev, 1e-12))
    return rep


# ---------------------------------------------------------------------------
# homogeneous Galilei group and algebra


@dataclass(frozen=True)
class GalMatrix:
    """``(R, k)`` for the group (``group=True``) or ``(X, k)`` for the algebra."""

    block: np.ndarray
    k: np.ndarray
    group: bool = True

    def __post_init__(self):
        block = np.array(self.block, dtype=float)
        k = np.array(self.k, dtype=float).reshape(-1)
        n = k.size
        if block.shape != (n, n):
            raise ValueError(f"block must be {n}x{n}, got {block.shape}")
        object.__setattr__(self, "block", block)
        object.__setattr__(self, "k", k)

    @property
    def n(self) -> int:
        return self.k.size

    def is_valid(self, tol: float = 1e-12) -> bool:
        """Group elements need an orthogonal block, algebra elements an antisymmetric one."""
        b = self.block
        if self.group:
            return bool(np.abs(b.T @ b - np.eye(self.n)).max() < tol)
        return bool(np.abs(b + b.T).max() < tol)

    def compose(self, other: "GalMatrix") -> "GalMatrix":
        """Group law ``(R1, k1)(R2, k2) = (R1 R2, k1 + R1 k2)``."""
        if not (self.group and other.group):
            raise ValueError("compose is defined for group elements only")
        return GalMatrix(self.block @ other.block, self.k + self.block @ other.k, True)


def gal_embed(x: GalMatrix) -> np.ndarray:
    """``(R, k) -> [[1, 0], [k, R]]`` and ``(X, k) -> [[0, 0], [k, X]]``."""
    n = x.n
    m = np.zeros((n + 1, n + 1))
    m[0, 0] = 1.0 if x.group else 0.0
    m[1:, 0] = x.k
    m[1:, 1:] = x.block
    return m


def transform_frame(f: GalileiFrame, gm: np.ndarray) -> GalileiFrame:
    """``e'_B = e_A g^A_B`` for a constant matrix ``g``; dual ``e'^A = (g^-1)^A_B e^B``."""
    gm = np.asarray(gm, dtype=float)
    ginv = np.linalg.inv(gm)
    d = f.dim
    e_new = []
    dual_new = []
    for B in range(d):
        acc = TensorField.zeros(d, "U")
        cov = TensorField.zeros(d, "D")
        for A in range(d):
            if gm[A, B] != 0.0:
                acc = acc + f.e[A] * float(gm[A, B])
            if ginv[B, A] != 0.0:
                cov = cov + f.dual[A] * float(ginv[B, A])
        e_new.append(acc)
        dual_new.append(cov)
    return GalileiFrame(tuple(e_new), tuple(dual_new))


def gauge_transform(w: LocalConnectionForm, gm: np.ndarray) -> np.ndarray:
    """``g^-1 omega g`` for a constant matrix ``g`` (object array ``[A, B, mu]``)."""
    gm = np.asarray(gm, dtype=float)
    ginv = np.linalg.inv(gm)
    return einsum("AC,CDm,DB->ABm", _const_array(ginv), w.omega, _const_array(gm))


__all__ = [
    "FrameError",
    "GalileiFrame",
    "validate_frame",
    "PointFrame",
    "frame_at_point",
    "LocalConnectionForm",
    "local_connection_form",
    "check_dual_form",
    "FrameNonmetricities",
    "frame_nonmetricities",
    "coordinate_nonmetricities_in_frame",
    "check_frame_nonmetricities",
    "cartan_torsion",
    "check_cartan_torsion",
    "frame_nc_form",
    "check_frame_nc_form",
    "decompose_gal",
    "check_frame_suite",
    "GalMatrix",
    "gal_embed",
    "transform_frame",
    "gauge_transform",
]
