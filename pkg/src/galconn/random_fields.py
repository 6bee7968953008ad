"""Random polynomial structures, observers, connections and free data.

Structures are generated from a polynomial spatial frame so they are
Galilei by construction and well conditioned on the box [-1, 1]^dim:

    tau  = tau_0 dt + tau_i dx^i,     tau_0 in [0.5, 1.5]
    u_a  = tau_0 d_a - tau_a d_t      (tau(u_a) = 0)
    e_a  = u_b L^b_a                  (L lower triangular, diagonal near 1)
    h    = sum_a e_a (x) e_a
    v    = d_t / tau_0 + s^a e_a
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .connection import Connection, ConnectionData
from .expr import Expr, add, coord, const, div, func, mul, power
from .galilei import GalileiStructure, Observer, spatial_projector
from .tensor import TensorField, einsum, obj_array


def monomials(dim: int, degree: int) -> list[tuple[int, ...]]:
    out = []
    for exps in itertools.product(range(degree + 1), repeat=dim):
        if sum(exps) <= degree:
            out.append(exps)
    return sorted(out, key=lambda e: (sum(e), e))


def random_polynomial(dim: int, rng: np.random.Generator, degree: int = 2, bound: float = 1.0) -> Expr:
    """Random polynomial whose absolute value stays below ``bound`` on [-1, 1]^dim."""
    mons = monomials(dim, degree)
    coeffs = rng.uniform(-1.0, 1.0, size=len(mons)) * bound / len(mons)
    terms = []
    for c, exps in zip(coeffs, mons):
        factors = [power(coord(i), k) for i, k in enumerate(exps) if k]
        terms.append(mul(float(c), *factors))
    return add(*terms)


@dataclass
class RandomSetup:
    g: GalileiStructure
    v: Observer
    spatial_frame: list[TensorField]


def random_setup(dim: int, rng: np.random.Generator, degree: int = 1, curved: bool = True) -> RandomSetup:
    """A random Galilei structure with an observer and a polynomial spatial frame."""
    if dim < 2:
        raise ValueError("dim must be at least 2")
    n = dim - 1

    def poly(bound):
        return random_polynomial(dim, rng, degree, bound) if curved else const(rng.uniform(-bound, bound))

    tau0 = add(1.0, poly(0.5))
    tau_sp = [poly(0.5) for _ in range(n)]
    tau = TensorField(dim, "D", [tau0] + tau_sp)

    u = []
    for a in range(n):
        comps = obj_array(dim)
        comps[0] = mul(-1.0, tau_sp[a])
        comps[a + 1] = tau0
        u.append(comps)
    L = obj_array((n, n))
    for a in range(n):
        L[a, a] = add(1.0, poly(0.4))
        for b in range(a):
            L[a, b] = poly(0.4)
    frame = []
    for a in range(n):
        comps = obj_array(dim)
        for mu in range(dim):
            comps[mu] = add(*[mul(u[b][mu], L[b, a]) for b in range(n)])
        frame.append(TensorField(dim, "U", comps))
    h = TensorField.zeros(dim, "UU")
    for e in frame:
        h = h + einsum("m,n->mn", e, e)
    g = GalileiStructure(tau, h)

    s = [poly(0.5) for _ in range(n)]
    vcomps = obj_array(dim)
    for mu in range(dim):
        parts = [mul(s[a], frame[a][mu]) for a in range(n)]
        if mu == 0:
            parts.append(div(1.0, tau0))
        vcomps[mu] = add(*parts)
    return RandomSetup(g, Observer(TensorField(dim, "U", vcomps)), frame)


def random_field(dim: int, signature: str, rng: np.random.Generator, degree: int = 2, bound: float = 1.0) -> TensorField:
    return TensorField.from_function(dim, signature, lambda *_: random_polynomial(dim, rng, degree, bound))


def random_connection(dim: int, rng: np.random.Generator, degree: int = 2, bound: float = 1.0) -> Connection:
    """Every coefficient an independent random polynomial of degree <= ``degree``."""
    return Connection(random_field(dim, "UDD", rng, degree, bound).components)


def random_data(g: GalileiStructure, v, rng: np.random.Generator, degree: int = 2, bound: float = 1.0) -> ConnectionData:
    """Admissible free data: random fields projected onto their constrained subspaces."""
    d = g.dim
    P = spatial_projector(g, v)
    t = random_field(d, "UDD", rng, degree, bound)
    t = t - t.permute((0, 2, 1))
    st = einsum("rl,lmn->rmn", P, t)
    qhat = random_field(d, "DD", rng, degree, bound)
    q = random_field(d, "DUU", rng, degree, bound)
    q = q + q.permute((0, 2, 1))
    sq = einsum("ak,bl,rkl->rab", P, P, q, signature="DUU")
    om = random_field(d, "DD", rng, degree, bound)
    om = om - om.permute((1, 0))
    return ConnectionData(st, qhat, sq, om)


def random_spacelike(g: GalileiStructure, v, rng: np.random.Generator, degree: int = 1, bound: float = 0.5) -> TensorField:
    """Position-dependent spacelike vector field ``P X`` for random polynomial ``X``."""
    x = random_field(g.dim, "U", rng, degree, bound)
    return einsum("mn,n->m", spatial_projector(g, v), x)


def random_expression(dim: int, rng: np.random.Generator, depth: int = 4) -> Expr:
    """Random smooth expression, defined everywhere on the chart.

    Denominators and square-root arguments are kept at least 1 so no
    pole or domain error can occur.
    """
    if depth <= 0 or rng.random() < 0.2:
        if rng.random() < 0.7:
            return coord(int(rng.integers(dim)))
        return const(round(float(rng.uniform(-2.0, 2.0)), 3))
    sub = lambda: random_expression(dim, rng, depth - 1)  # noqa: E731
    op = int(rng.integers(9))
    if op == 0:
        return add(sub(), sub())
    if op == 1:
        return mul(sub(), sub())
    if op == 2:
        return add(sub(), mul(-1.0, sub()))
    if op == 3:
        b = sub()
        return div(sub(), add(1.0, mul(b, b)))
    if op == 4:
        return power(sub(), int(rng.integers(2, 4)))
    if op == 5:
        return func("sin", sub())
    if op == 6:
        return func("cos", sub())
    if op == 7:
        return func("exp", func("sin", sub()))
    b = sub()
    return func("sqrt", add(1.0, mul(b, b)))


def constant_frame_boost(setup: RandomSetup, rng: np.random.Generator, bound: float = 0.5) -> TensorField:
    """``w = k^a e_a`` with constant coefficients ``k`` in the spatial frame."""
    k = rng.uniform(-bound, bound, size=len(setup.spatial_frame))
    w = TensorField.zeros(setup.g.dim, "U")
    for ka, e in zip(k, setup.spatial_frame):
        w = w + e * float(ka)
    return w


__all__ = [
    "monomials",
    "random_polynomial",
    "RandomSetup",
    "random_setup",
    "random_field",
    "random_connection",
    "random_data",
    "random_spacelike",
    "random_expression",
    "constant_frame_boost",
]
