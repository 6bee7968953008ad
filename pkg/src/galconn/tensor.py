"""Dense tensor fields over a chart, with components as symbolic expressions."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .expr import ZERO, Evaluator, Expr, add, as_expr, differentiate, is_zero, mul

__all__ = [
    "Variance",
    "UP",
    "DOWN",
    "TensorField",
    "VarianceError",
    "obj_array",
    "einsum",
    "tensor_product",
    "contract",
    "partial_derivative",
    "weighted_sym",
    "symmetrize",
    "antisymmetrize",
    "evaluate_at",
    "evaluate_batch",
]


class Variance(Enum):
    UP = "U"
    DOWN = "D"

    def __repr__(self):
        return self.value


UP = Variance.UP
DOWN = Variance.DOWN


class VarianceError(ValueError):
    pass


def obj_array(shape, fill: Expr = ZERO) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    out.fill(fill)
    return out


def _to_obj(values) -> np.ndarray:
    arr = np.array(values, dtype=object)
    flat = arr.reshape(-1)
    for j, v in enumerate(flat):
        flat[j] = as_expr(v)
    return flat.reshape(arr.shape)


def _parse_sig(signature) -> tuple[Variance, ...]:
    if isinstance(signature, str):
        return tuple(Variance(c) for c in signature)
    return tuple(s if isinstance(s, Variance) else Variance(s) for s in signature)


@dataclass(frozen=True, eq=False)
class TensorField:
    """Components of a tensor field in a coordinate chart.

    ``signature`` lists the variance of each slot, e.g. ``"UDD"`` for
    a (1,2) tensor. ``components`` is an object array of shape
    ``(dim,) * rank`` holding :class:`~galconn.expr.Expr` values.
    """

    dim: int
    signature: tuple[Variance, ...]
    components: np.ndarray

    def __post_init__(self):
        sig = _parse_sig(self.signature)
        comps = _to_obj(self.components)
        if comps.shape != (self.dim,) * len(sig):
            raise ValueError(
                f"components shape {comps.shape} does not match dim={self.dim}, rank={len(sig)}"
            )
        comps.flags.writeable = False
        object.__setattr__(self, "signature", sig)
        object.__setattr__(self, "components", comps)

    @classmethod
    def zeros(cls, dim: int, signature) -> "TensorField":
        sig = _parse_sig(signature)
        return cls(dim, sig, obj_array((dim,) * len(sig)))

    @classmethod
    def from_function(cls, dim: int, signature, fn: Callable[..., object]) -> "TensorField":
        sig = _parse_sig(signature)
        comps = obj_array((dim,) * len(sig))
        for idx in itertools.product(range(dim), repeat=len(sig)):
            comps[idx] = as_expr(fn(*idx))
        return cls(dim, sig, comps)

    @classmethod
    def scalar(cls, dim: int, value) -> "TensorField":
        return cls(dim, (), np.array(as_expr(value), dtype=object))

    @property
    def rank(self) -> int:
        return len(self.signature)

    @property
    def sig(self) -> str:
        return "".join(v.value for v in self.signature)

    def __getitem__(self, idx) -> Expr:
        return self.components[idx]

    def _check_compatible(self, other: "TensorField"):
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        if self.signature != other.signature:
            raise VarianceError(f"signature mismatch: {self.sig} vs {other.sig}")

    def __add__(self, other: "TensorField") -> "TensorField":
        self._check_compatible(other)
        return self._map2(other, lambda a, b: add(a, b))

    def __sub__(self, other: "TensorField") -> "TensorField":
        self._check_compatible(other)
        return self._map2(other, lambda a, b: add(a, mul(-1.0, b)))

    def __neg__(self) -> "TensorField":
        return self.map(lambda a: mul(-1.0, a))

    def __mul__(self, scalar) -> "TensorField":
        if isinstance(scalar, TensorField):
            raise TypeError("use tensor_product for tensor-tensor products")
        s = as_expr(scalar)
        return self.map(lambda a: mul(s, a))

    __rmul__ = __mul__

    def map(self, fn: Callable[[Expr], Expr]) -> "TensorField":
        flat = self.components.reshape(-1)
        out = np.empty(flat.size, dtype=object)
        for j, e in enumerate(flat):
            out[j] = fn(e)
        return TensorField(self.dim, self.signature, out.reshape(self.components.shape))

    def _map2(self, other, fn) -> "TensorField":
        a = self.components.reshape(-1)
        b = other.components.reshape(-1)
        out = np.empty(a.size, dtype=object)
        for j in range(a.size):
            out[j] = fn(a[j], b[j])
        return TensorField(self.dim, self.signature, out.reshape(self.components.shape))

    def permute(self, order: Sequence[int]) -> "TensorField":
        """Reorder slots: slot ``k`` of the result is slot ``order[k]`` of ``self``."""
        order = tuple(order)
        if sorted(order) != list(range(self.rank)):
            raise ValueError(f"invalid slot permutation {order}")
        return TensorField(
            self.dim,
            tuple(self.signature[k] for k in order),
            np.transpose(self.components, order),
        )

    def with_component(self, idx, value) -> "TensorField":
        comps = self.components.copy()
        comps[idx] = as_expr(value)
        return TensorField(self.dim, self.signature, comps)

    def is_identically_zero(self) -> bool:
        return all(is_zero(e) for e in self.components.reshape(-1))


def einsum(subscripts: str, *operands, signature=None) -> TensorField | np.ndarray:
    """Symbolic Einstein summation, e.g. ``einsum("rs,mns->rmn", h, x)``.

    Operands may be :class:`TensorField` values or object arrays. When
    every operand is a TensorField and ``signature`` is omitted, the
    output variance of each free index is taken from its first
    occurrence. Returns a TensorField when a signature is known, else an
    object array. No variance checking is done on summed indices.
    """
    lhs, _, out = subscripts.replace(" ", "").partition("->")
    in_specs = lhs.split(",")
    if len(in_specs) != len(operands):
        raise ValueError("number of operands does not match subscripts")
    arrays = []
    dim = None
    var_of: dict[str, Variance] = {}
    all_fields = True
    for spec, op in zip(in_specs, operands):
        if isinstance(op, TensorField):
            arr = op.components
            if len(spec) != op.rank:
                raise ValueError(f"subscript {spec!r} does not match rank {op.rank}")
            for ch, v in zip(spec, op.signature):
                var_of.setdefault(ch, v)
            d = op.dim
        else:
            arr = np.asarray(op, dtype=object)
            all_fields = False
            if arr.ndim != len(spec):
                raise ValueError(f"subscript {spec!r} does not match ndim {arr.ndim}")
            d = arr.shape[0] if arr.ndim else dim
        if dim is None:
            dim = d
        elif d is not None and d != dim:
            raise ValueError(f"dimension mismatch: {d} vs {dim}")
        arrays.append(arr)
    letters = []
    for spec in in_specs:
        for ch in spec:
            if ch not in letters:
                letters.append(ch)
    summed = [ch for ch in letters if ch not in out]
    pos = {ch: k for k, ch in enumerate(list(out) + summed)}
    getters = [tuple(pos[ch] for ch in spec) for spec in in_specs]
    result = obj_array((dim,) * len(out))
    for oidx in itertools.product(range(dim), repeat=len(out)):
        terms = []
        for sidx in itertools.product(range(dim), repeat=len(summed)):
            full = oidx + sidx
            factors = []
            for arr, g in zip(arrays, getters):
                e = arr[tuple(full[k] for k in g)]
                if is_zero(e):
                    break
                factors.append(e)
            else:
                terms.append(mul(*factors))
        result[oidx] = add(*terms)
    if signature is None and all_fields:
        signature = tuple(var_of[ch] for ch in out)
    if signature is None:
        return result
    return TensorField(dim, signature, result)


def tensor_product(a: TensorField, b: TensorField) -> TensorField:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    ca = a.components.reshape(-1)
    cb = b.components.reshape(-1)
    out = np.empty((ca.size, cb.size), dtype=object)
    for i, x in enumerate(ca):
        for j, y in enumerate(cb):
            out[i, j] = mul(x, y)
    return TensorField(a.dim, a.signature + b.signature, out.reshape(a.components.shape + b.components.shape))


def contract(a: TensorField, slot_up: int, slot_down: int) -> TensorField:
    """Trace over an (UP, DOWN) slot pair."""
    if a.signature[slot_up] is not UP or a.signature[slot_down] is not DOWN:
        raise VarianceError(
            f"contraction needs an UP and a DOWN slot, got {a.sig[slot_up]} and {a.sig[slot_down]}"
        )
    letters = "abcdefghijklmnop"[: a.rank]
    spec = list(letters)
    spec[slot_down] = spec[slot_up]
    keep = "".join(ch for k, ch in enumerate(letters) if k not in (slot_up, slot_down))
    sig = tuple(v for k, v in enumerate(a.signature) if k not in (slot_up, slot_down))
    res = einsum("".join(spec) + "->" + keep, a.components)
    return TensorField(a.dim, sig, res)


def partial_derivative(a: TensorField) -> TensorField:
    """Coordinate gradient; the new DOWN slot is prepended."""
    d = a.dim
    flat = a.components.reshape(-1)
    out = np.empty((d, flat.size), dtype=object)
    for mu in range(d):
        for j, e in enumerate(flat):
            out[mu, j] = differentiate(e, mu)
    return TensorField(d, (DOWN,) + a.signature, out.reshape((d,) + a.components.shape))


def weighted_sym(a: TensorField, slots: tuple[int, int], anti: bool = False) -> TensorField:
    """Half-weighted (anti)symmetrisation over a pair of slots.

    ``A_(mn) = (A_mn + A_nm)/2`` and ``A_[mn] = (A_mn - A_nm)/2``.
    """
    i, j = slots
    if i == j:
        raise ValueError("slots must differ")
    if a.signature[i] is not a.signature[j]:
        raise VarianceError("cannot (anti)symmetrise slots of different variance")
    order = list(range(a.rank))
    order[i], order[j] = order[j], order[i]
    swapped = a.permute(order)
    sign = -0.5 if anti else 0.5
    return a._map2(swapped, lambda x, y: add(mul(0.5, x), mul(sign, y)))


def symmetrize(a: TensorField, i: int, j: int) -> TensorField:
    return weighted_sym(a, (i, j), anti=False)


def antisymmetrize(a: TensorField, i: int, j: int) -> TensorField:
    return weighted_sym(a, (i, j), anti=True)


def evaluate_batch(a: TensorField | np.ndarray, points, evaluator: Evaluator | None = None):
    """Evaluate all components at a batch of points.

    Returns ``(values, bad)``: values of shape ``(npoints, dim, ..., dim)``
    and a boolean mask of points where some component is undefined.
    """
    ev = evaluator if evaluator is not None else Evaluator(points)
    comps = a.components if isinstance(a, TensorField) else a
    return ev.array(comps)


def evaluate_at(a: TensorField, point) -> np.ndarray:
    """Numeric components at one point; raises on poles like :func:`expr.evaluate`."""
    from .expr import evaluate

    flat = a.components.reshape(-1)
    vals = np.array([evaluate(e, point) for e in flat], dtype=float)
    return vals.reshape(a.components.shape)
