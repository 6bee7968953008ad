import numpy as np
import pytest
from hypothesis import given, strategies as st

from galconn.expr import Evaluator, coord, parse_expression
from galconn.galilei import flat_structure, rest_observer, spatial_projector
from galconn.random_fields import random_field
from galconn.tensor import (
    DOWN,
    UP,
    TensorField,
    VarianceError,
    antisymmetrize,
    contract,
    einsum,
    evaluate_at,
    partial_derivative,
    symmetrize,
    tensor_product,
)

NAMES = ["t", "x", "y", "z"]


def test_shape_and_signature_validated():
    with pytest.raises(ValueError):
        TensorField(3, "UD", np.zeros((3, 2), dtype=object))
    f = TensorField.zeros(3, "UDD")
    assert f.rank == 3 and f.sig == "UDD" and f.signature == (UP, DOWN, DOWN)
    assert f.components.shape == (3, 3, 3)


def test_components_are_immutable():
    f = TensorField.zeros(2, "U")
    with pytest.raises(ValueError):
        f.components[0] = coord(0)
    g = f.with_component(0, coord(1))
    assert g[0] is coord(1) and f[0] is not coord(1)


def test_addition_needs_matching_signature():
    with pytest.raises(VarianceError):
        TensorField.zeros(2, "U") + TensorField.zeros(2, "D")
    with pytest.raises(ValueError):
        TensorField.zeros(2, "U") + TensorField.zeros(3, "U")


def test_trace_of_projector_is_n():
    P = spatial_projector(flat_structure(4), rest_observer(4))
    tr = contract(P, 0, 1)
    assert evaluate_at(tr, [0, 0, 0, 0]) == 3.0


def test_contract_needs_up_down_pair():
    with pytest.raises(VarianceError):
        contract(TensorField.zeros(3, "DD"), 0, 1)


def test_tau_h_contraction_vanishes():
    g = flat_structure(4)
    assert einsum("m,mn->n", g.tau, g.h).is_identically_zero()


def test_partial_derivative_prepends_down_slot():
    h = TensorField.from_function(
        4, "UU", lambda a, b: parse_expression("1 + x^2", 4, NAMES) if a == b == 1 else 0.0
    )
    dh = partial_derivative(h)
    assert dh.sig == "DUU"
    assert evaluate_at(dh, [0, 1.0, 0, 0])[1, 1, 1] == 2.0
    assert evaluate_at(dh, [0, 1.0, 0, 0])[0, 1, 1] == 0.0


def test_half_weighted_brackets():
    a = TensorField(2, "DD", [[1.0, 2.0], [4.0, 8.0]])
    s = evaluate_at(symmetrize(a, 0, 1), [0, 0])
    w = evaluate_at(antisymmetrize(a, 0, 1), [0, 0])
    assert s.tolist() == [[1.0, 3.0], [3.0, 8.0]]
    assert w.tolist() == [[0.0, -1.0], [1.0, 0.0]]
    with pytest.raises(VarianceError):
        symmetrize(TensorField.zeros(2, "UD"), 0, 1)


def test_einsum_signature_from_first_occurrence():
    a = TensorField.zeros(3, "UD")
    b = TensorField.zeros(3, "DD")
    assert einsum("rm,mn->rn", a, b).sig == "UD"
    arr = einsum("rm,mn->rn", a.components, b.components)
    assert isinstance(arr, np.ndarray)


def test_permute_moves_slots():
    a = TensorField.from_function(3, "UDD", lambda r, m, n: float(100 * r + 10 * m + n))
    b = a.permute((1, 0, 2))
    assert b.sig == "DUD"
    assert evaluate_at(b, [0, 0, 0])[2, 1, 0] == 120.0


@given(st.integers(0, 10_000), st.integers(2, 4))
def test_einsum_matches_numpy(seed, dim):
    rng = np.random.default_rng(seed)
    a = random_field(dim, "UD", rng, degree=1)
    b = random_field(dim, "DDU", rng, degree=1)
    sym = einsum("rm,mnk->rnk", a, b)
    pts = rng.uniform(-1, 1, size=(3, dim))
    ev = Evaluator(pts)
    av, _ = ev.array(a.components)
    bv, _ = ev.array(b.components)
    sv, _ = ev.array(sym.components)
    np.testing.assert_allclose(sv, np.einsum("prm,pmnk->prnk", av, bv), rtol=1e-12, atol=1e-12)


@given(st.integers(0, 10_000))
def test_leibniz_rule_for_partials(seed):
    rng = np.random.default_rng(seed)
    a = random_field(3, "U", rng)
    b = random_field(3, "D", rng)
    lhs = partial_derivative(tensor_product(a, b))
    da, db = partial_derivative(a), partial_derivative(b)
    rhs = tensor_product(da, b) + einsum("m,kn->kmn", a, db)
    pt = rng.uniform(-1, 1, 3)
    np.testing.assert_allclose(evaluate_at(lhs, pt), evaluate_at(rhs, pt), atol=1e-12)
