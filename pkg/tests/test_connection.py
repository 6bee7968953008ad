import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from galconn.checks import residual_check, sample_points
from galconn.connection import (
    Connection,
    ConnectionData,
    DataInvariantError,
    build_connection,
    check_data,
    check_difference_relations,
    check_identities,
    check_postconditions,
    check_special_connection,
    check_three_forms,
    complete_data,
    connection_residual,
    covariant_derivative,
    data_residuals,
    decompose_nc,
    extract_data,
    extract_full,
    lemma_cov_der_hv_check,
    lemma_temporal_torsion_check,
    newton_coriolis,
    nonmetricities,
    recompose_nc,
    special_connection,
    torsion,
)
from galconn.expr import Evaluator, parse_expression
from galconn.galilei import GalileiStructure, Observer, flat_structure, rest_observer
from galconn.random_fields import random_connection, random_data, random_setup
from galconn.tensor import TensorField, einsum, evaluate_at, partial_derivative

NAMES = ["t", "x", "y", "z"]


def tf(dim, sig, entries):
    names = NAMES[:dim]
    return TensorField.from_function(
        dim, sig, lambda *i: parse_expression(entries[i], dim, names) if i in entries else 0.0
    )


def newtonian_data(phi="x^2 + y*z"):
    g, v = flat_structure(4), rest_observer(4)
    dphi = partial_derivative(TensorField.scalar(4, parse_expression(phi, 4, NAMES)))
    ta = einsum("m,n->mn", g.tau, dphi)
    data = ConnectionData.zero(4)
    return g, v, ConnectionData(data.spatial_torsion, data.qhat, data.spatial_q, ta - ta.permute((1, 0)))


# ---------------------------------------------------------------------------
# frozen oracles


def test_newtonian_coefficients():
    g, v, data = newtonian_data()
    c = build_connection(g, v, data)
    pts = sample_points(4, 20, (-1, 1), 42)
    # hand substitution: Gamma^x_tt = d_x phi, Gamma^y_tt = d_y phi, Gamma^z_tt = d_z phi
    expected = np.zeros((len(pts), 4, 4, 4))
    expected[:, 1, 0, 0] = 2 * pts[:, 1]
    expected[:, 2, 0, 0] = pts[:, 3]
    expected[:, 3, 0, 0] = pts[:, 2]
    got, bad = Evaluator(pts).array(c.gamma)
    assert not bad.any()
    assert np.abs(got - expected).max() < 1e-12


def test_newtonian_connection_is_galilei_and_torsion_free():
    g, v, data = newtonian_data()
    c = build_connection(g, v, data)
    pts = sample_points(4, 20, (-1, 1), 1)
    qhat, q = nonmetricities(c, g)
    ev = Evaluator(pts)
    assert residual_check("q", q, None, ev, 1e-14).passed
    assert residual_check("qhat", qhat, None, ev, 1e-14).passed
    assert residual_check("T", torsion(c), None, ev, 1e-14).passed


def test_special_connection_flat_is_zero():
    c = special_connection(flat_structure(3), rest_observer(3))
    assert np.abs(evaluate_at(c.as_field(), [0.2, 0.3, -0.1])).max() == 0.0


def _twisted_clock():
    # tau = dt + x dy; ker tau = span(d_x, d_y - x d_t)
    g = GalileiStructure(
        tf(3, "D", {(0,): "1", (2,): "x"}),
        tf(3, "UU", {(1, 1): "1", (2, 2): "1", (0, 2): "-x", (2, 0): "-x", (0, 0): "x^2"}),
    )
    return g, rest_observer(3)


def test_special_connection_twisted_clock_torsion():
    g, v = _twisted_clock()
    T = evaluate_at(torsion(special_connection(g, v)), [0.1, 0.4, -0.7])
    expected = np.zeros((3, 3, 3))
    expected[0, 1, 2], expected[0, 2, 1] = 1.0, -1.0  # d tau = dx ^ dy along v = d_t
    np.testing.assert_allclose(T, expected, atol=1e-14)
    assert check_special_connection(g, v, sample_points(3, 20, (-1, 1), 0)).passed


def test_single_temporal_coefficient_gives_qhat():
    c = Connection.from_function(3, lambda r, m, n: 1.0 if (r, m, n) == (0, 1, 1) else 0.0)
    qhat, _ = nonmetricities(c, flat_structure(3))
    q = evaluate_at(qhat, [0, 0, 0])
    assert q[1, 1] == -1.0
    assert np.count_nonzero(q) == 1


def test_covariant_derivative_of_vector_and_covector():
    c = Connection.from_function(2, lambda r, m, n: 2.0 if (r, m, n) == (1, 0, 1) else 0.0)
    X = tf(2, "U", {(1,): "3"})
    a = tf(2, "D", {(1,): "5"})
    assert evaluate_at(covariant_derivative(c, X), [0, 0])[0, 1] == 6.0
    assert evaluate_at(covariant_derivative(c, a), [0, 0])[0, 1] == -10.0


def test_torsion_sign():
    c = Connection.from_function(2, lambda r, m, n: 1.0 if (r, m, n) == (0, 0, 1) else 0.0)
    T = evaluate_at(torsion(c), [0, 0])
    assert T[0, 0, 1] == 1.0 and T[0, 1, 0] == -1.0


# ---------------------------------------------------------------------------
# data validation


def test_invalid_data_rejected():
    g, v = flat_structure(3), rest_observer(3)
    z = ConnectionData.zero(3)
    pts = sample_points(3, 5, (-1, 1), 0)
    bad_omega = ConnectionData(z.spatial_torsion, z.qhat, z.spatial_q, tf(3, "DD", {(0, 1): "1"}))
    with pytest.raises(DataInvariantError):
        build_connection(g, v, bad_omega, pts)
    timelike_torsion = tf(3, "UDD", {(0, 1, 2): "1", (0, 2, 1): "-1"})
    rep = check_data(g, v, ConnectionData(timelike_torsion, z.qhat, z.spatial_q, z.omega), pts)
    assert not rep["spatial_torsion_spacelike"].passed
    timelike_q = tf(3, "DUU", {(1, 0, 0): "1"})
    rep = check_data(g, v, ConnectionData(z.spatial_torsion, z.qhat, timelike_q, z.omega), pts)
    assert not rep["spatial_q_spacelike"].passed
    with pytest.raises(DataInvariantError):
        ConnectionData(z.qhat, z.qhat, z.spatial_q, z.omega)


# ---------------------------------------------------------------------------
# classification on random inputs


def _pts(setup, n=30, seed=11):
    pts = sample_points(setup.g.dim, n, (-1, 1), seed)
    return pts, Evaluator(pts)


def test_round_trip_connection(setup):
    pts, ev = _pts(setup)
    c = random_connection(setup.g.dim, np.random.default_rng(1))
    back = build_connection(setup.g, setup.v, extract_data(c, setup.g, setup.v))
    assert connection_residual(c, back, None, evaluator=ev).passed


def test_round_trip_data(setup):
    pts, ev = _pts(setup)
    data = random_data(setup.g, setup.v, np.random.default_rng(2))
    assert check_data(setup.g, setup.v, data, None, ev).passed
    c = build_connection(setup.g, setup.v, data, evaluator=ev)
    assert data_residuals(data, extract_data(c, setup.g, setup.v), None, evaluator=ev).passed
    full = complete_data(setup.g, setup.v, data)
    assert check_postconditions(c, setup.g, setup.v, full, None, evaluator=ev).passed


def test_three_forms_agree(setup):
    pts, ev = _pts(setup)
    data = random_data(setup.g, setup.v, np.random.default_rng(3))
    rep = check_three_forms(setup.g, setup.v, complete_data(setup.g, setup.v, data), None, evaluator=ev)
    assert rep.passed, [c.line() for c in rep]


def test_identities_hold_and_corruption_detected(setup):
    pts, ev = _pts(setup)
    c = random_connection(setup.g.dim, np.random.default_rng(4))
    full = extract_full(c, setup.g, setup.v)
    assert check_identities(full.torsion, full.qhat, full.q, setup.g, None, evaluator=ev).passed
    bump = TensorField.from_function(setup.g.dim, "DD", lambda m, n: 0.1 * (m + 2 * n + 1))
    rep = check_identities(full.torsion, full.qhat + bump, full.q, setup.g, None, evaluator=ev)
    assert not rep["identity_tau_q"].passed and rep["identity_tau_q"].max_residual > 1e-3
    assert not rep["identity_temporal_torsion"].passed


def test_special_connection_random(setup):
    pts, ev = _pts(setup)
    rep = check_special_connection(setup.g, setup.v, None, ev)
    assert rep.passed, [c.line() for c in rep]


def test_lemmas_random(setup):
    pts, ev = _pts(setup)
    c = random_connection(setup.g.dim, np.random.default_rng(5))
    assert lemma_temporal_torsion_check(c, setup.g, None, evaluator=ev).passed
    assert lemma_cov_der_hv_check(c, setup.g, setup.v, None, evaluator=ev).passed


def test_difference_relations_random(setup):
    pts, ev = _pts(setup)
    rng = np.random.default_rng(6)
    c1, c2 = random_connection(setup.g.dim, rng), random_connection(setup.g.dim, rng)
    assert check_difference_relations(c1, c2, setup.g, setup.v, None, evaluator=ev).passed
    assert check_difference_relations(c1, special_connection(setup.g, setup.v), setup.g, setup.v, None,
                                      evaluator=ev).passed


def test_nc_decomposition_reassembles(setup):
    pts, ev = _pts(setup)
    c = random_connection(setup.g.dim, np.random.default_rng(7))
    om = newton_coriolis(c, setup.g, setup.v)
    alpha, w = decompose_nc(om, setup.g, setup.v)
    assert residual_check("recompose", recompose_nc(alpha, w, setup.g), om, ev, 1e-10).passed
    # the spatial part annihilates v in both slots
    assert residual_check("w_v", einsum("mn,n->m", w, setup.v.v), None, ev, 1e-10).passed


@settings(max_examples=8)
@given(st.integers(0, 10_000), st.sampled_from([2, 3]))
def test_round_trip_property(seed, dim):
    rng = np.random.default_rng(seed)
    s = random_setup(dim, rng)
    ev = Evaluator(sample_points(dim, 10, (-1, 1), seed))
    c = random_connection(dim, rng)
    back = build_connection(s.g, s.v, extract_data(c, s.g, s.v))
    assert connection_residual(c, back, None, evaluator=ev).passed
