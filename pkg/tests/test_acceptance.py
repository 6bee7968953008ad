"""Acceptance suite: the ten primary criteria at their stated tolerances.

Each criterion is a plain function returning an :class:`Outcome`; the
pytest wrappers assert on it and ``conftest.py`` prints one PASS/FAIL
line per criterion in the terminal summary. Running this file directly
prints the same lines without pytest.
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass

import numpy as np
import pytest

from galconn.checks import residual_check, sample_points
from galconn.connection import (
    ConnectionData,
    build_connection,
    check_data,
    check_difference_relations,
    check_identities,
    check_postconditions,
    check_special_connection,
    check_three_forms,
    complete_data,
    connection_residual,
    data_residuals,
    extract_data,
    extract_full,
    lemma_cov_der_hv_check,
    lemma_temporal_torsion_check,
    special_connection,
)
from galconn.expr import Evaluator, differentiate, evaluate, parse_expression
from galconn.frames import (
    GalileiFrame,
    check_cartan_torsion,
    check_frame_nc_form,
    check_frame_nonmetricities,
    decompose_gal,
    local_connection_form,
)
from galconn.galilei import flat_structure, rest_observer
from galconn.milne import boost, verify_milne_invariance
from galconn.random_fields import (
    constant_frame_boost,
    random_connection,
    random_data,
    random_expression,
    random_field,
    random_setup,
    random_spacelike,
)
from galconn.tensor import TensorField, einsum, partial_derivative

N_POINTS = 50
RESULTS: dict[int, "Outcome"] = {}


@dataclass
class Outcome:
    number: int
    title: str
    passed: bool
    summary: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number:2d} {self.title}: {self.summary}"


def _pts(dim, seed, n=N_POINTS):
    pts = sample_points(dim, n, (-1.0, 1.0), seed, include_origin=False)
    return pts, Evaluator(pts)


def _dims(count):
    return [3 if k % 2 == 0 else 4 for k in range(count)]


def _worst(results):
    return max(r.max_residual for r in results)


def _all(results):
    return all(r.passed for r in results)


# ---------------------------------------------------------------------------


def criterion_1() -> Outcome:
    start = time.perf_counter()
    results = []
    for k, dim in enumerate(_dims(20)):
        rng = np.random.default_rng(1000 + k)
        s = random_setup(dim, rng)
        c = random_connection(dim, rng, degree=2)
        _, ev = _pts(dim, 1000 + k)
        back = build_connection(s.g, s.v, extract_data(c, s.g, s.v))
        results.append(connection_residual(c, back, None, 1e-8, "roundtrip_a", ev))
    elapsed = time.perf_counter() - start
    ok = _all(results) and elapsed < 120.0
    return Outcome(1, "round-trip build(extract(c)) = c", ok,
                   f"max residual {_worst(results):.2e} < 1e-8 over 20 structures, {elapsed:.1f} s < 120 s")


def criterion_2() -> Outcome:
    results = []
    for k, dim in enumerate(_dims(20)):
        rng = np.random.default_rng(2000 + k)
        s = random_setup(dim, rng)
        data = random_data(s.g, s.v, rng)
        _, ev = _pts(dim, 2000 + k)
        results += list(check_data(s.g, s.v, data, None, ev))
        c = build_connection(s.g, s.v, data)
        results += list(data_residuals(data, extract_data(c, s.g, s.v), None, 1e-8, ev))
        results += list(check_postconditions(c, s.g, s.v, complete_data(s.g, s.v, data), None, 1e-8, ev))
    return Outcome(2, "round-trip extract(build(d)) = d", _all(results),
                   f"max residual {_worst(results):.2e} < 1e-8 over 20 data tuples")


def criterion_3() -> Outcome:
    good, controls = [], []
    for k, dim in enumerate(_dims(20)):
        rng = np.random.default_rng(3000 + k)
        s = random_setup(dim, rng)
        c = random_connection(dim, rng)
        _, ev = _pts(dim, 3000 + k)
        full = extract_full(c, s.g, s.v)
        good += list(check_identities(full.torsion, full.qhat, full.q, s.g, None, 1e-9, ev))
        bump = random_field(dim, "DD", rng, degree=1)
        bad = check_identities(full.torsion, full.qhat + bump, full.q, s.g, None, 1e-9, ev)
        controls.append(max(r.max_residual for r in bad))
    ok = _all(good) and min(controls) > 1e-3
    return Outcome(3, "identities and corrupted-qhat controls", ok,
                   f"max residual {_worst(good):.2e} < 1e-9; smallest control residual {min(controls):.2e} > 1e-3")


def criterion_4() -> Outcome:
    results = []
    for k, dim in enumerate(_dims(20)):
        rng = np.random.default_rng(4000 + k)
        s = random_setup(dim, rng)
        full = complete_data(s.g, s.v, random_data(s.g, s.v, rng))
        _, ev = _pts(dim, 4000 + k)
        results += list(check_three_forms(s.g, s.v, full, None, 1e-9, ev))
    return Outcome(4, "three coefficient forms agree", _all(results),
                   f"max pairwise residual {_worst(results):.2e} < 1e-9 over 20 inputs")


def criterion_5() -> Outcome:
    results = []
    for k, dim in enumerate(_dims(10)):
        rng = np.random.default_rng(5000 + k)
        s = random_setup(dim, rng, degree=2)
        _, ev = _pts(dim, 5000 + k)
        results += list(check_special_connection(s.g, s.v, None, ev))
    compat = [r for r in results if r.name != "special_torsion"]
    tors = [r for r in results if r.name == "special_torsion"]
    return Outcome(5, "special connection", _all(results),
                   f"compatibility/Omega {_worst(compat):.2e} < 1e-9, torsion - v(x)dtau {_worst(tors):.2e} < 1e-10")


def criterion_6() -> Outcome:
    lemmas, diffs = [], []
    for k, dim in enumerate(_dims(10)):
        rng = np.random.default_rng(6000 + k)
        s = random_setup(dim, rng)
        c1, c2 = random_connection(dim, rng), random_connection(dim, rng)
        _, ev = _pts(dim, 6000 + k)
        lemmas.append(lemma_temporal_torsion_check(c1, s.g, None, 1e-9, ev))
        lemmas.append(lemma_cov_der_hv_check(c1, s.g, s.v, None, 1e-9, ev))
        diffs += list(check_difference_relations(c1, c2, s.g, s.v, None, 1e-9, ev))
        diffs += list(check_difference_relations(c1, special_connection(s.g, s.v), s.g, s.v, None, 1e-9, ev))
    ok = _all(lemmas) and _all(diffs)
    return Outcome(6, "lemmas and difference-tensor relations", ok,
                   f"lemmas {_worst(lemmas):.2e}, difference relations {_worst(diffs):.2e} < 1e-9")


def criterion_7() -> Outcome:
    names = ["t", "x", "y", "z"]
    g, v = flat_structure(4), rest_observer(4)
    dphi = partial_derivative(TensorField.scalar(4, parse_expression("x^2 + y*z", 4, names)))
    ta = einsum("m,n->mn", g.tau, dphi)
    z = ConnectionData.zero(4)
    c = build_connection(g, v, ConnectionData(z.spatial_torsion, z.qhat, z.spatial_q, ta - ta.permute((1, 0))))
    pts, ev = _pts(4, 7, n=20)
    expected = np.zeros((len(pts), 4, 4, 4))
    expected[:, 1, 0, 0] = 2 * pts[:, 1]
    expected[:, 2, 0, 0] = pts[:, 3]
    expected[:, 3, 0, 0] = pts[:, 2]
    got, bad = ev.array(c.gamma)
    res = float(np.abs(got - expected).max())
    return Outcome(7, "Newtonian oracle", bool(res < 1e-12 and not bad.any()),
                   f"max |Gamma - hand values| {res:.2e} < 1e-12 at 20 points")


def criterion_8() -> Outcome:
    results = []
    for k, dim in enumerate(_dims(10)):
        rng = np.random.default_rng(8000 + k)
        s = random_setup(dim, rng)
        data = random_data(s.g, s.v, rng)
        pts, ev = _pts(dim, 8000 + k)
        w = constant_frame_boost(s, rng) if k < 5 else random_spacelike(s.g, s.v, rng)
        v2 = boost(s.v, w, s.g, pts)
        results.append(verify_milne_invariance(s.g, s.v, v2, data, None, 1e-8, ev))
    return Outcome(8, "Milne invariance", _all(results),
                   f"max residual {_worst(results):.2e} < 1e-8 over 5 constant + 5 position-dependent boosts")


def criterion_9() -> Outcome:
    checks, iff = [], []
    for k, dim in enumerate(_dims(10)):
        rng = np.random.default_rng(9000 + k)
        s = random_setup(dim, rng)
        f = GalileiFrame.from_observer(s.v, s.spatial_frame)
        _, ev = _pts(dim, 9000 + k)
        data = random_data(s.g, s.v, rng)
        z = ConnectionData.zero(dim)
        galilei = build_connection(s.g, s.v, ConnectionData(data.spatial_torsion, z.qhat, z.spatial_q, data.omega))
        for c in (random_connection(dim, rng), galilei):
            w = local_connection_form(c, f)
            checks += list(check_cartan_torsion(c, s.g, f, w, None, 1e-9, ev))
            checks += list(check_frame_nonmetricities(c, s.g, f, w, None, 1e-9, ev))
            checks.append(check_frame_nc_form(c, s.g, f, w, None, 1e-9, ev))
        # rest part vanishes for the Galilei connection and not for a non-metric one
        rest_gal = residual_check("rest", decompose_gal(local_connection_form(galilei, f))[1].omega, None, ev, 1e-9)
        nonmetric = build_connection(s.g, s.v, data)
        rest_nm = residual_check("rest", decompose_gal(local_connection_form(nonmetric, f))[1].omega, None, ev, 1e-9)
        iff.append(rest_gal.passed and not rest_nm.passed and rest_nm.max_residual > 1e-3)
    ok = _all(checks) and all(iff)
    return Outcome(9, "frame suite", ok,
                   f"Cartan/non-metricity/Omega max {_worst(checks):.2e} < 1e-9; rest-part iff Galilei in "
                   f"{sum(iff)}/10 cases")


def criterion_10() -> Outcome:
    rng = np.random.default_rng(10_000)
    h = 1e-5
    worst = 0.0
    for _ in range(1000):
        dim = int(rng.integers(2, 5))
        e = random_expression(dim, rng, depth=int(rng.integers(1, 6)))
        pt = rng.uniform(-1.0, 1.0, dim)
        i = int(rng.integers(dim))
        a, b = pt.copy(), pt.copy()
        a[i] += h
        b[i] -= h
        fd = (evaluate(e, a) - evaluate(e, b)) / (2 * h)
        exact = evaluate(differentiate(e, i), pt)
        worst = max(worst, abs(exact - fd) / max(1.0, abs(exact)))
    return Outcome(10, "exact vs central-difference derivatives", worst < 1e-6,
                   f"max relative error {worst:.2e} < 1e-6 over 1000 pairs")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("fn", CRITERIA, ids=[f"criterion_{k}" for k in range(1, 11)])
def test_acceptance(fn):
    out = fn()
    RESULTS[out.number] = out
    print(out.line())
    assert out.passed, out.line()


def main() -> int:
    ok = True
    for fn in CRITERIA:
        out = fn()
        print(out.line(), flush=True)
        ok &= out.passed
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
