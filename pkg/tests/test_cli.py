import json
from pathlib import Path

import pytest

from galconn.cli import main
from galconn.specfile import SpecError, parse_spec
from galconn.tensor import evaluate_at

SPECS = Path(__file__).resolve().parent.parent / "specs"

FLAT = """
[manifold]
coords = t, x, y, z
[tau]
t = 1
[h]
h[x][x] = 1
h[y][y] = 1
h[z][z] = 1
[observer]
v[t] = 1
"""


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


# ---------------------------------------------------------------------------
# spec parsing


def test_flat_spec_loads():
    spec = parse_spec(FLAT)
    assert spec.dim == 4 and spec.coords == ["t", "x", "y", "z"]
    assert evaluate_at(spec.tau, [0] * 4).tolist() == [1, 0, 0, 0]
    assert evaluate_at(spec.h, [0] * 4).tolist() == [[0, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
    assert spec.sampling.points == 50 and spec.sampling.seed == 42 and spec.sampling.box == (-1.0, 1.0)


def test_symmetric_and_antisymmetric_blocks_mirror():
    spec = parse_spec(FLAT + "[data.omega]\nomega[t][x] = 2*x\n")
    om = evaluate_at(spec.data["omega"], [0, 0.5, 0, 0])
    assert om[0, 1] == 1.0 and om[1, 0] == -1.0
    spec = parse_spec(FLAT.replace("h[x][x] = 1", "h[x][x] = 1\nh[t][x] = 0.5"))
    assert evaluate_at(spec.h, [0] * 4)[1, 0] == 0.5


def test_integer_indices_and_bare_keys():
    spec = parse_spec("[manifold]\ndim = 2\n[tau]\n0 = 1\n[h]\n[1][1] = x0 + 2\n")
    assert spec.coords == ["x0", "x1"]
    assert evaluate_at(spec.h, [3.0, 0])[1, 1] == 5.0


def test_sampling_section():
    spec = parse_spec(FLAT + "[sampling]\npoints = 7\nseed = 3\nbox = -2 2\n")
    assert (spec.sampling.points, spec.sampling.seed, spec.sampling.box) == (7, 3, (-2.0, 2.0))


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("[manifold]\ncoords = t, x\n[tau]\nt = 1\n[h]\nh[z][z] = 1\n", "unknown index 'z'"),
        ("[manifold]\ncoords = t, x\n[tau]\nt = 1\n[h]\nh[x][x] = z\n", "unknown identifier 'z'"),
        ("[manifold]\ncoords = t, x\n[tau]\nt = 1\n[h]\nh[x][5] = 1\n", "out of range"),
        ("[manifold]\ncoords = t, x\n[tau]\nt = 1\n", "missing [h]"),
        ("[manifold]\ncoords = t, x\n[tau]\nt = 1\n[h]\nh[x] = 1\n", "expected 2"),
        ("[manifold]\ncoords = t, x\n[tau]\nt = 1\n[h]\nh[x][x] = 1 +\n", "offset"),
        ("[manifold]\ncoords = t, x\n[tau]\nt = 1\n[h]\nh[t][x] = 1\nh[x][t] = 2\n", "conflicting"),
        ("[manifold]\ncoords = t, x\n[tau]\nt = 1\n[h]\n[bogus]\n", "unknown section"),
        ("[manifold]\ncoords = t, x\ndim = 3\n[tau]\nt = 1\n[h]\n", "dim = 3"),
        ("t = 1\n", "outside of any section"),
        ("[manifold]\ncoords = t\n[tau]\nt = 1\n[h]\n", "at least 2"),
        ("[manifold]\ncoords = t, x\n[tau]\nt = 1\n[h]\n[data.omega]\nomega[x][x] = 1\n", "diagonal"),
    ],
)
def test_semantic_and_parse_errors(text, fragment):
    with pytest.raises(SpecError) as info:
        parse_spec(text)
    assert fragment in str(info.value)


def test_error_reports_line_number():
    with pytest.raises(SpecError) as info:
        parse_spec("[manifold]\ncoords = t, x\n[tau]\nt = 1\n[h]\nh[x][x] = q\n")
    assert info.value.line == 6


# ---------------------------------------------------------------------------
# command runs


def test_validate_flat(capsys):
    code, rep, _ = run(capsys, "validate", str(SPECS / "flat.spec"))
    assert code == 0 and rep["passed"]
    assert all(c["max_residual"] == 0.0 for c in rep["checks"] if c["bound"] == "upper")
    assert list(rep) == ["command", "spec", "dim", "coords", "sampling", "passed", "num_checks", "num_failed",
                         "max_residual", "checks", "timestamp"]


def test_roundtrip_newtonian(capsys):
    for spec in ("newtonian.spec", "newtonian_gamma.spec"):
        code, rep, _ = run(capsys, "roundtrip", str(SPECS / spec))
        assert code == 0 and rep["max_residual"] < 1e-8


def test_identities_corrupted_qhat_fails(capsys):
    code, rep, _ = run(capsys, "identities", str(SPECS / "corrupted_qhat.spec"))
    assert code == 1 and not rep["passed"]
    assert rep["max_residual"] > 1e-3


@pytest.mark.parametrize(
    "command, spec",
    [
        ("special", "curved.spec"),
        ("build", "curved.spec"),
        ("extract", "newtonian_gamma.spec"),
        ("three-forms", "curved.spec"),
        ("lemmas", "curved.spec"),
        ("milne", "milne.spec"),
        ("frame", "frame.spec"),
        ("frame", "curved.spec"),
        ("identities", "curved.spec"),
    ],
)
def test_commands_pass_on_examples(capsys, command, spec):
    code, rep, err = run(capsys, command, str(SPECS / spec))
    assert code == 0, err or [c for c in rep["checks"] if not c["passed"]]


def test_missing_sections_are_usage_errors(capsys):
    code, rep, err = run(capsys, "build", str(SPECS / "flat.spec"))
    assert code == 2 and rep is None and "data" in err
    code, _, err = run(capsys, "milne", str(SPECS / "newtonian.spec"))
    assert code == 2 and "[boost]" in err
    code, _, _ = run(capsys, "extract", str(SPECS / "corrupted_qhat.spec"))
    assert code == 2


def test_bad_arguments(capsys, tmp_path):
    assert main(["nonsense", str(SPECS / "flat.spec")]) == 2
    assert main(["validate", str(tmp_path / "missing.spec")]) == 2
    assert main(["validate", str(SPECS / "flat.spec"), "--box", "1", "-1"]) == 2
    assert main(["validate", str(SPECS / "flat.spec"), "--points", "0"]) == 2
    bad = tmp_path / "bad.spec"
    bad.write_text("[manifold]\ncoords = t, x\n[tau]\nt = 1\n[h]\nh[x][x] = y\n")
    assert main(["validate", str(bad)]) == 2
    capsys.readouterr()


def test_determinism_and_out_file(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["lemmas", str(SPECS / "curved.spec"), "--points", "12", "--seed", "5"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    strip = lambda p: [ln for ln in p.read_text().splitlines() if '"timestamp"' not in ln]  # noqa: E731
    assert strip(a) == strip(b)
    rep = json.loads(a.read_text())
    assert rep["sampling"] == {"points": 13, "random_points": 12, "seed": 5, "box": [-1.0, 1.0], "tol_scale": 1.0}
    assert capsys.readouterr().out == ""


def test_tol_scale_can_fail_a_passing_run(capsys):
    code, rep, _ = run(capsys, "validate", str(SPECS / "curved.spec"), "--tol-scale", "1e-30")
    assert code == 1
    failing = [c["name"] for c in rep["checks"] if not c["passed"]]
    assert "tau_h_zero" in failing


def test_dump_gamma(tmp_path, capsys):
    out = tmp_path / "gamma.json"
    code, _, _ = run(capsys, "build", str(SPECS / "newtonian.spec"), "--points", "4", "--dump-gamma", str(out))
    assert code == 0
    d = json.loads(out.read_text())
    assert len(d["points"]) == 5 and len(d["gamma"]) == 5
    for p, g in zip(d["points"], d["gamma"]):
        assert g[1][0][0] == pytest.approx(2 * p[1], abs=1e-12)
        assert g[2][0][0] == pytest.approx(p[3], abs=1e-12)
    code, _, _ = run(capsys, "validate", str(SPECS / "flat.spec"), "--dump-gamma", str(out))
    assert code == 2
