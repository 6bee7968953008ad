"""``galilei`` command-line front end.

Usage: ``galilei <command> <spec-file> [--points N] [--seed S] [--box LO HI]
[--tol-scale X] [--out PATH] [--dump-gamma PATH]``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for spec
or usage errors. The report is a JSON object whose keys appear in a
fixed order; apart from ``timestamp`` it is a pure function of the spec
file and the sampling options.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import connection as cn
from .checks import Report, finish, residual_check, sample_points
from .expr import Evaluator
from .frames import FrameError, GalileiFrame, check_frame_suite, frame_at_point
from .galilei import (
    GalileiStructure,
    Observer,
    check_covariant_space_metric,
    validate_observer,
    validate_structure,
)
from .milne import SPACELIKE_TOL, verify_milne_invariance
from .specfile import DATA_BLOCKS, ManifoldSpec, SpecError, load_spec
from .tensor import einsum

COMMANDS = (
    "validate",
    "special",
    "build",
    "extract",
    "roundtrip",
    "identities",
    "three-forms",
    "lemmas",
    "milne",
    "frame",
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class Context:
    spec: ManifoldSpec
    g: GalileiStructure
    points: np.ndarray
    ev: Evaluator
    gamma: cn.Connection | None = None

    def observer(self, command: str) -> Observer:
        if self.spec.observer is None:
            raise UsageError(f"command '{command}' needs an [observer] section")
        return Observer(self.spec.observer)

    def data(self) -> cn.ConnectionData:
        s = self.spec
        return cn.ConnectionData(*(s.data_block(name) for name in DATA_BLOCKS))

    def given_connection(self) -> cn.Connection | None:
        return None if self.spec.connection is None else cn.Connection(self.spec.connection)

    def connection(self, command: str) -> cn.Connection:
        """Explicit [connection] if present, else the one built from the data blocks."""
        c = self.given_connection()
        if c is None:
            if not self.spec.has_data:
                raise UsageError(f"command '{command}' needs a [connection] or [data.*] sections")
            c = cn.build_connection(self.g, self.observer(command), self.data())
        return c


def _exactly_one_source(ctx: Context, command: str, want: str):
    has_c = ctx.spec.connection is not None
    has_d = ctx.spec.has_data
    if has_c and has_d:
        raise UsageError(f"command '{command}' needs exactly one of [connection] or [data.*], got both")
    if want == "data" and not has_d:
        raise UsageError(f"command '{command}' needs [data.*] sections")
    if want == "connection" and not has_c:
        raise UsageError(f"command '{command}' needs a [connection] section")


# ---------------------------------------------------------------------------
# command pipelines


def run_validate(ctx: Context) -> Report:
    rep = validate_structure(ctx.g, None, ctx.ev)
    if ctx.spec.observer is not None:
        v = ctx.observer("validate")
        rep.extend(validate_observer(ctx.g, v, None, ctx.ev))
        rep.extend(check_covariant_space_metric(ctx.g, v, None, ctx.ev))
    return rep


def run_special(ctx: Context) -> Report:
    v = ctx.observer("special")
    ctx.gamma = cn.special_connection(ctx.g, v)
    return cn.check_special_connection(ctx.g, v, None, ctx.ev)


def run_build(ctx: Context) -> Report:
    _exactly_one_source(ctx, "build", "data")
    v = ctx.observer("build")
    data = ctx.data()
    rep = cn.check_data(ctx.g, v, data, None, ctx.ev)
    full = cn.complete_data(ctx.g, v, data)
    ctx.gamma = cn.build_connection(ctx.g, v, data)
    rep.extend(cn.check_postconditions(ctx.gamma, ctx.g, v, full, None, evaluator=ctx.ev))
    return rep


def run_extract(ctx: Context) -> Report:
    _exactly_one_source(ctx, "extract", "connection")
    v = ctx.observer("extract")
    c = ctx.given_connection()
    ctx.gamma = c
    data = cn.extract_data(c, ctx.g, v)
    rep = cn.check_data(ctx.g, v, data, None, ctx.ev)
    full = cn.extract_full(c, ctx.g, v)
    rep.extend(cn.check_identities(full.torsion, full.qhat, full.q, ctx.g, None, evaluator=ctx.ev))
    return rep


def run_roundtrip(ctx: Context) -> Report:
    v = ctx.observer("roundtrip")
    c = ctx.given_connection()
    if c is not None and ctx.spec.has_data:
        raise UsageError("command 'roundtrip' needs exactly one of [connection] or [data.*], got both")
    rep = Report()
    if c is not None:
        rebuilt = cn.build_connection(ctx.g, v, cn.extract_data(c, ctx.g, v))
        ctx.gamma = rebuilt
        rep.add(cn.connection_residual(c, rebuilt, None, name="roundtrip_coefficients", evaluator=ctx.ev))
        return rep
    if not ctx.spec.has_data:
        raise UsageError("command 'roundtrip' needs a [connection] or [data.*] sections")
    data = ctx.data()
    rep.extend(cn.check_data(ctx.g, v, data, None, ctx.ev))
    built = cn.build_connection(ctx.g, v, data)
    ctx.gamma = built
    back = cn.extract_data(built, ctx.g, v)
    for r in cn.data_residuals(data, back, None, evaluator=ctx.ev):
        r.name = "roundtrip_" + r.name
        rep.add(r)
    rep.extend(cn.check_postconditions(built, ctx.g, v, cn.complete_data(ctx.g, v, data), None, evaluator=ctx.ev))
    return rep


def run_identities(ctx: Context) -> Report:
    # With both [connection] and [data.qhat], the listed qhat replaces nabla tau:
    # this is how a corrupted non-metricity is fed in as a negative control.
    c = ctx.connection("identities")
    ctx.gamma = c
    T = cn.torsion(c)
    qhat, q = cn.nonmetricities(c, ctx.g)
    if ctx.spec.connection is not None and "qhat" in ctx.spec.data:
        qhat = ctx.spec.data["qhat"]
    return cn.check_identities(T, qhat, q, ctx.g, None, evaluator=ctx.ev)


def run_three_forms(ctx: Context) -> Report:
    v = ctx.observer("three-forms")
    c = ctx.given_connection()
    if c is not None:
        full = cn.extract_full(c, ctx.g, v)
    elif ctx.spec.has_data:
        full = cn.complete_data(ctx.g, v, ctx.data())
    else:
        raise UsageError("command 'three-forms' needs a [connection] or [data.*] sections")
    rep = cn.check_three_forms(ctx.g, v, full, None, evaluator=ctx.ev)
    ctx.gamma = cn.Connection(cn.coefficients_form1(ctx.g, v, full).components)
    return rep


def run_lemmas(ctx: Context) -> Report:
    v = ctx.observer("lemmas")
    c = ctx.connection("lemmas")
    ctx.gamma = c
    rep = Report()
    rep.add(cn.lemma_temporal_torsion_check(c, ctx.g, None, evaluator=ctx.ev))
    rep.add(cn.lemma_cov_der_hv_check(c, ctx.g, v, None, evaluator=ctx.ev))
    rep.extend(cn.check_difference_relations(c, cn.special_connection(ctx.g, v), ctx.g, v, None, evaluator=ctx.ev))
    return rep


def run_milne(ctx: Context) -> Report:
    v = ctx.observer("milne")
    if ctx.spec.boost is None:
        raise UsageError("command 'milne' needs a [boost] section")
    w = ctx.spec.boost
    c = ctx.given_connection()
    if c is not None and ctx.spec.has_data:
        raise UsageError("command 'milne' needs exactly one of [connection] or [data.*], got both")
    if c is not None:
        data = cn.extract_data(c, ctx.g, v)
    elif ctx.spec.has_data:
        data = ctx.data()
    else:
        data = cn.ConnectionData.zero(ctx.g.dim)
    rep = Report()
    spacelike = residual_check("boost_spacelike", einsum("m,m->", ctx.g.tau, w), None, ctx.ev, SPACELIKE_TOL)
    rep.add(spacelike)
    if not spacelike.passed:
        return rep
    v2 = Observer(v.v + w)
    rep.extend(validate_observer(ctx.g, v2, None, ctx.ev))
    rep.add(verify_milne_invariance(ctx.g, v, v2, data, None, evaluator=ctx.ev))
    ctx.gamma = cn.build_connection(ctx.g, v, data)
    return rep


def run_frame(ctx: Context) -> Report:
    spec = ctx.spec
    if spec.frame is None:
        v = ctx.observer("frame")
        per_point = np.zeros(len(ctx.points))
        bad = np.zeros(len(ctx.points), dtype=bool)
        for k, p in enumerate(ctx.points):
            try:
                per_point[k] = frame_at_point(ctx.g, v, p).residual
            except FrameError:
                per_point[k] = math.inf
        rep = Report()
        rep.add(finish("pointwise_frame", per_point, bad, 1e-10))
        return rep
    f = GalileiFrame.from_vectors(spec.frame)
    if spec.connection is not None and spec.has_data:
        raise UsageError("command 'frame' needs at most one of [connection] or [data.*], got both")
    if spec.connection is not None:
        c = cn.Connection(spec.connection)
    elif spec.has_data:
        c = cn.build_connection(ctx.g, Observer(f.e[0]), ctx.data())
    else:
        c = cn.special_connection(ctx.g, Observer(f.e[0]))
    ctx.gamma = c
    return check_frame_suite(c, ctx.g, f, None, ctx.ev)


PIPELINES = {
    "validate": run_validate,
    "special": run_special,
    "build": run_build,
    "extract": run_extract,
    "roundtrip": run_roundtrip,
    "identities": run_identities,
    "three-forms": run_three_forms,
    "lemmas": run_lemmas,
    "milne": run_milne,
    "frame": run_frame,
}


# ---------------------------------------------------------------------------
# reporting


def rescale(rep: Report, factor: float) -> Report:
    """Multiply every tolerance by ``factor`` and recompute pass/fail."""
    for r in rep:
        r.tolerance *= factor
        if r.skipped == r.points or not math.isfinite(r.max_residual):
            r.passed = False
        elif r.bound == "lower":
            r.passed = r.max_residual > r.tolerance
        else:
            r.passed = r.max_residual < r.tolerance
    return rep


def _num(x):
    return x if isinstance(x, float) and math.isfinite(x) else (None if isinstance(x, float) else x)


def report_dict(command: str, spec: ManifoldSpec, points: np.ndarray, rep: Report, sampling: dict,
                timestamp: str | None = None) -> dict:
    checks = []
    for r in rep:
        d = r.to_dict()
        checks.append({
            "name": d["name"],
            "passed": d["passed"],
            "max_residual": _num(d["max_residual"]),
            "tolerance": d["tolerance"],
            "bound": d["bound"],
            "points": d["points"],
            "skipped": d["skipped"],
            "detail": d["detail"],
        })
    return {
        "command": command,
        "spec": spec.path,
        "dim": spec.dim,
        "coords": list(spec.coords),
        "sampling": sampling,
        "passed": rep.passed,
        "num_checks": len(checks),
        "num_failed": sum(not c["passed"] for c in checks),
        "max_residual": _num(max((r.max_residual for r in rep if r.bound == "upper"), default=0.0)),
        "checks": checks,
        "timestamp": timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def dump_gamma(path: str, c: cn.Connection, points: np.ndarray, ev: Evaluator):
    vals, bad = ev.array(c.gamma)
    payload = {
        "dim": c.dim,
        "index_order": "gamma[point][rho][mu][nu]",
        "points": points.tolist(),
        "undefined": bad.tolist(),
        "gamma": [[[[_num(float(x)) for x in row] for row in mat] for mat in pt] for pt in vals],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="galilei", description="Verify connections on Galilei manifolds from a spec file.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("spec_file")
    p.add_argument("--points", type=int, default=None, help="number of random sample points (origin is added)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--box", type=float, nargs=2, metavar=("LO", "HI"), default=None)
    p.add_argument("--tol-scale", type=float, default=1.0, help="multiply every tolerance by X")
    p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    p.add_argument("--dump-gamma", default=None, metavar="PATH",
                   help="write evaluated connection coefficients at the sample points as JSON")
    return p


def run(command: str, spec: ManifoldSpec, points: int | None = None, seed: int | None = None,
        box=None, tol_scale: float = 1.0) -> tuple[Report, Context, dict]:
    n = spec.sampling.points if points is None else points
    s = spec.sampling.seed if seed is None else seed
    b = tuple(spec.sampling.box if box is None else box)
    if n < 1:
        raise UsageError("--points must be positive")
    if not b[0] < b[1]:
        raise UsageError("--box needs LO < HI")
    if not tol_scale > 0:
        raise UsageError("--tol-scale must be positive")
    pts = sample_points(spec.dim, n, b, s)
    g = GalileiStructure(spec.tau, spec.h)
    ctx = Context(spec, g, pts, Evaluator(pts))
    rep = PIPELINES[command](ctx)
    if tol_scale != 1.0:
        rescale(rep, tol_scale)
    sampling = {"points": int(len(pts)), "random_points": int(n), "seed": int(s), "box": [float(b[0]), float(b[1])],
                "tol_scale": float(tol_scale)}
    return rep, ctx, sampling


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        spec = load_spec(args.spec_file)
        rep, ctx, sampling = run(args.command, spec, args.points, args.seed, args.box, args.tol_scale)
        if args.dump_gamma is not None:
            if ctx.gamma is None:
                raise UsageError(f"command '{args.command}' produces no connection to dump")
            dump_gamma(args.dump_gamma, ctx.gamma, ctx.points, ctx.ev)
    except (SpecError, UsageError, cn.DataInvariantError, FrameError, ValueError) as exc:
        print(f"galilei: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = json.dumps(report_dict(args.command, spec, ctx.points, rep, sampling), indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
