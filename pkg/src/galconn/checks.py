"""Sample points and residual checks.

Every identity in the package is verified the same way: evaluate both
sides at a batch of chart points, drop points where either side has a
pole, and compare the maximum absolute residual with a tolerance.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .expr import Evaluator
from .tensor import TensorField

DEFAULT_POINTS = 50
DEFAULT_BOX = (-1.0, 1.0)
DEFAULT_SEED = 42


def sample_points(
    dim: int,
    n: int = DEFAULT_POINTS,
    box: tuple[float, float] = DEFAULT_BOX,
    seed: int = DEFAULT_SEED,
    include_origin: bool = True,
) -> np.ndarray:
    """``n`` uniform points in ``box**dim`` (plus the origin, first)."""
    lo, hi = box
    if not hi > lo:
        raise ValueError(f"empty sampling box {box}")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lo, hi, size=(n, dim))
    if include_origin:
        pts = np.vstack([np.zeros((1, dim)), pts])
    return pts


@dataclass
class CheckResult:
    name: str
    max_residual: float
    tolerance: float
    passed: bool
    points: int
    skipped: int
    detail: str = ""
    # "upper": passed iff max_residual < tolerance.
    # "lower": max_residual holds the smallest observed value; passed iff it exceeds tolerance.
    bound: str = "upper"

    def to_dict(self) -> dict:
        d = asdict(self)
        if not np.isfinite(d["max_residual"]):
            d["max_residual"] = None
        return d

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        what = "max residual" if self.bound == "upper" else "min value"
        return (
            f"[{status}] {self.name}: {what} {self.max_residual:.3e} "
            f"(tol {self.tolerance:.0e}, {self.points - self.skipped}/{self.points} points)"
        )


@dataclass
class Report:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        return check

    def extend(self, other: "Report | list[CheckResult]"):
        self.checks.extend(other.checks if isinstance(other, Report) else other)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __iter__(self):
        return iter(self.checks)

    def max_residual(self) -> float:
        return max((c.max_residual for c in self.checks), default=0.0)


def _components(x):
    if isinstance(x, TensorField):
        return x.components
    return np.asarray(x, dtype=object)


def residual_values(lhs, rhs, ev: Evaluator) -> tuple[np.ndarray, np.ndarray]:
    """Per-point max |lhs - rhs| and the mask of skipped points.

    ``rhs`` may be ``None`` (compare against zero) or a plain number.
    """
    a, bad = ev.array(_components(lhs))
    if rhs is None:
        diff = np.abs(a)
    elif isinstance(rhs, (int, float)):
        diff = np.abs(a - rhs)
    else:
        b, bad_b = ev.array(_components(rhs))
        bad = bad | bad_b
        diff = np.abs(a - b)
    diff = diff.reshape(ev.n, -1)
    per_point = diff.max(axis=1) if diff.shape[1] else np.zeros(ev.n)
    return per_point, bad


def finish(name: str, per_point: np.ndarray, bad: np.ndarray, tol: float, detail: str = "") -> CheckResult:
    good = ~bad
    n = per_point.size
    skipped = int(bad.sum())
    if skipped == n:
        return CheckResult(name, float("inf"), tol, False, n, skipped, detail or "all sample points degenerate")
    vals = per_point[good]
    worst = float(vals.max()) if vals.size else 0.0
    if np.isnan(vals).any():
        worst = float("inf")
    return CheckResult(name, worst, tol, bool(worst < tol), n, skipped, detail)


def residual_check(name: str, lhs, rhs, ev: Evaluator, tol: float, detail: str = "") -> CheckResult:
    per_point, bad = residual_values(lhs, rhs, ev)
    return finish(name, per_point, bad, tol, detail)


def lower_bound_check(name: str, per_point: np.ndarray, bad: np.ndarray, threshold: float, detail: str = "") -> CheckResult:
    """Pass iff ``per_point`` exceeds ``threshold`` at every usable point."""
    good = ~bad
    n = per_point.size
    skipped = int(bad.sum())
    if skipped == n:
        return CheckResult(name, float("nan"), threshold, False, n, skipped, detail or "all sample points degenerate", "lower")
    worst = float(np.min(per_point[good]))
    return CheckResult(name, worst, threshold, bool(worst > threshold), n, skipped, detail, "lower")
