"""Loader for manifold specification files.

Format: ``[section]`` headers followed by ``key = expression`` lines;
``#`` starts a comment. Tensor entries are written ``name[i][j] = expr``
where each index is an integer or a declared coordinate name and the
leading name is optional (rank-1 entries may also be a bare index).
Components that are never assigned are zero.

Sections::

    [manifold]          coords = t, x, y   (and/or dim = 3)
    [tau]               D
    [h]                 UU, one triangle suffices (mirrored)
    [observer]          U
    [data.spatial_torsion]   UDD, antisymmetric in the last pair (mirrored)
    [data.qhat]         DD
    [data.spatial_q]    DUU, symmetric in the last pair (mirrored)
    [data.omega]        DD, antisymmetric (mirrored)
    [connection]        Gamma[r][m][n]
    [frame]             e[A][mu], A = 0 is the timelike leg
    [boost]             U, spacelike Milne boost field
    [sampling]          points = 50, seed = 42, box = -1 1
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .checks import DEFAULT_BOX, DEFAULT_POINTS, DEFAULT_SEED
from .expr import Expr, ParseError, is_zero, mul, parse_expression
from .tensor import TensorField, obj_array


class SpecError(ValueError):
    """Malformed or inconsistent spec file; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}".strip() if where else message)


# section -> (signature, mirrored slot pair or None, mirror sign)
_TENSOR_SECTIONS: dict[str, tuple[str, tuple[int, int] | None, float]] = {
    "tau": ("D", None, 1.0),
    "h": ("UU", (0, 1), 1.0),
    "observer": ("U", None, 1.0),
    "data.spatial_torsion": ("UDD", (1, 2), -1.0),
    "data.qhat": ("DD", None, 1.0),
    "data.spatial_q": ("DUU", (1, 2), 1.0),
    "data.omega": ("DD", (0, 1), -1.0),
    "connection": ("UDD", None, 1.0),
    "frame": ("UU", None, 1.0),
    "boost": ("U", None, 1.0),
}
_KNOWN = set(_TENSOR_SECTIONS) | {"manifold", "sampling"}
DATA_BLOCKS = ("spatial_torsion", "qhat", "spatial_q", "omega")

_SECTION = re.compile(r"^\[([A-Za-z_][\w.]*)\]$")
_KEY = re.compile(r"^([A-Za-z_]\w*)?((?:\[[^\[\]]+\])+)$")


@dataclass
class SamplingConfig:
    points: int = DEFAULT_POINTS
    seed: int = DEFAULT_SEED
    box: tuple[float, float] = DEFAULT_BOX


@dataclass
class ManifoldSpec:
    path: str
    dim: int
    coords: list[str]
    tau: TensorField
    h: TensorField
    observer: TensorField | None = None
    data: dict[str, TensorField] = field(default_factory=dict)
    connection: np.ndarray | None = None
    frame: list[TensorField] | None = None
    boost: TensorField | None = None
    sampling: SamplingConfig = field(default_factory=SamplingConfig)

    @property
    def has_data(self) -> bool:
        return bool(self.data)

    def data_block(self, name: str) -> TensorField:
        sig = _TENSOR_SECTIONS["data." + name][0]
        return self.data.get(name) or TensorField.zeros(self.dim, sig)


def _strip_comment(line: str) -> str:
    k = line.find("#")
    return line if k < 0 else line[:k]


def _split_sections(text: str, path: str):
    sections: dict[str, list[tuple[int, str, str]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            current = m.group(1)
            if current not in _KNOWN:
                raise SpecError(f"unknown section [{current}]", lineno, path)
            if current in sections:
                raise SpecError(f"duplicate section [{current}]", lineno, path)
            sections[current] = []
            continue
        if current is None:
            raise SpecError("entry outside of any section", lineno, path)
        key, eq, value = line.partition("=")
        if not eq:
            raise SpecError(f"expected 'key = value', got {line!r}", lineno, path)
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise SpecError("empty key or value", lineno, path)
        sections[current].append((lineno, key, value))
    return sections


def _parse_manifold(entries, path) -> list[str]:
    coords = None
    dim = None
    for lineno, key, value in entries:
        if key == "coords":
            names = [n.strip() for n in value.split(",")]
            for n in names:
                if not re.fullmatch(r"[A-Za-z_]\w*", n):
                    raise SpecError(f"invalid coordinate name {n!r}", lineno, path)
                if n in ("sin", "cos", "exp", "sqrt"):
                    raise SpecError(f"coordinate name {n!r} clashes with a function", lineno, path)
            if len(set(names)) != len(names):
                raise SpecError("duplicate coordinate names", lineno, path)
            coords = names
        elif key == "dim":
            try:
                dim = int(value)
            except ValueError:
                raise SpecError(f"dim must be an integer, got {value!r}", lineno, path) from None
        else:
            raise SpecError(f"unknown [manifold] key {key!r}", lineno, path)
    if coords is None and dim is None:
        raise SpecError("[manifold] needs 'coords' or 'dim'", None, path)
    if coords is None:
        coords = [f"x{i}" for i in range(dim)]
    if dim is not None and dim != len(coords):
        raise SpecError(f"dim = {dim} but {len(coords)} coordinates declared", None, path)
    if len(coords) < 2:
        raise SpecError("a Galilei chart needs at least 2 coordinates", None, path)
    return coords


def _parse_index(tok: str, coords: list[str], lineno: int, path: str) -> int:
    tok = tok.strip()
    if re.fullmatch(r"\d+", tok):
        k = int(tok)
    elif tok in coords:
        k = coords.index(tok)
    else:
        raise SpecError(f"unknown index {tok!r} (not an integer or declared coordinate)", lineno, path)
    if k >= len(coords):
        raise SpecError(f"index {k} out of range for dim {len(coords)}", lineno, path)
    return k


def _parse_key(key: str, rank: int, coords, lineno, path) -> tuple[int, ...]:
    m = _KEY.match(key)
    if m:
        toks = re.findall(r"\[([^\[\]]+)\]", m.group(2))
    elif rank == 1 and re.fullmatch(r"\w+", key):
        toks = [key]
    else:
        raise SpecError(f"malformed component key {key!r}", lineno, path)
    if len(toks) != rank:
        raise SpecError(f"key {key!r} has {len(toks)} indices, expected {rank}", lineno, path)
    return tuple(_parse_index(t, coords, lineno, path) for t in toks)


def _parse_tensor(section: str, entries, coords, path) -> TensorField:
    sig, mirror, sign = _TENSOR_SECTIONS[section]
    d = len(coords)
    rank = len(sig)
    assigned: dict[tuple[int, ...], tuple[Expr, int]] = {}
    for lineno, key, value in entries:
        idx = _parse_key(key, rank, coords, lineno, path)
        try:
            e = parse_expression(value, d, coords)
        except ParseError as exc:
            raise SpecError(f"in {key}: {exc}", lineno, path) from None
        targets = [(idx, e)]
        if mirror is not None:
            i, j = mirror
            if idx[i] == idx[j] and sign < 0:
                if not is_zero(e):
                    raise SpecError(f"{key}: diagonal of an antisymmetric block must be 0", lineno, path)
            swapped = list(idx)
            swapped[i], swapped[j] = swapped[j], swapped[i]
            swapped = tuple(swapped)
            if swapped != idx:
                targets.append((swapped, e if sign > 0 else mul(-1.0, e)))
        for t, val in targets:
            if t in assigned and assigned[t][0] is not val:
                raise SpecError(f"conflicting assignment for component {list(t)} (first at line {assigned[t][1]})",
                                lineno, path)
            assigned[t] = (val, lineno)
    comps = obj_array((d,) * rank)
    for t, (val, _) in assigned.items():
        comps[t] = val
    return TensorField(d, sig, comps)


def _parse_sampling(entries, path) -> SamplingConfig:
    cfg = SamplingConfig()
    for lineno, key, value in entries:
        try:
            if key == "points":
                cfg.points = int(value)
                if cfg.points < 1:
                    raise ValueError
            elif key == "seed":
                cfg.seed = int(value)
            elif key == "box":
                lo, hi = (float(x) for x in value.replace(",", " ").split())
                if not lo < hi:
                    raise ValueError
                cfg.box = (lo, hi)
            else:
                raise SpecError(f"unknown [sampling] key {key!r}", lineno, path)
        except ValueError as exc:
            if isinstance(exc, SpecError):
                raise
            raise SpecError(f"invalid value for {key}: {value!r}", lineno, path) from None
    return cfg


def parse_spec(text: str, path: str = "<string>") -> ManifoldSpec:
    sections = _split_sections(text, path)
    if "manifold" not in sections:
        raise SpecError("missing [manifold] section", None, path)
    coords = _parse_manifold(sections["manifold"], path)
    d = len(coords)
    for req in ("tau", "h"):
        if req not in sections:
            raise SpecError(f"missing [{req}] section", None, path)
    fields = {name: _parse_tensor(name, entries, coords, path)
              for name, entries in sections.items() if name in _TENSOR_SECTIONS}
    spec = ManifoldSpec(path=path, dim=d, coords=coords, tau=fields["tau"], h=fields["h"])
    spec.observer = fields.get("observer")
    spec.boost = fields.get("boost")
    for name in DATA_BLOCKS:
        if "data." + name in fields:
            spec.data[name] = fields["data." + name]
    if "connection" in fields:
        spec.connection = fields["connection"].components
    if "frame" in fields:
        fr = fields["frame"].components
        spec.frame = [TensorField(d, "U", fr[A]) for A in range(d)]
    if "sampling" in sections:
        spec.sampling = _parse_sampling(sections["sampling"], path)
    return spec


def load_spec(path) -> ManifoldSpec:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError(f"cannot read spec file: {exc.strerror}", None, str(path)) from None
    return parse_spec(text, str(path))


__all__ = ["SpecError", "SamplingConfig", "ManifoldSpec", "DATA_BLOCKS", "parse_spec", "load_spec"]
