"""JSON documents for channels, semigroups, sample tables and dilations.

Complex scalars are ``[re, im]`` pairs (plain numbers are accepted on
input) and matrices are row-major nested lists. Floats are written with
``repr``, the shortest string that round-trips exactly.
"""

from __future__ import annotations

import json
import os
from fractions import Fraction
from typing import Any

import numpy as np

from .channel import Channel, from_kraus
from .errors import SchemaError
from .semigroup import CpSemigroup, Generator


def read_json(path: str | os.PathLike) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc


def write_json(path: str | os.PathLike, doc: Any) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def parse_complex(x) -> complex:
    if isinstance(x, bool):
        raise SchemaError("boolean where a number was expected")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    raise SchemaError(f"not a complex scalar: {x!r}")


def parse_matrix(rows, dim: int | None = None) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise SchemaError("matrix must be a nonempty list of rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise SchemaError("ragged matrix")
    out = np.array([[parse_complex(v) for v in r] for r in rows], dtype=complex)
    if dim is not None and out.shape != (dim, dim):
        raise SchemaError(f"expected a {dim}x{dim} matrix, got {out.shape}")
    return out


def encode_matrix(a: np.ndarray) -> list:
    a = np.asarray(a, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.atleast_2d(a)]


def _dim(doc) -> int:
    if not isinstance(doc, dict):
        raise SchemaError("document must be a JSON object")
    n = doc.get("dim")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise SchemaError("'dim' must be a positive integer")
    return n


def channel_from_doc(doc) -> Channel:
    n = _dim(doc)
    if "kraus" in doc:
        ops = doc["kraus"]
        if not isinstance(ops, list) or not ops:
            raise SchemaError("'kraus' must be a nonempty list of matrices")
        return from_kraus([parse_matrix(k, n) for k in ops])
    if "choi" in doc:
        return Channel(parse_matrix(doc["choi"], n * n), n)
    raise SchemaError("channel needs 'kraus' or 'choi'")


def channel_to_doc(ch: Channel, kraus: bool = True) -> dict:
    if kraus:
        return {"dim": ch.dim, "kraus": [encode_matrix(k) for k in ch.kraus.ops]}
    return {"dim": ch.dim, "choi": encode_matrix(ch.choi)}


def semigroup_from_doc(doc) -> CpSemigroup:
    n = _dim(doc)
    if "G" not in doc:
        raise SchemaError("semigroup needs a 'G' matrix")
    jumps = doc.get("jumps", [])
    if not isinstance(jumps, list):
        raise SchemaError("'jumps' must be a list of matrices")
    return CpSemigroup(Generator(parse_matrix(doc["G"], n), tuple(parse_matrix(j, n) for j in jumps)))


def semigroup_to_doc(sg: CpSemigroup) -> dict:
    g = sg.generator
    return {"dim": g.dim, "G": encode_matrix(g.G), "jumps": [encode_matrix(j) for j in g.jumps]}


def load_dynamics(path) -> CpSemigroup | Channel:
    """A semigroup (``G`` key) or a step channel (``kraus``/``choi``)."""
    doc = read_json(path)
    if isinstance(doc, dict) and "G" in doc:
        return semigroup_from_doc(doc)
    return channel_from_doc(doc)


def dynamics_to_doc(x: CpSemigroup | Channel) -> dict:
    return semigroup_to_doc(x) if isinstance(x, CpSemigroup) else channel_to_doc(x)


def dynamics_from_doc(doc) -> CpSemigroup | Channel:
    if isinstance(doc, dict) and "G" in doc:
        return semigroup_from_doc(doc)
    return channel_from_doc(doc)


def table_from_doc(doc) -> dict[Fraction, Channel]:
    n = _dim(doc)
    samples = doc.get("samples")
    if not isinstance(samples, list) or not samples:
        raise SchemaError("'samples' must be a nonempty list")
    table = {}
    for item in samples:
        if not isinstance(item, dict) or not all(k in item for k in ("num", "den", "channel")):
            raise SchemaError("each sample needs 'num', 'den' and 'channel'")
        num, den = item["num"], item["den"]
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (num, den)) or den < 1:
            raise SchemaError("'num' and 'den' must be integers with den >= 1")
        ch_doc = item["channel"]
        if isinstance(ch_doc, dict) and "dim" not in ch_doc:
            ch_doc = {**ch_doc, "dim": n}
        ch = channel_from_doc(ch_doc)
        if ch.dim != n:
            raise SchemaError("sample dimension differs from 'dim'")
        table[Fraction(num, den)] = ch
    return table


def table_to_doc(table: dict[Fraction, Channel]) -> dict:
    n = next(iter(table.values())).dim
    samples = [
        {"num": t.numerator, "den": t.denominator, "channel": channel_to_doc(ch)}
        for t, ch in sorted(table.items())
    ]
    return {"dim": n, "samples": samples}


def dilation_to_doc(ds, r, s, level: int, manifest: dict) -> dict:
    """Self-contained record of a dilation: inputs, coordinates and blocks."""
    return {
        "kind": "dilation",
        "level": level,
        "radius": ds.radius,
        "R": dynamics_to_doc(r),
        "S": dynamics_to_doc(s),
        "dim_K": ds.dim,
        "ranks": list(ds.ranks),
        "rank_tol": ds.rank_tol,
        "embedding": encode_matrix(ds.embedding),
        "coords": encode_matrix(ds.coords),
        "v_e": [encode_matrix(v) for v in ds.v_e],
        "v_f": [encode_matrix(v) for v in ds.v_f],
        "manifest": manifest,
    }


def dilation_from_doc(doc):
    """Rebuild ``(ds, r, s, level, stored_blocks_defect)`` from :func:`dilation_to_doc` output.

    The grid system and kernel are recomputed from the stored inputs; the
    Kolmogorov coordinates are taken from the document.
    """
    from .dilate import DilationSpace, build_kernel
    from .prodsys import make_system

    if not isinstance(doc, dict) or doc.get("kind") != "dilation":
        raise SchemaError("not a dilation document")
    try:
        level, radius = int(doc["level"]), int(doc["radius"])
        r, s = dynamics_from_doc(doc["R"]), dynamics_from_doc(doc["S"])
        coords = parse_matrix(doc["coords"])
        ranks = [int(x) for x in doc["ranks"]]
        rank_tol = float(doc["rank_tol"])
        v_e = np.array([parse_matrix(v) for v in doc["v_e"]])
        v_f = np.array([parse_matrix(v) for v in doc["v_f"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed dilation document: {exc}") from exc
    system = make_system(r, s, level, radius)
    kernel = build_kernel(system, radius)
    if coords.shape != (ranks[-1], kernel.gram.shape[0]) or len(ranks) != radius + 1:
        raise SchemaError("dilation coordinates do not match the rebuilt kernel")
    ds = DilationSpace(kernel, coords, ranks, rank_tol)
    if v_e.shape != ds.v_e.shape or v_f.shape != ds.v_f.shape:
        raise SchemaError("stored translation blocks have the wrong shape")
    stored = max(float(np.max(np.abs(v_e - ds.v_e), initial=0.0)), float(np.max(np.abs(v_f - ds.v_f), initial=0.0)))
    return ds, r, s, level, stored
