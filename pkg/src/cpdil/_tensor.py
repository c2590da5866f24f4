"""Index bookkeeping for flips acting on tensor-power coordinates."""

from __future__ import annotations

import numpy as np


def flip4(u: np.ndarray, m: int, k: int) -> np.ndarray:
    """Flip tensor ``phi[l, kk, i, j] = u[(i, j), (kk, l)]``.

    ``u`` is the ``mk x mk`` witness with row ``(i, j)`` and column
    ``(kk, l)`` in i-major order, so ``e_i (x) f_j -> sum phi f_l (x) e_kk``.
    """
    u4 = np.asarray(u).reshape(m, k, m, k)
    return np.transpose(u4, (3, 2, 0, 1))


def apply_pair(x: np.ndarray, op4: np.ndarray, axis: int) -> np.ndarray:
    """Contract ``op4[a, b, c, d]`` with axes ``(axis, axis+1)`` of ``x``.

    The two contracted axes ``(c, d)`` are replaced in place by ``(a, b)``.
    """
    y = np.tensordot(op4, x, axes=([2, 3], [axis, axis + 1]))
    return np.moveaxis(y, (0, 1), (axis, axis + 1))


def apply_single(x: np.ndarray, op: np.ndarray, axis: int) -> np.ndarray:
    """Contract a matrix ``op[a, c]`` with axis ``axis`` of ``x``."""
    y = np.tensordot(op, x, axes=([1], [axis]))
    return np.moveaxis(y, 0, axis)


def split_axis(x: np.ndarray, axis: int, shape: tuple[int, ...]) -> np.ndarray:
    new = x.shape[:axis] + tuple(shape) + x.shape[axis + 1 :]
    return x.reshape(new)


def words(alphabet: int, length: int) -> np.ndarray:
    """All words of the given length as rows, lexicographic."""
    if length == 0:
        return np.zeros((1, 0), dtype=int)
    grids = np.indices((alphabet,) * length).reshape(length, -1).T
    return grids
