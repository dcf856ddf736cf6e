"""Small deterministic numeric helpers shared across modules."""

from __future__ import annotations

import numpy as np


def pairwise_sum(values: np.ndarray) -> float:
    """Sum by balanced pairwise (tree) reduction.

    The reduction order depends only on the array length, so results are
    bit-identical across runs and independent of any worker scheduling.
    """
    a = np.asarray(values, dtype=float).ravel()
    if a.size == 0:
        return 0.0
    while a.size > 1:
        if a.size % 2:
            head, tail = a[:-1], a[-1:]
            a = np.concatenate([head[0::2] + head[1::2], tail])
        else:
            a = a[0::2] + a[1::2]
    return float(a[0])


def window_reduce(values: np.ndarray, width: int, how: str, axis: int = -1) -> np.ndarray:
    """Max or min over consecutive windows of `width`+1 points sharing edges.

    `values` holds n*width + 1 grid points along `axis`; window k covers
    indices [k*width, (k+1)*width] inclusive, so adjacent windows share one
    point.  Returns n reduced values along that axis.
    """
    a = np.moveaxis(np.asarray(values), axis, -1)
    n, rem = divmod(a.shape[-1] - 1, width)
    if rem:
        raise ValueError(f"grid of {a.shape[-1]} points is not n*{width}+1")
    fn = np.maximum if how == "max" else np.minimum
    blocks = a[..., :-1].reshape(*a.shape[:-1], n, width)
    reduced = blocks.max(axis=-1) if how == "max" else blocks.min(axis=-1)
    reduced = fn(reduced, a[..., width::width])
    return np.moveaxis(reduced, -1, axis)
