"""
Batch-stable linear algebra helpers

Sums over the state and noise axes are accumulated in index order with
plain elementwise arithmetic, so the value computed for one path does not
depend on how many other paths share the batch.
"""

from typing import Union

import numpy as np

from ..errors import DomainError

ArrayLike = Union[np.ndarray, float, list, tuple]


def as_state(x: ArrayLike, dim: int) -> np.ndarray:
    """Return ``x`` as a float array whose last axis has length ``dim``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0 and dim == 1:
        arr = arr.reshape(1)
    if arr.ndim == 0 or arr.shape[-1] != dim:
        raise DomainError(f"expected state(s) with last axis {dim}, got shape {arr.shape}")
    return arr


def squared_norm(x: np.ndarray) -> np.ndarray:
    acc = x[..., 0] * x[..., 0]
    for i in range(1, x.shape[-1]):
        acc = acc + x[..., i] * x[..., i]
    return acc


def vector_norm(x: np.ndarray) -> np.ndarray:
    return np.sqrt(squared_norm(x))


def dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    acc = a[..., 0] * b[..., 0]
    for i in range(1, a.shape[-1]):
        acc = acc + a[..., i] * b[..., i]
    return acc


def frobenius_squared(g: np.ndarray) -> np.ndarray:
    """Squared Frobenius norm over the last two axes."""
    d, m = g.shape[-2], g.shape[-1]
    acc = np.zeros(g.shape[:-2])
    for i in range(d):
        for j in range(m):
            acc = acc + g[..., i, j] * g[..., i, j]
    return acc


def apply_noise(g: np.ndarray, db: np.ndarray) -> np.ndarray:
    """Matrix-vector product g·db for (..., d, m) and (..., m)."""
    out = g[..., :, 0] * db[..., None, 0]
    for j in range(1, g.shape[-1]):
        out = out + g[..., :, j] * db[..., None, j]
    return out


def noise_trace(g: np.ndarray, hess: np.ndarray) -> np.ndarray:
    """tr(gᵀ H g) for (..., d, m) diffusion and (..., d, d) hessian."""
    d, m = g.shape[-2], g.shape[-1]
    acc = np.zeros(np.broadcast_shapes(g.shape[:-2], hess.shape[:-2]))
    for j in range(m):
        for a in range(d):
            row = hess[..., a, 0] * g[..., 0, j]
            for b in range(1, d):
                row = row + hess[..., a, b] * g[..., b, j]
            acc = acc + g[..., a, j] * row
    return acc


def gradient_noise_squared(grad: np.ndarray, g: np.ndarray) -> np.ndarray:
    """|∇V g|², the squared norm of the row vector gradᵀ g."""
    d, m = g.shape[-2], g.shape[-1]
    acc = np.zeros(np.broadcast_shapes(grad.shape[:-1], g.shape[:-2]))
    for j in range(m):
        col = grad[..., 0] * g[..., 0, j]
        for a in range(1, d):
            col = col + grad[..., a] * g[..., a, j]
        acc = acc + col * col
    return acc


def scalar_or_array(value: np.ndarray):
    """Collapse 0-d arrays to Python floats for single-state calls."""
    if np.ndim(value) == 0:
        return float(value)
    return value
