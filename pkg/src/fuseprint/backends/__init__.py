"""Backend selection for the hot kernels.

Two interchangeable implementations exist: a jitted one (numba) and a pure
numpy one.  The active backend is chosen once at import from the
FUSEPRINT_BACKEND environment variable ("numba" or "numpy"; unset picks numba
when importable, else numpy).  This is strictly a performance switch: results
do not depend on it, and toolkit configuration never comes from the
environment.  Tests and benchmarks can flip at runtime via
:func:`select_backend`.
"""

from __future__ import annotations

import os
from typing import Dict

from . import _numpy_impl

_IMPLS: Dict[str, object] = {"numpy": _numpy_impl}

try:
    from . import _numba_impl

    _IMPLS["numba"] = _numba_impl
except ImportError:  # pragma: no cover - exercised only without numba
    _numba_impl = None

_env = os.environ.get("FUSEPRINT_BACKEND", "").strip().lower()
if _env == "":
    _active = "numba" if "numba" in _IMPLS else "numpy"
elif _env in _IMPLS:
    _active = _env
else:
    raise ValueError(
        f"FUSEPRINT_BACKEND={_env!r} is not available; "
        f"choose one of {sorted(_IMPLS)}"
    )


def active_backend() -> str:
    return _active


def available_backends() -> tuple:
    return tuple(sorted(_IMPLS))


def select_backend(name: str) -> str:
    """Switch the active backend; returns the previously active name."""
    global _active
    if name not in _IMPLS:
        raise ValueError(f"unknown backend {name!r}; choose one of {sorted(_IMPLS)}")
    prev = _active
    _active = name
    return prev


def point_candidates(db_xy, db_th, db_desc, q_xy, q_th, q_desc, r0, th0, k0):
    return _IMPLS[_active].point_candidates(
        db_xy, db_th, db_desc, q_xy, q_th, q_desc, r0, th0, k0
    )


def triangle_candidates(fa, fb, d_alpha, d_len, d_theta, d_ratio):
    return _IMPLS[_active].triangle_candidates(
        fa, fb, d_alpha, d_len, d_theta, d_ratio
    )


def gabor_responses(img, cxs, cys, kernels):
    return _IMPLS[_active].gabor_responses(img, cxs, cys, kernels)


def farthest_point_init(pts, k, first):
    return _IMPLS[_active].farthest_point_init(pts, k, first)


def kmeans_lloyd(pts, init_idx, max_iter):
    return _IMPLS[_active].kmeans_lloyd(pts, init_idx, max_iter)


def delaunay_core(pts):
    return _IMPLS[_active].delaunay_core(pts)


def warmup() -> None:
    """Run every kernel once on tiny inputs (pays any JIT cost up front)."""
    import numpy as np

    xy = np.array([[0.0, 0.0], [5.0, 5.0], [1.0, 4.0], [4.0, 1.0]])
    th = np.array([10.0, 20.0, 30.0, 40.0])
    desc = np.zeros((4, 128))
    point_candidates(xy, th, desc, xy, th, desc, 4.0, 3.0, 6.0)
    feats = np.array([[30.0, 60.0, 10.0, 1.0, 2.0, 3.0, 0.5, 0.8]])
    triangle_candidates(feats, feats, 3.0, 6.0, 3.0, 0.05)
    img = np.zeros((9, 9))
    kern = np.zeros((2, 3, 3))
    gabor_responses(img, np.array([4], np.int64), np.array([4], np.int64), kern)
    pts3 = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [9.0, 9.0, 0.0]])
    init = farthest_point_init(pts3, 2, 0)
    kmeans_lloyd(pts3, init, 100)
    delaunay_core(xy)
