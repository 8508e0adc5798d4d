"""Backend selection for the hot element-assembly kernels.

The compiled extension is used when importable; otherwise the pure-numpy
twin takes over.  ``get_backend`` exposes both for benchmarking.
"""

from __future__ import annotations

from . import _kernels_py

try:
    from . import _kernels as _impl
except ImportError:  # pragma: no cover - depends on build environment
    _impl = _kernels_py

BACKEND = _impl.BACKEND
thermal_element_matrices = _impl.thermal_element_matrices
mechanical_element_matrices = _impl.mechanical_element_matrices


def get_backend(name: str):
    """Return the kernel module for ``name`` in {'python', 'cython'}."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _impl.BACKEND != "cython":
            raise RuntimeError("compiled kernel extension is not available")
        return _impl
    raise ValueError(f"unknown backend {name!r}")


def available_backends():
    backends = ["python"]
    if _impl.BACKEND == "cython":
        backends.append("cython")
    return backends
