"""Numba switch for the hot kernels.

Set ``MEDGEOM_DISABLE_NUMBA=1`` to run everything through plain
Python/numpy. Scalar helpers decorated with :func:`njit` then run as
ordinary Python; loop kernels that have a vectorized numpy twin are
dispatched to the twin through :func:`pick`.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAS_NUMBA = numba is not None
DISABLED = os.environ.get("MEDGEOM_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")
USE_NUMBA = HAS_NUMBA and not DISABLED


def njit(func):
    """Compile ``func`` in nopython mode unless numba is disabled or absent."""
    if not USE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def compile_kernel(func):
    """Compile a self-contained loop kernel whenever numba is importable.

    Used for kernels with a separate numpy twin, so both stay callable for
    cross-checks and benchmarks regardless of the env flag.
    """
    if not HAS_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def pick(numba_impl, numpy_impl):
    return numba_impl if USE_NUMBA else numpy_impl
