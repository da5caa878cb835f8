"""Selects the compiled kernel core, falling back to pure Python.

Set ``UPS_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pycore

NATIVE = False
_native = None
if not os.environ.get("UPS_PURE_PYTHON"):
    try:
        from . import _core as _native

        NATIVE = True
    except ImportError:  # extension not built
        _native = None


def implementation(native: bool | None = None):
    """Return the kernel module: compiled if available (or requested)."""
    if native is None:
        native = NATIVE
    if native:
        if _native is None:
            raise ImportError("the compiled core ups._core is not available")
        return _native
    return _pycore


def pg_draw(c, rng):
    return implementation().pg_draw(c, rng)


def rwmh_run(target, x0, y0, chol, reflect, m, max_iterations, rng, native=None):
    impl = implementation(native)
    if target.kind < 0:
        impl = _pycore
    return impl.rwmh_run(target, x0, y0, chol, reflect, m, max_iterations, rng)


def pgg_run(design, scales, lin_term, prior_prec, x0, y0, m, max_iterations, rng, native=None):
    return implementation(native).pgg_run(
        design, scales, lin_term, prior_prec, x0, y0, m, max_iterations, rng
    )
