"""Bit-level kernels for spin-configuration words.

Two interchangeable backends implement the hot loops (site-permutation
action on bit words, orbit minimization over the translation group, and
matrix-element branch generation for the interaction terms):

* ``plaqed.kernels._fast`` -- compiled Cython extension,
* ``plaqed.kernels._pure`` -- vectorized numpy fallback.

The compiled backend is used when importable; set ``PLAQED_PURE_PYTHON=1``
to force the fallback.  ``benchmarks/bench_kernels.py`` compares the two.
"""

import os

# Term kind codes understood by expand_terms.  Sites are packed into a
# fixed-width row of 6; unused slots are ignored.
KIND_ID = 0      # identity (diagonal constant); sites unused
KIND_TRANS = 1   # spin transposition T_ij; sites (i, j)
KIND_HB = 2      # Heisenberg bond S_i.S_j; sites (i, j)
KIND_DP = 3      # bond product (S_i.S_j)(S_k.S_l); sites (i, j, k, l)
KIND_PP = 4      # plaquette projector product; sites (a1, a2, a3, b1, b2, b3)

# Worst-case branches per input configuration, by kind.
BRANCH_MAX = {KIND_ID: 1, KIND_TRANS: 1, KIND_HB: 2, KIND_DP: 4, KIND_PP: 9}


def load_backend(name):
    """Import a kernel backend by name ("cython" or "pure")."""
    if name == "pure":
        from . import _pure
        return _pure
    if name == "cython":
        from . import _fast
        return _fast
    raise ValueError(f"unknown kernel backend {name!r}")


if os.environ.get("PLAQED_PURE_PYTHON"):
    from . import _pure as _impl
    BACKEND = "pure"
else:
    try:
        from . import _fast as _impl
        BACKEND = "cython"
    except ImportError:
        from . import _pure as _impl
        BACKEND = "pure"

translate_configs = _impl.translate_configs
orbit_minimize = _impl.orbit_minimize
expand_terms = _impl.expand_terms
popcount_configs = _impl.popcount_configs
popcount_reps_stream = _impl.popcount_reps_stream


def backend():
    """Name of the active kernel backend."""
    return BACKEND
