"""Backend selection for the Lindblad integrator.

The compiled extension is used when it imports; otherwise, or when the
environment sets ``TWMBATTERY_BACKEND=python``, the numpy implementation is
used. Both expose ``evolve(rho0, Heff, jumps, t, rtol, atol, max_steps)``.
"""
from __future__ import annotations

import os

from . import _lindblad_py

python_evolve = _lindblad_py.evolve

try:
    from ._lindblad_ext import evolve as compiled_evolve
except ImportError:  # extension not built
    compiled_evolve = None

if compiled_evolve is not None and os.environ.get("TWMBATTERY_BACKEND", "").lower() != "python":
    BACKEND = "compiled"
    evolve = compiled_evolve
else:
    BACKEND = "python"
    evolve = python_evolve

__all__ = ["BACKEND", "evolve", "python_evolve", "compiled_evolve"]
