"""Pick the compiled kernels when available, else the pure-Python ones.

``OCRALIGN_PURE=1`` forces the fallback for the whole package; ``compiled``
is still importable on its own for parity tests and the benchmark.
"""
import os

from . import _fallback as fallback

try:
    from . import _kernels as compiled
except ImportError:
    compiled = None

if compiled is not None and not os.environ.get("OCRALIGN_PURE"):
    kernels = compiled
    NAME = "compiled"
else:
    kernels = fallback
    NAME = "python"
