"""Backend selection for the fixed-point sweeps.

The compiled ``_kernels`` extension is used when it was built; otherwise the
numpy implementation in ``_kernels_py`` is used.  Setting the environment
variable ``CFNET_KERNELS=python`` forces the fallback.
"""

import os

from . import _kernels_py

FUNCTIONS = ("svt_phi_psihat", "svt_lambda_muhat", "orig_phi_psi", "orig_lambda_mu")

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def available() -> list[str]:
    return ["cython", "python"] if _compiled is not None else ["python"]


def get_backend(name: str | None = None):
    """Module implementing the sweeps: ``"cython"``, ``"python"`` or the default."""
    if name is None:
        name = os.environ.get("CFNET_KERNELS", "").strip().lower() or None
    if name is None:
        return _compiled if _compiled is not None else _kernels_py
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built; "
                              "run `pip install -e . --no-build-isolation`")
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")


backend = get_backend()
BACKEND = "cython" if backend is _compiled and _compiled is not None else "python"
