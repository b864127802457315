"""Hot-loop backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
pure-Python twins in ``_kernels_py`` are used. Set ``TEXTGUARD_PURE_PYTHON=1``
to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("TEXTGUARD_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"

pegasos_dense = _impl.pegasos_dense
pegasos_sparse = _impl.pegasos_sparse
