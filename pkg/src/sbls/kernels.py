"""Kernel backend selection.

The compiled extension is used when it was built and ``SBLS_PURE_PYTHON``
is unset (or ``0``); otherwise the NumPy implementation is used. Both
return identical results.
"""

import os

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

if _ckernels is not None and os.environ.get("SBLS_PURE_PYTHON", "0") in ("", "0"):
    _impl = _ckernels
    BACKEND = "cython"
else:
    _impl = _pykernels
    BACKEND = "python"


def available_backends():
    return {"python": _pykernels, **({"cython": _ckernels} if _ckernels is not None else {})}


def class_rank_sums(scores, labels, n_classes):
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.intp)
    return _impl.class_rank_sums(scores, labels, n_classes)


def hungarian_max(weights):
    return _impl.hungarian_max(np.ascontiguousarray(weights, dtype=np.float64))


def confusion_counts(true, pred, k):
    return _impl.confusion_counts(np.ascontiguousarray(true, dtype=np.intp),
                                  np.ascontiguousarray(pred, dtype=np.intp), k)
