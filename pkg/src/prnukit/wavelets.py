"""Separable orthogonal wavelet transform used by the residual extractor.

Daubechies 8-tap filters with symmetric boundary extension. Each level
extends its input by filter_length - 1 samples per side and keeps exactly
the downsampled convolution coefficients whose filter support lies fully
inside the extended signal. That set is a few coefficients larger than the
critically-sampled size, which is what makes the inverse transform exact on
the original sample positions: every basis function overlapping them is
retained, and no partially-supported (tapered) coefficient ever enters the
reconstruction.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

# Daubechies 8-tap scaling filter (4 vanishing moments), refined by spectral
# factorization to machine-precision orthonormality.
LOWPASS = np.array(
    [
        -0.010597401785069013,
        0.032883011666885155,
        0.03084138183556072,
        -0.18703481171909253,
        -0.02798376941685889,
        0.6308807679298593,
        0.7148465705529155,
        0.23037781330889637,
    ]
)
# Quadrature-mirror highpass: g[m] = (-1)^m h[L-1-m].
HIGHPASS = LOWPASS[::-1] * np.where(np.arange(8) % 2 == 0, 1.0, -1.0)

_LEN = len(LOWPASS)  # 8
_PAD = _LEN - 1  # 7
_FIRST = _LEN  # first even index with full filter support


def _analyze(ext: np.ndarray, axis: int):
    """Filter an extended signal along ``axis``, keeping fully-supported
    even-indexed coefficients.

    Coefficient c[j] = sum_t f[t] ext[j - t] for even j in [_FIRST, m - 1]
    equals the window ext[j-7 .. j] dotted with the reversed filter.
    """
    m = ext.shape[axis]
    win = sliding_window_view(ext, _LEN, axis=axis)
    if axis == 1:
        win = win[:, 1 : m - _LEN + 1 : 2, :]
    else:
        win = win[1 : m - _LEN + 1 : 2, :, :]
    return win @ LOWPASS[::-1], win @ HIGHPASS[::-1]


def _upsample(coeff: np.ndarray, axis: int, m: int) -> np.ndarray:
    shape = list(coeff.shape)
    shape[axis] = m + _LEN - 1
    up = np.zeros(shape)
    idx = [slice(None), slice(None)]
    idx[axis] = slice(_FIRST, _FIRST + 2 * coeff.shape[axis], 2)
    up[tuple(idx)] = coeff
    return up


def _synthesize(lo: np.ndarray, hi: np.ndarray, axis: int, m: int) -> np.ndarray:
    """Invert one analysis step along ``axis``.

    ``m`` is the extended length that stage analyzed. The result is exact on
    the fully-supported interior [_PAD, m - _PAD - 1]; the caller crops.
    """
    up_lo = _upsample(lo, axis, m)
    up_hi = _upsample(hi, axis, m)
    # rec[L-1+t] = sum_j up[j] f_rev[L-1+t-j] = window up[t .. t+L-1] . f
    rec = sliding_window_view(up_lo, _LEN, axis=axis) @ LOWPASS
    rec += sliding_window_view(up_hi, _LEN, axis=axis) @ HIGHPASS
    return rec


def decompose(plane: np.ndarray, levels: int):
    """Multi-level 2-D decomposition.

    Returns ``(approx, details, shapes)`` where ``details`` holds one
    (lh, hl, hh) triple per level (finest first) and ``shapes`` records each
    level's input shape for reconstruction.
    """
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    cur = np.asarray(plane, dtype=np.float64)
    details = []
    shapes = []
    for _ in range(levels):
        shapes.append(cur.shape)
        ext = np.pad(cur, _PAD, mode="symmetric")
        row_lo, row_hi = _analyze(ext, axis=1)
        ll, hl = _analyze(row_lo, axis=0)
        lh, hh = _analyze(row_hi, axis=0)
        details.append((lh, hl, hh))
        cur = ll
    return cur, details, shapes


def reconstruct(approx: np.ndarray, details, shapes) -> np.ndarray:
    """Invert :func:`decompose` exactly (up to float rounding)."""
    cur = approx
    for (lh, hl, hh), (h, w) in zip(reversed(details), reversed(shapes)):
        mh, mw = h + 2 * _PAD, w + 2 * _PAD
        row_lo = _synthesize(cur, hl, axis=0, m=mh)
        row_hi = _synthesize(lh, hh, axis=0, m=mh)
        ext = _synthesize(row_lo, row_hi, axis=1, m=mw)
        cur = ext[_PAD : _PAD + h, _PAD : _PAD + w]
    return cur
