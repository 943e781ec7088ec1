"""Vectorized double-double complex linear algebra.

Determinants of I - lambda*M are O(1) while the discretized kernels grow
like e^{c t}; at t ~ 20 plain doubles lose the answer in the LU.  This
module provides ~106-bit (double-double) complex arithmetic on numpy
arrays, enough for a pivoted LU determinant.  Error-free transforms are
the classical two_sum / Dekker two_prod (splitter 2^27 + 1); no FMA is
assumed.

A complex double-double matrix is carried as four float64 arrays
(re_hi, re_lo, im_hi, im_lo).
"""

from __future__ import annotations

import numpy as np

_SPLITTER = 134217729.0  # 2^27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _quick_two_sum(a, b):
    # requires |a| >= |b|
    s = a + b
    err = b - (s - a)
    return s, err


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    lo = a - hi
    return hi, lo


def _two_prod(a, b):
    p = a * b
    ahi, alo = _split(a)
    bhi, blo = _split(b)
    err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, err


def dd_add(ah, al, bh, bl):
    s, e = _two_sum(ah, bh)
    e = e + (al + bl)
    return _quick_two_sum(s, e)


def dd_sub(ah, al, bh, bl):
    return dd_add(ah, al, -bh, -bl)


def dd_mul(ah, al, bh, bl):
    p, e = _two_prod(ah, bh)
    e = e + (ah * bl + al * bh)
    return _quick_two_sum(p, e)


def dd_div(ah, al, bh, bl):
    q1 = ah / bh
    # r = a - b*q1
    th, tl = dd_mul(bh, bl, q1, np.zeros_like(q1) if isinstance(q1, np.ndarray) else 0.0)
    rh, rl = dd_sub(ah, al, th, tl)
    q2 = rh / bh
    th, tl = dd_mul(bh, bl, q2, np.zeros_like(q2) if isinstance(q2, np.ndarray) else 0.0)
    rh, rl = dd_sub(rh, rl, th, tl)
    q3 = rh / bh
    qh, ql = _quick_two_sum(q1, q2)
    return dd_add(qh, ql, q3, np.zeros_like(q3) if isinstance(q3, np.ndarray) else 0.0)


class CDD:
    """Complex double-double array: four parallel float64 ndarrays."""

    __slots__ = ("rh", "rl", "ih", "il")

    def __init__(self, rh, rl=None, ih=None, il=None):
        rh = np.asarray(rh, dtype=np.float64)
        self.rh = rh
        self.rl = np.zeros_like(rh) if rl is None else np.asarray(rl, np.float64)
        self.ih = np.zeros_like(rh) if ih is None else np.asarray(ih, np.float64)
        self.il = np.zeros_like(rh) if il is None else np.asarray(il, np.float64)

    @classmethod
    def from_complex(cls, z, zlo=None):
        """Promote complex128 (optionally with a complex128 tail) to CDD."""
        z = np.asarray(z, dtype=np.complex128)
        if zlo is None:
            zlo = np.zeros_like(z)
        else:
            zlo = np.asarray(zlo, dtype=np.complex128)
        return cls(z.real.copy(), zlo.real.copy(), z.imag.copy(), zlo.imag.copy())

    def to_complex(self):
        return (self.rh + self.rl) + 1j * (self.ih + self.il)

    @property
    def shape(self):
        return self.rh.shape

    def copy(self):
        return CDD(self.rh.copy(), self.rl.copy(), self.ih.copy(), self.il.copy())

    def __getitem__(self, idx):
        return CDD(self.rh[idx], self.rl[idx], self.ih[idx], self.il[idx])

    def __setitem__(self, idx, val):
        self.rh[idx] = val.rh
        self.rl[idx] = val.rl
        self.ih[idx] = val.ih
        self.il[idx] = val.il

    def approx_abs(self):
        """Cheap magnitude proxy for pivot selection."""
        return np.abs(self.rh) + np.abs(self.ih)


def cdd_add(a: CDD, b: CDD) -> CDD:
    rh, rl = dd_add(a.rh, a.rl, b.rh, b.rl)
    ih, il = dd_add(a.ih, a.il, b.ih, b.il)
    return CDD(rh, rl, ih, il)


def cdd_sub(a: CDD, b: CDD) -> CDD:
    rh, rl = dd_sub(a.rh, a.rl, b.rh, b.rl)
    ih, il = dd_sub(a.ih, a.il, b.ih, b.il)
    return CDD(rh, rl, ih, il)


def cdd_mul(a: CDD, b: CDD) -> CDD:
    # (ar + i ai)(br + i bi)
    p1h, p1l = dd_mul(a.rh, a.rl, b.rh, b.rl)
    p2h, p2l = dd_mul(a.ih, a.il, b.ih, b.il)
    p3h, p3l = dd_mul(a.rh, a.rl, b.ih, b.il)
    p4h, p4l = dd_mul(a.ih, a.il, b.rh, b.rl)
    rh, rl = dd_sub(p1h, p1l, p2h, p2l)
    ih, il = dd_add(p3h, p3l, p4h, p4l)
    return CDD(rh, rl, ih, il)


def cdd_div(a: CDD, b: CDD) -> CDD:
    # a * conj(b) / |b|^2
    d1h, d1l = dd_mul(b.rh, b.rl, b.rh, b.rl)
    d2h, d2l = dd_mul(b.ih, b.il, b.ih, b.il)
    dh, dl = dd_add(d1h, d1l, d2h, d2l)
    conj_b = CDD(b.rh, b.rl, -b.ih, -b.il)
    num = cdd_mul(a, conj_b)
    rh, rl = dd_div(num.rh, num.rl, dh, dl)
    ih, il = dd_div(num.ih, num.il, dh, dl)
    return CDD(rh, rl, ih, il)


def cdd_det_lu(a: CDD):
    """Determinant of a square CDD matrix by pivoted LU, in place on a copy.

    Returns (det: CDD scalar, min_pivot_over_scale: float).  The second
    value lets callers flag near-singular systems.
    """
    a = a.copy()
    n = a.shape[0]
    sign = 1
    det = CDD(np.array(1.0), np.array(0.0), np.array(0.0), np.array(0.0))
    scale = float(np.max(a.approx_abs())) or 1.0
    min_piv = np.inf
    for k in range(n):
        col_mag = a.approx_abs()[k:, k]
        piv = int(np.argmax(col_mag)) + k
        if piv != k:
            for arr in (a.rh, a.rl, a.ih, a.il):
                arr[[k, piv], :] = arr[[piv, k], :]
            sign = -sign
        pivot = a[k, k]
        pmag = float(np.abs(pivot.rh) + np.abs(pivot.ih))
        min_piv = min(min_piv, pmag / scale)
        det = cdd_mul(det, pivot)
        if k + 1 < n:
            if pmag == 0.0:
                return CDD(np.array(0.0)), 0.0
            mult = cdd_div(a[k + 1:, k], _bcast(pivot, n - k - 1))
            a[k + 1:, k] = mult
            # rank-1 update of the trailing block
            row = a[k, k + 1:]
            upd = cdd_mul(_outer_left(mult), _outer_right(row))
            a[k + 1:, k + 1:] = cdd_sub(a[k + 1:, k + 1:], upd)
    if sign < 0:
        det = CDD(-det.rh, -det.rl, -det.ih, -det.il)
    return det, min_piv


def _bcast(scalar: CDD, n: int) -> CDD:
    return CDD(
        np.broadcast_to(scalar.rh, (n,)).copy(),
        np.broadcast_to(scalar.rl, (n,)).copy(),
        np.broadcast_to(scalar.ih, (n,)).copy(),
        np.broadcast_to(scalar.il, (n,)).copy(),
    )


def _outer_left(col: CDD) -> CDD:
    return CDD(col.rh[:, None], col.rl[:, None], col.ih[:, None], col.il[:, None])


def _outer_right(row: CDD) -> CDD:
    return CDD(row.rh[None, :], row.rl[None, :], row.ih[None, :], row.il[None, :])
