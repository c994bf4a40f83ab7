"""Pure numpy implementations of the hot kernels.

Used when the compiled ``_kernels`` extension is unavailable, or when
``MFELAB_PURE_PYTHON=1`` is set.  Signatures and results match the Cython
module exactly (up to floating point summation order).
"""
import numpy as np
from scipy import ndimage


def eval_sh(A, B, pts, a_rec, b_rec, diag, dcoef, m0coef, want_grad):
    """Evaluate a real spherical-harmonic expansion at unit vectors.

    ``A[k, m]`` multiplies ``Pbar_km cos(m phi)`` and ``B[k, m]`` multiplies
    ``Pbar_km sin(m phi)``.  Returns ``(values, grads)``; ``grads`` is None
    unless ``want_grad``.
    """
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    L = A.shape[0] - 1
    x1, x2, t = pts[:, 0], pts[:, 1], pts[:, 2]
    s = np.hypot(x1, x2)
    pole = s == 0.0
    safe = np.where(pole, 1.0, s)
    cphi = np.where(pole, 1.0, x1 / safe)
    sphi = np.where(pole, 0.0, x2 / safe)

    n = pts.shape[0]
    val = np.zeros(n)
    fth = np.zeros(n)
    fph = np.zeros(n)

    # m = 0 column: values only; its theta-derivative needs the m = 1 column.
    p_prev2 = np.ones(n)
    val += A[0, 0] * p_prev2
    if L >= 1:
        p_prev1 = np.sqrt(3.0) * t
        val += A[1, 0] * p_prev1
        for k in range(2, L + 1):
            p = a_rec[k, 0] * t * p_prev1 - b_rec[k, 0] * p_prev2
            val += A[k, 0] * p
            p_prev2, p_prev1 = p_prev1, p

    cm = np.ones(n)
    sm = np.zeros(n)
    spow = np.ones(n)  # s**(m-1)
    for m in range(1, L + 1):
        cm, sm = cm * cphi - sm * sphi, sm * cphi + cm * sphi
        if m > 1:
            spow = spow * s
        r_mm = diag[m] * spow
        r_prev2 = np.zeros(n)
        r_prev1 = r_mm
        for k in range(m, L + 1):
            if k == m:
                r = r_mm
            elif k == m + 1:
                r = np.sqrt(2.0 * m + 3.0) * t * r_mm
            else:
                r = a_rec[k, m] * t * r_prev1 - b_rec[k, m] * r_prev2
            ak, bk = A[k, m], B[k, m]
            trig = ak * cm + bk * sm
            val += s * r * trig
            if want_grad:
                rkm1 = r_prev1 if k > m else 0.0
                dth = k * t * r - dcoef[k, m] * rkm1
                fth += dth * trig
                fph += m * r * (bk * cm - ak * sm)
                if m == 1:
                    fth += A[k, 0] * (-m0coef[k] * s * r)
            if k > m:
                r_prev2 = r_prev1
            r_prev1 = r

    if not want_grad:
        return val, None
    grads = np.empty((n, 3))
    grads[:, 0] = fth * t * cphi - fph * sphi
    grads[:, 1] = fth * t * sphi + fph * cphi
    grads[:, 2] = -fth * s
    return val, grads


def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def label_sphere_grid(sign):
    """Label 4-connected components of equal nonzero sign on a (theta, phi) grid.

    Longitude wraps around; each polar ring is linked to itself across the
    pole (node ``i`` to node ``i + n_phi/2``).  Returns ``(labels, count)``
    with labels in ``1..count`` (0 marks unlabelled nodes), numbered in
    row-major order of first appearance.
    """
    sign = np.asarray(sign, dtype=np.int8)
    n_theta, n_phi = sign.shape
    raw = np.zeros(sign.shape, dtype=np.int64)
    offset = 0
    for sgn in (1, -1):
        lab, cnt = ndimage.label(sign == sgn)
        raw[lab > 0] = lab[lab > 0] + offset
        offset += cnt
    parent = list(range(offset + 1))

    def union(a, b):
        if a and b:
            ra, rb = _find(parent, a), _find(parent, b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

    for j in range(n_theta):
        if sign[j, 0] != 0 and sign[j, 0] == sign[j, -1]:
            union(raw[j, 0], raw[j, -1])
    half = n_phi // 2
    for j in (0, n_theta - 1):
        for i in range(half):
            i2 = i + half
            if sign[j, i] != 0 and sign[j, i] == sign[j, i2]:
                union(raw[j, i], raw[j, i2])

    root_of = np.array([_find(parent, i) for i in range(offset + 1)])
    roots = root_of[raw]
    uniq, first = np.unique(roots.ravel(), return_index=True)
    keep = uniq != 0
    uniq, first = uniq[keep], first[keep]
    order = uniq[np.argsort(first)]
    lut = np.zeros(offset + 1, dtype=np.int32)
    lut[order] = np.arange(1, order.size + 1, dtype=np.int32)
    return lut[roots], int(order.size)
