"""Compiled inner loops.

Every forward kernel accumulates into a zero-initialised ``out`` in the order
``u``, ``v``, ``c`` for each output element, so the fused and reference paths
produce bit-identical sums whatever loop nest is picked for speed. Kernels
allocate nothing, release the GIL, and return the number of multiplications
executed.

Array operands must be C-contiguous. The hot loops index flattened views with
unsigned offsets: numba cannot rule out negative indices on signed ones and
the wraparound branch it inserts blocks vectorisation (worth 2-3x here).
"""

from numba import njit, uint64

# at or above this many output channels the innermost loop runs over channels,
# below it over output columns
WIDE_CHANNELS = 16


@njit(nogil=True, cache=True)
def conv_valid_into(x, k, out, f0, f1, i0, i1):
    kh, kw, cin, cout = k.shape
    ow = out.shape[1]
    xw = x.shape[1]
    xf = x.reshape(-1)
    kf = k.reshape(-1)
    of = out.reshape(-1)
    if f1 - f0 >= WIDE_CHANNELS:
        nf = uint64(f1 - f0)
        for i in range(i0, i1):
            for j in range(ow):
                ob = uint64((i * ow + j) * cout + f0)
                for u in range(kh):
                    for v in range(kw):
                        xb = uint64(((i + u) * xw + j + v) * cin)
                        for c in range(cin):
                            xv = xf[xb + uint64(c)]
                            kb = uint64(((u * kw + v) * cin + c) * cout + f0)
                            for f in range(nf):
                                of[ob + f] += xv * kf[kb + f]
        return (i1 - i0) * ow * kh * kw * cin * (f1 - f0)
    so = uint64(cout)
    sx = uint64(cin)
    n_j = uint64(ow)
    for i in range(i0, i1):
        for u in range(kh):
            for v in range(kw):
                for c in range(cin):
                    xb = uint64(((i + u) * xw + v) * cin + c)
                    for f in range(f0, f1):
                        kv = k[u, v, c, f]
                        ob = uint64(i * ow * cout + f)
                        for j in range(n_j):
                            of[ob + j * so] += xf[xb + j * sx] * kv
    return (i1 - i0) * ow * kh * kw * cin * (f1 - f0)


@njit(nogil=True, cache=True)
def fused_class_into(xp, sk, r, s, off_r, off_c, out, f0, f1, i0, i1):
    """Fill output positions ``(2i + r, 2j + s)`` for block rows ``i0 <= i < i1``."""
    skh, skw, cin, cout = sk.shape
    w = out.shape[1]
    xw = xp.shape[1]
    n_j = (w - s + 1) // 2
    xf = xp.reshape(-1)
    kf = sk.reshape(-1)
    of = out.reshape(-1)
    if f1 - f0 >= WIDE_CHANNELS:
        nf = uint64(f1 - f0)
        for i in range(i0, i1):
            y = 2 * i + r
            for j in range(n_j):
                ob = uint64((y * w + 2 * j + s) * cout + f0)
                for u in range(skh):
                    for v in range(skw):
                        xb = uint64(((i + off_r + u) * xw + j + off_c + v) * cin)
                        for c in range(cin):
                            xv = xf[xb + uint64(c)]
                            kb = uint64(((u * skw + v) * cin + c) * cout + f0)
                            for f in range(nf):
                                of[ob + f] += xv * kf[kb + f]
        return (i1 - i0) * n_j * skh * skw * cin * (f1 - f0)
    so = uint64(2 * cout)
    sx = uint64(cin)
    nj = uint64(n_j)
    for i in range(i0, i1):
        y = 2 * i + r
        for u in range(skh):
            for v in range(skw):
                for c in range(cin):
                    xb = uint64(((i + off_r + u) * xw + off_c + v) * cin + c)
                    for f in range(f0, f1):
                        kv = sk[u, v, c, f]
                        ob = uint64((y * w + s) * cout + f)
                        for j in range(nj):
                            of[ob + j * so] += xf[xb + j * sx] * kv
    return (i1 - i0) * n_j * skh * skw * cin * (f1 - f0)


@njit(nogil=True, cache=True)
def fused_tile_into(xp, s00, s01, s10, s11, offsets, out, f0, f1, i0, i1):
    """All four parity classes over block rows ``[i0, i1)``, clamped per class.

    ``offsets[n]`` is the input offset pair of class ``n`` in ``(0,0), (0,1),
    (1,0), (1,1)`` order; empty sub-kernels are skipped.
    """
    out_h = out.shape[0]
    mults = 0
    for n in range(4):
        if n == 0:
            sk = s00
        elif n == 1:
            sk = s01
        elif n == 2:
            sk = s10
        else:
            sk = s11
        r = n // 2
        s = n % 2
        hi = min(i1, (out_h - r + 1) // 2)
        if i0 < hi and sk.size > 0:
            mults += fused_class_into(xp, sk, r, s, offsets[n, 0], offsets[n, 1], out, f0, f1, i0, hi)
    return mults


@njit(nogil=True, cache=True)
def patches_into(x, kh, kw, off_r, off_c, n_i, n_j, cols):
    """im2col: ``cols[i*n_j + j]`` is the ``kh x kw x cin`` window at ``(i+off_r, j+off_c)``."""
    cin = x.shape[2]
    xw = x.shape[1]
    xf = x.reshape(-1)
    pf = cols.reshape(-1)
    run = uint64(kw * cin)
    q = uint64(0)
    for i in range(n_i):
        for j in range(n_j):
            for u in range(kh):
                src = uint64(((i + off_r + u) * xw + j + off_c) * cin)
                for t in range(run):
                    pf[q + t] = xf[src + t]
                q += run


@njit(nogil=True, cache=True)
def class_operands(xp, g, r, s, skh, skw, off_r, off_c, cols, plane):
    """Patches and gradient rows of one parity class, ready for ``cols.T @ plane``.

    ``plane[i*n_j + j] = g[2i + r, 2j + s]`` and ``cols`` holds the matching
    ``skh x skw`` windows of the padded input.
    """
    gw = g.shape[1]
    cout = g.shape[2]
    n_i = (g.shape[0] - r + 1) // 2
    n_j = (gw - s + 1) // 2
    patches_into(xp, skh, skw, off_r, off_c, n_i, n_j, cols)
    gf = g.reshape(-1)
    pf = plane.reshape(-1)
    uc = uint64(cout)
    q = uint64(0)
    for i in range(n_i):
        for j in range(n_j):
            src = uint64(((2 * i + r) * gw + 2 * j + s) * cout)
            for f in range(uc):
                pf[q + f] = gf[src + f]
            q += uc


@njit(nogil=True, cache=True)
def conv_valid_input_grad(k, g, gx):
    """Scatter ``g`` back through a valid convolution: ``gx[i+u, j+v, c] += g[i, j, f] k[u, v, c, f]``."""
    kh, kw, cin, cout = k.shape
    oh, ow = g.shape[0], g.shape[1]
    for i in range(oh):
        for j in range(ow):
            for u in range(kh):
                for v in range(kw):
                    for c in range(cin):
                        acc = 0.0
                        for f in range(cout):
                            acc += g[i, j, f] * k[u, v, c, f]
                        gx[i + u, j + v, c] += acc


@njit(nogil=True, cache=True)
def fused_class_input_grad(sk, r, s, off_r, off_c, g, gxp):
    skh, skw, cin, cout = sk.shape
    n_i = (g.shape[0] - r + 1) // 2
    n_j = (g.shape[1] - s + 1) // 2
    for i in range(n_i):
        y = 2 * i + r
        for j in range(n_j):
            x = 2 * j + s
            for u in range(skh):
                for v in range(skw):
                    for c in range(cin):
                        acc = 0.0
                        for f in range(cout):
                            acc += g[y, x, f] * sk[u, v, c, f]
                        gxp[i + off_r + u, j + off_c + v, c] += acc


@njit(nogil=True, cache=True)
def maxpool2_ceil(x, out, argmax):
    """2x2 stride-2 max pool; windows hanging off the edge use the cells that exist.

    ``argmax`` receives the flat ``(row * w + col) * ch + c`` index of the first
    maximum in row-major window order.
    """
    h, w, ch = x.shape
    oh, ow = out.shape[0], out.shape[1]
    xf = x.reshape(-1)
    of = out.reshape(-1)
    af = argmax.reshape(-1)
    uch = uint64(ch)
    q = uint64(0)
    for oi in range(oh):
        i0 = 2 * oi
        i1 = min(i0 + 1, h - 1)
        for oj in range(ow):
            j0 = 2 * oj
            j1 = min(j0 + 1, w - 1)
            # edge windows point the missing cells at existing ones; a repeat never wins a tie
            p00 = uint64((i0 * w + j0) * ch)
            p01 = uint64((i0 * w + j1) * ch)
            p10 = uint64((i1 * w + j0) * ch)
            p11 = uint64((i1 * w + j1) * ch)
            for c in range(uch):
                best = xf[p00 + c]
                at = p00 + c
                v = xf[p01 + c]
                if v > best:
                    best = v
                    at = p01 + c
                v = xf[p10 + c]
                if v > best:
                    best = v
                    at = p10 + c
                v = xf[p11 + c]
                if v > best:
                    best = v
                    at = p11 + c
                of[q + c] = best
                af[q + c] = at
            q += uch


@njit(nogil=True, cache=True)
def maxpool2_backward(g, argmax, gx):
    gf = g.reshape(-1)
    af = argmax.reshape(-1)
    xf = gx.reshape(-1)
    for q in range(uint64(gf.shape[0])):
        xf[uint64(af[q])] += gf[q]


@njit(nogil=True, cache=True)
def relu_forward(x, out, mask):
    xf = x.reshape(-1)
    of = out.reshape(-1)
    mf = mask.reshape(-1)
    for q in range(uint64(xf.shape[0])):
        v = xf[q]
        pos = v > 0
        mf[q] = pos
        of[q] = v if pos else 0.0


@njit(nogil=True, cache=True)
def relu_backward(g, mask, out):
    gf = g.reshape(-1)
    mf = mask.reshape(-1)
    of = out.reshape(-1)
    for q in range(uint64(gf.shape[0])):
        of[q] = gf[q] if mf[q] else 0.0


@njit(nogil=True, cache=True, fastmath={"reassoc", "nsz"})
def dense_forward(x, weight, bias, out):
    """``out = weight @ x + bias`` with ``weight`` stored ``(n_out, n_in)``."""
    m, n = weight.shape
    for f in range(m):
        row = weight[f]
        acc = 0.0
        for i in range(n):
            acc += row[i] * x[i]
        out[f] = bias[f] + acc


@njit(nogil=True, cache=True)
def dense_backward(x, weight, g, grad_w, grad_b, grad_x):
    """``grad_w += outer(g, x)``, ``grad_b += g``, ``grad_x = weight.T @ g`` in one sweep."""
    m, n = weight.shape
    for i in range(n):
        grad_x[i] = 0.0
    for f in range(m):
        gv = g[f]
        grad_b[f] += gv
        wrow = weight[f]
        grow = grad_w[f]
        for i in range(n):
            grow[i] += gv * x[i]
            grad_x[i] += gv * wrow[i]


@njit(nogil=True, cache=True)
def sgd_update(param, grad, step):
    pf = param.reshape(-1)
    gf = grad.reshape(-1)
    for q in range(uint64(pf.shape[0])):
        pf[q] -= step * gf[q]
