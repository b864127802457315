"""Pure-Python Pegasos inner loops, used when the compiled extension is absent.

Same arithmetic, in the same order, as ``_kernels.pyx``; dot products are
accumulated left to right so results match the compiled kernels bit for bit.
"""

RESCALE_BELOW = 1e-9


def pegasos_dense(X, y, orders, lam, w):
    n_epochs, n = orders.shape
    d = X.shape[1]
    rows = X.tolist()
    ys = y.tolist()
    v = [0.0] * d
    s = 1.0
    b = 0.0
    t = 0
    for e in range(n_epochs):
        for i in orders[e].tolist():
            t += 1
            eta = 1.0 / (lam * t)
            x = rows[i]
            dot = 0.0
            for j in range(d):
                dot = dot + v[j] * x[j]
            margin = ys[i] * (s * (dot + b))
            factor = 1.0 - eta * lam
            if factor <= 0.0:
                v = [0.0] * d
                b = 0.0
                s = 1.0
            else:
                s = s * factor
            if margin < 1.0:
                coef = eta * ys[i] / s
                for j in range(d):
                    v[j] = v[j] + coef * x[j]
                b = b + coef
            if s < RESCALE_BELOW:
                v = [vj * s for vj in v]
                b = b * s
                s = 1.0
    w[:] = [vj * s for vj in v]
    return b * s


def pegasos_sparse(data, indices, indptr, y, orders, lam, w):
    n_epochs, n = orders.shape
    d = w.shape[0]
    vals = data.tolist()
    cols = indices.tolist()
    ptr = indptr.tolist()
    ys = y.tolist()
    v = [0.0] * d
    s = 1.0
    b = 0.0
    t = 0
    for e in range(n_epochs):
        for i in orders[e].tolist():
            t += 1
            eta = 1.0 / (lam * t)
            lo, hi = ptr[i], ptr[i + 1]
            dot = 0.0
            for p in range(lo, hi):
                dot = dot + v[cols[p]] * vals[p]
            margin = ys[i] * (s * (dot + b))
            factor = 1.0 - eta * lam
            if factor <= 0.0:
                v = [0.0] * d
                b = 0.0
                s = 1.0
            else:
                s = s * factor
            if margin < 1.0:
                coef = eta * ys[i] / s
                for p in range(lo, hi):
                    v[cols[p]] = v[cols[p]] + coef * vals[p]
                b = b + coef
            if s < RESCALE_BELOW:
                v = [vj * s for vj in v]
                b = b * s
                s = 1.0
    w[:] = [vj * s for vj in v]
    return b * s
