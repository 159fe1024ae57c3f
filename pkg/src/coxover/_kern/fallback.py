"""Pure-NumPy implementations of the hot numeric kernels.

Mirrors the surface of the compiled extension ``coxover._kern._native``;
one of the two is selected at import time by ``coxover._kern``.
"""

import numpy as np

_E = np.e
_HALLEY_ROUNDS = 6


def lambert_w0(z):
    """Principal-branch Lambert W on the nonnegative axis, elementwise.

    ``z`` must be a 1-D float64 array with all entries >= 0 and finite.
    Halley iteration, seeded with ``z/(1+z)`` for z <= e and with
    ``log z - log log z`` above; the large-z branch iterates on
    ``w + log w - log z`` so no intermediate ever overflows.
    """
    z = np.asarray(z, dtype=np.float64)
    w = np.zeros_like(z)

    small = (z > 0.0) & (z <= _E)
    if small.any():
        zs = z[small]
        ws = zs / (1.0 + zs)
        for _ in range(_HALLEY_ROUNDS):
            ew = np.exp(ws)
            f = ws * ew - zs
            ws = ws - f / (ew * (ws + 1.0) - (ws + 2.0) * f / (2.0 * ws + 2.0))
        w[small] = ws

    big = z > _E
    if big.any():
        lz = np.log(z[big])
        wb = lz - np.log(lz)
        for _ in range(_HALLEY_ROUNDS):
            h = wb + np.log(wb) - lz
            hp = 1.0 + 1.0 / wb
            wb = wb - h / (hp + h / (2.0 * wb * wb * hp))
        w[big] = wb

    return w


def cox_loglik(eta, extended=False):
    """Cox partial log-likelihood for time-ascending linear predictors.

    Every sample is an event; the risk set of sample ``i`` is the suffix
    ``i..N-1``. Uses a cumulative log-sum-exp over descending time.
    """
    eta = np.asarray(eta, dtype=np.float64)
    if extended:
        ld = np.longdouble
        c = ld(eta.max())
        wexp = np.exp(eta.astype(ld) - c)
        s1 = np.cumsum(wexp[::-1])[::-1]
        ll = np.sum(eta.astype(ld)) - np.sum(np.log(s1) + c)
        return float(ll)
    log_s1 = np.logaddexp.accumulate(eta[::-1])[::-1]
    return float(eta.sum() - log_s1.sum())


def cox_sweep(eta, Z, extended=False):
    """Risk-set sweep: partial log-likelihood, gradient, Hessian, log risk sums.

    Inputs are sorted by ascending event time. Returns
    ``(loglik, grad, hess, log_s1)`` with ``log_s1[i] = log sum_{j>=i} exp(eta_j)``.
    ``extended`` switches to compensated (Neumaier) summation with
    extended-precision exponentials.
    """
    eta = np.asarray(eta, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64)
    if extended:
        return _cox_sweep_extended(eta, Z)

    n = eta.shape[0]
    c = eta.max()
    wexp = np.exp(eta - c)
    s1 = np.cumsum(wexp[::-1])[::-1]
    log_s1 = np.logaddexp.accumulate(eta[::-1])[::-1]
    loglik = float(eta.sum() - log_s1.sum())

    sz = np.cumsum((wexp[:, None] * Z)[::-1], axis=0)[::-1]
    m = sz / s1[:, None]
    grad = Z.sum(axis=0) - m.sum(axis=0)

    # sum_i Szz_i / S1_i  ==  Z^T diag(wexp * crec) Z  with crec the
    # ascending cumulative sum of 1/S1.
    crec = np.cumsum(1.0 / s1)
    hess = -(Z.T @ (Z * (wexp * crec)[:, None]) - m.T @ m)

    return loglik, grad, hess, log_s1


def _neumaier_add(s, comp, x):
    t = s + x
    comp = comp + np.where(np.abs(s) >= np.abs(x), (s - t) + x, (x - t) + s)
    return t, comp


def _cox_sweep_extended(eta, Z):
    ld = np.longdouble
    n, p = Z.shape
    c = ld(eta.max())
    eta_l = eta.astype(ld)
    z_l = Z.astype(ld)
    wexp = np.exp(eta_l - c)

    s1 = ld(0.0)
    c1 = ld(0.0)
    sz = np.zeros(p, dtype=ld)
    cz = np.zeros(p, dtype=ld)
    szz = np.zeros((p, p), dtype=ld)
    czz = np.zeros((p, p), dtype=ld)

    loglik = ld(0.0)
    grad = np.zeros(p, dtype=ld)
    hess = np.zeros((p, p), dtype=ld)
    log_s1 = np.empty(n, dtype=np.float64)

    for i in range(n - 1, -1, -1):
        y = wexp[i]
        s1, c1 = _neumaier_add(s1, c1, y)
        sz, cz = _neumaier_add(sz, cz, y * z_l[i])
        szz, czz = _neumaier_add(szz, czz, y * np.outer(z_l[i], z_l[i]))

        tot1 = s1 + c1
        totz = sz + cz
        totzz = szz + czz
        ls = np.log(tot1) + c
        log_s1[i] = float(ls)
        loglik += eta_l[i] - ls
        m = totz / tot1
        grad += z_l[i] - m
        hess -= totzz / tot1 - np.outer(m, m)

    return (
        float(loglik),
        grad.astype(np.float64),
        hess.astype(np.float64),
        log_s1,
    )
