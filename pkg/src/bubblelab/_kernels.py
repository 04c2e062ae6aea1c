"""Compiled inner loops for LPPLS calibration.

All routines work in window-local time ``t = 0 .. n-1`` with the critical
time given as ``tc`` on the same axis. Costs are ``inf`` for degenerate
(singular) linear systems or points outside the admissible domain.
"""

import numpy as np
from numba import njit

_PIVOT_TOL = 1e-13


@njit(cache=True)
def _solve4(M, v):
    """Gaussian elimination with partial pivoting on a 4x4 system.

    Works on copies; returns (x, ok). ``ok`` is False when a pivot falls
    below ``_PIVOT_TOL`` relative to the largest diagonal entry.
    """
    a = M.copy()
    b = v.copy()
    scale = 0.0
    for i in range(4):
        if abs(a[i, i]) > scale:
            scale = abs(a[i, i])
    x = np.zeros(4)
    if scale == 0.0 or not np.isfinite(scale):
        return x, False
    for c in range(4):
        p = c
        for r in range(c + 1, 4):
            if abs(a[r, c]) > abs(a[p, c]):
                p = r
        if abs(a[p, c]) <= _PIVOT_TOL * scale:
            return x, False
        if p != c:
            for j in range(4):
                tmp = a[c, j]
                a[c, j] = a[p, j]
                a[p, j] = tmp
            tmp = b[c]
            b[c] = b[p]
            b[p] = tmp
        for r in range(c + 1, 4):
            fac = a[r, c] / a[c, c]
            for j in range(c, 4):
                a[r, j] -= fac * a[c, j]
            b[r] -= fac * b[c]
    for c in range(3, -1, -1):
        s = b[c]
        for j in range(c + 1, 4):
            s -= a[c, j] * x[j]
        x[c] = s / a[c, c]
    return x, True


@njit(cache=True)
def _basis(t, tc, m, omega, F):
    """Fill F[:, 0..3] with 1, f, g, h. Returns False if tc <= max(t)."""
    n = t.shape[0]
    for i in range(n):
        tau = tc - t[i]
        if not tau > 0.0:
            return False
        lt = np.log(tau)
        f = np.exp(m * lt)
        F[i, 0] = 1.0
        F[i, 1] = f
        F[i, 2] = f * np.cos(omega * lt)
        F[i, 3] = f * np.sin(omega * lt)
    return True


@njit(cache=True)
def _normal_solve(F, y):
    """Least-squares coefficients from column-equilibrated normal equations,
    followed by one step of iterative refinement on the residual."""
    n = F.shape[0]
    M = np.zeros((4, 4))
    v = np.zeros(4)
    for i in range(n):
        for j in range(4):
            fj = F[i, j]
            v[j] += fj * y[i]
            for k in range(j, 4):
                M[j, k] += fj * F[i, k]
    for j in range(4):
        for k in range(j):
            M[j, k] = M[k, j]
    d = np.zeros(4)
    for j in range(4):
        if not M[j, j] > 0.0:
            return np.zeros(4), False
        d[j] = 1.0 / np.sqrt(M[j, j])
    S = np.empty((4, 4))
    for j in range(4):
        for k in range(4):
            S[j, k] = M[j, k] * d[j] * d[k]
    z, ok = _solve4(S, v * d)
    if not ok:
        return np.zeros(4), False
    beta = z * d
    # refinement: solve for the correction using the true residual
    res_v = np.zeros(4)
    for i in range(n):
        r = y[i] - (beta[0] * F[i, 0] + beta[1] * F[i, 1] + beta[2] * F[i, 2] + beta[3] * F[i, 3])
        for j in range(4):
            res_v[j] += F[i, j] * r
    dz, ok = _solve4(S, res_v * d)
    if ok:
        beta = beta + dz * d
    return beta, True


@njit(cache=True)
def _sse(F, y, beta):
    s = 0.0
    for i in range(F.shape[0]):
        r = y[i] - (beta[0] * F[i, 0] + beta[1] * F[i, 1] + beta[2] * F[i, 2] + beta[3] * F[i, 3])
        s += r * r
    return s


@njit(cache=True)
def slave(t, y, tc, m, omega):
    """Return (A, B, C1, C2, sse, ok) for fixed nonlinear parameters."""
    F = np.empty((t.shape[0], 4))
    out = np.zeros(4)
    if not _basis(t, tc, m, omega, F):
        return out, np.inf, False
    beta, ok = _normal_solve(F, y)
    if not ok:
        return out, np.inf, False
    return beta, _sse(F, y, beta), True


@njit(cache=True)
def cost(t, y, tc, m, omega, F):
    if not _basis(t, tc, m, omega, F):
        return np.inf
    beta, ok = _normal_solve(F, y)
    if not ok:
        return np.inf
    return _sse(F, y, beta)


@njit(cache=True)
def grid_costs(t, y, tcs, ms, omegas):
    """Slaved SSE on the full (tc, m, omega) grid.

    Uses the normal-equation identity ``SSE = y'y - beta'X'y`` on centred
    data; exact enough to rank grid points, refined values come from
    ``cost``.
    """
    n = t.shape[0]
    ybar = 0.0
    for i in range(n):
        ybar += y[i]
    ybar /= n
    yc = np.empty(n)
    yy = 0.0
    for i in range(n):
        yc[i] = y[i] - ybar
        yy += yc[i] * yc[i]
    n_tc, n_m, n_w = tcs.shape[0], ms.shape[0], omegas.shape[0]
    out = np.full((n_tc, n_m, n_w), np.inf)
    lt = np.empty(n)
    fm = np.empty((n_m, n))
    cw = np.empty((n_w, n))
    sw = np.empty((n_w, n))
    M = np.empty((4, 4))
    v = np.empty(4)
    for a in range(n_tc):
        tc = tcs[a]
        valid = True
        for i in range(n):
            tau = tc - t[i]
            if not tau > 0.0:
                valid = False
                break
            lt[i] = np.log(tau)
        if not valid:
            continue
        for b in range(n_m):
            for i in range(n):
                fm[b, i] = np.exp(ms[b] * lt[i])
        for c in range(n_w):
            for i in range(n):
                cw[c, i] = np.cos(omegas[c] * lt[i])
                sw[c, i] = np.sin(omegas[c] * lt[i])
        for b in range(n_m):
            for c in range(n_w):
                s1 = s2 = s3 = 0.0
                s11 = s12 = s13 = s22 = s23 = s33 = 0.0
                v1 = v2 = v3 = 0.0
                for i in range(n):
                    f = fm[b, i]
                    g = f * cw[c, i]
                    h = f * sw[c, i]
                    yi = yc[i]
                    s1 += f
                    s2 += g
                    s3 += h
                    s11 += f * f
                    s12 += f * g
                    s13 += f * h
                    s22 += g * g
                    s23 += g * h
                    s33 += h * h
                    v1 += f * yi
                    v2 += g * yi
                    v3 += h * yi
                M[0, 0] = n
                M[0, 1] = M[1, 0] = s1
                M[0, 2] = M[2, 0] = s2
                M[0, 3] = M[3, 0] = s3
                M[1, 1] = s11
                M[1, 2] = M[2, 1] = s12
                M[1, 3] = M[3, 1] = s13
                M[2, 2] = s22
                M[2, 3] = M[3, 2] = s23
                M[3, 3] = s33
                v[0] = 0.0
                v[1] = v1
                v[2] = v2
                v[3] = v3
                ok = True
                d = np.empty(4)
                for j in range(4):
                    if not M[j, j] > 0.0:
                        ok = False
                        break
                    d[j] = 1.0 / np.sqrt(M[j, j])
                if not ok:
                    continue
                S = np.empty((4, 4))
                for j in range(4):
                    for k in range(4):
                        S[j, k] = M[j, k] * d[j] * d[k]
                z, ok = _solve4(S, v * d)
                if not ok:
                    continue
                val = yy
                for j in range(4):
                    val -= z[j] * d[j] * v[j]
                out[a, b, c] = max(val, 0.0)
    return out


@njit(cache=True)
def _bounded_cost(t, y, x, lo, hi, F):
    for j in range(3):
        if not (lo[j] < x[j] < hi[j]):
            return np.inf
    return cost(t, y, x[0], x[1], x[2], F)


@njit(cache=True)
def nelder_mead(t, y, x0, step, lo, hi, maxfev, xatol, fatol):
    """Nelder-Mead on (tc, m, omega) inside the open box (lo, hi).

    Standard coefficients (reflection 1, expansion 2, contraction 0.5,
    shrink 0.5). Points outside the box cost ``inf``. Stops when the
    simplex spread in every coordinate is below ``xatol * step`` and the
    cost spread is below ``fatol * (1 + |f_best|)``, or after ``maxfev``
    evaluations. Returns (x_best, f_best, nfev).
    """
    dim = 3
    F = np.empty((t.shape[0], 4))
    sim = np.empty((dim + 1, dim))
    fs = np.empty(dim + 1)
    sim[0] = x0
    fs[0] = _bounded_cost(t, y, x0, lo, hi, F)
    for j in range(dim):
        p = x0.copy()
        p[j] = x0[j] + step[j]
        if not p[j] < hi[j]:
            p[j] = x0[j] - step[j]
        sim[j + 1] = p
        fs[j + 1] = _bounded_cost(t, y, p, lo, hi, F)
    nfev = dim + 1
    while nfev < maxfev:
        order = np.argsort(fs)
        sim = sim[order]
        fs = fs[order]
        spread_ok = True
        for j in range(dim):
            w = 0.0
            for k in range(1, dim + 1):
                dlt = abs(sim[k, j] - sim[0, j])
                if dlt > w:
                    w = dlt
            if w > xatol * step[j]:
                spread_ok = False
                break
        if spread_ok and np.isfinite(fs[dim]) and fs[dim] - fs[0] <= fatol * (1.0 + abs(fs[0])):
            break
        centroid = np.zeros(dim)
        for k in range(dim):
            centroid += sim[k]
        centroid /= dim
        xr = centroid + (centroid - sim[dim])
        fr = _bounded_cost(t, y, xr, lo, hi, F)
        nfev += 1
        if fr < fs[0]:
            xe = centroid + 2.0 * (centroid - sim[dim])
            fe = _bounded_cost(t, y, xe, lo, hi, F)
            nfev += 1
            if fe < fr:
                sim[dim] = xe
                fs[dim] = fe
            else:
                sim[dim] = xr
                fs[dim] = fr
        elif fr < fs[dim - 1]:
            sim[dim] = xr
            fs[dim] = fr
        else:
            if fr < fs[dim]:
                xc = centroid + 0.5 * (xr - centroid)
            else:
                xc = centroid + 0.5 * (sim[dim] - centroid)
            fc = _bounded_cost(t, y, xc, lo, hi, F)
            nfev += 1
            if fc < min(fr, fs[dim]):
                sim[dim] = xc
                fs[dim] = fc
            else:
                for k in range(1, dim + 1):
                    sim[k] = sim[0] + 0.5 * (sim[k] - sim[0])
                    fs[k] = _bounded_cost(t, y, sim[k], lo, hi, F)
                nfev += dim
    best = 0
    for k in range(1, dim + 1):
        if fs[k] < fs[best]:
            best = k
    return sim[best].copy(), fs[best], nfev
