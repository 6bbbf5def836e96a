"""Least absolute deviation regression.

Two stages: iteratively reweighted least squares with epsilon-smoothed
weights ``1 / max(|r|, eps)`` as a warm start, then exact descent along
the edges of the L1 polytope (one basis row swapped per step, with a
weighted-median line search) until no edge lowers the objective. The
second stage lands on an interpolating vertex, so the returned fit is an
exact minimizer even when IRLS stalls short of its tolerance.

``lad_solve_numba`` is a self-contained loop kernel; ``lad_solve_numpy``
is the vectorized twin. ``lad_solve`` is whichever the env flag selects.
"""

import numpy as np

from ._accel import compile_kernel, pick

STATUS_OK = 0
STATUS_SINGULAR = 1
STATUS_PIVOT_LIMIT = 2


@compile_kernel
def _gauss_solve(A, B):
    # partial-pivot Gaussian elimination for small dense systems; returns
    # (solution, ok)
    n = A.shape[0]
    m = B.shape[1]
    M = A.copy()
    R = B.copy()
    scale = 0.0
    for i in range(n):
        for j in range(n):
            v = abs(M[i, j])
            if v > scale:
                scale = v
    if scale == 0.0:
        return R, False
    for k in range(n):
        piv = k
        best = abs(M[k, k])
        for i in range(k + 1, n):
            if abs(M[i, k]) > best:
                best = abs(M[i, k])
                piv = i
        if best <= 1e-14 * scale:
            return R, False
        if piv != k:
            for j in range(n):
                tmp = M[k, j]
                M[k, j] = M[piv, j]
                M[piv, j] = tmp
            for j in range(m):
                tmp = R[k, j]
                R[k, j] = R[piv, j]
                R[piv, j] = tmp
        for i in range(k + 1, n):
            f = M[i, k] / M[k, k]
            if f != 0.0:
                for j in range(k, n):
                    M[i, j] -= f * M[k, j]
                for j in range(m):
                    R[i, j] -= f * R[k, j]
    for k in range(n - 1, -1, -1):
        for j in range(m):
            s = R[k, j]
            for i in range(k + 1, n):
                s -= M[k, i] * R[i, j]
            R[k, j] = s / M[k, k]
    return R, True


@compile_kernel
def lad_solve_numba(X, y, eps, max_iter, tol, max_pivots):
    n, p = X.shape
    beta = np.zeros(p)
    rhs = np.zeros((p, 1))
    A = np.zeros((p, p))
    r = np.empty(n)

    # OLS start
    for i in range(n):
        for j in range(p):
            rhs[j, 0] += X[i, j] * y[i]
            for k in range(p):
                A[j, k] += X[i, j] * X[i, k]
    sol, ok = _gauss_solve(A, rhs)
    if not ok:
        return beta, 0, False, 0, STATUS_SINGULAR
    for j in range(p):
        beta[j] = sol[j, 0]

    iters = 0
    converged = False
    for it in range(max_iter):
        iters = it + 1
        A[:, :] = 0.0
        rhs[:, :] = 0.0
        for i in range(n):
            ri = y[i]
            for j in range(p):
                ri -= X[i, j] * beta[j]
            w = 1.0 / max(abs(ri), eps)
            for j in range(p):
                wx = w * X[i, j]
                rhs[j, 0] += wx * y[i]
                for k in range(p):
                    A[j, k] += wx * X[i, k]
        sol, ok = _gauss_solve(A, rhs)
        if not ok:
            break
        change = 0.0
        for j in range(p):
            change = max(change, abs(sol[j, 0] - beta[j]))
            beta[j] = sol[j, 0]
        if change < tol:
            converged = True
            break

    # pick an interpolating basis from the smallest residuals
    for i in range(n):
        s = y[i]
        for j in range(p):
            s -= X[i, j] * beta[j]
        r[i] = s
    order = np.argsort(np.abs(r))
    basis = np.empty(p, dtype=np.int64)
    Q = np.zeros((p, p))
    nb = 0
    for idx in range(n):
        if nb == p:
            break
        i = order[idx]
        v = X[i, :].copy()
        norm0 = 0.0
        for j in range(p):
            norm0 += v[j] * v[j]
        norm0 = np.sqrt(norm0)
        if norm0 == 0.0:
            continue
        for b in range(nb):
            dot = 0.0
            for j in range(p):
                dot += Q[b, j] * v[j]
            for j in range(p):
                v[j] -= dot * Q[b, j]
        nv = 0.0
        for j in range(p):
            nv += v[j] * v[j]
        nv = np.sqrt(nv)
        if nv > 1e-10 * norm0:
            for j in range(p):
                Q[nb, j] = v[j] / nv
            basis[nb] = i
            nb += 1
    if nb < p:
        return beta, iters, converged, 0, STATUS_SINGULAR

    in_basis = np.zeros(n, dtype=np.bool_)
    XB = np.empty((p, p))
    yB = np.empty((p, 1))
    for b in range(p):
        in_basis[basis[b]] = True
        for j in range(p):
            XB[b, j] = X[basis[b], j]
        yB[b, 0] = y[basis[b]]
    sol, ok = _gauss_solve(XB, yB)
    if not ok:
        return beta, iters, converged, 0, STATUS_SINGULAR
    for j in range(p):
        beta[j] = sol[j, 0]

    eye = np.eye(p)
    g = np.empty(n)
    best_g = np.empty(n)
    tk = np.empty(n)
    wk = np.empty(n)
    ik = np.empty(n, dtype=np.int64)
    pivots = 0
    while True:
        for i in range(n):
            s = y[i]
            for j in range(p):
                s -= X[i, j] * beta[j]
            r[i] = 0.0 if in_basis[i] else s
        for b in range(p):
            for j in range(p):
                XB[b, j] = X[basis[b], j]
        Binv, ok = _gauss_solve(XB, eye)
        if not ok:
            return beta, iters, converged, pivots, STATUS_SINGULAR

        best_slope = 0.0
        best_j = -1
        best_dir = 1.0
        for jb in range(p):
            gnorm = 1.0
            s_dir = 0.0
            s_zero = 1.0
            for i in range(n):
                gi = 0.0
                for k in range(p):
                    gi += X[i, k] * Binv[k, jb]
                g[i] = gi
                if not in_basis[i]:
                    gnorm += abs(gi)
                    if r[i] > 0.0:
                        s_dir -= gi
                    elif r[i] < 0.0:
                        s_dir += gi
                    else:
                        s_zero += abs(gi)
            thresh = 1e-11 * gnorm
            s_plus = s_dir + s_zero
            s_minus = -s_dir + s_zero
            if s_plus < -thresh and s_plus < best_slope:
                best_slope = s_plus
                best_j = jb
                best_dir = 1.0
                for i in range(n):
                    best_g[i] = g[i]
            if s_minus < -thresh and s_minus < best_slope:
                best_slope = s_minus
                best_j = jb
                best_dir = -1.0
                for i in range(n):
                    best_g[i] = -g[i]
        if best_j < 0:
            return beta, iters, converged, pivots, STATUS_OK
        if pivots >= max_pivots:
            return beta, iters, converged, pivots, STATUS_PIVOT_LIMIT

        # breakpoints of the piecewise-linear objective along the edge
        m = 0
        for i in range(n):
            if in_basis[i]:
                continue
            gi = best_g[i]
            if gi == 0.0:
                continue
            t = r[i] / gi
            if t > 0.0:
                tk[m] = t
                wk[m] = abs(gi)
                ik[m] = i
                m += 1
        if m == 0:
            return beta, iters, converged, pivots, STATUS_PIVOT_LIMIT
        ordk = np.argsort(tk[:m])
        slope = best_slope
        t_star = tk[ordk[m - 1]]
        enter = ik[ordk[m - 1]]
        for q in range(m):
            kq = ordk[q]
            slope += 2.0 * wk[kq]
            if slope >= 0.0:
                t_star = tk[kq]
                enter = ik[kq]
                break
        for k in range(p):
            beta[k] += best_dir * t_star * Binv[k, best_j]
        in_basis[basis[best_j]] = False
        basis[best_j] = enter
        in_basis[enter] = True
        pivots += 1


def lad_solve_numpy(X, y, eps, max_iter, tol, max_pivots):
    """Vectorized twin of the loop kernel; same return tuple."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    try:
        beta = np.linalg.solve(X.T @ X, X.T @ y)
    except np.linalg.LinAlgError:
        return np.zeros(p), 0, False, 0, STATUS_SINGULAR

    iters = 0
    converged = False
    for it in range(max_iter):
        iters = it + 1
        w = 1.0 / np.maximum(np.abs(y - X @ beta), eps)
        Xw = X.T * w
        try:
            new = np.linalg.solve(Xw @ X, Xw @ y)
        except np.linalg.LinAlgError:
            break
        change = np.max(np.abs(new - beta))
        beta = new
        if change < tol:
            converged = True
            break

    order = np.argsort(np.abs(y - X @ beta), kind="stable")
    basis = []
    Q = np.zeros((0, p))
    for i in order:
        v = X[i].copy()
        norm0 = np.linalg.norm(v)
        if norm0 == 0.0:
            continue
        v -= Q.T @ (Q @ v)
        nv = np.linalg.norm(v)
        if nv > 1e-10 * norm0:
            Q = np.vstack([Q, v / nv])
            basis.append(i)
            if len(basis) == p:
                break
    if len(basis) < p:
        return beta, iters, converged, 0, STATUS_SINGULAR
    basis = np.array(basis)
    try:
        beta = np.linalg.solve(X[basis], y[basis])
    except np.linalg.LinAlgError:
        return beta, iters, converged, 0, STATUS_SINGULAR

    pivots = 0
    while True:
        in_basis = np.zeros(n, dtype=bool)
        in_basis[basis] = True
        r = np.where(in_basis, 0.0, y - X @ beta)
        try:
            Binv = np.linalg.inv(X[basis])
        except np.linalg.LinAlgError:
            return beta, iters, converged, pivots, STATUS_SINGULAR
        G = X @ Binv  # column j: residual sensitivity when basis row j leaves
        nonb = ~in_basis
        sgn = np.sign(r[nonb])
        Gn = G[nonb]
        s_dir = -(Gn * sgn[:, None]).sum(axis=0)
        s_zero = 1.0 + (np.abs(Gn) * (sgn == 0)[:, None]).sum(axis=0)
        thresh = 1e-11 * (1.0 + np.abs(Gn).sum(axis=0))
        s_plus = s_dir + s_zero
        s_minus = -s_dir + s_zero
        slopes = np.concatenate([s_plus, s_minus])
        masked = np.where(slopes < -np.concatenate([thresh, thresh]), slopes, 0.0)
        k = int(np.argmin(masked))
        if masked[k] >= 0.0:
            return beta, iters, converged, pivots, STATUS_OK
        if pivots >= max_pivots:
            return beta, iters, converged, pivots, STATUS_PIVOT_LIMIT
        jb = k % p
        direction = 1.0 if k < p else -1.0
        g = direction * G[:, jb]
        cand = nonb & (g != 0.0)
        idx = np.flatnonzero(cand)
        t = r[idx] / g[idx]
        keep = t > 0.0
        idx, t = idx[keep], t[keep]
        if idx.size == 0:
            return beta, iters, converged, pivots, STATUS_PIVOT_LIMIT
        o = np.argsort(t, kind="stable")
        cum = masked[k] + np.cumsum(2.0 * np.abs(g[idx[o]]))
        hit = np.flatnonzero(cum >= 0.0)
        q = hit[0] if hit.size else o.size - 1
        t_star = t[o[q]]
        beta = beta + direction * t_star * Binv[:, jb]
        basis[jb] = idx[o[q]]
        pivots += 1


lad_solve = pick(lad_solve_numba, lad_solve_numpy)
