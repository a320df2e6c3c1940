"""Compiled inner loops of the staggered solver.

Layout: ``rho`` holds N cell values, ``u`` holds N+1 node values with the
wall nodes 0 and N pinned to zero.  Scalar parameters travel in two arrays:

    fp = [h, L, a, gamma, beta, rho_bar, nu, cfl, guard, dt_max, alpha, g_value]
    ip = [N, K, g_kind, max_halvings]

``coef[j, k] = f_{k+1} * sin((k+1) pi x_j / L)`` at node j, and
``sqcoef[j] = sum_k coef[j, k]**2``.
"""
import numpy as np
from numba import njit

from .rng import fill_normals

ACCEPTED = 0
REJECTED = 1
NONFINITE = 2
STIFF = 3

TERMS = ("continuity", "convection", "pressure", "force", "noise", "viscous")

N_ACC = 4  # dissipation, force work, Ito correction, martingale
# try_step also reports the stable dt of its output state in slot N_ACC
STACK = 64


@njit(cache=True)
def _p(r, a, g, b, rb):
    return a * r**g * (rb - r) ** (-b)


@njit(cache=True)
def _dp(r, a, g, b, rb):
    gap = rb - r
    if r <= 0.0:
        return a * g * r ** (g - 1.0) * gap ** (-b)
    return _p(r, a, g, b, rb) * (g / r + b / gap)


@njit(cache=True)
def stable_dt(rho, u, fp, ip):
    h = fp[0]
    a, g, b, rb = fp[2], fp[3], fp[4], fp[5]
    n = ip[0]
    best = np.inf
    for i in range(n):
        c = np.sqrt(_dp(rho[i], a, g, b, rb))
        vel = max(abs(u[i]), abs(u[i + 1]))
        lim = h / (vel + c)
        if lim < best:
            best = lim
    return _limit_dt(best, fp)


@njit(cache=True)
def _limit_dt(acoustic, fp):
    h, nu, cfl, dt_max = fp[0], fp[6], fp[7], fp[9]
    dt = cfl * acoustic
    if nu > 0.0:
        dt = min(dt, h * h / (4.0 * nu))
    return min(dt, dt_max)


@njit(cache=True)
def _first_nonfinite(x):
    for i in range(x.shape[0]):
        if not np.isfinite(x[i]):
            return i
    return -1


@njit(cache=True)
def try_step(rho, u, dt, dW, fp, ip, coef, sqcoef, rho_out, u_out, acc_inc):
    """One operator-split step.  Returns (status, index, term)."""
    h = fp[0]
    a, g, b, rb = fp[2], fp[3], fp[4], fp[5]
    nu, guard, alpha = fp[6], fp[8], fp[10]
    g_value = fp[11]
    n, K, g_kind = ip[0], ip[1], ip[2]
    lam = dt / h

    # (i) continuity, first-order upwind mass fluxes at the nodes.  The
    # transport velocity carries an explicit pressure predictor so the mass
    # flux sees (to first order) the velocity the pressure work acts on.
    F = np.zeros(n + 1)
    p = np.empty(n)
    for i in range(n):
        p[i] = _p(rho[i], a, g, b, rb)
    for j in range(1, n):
        w = u[j] - lam * (p[j] - p[j - 1]) / (0.5 * (rho[j - 1] + rho[j]))
        if w >= 0.0:
            F[j] = rho[j - 1] * w
        else:
            F[j] = rho[j] * w
    for i in range(n):
        rho_out[i] = rho[i] - lam * (F[i + 1] - F[i])
    bad = _first_nonfinite(rho_out)
    if bad >= 0:
        return NONFINITE, bad, 0
    for i in range(n):
        if rho_out[i] <= 0.0 or rho_out[i] >= rb - guard:
            return REJECTED, i, 0

    # (ii) momentum on the dual mesh
    m_old = np.zeros(n + 1)
    m_new = np.zeros(n + 1)
    for j in range(1, n):
        m_old[j] = 0.5 * (rho[j - 1] + rho[j])
        m_new[j] = 0.5 * (rho_out[j - 1] + rho_out[j])
    C = np.empty(n)
    for i in range(n):
        G = 0.5 * (F[i] + F[i + 1])
        C[i] = G * (u[i] if G >= 0.0 else u[i + 1])
    v = np.zeros(n + 1)
    for j in range(1, n):
        v[j] = (m_old[j] * u[j] - lam * (C[j] - C[j - 1])) / m_new[j]
    bad = _first_nonfinite(v)
    if bad >= 0:
        return NONFINITE, bad, 1

    for i in range(n):
        p[i] = _p(rho_out[i], a, g, b, rb)
    for j in range(1, n):
        v[j] -= lam * (p[j] - p[j - 1]) / m_new[j]
    bad = _first_nonfinite(v)
    if bad >= 0:
        return NONFINITE, bad, 2

    work = 0.0
    if g_kind != 0:
        for j in range(1, n):
            if g_kind == 1:
                gj = g_value
            else:
                vj = v[j]
                gj = -g_value * vj * (1.0 + vj * vj) ** (0.5 * (alpha - 1.0))
            work += m_new[j] * gj * (v[j] + 0.5 * dt * gj) * h * dt
            v[j] += dt * gj
        bad = _first_nonfinite(v)
        if bad >= 0:
            return NONFINITE, bad, 3

    ito = 0.0
    mart = 0.0
    if K > 0:
        for j in range(1, n):
            vj = v[j]
            s = vj * (1.0 + vj * vj) ** (0.5 * (alpha - 1.0))
            inc = 0.0
            for k in range(K):
                inc += coef[j, k] * dW[k]
            inc *= s
            ito += 0.5 * dt * m_new[j] * s * s * sqcoef[j] * h
            mart += m_new[j] * vj * inc * h
            v[j] = vj + inc
        bad = _first_nonfinite(v)
        if bad >= 0:
            return NONFINITE, bad, 4

    # implicit viscosity: m (u - v) = dt nu D_xx u, u = 0 at the walls
    r = dt * nu / (h * h)
    u_out[0] = 0.0
    u_out[n] = 0.0
    if n > 1:
        cp = np.empty(n + 1)
        dp = np.empty(n + 1)
        j = 1
        diag = m_new[j] + 2.0 * r
        cp[j] = -r / diag
        dp[j] = m_new[j] * v[j] / diag
        for j in range(2, n):
            diag = m_new[j] + 2.0 * r + r * cp[j - 1]
            cp[j] = -r / diag
            dp[j] = (m_new[j] * v[j] + r * dp[j - 1]) / diag
        u_out[n - 1] = dp[n - 1]
        for j in range(n - 2, 0, -1):
            u_out[j] = dp[j] - cp[j] * u_out[j + 1]
    bad = _first_nonfinite(u_out)
    if bad >= 0:
        return NONFINITE, bad, 5

    diss = 0.0
    best = np.inf
    for i in range(n):
        du = (u_out[i + 1] - u_out[i]) / h
        diss += du * du
        # sound speed from the pressure already evaluated at rho_out
        c = np.sqrt(p[i] * (g / rho_out[i] + b / (rb - rho_out[i])))
        lim = h / (max(abs(u_out[i]), abs(u_out[i + 1])) + c)
        if lim < best:
            best = lim
    acc_inc[4] = _limit_dt(best, fp)
    acc_inc[0] = nu * diss * h * dt
    acc_inc[1] = work
    acc_inc[2] = ito
    acc_inc[3] = mart
    return ACCEPTED, -1, -1


@njit(cache=True)
def advance(rho, u, t, t_target, state, W, acc, counters, fp, ip, coef):
    """Step from t to exactly t_target.  Returns (status, t, index, term).

    Rejected or CFL-violating steps are split in two with a Brownian-bridge
    midpoint so the sampled noise path is refined rather than redrawn.
    """
    n, K, max_halv = ip[0], ip[1], ip[3]
    sqcoef = np.zeros(n + 1)
    for j in range(n + 1):
        for k in range(K):
            sqcoef[j] += coef[j, k] * coef[j, k]
    st_end = np.empty(STACK)
    st_level = np.empty(STACK, dtype=np.int64)
    st_dW = np.empty((STACK, K))
    z = np.empty(K)
    rho_out = np.empty(n)
    u_out = np.empty(n + 1)
    inc = np.empty(N_ACC + 1)
    dts = stable_dt(rho, u, fp, ip)
    depth = 0
    while True:
        if depth == 0:
            if t >= t_target:
                break
            rem = t_target - t
            if dts >= rem * (1.0 - 1e-12):
                t_end = t_target
            else:
                t_end = t + dts
            dt = t_end - t
            fill_normals(state, z)
            st_end[0] = t_end
            st_level[0] = 0
            sq = np.sqrt(dt)
            for k in range(K):
                st_dW[0, k] = sq * z[k]
            depth = 1
        depth -= 1
        t_end = st_end[depth]
        level = st_level[depth]
        dt = t_end - t
        split = False
        if 0 < level < max_halv and dt > dts * (1.0 + 1e-9):
            split = True
        else:
            status, idx, term = try_step(
                rho, u, dt, st_dW[depth], fp, ip, coef, sqcoef, rho_out, u_out, inc
            )
            if status == ACCEPTED:
                for i in range(n):
                    rho[i] = rho_out[i]
                for j in range(n + 1):
                    u[j] = u_out[j]
                for k in range(K):
                    W[k] += st_dW[depth, k]
                for m in range(N_ACC):
                    acc[m] += inc[m]
                dts = inc[N_ACC]
                t = t_end
                counters[0] += 1
            elif status == REJECTED:
                counters[1] += 1
                if level >= max_halv:
                    return STIFF, t, idx, term
                split = True
            else:
                return NONFINITE, t, idx, term
        if split:
            if depth + 2 > STACK:
                return STIFF, t, -1, -1
            mid = t + 0.5 * dt
            fill_normals(state, z)
            half = 0.5 * np.sqrt(dt)
            # second half goes below the first on the stack
            st_end[depth] = t_end
            st_level[depth] = level + 1
            for k in range(K):
                dw1 = 0.5 * st_dW[depth, k] + half * z[k]
                st_dW[depth + 1, k] = dw1
                st_dW[depth, k] = st_dW[depth, k] - dw1
            st_end[depth + 1] = mid
            st_level[depth + 1] = level + 1
            depth += 2
    return ACCEPTED, t, -1, -1
