"""Compiled path kernels.

Every path owns a SplitMix64 stream keyed by ``(seed, stream, path index)``,
so a path's randomness does not depend on which thread simulates it.  Batch
kernels write one slot per path; reductions happen afterwards in index order.

Model parameters travel as a float64 vector
``[drift, gaussian_var, jump_rate, kind, p1, p2, p3, p4]`` with ``kind``
0 (no jumps), 1 Exponential(mean=p1, sign=p2), 2 TwoPointMass(x_neg=p1,
p_neg=p2, x_pos=p3, p_pos=p4), 3 ShiftedExponential(mean=p1, sign=p2, loc=p3).
"""
import math

import numpy as np
import numba
from numba import njit, prange

numba.config.THREADING_LAYER = "workqueue"

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO53 = 1.0 / 9007199254740992.0

# 8-point Gauss-Legendre on (0, 1)
_x8, _w8 = np.polynomial.legendre.leggauss(8)
GL8_X = 0.5 * (_x8 + 1.0)
GL8_W = 0.5 * _w8

EXP_CUTOFF = 40.0  # bridge events with probability below exp(-40) are ignored


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def path_state(seed, stream, index):
    """Initial generator state for one path."""
    k = _mix64(np.uint64(stream) * _GOLDEN + np.uint64(index))
    return _mix64(np.uint64(seed) ^ k)


@njit(cache=True, inline="always")
def _unif(s):
    s = s + _GOLDEN
    z = _mix64(s)
    return s, (np.float64(z >> _S11) + 0.5) * _TWO53


@njit(cache=True, inline="always")
def _normal(s):
    s, u1 = _unif(s)
    s, u2 = _unif(s)
    return s, math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@njit(cache=True, inline="always")
def _expo(s):
    s, u = _unif(s)
    return s, -math.log(u)


@njit(cache=True)
def _poisson(s, mu):
    if mu <= 0.0:
        return s, 0
    if mu < 30.0:
        s, u = _unif(s)
        k = 0
        p = math.exp(-mu)
        f = p
        while u > f and k < 10000:
            k += 1
            p *= mu / k
            f += p
        return s, k
    k = 0
    acc = 0.0
    while True:
        s, e = _expo(s)
        acc += e
        if acc > mu:
            return s, k
        k += 1


@njit(cache=True)
def _jump(s, P):
    kind = int(P[3])
    if kind == 1:
        s, e = _expo(s)
        return s, P[5] * P[4] * e
    if kind == 2:
        s, u = _unif(s)
        return s, P[4] if u < P[5] else P[6]
    s, e = _expo(s)
    return s, P[6] + P[5] * P[4] * e


@njit(cache=True)
def _inv_gauss(s, m, lam):
    """Inverse Gaussian with mean m and shape lam (Michael, Schucany and Haas)."""
    s, z = _normal(s)
    nu = z * z
    y = m + m * m * nu / (2.0 * lam) - (m / (2.0 * lam)) * math.sqrt(4.0 * m * lam * nu + m * m * nu * nu)
    s, u = _unif(s)
    if u <= m / (m + y):
        return s, y
    return s, m * m / y


@njit(cache=True)
def _bm_passage(s, d, mu, s2):
    """First time drift-mu, variance-s2 Brownian motion rises by d >= 0 (inf if never)."""
    if d <= 0.0:
        return s, 0.0
    if mu > 0.0:
        return _inv_gauss(s, d / mu, d * d / s2)
    if mu == 0.0:
        s, z = _normal(s)
        return s, d * d / (s2 * z * z)
    s, u = _unif(s)
    if u < math.exp(2.0 * mu * d / s2):
        return _inv_gauss(s, d / (-mu), d * d / s2)
    return s, np.inf


@njit(cache=True)
def _endpoint_below(s, x, r, mu, s2, dt):
    """Position at time dt given the path started at x < r stayed below r."""
    sd = math.sqrt(s2 * dt)
    for _ in range(10000000):
        s, z = _normal(s)
        y = x + mu * dt + sd * z
        if y < r:
            s, u = _unif(s)
            if u > math.exp(-2.0 * (r - x) * (r - y) / (s2 * dt)):
                return s, y
    return s, r - 1e-12


@njit(cache=True, inline="always")
def _phi(z):
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


@njit(cache=True)
def _occupation(x, y, r, s2, h):
    """E[time spent <= r during a step | Brownian bridge from x to y over h]."""
    acc = 0.0
    for i in range(8):
        u = GL8_X[i]
        m = x + (y - x) * u
        sd = math.sqrt(s2 * h * u * (1.0 - u))
        acc += GL8_W[i] * _phi((r - m) / sd)
    return acc * h


# ---------------------------------------------------------------------------
# first passage, exact and event driven
# ---------------------------------------------------------------------------

@njit(cache=True)
def _passage_path(s, r, P, horizon):
    mu, s2, lam = P[0], P[1], P[2]
    x = 0.0
    t = 0.0
    if x > r or (s2 > 0.0 and x >= r):
        return s, 0.0, 0.0, True
    while True:
        if lam > 0.0:
            s, e = _expo(s)
            e /= lam
        else:
            e = np.inf
        last = False
        if t + e >= horizon:
            e = horizon - t
            last = True
        d = r - x
        if s2 > 0.0:
            s, tau = _bm_passage(s, d, mu, s2)
            if tau <= e:
                return s, t + tau, r, True
            s, x = _endpoint_below(s, x, r, mu, s2, e)
        else:
            if mu > 0.0 and d / mu <= e:
                return s, t + d / mu, r, True
            x += mu * e
        t += e
        if last:
            return s, t, x, False
        s, j = _jump(s, P)
        x += j
        if x > r:
            return s, t, x, True


@njit(cache=True, parallel=True)
def batch_passage(seed, stream, n, r, P, horizon):
    T = np.empty(n)
    XT = np.empty(n)
    hit = np.zeros(n, dtype=np.uint8)
    for i in prange(n):
        s = path_state(seed, stream, i)
        s, t, x, ok = _passage_path(s, r, P, horizon)
        T[i] = t
        XT[i] = x
        hit[i] = 1 if ok else 0
    return T, XT, hit


# ---------------------------------------------------------------------------
# stable subordinator
# ---------------------------------------------------------------------------

@njit(cache=True)
def _stable(s, alpha):
    """S >= 0 with E exp(-theta S) = exp(-theta^alpha) (Kanter's representation)."""
    s, u = _unif(s)
    u *= math.pi
    s, e = _expo(s)
    a = math.sin(alpha * u) / math.sin(u) ** (1.0 / alpha)
    b = (math.sin((1.0 - alpha) * u) / e) ** ((1.0 - alpha) / alpha)
    return s, a * b


@njit(cache=True, parallel=True)
def batch_stable(seed, stream, n, alpha):
    out = np.empty(n)
    for i in prange(n):
        s = path_state(seed, stream, i)
        s, v = _stable(s, alpha)
        out[i] = v
    return out


@njit(cache=True, parallel=True)
def batch_stable_passage(seed, stream, n, r, alpha):
    """T_r = (r / S)^alpha exactly, by self-similarity."""
    out = np.empty(n)
    for i in prange(n):
        if r < 0.0:
            out[i] = 0.0
            continue
        s = path_state(seed, stream, i)
        s, v = _stable(s, alpha)
        out[i] = (r / v) ** alpha
    return out


# ---------------------------------------------------------------------------
# increments
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def batch_increments(seed, stream, n, t, P):
    out = np.empty(n)
    for i in prange(n):
        s = path_state(seed, stream, i)
        x = P[0] * t
        if P[1] > 0.0:
            s, z = _normal(s)
            x += math.sqrt(P[1] * t) * z
        s, k = _poisson(s, P[2] * t)
        for _ in range(k):
            s, j = _jump(s, P)
            x += j
        out[i] = x
    return out


# ---------------------------------------------------------------------------
# sojourn time and last exit time
# ---------------------------------------------------------------------------

@njit(cache=True)
def _stop_rule(d, t, rho, a, th, cj, which, d_star):
    """N rule: d >= d_star.  rho rule: theta_j d - a (t - rho) >= cj[j] for some j."""
    if which == 0:
        return d >= d_star
    if d < d_star:
        return False
    lag = a * (t - rho)
    for j in range(th.shape[0]):
        if th[j] * d - lag >= cj[j]:
            return True
    return False


@njit(cache=True)
def _kappas(d, a, th, dl):
    kn = np.inf
    kr = np.inf
    for j in range(th.shape[0]):
        e = math.exp(-th[j] * d)
        kn = min(kn, a * e / dl[j])
        kr = min(kr, e * (1.0 + a / dl[j]))
    return kn, kr


@njit(cache=True)
def _sojourn_grid_path(s, r, P, h, a, th, dl, log_eps, which, d_star, horizon):
    mu, s2, lam = P[0], P[1], P[2]
    cj = np.log1p(a / dl) - log_eps
    sd = math.sqrt(s2 * h)
    v = s2 * h
    p0 = math.exp(-lam * h)
    x = 0.0
    t = 0.0
    N = 0.0
    rho = 0.0
    T = 0.0 if x > r else -1.0
    while True:
        if T < 0.0 and x >= r:
            T = t
        if t >= horizon:
            return s, T, N, rho, t, x, 1
        s, z = _normal(s)
        y = x + mu * h + sd * z
        occ_step = 0.0
        last_off = -1.0
        first_off = -1.0
        if x <= r and y <= r:
            e = 2.0 * (r - x) * (r - y) / v
            occ_step = h
            if e < EXP_CUTOFF:
                pa = math.exp(-e)
                s, u = _unif(s)
                if u < pa:
                    occ = _occupation(x, y, r, s2, h)
                    occ_step = min(h, max(0.0, h - (h - occ) / pa))
                    first_off = 0.5 * occ_step
            last_off = h
        elif x > r and y > r:
            e = 2.0 * (x - r) * (y - r) / v
            if e < EXP_CUTOFF:
                pv = math.exp(-e)
                s, u = _unif(s)
                if u < pv:
                    occ = _occupation(x, y, r, s2, h)
                    occ_step = min(h, occ / pv)
                    frac = (x - r) / ((x - r) + (y - r))
                    last_off = min(h, max(occ_step, frac * h + 0.5 * occ_step))
        elif x <= r:
            occ_step = _occupation(x, y, r, s2, h)
            first_off = occ_step
            last_off = occ_step
        else:
            occ_step = _occupation(x, y, r, s2, h)
            last_off = h
        if lam > 0.0:
            s, u = _unif(s)
            if u >= p0:
                k = 0
                p = p0
                f = p0
                while u > f and k < 10000:
                    k += 1
                    p *= lam * h / k
                    f += p
                for _ in range(k):
                    s, j = _jump(s, P)
                    y += j
        if T < 0.0:
            if first_off >= 0.0:
                T = t + first_off
            elif y > r:
                T = t + h
        N += occ_step
        if y <= r:
            rho = t + h
        elif last_off >= 0.0:
            rho = t + last_off
        t += h
        x = y
        if x > r and _stop_rule(x - r, t, rho, a, th, cj, which, d_star):
            return s, T, N, rho, t, x, 0


@njit(cache=True)
def _sojourn_linear_path(s, r, P, a, th, dl, log_eps, which, d_star, horizon):
    """Exact version for sigma = 0: linear motion between jumps."""
    mu, lam = P[0], P[2]
    cj = np.log1p(a / dl) - log_eps
    x = 0.0
    t = 0.0
    N = 0.0
    rho = 0.0
    T = 0.0 if x > r else -1.0
    while True:
        if t >= horizon:
            return s, T, N, rho, t, x, 1
        if lam > 0.0:
            s, e = _expo(s)
            e /= lam
        else:
            e = 1.0
        if mu == 0.0:
            if x <= r:
                N += e
                rho = t + e
        elif mu > 0.0:
            if x <= r:
                sc = (r - x) / mu
                if sc < e:
                    N += sc
                    rho = t + sc
                    if T < 0.0:
                        T = t + sc
                else:
                    N += e
                    rho = t + e
        else:
            if x > r:
                sc = (x - r) / (-mu)
                if sc < e:
                    N += e - sc
                    rho = t + e
            else:
                N += e
                rho = t + e
        t += e
        x += mu * e
        if lam > 0.0:
            s, j = _jump(s, P)
            x += j
        if x <= r:
            rho = t
        elif T < 0.0:
            T = t
        if x > r and lam > 0.0 and _stop_rule(x - r, t, rho, a, th, cj, which, d_star):
            return s, T, N, rho, t, x, 0
        if x > r and lam == 0.0 and mu > 0.0 and _stop_rule(x - r, t, rho, a, th, cj, which, d_star):
            return s, T, N, rho, t, x, 0


@njit(cache=True, parallel=True)
def batch_sojourn(seed, stream, n, r, P, h, a, th, dl, log_eps, which, d_star, horizon):
    """Per path: T_r, N_r, rho_r, stopping time, kappa_N(d), e^{a t} kappa_rho(d), overflow flag."""
    T = np.empty(n)
    N = np.empty(n)
    R = np.empty(n)
    KN = np.empty(n)
    KR = np.empty(n)
    status = np.zeros(n, dtype=np.uint8)
    for i in prange(n):
        s = path_state(seed, stream, i)
        if P[1] > 0.0:
            s, t_, n_, r_, ts, xs, st = _sojourn_grid_path(s, r, P, h, a, th, dl, log_eps, which, d_star, horizon)
        else:
            s, t_, n_, r_, ts, xs, st = _sojourn_linear_path(s, r, P, a, th, dl, log_eps, which, d_star, horizon)
        T[i] = t_
        N[i] = n_
        R[i] = r_
        status[i] = st
        if st == 0:
            kn, kr = _kappas(xs - r, a, th, dl)
            KN[i] = kn
            KR[i] = math.exp(a * ts) * kr
        else:
            KN[i] = np.inf
            KR[i] = np.inf
    return T, N, R, KN, KR, status


# ---------------------------------------------------------------------------
# overall infimum
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def batch_infimum(seed, stream, n, P, gap, horizon):
    """Running infimum until X - I >= gap; returns I, X at stop and an overflow flag."""
    I = np.empty(n)
    X = np.empty(n)
    status = np.zeros(n, dtype=np.uint8)
    for i in prange(n):
        s = path_state(seed, stream, i)
        mu, s2, lam = P[0], P[1], P[2]
        x = 0.0
        m = 0.0
        t = 0.0
        while True:
            if t >= horizon:
                status[i] = 1
                break
            if lam > 0.0:
                s, e = _expo(s)
                e /= lam
            else:
                e = 1.0
            if s2 > 0.0:
                s, z = _normal(s)
                y = x + mu * e + math.sqrt(s2 * e) * z
                s, u = _unif(s)
                low = 0.5 * (x + y - math.sqrt((y - x) ** 2 - 2.0 * s2 * e * math.log(u)))
                m = min(m, low)
            else:
                y = x + mu * e
                m = min(m, y)
            x = y
            t += e
            if lam > 0.0:
                s, j = _jump(s, P)
                x += j
                m = min(m, x)
            if x - m >= gap:
                break
        I[i] = m
        X[i] = x
    return I, X, status


# ---------------------------------------------------------------------------
# random walks
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def batch_walk(seed, stream, n, r, P, skel, b, th, dbp, log_eps, which, max_steps):
    """Walk with i.i.d. increments: X_1 of the model in P when ``skel``, one jump otherwise.

    Returns per path tau(r), visit count n(r), last visit index rho(r) (-1 if
    none), the certified bias factors for n and rho, and an overflow flag.
    ``dbp[j] = b'_j - b`` where ``b'_j = -log E exp(-th[j] Y)``.
    """
    tau = np.empty(n, dtype=np.int64)
    vis = np.empty(n, dtype=np.int64)
    last = np.empty(n, dtype=np.int64)
    kn_out = np.empty(n)
    kr_out = np.empty(n)
    status = np.zeros(n, dtype=np.uint8)
    c_n = -math.expm1(-b)
    for i in prange(n):
        s = path_state(seed, stream, i)
        x = 0.0
        k = 0
        tv = -1
        nv = 0
        lv = -1
        if x <= r:
            nv = 1
            lv = 0
        else:
            tv = 0
        kn = np.inf
        kr = np.inf
        while True:
            if k >= max_steps:
                status[i] = 1
                break
            if skel:
                x += P[0]
                if P[1] > 0.0:
                    s, z = _normal(s)
                    x += math.sqrt(P[1]) * z
                s, m = _poisson(s, P[2])
                for _ in range(m):
                    s, j = _jump(s, P)
                    x += j
            else:
                s, j = _jump(s, P)
                x += j
            k += 1
            if x <= r:
                nv += 1
                lv = k
            elif tv < 0:
                tv = k
            if x > r and tv >= 0:
                if which == 2:
                    break
                d = x - r
                kn = np.inf
                kr = np.inf
                for q in range(th.shape[0]):
                    e = math.exp(-th[q] * d) / math.expm1(dbp[q])
                    kn = min(kn, c_n * e)
                    kr = min(kr, e)
                if which == 0 and kn <= math.exp(log_eps):
                    break
                if which == 1 and b * (k - lv) + math.log(kr) <= log_eps:
                    break
        tau[i] = tv
        vis[i] = nv
        last[i] = lv
        kn_out[i] = kn
        kr_out[i] = math.exp(b * (k + 1)) * kr if kr < np.inf else np.inf
    return tau, vis, last, kn_out, kr_out, status
