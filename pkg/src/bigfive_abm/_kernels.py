"""Compiled inner loop of the team simulation.

Random numbers are never drawn in here. Callers pre-draw, per agent, a block of
uniforms with a fixed slot layout per timestep, one standard normal per
timestep, and a flat array of perception-noise uniforms; the kernel only
consumes them. That keeps the kernel free of RNG state and makes the result
independent of agent evaluation order.

Per-timestep uniform slots (``K = 7 + 2 * ndim``)::

    0..4              trait activation draws (N, E, O, A, C)
    5                 withdrawal vs impulsive coin
    6                 procrastination coin
    7 .. 7+ndim       impulsive acceleration
    7+ndim .. 7+2ndim sloppiness acceleration
"""

import math

import numba as nb
import numpy as np

# indices into the packed constants vector
C_NHIST, C_PNEU, C_PCON, C_VMAX = 0, 1, 2, 3
C_MU_L, C_SIG_L, C_MU_S, C_SIG_S = 4, 5, 6, 7
C_R1, C_R2, C_R3 = 8, 9, 10
C_K_LARGE, C_K_SMALL = 11, 12

SLOT_NEU, SLOT_CON, SLOT_ALARGE = 5, 6, 7

_jit = nb.njit(cache=True, nogil=True)


def n_slots(ndim):
    return 7 + 2 * ndim


def noise_offset(t, ndim):
    """Start of timestep ``t``'s perception uniforms in an agent's flat noise array."""
    return 1 + (t - 1) * t // 2 + (t - 1) * (2 * ndim + 1)


def noise_length(t_max, ndim):
    return noise_offset(t_max + 1, ndim)


@_jit
def objective(p, radius):
    s = 0.0
    for j in range(p.shape[0]):
        s += p[j] * p[j]
    return 1.0 - math.sqrt(s) / radius


@_jit
def perceive(f, eta, u):
    if eta == 0.0:
        return f
    return f * (1.0 + eta * (2.0 * u - 1.0))


@_jit
def clamp(p, lo, hi):
    for j in range(p.shape[0]):
        if p[j] < lo[j]:
            p[j] = lo[j]
        elif p[j] > hi[j]:
            p[j] = hi[j]


@_jit
def triggered(hist, count, n_hist):
    # full window required; a transition is "not improving" when f_s <= f_{s-1}
    if count < n_hist:
        return False
    stalls = 0
    for s in range(1, count):
        if hist[s] <= hist[s - 1]:
            stalls += 1
    return stalls >= n_hist // 2


@_jit
def build_candidates(visited, x, delta, lo, hi):
    t = visited.shape[0]
    d = x.shape[0]
    out = np.empty((t + 2 * d, d))
    for s in range(t):
        for j in range(d):
            out[s, j] = visited[s, j]
    row = t
    for j in range(d):
        for sign in (1.0, -1.0):
            for q in range(d):
                out[row, q] = x[q]
            out[row, j] = x[j] + sign * delta
            row += 1
    for r in range(t, row):
        clamp(out[r], lo, hi)
    return out


@_jit
def top3_accel(cands, fit, x, w1, w2, w3):
    # strict comparisons keep the earliest-constructed candidate on ties
    b0 = -1
    b1 = -1
    b2 = -1
    for c in range(fit.shape[0]):
        f = fit[c]
        if b0 < 0 or f > fit[b0]:
            b2 = b1
            b1 = b0
            b0 = c
        elif b1 < 0 or f > fit[b1]:
            b2 = b1
            b1 = c
        elif b2 < 0 or f > fit[b2]:
            b2 = c
    d = x.shape[0]
    a = np.zeros(d)
    for j in range(d):
        a[j] = (w1 * (cands[b0, j] - x[j]) + w2 * (cands[b1, j] - x[j])
                + w3 * (cands[b2, j] - x[j]))
    return a


@_jit
def nearest(pos, i, k):
    """Indices of the ``k`` agents closest to agent ``i``; ties go to the lower index."""
    n = pos.shape[0]
    if k > n - 1:
        k = n - 1
    dist = np.empty(n)
    for q in range(n):
        s = 0.0
        for j in range(pos.shape[1]):
            diff = pos[q, j] - pos[i, j]
            s += diff * diff
        dist[q] = s
    dist[i] = np.inf
    # argsort kind='mergesort' is stable, so equal distances keep index order
    order = np.argsort(dist, kind="mergesort")
    return order[:k]


@_jit
def social_accel(pos, vel, e_active, i, k, projected):
    d = pos.shape[1]
    nbrs = nearest(pos, i, k)
    centroid = np.zeros(d)
    total = 0.0
    for q in nbrs:
        w = 2.0 if e_active[q] else 1.0
        for j in range(d):
            target = pos[q, j]
            if projected:
                target += 2.0 * vel[q, j]
            centroid[j] += w * target
        total += w
    a = np.empty(d)
    for j in range(d):
        a[j] = centroid[j] / total - pos[i, j]
    return a


@_jit
def agent_update(i, visited, pos, vel, pbest_pos, is_triggered, active,
                 u, z, cand_noise, eta, lo, hi, radius, consts, a_large, a_small):
    """Velocity and acceleration of agent ``i`` for one timestep.

    ``pos``/``vel`` hold every agent's previous-timestep state; ``visited`` is
    agent ``i``'s own position history x_0..x_{t-1}.
    """
    d = pos.shape[1]
    x = pos[i]
    v = np.zeros(d)
    a = np.zeros(d)

    if active[i, 0] and is_triggered:
        if u[SLOT_NEU] < consts[C_PNEU]:
            return v, a
        for j in range(d):
            a[j] = a_large[j] * (2.0 * u[SLOT_ALARGE + j] - 1.0)
            v[j] = a[j]
        return v, a

    if not active[i, 4] and u[SLOT_CON] < consts[C_PCON]:
        return v, a

    acc = np.zeros(d)
    n_vec = 0

    if active[i, 2]:
        delta = consts[C_MU_L] + consts[C_SIG_L] * z
    else:
        delta = consts[C_MU_S] + consts[C_SIG_S] * z
    cands = build_candidates(visited, x, delta, lo, hi)
    fit = np.empty(cands.shape[0])
    for c in range(cands.shape[0]):
        f = objective(cands[c], radius)
        fit[c] = perceive(f, eta, cand_noise[c]) if eta > 0.0 else f
    acc += top3_accel(cands, fit, x, consts[C_R1], consts[C_R2], consts[C_R3])
    n_vec += 1

    e_now = active[:, 1]
    if active[i, 1]:
        k = int(consts[C_K_LARGE])
        acc += social_accel(pos, vel, e_now, i, k, False)
    else:
        k = int(consts[C_K_SMALL])
        for j in range(d):
            acc[j] += pbest_pos[j] - x[j]
    n_vec += 1

    if active[i, 3]:
        acc += social_accel(pos, vel, e_now, i, k, True)
        n_vec += 1

    if not active[i, 4]:
        for j in range(d):
            acc[j] += a_small[j] * (2.0 * u[SLOT_ALARGE + d + j] - 1.0)
        n_vec += 1

    speed = 0.0
    for j in range(d):
        a[j] = acc[j] / n_vec
        v[j] = vel[i, j] + a[j]
        speed += v[j] * v[j]
    speed = math.sqrt(speed)
    vmax = consts[C_VMAX]
    if speed > vmax:
        for j in range(d):
            v[j] *= vmax / speed
    return v, a


@_jit
def simulate(traits, pos0, vel0, uniforms, normals, noise, eta, lo, hi, radius,
             consts, a_large, a_small, t_max):
    n, d = pos0.shape
    n_hist = int(consts[C_NHIST])

    traj = np.empty((t_max + 1, n, d))
    perceived = np.empty((t_max + 1, n))
    gbest_trace = np.empty(t_max + 1)
    vel = vel0.copy()
    hist = np.empty((n, n_hist))
    hist_count = np.zeros(n, dtype=np.int64)
    pbest_val = np.empty(n)
    pbest_pos = np.empty((n, d))

    for i in range(n):
        for j in range(d):
            traj[0, i, j] = pos0[i, j]
            pbest_pos[i, j] = pos0[i, j]
        f = objective(pos0[i], radius)
        pf = perceive(f, eta, noise[i, 0]) if eta > 0.0 else f
        perceived[0, i] = pf
        pbest_val[i] = pf
        hist[i, 0] = pf
        hist_count[i] = 1

    g = 0
    for i in range(1, n):
        if pbest_val[i] > pbest_val[g]:
            g = i
    gbest_val = pbest_val[g]
    gbest_pos = pbest_pos[g].copy()
    gbest_trace[0] = gbest_val

    active = np.empty((n, 5), dtype=np.bool_)
    new_vel = np.empty((n, d))
    for t in range(1, t_max + 1):
        for i in range(n):
            for q in range(5):
                active[i, q] = uniforms[i, t - 1, q] < traits[i, q]
        m = t + 2 * d
        off = 1 + (t - 1) * t // 2 + (t - 1) * (2 * d + 1)
        prev = traj[t - 1]
        for i in range(n):
            trig = triggered(hist[i], hist_count[i], n_hist)
            cand_noise = noise[i, off:off + m] if eta > 0.0 else noise[i, 0:0]
            v, _ = agent_update(i, traj[:t, i, :], prev, vel, pbest_pos[i], trig, active,
                                uniforms[i, t - 1], normals[i, t - 1], cand_noise,
                                eta, lo, hi, radius, consts, a_large, a_small)
            for j in range(d):
                new_vel[i, j] = v[j]
        for i in range(n):
            for j in range(d):
                vel[i, j] = new_vel[i, j]
                traj[t, i, j] = prev[i, j] + vel[i, j]
            clamp(traj[t, i], lo, hi)
            f = objective(traj[t, i], radius)
            pf = perceive(f, eta, noise[i, off + m]) if eta > 0.0 else f
            perceived[t, i] = pf
            c = hist_count[i]
            if c < n_hist:
                hist[i, c] = pf
                hist_count[i] = c + 1
            else:
                for s in range(n_hist - 1):
                    hist[i, s] = hist[i, s + 1]
                hist[i, n_hist - 1] = pf
            if pf > pbest_val[i]:
                pbest_val[i] = pf
                for j in range(d):
                    pbest_pos[i, j] = traj[t, i, j]
        for i in range(n):
            if pbest_val[i] > gbest_val:
                gbest_val = pbest_val[i]
                for j in range(d):
                    gbest_pos[j] = pbest_pos[i, j]
        gbest_trace[t] = gbest_val

    return traj, perceived, gbest_trace, gbest_pos, gbest_val
