# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; a loop-for-loop mirror of ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, atan2, floor, M_PI
from scipy.linalg.cython_blas cimport dgemv, dger, dscal, daxpy

cnp.import_array()

BACKEND = "cython"

cdef enum:
    N_ORDER_ATTACK = 8
    N_SCRIPT_CLOSEST = 9
    N_SCRIPT_WEAKEST = 10
    N_ATTACK_MOVE = 16

ORDER_NONE = -1
ORDER_ATTACK_MOVE = 16
ORDER_ATTACK = N_ORDER_ATTACK
ORDER_SCRIPT_CLOSEST = N_SCRIPT_CLOSEST
ORDER_SCRIPT_WEAKEST = N_SCRIPT_WEAKEST
RULE_WEAKEST = 0
RULE_CLOSEST = 1

cdef double _D = sqrt(0.5)
cdef double[8] _MOVE_DX
cdef double[8] _MOVE_DY
cdef int[8] _SECTOR_TO_ACTION
cdef int[8] _ACTION_TO_SECTOR
_MOVE_DX[:] = [0.0, 0.0, -1.0, 1.0, -_D, _D, -_D, _D]
_MOVE_DY[:] = [1.0, -1.0, 0.0, 0.0, _D, _D, -_D, -_D]
_SECTOR_TO_ACTION[:] = [3, 5, 0, 4, 2, 6, 1, 7]
_ACTION_TO_SECTOR[:] = [2, 6, 4, 0, 3, 1, 5, 7]

MOVE_DX = tuple(_MOVE_DX[i] for i in range(8))
MOVE_DY = tuple(_MOVE_DY[i] for i in range(8))
SECTOR_TO_ACTION = (3, 5, 0, 4, 2, 6, 1, 7)

cdef double _PI_8 = M_PI / 8.0
cdef double _PI_4 = M_PI / 4.0


cdef inline int _sector(double dx, double dy) nogil:
    cdef int k
    if dx == 0.0 and dy == 0.0:
        return 0
    k = <int>floor((atan2(dy, dx) + _PI_8) / _PI_4)
    return ((k % 8) + 8) % 8


def sector_of(double dx, double dy):
    return _sector(dx, dy)


cdef int _select_target(Py_ssize_t i, int rule, double[:, ::1] pos,
                        long[::1] hp, unsigned char[::1] alive,
                        signed char[::1] side, double[::1] fire_range) nogil:
    cdef Py_ssize_t j, n = hp.shape[0]
    cdef int best = -1
    cdef long best_hp = 0
    cdef double best_d = 0.0, dx, dy, d
    cdef double xi = pos[i, 0], yi = pos[i, 1], rng = fire_range[i]
    for j in range(n):
        if not alive[j] or side[j] == side[i]:
            continue
        dx = pos[j, 0] - xi
        dy = pos[j, 1] - yi
        d = sqrt(dx * dx + dy * dy)
        if d > rng:
            continue
        if rule == 0:
            if best < 0 or hp[j] < best_hp:
                best = <int>j
                best_hp = hp[j]
        else:
            if best < 0 or d < best_d:
                best = <int>j
                best_d = d
    return best


cdef int _nearest_enemy(Py_ssize_t i, double[:, ::1] pos,
                        unsigned char[::1] alive, signed char[::1] side) nogil:
    cdef Py_ssize_t j, n = alive.shape[0]
    cdef int best = -1
    cdef double best_d = 0.0, dx, dy, d
    for j in range(n):
        if not alive[j] or side[j] == side[i]:
            continue
        dx = pos[j, 0] - pos[i, 0]
        dy = pos[j, 1] - pos[i, 1]
        d = sqrt(dx * dx + dy * dy)
        if best < 0 or d < best_d:
            best = <int>j
            best_d = d
    return best


def select_target(Py_ssize_t i, int rule, double[:, ::1] pos, long[::1] hp,
                  unsigned char[::1] alive, signed char[::1] side,
                  double[::1] fire_range):
    return _select_target(i, rule, pos, hp, alive, side, fire_range)


def nearest_enemy(Py_ssize_t i, double[:, ::1] pos, unsigned char[::1] alive,
                  signed char[::1] side):
    return _nearest_enemy(i, pos, alive, side)


cdef void _scripted(double[:, ::1] pos, long[::1] hp, unsigned char[::1] alive,
                    signed char[::1] side, double[::1] fire_range,
                    Py_ssize_t who, int rule, int* target, int* move) nogil:
    cdef int t = _select_target(who, rule, pos, hp, alive, side, fire_range)
    target[0] = -1
    move[0] = -1
    if t >= 0:
        target[0] = t
        return
    t = _nearest_enemy(who, pos, alive, side)
    if t < 0:
        return
    move[0] = _SECTOR_TO_ACTION[_sector(pos[t, 0] - pos[who, 0], pos[t, 1] - pos[who, 1])]


def scripted_decide(double[:, ::1] pos, long[::1] hp, unsigned char[::1] alive,
                    signed char[::1] side, double[::1] fire_range,
                    Py_ssize_t who, int rule):
    cdef int t, mv
    _scripted(pos, hp, alive, side, fire_range, who, rule, &t, &mv)
    return t, mv


cdef bint _side_alive(unsigned char[::1] alive, signed char[::1] side, int s) nogil:
    cdef Py_ssize_t j
    for j in range(alive.shape[0]):
        if alive[j] and side[j] == s:
            return True
    return False


def resolve_scripted(double[:, ::1] pos, long[::1] hp, unsigned char[::1] alive,
                     signed char[::1] side, double[::1] fire_range, long[::1] orders):
    """Turn scripted order codes into this tick's attack-move, in place."""
    cdef Py_ssize_t i, n = alive.shape[0]
    cdef int o, t, rule
    for i in range(n):
        o = <int>orders[i]
        if not alive[i] or (o != N_SCRIPT_CLOSEST and o != N_SCRIPT_WEAKEST):
            continue
        rule = 1 if o == N_SCRIPT_CLOSEST else 0
        t = _select_target(i, rule, pos, hp, alive, side, fire_range)
        if t < 0:
            t = _nearest_enemy(i, pos, alive, side)
        if t < 0:
            orders[i] = -1
            continue
        orders[i] = N_ATTACK_MOVE + 8 * rule + _SECTOR_TO_ACTION[
            _sector(pos[t, 0] - pos[i, 0], pos[t, 1] - pos[i, 1])]


def advance_tick(double[:, ::1] pos, long[::1] hp, long[::1] cooldown,
                 unsigned char[::1] alive, signed char[::1] side,
                 long[::1] cd_frames, long[::1] damage, long[::1] defence,
                 double[::1] fire_range, double[::1] speed, long[::1] orders,
                 double[:, ::1] obstacles, double width, double height,
                 int frame_skip, long[::1] dealt, long[::1] lost,
                 long[::1] shots):
    cdef Py_ssize_t n = hp.shape[0], m = obstacles.shape[0]
    cdef Py_ssize_t i, k, q
    cdef int f, frames = 0, o, rule, t, a, heading
    cdef long dmg
    cdef double nx, ny, ox, oy
    cdef bint blocked
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] fired_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] att_i = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] att_t = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] mv_i = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] mv_a = np.empty(n, dtype=np.int64)
    cdef unsigned char[::1] fired = fired_arr
    cdef long[::1] ai = att_i, at = att_t, mi = mv_i, ma = mv_a
    cdef Py_ssize_t n_att, n_mv
    with nogil:
        for f in range(frame_skip):
            if not (_side_alive(alive, side, 0) and _side_alive(alive, side, 1)):
                break
            frames += 1
            for i in range(n):
                if alive[i] and cooldown[i] > 0:
                    cooldown[i] -= 1
            n_att = 0
            n_mv = 0
            for i in range(n):
                if not alive[i]:
                    continue
                o = <int>orders[i]
                if 0 <= o < 8:
                    mi[n_mv] = i
                    ma[n_mv] = o
                    n_mv += 1
                    continue
                heading = -1
                if o >= N_ATTACK_MOVE:
                    rule = (o - N_ATTACK_MOVE) // 8
                    heading = (o - N_ATTACK_MOVE) % 8
                elif o == N_ORDER_ATTACK or o == N_SCRIPT_WEAKEST:
                    rule = 0
                elif o == N_SCRIPT_CLOSEST:
                    rule = 1
                else:
                    continue
                t = _select_target(i, rule, pos, hp, alive, side, fire_range)
                if t >= 0:
                    if cooldown[i] == 0 and not fired[i]:
                        ai[n_att] = i
                        at[n_att] = t
                        n_att += 1
                elif heading >= 0:
                    mi[n_mv] = i
                    ma[n_mv] = heading
                    n_mv += 1
            for q in range(n_att):
                i = ai[q]
                t = <int>at[q]
                dmg = damage[i] - defence[t]
                if dmg < 1:
                    dmg = 1
                if dmg > hp[t]:
                    dmg = hp[t]
                hp[t] -= dmg
                dealt[i] += dmg
                lost[t] += dmg
                cooldown[i] = cd_frames[i]
                fired[i] = 1
                shots[i] += 1
            for i in range(n):
                if alive[i] and hp[i] <= 0:
                    alive[i] = 0
            for q in range(n_mv):
                i = mi[q]
                a = <int>ma[q]
                if not alive[i]:
                    continue
                nx = pos[i, 0] + _MOVE_DX[a] * speed[i]
                ny = pos[i, 1] + _MOVE_DY[a] * speed[i]
                nx = min(max(nx, 0.0), width)
                ny = min(max(ny, 0.0), height)
                blocked = False
                for k in range(m):
                    ox = nx - obstacles[k, 0]
                    oy = ny - obstacles[k, 1]
                    if ox * ox + oy * oy < obstacles[k, 2] * obstacles[k, 2]:
                        blocked = True
                        break
                if not blocked:
                    pos[i, 0] = nx
                    pos[i, 1] = ny
    return frames


def idle_moves(double[:, ::1] pos, unsigned char[::1] alive,
               signed char[::1] side, double[::1] sight, long[::1] orders,
               unsigned char[::1] out):
    cdef Py_ssize_t i, j, n = alive.shape[0]
    cdef int o, target_sector
    cdef bint found
    cdef double dx, dy
    with nogil:
        for i in range(n):
            out[i] = 0
            o = <int>orders[i]
            if not alive[i] or o < 0 or o >= 8:
                continue
            target_sector = _ACTION_TO_SECTOR[o]
            found = False
            for j in range(n):
                if j == i or not alive[j]:
                    continue
                dx = pos[j, 0] - pos[i, 0]
                dy = pos[j, 1] - pos[i, 1]
                if sqrt(dx * dx + dy * dy) > sight[i]:
                    continue
                if _sector(dx, dy) == target_sector:
                    found = True
                    break
            out[i] = not found


def encode_block(double[:, ::1] pos, unsigned char[::1] alive,
                 signed char[::1] side, long[::1] hp, long[::1] cooldown,
                 long[::1] max_hp, long[::1] cd_frames, double[::1] sight,
                 double[:, ::1] terrain, Py_ssize_t center, double[::1] out):
    cdef Py_ssize_t j, k, c = center
    cdef double D = sight[c], cx = pos[c, 0], cy = pos[c, 1]
    cdef double dx, dy, d, v
    cdef int s, base
    with nogil:
        for j in range(42):
            out[j] = 0.0
        out[0] = <double>cooldown[c] / <double>cd_frames[c]
        out[1] = <double>hp[c] / <double>max_hp[c]
        for j in range(alive.shape[0]):
            if j == c or not alive[j]:
                continue
            dx = pos[j, 0] - cx
            dy = pos[j, 1] - cy
            d = sqrt(dx * dx + dy * dy)
            if d > D:
                continue
            v = 1.0 - 0.95 * (d / D)
            s = _sector(dx, dy)
            base = 2 if side[j] == side[c] else 18
            out[base + s] += v
            if v > out[base + 8 + s]:
                out[base + 8 + s] = v
        for k in range(terrain.shape[0]):
            dx = terrain[k, 0] - cx
            dy = terrain[k, 1] - cy
            d = sqrt(dx * dx + dy * dy)
            if d > D:
                continue
            v = 1.0 - d / D
            s = _sector(dx, dy)
            if v > out[34 + s]:
                out[34 + s] = v


cdef void _hidden(double* theta, double* obs, double* z,
                  int n_in, int n_hidden) nogil:
    # w1 is row-major (n_hidden x n_in), i.e. a column-major n_in x n_hidden
    # matrix M with w1 = M^T
    cdef int inc = 1
    cdef double one = 1.0, zero = 0.0
    cdef char trans = b'T'
    dgemv(&trans, &n_in, &n_hidden, &one, theta, &n_in, obs, &inc, &zero, z, &inc)
    cdef int j
    cdef int off_b1 = n_hidden * n_in
    for j in range(n_hidden):
        z[j] += theta[off_b1 + j]


def q_values(double[::1] theta, double[::1] obs, int n_in, int n_hidden, int n_out):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] q = np.empty(n_out, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] zbuf = np.empty(n_hidden, dtype=np.float64)
    cdef double* z = <double*>zbuf.data
    cdef double* qp = <double*>q.data
    cdef int a, j
    cdef int off_w2 = n_hidden * n_in + n_hidden
    cdef int off_b2 = off_w2 + n_out * n_hidden
    cdef double* th = &theta[0]
    cdef int inc = 1
    cdef double one = 1.0, zero = 0.0
    cdef char trans = b'T'
    with nogil:
        _hidden(th, &obs[0], z, n_in, n_hidden)
        for j in range(n_hidden):
            if z[j] < 0.0:
                z[j] = 0.0
        dgemv(&trans, &n_hidden, &n_out, &one, th + off_w2, &n_hidden, z, &inc, &zero, qp, &inc)
        for a in range(n_out):
            qp[a] += th[off_b2 + a]
    return q


def accumulate_trace(double[::1] theta, double[::1] trace, double[::1] obs,
                     int action, double decay, int n_in, int n_hidden, int n_out):
    """trace <- decay * trace + grad_theta Q(obs, action)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] zbuf = np.empty(n_hidden, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] bbuf = np.empty(n_hidden, dtype=np.float64)
    cdef double* z = <double*>zbuf.data
    cdef double* back = <double*>bbuf.data
    cdef int j
    cdef int off_b1 = n_hidden * n_in
    cdef int off_w2 = off_b1 + n_hidden
    cdef int off_b2 = off_w2 + n_out * n_hidden
    cdef int size = off_b2 + n_out
    cdef double* tr = &trace[0]
    cdef double* th = &theta[0]
    cdef double* x = &obs[0]
    cdef int inc = 1
    cdef double one = 1.0
    with nogil:
        _hidden(th, x, z, n_in, n_hidden)
        for j in range(n_hidden):
            back[j] = th[off_w2 + action * n_hidden + j] if z[j] > 0.0 else 0.0
        if decay != 1.0:
            dscal(&size, &decay, tr, &inc)
        # w1 part: M += x back^T with M the column-major view of w1
        dger(&n_in, &n_hidden, &one, x, &inc, back, &inc, tr, &n_in)
        for j in range(n_hidden):
            tr[off_b1 + j] += back[j]
            if z[j] > 0.0:
                tr[off_w2 + action * n_hidden + j] += z[j]
        tr[off_b2 + action] += 1.0


def grad_q(double[::1] theta, double[::1] obs, int action, int n_in,
           int n_hidden, int n_out):
    g = np.zeros(theta.shape[0], dtype=np.float64)
    accumulate_trace(theta, g, obs, action, 1.0, n_in, n_hidden, n_out)
    return g


def axpy(double[::1] theta, double step, double[::1] direction):
    cdef int n = <int>theta.shape[0]
    cdef int inc = 1
    with nogil:
        daxpy(&n, &step, &direction[0], &inc, &theta[0], &inc)


def greedy(double[::1] theta, double[::1] obs, int n_in, int n_hidden, int n_out):
    """Index of the largest Q-value; ties go to the lowest index."""
    q = q_values(theta, obs, n_in, n_hidden, n_out)
    cdef double[::1] qv = q
    cdef int a, best = 0
    for a in range(1, n_out):
        if qv[a] > qv[best]:
            best = a
    return best


def sarsa_update(double[::1] theta, double[::1] trace, double[::1] obs, int action,
                 double reward, next_obs, int next_action, bint done, double gamma,
                 double decay, double alpha, int n_in, int n_hidden, int n_out):
    """One shared-trace Sarsa(lambda) step; returns the TD error."""
    cdef double target = reward
    cdef double delta
    if not done:
        target += gamma * q_values(theta, next_obs, n_in, n_hidden, n_out)[next_action]
    delta = target - q_values(theta, obs, n_in, n_hidden, n_out)[action]
    if not (delta == delta) or delta - delta != 0.0:
        return delta
    accumulate_trace(theta, trace, obs, action, decay, n_in, n_hidden, n_out)
    axpy(theta, alpha * delta, trace)
    return delta
