"""Pure-Python implementations of the hot kernels.

Semantics here are the reference; ``_kernels.pyx`` mirrors them loop for
loop so that the simulator kernels agree bit for bit and the numeric ones to
rounding.
"""

import math

import numpy as np

BACKEND = "python"

ORDER_NONE = -1
ORDER_ATTACK = 8
ORDER_SCRIPT_CLOSEST = 9
ORDER_SCRIPT_WEAKEST = 10
# attack-move: 16 + 8 * rule + direction; engages by rule, else keeps heading
ORDER_ATTACK_MOVE = 16

RULE_WEAKEST = 0
RULE_CLOSEST = 1

_D = math.sqrt(0.5)
MOVE_DX = (0.0, 0.0, -1.0, 1.0, -_D, _D, -_D, _D)
MOVE_DY = (1.0, -1.0, 0.0, 0.0, _D, _D, -_D, -_D)
SECTOR_TO_ACTION = (3, 5, 0, 4, 2, 6, 1, 7)

_PI_8 = math.pi / 8.0
_PI_4 = math.pi / 4.0


def sector_of(dx, dy):
    if dx == 0.0 and dy == 0.0:
        return 0
    k = int(math.floor((math.atan2(dy, dx) + _PI_8) / _PI_4))
    return ((k % 8) + 8) % 8


def select_target(i, rule, pos, hp, alive, side, fire_range):
    best = -1
    best_key = 0.0
    best_d = 0.0
    xi = pos[i, 0]
    yi = pos[i, 1]
    rng = fire_range[i]
    for j in range(len(hp)):
        if not alive[j] or side[j] == side[i]:
            continue
        dx = pos[j, 0] - xi
        dy = pos[j, 1] - yi
        d = math.sqrt(dx * dx + dy * dy)
        if d > rng:
            continue
        if rule == RULE_WEAKEST:
            if best < 0 or hp[j] < best_key:
                best = j
                best_key = hp[j]
        else:
            if best < 0 or d < best_d:
                best = j
                best_d = d
    return best


def nearest_enemy(i, pos, alive, side):
    best = -1
    best_d = 0.0
    xi = pos[i, 0]
    yi = pos[i, 1]
    for j in range(len(alive)):
        if not alive[j] or side[j] == side[i]:
            continue
        dx = pos[j, 0] - xi
        dy = pos[j, 1] - yi
        d = math.sqrt(dx * dx + dy * dy)
        if best < 0 or d < best_d:
            best = j
            best_d = d
    return best


def scripted_decide(pos, hp, alive, side, fire_range, who, rule):
    """Frame-level scripted choice for ``who``: returns (target, move_action).

    Exactly one of the two is >= 0, or both are -1 when no enemy is alive.
    """
    t = select_target(who, rule, pos, hp, alive, side, fire_range)
    if t >= 0:
        return t, -1
    t = nearest_enemy(who, pos, alive, side)
    if t < 0:
        return -1, -1
    s = sector_of(pos[t, 0] - pos[who, 0], pos[t, 1] - pos[who, 1])
    return -1, SECTOR_TO_ACTION[s]


def resolve_scripted(pos, hp, alive, side, fire_range, orders):
    """Turn scripted order codes into this tick's attack-move, in place.

    The heading is fixed for the tick: toward the rule's target when one is
    in range, else toward the nearest enemy.
    """
    for i in range(len(alive)):
        o = orders[i]
        if not alive[i] or o not in (ORDER_SCRIPT_CLOSEST, ORDER_SCRIPT_WEAKEST):
            continue
        rule = RULE_CLOSEST if o == ORDER_SCRIPT_CLOSEST else RULE_WEAKEST
        t = select_target(i, rule, pos, hp, alive, side, fire_range)
        if t < 0:
            t = nearest_enemy(i, pos, alive, side)
        if t < 0:
            orders[i] = ORDER_NONE
            continue
        d = SECTOR_TO_ACTION[sector_of(pos[t, 0] - pos[i, 0], pos[t, 1] - pos[i, 1])]
        orders[i] = ORDER_ATTACK_MOVE + 8 * rule + d


def _side_alive(alive, side, s):
    for j in range(len(alive)):
        if alive[j] and side[j] == s:
            return True
    return False


def advance_tick(pos, hp, cooldown, alive, side, cd_frames, damage, defence,
                 fire_range, speed, orders, obstacles, width, height,
                 frame_skip, dealt, lost, shots):
    """Run up to ``frame_skip`` frames in place; returns frames executed.

    Orders are fixed for the whole tick: codes 0-7 move, attack codes
    (8 weakest, 9 closest, 10 weakest) fire at an in-range target and
    otherwise hold, attack-move codes (16-31) fire by rule when a target is
    in range and otherwise keep moving on their heading. Per frame: cooldowns tick down, targets are chosen from
    the frame-start state, attacks resolve in unit-id order, then moves.
    A unit launches at most one attack per call.
    """
    n = len(hp)
    fired = [False] * n
    frames = 0
    for _ in range(frame_skip):
        if not (_side_alive(alive, side, 0) and _side_alive(alive, side, 1)):
            break
        frames += 1
        for i in range(n):
            if alive[i] and cooldown[i] > 0:
                cooldown[i] -= 1
        attacks = []
        moves = []
        for i in range(n):
            if not alive[i]:
                continue
            o = orders[i]
            if 0 <= o < 8:
                moves.append((i, o))
                continue
            heading = -1
            if o >= ORDER_ATTACK_MOVE:
                rule = (o - ORDER_ATTACK_MOVE) // 8
                heading = (o - ORDER_ATTACK_MOVE) % 8
            elif o == ORDER_ATTACK or o == ORDER_SCRIPT_WEAKEST:
                rule = RULE_WEAKEST
            elif o == ORDER_SCRIPT_CLOSEST:
                rule = RULE_CLOSEST
            else:
                continue
            t = select_target(i, rule, pos, hp, alive, side, fire_range)
            if t >= 0:
                if cooldown[i] == 0 and not fired[i]:
                    attacks.append((i, t))
            elif heading >= 0:
                moves.append((i, heading))
        for i, t in attacks:
            dmg = damage[i] - defence[t]
            if dmg < 1:
                dmg = 1
            if dmg > hp[t]:
                dmg = hp[t]
            hp[t] -= dmg
            dealt[i] += dmg
            lost[t] += dmg
            cooldown[i] = cd_frames[i]
            fired[i] = True
            shots[i] += 1
        for i in range(n):
            if alive[i] and hp[i] <= 0:
                alive[i] = False
        for i, a in moves:
            if not alive[i]:
                continue
            nx = pos[i, 0] + MOVE_DX[a] * speed[i]
            ny = pos[i, 1] + MOVE_DY[a] * speed[i]
            nx = min(max(nx, 0.0), width)
            ny = min(max(ny, 0.0), height)
            blocked = False
            for k in range(len(obstacles)):
                ox = nx - obstacles[k, 0]
                oy = ny - obstacles[k, 1]
                if ox * ox + oy * oy < obstacles[k, 2] * obstacles[k, 2]:
                    blocked = True
                    break
            if not blocked:
                pos[i, 0] = nx
                pos[i, 1] = ny
    return frames


def idle_moves(pos, alive, side, sight, orders, out):
    """Flag Move orders whose direction sector holds no living unit in sight."""
    n = len(alive)
    for i in range(n):
        out[i] = False
        o = orders[i]
        if not alive[i] or o < 0 or o >= 8:
            continue
        target_sector = SECTOR_TO_ACTION.index(o)
        found = False
        for j in range(n):
            if j == i or not alive[j]:
                continue
            dx = pos[j, 0] - pos[i, 0]
            dy = pos[j, 1] - pos[i, 1]
            if math.sqrt(dx * dx + dy * dy) > sight[i]:
                continue
            if sector_of(dx, dy) == target_sector:
                found = True
                break
        out[i] = not found


def encode_block(pos, alive, side, hp, cooldown, max_hp, cd_frames, sight,
                 terrain, center, out):
    """Fill the 42 current-step entries for unit ``center``."""
    out[:42] = 0.0
    c = center
    out[0] = cooldown[c] / cd_frames[c]
    out[1] = hp[c] / max_hp[c]
    D = sight[c]
    cx = pos[c, 0]
    cy = pos[c, 1]
    for j in range(len(alive)):
        if j == c or not alive[j]:
            continue
        dx = pos[j, 0] - cx
        dy = pos[j, 1] - cy
        d = math.sqrt(dx * dx + dy * dy)
        if d > D:
            continue
        v = 1.0 - 0.95 * (d / D)
        s = sector_of(dx, dy)
        base = 2 if side[j] == side[c] else 18
        out[base + s] += v
        if v > out[base + 8 + s]:
            out[base + 8 + s] = v
    for k in range(len(terrain)):
        dx = terrain[k, 0] - cx
        dy = terrain[k, 1] - cy
        d = math.sqrt(dx * dx + dy * dy)
        if d > D:
            continue
        v = 1.0 - d / D
        s = sector_of(dx, dy)
        if v > out[34 + s]:
            out[34 + s] = v


def _split(theta, n_in, n_hidden, n_out):
    a = n_hidden * n_in
    b = a + n_hidden
    c = b + n_out * n_hidden
    return (theta[:a].reshape(n_hidden, n_in), theta[a:b],
            theta[b:c].reshape(n_out, n_hidden), theta[c:c + n_out])


def q_values(theta, obs, n_in, n_hidden, n_out):
    w1, b1, w2, b2 = _split(theta, n_in, n_hidden, n_out)
    h = np.maximum(w1 @ obs + b1, 0.0)
    return w2 @ h + b2


def grad_q(theta, obs, action, n_in, n_hidden, n_out):
    w1, b1, w2, b2 = _split(theta, n_in, n_hidden, n_out)
    z = w1 @ obs + b1
    g = np.zeros_like(theta)
    gw1, gb1, gw2, gb2 = _split(g, n_in, n_hidden, n_out)
    back = np.where(z > 0.0, w2[action], 0.0)
    gw1[:] = np.outer(back, obs)
    gb1[:] = back
    gw2[action] = np.maximum(z, 0.0)
    gb2[action] = 1.0
    return g


def accumulate_trace(theta, trace, obs, action, decay, n_in, n_hidden, n_out):
    trace *= decay
    trace += grad_q(theta, obs, action, n_in, n_hidden, n_out)


def axpy(theta, step, direction):
    theta += step * direction


def greedy(theta, obs, n_in, n_hidden, n_out):
    return int(np.argmax(q_values(theta, obs, n_in, n_hidden, n_out)))


def sarsa_update(theta, trace, obs, action, reward, next_obs, next_action, done,
                 gamma, decay, alpha, n_in, n_hidden, n_out):
    target = reward
    if not done:
        target += gamma * q_values(theta, next_obs, n_in, n_hidden, n_out)[next_action]
    delta = target - q_values(theta, obs, n_in, n_hidden, n_out)[action]
    if not math.isfinite(delta):
        return delta
    accumulate_trace(theta, trace, obs, action, decay, n_in, n_hidden, n_out)
    axpy(theta, alpha * delta, trace)
    return delta
