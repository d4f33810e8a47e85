"""Tabular Sarsa(lambda) with accumulating traces on a deterministic chain."""

import numpy as np


class Chain:
    """States 0..n-1, start in the middle. Action 0 steps left, 1 steps right.
    Reaching the right end pays +1 and ends; the left end pays -1 and ends;
    every other step pays -0.01."""

    def __init__(self, n=5, cap=40):
        self.n, self.cap = n, cap

    def start(self):
        return self.n // 2

    def move(self, s, a):
        s2 = s + (1 if a == 1 else -1)
        if s2 == self.n - 1:
            return s2, 1.0, True
        if s2 == 0:
            return s2, -1.0, True
        return s2, -0.01, False


def egreedy(q_row, eps, rng):
    # draw protocol: one uniform, then a uniform integer on exploration
    if eps > 0 and rng.random() < eps:
        return int(rng.integers(len(q_row)))
    best = 0
    for a in range(1, len(q_row)):
        if q_row[a] > q_row[best]:
            best = a
    return best


def run(chain, episodes, alpha, gamma, lam, eps_of, seed, q0=None):
    """Returns the list of Q tables after every update, in order."""
    rng = np.random.default_rng(seed)
    q = np.zeros((chain.n, 2)) if q0 is None else np.array(q0, dtype=float)
    history = []
    for ep in range(episodes):
        eps = eps_of(ep)
        e = np.zeros_like(q)
        s = chain.start()
        a = egreedy(q[s], eps, rng)
        for t in range(chain.cap):
            s2, r, end = chain.move(s, a)
            timeout = t + 1 == chain.cap
            a2 = None if (end or timeout) else egreedy(q[s2], eps, rng)
            target = r if (end or timeout) else r + gamma * q[s2, a2]
            delta = target - q[s, a]
            e *= gamma * lam
            e[s, a] += 1.0
            q += alpha * delta * e
            history.append(q.copy())
            if end or timeout:
                break
            s, a = s2, a2
    return history
