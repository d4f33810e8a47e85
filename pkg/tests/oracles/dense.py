"""Plain-numpy two-layer ReLU network and a central-difference gradient."""

import numpy as np


def unpack(theta, n_in=93, n_hidden=100, n_out=9):
    a = n_hidden * n_in
    w1 = theta[:a].reshape(n_hidden, n_in)
    b1 = theta[a:a + n_hidden]
    b = a + n_hidden
    w2 = theta[b:b + n_out * n_hidden].reshape(n_out, n_hidden)
    b2 = theta[b + n_out * n_hidden:]
    return w1, b1, w2, b2


def forward(theta, x, n_in=93, n_hidden=100, n_out=9):
    w1, b1, w2, b2 = unpack(theta, n_in, n_hidden, n_out)
    h = np.zeros(n_hidden)
    for j in range(n_hidden):
        z = b1[j] + sum(w1[j, k] * x[k] for k in range(n_in))
        h[j] = z if z > 0 else 0.0
    return np.array([b2[i] + sum(w2[i, j] * h[j] for j in range(n_hidden)) for i in range(n_out)])


def central_difference(theta, x, a, h=1e-5, n_in=93, n_hidden=100, n_out=9):
    """d q[a] / d theta by central differences.

    A single coordinate moves at most one hidden pre-activation (w1, b1) or
    one output (w2, b2), so each perturbed output is recomputed from the
    cached pre-activations instead of a full pass; the values are the same.
    """
    w1, b1, w2, b2 = unpack(theta, n_in, n_hidden, n_out)
    pre = w1 @ x + b1
    hid = np.maximum(pre, 0.0)
    base = w2[a] @ hid + b2[a]
    g = np.zeros_like(theta)

    def q_with_unit(j, z):
        return base - w2[a, j] * hid[j] + w2[a, j] * max(z, 0.0)

    for j in range(n_hidden):
        for k in range(n_in):
            g[j * n_in + k] = (q_with_unit(j, pre[j] + h * x[k]) - q_with_unit(j, pre[j] - h * x[k])) / (2 * h)
        g[n_hidden * n_in + j] = (q_with_unit(j, pre[j] + h) - q_with_unit(j, pre[j] - h)) / (2 * h)
    off = n_hidden * n_in + n_hidden
    # other output rows do not feed q[a]: their entries stay zero
    for j in range(n_hidden):
        up = base - w2[a, j] * hid[j] + (w2[a, j] + h) * hid[j]
        dn = base - w2[a, j] * hid[j] + (w2[a, j] - h) * hid[j]
        g[off + a * n_hidden + j] = (up - dn) / (2 * h)
    g[off + n_out * n_hidden + a] = ((base + h) - (base - h)) / (2 * h)
    return g
