"""Compiled inner loops for the Riccati sweeps.

The backward Riccati flow and the forward closed-loop pass are plain
fourth-order Runge-Kutta recursions; on stiff generators they run with
many inner sub-steps, where Python-level dispatch would dominate the
cost.  The kernels below are compiled with numba when it is available
and fall back to the identical pure-Python definitions otherwise.

Both kernels return 0 on success and the 1-based index of the step at
which the iterate blew up otherwise; the callers translate that into an
integration error.
"""

import numpy as np

try:
    from numba import njit as _njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    _njit = None

_BLOWUP_SQ = 1e24


def _backward_sweep_loop(at, b, ctc, q, h, steps, substeps, q_samples, gains):
    """Backward-time RK4 for dQ/ds = A*Q + (A*Q)* + C*C - (QB)(QB)*.

    ``q_samples`` (steps + 1 matrices, terminal entry preset by the
    caller) collects the base-grid samples backward from the initial
    ``q``; ``gains`` (steps * substeps + 1 entries, terminal preset)
    collects QB at every inner step.  Symmetry of Q makes A*Q + (A*Q)*
    the full Lyapunov part, and Q is re-symmetrized after each step.
    """
    d = q.shape[0]
    m = b.shape[1]
    inner = steps * substeps
    for j in range(steps):
        for s in range(substeps):
            s1 = np.dot(at, q)
            g1 = np.dot(q, b)
            k1 = s1 + s1.T + ctc - np.dot(g1, np.ascontiguousarray(g1.T))
            q2 = q + (0.5 * h) * k1
            s2 = np.dot(at, q2)
            g2 = np.dot(q2, b)
            k2 = s2 + s2.T + ctc - np.dot(g2, np.ascontiguousarray(g2.T))
            q3 = q + (0.5 * h) * k2
            s3 = np.dot(at, q3)
            g3 = np.dot(q3, b)
            k3 = s3 + s3.T + ctc - np.dot(g3, np.ascontiguousarray(g3.T))
            q4 = q + h * k3
            s4 = np.dot(at, q4)
            g4 = np.dot(q4, b)
            k4 = s4 + s4.T + ctc - np.dot(g4, np.ascontiguousarray(g4.T))
            q = q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            q = 0.5 * (q + q.T)
            idx = inner - (j * substeps + s + 1)
            for ii in range(d):
                for kk in range(m):
                    acc = 0.0
                    for jj in range(d):
                        acc += q[ii, jj] * b[jj, kk]
                    gains[idx, ii, kk] = acc
        sq = 0.0
        for ii in range(d):
            for jj in range(d):
                sq += q[ii, jj] * q[ii, jj]
        if not np.isfinite(sq) or sq > _BLOWUP_SQ:
            return j + 1
        q_samples[steps - 1 - j] = q
    return 0


def _closed_loop_forward_loop(a, b, gains, x, h, total, substeps, n, x_nodes):
    """Forward RK4 for x' = A x - B (G(t)* x + o(t)).

    ``gains`` holds [P(t)B; (B*r(t))*] at half the forward step spacing;
    step i uses entries 2i, 2i+1, 2i+2.  Node states are stored every
    ``substeps`` steps.
    """
    m = b.shape[1]
    w = np.empty(m)

    def rhs(j, v):
        for kk in range(m):
            acc = gains[j, n, kk]
            for ii in range(n):
                acc += gains[j, ii, kk] * v[ii]
            w[kk] = acc
        return np.dot(a, v) - np.dot(b, w)

    for i in range(total):
        j = 2 * i
        k1 = rhs(j, x)
        k2 = rhs(j + 1, x + (0.5 * h) * k1)
        k3 = rhs(j + 1, x + (0.5 * h) * k2)
        k4 = rhs(j + 2, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (i + 1) % substeps == 0:
            x_nodes[(i + 1) // substeps] = x
    sq = 0.0
    for ii in range(n):
        sq += x[ii] * x[ii]
    if not np.isfinite(sq) or sq > _BLOWUP_SQ:
        return 1
    return 0


if _njit is not None:
    backward_sweep_loop = _njit(cache=True)(_backward_sweep_loop)
    closed_loop_forward_loop = _njit(cache=True)(_closed_loop_forward_loop)
else:  # pragma: no cover
    backward_sweep_loop = _backward_sweep_loop
    closed_loop_forward_loop = _closed_loop_forward_loop
