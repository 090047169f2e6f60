"""Algebraic and differential Riccati equations and the closed-loop generator.

The infinite-horizon value operator P is the stabilizing solution of

    A*P + P A + C*C - P B B* P = 0,

computed here by the Hamiltonian-Schur method (ordered real Schur form of
the 2n x 2n Hamiltonian) followed by a few Newton-Kleinman refinement
steps.  ``<P xi, xi>`` is the optimal infinite-horizon cost from xi, a
fact :func:`value_function_check` verifies against brute-force quadrature
along the closed-loop trajectory.

The finite-horizon value operator P_T(.) solves the matrix differential
Riccati equation

    P_T'(t) + A* P_T(t) + P_T(t) A + C*C - P_T(t) B B* P_T(t) = 0,
    P_T(T) = P0,

integrated backward in time with the classical fourth-order Runge-Kutta
scheme.  The integrator is explicit: for stiff generators the step must
resolve the fastest mode (|lambda_max| * dt below the RK4 stability
bound), otherwise the integration diverges and is reported as such.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, schur, solve_continuous_lyapunov

from ._kernels import backward_sweep_loop
from .errors import (
    ConvergenceError,
    DimensionError,
    IntegrationError,
    NotStabilizableError,
    TruncationError,
)
from .operators import LtiSystem

__all__ = [
    "AreSolution",
    "DreSolution",
    "solve_are",
    "solve_dre",
    "value_function_check",
    "closed_loop_generator",
]

_BLOWUP_LIMIT = 1e12


@dataclass(frozen=True)
class AreSolution:
    """Stabilizing solution of the algebraic Riccati equation.

    Attributes
    ----------
    p : (n, n) ndarray
        Symmetric positive semidefinite value operator.
    residual : float
        Relative Frobenius norm of ``A*P + PA + C*C - PBB*P``.
    closed_loop_abscissa : float
        Largest real part of the eigenvalues of ``A - BB*P``; its negation
        is the closed-loop decay rate.
    """

    p: np.ndarray
    residual: float
    closed_loop_abscissa: float


@dataclass(frozen=True)
class DreSolution:
    """Backward solution of the differential Riccati equation on a grid.

    Attributes
    ----------
    grid : (steps + 1,) ndarray
        Uniform time grid on [0, T].
    p_samples : (steps + 1, n, n) ndarray
        Symmetric samples P_T(t_j); the terminal sample equals p0 exactly.
    p0 : (n, n) ndarray
        Terminal value P_T(T).
    """

    grid: np.ndarray
    p_samples: np.ndarray
    p0: np.ndarray

    def at(self, j: int) -> np.ndarray:
        """Sample P_T(t_j) by grid index."""
        return self.p_samples[j]


def _are_residual(sys: LtiSystem, p: np.ndarray):
    a, b, c = sys.a, sys.b, sys.c
    terms = (a.T @ p, p @ a, c.T @ c, p @ b @ b.T @ p)
    res = terms[0] + terms[1] + terms[2] - terms[3]
    denom = max(1.0, sum(np.linalg.norm(t) for t in terms))
    return res, float(np.linalg.norm(res) / denom)


def solve_are(sys: LtiSystem, tol: float = 1e-10, newton_steps: int = 5) -> AreSolution:
    """Solve the algebraic Riccati equation by Hamiltonian-Schur + Newton.

    The stable invariant subspace of the Hamiltonian
    ``[[A, -BB*], [-C*C, -A*]]`` yields P; up to ``newton_steps``
    Newton-Kleinman corrections (each a Lyapunov solve with the current
    closed-loop generator) polish the residual.

    Raises
    ------
    NotStabilizableError
        If the Hamiltonian has no stable invariant subspace of dimension n
        (finite cost condition violated).
    ConvergenceError
        If the relative residual stays above ``tol`` after refinement.
    """
    n = sys.n
    bbt = sys.b @ sys.b.T
    ham = np.block([[sys.a, -bbt], [-sys.c.T @ sys.c, -sys.a.T]])
    _, vecs, sdim = schur(ham, output="real", sort="lhp")
    if sdim != n:
        raise NotStabilizableError(
            f"Hamiltonian has a stable invariant subspace of dimension {sdim}, "
            f"expected {n}; the system is not stabilizable with finite cost"
        )
    u1 = vecs[:n, :n]
    u2 = vecs[n:, :n]
    sv = np.linalg.svd(u1, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise NotStabilizableError(
            "stable invariant subspace has no graph representation; "
            "the system is not stabilizable with finite cost"
        )
    p = np.linalg.solve(u1.T, u2.T).T
    p = 0.5 * (p + p.T)

    res, rel = _are_residual(sys, p)
    for _ in range(newton_steps):
        if rel <= 1e-14:
            break
        a_cl = sys.a - bbt @ p
        try:
            delta = solve_continuous_lyapunov(a_cl.T, -res)
        except Exception:  # Lyapunov solve can only fail far from a solution
            break
        p = 0.5 * ((p + delta) + (p + delta).T)
        res, rel = _are_residual(sys, p)
    if rel > tol:
        raise ConvergenceError(
            f"Riccati residual {rel:.3e} above tolerance {tol:.1e} after refinement"
        )
    abscissa = float(np.max(np.linalg.eigvals(sys.a - bbt @ p).real))
    return AreSolution(p=_lock(p), residual=rel, closed_loop_abscissa=abscissa)


def _lock(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _check_terminal_cost(p0, n: int) -> np.ndarray:
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (n, n):
        raise DimensionError(f"p0 must be {n} x {n}, got shape {p0.shape}")
    if np.linalg.norm(p0 - p0.T) > 1e-10 * max(1.0, np.linalg.norm(p0)):
        raise ValueError("p0 must be symmetric")
    if np.linalg.eigvalsh(0.5 * (p0 + p0.T))[0] < -1e-10 * max(
        1.0, np.linalg.norm(p0)
    ):
        raise ValueError("p0 must be positive semidefinite")
    return 0.5 * (p0 + p0.T)


def _run_backward_kernel(at, b, ctc, q0, horizon, steps, substeps):
    """Drive the compiled backward RK4 loop; returns (grid, samples, gains)."""
    d = q0.shape[0]
    m = b.shape[1]
    h = horizon / steps / substeps
    q_samples = np.empty((steps + 1, d, d))
    q_samples[steps] = q0
    gains = np.empty((steps * substeps + 1, d, m))
    gains[-1] = q0 @ b
    status = backward_sweep_loop(
        np.ascontiguousarray(at),
        np.ascontiguousarray(b),
        np.ascontiguousarray(ctc),
        q0.copy(),
        h,
        steps,
        substeps,
        q_samples,
        gains,
    )
    if status:
        raise IntegrationError(
            f"Riccati integration diverged at backward step {status} of {steps}; "
            "reduce the step or check stiffness"
        )
    return np.linspace(0.0, horizon, steps + 1), q_samples, gains


def backward_riccati_pass(
    sys: LtiSystem, horizon: float, p0, steps: int, substeps: int = 1
):
    """Backward RK4 pass for P_T(.) on a uniform grid.

    Integrates the differential Riccati equation backward from
    ``P_T(T) = p0`` with ``steps`` grid intervals; every sample is
    symmetrized after its step.  ``substeps`` splits each interval into
    inner RK4 steps of equal size so that stiff generators stay inside
    the explicit stability region; only grid samples are stored.

    Returns
    -------
    grid : (steps + 1,) ndarray
    p_samples : (steps + 1, n, n) ndarray, ordered forward in time
    """
    horizon = float(horizon)
    if horizon <= 0.0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    steps = int(steps)
    if steps < 2:
        raise ValueError(f"steps must be at least 2, got {steps}")
    substeps = max(1, int(substeps))
    p0 = _check_terminal_cost(p0, sys.n)
    grid, p_samples, _ = _run_backward_kernel(
        sys.a.T, sys.b, sys.c.T @ sys.c, p0, horizon, steps, substeps
    )
    return grid, p_samples


def backward_sweep_data(
    sys: LtiSystem, horizon: float, p0, z, steps: int, substeps: int = 1
):
    """Backward pass that also records closed-loop feedback data per inner step.

    Integrates the Riccati pair (P_T, r) backward through the equivalent
    augmented flow: with the state extended by a constant coordinate, the
    tracking cost becomes plain quadratic via the stacked observation
    [C, -z], and the augmented value matrix [[P, r], [r*, w]] carries the
    feedforward state as its border column; its own Riccati equation
    reproduces the P_T equation and the feedforward equation

        r'(t) = (P_T(t) B B* - A*) r(t) + C* z,    r(T) = 0,

    block by block.

    Returns, besides the grid samples of P_T and r, the feedback data
    ``gains[j] = [P(t_j) B; (B* r(t_j))*]`` at the inner resolution
    (``steps * substeps + 1`` samples).  The forward closed-loop
    integration only ever needs ``B*(P x + r)``, so these small samples
    are all it takes to sub-step it stably without storing full matrices
    at inner resolution.
    """
    horizon = float(horizon)
    if horizon <= 0.0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    steps = int(steps)
    if steps < 2:
        raise ValueError(f"steps must be at least 2, got {steps}")
    substeps = max(1, int(substeps))
    n = sys.n
    p0 = _check_terminal_cost(p0, n)
    z = np.asarray(z, dtype=float).reshape(n)

    a_aug = np.zeros((n + 1, n + 1))
    a_aug[:n, :n] = sys.a
    b_aug = np.vstack([sys.b, np.zeros((1, sys.m))])
    c_aug = np.hstack([sys.c, -z[:, None]])
    q0 = np.zeros((n + 1, n + 1))
    q0[:n, :n] = p0

    grid, q_samples, gains = _run_backward_kernel(
        a_aug.T, b_aug, c_aug.T @ c_aug, q0, horizon, steps, substeps
    )
    p_samples = np.ascontiguousarray(q_samples[:, :n, :n])
    r_samples = np.ascontiguousarray(q_samples[:, :n, n])
    return grid, p_samples, r_samples, gains


def solve_dre(sys: LtiSystem, horizon: float, p0, steps: int) -> DreSolution:
    """Solve the differential Riccati equation backward from P_T(T) = p0."""
    grid, p_samples = backward_riccati_pass(sys, horizon, p0, steps)
    return DreSolution(
        grid=_lock(grid),
        p_samples=_lock(p_samples),
        p0=_lock(p_samples[-1].copy()),
    )


def value_function_check(
    sys: LtiSystem,
    are: AreSolution,
    xi,
    horizon: float,
    dt: float,
):
    """Compare <P xi, xi> with the simulated infinite-horizon cost.

    Integrates the closed-loop trajectory x' = (A - BB*P) x from xi with
    RK4 and accumulates the running cost |Cx|^2 + |u|^2, u = -B*P x, by
    trapezoid quadrature on [0, horizon].

    Returns
    -------
    (quadratic_form, simulated_cost) : tuple of float

    Raises
    ------
    TruncationError
        If the closed-loop propagator at the truncation horizon still has
        norm above 1e-6, so the tail of the integral is not negligible.
    """
    xi = np.asarray(xi, dtype=float).reshape(sys.n)
    horizon = float(horizon)
    dt = float(dt)
    if horizon <= 0.0 or dt <= 0.0:
        raise ValueError("horizon and dt must be positive")
    a_cl = sys.a - sys.b @ (sys.b.T @ are.p)
    tail = np.linalg.norm(expm(horizon * a_cl), 2)
    if tail > 1e-6:
        raise TruncationError(
            f"closed-loop propagator norm {tail:.3e} at t={horizon} exceeds 1e-6; "
            "increase the truncation horizon"
        )
    nsteps = max(2, int(round(horizon / dt)))
    h = horizon / nsteps
    kb = sys.b.T @ are.p  # feedback gain, u = -kb x
    x = xi.copy()

    def running(xv):
        u = -kb @ xv
        return float(np.dot(sys.c @ xv, sys.c @ xv) + np.dot(u, u))

    total = 0.5 * running(x)
    for j in range(nsteps):
        k1 = a_cl @ x
        k2 = a_cl @ (x + 0.5 * h * k1)
        k3 = a_cl @ (x + 0.5 * h * k2)
        k4 = a_cl @ (x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        total += running(x) if j < nsteps - 1 else 0.5 * running(x)
    simulated = float(total * h)
    quad_form = float(xi @ (are.p @ xi))
    return quad_form, simulated


def closed_loop_generator(sys: LtiSystem, are: AreSolution):
    """Closed-loop generator A - BB*P and its decay rate.

    Returns
    -------
    (a_cl, lam) : ((n, n) ndarray, float)
        ``lam`` is the negated spectral abscissa of the generator; it is
        positive whenever the coercivity hypothesis on C holds.  A
        nonpositive rate is reported as a warning, not an error.
    """
    a_cl = sys.a - sys.b @ (sys.b.T @ are.p)
    lam = -float(np.max(np.linalg.eigvals(a_cl).real))
    if lam <= 0.0:
        warnings.warn(
            f"closed-loop decay rate {lam:.3e} is not positive; "
            "the coercivity hypothesis on C appears to be violated",
            stacklevel=2,
        )
    return a_cl, lam
