"""Tour of the canonical scalar system.

Everything in this laboratory has a closed form when A = -1, B = 1, C = 1:
the stationary triple is (1/2, 1/2, -1/2) for the target z = 1, the value
operator is P = sqrt(2) - 1, and the closed loop decays at rate sqrt(2).
This script walks the whole chain and prints each quantity next to its
hand-computed value.
"""

import numpy as np

import lqturnpike as lab


def run():
    sys_, z, x0 = lab.scalar_example()
    print("system: A = -1, B = 1, C = 1, target z = 1, x0 = 0")

    report = lab.check_hypotheses(sys_, t0=1.0)
    print("\nstructural hypotheses")
    print(f"  (A, C) Gramian smallest eigenvalue : {report.obs_ac:.10f}")
    print(f"  (A*, B*) Gramian smallest eigenvalue: {report.obs_astar_bstar:.10f}")
    print(f"  kernel intersections trivial        : {report.ker_ac_trivial}, "
          f"{report.ker_astar_bstar_trivial}")
    print(f"  coercivity constant delta           : {report.delta}")

    triple = lab.solve_stationary(sys_, z)
    print("\nstationary triple (hand value 0.5, 0.5, -0.5)")
    print(f"  x_bar = {triple.x_bar[0]:+.12f}")
    print(f"  u_bar = {triple.u_bar[0]:+.12f}")
    print(f"  y_bar = {triple.y_bar[0]:+.12f}")

    are = lab.solve_are(sys_)
    print("\nalgebraic Riccati equation (positive root of P^2 + 2P - 1 = 0)")
    print(f"  P          = {are.p[0, 0]:.12f}  vs sqrt(2) - 1 = {np.sqrt(2) - 1:.12f}")
    print(f"  residual   = {are.residual:.3e}")
    print(f"  closed loop abscissa = {are.closed_loop_abscissa:.12f} (= -sqrt(2))")

    dre = lab.solve_dre(sys_, 10.0, np.zeros((1, 1)), 10_000)
    print("\ndifferential Riccati equation from zero terminal cost")
    print(f"  P_T(0) after T = 10 : {dre.p_samples[0][0, 0]:.12f} (tends to P)")

    quad, sim = lab.value_function_check(sys_, are, np.array([1.0]), 12.0, 1e-3)
    print("\nvalue function against brute-force quadrature")
    print(f"  <P xi, xi> = {quad:.12f}, simulated cost = {sim:.12f}")

    traj = lab.solve_infinite_horizon(sys_, np.array([1.0]), 5.0, 1e-3)
    print("\nclosed-loop decay x(t) = e^(-sqrt(2) t)")
    for t_check in (0.5, 1.0, 2.0):
        idx = int(round(t_check / 1e-3))
        print(f"  x({t_check}) = {traj.x[idx, 0]:.10f}  "
              f"exact {np.exp(-np.sqrt(2) * t_check):.10f}")


if __name__ == "__main__":
    run()
