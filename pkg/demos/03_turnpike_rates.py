"""The exponential turnpike property, measured.

For growing horizons the optimal trajectory approaches the stationary
triple exponentially fast away from the two boundary layers.  The script
tabulates the midpoint gaps, fits the decay rate of the reversed
deviation h(t) = y - y_bar - P(x - x_bar), compares it with the spectral
rate of the closed-loop generator, and checks the semigroup propagation
of h, which is the mechanism behind the whole estimate.
"""

import numpy as np

import lqturnpike as lab


def run():
    sys_, z, x0 = lab.scalar_example()
    stat = lab.solve_stationary(sys_, z)
    are = lab.solve_are(sys_)
    lam_ref = -are.closed_loop_abscissa
    print(f"spectral decay rate of the closed loop: {lam_ref:.6f} (= sqrt(2))\n")

    horizons = [5.0, 10.0, 20.0, 40.0]
    reports = lab.verify_turnpike(
        sys_, stat, are, horizons, z=z, x0=x0, dt=1e-3
    )

    print(f"{'T':>5} {'gap_x(T/2)':>12} {'fitted c':>10} {'fitted rate':>12} "
          f"{'propagation':>12} {'bound':>6}")
    for rep in reports:
        mid = rep.gap_x[len(rep.grid) // 2]
        print(
            f"{rep.horizon:5.0f} {mid:12.3e} {rep.fitted_c:10.4f} "
            f"{rep.fitted_lambda:12.6f} {rep.propagation_residual:12.3e} "
            f"{str(rep.bound_satisfied):>6}"
        )

    c_values = [rep.c_min for rep in reports]
    print(
        f"\nminimal envelope constants per horizon: "
        f"{', '.join(f'{c:.4f}' for c in c_values)}"
    )
    print(f"variation across horizons: {max(c_values) / min(c_values):.4f}x "
          "(bounded, as the theory requires)")
    print("\nmidpoint gaps shrink exponentially with T: each doubling of the")
    print("horizon multiplies the interior deviation by roughly "
          f"exp(-{lam_ref:.3f} * T/2).")


if __name__ == "__main__":
    run()
