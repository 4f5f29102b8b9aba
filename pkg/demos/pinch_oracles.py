"""Print the pinch and infinite-pinch oracle diagnostics.

The finite pinch angle law has a repelling equilibrium, so trajectories leave
the ansatz region before t_bar; the infinite pinch reaches it with z unbounded.
"""

import numpy as np

from framedflow.oracles import infinite_pinch_oracle, pinch_oracle


def main():
    eq = np.arccos(np.sqrt(2) - 1)
    print(f"pinch equilibrium theta* = {eq:.6f}")
    for phi in (0.5, eq - 1e-3, eq + 1e-3, 1.3):
        i = pinch_oracle(1.0, phi).info
        print(f"phi={phi:.4f}  t_bar={i['t_bar']:.4f}  stopped t={i['t_end']:.4f} "
              f"({i['stop_reason']})  z/sqrt(t_bar)={i['z_ratio']:.4f}")
    ip = infinite_pinch_oracle(1.0).info
    print(f"infinite pinch: t_bar={ip['t_bar']:.6f}  rho(t_bar)={ip['rho_at_t_bar']}  "
          f"z_last={ip['z_last']:.3f}  rho^2 ODE err={ip['rho2_ode_error']:.2e}")


if __name__ == "__main__":
    main()
