"""Central-difference error of the Jacobian formula as the step is halved.

    python scripts/step_halving.py [--n 5] [--seed 0]
"""
import argparse

import numpy as np

from endo_capm.equilibrium import MarketParams
from endo_capm.market_structure import dirichlet_weights, sample_constrained_beta
from endo_capm.sensitivity import FROZEN, PROJECTED, endogenous_jacobian, fd_jacobian_oracle, tangent_jacobian

ap = argparse.ArgumentParser()
ap.add_argument("--n", type=int, default=5)
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

w = dirichlet_weights(args.n, seed=args.seed)
b = sample_constrained_beta(w, (-2, 3), seed=args.seed + 1)
params = MarketParams(w, b, 1.0)
jac = endogenous_jacobian(params)
tan = tangent_jacobian(params, jac)

prev = {}
print(f"{'step':>10} {'frozen err':>12} {'ratio':>6} {'projected err':>14} {'ratio':>6}")
for k in range(16):
    h = 0.1 * 2.0 ** -k
    e = {
        FROZEN: np.max(np.abs(fd_jacobian_oracle(params, h, FROZEN).matrix - jac)),
        PROJECTED: np.max(np.abs(fd_jacobian_oracle(params, h, PROJECTED).matrix - tan)),
    }
    ratio = {m: (prev[m] / e[m] if m in prev and e[m] > 0 else float("nan")) for m in e}
    print(f"{h:10.3e} {e[FROZEN]:12.3e} {ratio[FROZEN]:6.2f} {e[PROJECTED]:14.3e} {ratio[PROJECTED]:6.2f}")
    prev = e
