"""
Riemann invariants, characteristic speeds and conservation laws
===============================================================

At a field point the integral F(phi) is a trigonometric polynomial of degree N.
Its 2N critical values are Riemann invariants of the system, and the slopes of
the critical directions are the characteristic speeds. Many density pairs
(P, Q) give conservation laws P_x + Q_y = 0.

Run with ``python3 demos/02_riemann_invariants_and_laws.py``.
"""

# %%
import numpy as np

from magflow.chars import char_data, jacobian_complex, value_gap
from magflow.claws import (
    bracket_determinant, catalog, fake_law, g_densities, g_independence, validity_check,
)
from magflow.sampling import random_point
from magflow.system import characteristic_speeds

rng = np.random.default_rng(2024)
p = random_point(rng, 2, min_cos=0.2, min_value_gap=0.5)
cd = char_data(p)

# %%
# Critical points on the unit circle: their product is -1 on the hyperbolic region.
for k in range(cd.angles.size):
    print(f"phi_{k + 1} = {cd.angles[k]:.6f}  {cd.kinds[k]:8s}  r = {cd.invariants[k]: .6f}"
          f"  tan = {cd.speeds[k]: .6f}")
print("product of critical points:", np.round(np.prod(cd.points), 12))

# %%
# The generalized eigenvalues of the system matrices are exactly those tangents.
print("eigenvalues:", np.round(np.sort(characteristic_speeds(p).real), 10))

# %%
# Jacobian of the invariants: a Vandermonde determinant, never zero here.
M, detM, rhs = jacobian_complex(p)
print(f"det M = {detM:.6f}, Vandermonde form = {rhs:.6f}")

# %%
# Validity of every catalogued law: the divergence over all solution jets at p.
for law in catalog(2) + [fake_law(2)]:
    print(f"{law.name:>10s}  {validity_check(p, law):.2e}")

# %%
# 2N more laws from level points near the critical points. Their Jacobian is
# nonzero, and a rescaled version approaches det M like sqrt(eps).
gap = value_gap(cd)
print("det dG at eps = 1e-3 gap:", g_independence(p, 1e-3 * gap))
for f in (1e-2, 1e-3, 1e-4, 1e-5):
    b = bracket_determinant(p, f * gap)
    print(f"eps/gap = {f:.0e}: relative gap to det M = {abs(b - detM) / abs(detM):.2e}")
print("G law validity:", max(validity_check(p, law, fd=True) for law in g_densities(p)))
