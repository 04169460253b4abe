"""
Is the diagonal system semi-Hamiltonian?
========================================

In Riemann invariants the N = 2 system reads (r_i)_x + lambda_i(r) (r_i)_y = 0.
The speeds lambda(r) are only available through a Newton inversion, so the
symmetry d_j Gamma^k_ki = d_i Gamma^k_kj is checked with nested differences,
each against its own Richardson noise floor.

Run with ``python3 demos/03_semi_hamiltonian.py``.
"""

# %%
import numpy as np

from magflow.sampling import random_chart_point, random_point
from magflow.semiham import (
    DiagonalChart, SyntheticChart, all_semiham_residuals, chart_scale, lame_two_path,
    pt_pattern_check,
)

rng = np.random.default_rng(7)
chart = DiagonalChart(random_chart_point(rng))
print("invariants at the centre:", np.round(chart.r0, 6), " chart radius:", chart.radius)

# %%
# All twelve index triples: residual, floor and the size of the derivatives.
results = all_semiham_residuals(chart)
scale = chart_scale(results)
for s in results:
    print(f"(i,j,k)=({s.i},{s.j},{s.k})  residual {s.residual:.1e}  floor {s.floor:.1e}"
          f"  {'ok' if s.passed else 'EXCEEDS'}")
print(f"derivative scale {scale:.2e}, largest floor/scale "
      f"{max(s.floor for s in results) / scale:.1e}")

# %%
# A diagonal system that is not semi-Hamiltonian, to show the test can fail.
bad = SyntheticChart(lambda r: np.array([r[1] * r[2], r[0], r[0] + r[1]]), [0.5, 1.0, 1.0])
worst = max(all_semiham_residuals(bad), key=lambda s: s.residual / s.floor)
print(f"control: residual/floor = {worst.residual / worst.floor:.1e}")

# %%
# Lame coefficients integrated along two staircases to the same corner agree
# for the real chart and disagree for the control.
print("Lame two-path gap, real chart:", lame_two_path(chart, 0, 1, 2, 0.5 * chart.radius))
print("Lame two-path gap, control:   ", lame_two_path(bad, 1, 0, 2, 0.2))

# %%
# The two quadratic laws share the density -fg/2.
report = pt_pattern_check([random_point(rng, 2) for _ in range(50)])
print(report.conclusion, f"(perturbed control {report.perturbed_validity:.1e})")
