"""Monte Carlo shoot-out of the five detectors in white noise.

Targets appear at uniformly random subpixel positions. The grid-search
(GLRT), marginalizing (ELRT/ALRT), and subspace (SM-GLRT) detectors all
account for the unknown position; the pixel matched filter (GPMF) does
not and pays for it. Small trial counts keep this quick — the acceptance
suite runs the full-scale version.
"""

import numpy as np

from subpixdet.harness import ExperimentConfig, run_roc

config = ExperimentConfig(snr_db=16.2, n_h0=20_000, n_h1=20_000, seed=0,
                          jobs=2)
curves = {c.detector: c for c in run_roc(config)}

print(f"White noise, SNR = {config.snr_db} dB, "
      f"{config.n_h1:,} trials per hypothesis\n")
pfa_grid = (1e-3, 1e-2, 1e-1)
print("  detector " + "".join(f"   Pd@{pfa:g}" for pfa in pfa_grid))
for name, curve in curves.items():
    cells = "".join(f"{float(curve.pd_at_pfa(pfa)):10.3f}" for pfa in pfa_grid)
    print(f"  {name:<9}" + cells)

gap = float(curves["GLRT"].pd_at_pfa(1e-3) - curves["GPMF"].pd_at_pfa(1e-3))
print(f"\nGLRT beats the position-blind GPMF by {gap:+.3f} Pd at Pfa=1e-3.")
print("ELRT and its cheap 3x3 quadrature ALRT track the GLRT closely.")
