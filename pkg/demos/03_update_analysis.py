"""
Which updates can a sketch represent?
=====================================

Given a base matrix and a tuned one, compare the best low-rank
approximation of the update with its projection onto the span of the
sketch mapping, at equal parameter budgets.
"""

import numpy as np

import sketchkit as sk

rng = sk.make_rng(2)
n = 128
w = rng.standard_normal((n, n))
hf = sk.build_hessian(sk.synth_calibration(n, 256, rng))
cfg = sk.SketchConfig(block_b=32)
ratios = [4, 8, 16]

updates = {
    "rank-1": np.outer(rng.standard_normal(n), rng.standard_normal(n)),
    "flat spectrum": sk.theory.synth_powerlaw(n, 0.0, rng),
    "power law 0.8": sk.theory.synth_powerlaw(n, 0.8, rng),
}

# %%
print(f"{'update':>14} {'ratio':>6} {'low-rank':>9} {'sketch':>9}")
for name, delta in updates.items():
    rep = sk.compare_sweep(w, w + delta, hf, ratios, cfg)
    for a, lo, s in zip(rep.compression_ratios, rep.lowrank_err, rep.sketch_err):
        print(f"{name:>14} {a:6g} {lo:9.4f} {s:9.4f}")

# %%
# The CSV form records the parameter accounting in its header.
print(rep.to_csv(["demo"]))
