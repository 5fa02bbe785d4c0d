"""
Sketching one weight matrix
===========================

A dense layer is replaced by a few shared values per row plus a packed
index per weight. This walk-through sketches a random layer against
synthetic calibration inputs and compares it with plain rounding.
"""

import numpy as np

import sketchkit as sk

rng = sk.make_rng(0)

# A 32 x 128 layer and 512 calibration inputs of width 128.
w = rng.standard_normal((32, 128))
x = sk.synth_calibration(128, 512, rng, "heavy_tail")

# The calibration Hessian drives both the clustering weights and the
# error compensation.
hf = sk.build_hessian(x)
print(f"Hessian {hf.dim}x{hf.dim}, dampening {hf.damp_lambda:.3g}")

# %%
# Sketch at 3 bits (8 shared values per group) with two groups per row.
cfg = sk.SketchConfig(bits=3, gpr=2, block_b=32)
sm = sk.sketch_matrix(w, hf, cfg)
print(f"shared values: {sm.sketched.shape}, indices: {sm.indices.shape}")

w_hat = sk.reconstruct(sm)
print("distinct values in row 0, first group:", np.unique(w_hat[0, :64]).size)

# %%
# Output error on the calibration set, with and without compensation.
plain = sk.sketch_matrix(w, hf, cfg, compensate=False)
err = sk.row_objective(w, w_hat, x)
err_plain = sk.row_objective(w, sk.reconstruct(plain), x)
print(f"||WX - W_hat X||^2  compensated: {err:.1f}   plain rounding: {err_plain:.1f}")

# %%
# The forward pass expands the sketch one row chunk at a time.
y = sk.forward(sm, x[:, :4])
print("forward output shape:", y.shape)

# %%
# Storage: a float32 table per group plus bit-packed indices.
blob = sk.formats.encode_skt1(sm)
print(f"SKT1 size {len(blob):,} bytes vs float16 dense {w.size * 2:,} bytes")
