"""
Fine-tuning only the shared values
==================================

After sketching, the index map is frozen and the small table of shared
values is the only thing trained. Here a sketched layer is pulled
toward a teacher layer by regression on random inputs.
"""

import numpy as np

import sketchkit as sk

rng = sk.make_rng(1)
rows, cols = 16, 64

base = rng.standard_normal((rows, cols))
x_cal = sk.synth_calibration(cols, 256, rng)
sm = sk.sketch_matrix(base, sk.build_hessian(x_cal), sk.SketchConfig(bits=2, gpr=2, block_b=16))
print("trainable values:", sm.trainable_params(), "of", rows * cols)

# A teacher that differs from the base by a small dense update.
teacher = base + 0.05 * rng.standard_normal((rows, cols))
task = sk.TrainTask(teacher, rng.standard_normal((cols, 128)))

# %%
trained, losses = sk.train(sm, task, sk.OptimState(lr=1e-2, optimizer="adam"), steps=300)
for step in (0, 10, 50, 100, 300):
    print(f"step {step:4d}  loss {losses[step]:.4f}")
# The plateau is the part of the teacher the frozen map cannot express.

# %%
# The realized update is constant on every cluster of the frozen map.
d = sk.delta_realized(sm, trained)
row, group = 0, slice(0, 32)
for j in range(sm.k):
    vals = d[row, group][sm.indices[row, group] == j]
    print(f"cluster {j}: {vals.size:2d} weights moved by {vals[0] if vals.size else 0:+.4f}")
assert np.array_equal(trained.indices, sm.indices)
