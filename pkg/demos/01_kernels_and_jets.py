"""Walk through the derivative-of-Gaussian filters and the local jet.

Run with ``python demos/01_kernels_and_jets.py``. Everything prints to the
terminal; no plotting library is needed.
"""

# %%
import math

import numpy as np

from jetpat import compute_jet, contrast_normalize, dtg_kernel_2d, dtg_taps_1d, rotate_jet

np.set_printoptions(precision=4, suppress=True, linewidth=110)

# %% [markdown]
# The 1-D taps are sampled Gaussian derivatives, L1-normalized. Odd orders
# are antisymmetric, even orders symmetric, and both derivative orders sum
# to zero so that flat regions give no response.

# %%
for m in range(3):
    taps = dtg_taps_1d(m, sigma=1.0)
    print(f"order {m}: {taps}  sum={taps.sum():+.2e}  L1={np.abs(taps).sum():.3f}")

# %% [markdown]
# A 2-D kernel is the outer product of an x-factor and a y-factor, so every
# channel can be computed with two 1-D passes instead of one dense 9x9 pass.

# %%
k = dtg_kernel_2d(1, 1, sigma=1.0)
print("mixed (1,1) kernel, centre 5x5 block:")
print(k.dense[2:7, 2:7])

# %%
# A ramp rising to the right: only the x-derivative channel lights up.
ramp = np.tile(np.arange(32, dtype=float), (32, 1))
jet = compute_jet(ramp)
print("jet at the centre of a ramp:", jet.at(16, 16))

# %% [markdown]
# The jet of a rotated image is the rotated jet: the gradient turns like a
# vector and the Hessian like a matrix. A quarter turn with ``np.rot90(k=-1)``
# corresponds to theta = +pi/2 in this coordinate frame (y points down).

# %%
rng = np.random.default_rng(0)
patch = rng.uniform(0, 255, (32, 32))
j = compute_jet(patch).channels
j_turned = compute_jet(np.rot90(patch, k=-1)).channels
predicted = rotate_jet(np.rot90(j, k=-1, axes=(1, 2)), math.pi / 2)
print("max error of the rotation law on the interior:",
      np.abs(predicted - j_turned)[:, 5:-5, 5:-5].max())

# %% [markdown]
# Contrast normalization compresses the jet length logarithmically while
# keeping its direction, so strong edges do not swamp weak texture.

# %%
normed = contrast_normalize(compute_jet(patch))
before = np.linalg.norm(j, axis=0)
after = np.linalg.norm(normed.channels, axis=0)
print(f"jet length range before: {before.min():.1f}..{before.max():.1f}, "
      f"after: {after.min():.2f}..{after.max():.2f}")
