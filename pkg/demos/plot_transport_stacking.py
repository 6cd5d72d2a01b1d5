"""
Carrying a stacking demonstration to new block positions
=========================================================

A synthetic stacking demonstration is generalized to a layout where two of
the three blocks move independently of each other. The keypoints are first
snapped onto the demonstrated path, then a space deformation fitted on them
carries every pose along.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from hybridskill import generalize, get_scenario

scenario = get_scenario("stacking")
demo = scenario.demonstration()
variant = scenario.variant_names.index("non_rigid")
source, target = scenario.keypoints(variant)

gen = generalize(demo, source, target)
moved = gen.demonstration

print("keypoint shifts after projection (m):")
print(np.round(gen.shifts, 4))
print("fit residuals (m):", np.abs(gen.residuals).max())

# %%
# Distance from each target block to the nearest point of the new path.
dists = np.linalg.norm(moved.positions[None] - target.points[:, None], axis=2).min(axis=1)
print("closest approach to each target keypoint (m):", dists)

fig = plt.figure(figsize=(6, 5))
ax = fig.add_subplot(projection="3d")
ax.plot(*demo.positions.T, color="0.6", label="demonstration")
ax.plot(*moved.positions.T, color="C0", label="generalized")
ax.scatter(*source.points.T, color="0.4", marker="s", label="source blocks")
ax.scatter(*target.points.T, color="C3", marker="s", label="target blocks")
ax.legend(loc="upper left")
fig.savefig("transport_stacking.png", dpi=120)
