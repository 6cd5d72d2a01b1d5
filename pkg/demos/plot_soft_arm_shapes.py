"""
Soft arm shapes over the servo range
====================================

The soft segment is drawn as a constant-curvature, constant-torsion tube.
The first servo bends the arm, the second twists it. Arc length stays fixed
whatever the inputs, and the radius tapers from base to tip.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from hybridskill import soft_arm_shape

fig = plt.figure(figsize=(6, 5))
ax = fig.add_subplot(projection="3d")
for bend in np.linspace(0.0, 2 * np.pi, 5):
    for twist in (0.0, 2 * np.pi):
        shape = soft_arm_shape((bend, twist))
        ax.plot(*shape.centerline.T, linestyle="-" if twist == 0 else "--")
        print(f"bend={bend:.2f} twist={twist:.2f} length={shape.length:.9f} m")

# %%
# The tube radius shrinks linearly along the arc.
shape = soft_arm_shape((np.pi, 0.0))
print("base/tip radius (mm):", 1e3 * shape.radii[0], 1e3 * shape.radii[-1])
fig.savefig("soft_arm_shapes.png", dpi=120)
