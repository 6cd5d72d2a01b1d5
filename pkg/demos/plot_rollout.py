"""
Replaying a generalized demonstration
=====================================

The robot follows attractor poses picked from the demonstration. Each pick
balances spatial proximity against progress along the demonstration, so the
replay recovers from a perturbed start without skipping ahead.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from hybridskill import FollowerState, Pose, generalize, get_scenario, run_rollout

scenario = get_scenario("narrow_opening")
demo = scenario.demonstration()
source, target = scenario.keypoints(scenario.variant_names.index("object_moved"))
moved = generalize(demo, source, target).demonstration

start = FollowerState(Pose(moved.positions[0] + [0.03, -0.02, 0.04], moved.orientations[0]), np.array(moved.servos[0]))
trace = run_rollout(moved, alpha=0.3, start=start)
print(f"done={trace.done} steps={len(trace)} final_error={trace.final_error:.2e}")

# %%
# The attractor index advances monotonically while the robot catches up.
fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.5))
ax0.plot(moved.positions[:, 0], moved.positions[:, 2], color="0.6", label="generalized demo")
ax0.plot(trace.positions[:, 0], trace.positions[:, 2], color="C0", label="rollout")
ax0.set_xlabel("x (m)")
ax0.set_ylabel("z (m)")
ax0.legend()
ax1.plot(trace.attractor_indices)
ax1.set_xlabel("step")
ax1.set_ylabel("attractor index")
fig.tight_layout()
fig.savefig("rollout.png", dpi=120)
