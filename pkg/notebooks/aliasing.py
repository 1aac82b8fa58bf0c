# %% [markdown]
# # Grid sampling vs raytrace pooling on a thin plate
#
# A one-voxel-thick diagonal plate is the worst case for fixed-step depth
# sampling: with too few samples most rays step over the plate entirely.
# Raytrace pooling visits every voxel a ray crosses, so it cannot miss.

# %%
import numpy as np

from voxrecon.datasets import ring_cameras
from voxrecon.experiments import compare_projectors
from voxrecon.voxel import gen_shape

plate = gen_shape("thin_plate", 32)
cam = ring_cameras(1, width=32, height=32)[0]
for row in compare_projectors(plate, cam):
    print(row.line())

# %% [markdown]
# AP climbs with the sample count and saturates once the step is shorter
# than a voxel. The same comparison across azimuths; at 45 and 225 degrees
# the camera sits in the plate's plane and nothing is visible.

# %%
for az in range(0, 360, 45):
    cam = ring_cameras(1, width=32, height=32, azimuth_offset=az)[0]
    rows = compare_projectors(plate, cam, (8, 16, 32, 64))
    print(az, [round(r.ap, 3) for r in rows[1:]], "rp pixels", rows[0].nonzero)
