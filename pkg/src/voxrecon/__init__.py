"""Voxel reconstruction from silhouettes with a learned shape-manifold barrier."""
from .geometry import BehindCameraError, Camera, Ray, look_at, orbit_camera, pixel_ray, project_point
from .voxel import LogitGrid, VoxelGrid, binarize, gen_shape, occupancy, shape_pool
from .projection import MaskImage, gs_backward, gs_forward, rp_backward, rp_forward, traverse
from .losses import ViewSet, pixel_ce, reproj_grad, reproj_loss, render_views
from .baselines import carve, nn_retrieve
from .barrier import BarrierConfig, Discriminator, penalty, penalty_grad, update_penalty
from .solver import SolverConfig, estimate_viewpoint, reconstruct, reconstruct_unconstrained
from .metrics import average_precision, export_colored, iou

__version__ = "0.1.0"
