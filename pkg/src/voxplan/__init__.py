"""voxplan: semantic voxel grids to executable voxel-world build plans.

Pipeline direction: per-view grids -> fused scene -> density centers ->
per-class clustering -> template retrieval -> Clear/Fill/SetBlock plan ->
live RCON dispatch. Dataset direction: world files + camera poses ->
view-volume crops -> ground-truth occupancy grids.
"""

__version__ = "0.1.0"
