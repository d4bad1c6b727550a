"""Voxel-based absolute multi-person 3D pose estimation on synthesized data.

The pipeline: a synthesized geometry representation (joint heatmaps, box
embeddings, root depths) is projected into a depth-gated coarse voxel volume
to locate people, then a fine person-centred volume is decoded into a full
3D pose by expectation over normalized heatmaps. Training, evaluation and
the generalization protocols run from the command line (see cli).
"""

import os as _os
import sys as _sys

# the conv kernels are loops of skinny matmuls; multi-threaded BLAS slows
# them several-fold, so pin the pool before numpy loads its backend
if "numpy" not in _sys.modules:
    for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, "1")

__version__ = "0.1.0"
