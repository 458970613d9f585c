"""Differentiable Fast Marching on 2D grids.

Geodesic distance maps for isotropic metric potentials, their derivatives
with respect to the potential (forward subgradient rows and reverse adjoint
sweeps), sigmoid-relaxed geodesic-ball masks, and an ADAM loop that fits a
potential so its unit ball matches a target segmentation mask.

The solver kernels run compiled (Cython) when the extension is available
and fall back to pure Python otherwise; see ``diffmarch._backend.BACKEND``.
"""

from ._backend import BACKEND
from .errors import FieldParseError, NumericalError, ValidationError
from .fields_io import read_field, read_mask_image, write_field
from .fitting import (
    AdamState,
    FitConfig,
    FitTrace,
    adam_step,
    ball_fit_loss,
    barycenter_from_heatmap,
    barycenter_from_mask,
    bce_score,
    dice_bce_loss,
    dice_score,
    fit_potential,
    gaussian_seed_map,
    hausdorff_distance,
    iou_score,
    nearest_node,
    threshold_mask,
)
from .gradient import (
    GradientField,
    SparseRow,
    fd_gradient,
    random_smooth_potential,
    subgradient_march,
    vjp,
)
from .grid import (
    AXIS_X,
    AXIS_Y,
    Grid2D,
    PotentialField,
    ScalarField,
    SeedSet,
    make_grid,
    neighbors,
    square_potential,
)
from .mask import (
    SoftMask,
    normalize_potential,
    normalize_potential_vjp,
    potential_mass,
    soft_mask,
    soft_mask_vjp,
)
from .solver import (
    DistanceField,
    UpdateCase,
    UpdateRecord,
    fast_march,
    geodesic_distance_to_set,
    upwind_update,
)

__version__ = "0.1.0"
