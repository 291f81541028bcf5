"""tubegen: paired synthetic tube-image/mask generation and evaluation.

The package covers the full desk-scale pipeline: procedural tube-mask
generation from location priors, two direct renderers, a differentiable
multi-scale tubular-shape filter whose masked mean response drives a
gradient-descent in-painter, and the metric/loss suite for scoring
tubular segmentations.
"""

from .core import (
    BinaryMask,
    Image,
    Kernel1D,
    RngStream,
    convolve_separable,
    dilate,
    erode,
    gaussian_kernel,
    load_image,
    load_mask,
    save_image,
    save_mask,
)
from .errors import (
    ConfigError,
    EmptyMaskError,
    FormatError,
    InvalidParameterError,
    NumericalFailureError,
    SamplingFailureError,
    TubegenError,
    UndefinedMetricError,
)
from .frangi import (
    FrangiParams,
    HessianField,
    VesselnessMap,
    blobness,
    eigen_2x2,
    grad_masked_mean_response,
    hessian_at_scale,
    masked_mean_response,
    masked_response_and_grad,
    multiscale_vesselness,
    structureness,
    vesselness_at_scale,
)
from .maskgen import (
    LocationPrior,
    Polyline,
    TubeSpec,
    default_priors,
    generate_fake_mask,
    rasterize_polyline,
    sample_control_points,
    spline_interpolate,
)
from .metrics import (
    ClassTargets,
    MetricsReport,
    bce_loss,
    cl_dice,
    cycle_loss,
    dice,
    dice_loss,
    hausdorff,
    lsgan_losses,
    minimax_value,
    precision_recall,
    skeletonize,
    soft_dice,
)
from .optimize import (
    InpaintConfig,
    OptimizationTrace,
    TargetResponse,
    estimate_target_response,
    inpaint,
    intensity_loss,
    tube_shape_loss,
)
from .render import (
    HandDrawnParams,
    SmoothedMaskParams,
    render_hand_drawn,
    render_smoothed_mask,
)

__version__ = "0.1.0"
