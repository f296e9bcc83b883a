"""2x transpose convolution without zero insertion.

The naive oracle upsamples by zero insertion, pads and runs a valid
convolution. The fused path splits the kernel into four parity sub-kernels
and convolves the original input directly, skipping every multiplication by
an inserted zero while producing bit-identical output.
"""

__version__ = "0.1.0"

from .analysis import (
    GAN_LAYERS,
    LayerShape,
    OpCounts,
    Table4Report,
    count_ops_fused,
    count_ops_naive,
    memory_saved_bytes,
    table4_report,
)
from .exceptions import ContractError, ParseError, SegconvError, ShapeError, StateError
from .fused import (
    default_workers,
    partition_work,
    transpose_conv,
    transpose_conv_fused,
    transpose_conv_fused_parallel,
)
from .images import read_image, write_image
from .reference import MultCounter, TConvGeometry, conv2d_valid, geometry, transpose_conv_naive
from .segregation import CLASSES, SubKernelSet, active_taps, segregate, sub_kernel_dims
from .tensor import (
    pad,
    read_tensor,
    tensors_equal_approx,
    tensors_equal_exact,
    track_allocations,
    upsample2x,
    write_tensor,
)

__all__ = [
    "CLASSES",
    "ContractError",
    "GAN_LAYERS",
    "LayerShape",
    "MultCounter",
    "OpCounts",
    "ParseError",
    "SegconvError",
    "ShapeError",
    "StateError",
    "SubKernelSet",
    "TConvGeometry",
    "Table4Report",
    "active_taps",
    "conv2d_valid",
    "count_ops_fused",
    "count_ops_naive",
    "default_workers",
    "geometry",
    "memory_saved_bytes",
    "pad",
    "partition_work",
    "read_image",
    "read_tensor",
    "segregate",
    "sub_kernel_dims",
    "table4_report",
    "tensors_equal_approx",
    "tensors_equal_exact",
    "track_allocations",
    "transpose_conv",
    "transpose_conv_fused",
    "transpose_conv_fused_parallel",
    "transpose_conv_naive",
    "upsample2x",
    "write_image",
    "write_tensor",
]
