"""HDR/SDR representation toolkit.

Transfer functions, distribution-alignment analysis, degradation pipelines
for training-pair synthesis, and HDR quality metrics.
"""

from .core import Clip, EncodedFrame, ModelFrame, RadianceFrame, SdrFrame, luminance
from .transfer import TransferFn, decode, encode, from_model_range, to_model_range, transfer_curve

__version__ = "0.1.0"

__all__ = [
    "Clip", "EncodedFrame", "ModelFrame", "RadianceFrame", "SdrFrame", "luminance",
    "TransferFn", "decode", "encode", "from_model_range", "to_model_range", "transfer_curve",
]
