"""File formats: EXR subset, PFM, 8-bit PNG, ``.lat`` latents, reports."""

from .errors import FormatError, UnsupportedFeature
from .exr import read_exr, read_exr_pixels, read_exr_with_attributes, write_exr
from .latent import read_latent, write_latent
from .pfm import read_pfm, write_pfm
from .reports import REPORT_SCHEMA, write_csv, write_json
from .sdr import read_sdr, write_sdr

__all__ = [
    "FormatError", "UnsupportedFeature",
    "read_exr", "read_exr_pixels", "read_exr_with_attributes", "write_exr",
    "read_latent", "write_latent",
    "read_pfm", "write_pfm",
    "read_sdr", "write_sdr",
    "REPORT_SCHEMA", "write_csv", "write_json",
]
