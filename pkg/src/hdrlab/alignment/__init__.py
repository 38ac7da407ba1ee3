"""Distribution alignment analysis: histograms, KL, latent codecs, roundtrips."""

from .analysis import (ErrorStats, latent_distributions, latent_kl, pixel_distributions, pixel_kl,
                       roundtrip, roundtrip_corpus, roundtrip_error_curve)
from .codecs import (CODEC_NAMES, CodecError, ExternalCodec, IdentityCodec, LatentCodec, QuantizeCodec,
                     SurrogateCodec, SurrogateParams, make_codec)
from .histogram import Histogram, build_histogram, kl_divergence
from .latent import LatentTensor

__all__ = [
    "ErrorStats", "latent_distributions", "latent_kl", "pixel_distributions", "pixel_kl",
    "roundtrip", "roundtrip_corpus", "roundtrip_error_curve",
    "CODEC_NAMES", "CodecError", "ExternalCodec", "IdentityCodec", "LatentCodec", "QuantizeCodec",
    "SurrogateCodec", "SurrogateParams", "make_codec",
    "Histogram", "build_histogram", "kl_divergence", "LatentTensor",
]
