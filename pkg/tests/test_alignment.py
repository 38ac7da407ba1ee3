import numpy as np
import pytest

from hdrlab import synth
from hdrlab.alignment import (IdentityCodec, QuantizeCodec, SurrogateCodec, latent_kl, pixel_distributions,
                              pixel_kl, roundtrip, roundtrip_corpus, roundtrip_error_curve)
from hdrlab.alignment.analysis import prior_encoded, sdr_values
from hdrlab.core import RadianceFrame
from hdrlab.transfer import TransferFn, decode_values, encode, to_model_range


@pytest.fixture(scope="module")
def small_corpus():
    return synth.lognormal_clip(seed=7, frames=12, height=32, width=32)


@pytest.fixture(scope="module")
def small_prior():
    return synth.sdr_prior(seed=8, frames=12, height=32, width=32)


def linearised(prior):
    return [RadianceFrame(decode_values("srgb-gamma", sdr_values(s))) for s in prior]


def test_pixel_kl_zero_for_same_distribution(small_prior):
    assert pixel_kl("srgb-gamma", linearised(small_prior), small_prior) < 1e-3


def test_pixel_kl_ordering(small_corpus, small_prior):
    kl = {fn: pixel_kl(fn, [small_corpus], small_prior) for fn in ("logc3", "hlg", "aces-linear")}
    assert kl["aces-linear"] > kl["logc3"]
    assert kl["hlg"] > kl["logc3"]


def test_aces_linear_collapses_near_zero(small_corpus):
    vals = np.concatenate([encode("aces-linear", f).pixels.ravel() for f in small_corpus.frames])
    assert np.mean(vals < 0.001) >= 0.99


def test_pixel_kl_order_and_thread_independent(small_corpus, small_prior):
    frames = list(small_corpus.frames)
    a = pixel_kl("pq", frames, small_prior, threads=1)
    b = pixel_kl("pq", frames[::-1], small_prior[::-1], threads=4)
    assert a == b


def test_latent_kl_identity_zero(small_prior):
    assert latent_kl(IdentityCodec(), "srgb-gamma", linearised(small_prior), small_prior) < 1e-3


def test_latent_kl_surrogate_ordering(small_corpus, small_prior):
    codec = SurrogateCodec.fit([to_model_range(prior_encoded(s)) for s in small_prior])
    kl = {fn: latent_kl(codec, fn, [small_corpus], small_prior) for fn in ("logc3", "pq", "hlg")}
    assert kl["hlg"] > 10 * kl["logc3"]
    assert 0.1 < kl["pq"] / kl["logc3"] < 10


def test_latent_kl_permutation_invariant(small_corpus, small_prior):
    frames = list(small_corpus.frames)
    codec = QuantizeCodec(256)
    assert latent_kl(codec, "logc3", frames, small_prior) == \
        latent_kl(codec, "logc3", frames[::-1], small_prior[::-1], threads=3)


def test_empty_corpus_rejected(small_prior):
    with pytest.raises(ValueError):
        pixel_kl("logc3", [], small_prior)
    with pytest.raises(ValueError):
        pixel_distributions("logc3", [RadianceFrame(np.ones((2, 2, 3)))], [])


def test_identity_roundtrip_logc3(radiance):
    _, stats = roundtrip(IdentityCodec(), "logc3", radiance)
    assert stats.max_rel_error <= 1e-4
    assert stats.pu21_psnr >= 60


def test_hlg_clamp_loses_signal():
    x = RadianceFrame(np.full((8, 8, 3), 8.0))
    _, stats = roundtrip(QuantizeCodec(256), "hlg", x)
    # scalar oracle: E clamps to 1, so 8 -> about 1
    assert stats.mean_rel_error >= 0.8
    assert stats.mean_rel_error == pytest.approx(7 / 8, abs=0.01)


def test_small_frames_skip_ssim():
    _, stats = roundtrip(IdentityCodec(), "pq", RadianceFrame(np.ones((4, 4, 3))))
    assert stats.ssim is None and stats.pu21_ssim is None


def test_roundtrip_corpus_matches_threads(small_corpus):
    a = roundtrip_corpus(QuantizeCodec(256), "pq", [small_corpus], threads=1)
    b = roundtrip_corpus(QuantizeCodec(256), "pq", [small_corpus], threads=6)
    assert a == b


def test_error_curve_identity():
    table = roundtrip_error_curve(IdentityCodec(), "logc3", np.geomspace(1e-3, 50, 40))
    assert table.shape == (40, 2)
    assert np.all(table[:, 1] <= 1e-4)


def test_error_curve_divergences():
    q = QuantizeCodec(256)
    hlg = roundtrip_error_curve(q, "hlg", [0.5, 8.0])[:, 1]
    assert hlg[1] > 10 * hlg[0]
    aces = roundtrip_error_curve(q, "aces-linear", [1e-3])[0, 1]
    logc = roundtrip_error_curve(q, "logc3", [1e-3])[0, 1]
    assert aces > 10 * logc


def test_logc3_error_bounded_above_the_toe():
    # Above ~1e-2 the log segment keeps relative error well under 5%.
    x = np.geomspace(1e-2, 16, 200)
    err = roundtrip_error_curve(QuantizeCodec(256), "logc3", x)[:, 1]
    assert err.max() < 0.05


def test_logc3_toe_error_matches_quantization_floor():
    # In the linear toe, a mid-rise step of 2/256 in model range is 1/256 in
    # encoded units; the worst-case radiance error is half a step divided by
    # the toe slope, so relative error ~ (1/512)/e / x.
    x = np.geomspace(1e-3, 1e-2, 200)
    err = roundtrip_error_curve(QuantizeCodec(256), "logc3", x)[:, 1]
    bound = (1 / 512) / 5.367655 / x
    assert np.all(err <= bound * 1.001 + 1e-6)
    assert np.mean(err) > 0.05 * 0.5


def test_error_curve_rejects_nonpositive():
    with pytest.raises(ValueError):
        roundtrip_error_curve(IdentityCodec(), "logc3", [0.0, 1.0])
