import hashlib
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdrlab import synth
from hdrlab.core import Clip, RadianceFrame, SdrFrame
from hdrlab.degrade import (ConfigError, DegradeConfig, counter_uniform, degenerate, degrade_codec,
                            degrade_contrast, degrade_selective_blur, draw_params, exposure_shift,
                            exposure_shift_pair, extremes_mask, make_training_pair, quant_table,
                            JPEG_LUMA_TABLE)
from hdrlab.tonemap import get_tonemapper, tonemap_clip_gamma
from hdrlab.transfer import decode, from_model_range


def sdr(px):
    return SdrFrame(np.asarray(px, dtype=np.uint8))


def checkerboard(square, h=64, w=64):
    yy, xx = np.mgrid[0:h, 0:w]
    v = np.where((yy // square + xx // square) % 2, 230, 25)
    return sdr(np.repeat(v[..., None], 3, axis=2))


@pytest.fixture(scope="module")
def clip():
    return synth.lognormal_clip(seed=3, frames=4, height=40, width=48)


def test_counter_rng_definition():
    d = hashlib.blake2b(struct.pack("<QQQ", 5, 6, 7), digest_size=8).digest()
    assert counter_uniform(5, 6, 7) == (int.from_bytes(d, "little") >> 11) / 2**53
    u = [counter_uniform(0, i, 0) for i in range(2000)]
    assert 0 <= min(u) and max(u) < 1
    assert abs(np.mean(u) - 0.5) < 0.03


def test_draws_within_ranges():
    cfg = DegradeConfig(seed=9)
    for i in range(200):
        d = draw_params(cfg, i)
        assert -2 <= d.ev <= 2 and 30 <= d.quality <= 90
        assert 1 <= d.gain <= 1.5 and 1 <= d.sigma <= 3


def test_quant_table_scaling():
    assert quant_table(JPEG_LUMA_TABLE, 50)[0, 1] == 11
    assert quant_table(JPEG_LUMA_TABLE, 10)[0, 1] == 55
    assert np.all(quant_table(JPEG_LUMA_TABLE, 100) == 1)
    with pytest.raises(ValueError):
        quant_table(JPEG_LUMA_TABLE, 0)


def test_codec_quality_100_near_lossless(sdr_frame=None):
    px = np.random.default_rng(2).integers(0, 256, (37, 45, 3))
    out = degrade_codec(sdr(px), 100).pixels.astype(int)
    assert np.max(np.abs(out - px)) <= 2


@pytest.mark.parametrize("q", [1, 10, 50, 90, 100])
@pytest.mark.parametrize("value", [0, 17, 128, 255])
def test_codec_uniform_unchanged(q, value):
    px = np.full((16, 24, 3), value)
    px[..., 1] = 255 - value
    out = degrade_codec(sdr(px), q).pixels.astype(int)
    assert np.max(np.abs(out - px)) <= 1


@pytest.mark.parametrize("square", [1, 2, 4])
def test_codec_destroys_checkerboard(square):
    s = checkerboard(square)
    mae = np.mean(np.abs(degrade_codec(s, 10).pixels.astype(int) - s.pixels))
    assert mae >= 5


def test_contrast_examples():
    px = np.arange(256).reshape(16, 16, 1).repeat(3, axis=2)
    assert np.array_equal(degrade_contrast(sdr(px), 1.0).pixels, px)
    assert degrade_contrast(sdr(np.full((1, 1, 3), 255)), 3.7).pixels[0, 0, 0] == 255
    assert degrade_contrast(sdr(np.full((1, 1, 3), 200)), 1.5).pixels[0, 0, 0] == 236
    with pytest.raises(ValueError):
        degrade_contrast(sdr(px), 0.5)


def test_selective_blur_examples(rng):
    s = sdr(rng.integers(0, 256, (20, 20, 3)))
    assert degrade_selective_blur(s, 0).pixels.tobytes() == s.pixels.tobytes()
    white = sdr(np.full((20, 20, 3), 255))
    assert np.array_equal(degrade_selective_blur(white, 2).pixels, white.pixels)


def test_midtones_untouched(rng):
    px = rng.integers(0, 256, (32, 32, 3)).astype(np.uint8)
    px[8:24, 8:24] = 128
    s = sdr(px)
    out = degrade_selective_blur(s, 2.5).pixels
    luma = (px / 255.0) @ np.array([0.2126, 0.7152, 0.0722])
    mid = (luma > 0.2) & (luma < 0.8)
    assert mid.sum() > 256
    assert np.array_equal(out[mid], px[mid])


def test_mask_shape():
    assert extremes_mask(np.array([0.0, 0.5, 1.0])).tolist() == [1.0, 0.0, 1.0]
    assert extremes_mask(np.array([0.85]))[0] == pytest.approx(0.5)


def test_exposure_shift_examples(radiance):
    assert exposure_shift(radiance, 0).pixels.tobytes() == radiance.pixels.tobytes()
    assert np.array_equal(exposure_shift(radiance, 1).pixels, radiance.pixels * 2)
    f = RadianceFrame(np.array([[[4.0, 1.0, 0.5]]]))
    assert exposure_shift(f, -1).pixels.max() == 2.0


@given(st.integers(-8, 8))
@settings(max_examples=17)
def test_exposure_shift_exact_powers_of_two(ev):
    px = np.random.default_rng(ev + 8).uniform(0, 10, (4, 4, 3)).astype(np.float32)
    out = exposure_shift(RadianceFrame(px), ev).pixels
    assert np.array_equal(out, px * np.float32(2.0**ev))


def test_exposure_shift_pair_regenerates_sdr(radiance):
    hdr, s = exposure_shift_pair(radiance, 1.0)
    assert np.array_equal(s.pixels, tonemap_clip_gamma(hdr).pixels)


def test_training_pair_deterministic_across_threads(clip):
    cfg = DegradeConfig(seed=1234)
    a = make_training_pair(clip, cfg, 5, threads=1)
    b = make_training_pair(clip, cfg, 5, threads=8)
    for x, y in zip(a.sdr.frames + a.target.frames, b.sdr.frames + b.target.frames):
        assert x.pixels.tobytes() == y.pixels.tobytes()
    assert a.draws == b.draws
    assert draw_params(cfg, 6) != a.draws


def test_training_pair_targets_in_model_range(clip):
    p = make_training_pair(clip, DegradeConfig(seed=1), 0)
    for m in p.target.frames:
        assert m.pixels.min() >= -1 and m.pixels.max() <= 1
        assert m.transfer == "logc3"


@pytest.mark.parametrize("tonemapper", ["clip-gamma", "reinhard"])
def test_physical_correspondence(clip, tonemapper):
    cfg = DegradeConfig(seed=77, tonemapper=tonemapper)
    p = make_training_pair(clip, cfg, 2)
    tm = get_tonemapper(tonemapper)
    for target, clean in zip(p.target.frames, p.clean_sdr.frames):
        rebuilt = tm(decode("logc3", from_model_range(target))).pixels.astype(int)
        assert np.max(np.abs(rebuilt - clean.pixels)) <= 1


def test_degenerate_config_is_plain_tonemap(clip):
    cfg = degenerate(DegradeConfig(seed=5))
    p = make_training_pair(clip, cfg, 0)
    for s, frame in zip(p.sdr.frames, clip.frames):
        assert np.max(np.abs(s.pixels.astype(int) - tonemap_clip_gamma(frame).pixels)) <= 2


def test_augmentations_commute_with_frame_order(clip):
    cfg = DegradeConfig(seed=3)
    rev = Clip(clip.frames[::-1])
    a = make_training_pair(clip, cfg, 1)
    b = make_training_pair(rev, cfg, 1)
    for x, y in zip(a.sdr.frames, b.sdr.frames[::-1]):
        assert x.pixels.tobytes() == y.pixels.tobytes()


def test_config_parse():
    cfg = DegradeConfig.parse("""
        # camera profile
        seed = 42
        codec_quality = 20, 60
        blur_sigma = 0.5, 2   # px
        tonemapper = reinhard
    """)
    assert cfg.seed == 42 and cfg.codec_quality == (20, 60) and cfg.blur_sigma == (0.5, 2.0)
    assert cfg.tonemapper == "reinhard" and cfg.contrast_gain == (1.0, 1.5)
    assert DegradeConfig.parse("seed = 1", seed=9).seed == 9


@pytest.mark.parametrize("text", [
    "codec_quality = 90, 30",
    "codec_quality = 0, 30",
    "contrast_gain = 0.5, 1",
    "blur_sigma = -1, 1",
    "lo_thresh = 0.5\nhi_thresh = 0.55",
    "hi_thresh = 1.5",
    "colour = 3",
    "seed",
    "ev_range = 1",
    "seed = abc",
    "tonemapper = filmic",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        DegradeConfig.parse(text)
