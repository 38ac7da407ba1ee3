import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdrlab.core import RadianceFrame
from hdrlab.tonemap import get_tonemapper, quantize_8bit, tonemap_clip_gamma, tonemap_reinhard


def uniform(v, h=4, w=4):
    return RadianceFrame(np.full((h, w, 3), v))


def test_clip_gamma_examples():
    assert np.all(tonemap_clip_gamma(uniform(1.0)).pixels == 255)
    assert np.all(tonemap_clip_gamma(uniform(0.0), 3).pixels == 0)
    # round(255 * 0.5**(1/2.2)) = round(186.08)
    assert np.all(tonemap_clip_gamma(uniform(0.5)).pixels == 186)
    assert np.all(tonemap_clip_gamma(uniform(0.25), 1).pixels == 186)


def test_round_half_to_even():
    assert quantize_8bit(np.array([0.5 / 255, 1.5 / 255, 2.5 / 255])).tolist() == [0, 2, 2]


@given(st.floats(0, 100), st.floats(0, 100))
@settings(max_examples=200)
def test_clip_gamma_monotone(a, b):
    lo, hi = sorted((a, b))
    assert tonemap_clip_gamma(uniform(lo, 1, 1)).pixels[0, 0, 0] <= tonemap_clip_gamma(uniform(hi, 1, 1)).pixels[0, 0, 0]


def test_reinhard_uniform_frame():
    # Lm = 0.18, Ld = 0.18/1.18, round(255 * Ld**(1/2.2)) = round(108.48)
    for c in (0.01, 1.0, 37.0):
        assert np.all(tonemap_reinhard(uniform(c)).pixels == 108)


def test_reinhard_black_frame():
    assert np.all(tonemap_reinhard(uniform(0.0)).pixels == 0)


def test_reinhard_exposure_invariant(radiance):
    a = tonemap_reinhard(radiance).pixels.astype(int)
    b = tonemap_reinhard(RadianceFrame(radiance.pixels * 2)).pixels.astype(int)
    assert np.max(np.abs(a - b)) <= 1


def test_output_range(radiance):
    for name in ("clip-gamma", "reinhard"):
        px = get_tonemapper(name)(radiance).pixels
        assert px.dtype == np.uint8
    with pytest.raises(ValueError):
        get_tonemapper("aces-rrt")
