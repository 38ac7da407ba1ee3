"""Acceptance criteria 1-9, each checked at its stated tolerance and runtime budget.

Every test prints a single ``criterion N: PASS|FAIL`` line; the lines are
also collected into the pytest terminal summary.
"""

import contextlib
import math
import struct
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from hdrlab import synth
from hdrlab.alignment import (Histogram, IdentityCodec, QuantizeCodec, SurrogateCodec, kl_divergence,
                              latent_kl, pixel_kl, roundtrip_corpus, roundtrip_error_curve)
from hdrlab.alignment.analysis import prior_encoded
from hdrlab.alignment.latent import LatentTensor
from hdrlab.core import Clip, RadianceFrame, SdrFrame
from hdrlab.degrade import (DegradeConfig, degenerate, degrade_selective_blur, exposure_shift,
                            make_training_pair)
from hdrlab.io import (FormatError, read_exr, read_exr_pixels, read_latent, read_pfm, read_sdr, write_exr,
                       write_latent, write_pfm, write_sdr)
from hdrlab.metrics import dynamic_range_stops, f2f_psnr, flicker_index, pu21_psnr
from hdrlab.tonemap import tonemap_clip_gamma
from hdrlab.transfer import LOGC3_A, LOGC3_B, LOGC3_C, LOGC3_CUT, LOGC3_D, LOGC3_E, LOGC3_F
from hdrlab.transfer import HLG_A, HLG_B, HLG_C, decode_values, encode_values, invertible_max, to_model_range

pytestmark = pytest.mark.acceptance


@contextlib.contextmanager
def criterion(number, title, budget_s):
    start = time.perf_counter()
    status, detail = "FAIL", ""
    try:
        yield
        elapsed = time.perf_counter() - start
        assert elapsed < budget_s, f"runtime {elapsed:.2f} s exceeds {budget_s} s"
        status = "PASS"
    except AssertionError as exc:
        detail = " | " + str(exc).splitlines()[0]
        raise
    finally:
        elapsed = time.perf_counter() - start
        line = f"criterion {number}: {status} {title} ({elapsed:.2f} s / {budget_s} s){detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)


@pytest.fixture(scope="module")
def lognormal_corpus():
    return synth.lognormal_clip(seed=7, frames=130, height=64, width=64)


@pytest.fixture(scope="module")
def sdr_prior():
    return synth.sdr_prior(seed=8, frames=130, height=64, width=64)


def test_criterion_1_transfer_anchors():
    with criterion(1, "transfer anchors, monotonicity, continuity", 1.0):
        anchors = [("logc3", 0.18, 0.391007), ("logc3", 0.0, 0.092809), ("hlg", 1 / 12, 0.5),
                   ("pq", 100.0, 1.0), ("hlg", 1.0, 1.0)]
        for fn, x, want in anchors:
            got = float(encode_values(fn, np.array([x]))[0])
            assert abs(got - want) <= 1e-4, f"{fn}({x}) = {got}, want {want}"
        x = np.geomspace(1e-6, 1e6, 100_000)
        for fn in ("logc3", "pq", "hlg", "aces-linear"):
            assert np.all(np.diff(encode_values(fn, x)) >= 0), f"{fn} not monotone"
        lin = LOGC3_E * LOGC3_CUT + LOGC3_F
        log = LOGC3_C * math.log10(LOGC3_A * LOGC3_CUT + LOGC3_B) + LOGC3_D
        assert abs(lin - log) <= 1e-5, f"LogC3 branch gap {abs(lin - log)}"
        e = 1 / 12
        gap = abs(math.sqrt(3 * e) - (HLG_A * math.log(12 * e - HLG_B) + HLG_C))
        assert gap <= 1e-5, f"HLG branch gap {gap}"


def test_criterion_2_inverse_property():
    with criterion(2, "decode(encode(x)) relative error <= 1e-4", 5.0):
        rng = np.random.default_rng(2)
        domains = {"logc3": (1e-6, invertible_max("logc3")), "pq": (1e-6, 100.0), "hlg": (1e-6, 1.0),
                   "aces-linear": (1e-6, 65504.0)}
        for fn, (lo, hi) in domains.items():
            x = np.exp(rng.uniform(np.log(lo), np.log(hi), 100_000))
            rel = np.abs(decode_values(fn, encode_values(fn, x)) - x) / x
            assert rel.max() <= 1e-4, f"{fn} max relative error {rel.max():.3g}"


def _brute_kl(p, q, eps=1e-10):
    tp = tq = 0.0
    for i in range(len(p)):
        tp += p[i] + eps
        tq += q[i] + eps
    s = 0.0
    for i in range(len(p)):
        a, b = (p[i] + eps) / tp, (q[i] + eps) / tq
        s += a * math.log(a / b)
    return s


def test_criterion_3_kl_oracle():
    with criterion(3, "KL matches brute-force oracle; KL(P,P)=0; KL>=0", 5.0):
        worst = 0.0
        for n in range(2, 11):
            for k in range(120):
                p = [(k * (i + 3) + i * i) % 5 for i in range(n)]
                q = [(k + 2 * i + 1) % 4 for i in range(n)]
                h = lambda c: Histogram(0.0, 1.0, np.array(c, dtype=np.int64))
                worst = max(worst, abs(kl_divergence(h(p), h(q)) - max(0.0, _brute_kl(p, q))))
        assert worst <= 1e-12, f"oracle deviation {worst:.3g}"
        rng = np.random.default_rng(3)
        for _ in range(1000):
            n = int(rng.integers(2, 257))
            p = Histogram(0.0, 1.0, rng.integers(0, 100, n))
            q = Histogram(0.0, 1.0, rng.integers(0, 100, n))
            assert abs(kl_divergence(p, p)) <= 1e-12
            assert kl_divergence(p, q) >= 0


def test_criterion_4_kl_ordering(lognormal_corpus, sdr_prior):
    with criterion(4, "KL_px ACES > HLG > LogC3 and KL_lat HLG > 10x LogC3", 60.0):
        fns = ("logc3", "pq", "hlg", "aces-linear")
        kl_px = {fn: pixel_kl(fn, [lognormal_corpus], sdr_prior) for fn in fns}
        surrogate = SurrogateCodec.fit([to_model_range(prior_encoded(s)) for s in sdr_prior])
        kl_lat = {fn: latent_kl(surrogate, fn, [lognormal_corpus], sdr_prior) for fn in ("logc3", "hlg")}
        kl_q = {fn: latent_kl(QuantizeCodec(256), fn, [lognormal_corpus], sdr_prior) for fn in ("logc3", "hlg")}
        print("  KL_px  " + "  ".join(f"{fn}={v:.4f}" for fn, v in kl_px.items()))
        print("  KL_lat surrogate " + "  ".join(f"{fn}={v:.4f}" for fn, v in kl_lat.items()))
        print("  KL_lat quantize-256 (informational) " + "  ".join(f"{fn}={v:.4f}" for fn, v in kl_q.items()))
        assert kl_px["aces-linear"] > kl_px["hlg"] > kl_px["logc3"], f"pixel ordering {kl_px}"
        assert kl_lat["hlg"] > 10 * kl_lat["logc3"], f"latent ratio {kl_lat['hlg'] / kl_lat['logc3']:.2f}"


DECADES = [(1e-3, 1e-2), (1e-2, 1e-1), (1e-1, 1.0), (1.0, 10.0), (10.0, 16.0)]


def _decade_means(table):
    out = []
    for lo, hi in DECADES:
        sel = (table[:, 0] >= lo) & ((table[:, 0] < hi) if hi < 16 else (table[:, 0] <= hi))
        out.append(float(table[sel, 1].mean()))
    return out


def test_criterion_5_roundtrip_error_curve():
    with criterion(5, "quantize-256 roundtrip: LogC3/PQ < 5% per decade, HLG/ACES divergence", 30.0):
        codec = QuantizeCodec(256)
        x = np.geomspace(1e-3, 16, 200)
        failures = []
        for fn in ("logc3", "pq"):
            means = _decade_means(roundtrip_error_curve(codec, fn, x))
            print(f"  {fn} per-decade mean relative error: " + ", ".join(f"{m:.4f}" for m in means))
            bad = [f"[{lo:g},{hi:g}) {m:.4f}" for (lo, hi), m in zip(DECADES, means) if m >= 0.05]
            if bad:
                failures.append(f"{fn} >= 5% in " + "; ".join(bad))
        hlg = roundtrip_error_curve(codec, "hlg", [0.5, 8.0])[:, 1]
        print(f"  hlg error x=0.5 {hlg[0]:.4g}, x=8 {hlg[1]:.4g}")
        if not hlg[1] > 10 * hlg[0]:
            failures.append(f"HLG ratio {hlg[1] / hlg[0]:.2f}")
        aces = roundtrip_error_curve(codec, "aces-linear", [1e-3])[0, 1]
        logc = roundtrip_error_curve(codec, "logc3", [1e-3])[0, 1]
        print(f"  x=1e-3 aces-linear {aces:.4g} vs logc3 {logc:.4g}")
        if not aces > 10 * logc:
            failures.append(f"ACES/LogC3 ratio at 1e-3 {aces / logc:.2f}")
        assert not failures, "; ".join(failures)


def test_criterion_6_metric_identities(rng):
    with criterion(6, "metric identities", 5.0):
        frame = RadianceFrame(0.18 * np.exp(rng.standard_normal((32, 32, 3))))
        assert pu21_psnr(frame, frame) == 100.0
        const = Clip(tuple(RadianceFrame(np.full((8, 8, 3), 0.4)) for _ in range(10)))
        assert abs(flicker_index(const)) <= 1e-12
        base = rng.uniform(0.01, 5.0, (8, 12, 12, 3))
        f0 = flicker_index(base)
        for k in np.exp(rng.uniform(-10, 10, 200)):
            assert abs(flicker_index(k * base) - f0) <= 1e-12, f"flicker not scale invariant at k={k}"
        assert f2f_psnr(Clip((frame,) * 5)) == 100.0
        assert dynamic_range_stops(const) == 0.0
        means = Clip(tuple(RadianceFrame(np.full((4, 4, 3), m)) for m in (1.0, 2.0, 3.0)))
        assert abs(flicker_index(means) - 0.40825) <= 1e-5


def test_criterion_7_degradation():
    with criterion(7, "degradation determinism and correspondence", 30.0):
        clip = synth.lognormal_clip(seed=11, frames=8, height=64, width=64)
        cfg = DegradeConfig(seed=2024)
        runs = [make_training_pair(clip, cfg, 3, threads=t) for t in (1, 1, 8)]
        ref = [f.pixels.tobytes() for f in runs[0].sdr.frames + runs[0].target.frames]
        for r in runs[1:]:
            assert [f.pixels.tobytes() for f in r.sdr.frames + r.target.frames] == ref, "pair bytes differ"

        px = np.random.default_rng(7).integers(0, 256, (48, 48, 3)).astype(np.uint8)
        px[12:36, 12:36] = (110, 140, 120)
        luma = (px / 255.0) @ np.array([0.2126, 0.7152, 0.0722])
        mid = (luma > cfg.lo_thresh + cfg.edge_width) & (luma < cfg.hi_thresh - cfg.edge_width)
        out = degrade_selective_blur(SdrFrame(px), 3.0).pixels
        assert np.array_equal(out[mid], px[mid]), "midtone pixels changed"

        plain = make_training_pair(clip, degenerate(cfg), 0)
        for s, f in zip(plain.sdr.frames, clip.frames):
            dev = np.max(np.abs(s.pixels.astype(int) - tonemap_clip_gamma(f).pixels))
            assert dev <= 2, f"degenerate config deviates by {dev} code values"

        f = clip.frames[0]
        for ev in (-3, -1, 0, 1, 2, 5):
            assert np.array_equal(exposure_shift(f, ev).pixels, f.pixels * np.float32(2.0**ev))


def test_criterion_8_format_roundtrips(tmp_path):
    with criterion(8, "format roundtrips and 200-case EXR header fuzz", 30.0):
        rng = np.random.default_rng(8)
        hdr = (0.18 * np.exp(2 * rng.standard_normal((21, 17, 3)))).astype(np.float32)
        write_exr(tmp_path / "h.exr", hdr, "half")
        assert read_exr(tmp_path / "h.exr").pixels.tobytes() == hdr.astype(np.float16).astype(np.float32).tobytes()
        write_exr(tmp_path / "f.exr", hdr, "float")
        assert read_exr(tmp_path / "f.exr").pixels.tobytes() == hdr.tobytes()
        write_pfm(tmp_path / "a.pfm", RadianceFrame(hdr))
        assert read_pfm(tmp_path / "a.pfm").pixels.tobytes() == hdr.tobytes()
        s = SdrFrame(rng.integers(0, 256, (21, 17, 3)))
        write_sdr(tmp_path / "a.png", s)
        assert read_sdr(tmp_path / "a.png").pixels.tobytes() == s.pixels.tobytes()
        t = LatentTensor(rng.standard_normal((4, 3, 5)).astype(np.float32))
        write_latent(tmp_path / "a.lat", t)
        assert read_latent(tmp_path / "a.lat").values.tobytes() == t.values.tobytes()

        good = (tmp_path / "h.exr").read_bytes()
        expected = hdr.astype(np.float16).astype(np.float32).tobytes()
        h, w = hdr.shape[:2]
        header_len = len(good) - h * (8 + w * 3 * 2)
        assert struct.unpack_from("<Q", good, header_len - 8 * h)[0] == header_len
        rejected = 0
        for i in range(200):
            buf = bytearray(good)
            if i % 2:
                buf = buf[:int(rng.integers(0, header_len))]
            else:
                for _ in range(int(rng.integers(1, 4))):
                    buf[int(rng.integers(0, header_len))] ^= 1 << int(rng.integers(0, 8))
            (tmp_path / "z.exr").write_bytes(bytes(buf))
            try:
                px, _ = read_exr_pixels(tmp_path / "z.exr")
            except FormatError:
                rejected += 1
                continue
            assert px.tobytes() == expected, f"fuzz case {i} silently misread"
        assert rejected >= 100, f"only {rejected} of 200 corrupt files rejected"


def test_criterion_9_identity_harness(lognormal_corpus):
    with criterion(9, "identity-codec chain PU21-PSNR >= 60 dB", 30.0):
        for fn in ("logc3", "pq", "aces-linear"):
            stats = roundtrip_corpus(IdentityCodec(), fn, [lognormal_corpus])
            print(f"  {fn}: PU21-PSNR {stats.pu21_psnr:.2f} dB, max rel error {stats.max_rel_error:.2e}")
            assert stats.pu21_psnr >= 60, f"{fn} PU21-PSNR {stats.pu21_psnr:.2f} dB"
