# Copyright 2026 The flextime Authors
# SPDX-License-Identifier: Apache-2.0

import numpy as np
import pytest

import flextime as ft


def test_fft_round_trip_and_parseval():
    x = np.random.default_rng(0).normal(size=101)
    c = np.asarray(ft.rfft(x))
    np.testing.assert_allclose(c, np.fft.rfft(x), atol=1e-10)
    np.testing.assert_allclose(ft.irfft(c, len(x)), x, atol=1e-12)


def test_filterbank_reconstructs_with_all_ones():
    fb = ft.Filterbank(8, 65, 100.0)
    assert fb.taps.shape == (8, 65)
    assert fb.band_edges[0] == 0.0 and fb.band_edges[-1] == 50.0
    impulse = np.zeros(65)
    impulse[32] = 1.0
    np.testing.assert_allclose(fb.taps.sum(axis=0), impulse, atol=1e-12)
    x = np.random.default_rng(1).normal(size=400)
    bands = fb.decompose(x)
    assert bands.shape == (8, 400)
    np.testing.assert_allclose(fb.reconstruct(x, [1.0] * 8), bands.sum(axis=0), atol=1e-12)


def test_gibbs_comparison():
    r = ft.stopband_comparison(8193, 124.0, 130.0, 8000.0)
    assert r["fir_attenuation_db"] >= 50.0
    assert r["dft_zeroing_attenuation_db"] <= 25.0


def test_generate_balanced_split():
    d = ft.generate(32, seed=3, split="test", length=256, sample_rate=256.0)
    assert d["inputs"].shape == (32, 256)
    assert d["ground_truth"].shape == (32, 129)
    assert np.bincount(d["labels"], minlength=16).tolist() == [2] * 16
    again = ft.generate(32, seed=3, split="test", length=256, sample_rate=256.0)
    np.testing.assert_array_equal(d["inputs"], again["inputs"])
    with pytest.raises(ft.ValidationError):
        ft.generate(30, split="test", length=256, sample_rate=256.0)


def band_energy_model(lo, hi, reference):
    """Class 1 iff the energy in DFT bins [lo, hi] exceeds half that of `reference`."""
    def energy(x):
        c = np.fft.rfft(x)
        return np.sum(np.abs(c[lo:hi + 1]) ** 2)

    e0 = energy(reference)

    def predict(x):
        z = 20.0 * (energy(x) / e0 - 0.5)
        p1 = 1.0 / (1.0 + np.exp(-z))
        return np.array([1.0 - p1, p1])

    return ft.CallbackClassifier(2, predict)


def test_flextime_finds_the_informative_band_of_a_python_model():
    T, fs = 512, 512.0
    rng = np.random.default_rng(4)
    spec = np.zeros(T // 2 + 1, complex)
    for lo, hi in [(104, 120), (20, 40), (180, 220)]:
        spec[lo:hi + 1] = np.exp(2j * np.pi * rng.random(hi - lo + 1)) * T / 2
    x = np.fft.irfft(spec, T)
    model = band_energy_model(104, 120, x)
    assert model.predict(x).argmax() == 1

    fb = ft.Filterbank(8, 129, fs)
    e = ft.flextime(model, x, fb, r=0.1, iterations=150)
    assert e["target_class"] == 1
    assert int(np.argmax(e["mask"])) == 3
    assert e["objective"][-1] <= e["objective"][0]
    assert e["saliency"].shape == (T // 2 + 1,)

    gt = np.zeros(T // 2 + 1, bool)
    gt[104:121] = True
    loc = ft.localization(e["saliency"], gt)
    assert loc["aur"] > 0.9
    assert ft.faithfulness(model, x, e["saliency"], 1, 0.1, fs) > 0.9
    assert ft.complexity(e["saliency"]) >= 0.0


def test_gradient_methods_need_a_gradient():
    model = ft.CallbackClassifier(2, lambda x: np.array([0.5, 0.5]))
    with pytest.raises(ft.UnsupportedError):
        ft.gradient("ig", model, np.ones(16))
    with pytest.raises(ValueError):
        ft.gradient("lime", model, np.ones(16))


def test_python_gradient_callback_feeds_saliency():
    w = np.random.default_rng(5).normal(size=64) * 0.05

    def predict(x):
        z = float(w @ x)
        return np.array([1.0 / (1.0 + np.exp(-z)), 1.0 - 1.0 / (1.0 + np.exp(-z))])

    def gradient(x, target):
        p = predict(x)
        # d(-sum t log p)/dz for p0 = sigmoid(z), p1 = 1 - p0.
        dz = -target[0] * (1 - p[0]) + target[1] * p[0]
        return dz * w

    model = ft.CallbackClassifier(2, predict, gradient)
    x = np.random.default_rng(6).normal(size=64)
    e = ft.gradient("saliency", model, x, target=0)
    p = predict(x)[0]
    W = np.abs(np.fft.rfft(w))
    weight = np.full(33, 2.0)
    weight[[0, 32]] = 1.0
    np.testing.assert_allclose(e["saliency"], p * (1 - p) * weight / 64 * W, rtol=1e-6, atol=1e-12)
