import json

import numpy as np
import pytest
from PIL import Image

from mvlandmarks.camera import ViewSamplingConfig, sample_cameras
from mvlandmarks.export import (
    export_training_view,
    gaussian_heatmap,
    load_channel_png,
    read_heatmap_stack,
    write_heatmap_stack,
)
from mvlandmarks.render import render_view


def test_gaussian_peak_and_falloff():
    # landmark exactly on a pixel center: that pixel reads 1.0 and a pixel
    # 5 px away reads exp(-0.5)
    h = gaussian_heatmap(256, 256, 128.5, 128.5, sigma=5.0)
    assert h[128, 128] == pytest.approx(1.0, abs=1e-15)
    assert h[128, 133] == pytest.approx(np.exp(-0.5), rel=1e-12)
    assert h[123, 128] == pytest.approx(np.exp(-0.5), rel=1e-12)


def test_gaussian_sum_matches_integral():
    # integral of the 2D Gaussian is 2*pi*sigma^2; the pixel-center sum is a
    # midpoint quadrature of it
    sigma = 5.0
    h = gaussian_heatmap(256, 256, 128.5, 128.5, sigma)
    assert abs(h.sum() - 2 * np.pi * sigma ** 2) / (2 * np.pi * sigma ** 2) < 0.01


def test_heatmap_stack_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    planes = rng.random((7, 64, 48)).astype(np.float32)
    path = tmp_path / "stack.hmp"
    write_heatmap_stack(path, planes)
    raw = path.read_bytes()
    assert raw[:4] == b"HMP1"
    assert len(raw) == 16 + 7 * 64 * 48 * 4
    again = read_heatmap_stack(path)
    assert again.shape == (7, 64, 48)
    assert np.array_equal(again, planes)


def test_heatmap_stack_rejects_garbage(tmp_path):
    path = tmp_path / "bad.hmp"
    path.write_bytes(b"XXXX" + b"\0" * 12)
    with pytest.raises(ValueError):
        read_heatmap_stack(path)


@pytest.fixture()
def exported_view(tmp_path, sphere100):
    cam = sample_cameras(sphere100, ViewSamplingConfig(view_count=1, rng_seed=1))[0]
    landmarks = sphere100.vertices[:5]
    view = render_view(sphere100, cam, channels=("geometry", "depth"),
                       landmarks=landmarks, landmark_ids=list(range(5)), view_id=0)
    files, heatmaps, metadata = export_training_view(view, landmarks, sigma=5.0, out_dir=tmp_path)
    return cam, landmarks, files, heatmaps, metadata, tmp_path


def test_export_writes_pngs_and_metadata(exported_view):
    cam, landmarks, files, heatmaps, metadata, out = exported_view
    assert (out / "view_0000_depth.png").exists()
    assert (out / "view_0000_geometry.png").exists()
    img = Image.open(files["depth"])
    assert img.size == (256, 256)
    plane = load_channel_png(files["depth"])
    assert plane.min() >= 0.0 and plane.max() <= 1.0

    meta = json.loads((out / "view_0000.json").read_text())
    assert meta["view_id"] == 0
    assert meta["camera"]["image_width"] == 256
    assert len(meta["gt_landmarks_2d"]) == 5
    uvd = cam.project_points(landmarks)
    for rec, (u, v, _) in zip(meta["gt_landmarks_2d"], uvd):
        assert rec["u"] == pytest.approx(u)
        assert rec["v"] == pytest.approx(v)
        assert isinstance(rec["visible"], bool)


def test_export_heatmap_peaks_at_projection(exported_view):
    cam, landmarks, files, heatmaps, metadata, out = exported_view
    uvd = cam.project_points(landmarks)
    for k, (u, v, _) in enumerate(uvd):
        row, col = np.unravel_index(np.argmax(heatmaps[k]), heatmaps[k].shape)
        assert abs((col + 0.5) - u) <= 0.5 + 1e-9
        assert abs((row + 0.5) - v) <= 0.5 + 1e-9
        assert heatmaps[k].max() <= 1.0


def test_landmark_outside_view_gives_zero_plane(tmp_path, sphere100):
    cam = sample_cameras(sphere100, ViewSamplingConfig(view_count=1, rng_seed=2))[0]
    view = render_view(sphere100, cam, channels=(), view_id=3)
    outside = np.array([[1e4, 1e4, 1e4]])
    _, heatmaps, meta = export_training_view(view, outside, sigma=5.0, out_dir=tmp_path)
    assert heatmaps.shape[0] == 1
    assert np.all(heatmaps[0] == 0.0)


def test_export_requires_positive_sigma(tmp_path, sphere100):
    cam = sample_cameras(sphere100, ViewSamplingConfig(view_count=1))[0]
    view = render_view(sphere100, cam, channels=())
    with pytest.raises(ValueError):
        export_training_view(view, sphere100.vertices[:1], sigma=0.0, out_dir=tmp_path)


def test_16bit_png_quantization(tmp_path):
    from mvlandmarks.export import save_channel_png

    plane = np.linspace(0, 1, 256 * 256).reshape(256, 256)
    path = tmp_path / "ramp.png"
    save_channel_png(path, plane)
    back = load_channel_png(path)
    assert np.max(np.abs(back - plane)) <= 0.5 / 65535.0 + 1e-12
