import io

import numpy as np
import pytest
from PIL import Image

from screen_rating.errors import ImageDecodeError
from screen_rating.preprocessing import load_image_batch, preprocess_array, preprocess_image


def png_bytes(color, size=(40, 30), mode="RGB"):
    buffer = io.BytesIO()
    Image.new(mode, size, color).save(buffer, format="PNG")
    return buffer.getvalue()


def test_mid_gray():
    out = preprocess_image(png_bytes((128, 128, 128)), size=32)
    assert out.shape == (3, 32, 32)
    np.testing.assert_allclose(out.data, (128 / 255 - 0.5) / 0.5, atol=1e-12)
    assert out.data[0, 0, 0] == pytest.approx(0.00392, abs=1e-5)


@pytest.mark.parametrize("color,value", [((0, 0, 0), -1.0), ((255, 255, 255), 1.0)])
def test_range_endpoints(color, value):
    np.testing.assert_array_equal(preprocess_array(png_bytes(color), 16), value)


def test_grayscale_and_alpha_inputs_become_rgb():
    assert preprocess_array(png_bytes(200, mode="L"), 8).shape == (3, 8, 8)
    assert preprocess_array(png_bytes((10, 20, 30, 255), mode="RGBA"), 8).shape == (3, 8, 8)


def test_jpeg_input():
    buffer = io.BytesIO()
    Image.new("RGB", (20, 20), (0, 0, 0)).save(buffer, format="JPEG")
    out = preprocess_array(buffer.getvalue(), 8)
    assert np.all(out <= -0.9)


def test_undecodable_bytes():
    with pytest.raises(ImageDecodeError):
        preprocess_array(b"definitely not an image", 8)


def test_reencoding_is_stable(rng):
    pixels = rng.integers(0, 256, (24, 24, 3), dtype=np.uint8)
    buffer = io.BytesIO()
    Image.fromarray(pixels).save(buffer, format="PNG")
    first = preprocess_array(buffer.getvalue(), 16)

    back = np.round((first * 0.5 + 0.5) * 255).astype(np.uint8).transpose(1, 2, 0)
    again = io.BytesIO()
    Image.fromarray(back).save(again, format="PNG")
    second = preprocess_array(again.getvalue(), 16)
    # values live in [-1, 1], so 2/255 on the [0, 1] scale is 4/255 here
    assert np.max(np.abs(first - second)) < 4 / 255


@pytest.mark.parametrize("workers", [1, 4])
def test_batch_keeps_order_and_records_failures(tmp_path, workers):
    paths, keys = [], []
    for i, shade in enumerate([0, 60, 120, 180, 240]):
        path = tmp_path / f"{i}.png"
        path.write_bytes(png_bytes((shade, shade, shade)))
        paths.append(path)
        keys.append(path.name)
    (tmp_path / "bad.png").write_bytes(b"broken")
    paths.insert(2, tmp_path / "bad.png")
    keys.insert(2, "bad.png")
    paths.append(tmp_path / "absent.png")
    keys.append("absent.png")

    batch = load_image_batch(paths, keys, 8, workers=workers)
    assert batch.keys == ["0.png", "1.png", "2.png", "3.png", "4.png"]
    assert set(batch.errors) == {"bad.png", "absent.png"}
    firsts = [a[0, 0, 0] for a in batch.arrays]
    assert firsts == sorted(firsts)
    assert batch.stacked(np.float32).dtype == np.float32
