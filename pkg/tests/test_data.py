"""IDX parsing against hand-built fixtures, and the synthetic generator."""

import gzip
import struct

import numpy as np
import pytest

from datacollab import data
from datacollab.errors import IdxFormatError


def build_idx_images(pixels: np.ndarray) -> bytes:
    count, rows, cols = pixels.shape
    return struct.pack(">IIII", 0x00000803, count, rows, cols) + pixels.astype(
        np.uint8
    ).tobytes()


def build_idx_labels(labels) -> bytes:
    labels = np.asarray(labels, dtype=np.uint8)
    return struct.pack(">II", 0x00000801, labels.shape[0]) + labels.tobytes()


@pytest.fixture
def tiny_mnist(tmp_path):
    # 3 images of 2x2, authored byte by byte
    pixels = np.array(
        [
            [[0, 255], [128, 64]],
            [[1, 2], [3, 4]],
            [[255, 255], [0, 0]],
        ],
        dtype=np.uint8,
    )
    labels = [7, 0, 3]
    img = tmp_path / "images-idx3-ubyte"
    lab = tmp_path / "labels-idx1-ubyte"
    img.write_bytes(build_idx_images(pixels))
    lab.write_bytes(build_idx_labels(labels))
    return img, lab, pixels, labels


class TestIdxParsing:
    def test_exact_round_trip(self, tiny_mnist):
        img, lab, pixels, labels = tiny_mnist
        x, y = data.load_mnist(img, lab)
        assert x.shape == (3, 4)
        assert np.array_equal(x, pixels.reshape(3, 4) / 255.0)
        assert np.array_equal(y, labels)
        assert x.min() >= 0.0 and x.max() <= 1.0

    def test_gzip_transparent(self, tiny_mnist, tmp_path):
        img, lab, pixels, labels = tiny_mnist
        gz_img = tmp_path / "images.gz"
        gz_lab = tmp_path / "labels.gz"
        gz_img.write_bytes(gzip.compress(img.read_bytes()))
        gz_lab.write_bytes(gzip.compress(lab.read_bytes()))
        x, y = data.load_mnist(gz_img, gz_lab)
        assert np.array_equal(x, pixels.reshape(3, 4) / 255.0)
        assert np.array_equal(y, labels)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad"
        path.write_bytes(struct.pack(">IIII", 0xDEADBEEF, 1, 2, 2) + b"\x00" * 4)
        with pytest.raises(IdxFormatError, match="magic"):
            data.load_idx_images(path)

    def test_truncated_payload_names_offset(self, tmp_path):
        path = tmp_path / "short"
        path.write_bytes(struct.pack(">IIII", 0x00000803, 2, 2, 2) + b"\x00" * 5)
        with pytest.raises(IdxFormatError, match="offset 16"):
            data.load_idx_images(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "stub"
        path.write_bytes(b"\x00\x00")
        with pytest.raises(IdxFormatError, match="truncated header"):
            data.load_idx_labels(path)

    def test_count_mismatch(self, tiny_mnist, tmp_path):
        img, _, _, _ = tiny_mnist
        lab = tmp_path / "two-labels"
        lab.write_bytes(build_idx_labels([1, 2]))
        with pytest.raises(IdxFormatError, match="labels"):
            data.load_mnist(img, lab)

    def test_label_magic_checked(self, tiny_mnist):
        img, lab, _, _ = tiny_mnist
        with pytest.raises(IdxFormatError, match="magic"):
            data.load_idx_labels(img)  # image file where labels expected


class TestSynthetic:
    def test_deterministic(self):
        a = data.generate_synthetic(3, 10, 5, 4.0, seed=1)
        b = data.generate_synthetic(3, 10, 5, 4.0, seed=1)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_shapes_and_label_counts(self):
        x, labels = data.generate_synthetic(4, 25, 8, 5.0, seed=2)
        assert x.shape == (100, 8)
        assert np.array_equal(np.bincount(labels), [25] * 4)

    def test_zero_separation_is_class_blind(self):
        x, labels = data.generate_synthetic(3, 200, 6, 0.0, seed=3)
        # class-conditional means coincide up to sampling noise
        means = np.array([x[labels == c].mean(axis=0) for c in range(3)])
        assert np.abs(means).max() < 0.3

    def test_high_separation_is_learnable(self):
        from datacollab import learner, protocol

        x, labels = data.generate_synthetic(3, 40, 6, 10.0, seed=4)
        xt, lt = data.generate_synthetic(3, 20, 6, 10.0, seed=5)
        model = learner.fit_krr(x, protocol.one_hot(labels, 3), 0.1)
        pred = learner.classify(learner.predict_scores(model, xt))
        assert learner.accuracy(pred, lt) >= 0.99

    def test_bad_counts(self):
        with pytest.raises(ValueError):
            data.generate_synthetic(0, 5, 3, 1.0, seed=0)
