import numpy as np
import pytest

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def _crop(img, side):
    img = np.asarray(img, dtype=np.float64) / 255.0
    if img.ndim == 2:
        img = np.stack([img] * 3, axis=-1)
    h, w = img.shape[:2]
    top, left = (h - side) // 2, (w - side) // 2
    return img[top:top + side, left:left + side]


NATURAL = ("astronaut", "coffee", "chelsea", "rocket", "immunohistochemistry", "camera")


def natural_images(side=192, names=NATURAL):
    """Center crops of images bundled with scikit-image (no download needed)."""
    from skimage import data

    return [(name, _crop(getattr(data, name)(), side)) for name in names]


@pytest.fixture(scope="session")
def natural_192():
    return natural_images(192)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_kernel(rng, size, negative=True):
    """Random kernel summing to 1; with ``negative`` some taps are below zero."""
    k = rng.normal(size=(size, size)) if negative else rng.random((size, size))
    k[size // 2, size // 2] += size * size
    return k / k.sum()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
