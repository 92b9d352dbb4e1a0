import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

sys.path.insert(0, str(Path(__file__).parent))

from chromastat.colorimetry import load_cmf  # noqa: E402


@pytest.fixture(scope="session")
def cmf():
    return load_cmf()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write_image_tree(root, centers, n_images, rng, size=(6, 8), spread=4.0, pixel_noise=3.0, suffix=".png"):
    """Write one subdirectory per center; each image is a noisy flat color.

    Per-image mean colors scatter around the group center with sd ``spread``.
    """
    root = Path(root)
    for gi, center in enumerate(centers):
        d = root / f"g{gi}"
        d.mkdir(parents=True, exist_ok=True)
        for k in range(n_images):
            mean = np.asarray(center, float) + rng.normal(0.0, spread, 3)
            px = mean + rng.normal(0.0, pixel_noise, (*size, 3))
            px = np.clip(np.rint(px), 0, 255).astype(np.uint8)
            Image.fromarray(px, "RGB").save(d / f"img_{k:02d}{suffix}")
    return root


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion."""

    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
