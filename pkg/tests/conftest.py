import json

import numpy as np
import pytest

from mirrorstereo import scenegen

# small box-plus-mirror scene used by the CLI round-trip tests; cheap to
# generate and reconstruct (~2k ground-truth points)
SMALL_SPEC = {
    "seed": 3,
    "mirror": {"center": [0, 0, 0], "axis_u": [0, 0, 1],
               "axis_v": [0, -1, 0], "extent_u": 0.7, "extent_v": 0.5},
    "primitives": [{"type": "box", "center": [1.5, 0.3, 0.1],
                    "size": [0.4, 0.4, 0.4], "density": 350}],
}


@pytest.fixture(scope="session")
def scene0():
    return scenegen.generate(scenegen.bench_spec(0))


@pytest.fixture(scope="session")
def scene0_obs(scene0):
    """Noiseless correspondences and mirror mask for the first bench scene."""
    return scenegen.render_observations(scene0, noise_px=0.0, seed=0)


@pytest.fixture(scope="session")
def small_spec_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("spec") / "spec.json"
    path.write_text(json.dumps(SMALL_SPEC))
    return path


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
