import copy
import json
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
DEFAULT_CONFIG = ROOT / "configs" / "default.json"

# Small enough that every CLI command finishes in a few seconds.
TINY = {
    "scene": {
        "array": {"num_elements": 8},
        "grids": [
            {"origin": [-2.0, 4.0], "width": 4.0, "height": 1.0},
            {"origin": [-2.0, 7.0], "width": 4.0, "height": 0.5},
        ],
    },
    "codebooks": {"num_beams": 6, "fov_deg": [-40, 40]},
    "training": {"epochs": 2, "min_steps": 0, "hidden": [16, 16]},
    "finetune": {"epochs": 2},
    "sweeps": {"twin_sizes": [10, 50, "all"], "finetune_sizes": [0, 3, 6]},
    "seeds": [0, 1],
    "k_values": [1, 2],
}


def tiny_dict(**overrides):
    d = copy.deepcopy(TINY)
    d.update(overrides)
    return d


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(tiny_dict()))
    return path
