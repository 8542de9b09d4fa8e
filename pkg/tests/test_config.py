import json
import math

import numpy as np
import pytest

from twinbeam.config import ConfigError, load_config, parse_config

from conftest import DEFAULT_CONFIG, tiny_dict


def test_defaults_fill_in():
    cfg = parse_config({"scene": {"grids": [{"origin": [0, 1], "width": 2, "height": 1}]}})
    assert cfg.seeds == [0, 1, 2, 3, 4]
    assert cfg.codebooks.num_beams == 16
    assert cfg.perturbation.position_noise_std == 0.5
    assert cfg.finetune.learning_rate == 1e-4 and cfg.training.learning_rate == 1e-2


def test_unit_conversion():
    cfg = parse_config(tiny_dict())
    scene = cfg.scene_spec()
    assert scene.carrier_frequency == 60e9
    assert scene.array.boresight_azimuth == pytest.approx(math.pi / 2)
    cb = cfg.codebook("uniform")
    assert np.degrees(cb.angles[0]) == pytest.approx(-40 + 80 / 12)


def test_measured_defaults_to_uniform():
    cfg = parse_config(tiny_dict())
    assert np.array_equal(cfg.codebook("measured").vectors, cfg.codebook("uniform").vectors)


def test_measured_angles():
    d = tiny_dict()
    d["codebooks"] = {"num_beams": 2, "measured_angles_deg": [-10, 20]}
    cfg = parse_config(d | {"k_values": [1]})
    assert np.degrees(cfg.codebook("measured").angles).tolist() == pytest.approx([-10, 20])
    with pytest.raises(ValueError):
        cfg.codebook("dft")


@pytest.mark.parametrize("patch, where", [
    ({"seeds": []}, "seeds"),
    ({"codebooks": {"num_beams": 4, "measured_angles_deg": [1, 2]}}, "codebooks"),
    ({"k_values": [0]}, "k_values"),
    ({"sweeps": {"twin_sizes": [0]}}, "sweeps.twin_sizes"),
    ({"training": {"features": "spherical"}}, "training.features"),
    ({"bogus": 1}, "bogus"),
])
def test_errors_name_the_field(patch, where):
    with pytest.raises(ConfigError, match=where):
        parse_config(tiny_dict(**patch))


def test_grid_spacing_positive():
    d = tiny_dict()
    d["scene"]["grids"][0]["spacing"] = 0
    with pytest.raises(ConfigError, match=r"scene\.grids\.0\.spacing"):
        parse_config(d)


def test_digest_ignores_output_and_seeds():
    a = parse_config(tiny_dict())
    b = parse_config(tiny_dict(output_dir="elsewhere", seeds=[7]))
    c = parse_config(tiny_dict(k_values=[1]))
    assert a.digest() == b.digest() != c.digest()
    assert a.data_digest() == c.data_digest()


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(bad)


def test_shipped_default_config():
    cfg = load_config(DEFAULT_CONFIG)
    raw = json.loads(DEFAULT_CONFIG.read_text())
    assert cfg.model_dump(mode="json") == parse_config(raw).model_dump(mode="json")
    offsets = np.degrees(cfg.codebook("measured").angles - cfg.codebook("uniform").angles)
    np.testing.assert_allclose(offsets, 1.5, atol=1e-9)
    assert cfg.train_config(3).rng_seed == 3 and cfg.finetune_config(3).mode == "finetune"
