import numpy as np
import pytest

import convexify

SMALL = """
[grid]
n_h = 7
n_z = 13
n_k = 3
[scene]
inclusion_1 = ball 0 0 0 0.1 1.5
smoothing_width = 0.04
voxel_size = 0.05
[solver]
gamma = 0.5
max_iter = 40
"""


def test_config_round_trip():
    cfg = convexify.parse_config(SMALL)
    assert (cfg.n_h, cfg.n_z, cfg.n_k) == (7, 13, 3)
    again = convexify.parse_config(cfg.to_text())
    assert again.to_text() == cfg.to_text()


def test_bad_config_raises():
    with pytest.raises(convexify.ConfigError):
        convexify.parse_config("[grid]\nnh = 3\n")


def test_synth_invert_report(tmp_path):
    cfg = convexify.parse_config(SMALL)
    convexify.synth(cfg, tmp_path)
    res = convexify.invert(cfg, tmp_path / "dataset.txt", tmp_path)
    assert res["coefficient"].shape == (7, 7, 13)
    assert np.all(res["coefficient"].real >= 1.0)
    assert res["c_comp"] >= 1.0
    assert "c_comp" in convexify.report(tmp_path)


def test_uniform_medium_is_fixed():
    cfg = convexify.parse_config("[grid]\nn_h = 7\nn_z = 13\nn_k = 3\n")
    res = convexify.run(cfg)
    assert np.max(np.abs(res["coefficient"] - 1.0)) < 1e-12


def test_laplacian_of_quadratic():
    cfg = convexify.parse_config("[grid]\nn_h = 5\nn_z = 9\nn_k = 3\n")
    z = np.linspace(-0.5, 0.5, 9)
    f = np.broadcast_to(z**2, (5, 5, 9)).astype(complex)
    lap = convexify.laplacian_h(cfg, f)
    assert np.allclose(lap[1:-1, 1:-1, 1:-1], 2.0)
    assert np.all(lap[0] == 0)


def test_small_helpers():
    assert convexify.carleman_weight(0.0, 3.0) == 1.0
    assert convexify.eps_comp(4.95, 4.5) == pytest.approx(10.0)
