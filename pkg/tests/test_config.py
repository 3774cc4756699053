import pytest

from spikegates.circuit import WeightSet
from spikegates.config import (
    Config,
    format_config,
    load_weights,
    parse_config,
    save_weights,
)
from spikegates.errors import ConfigError
from spikegates.neuron import NeuronParams


def test_defaults_round_trip():
    cfg = Config(weights=WeightSet.from_isi(57.0, 0.11, 0.67, 0.099), extra={"calibration.note": "x"})
    assert parse_config(format_config(cfg)) == cfg


def test_partial_config_keeps_defaults():
    cfg = parse_config("neuron.gain = 2  # scale\nenergy.delta = 0.04\ndecode.spike_threshold = 2\nrun.current_pa = 7\n")
    assert cfg.neuron == NeuronParams(gain=2.0)
    assert cfg.energy.delta == 0.04 and cfg.energy.tau_eps == 8.0
    assert cfg.decode.spike_threshold == 2
    assert cfg.current_pa == 7.0 and cfg.weights is None


@pytest.mark.parametrize("text", [
    "neuron.zeta = 1", "bogus = 1", "neuron.a 0.02", "neuron.a = abc",
    "weights.tau_exc = 1.0", "neuron.a = -1", "decode.windows = 1",
])
def test_bad_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_weights_file(tmp_path):
    w = WeightSet(0.054, 0.084, 0.066)
    path = save_weights(tmp_path / "w.txt", w, {"current_pa": "4"})
    assert load_weights(path) == w
    assert "calibration.current_pa = 4" in path.read_text()
    (tmp_path / "empty.txt").write_text("neuron.a = 0.02\n")
    with pytest.raises(ConfigError):
        load_weights(tmp_path / "empty.txt")
