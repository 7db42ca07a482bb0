import pytest

from erto import config
from erto.errors import ConfigError

# reference deployment values the defaults must reproduce
REFERENCE = {
    "sim.area": [1000.0, 1000.0],
    "power.r_ref": 200.0,
    "energy.packet_bits": 1024,
    "energy.data_rate": 15000,
    "energy.initial": 5.0,
    "power.p_max": 0.8,
    "power.p_min": 0.1,
    "energy.E_r": 0.05,
}


def test_empty_file_gives_reference_defaults():
    cfg = config.loads("")
    for key, value in REFERENCE.items():
        assert cfg[key] == value, key
    assert min(cfg["sweep.nodes"]) == 40 and max(cfg["sweep.nodes"]) == 120
    assert min(cfg["sweep.cbr_pairs"]) == 20 and max(cfg["sweep.cbr_pairs"]) == 100


def test_runtime_objects_follow_config():
    cfg = config.loads("radio:\n  eta: 3.0\nsim:\n  cbr_rate: 0.5\n")
    assert cfg.range_map().eta == 3.0 and cfg.radio().eta == 3.0
    assert cfg.sim().cbr_rate == 0.5
    assert cfg.settings().area == (1000.0, 1000.0)


def test_path_loss_exponent_out_of_range():
    with pytest.raises(ConfigError, match="radio.eta"):
        config.loads("radio:\n  eta: 7\n")


@pytest.mark.parametrize("text, fragment", [
    ("radio:\n  bogus: 1\n", "unknown key radio.bogus"),
    ("nonsense:\n  a: 1\n", "unknown section"),
    ("sim:\n  cbr_rate: fast\n", "sim.cbr_rate"),
    ("power:\n  p_min: 0.9\n", "p_min"),
    ("ga:\n  population: 15\n", "ga.population"),
    ("sweep:\n  algorithms: [erto, tcor]\n", "sweep.algorithms"),
    ("- 1\n- 2\n", "mapping"),
])
def test_bad_values_rejected(text, fragment):
    with pytest.raises(ConfigError, match=fragment.replace(".", r"\.")):
        config.loads(text)


def test_parse_error_has_position():
    with pytest.raises(ConfigError, match=r"line \d+, column \d+"):
        config.loads("radio:\n  eta: [2,\n")


def test_round_trip():
    cfg = config.loads("sweep:\n  nodes: [10, 20]\n  replications: 2\nsim:\n  duration: 30\n")
    again = config.loads(cfg.dump())
    assert again == cfg and again.digest() == cfg.digest()


def test_cells_layouts():
    series = config.loads("sweep:\n  nodes: [40, 80]\n  cbr_pairs: [20, 60]\n  load_nodes: 80\n")
    assert [(c.n_nodes, c.n_cbr) for c in series.cells()] == [(40, 20), (80, 20), (80, 60)]
    grid = config.loads("sweep:\n  nodes: [40, 80]\n  cbr_pairs: [20, 60]\n  layout: grid\n")
    assert len(grid.cells()) == 4


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        config.load_config(tmp_path / "nope.yaml")


def test_exponent_without_dot_is_a_number():
    assert config.loads("radio:\n  P_n: 4e-10\n")["radio.P_n"] == 4e-10
    assert config.loads("radio:\n  P_n: 1.0e-9\n")["radio.P_n"] == 1e-9


def test_shipped_configs_load():
    from pathlib import Path
    for path in sorted((Path(__file__).parent.parent / "configs").glob("*.yaml")):
        assert config.load_config(path).cells(), path.name
