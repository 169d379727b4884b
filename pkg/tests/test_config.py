import pytest

from cipherfed.config import load_config, parse_config
from cipherfed.errors import ConfigError


def minimal_doc():
    return {
        "mode": "fhe",
        "seed": 3,
        "federation": {"clients": 2, "rounds": 1, "learning_rate": 0.1},
        "model": {"qubits": 2, "depth": 1},
        "data": {"kind": "blobs", "samples": 100, "classes": 2},
    }


def test_minimal_config_parses():
    cfg = parse_config(minimal_doc())
    assert cfg.mode == "fhe"
    assert cfg.clients == 2
    assert cfg.encryption.ring_degree == 4096
    assert cfg.arch.qubit_count == 2
    assert cfg.quantization.fractional_bits == 16


def test_defaults_fill_in():
    cfg = parse_config({})
    assert cfg.mode == "fhe" and cfg.transport == "direct"
    assert cfg.rounds == 5 and cfg.clients == 2


def test_bad_mode():
    doc = minimal_doc()
    doc["mode"] = "hybrid"
    with pytest.raises(ConfigError, match="mode"):
        parse_config(doc)


def test_bad_transport():
    doc = minimal_doc()
    doc["transport"] = "carrier-pigeon"
    with pytest.raises(ConfigError, match="transport"):
        parse_config(doc)


def test_bad_data_kind():
    doc = minimal_doc()
    doc["data"]["kind"] = "imagenet"
    with pytest.raises(ConfigError, match="data.kind"):
        parse_config(doc)


def test_csv_requires_path():
    doc = minimal_doc()
    doc["data"] = {"kind": "csv"}
    with pytest.raises(ConfigError, match="csv"):
        parse_config(doc)


def test_negative_learning_rate():
    doc = minimal_doc()
    doc["federation"]["learning_rate"] = -1
    with pytest.raises(ConfigError, match="learning_rate"):
        parse_config(doc)


def test_bad_chain_bits():
    doc = minimal_doc()
    doc["encryption"] = {"chain_bits": [60]}
    with pytest.raises(ConfigError, match="chain_bits"):
        parse_config(doc)


def test_rotation_step_out_of_range():
    doc = minimal_doc()
    doc["encryption"] = {"rotation_steps": [99999]}
    with pytest.raises(ConfigError, match="rotation step"):
        parse_config(doc)


def test_bad_model_section():
    doc = minimal_doc()
    doc["model"]["depth"] = 0
    with pytest.raises(ConfigError, match="model"):
        parse_config(doc)


def test_bad_partition_strategy():
    doc = minimal_doc()
    doc["data"]["partition"] = {"strategy": "sorted"}
    with pytest.raises(ConfigError, match="partition"):
        parse_config(doc)


def test_overrides_apply():
    cfg = parse_config(minimal_doc(),
                       overrides={"mode": "plaintext",
                                  "federation.rounds": 9,
                                  "output.metrics_path": "x.jsonl"})
    assert cfg.mode == "plaintext"
    assert cfg.rounds == 9
    assert cfg.output.metrics_path == "x.jsonl"


def test_scalar_section_rejected():
    with pytest.raises(ConfigError, match="mapping"):
        parse_config({"federation": 5})


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.yaml")


def test_invalid_yaml(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("mode: [unclosed\n")
    with pytest.raises(ConfigError, match="YAML"):
        load_config(p)


def test_load_yaml_file(tmp_path):
    p = tmp_path / "run.yaml"
    p.write_text(
        "mode: plaintext\nseed: 4\n"
        "federation:\n  clients: 3\n  rounds: 2\n  learning_rate: 0.2\n"
        "model:\n  qubits: 2\n  depth: 1\n"
        "data:\n  kind: xor\n  samples: 50\n")
    cfg = load_config(p)
    assert cfg.mode == "plaintext" and cfg.clients == 3
    assert cfg.data.kind == "xor"
