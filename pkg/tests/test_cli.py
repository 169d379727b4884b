import json
from pathlib import Path

import numpy as np
import pytest

from cipherfed.cli import main
from cipherfed.model import flatten_weights, init_model, load_checkpoint
from cipherfed.qsim import PqcArchitecture

BASE_CONFIG = """\
mode: fhe
seed: 11
transport: direct
deterministic_timing: true

federation:
  clients: 2
  rounds: {rounds}
  epochs_per_round: 1
  learning_rate: 0.15
  batch_size: 16

model:
  qubits: 2
  depth: 1

data:
  kind: blobs
  samples: 120
  noise: 0.4
  classes: 2

output:
  metrics_path: {out}/metrics.jsonl
  checkpoint_path: {out}/model.ckpt
  report_path: {out}/report.json
"""


@pytest.fixture()
def workdir(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text(BASE_CONFIG.format(rounds=1, out=tmp_path))
    return tmp_path, cfg


def test_keygen_writes_three_files(workdir, capsys):
    tmp, cfg = workdir
    rc = main(["keygen", "--config", str(cfg), "--out", str(tmp / "keys")])
    assert rc == 0
    for name in ("secret.key", "public.key", "galois.key"):
        assert (tmp / "keys" / name).exists()
    out = capsys.readouterr().out
    assert "ring degree" in out and "4096" in out


def test_keygen_deterministic(workdir):
    tmp, cfg = workdir
    main(["keygen", "--config", str(cfg), "--out", str(tmp / "k1")])
    main(["keygen", "--config", str(cfg), "--out", str(tmp / "k2")])
    for name in ("secret.key", "public.key", "galois.key"):
        assert (tmp / "k1" / name).read_bytes() == \
            (tmp / "k2" / name).read_bytes()


def test_train_writes_outputs(workdir, capsys):
    tmp, cfg = workdir
    rc = main(["train", "--config", str(cfg)])
    assert rc == 0
    lines = (tmp / "metrics.jsonl").read_text().strip().splitlines()
    assert len(lines) == 1 * (2 + 1)  # rounds * (clients + global)
    for line in lines:
        row = json.loads(line)
        assert set(row) == {"round", "actor", "train_loss", "train_acc",
                            "test_loss", "test_acc", "wall_ms"}
    assert (tmp / "model.ckpt").exists()
    out = capsys.readouterr().out
    assert "final test acc" in out and "wall time" in out


def test_train_zero_rounds_checkpoint_is_init(workdir):
    tmp, cfg = workdir
    rc = main(["train", "--config", str(cfg), "--rounds", "0"])
    assert rc == 0
    ckpt = load_checkpoint((tmp / "model.ckpt").read_bytes())
    arch = PqcArchitecture(qubit_count=2, depth=1)
    expect = init_model(2, arch, 2, rng_seed=11)
    assert np.array_equal(flatten_weights(ckpt), flatten_weights(expect))


def test_train_with_pregenerated_keys(workdir, tmp_path):
    tmp, cfg = workdir
    main(["keygen", "--config", str(cfg), "--out", str(tmp / "keys")])
    doc = cfg.read_text() + f"\nkeys:\n  dir: {tmp / 'keys'}\n"
    cfg2 = tmp / "run2.yaml"
    cfg2.write_text(doc)
    assert main(["train", "--config", str(cfg2)]) == 0


def test_train_missing_key_dir_is_io_error(workdir):
    tmp, cfg = workdir
    doc = cfg.read_text() + f"\nkeys:\n  dir: {tmp / 'absent'}\n"
    cfg2 = tmp / "run2.yaml"
    cfg2.write_text(doc)
    assert main(["train", "--config", str(cfg2)]) == 4


def test_invalid_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("mode: nonsense\n")
    assert main(["train", "--config", str(cfg)]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_exits_2(tmp_path):
    assert main(["train", "--config", str(tmp_path / "none.yaml")]) == 2


def test_unwritable_metrics_path_exits_4(workdir):
    tmp, cfg = workdir
    override = str(Path("/proc/definitely/not/writable/m.jsonl"))
    assert main(["train", "--config", str(cfg), "--metrics", override]) == 4


def test_keygen_unwritable_path_exits_4(workdir, capsys):
    tmp, cfg = workdir
    rc = main(["keygen", "--config", str(cfg),
               "--out", "/proc/definitely/not/writable"])
    assert rc == 4
    assert "io error" in capsys.readouterr().err


def test_compare_reports_gap(workdir, capsys):
    tmp, cfg = workdir
    rc = main(["compare", "--config", str(cfg)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "fhe" in out and "plaintext" in out and "accuracy gap" in out
    report = json.loads((tmp / "report.json").read_text())
    for arm in ("fhe", "plaintext"):
        assert set(report[arm]) == {"train_acc", "train_loss", "test_acc",
                                    "test_loss", "wall_seconds",
                                    "rounds_completed"}
    assert report["accuracy_gap"] == 0.0  # identical seeds, tiny noise
    assert (tmp / "metrics.fhe.jsonl").exists()
    assert (tmp / "metrics.plaintext.jsonl").exists()


def test_inspect_key_files(workdir, capsys):
    tmp, cfg = workdir
    main(["keygen", "--config", str(cfg), "--out", str(tmp / "keys")])
    assert main(["inspect", str(tmp / "keys" / "secret.key")]) == 0
    out = capsys.readouterr().out
    assert "secret key" in out
    assert "withheld" in out
    assert main(["inspect", str(tmp / "keys" / "public.key")]) == 0
    assert "public key" in capsys.readouterr().out


def test_inspect_checkpoint(workdir, capsys):
    tmp, cfg = workdir
    main(["train", "--config", str(cfg)])
    capsys.readouterr()
    assert main(["inspect", str(tmp / "model.ckpt")]) == 0
    out = capsys.readouterr().out
    assert "checkpoint" in out and "qubits" in out


def test_inspect_unknown_magic_exits_3(tmp_path, capsys):
    p = tmp_path / "junk.bin"
    p.write_bytes(b"WHAT is this file")
    assert main(["inspect", str(p)]) == 3
    assert "magic" in capsys.readouterr().err


def test_inspect_missing_file_exits_4(tmp_path):
    assert main(["inspect", str(tmp_path / "ghost.bin")]) == 4


def test_socket_transport_via_cli(workdir):
    tmp, cfg = workdir
    rc = main(["train", "--config", str(cfg), "--transport", "socket",
               "--metrics", str(tmp / "sock.jsonl")])
    assert rc == 0
    assert (tmp / "sock.jsonl").exists()
