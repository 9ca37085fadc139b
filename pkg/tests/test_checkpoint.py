"""Tests for the checkpoint container."""

import pytest
import torch

from src.core.errors import CheckpointError
from src.core.layers import parameter_hash
from src.data.windows import window_sampler
from src.train.alternating import alternating_step, build_optim_state
from src.train.checkpoint import load_checkpoint, save_checkpoint

from .conftest import make_clip


@pytest.fixture
def trained(detector_factory, tiny_config):
    clip, spec, _ = make_clip()
    detector = detector_factory(specs=(spec,))
    optim = build_optim_state(detector, tiny_config, warmup=1, total=10)
    window = list(window_sampler(clip, 3))[-1]
    alternating_step(detector, window, optim)
    return detector, optim, spec


def test_round_trip_restores_weights_and_optimizer(tmp_path, trained, detector_factory, tiny_config):
    detector, optim, spec = trained
    path = save_checkpoint(tmp_path / "last.pt", detector, optim, tiny_config, epoch=2, best_score=0.4)

    checkpoint = load_checkpoint(path, tiny_config)
    assert checkpoint.step == 1
    assert checkpoint.epoch == 2
    assert checkpoint.best_score == 0.4
    assert checkpoint.config == tiny_config

    fresh = detector_factory(config=tiny_config.replace(seed=99), specs=(spec,))
    fresh_optim = build_optim_state(fresh, tiny_config, warmup=1, total=10)
    checkpoint.restore(fresh, fresh_optim)
    assert parameter_hash(fresh.parameters()) == parameter_hash(detector.parameters())
    assert fresh_optim.step == 1
    saved = optim.optimizer_b.state_dict()["state"]
    key = next(iter(saved))
    assert torch.equal(fresh_optim.optimizer_b.state_dict()["state"][key]["exp_avg"], saved[key]["exp_avg"])


def test_architecture_mismatch(tmp_path, trained, tiny_config):
    detector, optim, _ = trained
    path = save_checkpoint(tmp_path / "a.pt", detector, optim, tiny_config, epoch=0)
    with pytest.raises(CheckpointError) as exc:
        load_checkpoint(path, tiny_config.replace(model__channels=32))
    assert "model.channels" in str(exc.value)


def test_training_keys_may_differ(tmp_path, trained, tiny_config):
    detector, optim, _ = trained
    path = save_checkpoint(tmp_path / "a.pt", detector, optim, tiny_config, epoch=0)
    load_checkpoint(path, tiny_config.replace(train__lr_other=1e-2, eval__jobs=3))


def test_weights_only_checkpoint_cannot_resume(tmp_path, trained, tiny_config):
    detector, optim, _ = trained
    path = save_checkpoint(tmp_path / "w.pt", detector, None, tiny_config, epoch=0)
    checkpoint = load_checkpoint(path)
    checkpoint.restore(detector)
    with pytest.raises(CheckpointError):
        checkpoint.restore(detector, optim)


def test_wrong_version(tmp_path, trained, tiny_config):
    detector, optim, _ = trained
    path = save_checkpoint(tmp_path / "v.pt", detector, optim, tiny_config, epoch=0)
    payload = torch.load(path, weights_only=False)
    payload["format_version"] = 99
    torch.save(payload, path)
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_missing_segment(tmp_path, trained, tiny_config):
    detector, optim, _ = trained
    path = save_checkpoint(tmp_path / "s.pt", detector, optim, tiny_config, epoch=0)
    payload = torch.load(path, weights_only=False)
    del payload["pointbranch"]
    torch.save(payload, path)
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_unreadable_files(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "absent.pt")
    garbage = tmp_path / "garbage.pt"
    garbage.write_bytes(b"not a checkpoint")
    with pytest.raises(CheckpointError):
        load_checkpoint(garbage)
