"""Shared fixtures: a small engine-generated dataset and a fresh network."""

import subprocess
import sys

import pytest
import torch

from oconnet.model import OConNet


def run_engine(*argv):
    """Invoke the synthesis engine CLI, asserting a clean exit."""
    proc = subprocess.run(
        [sys.executable, "-m", "bennett4r", *argv],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr + proc.stdout
    return proc.stdout


@pytest.fixture(scope="session")
def dataset_paths(tmp_path_factory):
    """Raw and normalized datasets from an 8x8 parameter grid."""
    root = tmp_path_factory.mktemp("engine-data")
    raw = root / "raw.jsonl"
    norm = root / "norm.jsonl"
    run_engine("gen", "--na", "8", "--nalpha", "8", "--out", str(raw))
    run_engine("normalize", "--in", str(raw), "--out", str(norm),
               "--split-seed", "11")
    return {"raw": raw, "norm": norm}


@pytest.fixture(scope="session")
def fresh_model():
    """An untrained network in eval mode, shared by read-only tests."""
    torch.manual_seed(2024)
    model = OConNet()
    model.eval()
    return model
