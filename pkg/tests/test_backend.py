from __future__ import annotations

import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent


def _probe(disable: bool) -> dict:
    env = dict(os.environ, ANTIJAM_DISABLE_NUMBA="1" if disable else "0")
    proc = subprocess.run([sys.executable, "-m", "tests._parity_probe"], cwd=ROOT, env=env,
                          capture_output=True, text=True, timeout=600)
    assert proc.returncode == 0, proc.stderr
    return json.loads(proc.stdout)


@pytest.fixture(scope="module")
def both():
    return _probe(False), _probe(True)


def test_flag_selects_backend(both):
    fast, slow = both
    assert slow["backend"] == "numpy"
    assert fast["backend"] in ("numba", "numpy")


def test_simulation_is_bit_identical(both):
    fast, slow = both
    assert fast["counters"] == slow["counters"]
    assert fast["trace_sum"] == slow["trace_sum"]


def test_tabular_learning_agrees(both):
    fast, slow = both
    assert fast["q_acc"] == slow["q_acc"]
    assert np.allclose(fast["q"], slow["q"], rtol=0, atol=1e-12)


@pytest.mark.parametrize("mode", ["plain", "dueling"])
def test_deep_training_agrees(both, mode):
    fast, slow = both[0][mode], both[1][mode]
    assert fast["actions"] == slow["actions"]
    assert fast["loss"] == pytest.approx(slow["loss"], rel=1e-9)
    assert np.allclose(fast["params"], slow["params"], rtol=0, atol=1e-10)
