import subprocess
import sys

import pytest

COVMAP = [sys.executable, "-m", "covmap.cli"]


def run_covmap(*args):
    """Invoke the dataset-producing CLI; the trainer talks to it only through
    its command line and file formats."""
    res = subprocess.run([*COVMAP, *map(str, args)], capture_output=True, text=True)
    if res.returncode != 0:
        raise RuntimeError(f"covmap {' '.join(map(str, args))} failed: {res.stderr}")
    return res.stdout


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """Six simulated 64-cell tiles at 0 dB, built through the producer CLI."""
    root = tmp_path_factory.mktemp("ds")
    out = root / "ds"
    run_covmap("synth", "--count", 6, "--density", 1.2e-5, "--process", "clustered",
               "--n-cells", 64, "--roi-side-m", 5000, "--gamma-db", "0",
               "--seed", 7, "--out", out)
    run_covmap("simulate", out)
    return out
