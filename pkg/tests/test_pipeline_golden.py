"""first-passage -> score -> dm-test on a bundled fixture, compared byte for byte.

Run this file as a script to regenerate the golden outputs after an
intentional change.
"""
import shutil
import sys
from pathlib import Path

import pytest

from censcore import kernels
from censcore.cli import main

FIXTURE = Path(__file__).parent / "fixtures" / "pipeline"

STEPS = [
    ["first-passage", "--input", "{fx}/ens_a.csv", "--threshold", "5", "--horizon", "36",
     "--group-sep", "|", "-o", "{out}/records_a.csv"],
    ["first-passage", "--input", "{fx}/ens_b.csv", "--threshold", "5", "--horizon", "36",
     "--group-sep", "|", "-o", "{out}/records_b.csv"],
    ["score", "--input", "{out}/records_a.csv", "--method", "twcrps", "--tau", "24", "-o", "{out}/scores_a.csv"],
    ["score", "--input", "{out}/records_b.csv", "--method", "twcrps", "--tau", "24", "-o", "{out}/scores_b.csv"],
    ["score", "--input", "{out}/records_a.csv", "--method", "twcrps", "--tau", "24", "--group-by", "group",
     "-o", "{out}/groups_a.csv"],
    ["score", "--input", "{out}/records_b.csv", "--method", "twcrps", "--tau", "24", "--group-by", "group",
     "-o", "{out}/groups_b.csv"],
    ["dm-test", "--a", "{out}/scores_b.csv", "--b", "{out}/scores_a.csv", "-o", "{out}/dm_cases.csv"],
    ["dm-test", "--a", "{out}/groups_b.csv", "--b", "{out}/groups_a.csv", "--lag", "0", "-o", "{out}/dm_groups.csv"],
]
OUTPUTS = ["records_a.csv", "records_b.csv", "scores_a.csv", "scores_b.csv",
           "groups_a.csv", "groups_b.csv", "dm_cases.csv", "dm_groups.csv"]


def run_pipeline(out: Path):
    for step in STEPS:
        argv = [a.format(fx=FIXTURE, out=out) for a in step]
        assert main(argv) == 0, argv


def test_pipeline_matches_golden(tmp_path):
    run_pipeline(tmp_path)
    for name in OUTPUTS:
        got = (tmp_path / name).read_bytes()
        want = (FIXTURE / f"golden_{name}").read_bytes()
        assert got == want, name


def test_pipeline_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    run_pipeline(a)
    run_pipeline(b)
    for name in OUTPUTS:
        assert (a / name).read_bytes() == (b / name).read_bytes()


@pytest.mark.parametrize("backend", ["python", "cython"])
def test_pipeline_backend_independent(tmp_path, backend):
    if backend not in kernels.available_backends():
        pytest.skip(f"{backend} backend unavailable")
    previous = kernels.set_backend(backend)
    try:
        run_pipeline(tmp_path)
    finally:
        kernels.set_backend(previous)
    for name in OUTPUTS:
        assert (tmp_path / name).read_bytes() == (FIXTURE / f"golden_{name}").read_bytes(), name


if __name__ == "__main__":
    tmp = FIXTURE / "_regen"
    tmp.mkdir(exist_ok=True)
    run_pipeline(tmp)
    for name in OUTPUTS:
        shutil.copy(tmp / name, FIXTURE / f"golden_{name}")
    shutil.rmtree(tmp)
    sys.exit(0)
