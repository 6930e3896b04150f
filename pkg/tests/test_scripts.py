import subprocess
import sys
from pathlib import Path

SCRIPTS = Path(__file__).resolve().parent.parent / "scripts"


def run(name, *args):
    return subprocess.run([sys.executable, str(SCRIPTS / name), *args], capture_output=True, text=True, check=True).stdout


def test_dims_table():
    out = run("dims_table.py", "--n-max", "3")
    assert "s3 transpositions        3  [1, 3, 4, 3]" in out


def test_freeness_demo():
    out = run("freeness_demo.py", "--window", "1", "--q", "2")
    assert "(4*gamma)·F(gamma*)" in out
