"""Exit-code contract of the splatscape CLI: 0 success, 2 config error,
3 adapter failure."""

import json
import pathlib
import subprocess
import sys
import tempfile

CLI = sys.argv[1]


def run(*args):
    return subprocess.run([CLI, *args], capture_output=True, text=True, timeout=600)


def expect(result, code, needle=""):
    assert result.returncode == code, (result.returncode, result.stderr)
    assert needle in result.stderr, result.stderr


with tempfile.TemporaryDirectory() as tmp:
    tmp = pathlib.Path(tmp)
    expect(run("--help"), 0)
    expect(run("--seed", "0", "--output-dir", str(tmp / "a")), 2, "'input'")
    expect(run("--bogus"), 2)
    expect(run("--seed", "0", "--input", "synthetic:desk", "--output-dir", str(tmp / "a"), "--stage", "train"), 2)
    expect(run("--seed", "0", "--input", "synthetic:desk", "--output-dir", str(tmp / "a"), "--w", "2"), 2, "refine.w")

    config = {
        "seed": 1,
        "input": "synthetic:desk",
        "output_dir": str(tmp / "b"),
        "width": 16,
        "height": 16,
        "endpoints": {"depth": {"url": "http://127.0.0.1:1", "timeout": 1, "retries": 0}},
    }
    path = tmp / "config.json"
    path.write_text(json.dumps(config))
    expect(run("--config", str(path), "--stage", "scaffold"), 3, "stage scaffold, view 0")

    config["endpoints"] = {}
    config["scaffold"] = {"optimize_steps": 2}
    path.write_text(json.dumps(config))
    expect(run("--config", str(path), "--stage", "scaffold"), 0)
    assert (tmp / "b" / "scaffold" / "field.ply").exists()
    assert "scaffold" in json.loads((tmp / "b" / "manifest.json").read_text())["stages"]
print("cli exit codes ok")
