"""Smoke test for the lopost Python extension.

Uses an installed ``lopost`` module if there is one (``maturin develop`` in
crates/python); otherwise builds the extension with cargo and loads it from
the target directory.
"""

import importlib.util
import math
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_lopost():
    try:
        import lopost

        return lopost
    except ImportError:
        pass
    subprocess.run(
        ["cargo", "build", "--release", "-p", "lopost-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    built = ROOT / "target" / "release" / "liblopost_py.so"
    staged = pathlib.Path(tempfile.mkdtemp()) / "lopost.so"
    shutil.copy(built, staged)
    spec = importlib.util.spec_from_file_location("lopost", staged)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    lopost = load_lopost()
    readout = ["1", "3", "2", "4"]
    theta = math.acos(1 / math.sqrt(3))

    circuit = lopost.Circuit.w4(theta)
    final, taps = circuit.run()
    assert sorted(taps) == ["psi1", "psi2", "psi3", "psi4"]
    probability, conditional = lopost.project(final, readout)
    assert abs(probability - 2 / 27) < 1e-12, probability
    fid = lopost.fidelity(conditional, lopost.w_state(4, readout))
    assert abs(fid - 1) < 1e-12, fid
    for amplitude in conditional.terms().values():
        assert abs(amplitude - 0.5) < 1e-12

    final, _ = lopost.Circuit.w4(theta, polarizer=True).run()
    probability, conditional = lopost.project(final, readout, lossy=True)
    assert len(conditional) == 3 and abs(probability - 1 / 18) < 1e-12

    theta_max, p_max = lopost.maximize(1e-6)
    assert abs(theta_max - theta) < 1e-6 and abs(p_max - 2 / 27) < 1e-9

    for row in lopost.sweep(0.1, 1.4, 6):
        assert row[3] < 1e-10

    again = lopost.Circuit.parse(circuit.to_json())
    assert again == circuit

    failed = [c for c in lopost.run_verification() if not c[4]]
    assert not failed, failed
    print(f"lopost smoke test passed: p* = {p_max:.12f} at theta* = {theta_max:.9f}")


if __name__ == "__main__":
    sys.exit(main())
