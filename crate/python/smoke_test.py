#!/usr/bin/env python3
"""Smoke test for the unicert_py extension module.

Builds the cdylib with cargo, loads it without installing, and exercises the
bound surface end to end. Exits non-zero on the first failed check.
"""

import math
import shutil
import subprocess
import sys
import sysconfig
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent


def build_extension(workdir: Path) -> None:
    subprocess.run(
        ["cargo", "build", "-p", "unicert-py"],
        cwd=REPO_ROOT,
        check=True,
    )
    built = REPO_ROOT / "target" / "debug" / "libunicert_py.so"
    if not built.exists():  # e.g. macOS
        built = REPO_ROOT / "target" / "debug" / "libunicert_py.dylib"
    suffix = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    shutil.copy2(built, workdir / f"unicert_py{suffix}")


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        workdir = Path(tmp)
        build_extension(workdir)
        sys.path.insert(0, str(workdir))
        import unicert_py as uc

        # Operator counting and the sample-size formula.
        assert uc.count_independent_operators(1) == 3
        assert uc.count_independent_operators(2) == 12
        assert uc.count_independent_operators(3) == 37
        assert uc.shots_per_basis(0.01) == math.ceil(32 * math.log(12) / (25 * 0.01**2))
        print("ok: counting and shot formula")

        # Pauli string algebra.
        xz = uc.PauliString("+XZ")
        zx = uc.PauliString("+ZX")
        assert xz.n_qubits == 2 and xz.weight == 2 and xz.support == [0, 1]
        assert xz.anticommutes(uc.PauliString("+ZI"))
        assert not xz.anticommutes(zx)
        assert str(xz.multiply(zx)) in ("+YY", "-YY")
        print("ok: Pauli strings")

        # Graphs and stabilizer tableaus.
        path5 = uc.GraphSpec.path(5)
        assert path5.n_vertices == 5
        assert path5.edges == [(0, 1), (1, 2), (2, 3), (3, 4)]
        reparsed = uc.GraphSpec.parse(str(path5))
        assert reparsed.edges == path5.edges

        tableau = uc.StabilizerTableau.graph_state(path5)
        assert tableau.n_qubits == 5
        assert len(tableau.generators) == 5
        assert tableau.expectation(uc.PauliString(tableau.generators[0])) == 1
        assert tableau.expectation(uc.PauliString("+ZIIII")) == 0
        assert tableau.classify(path5) == "bipartite_even_degree_graph"
        print("ok: graphs and tableaus")

        # Certification protocol on simulated states.
        report = uc.certify_simulated(path5, 1e-4, seed=7)
        assert report["verdict"] == "Certified"
        assert report["n_qubits"] == 5
        assert report["u_hat"] > 1 - 13 * 1e-4 / 4
        report = uc.certify_simulated(
            uc.GraphSpec.path(3), 1e-3, seed=1, noise=("orthogonal", 0.5)
        )
        assert report["verdict"] == "Failed"
        print("ok: certification protocol")

        # Chain simulation: the idealized variant is exact, the pulsed one
        # close at large detuning scale.
        run = uc.chain_observables(3, 20.0, ideal=True)
        assert all(abs(m - 1) < 1e-9 for m in run["m_values"])
        run = uc.chain_observables(3, 200.0)
        assert run["n_sites"] == 3 and len(run["m_values"]) == 4
        assert all(m > 0.99 for m in run["m_values"])
        assert {s["label"] for s in run["schedules"]} == {
            "prepare",
            "measure_x",
            "measure_xz_plus",
            "measure_xz_minus",
        }
        print("ok: chain simulation")

        # Exact-expectation classifier.
        target = uc.StabilizerTableau.graph_state(uc.GraphSpec.path(4))
        verdict = uc.promise_check(target)
        assert verdict["verdict"] == "is_target_graph_state"
        assert verdict["conditions"]["c1"] == 1
        product = uc.StabilizerTableau.parse("+ZIII\n+IZII\n+IIZI\n+IIIZ\n")
        assert uc.promise_check(product)["verdict"] == "is_not"
        print("ok: exact-expectation classifier")

        print("smoke test passed")


if __name__ == "__main__":
    main()
