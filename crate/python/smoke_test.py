"""Smoke test for the fln_py extension module.

Build and install first, e.g. `pip install maturin && maturin develop -m
crates/python/Cargo.toml --release`, or put a copy of
target/release/libfln_py.so named fln_py.so on PYTHONPATH.
"""

import json
import math
import sys

import numpy as np

import fln_py as fln


def check(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name} {detail}")
    return ok


def main():
    results = []

    gauss = fln.ParameterSet(2, 1, [1.0], [1.0], [2.0])
    value, order, tail = fln.eval_series(gauss, [0.5])
    results.append(check("eval 2F1(1,1;2;1/2) = 2 log 2", abs(value - 2 * math.log(2)) < 1e-12, f"{value.real:.13f}"))

    exact = fln.ParameterSet.from_json(json.dumps({
        "L": 3, "N": 2,
        "alpha": [{"num": 1, "den": 3}, {"num": 2, "den": 5}],
        "beta": [{"num": -1, "den": 7}, {"num": 3, "den": 11}],
        "gamma": [{"num": 1, "den": 2}, {"num": 5, "den": 4}],
    }))
    results.append(check("rank N(L-1)+1", exact.rank == 5))
    results.append(check("exact flatness", fln.is_flat_exact(exact, [(3, 10), (-9, 20)])))

    sys_ = fln.build_system(exact)
    x = [0.2 + 0.1j, -0.3 + 0.05j]
    res = sys_.integrability_residual(x)
    results.append(check("float flatness", res < 1e-12, f"{res:.2e}"))

    # connection at x annihilates dY - sum M_i Y dx_i along the series solution
    y = np.array(fln.holomorphic_solution(exact, x))
    h = 1e-5
    m = [np.array(mi) for mi in sys_.connection(x)]
    worst = 0.0
    for i in range(2):
        xp = list(x); xp[i] += h
        xm = list(x); xm[i] -= h
        dy = (np.array(fln.holomorphic_solution(exact, xp)) - np.array(fln.holomorphic_solution(exact, xm))) / (2 * h)
        worst = max(worst, np.max(np.abs(dy - m[i] @ y)) / np.max(np.abs(y)))
    results.append(check("series solves the system", worst < 1e-6, f"{worst:.2e}"))

    spec = sys_.residue_spectrum("x1=x2")
    want = fln.expected_exponents(exact, "x1=x2")
    dist = max(min(abs(a - b) for b in want) for a in spec)
    results.append(check("residue spectrum on x1=x2", dist < 1e-9))

    generic = fln.ParameterSet(2, 1, [0.25], [-0.1], [0.3])
    mono = fln.monodromy(generic, [0.4 + 0.2j], "x1=1")
    results.append(check("local monodromy at x1=1", mono["deviation"] < 1e-6, f"{mono['deviation']:.2e}"))

    fs = fln.fundamental_system(generic, [0.4], nodes=32)
    det = abs(np.linalg.det(np.array(fs["y"])))
    results.append(check("Euler fundamental system", det > 1e-10 and abs(fs["scaled_determinant"]) > 1e-10, f"|det| {det:.3e}"))

    y_end = fln.continue_solution(generic, [[0.2], [0.5 + 0.3j], [0.6]])
    y_direct = fln.holomorphic_solution(generic, [0.6])
    diff = max(abs(a - b) for a, b in zip(y_end, y_direct))
    results.append(check("continuation inside the disc", diff < 1e-8, f"{diff:.2e}"))

    lax = fln.lax_residual(exact, [0.3, -0.2], 1, 0.37 + 0.2j)
    results.append(check("Lax compatibility", lax < 1e-6, f"{lax:.2e}"))
    ham, cons = fln.hamiltonian_check(exact, [[0.3, -0.2], [0.1 + 0.1j, 0.2]])
    results.append(check("Hamiltonian particular solution", ham < 1e-6 and cons < 1e-8, f"{ham:.2e}"))

    try:
        fln.ParameterSet(2, 1, [1.0, 1.0], [1.0], [2.0])
        results.append(check("bad parameters raise", False))
    except fln.FlnError:
        results.append(check("bad parameters raise", True))

    if all(results):
        print("all smoke checks passed")
        return 0
    return 1


if __name__ == "__main__":
    sys.exit(main())
