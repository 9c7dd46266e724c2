"""Smoke test for the pygilda extension module.

Build and run from the repository root:

    cargo build --release -p gilda-py --features extension-module
    cp target/release/libpygilda.so python/pygilda.so
    python3 python/smoke_test.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pygilda  # noqa: E402


def matmul(a, b):
    return [[sum(x * y for x, y in zip(row, col)) for col in zip(*b)] for row in a]


def transpose(a):
    return [list(col) for col in zip(*a)]


def orthonormality_error(r):
    g = matmul(transpose(r), r)
    p = len(g)
    return math.sqrt(sum((g[i][j] - (i == j)) ** 2 for i in range(p) for j in range(p)))


def main():
    data, labels = pygilda.generate_dataset(12, 4, 200, ecc_mean=2.0, mean_std=1.0, seed=7)
    assert len(data) == 12 and len(labels) == 800

    within, between = pygilda.scatter_matrices(data, labels)
    r_eig = pygilda.eigenvector_solution(within, between, 3)
    assert orthonormality_error(r_eig) < 1e-10
    f_eig = pygilda.trace_ratio_objective(r_eig, within, between)

    p0 = [[0.1 * x for x in row] for row in r_eig]
    pmo = pygilda.pmo_optimize(within, between, p0)
    two = pygilda.two_step_optimize(within, between, pygilda.retract(p0))
    for run in (pmo, two):
        assert orthonormality_error(run.final_point) < 1e-10
        assert run.final_objective <= f_eig + 1e-12
        assert run.trace[0] >= run.final_objective

    imp_pmo = pygilda.normalized_improvement(pmo.final_objective, f_eig)
    imp_two = pygilda.normalized_improvement(two.final_objective, f_eig)

    grad = pygilda.objective_gradient(r_eig, within, between)
    rgrad = pygilda.riemannian_gradient(r_eig, grad)
    proj = pygilda.tangent_project(r_eig, rgrad)
    assert max(abs(a - b) for ra, rb in zip(proj, rgrad) for a, b in zip(ra, rb)) < 1e-10
    vjp = pygilda.retraction_vjp(p0, rgrad)
    assert len(vjp) == 12 and len(vjp[0]) == 3

    try:
        pygilda.retract([[1.0, 2.0], [2.0, 4.0], [0.0, 0.0]])
    except ValueError as e:
        assert "rank_deficient" in str(e)
    else:
        raise AssertionError("rank-deficient input accepted")

    csv = pygilda.run_sweep("desk_dim", seed=1, values=[4], repetitions=2)
    assert csv.splitlines()[0].startswith("sweep_kind,")
    assert len(csv.splitlines()) == 1 + 2 * 3

    print(f"f_eig={f_eig:.6f} pmo={pmo.final_objective:.6f} two_step={two.final_objective:.6f}")
    print(f"improvement pmo={imp_pmo:.3e} two_step={imp_two:.3e}")
    print("smoke test passed")


if __name__ == "__main__":
    main()
