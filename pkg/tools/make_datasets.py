#!/usr/bin/env python3
"""Generate the bundled benchmark datasets.

Produces five synthetic asset universes in OR-Library `port` text format
(weekly-return scale statistics, factor-model correlations) plus their
unconstrained efficient frontiers (`portef` files, 2000 points each)
computed by long-only minimum-variance QP at a grid of target returns.

The portef1 frontier additionally has its two lowest-return vertices pinned
to fixed reference values used by the evaluation test fixtures; the universe
is shifted/scaled beforehand so its true frontier meets that boundary.
"""

import sys
from pathlib import Path

import numpy as np
from cvxopt import matrix, solvers

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

solvers.options["show_progress"] = False
solvers.options["abstol"] = 1e-10
solvers.options["reltol"] = 1e-9

OUT_DIR = Path(__file__).resolve().parent.parent / "data"
N_POINTS = 2000

DATASETS = [
    ("port1", 31, 101),
    ("port2", 85, 102),
    ("port3", 89, 103),
    ("port4", 98, 104),
    ("port5", 225, 105),
]

# Fixed boundary vertex for portef1 (pinned by the evaluation fixtures).
R_MIN = 0.0027843362999818118
S_MIN = 0.025342793847561478
SLOPE = 0.0019523979979194190  # d(std)/d(return) of the first frontier segment
GMV_R_TARGET = R_MIN + 2e-5
GMV_S_TARGET = S_MIN + 5e-5


def make_universe(n, seed):
    rng = np.random.default_rng(seed)
    mu = rng.normal(0.0035, 0.0028, n)
    # A cluster of near-equal high-return assets keeps the top of the
    # constrained frontier close to the unconstrained one.
    top = rng.choice(n, size=max(6, n // 8), replace=False)
    mu[top] = rng.normal(0.0095, 0.0003, len(top))
    mu = np.clip(mu, -0.004, 0.0105)

    s = np.exp(rng.normal(np.log(0.034), 0.30, n))
    s = np.clip(s, 0.016, 0.095)

    b1 = rng.uniform(0.3, 0.9, n)
    b2 = rng.normal(0.0, 0.25, n)
    b3 = rng.normal(0.0, 0.25, n)
    psi = rng.uniform(0.25, 0.9, n)
    c = np.outer(b1, b1) + np.outer(b2, b2) + np.outer(b3, b3) + np.diag(psi)
    d = np.sqrt(np.diag(c))
    rho = c / np.outer(d, d)
    np.fill_diagonal(rho, 1.0)
    return mu, s, rho


def gmv(cov):
    n = cov.shape[0]
    P = matrix(2e4 * cov)
    q = matrix(np.zeros(n))
    G = matrix(-np.eye(n))
    h = matrix(np.zeros(n))
    A = matrix(np.ones((1, n)))
    b = matrix(np.ones(1))
    sol = solvers.qp(P, q, G, h, A, b)
    assert sol["status"] == "optimal", sol["status"]
    return np.array(sol["x"]).ravel()


def frontier(mu, cov, r_grid):
    n = cov.shape[0]
    P = matrix(2e4 * cov)
    q = matrix(np.zeros(n))
    G = matrix(-np.eye(n))
    h = matrix(np.zeros(n))
    A = matrix(np.vstack([np.ones(n), mu]))
    variances = np.empty(len(r_grid))
    for i, r in enumerate(r_grid):
        sol = solvers.qp(P, q, G, h, A, matrix([1.0, float(r)]))
        assert sol["status"] == "optimal", (sol["status"], r)
        w = np.array(sol["x"]).ravel()
        variances[i] = w @ cov @ w
    return variances


def write_port(path, mu, s, rho):
    n = len(mu)
    with open(path, "w") as fh:
        fh.write(f"{n}\n")
        for i in range(n):
            fh.write(f"{mu[i]:.6f} {s[i]:.6f}\n")
        for i in range(n):
            for j in range(i, n):
                fh.write(f"{i + 1} {j + 1} {rho[i, j]:.6f}\n")


def write_portef(path, returns, variances):
    with open(path, "w") as fh:
        for r, v in zip(returns, variances):
            fh.write(f"{r:.17g} {v:.17g}\n")


def rounded(mu, s, rho):
    mu_r = np.round(mu, 6)
    s_r = np.round(s, 6)
    rho_r = np.round(rho, 6)
    rho_r = np.triu(rho_r) + np.triu(rho_r, 1).T  # exact symmetry after rounding
    np.fill_diagonal(rho_r, 1.0)
    return mu_r, s_r, rho_r


def build(name, n, seed):
    mu, s, rho = make_universe(n, seed)

    if name == "port1":
        # Move the true long-only GMV just above the pinned boundary vertex.
        cov = rho * np.outer(s, s)
        w = gmv(cov)
        r_g = float(mu @ w)
        s_g = float(np.sqrt(w @ cov @ w))
        s = s * (GMV_S_TARGET / s_g)
        mu = mu + (GMV_R_TARGET - r_g)

    mu_r, s_r, rho_r = rounded(mu, s, rho)
    cov = rho_r * np.outer(s_r, s_r)

    w = gmv(cov)
    r_lo = float(mu_r @ w)
    v_lo = float(w @ cov @ w)
    r_hi = float(np.max(mu_r)) - 1e-9
    print(f"{name}: n={n} gmv=({r_lo:.8f}, {np.sqrt(v_lo):.8f}) r_hi={r_hi:.6f}")

    if name == "port1":
        assert abs(r_lo - GMV_R_TARGET) < 5e-5, r_lo
        assert np.sqrt(v_lo) > S_MIN + 1e-5, np.sqrt(v_lo)
        graft_r = np.array([R_MIN, R_MIN + 1e-6])
        graft_s = np.array([S_MIN, S_MIN + SLOPE * 1e-6])
        r_grid = np.linspace(max(r_lo, R_MIN + 1e-5), r_hi, N_POINTS - 2)
        variances = frontier(mu_r, cov, r_grid)
        variances = np.maximum.accumulate(variances)
        assert variances[0] > graft_s[-1] ** 2
        returns = np.concatenate([graft_r, r_grid])
        variances = np.concatenate([graft_s**2, variances])
    else:
        returns = np.linspace(r_lo, r_hi, N_POINTS)
        variances = frontier(mu_r, cov, returns)
        variances = np.maximum.accumulate(variances)

    assert len(returns) == N_POINTS
    assert np.all(np.diff(returns) > 0)
    assert np.all(np.diff(variances) >= 0)

    write_port(OUT_DIR / name, mu_r, s_r, rho_r)
    write_portef(OUT_DIR / name.replace("port", "portef"), returns, variances)


def main():
    OUT_DIR.mkdir(exist_ok=True)
    for name, n, seed in DATASETS:
        build(name, n, seed)


if __name__ == "__main__":
    main()
