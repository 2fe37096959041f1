"""Shared fixtures and independent oracles for the test suite.

Oracles here deliberately avoid the production code paths they check:
quadrature instead of closed forms, factorial enumeration instead of the
assignment solver, direct database enumeration instead of cycle types.
"""

import itertools
import math

import numpy as np

from dbdetect.models import DiscreteJointModel, GaussianModel, make_bernoulli

DIAG_JOINT = np.array([[0.4, 0.1], [0.1, 0.4]])


def diag_model() -> DiscreteJointModel:
    return DiscreteJointModel(joint=DIAG_JOINT.copy())


def independent_model(q=(0.5, 0.5)) -> DiscreteJointModel:
    q = np.asarray(q, dtype=float)
    return DiscreteJointModel(joint=np.outer(q, q))


def bern55():
    return make_bernoulli(0.5, 0.5)


def gauss(rho=0.6) -> GaussianModel:
    return GaussianModel(rho=rho)


def random_discrete_model(rng: np.random.Generator, m: int) -> DiscreteJointModel:
    """Random strictly positive symmetric joint law on m symbols."""
    upper = rng.uniform(0.05, 1.0, size=(m, m))
    sym = upper + upper.T
    return DiscreteJointModel(joint=sym / sym.sum())


# ---------------------------------------------------------------------------
# Gauss-Hermite quadrature oracle for standard-normal expectations
# ---------------------------------------------------------------------------


def gauss_expect_2d(f, nodes: int = 64):
    """E[f(X, Y)] for X, Y independent standard normal, by 2-D Gauss-Hermite
    quadrature (probabilists' weights)."""
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / math.sqrt(2.0 * math.pi)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    ww = np.outer(w, w)
    return float(np.sum(ww * f(xx, yy)))


def gauss_llr_values(rho, x, y):
    c = 1.0 - rho * rho
    return -0.5 * np.log(c) + (-(x * x + y * y) * rho * rho + 2.0 * rho * x * y) / (
        2.0 * c
    )


# ---------------------------------------------------------------------------
# Brute-force oracles
# ---------------------------------------------------------------------------


def brute_force_max_assignment(weights: np.ndarray):
    """Factorial enumeration of the maximum-weight perfect assignment."""
    n = weights.shape[0]
    best_value = -math.inf
    best_perm = None
    for perm in itertools.permutations(range(n)):
        value = sum(weights[i, perm[i]] for i in range(n))
        if value > best_value:
            best_value = value
            best_perm = perm
    return best_perm, best_value


def brute_force_second_moment(model: DiscreteJointModel, n: int, d: int) -> float:
    """E under the null of the squared permutation-mixture likelihood ratio,
    by direct enumeration of every database pair: sum over states of
    P1(x, y)^2 / P0(x, y)."""
    m = model.alphabet_size
    q = model.marginal
    rows = np.array(list(itertools.product(range(m), repeat=d)), dtype=np.int64)
    row_q = np.prod(q[rows], axis=1)
    pair_p = np.ones((rows.shape[0], rows.shape[0]))
    for feature in range(d):
        symbols = rows[:, feature]
        pair_p *= model.joint[symbols[:, None], symbols[None, :]]
    configs = np.array(
        list(itertools.product(range(rows.shape[0]), repeat=n)), dtype=np.int64
    )
    p0_side = np.prod(row_q[configs], axis=1)
    perms = list(itertools.permutations(range(n)))
    p1 = np.zeros((configs.shape[0], configs.shape[0]))
    for perm in perms:
        contrib = np.ones_like(p1)
        for i in range(n):
            contrib *= pair_p[configs[:, i][:, None], configs[:, perm[i]][None, :]]
        p1 += contrib
    p1 /= len(perms)
    p0 = p0_side[:, None] * p0_side[None, :]
    mask = p0 > 0
    return float((p1[mask] ** 2 / p0[mask]).sum())


def brute_force_tv(model: DiscreteJointModel, n: int, d: int) -> float:
    """Total variation between null and permutation-mixture laws by direct
    enumeration (independent of the production enumeration code)."""
    m = model.alphabet_size
    q = model.marginal

    symbols = range(m)
    total = 0.0
    perms = list(itertools.permutations(range(n)))
    for x_flat in itertools.product(symbols, repeat=n * d):
        x = np.array(x_flat).reshape(n, d)
        px = float(np.prod(q[x]))
        for y_flat in itertools.product(symbols, repeat=n * d):
            y = np.array(y_flat).reshape(n, d)
            p0 = px * float(np.prod(q[y]))
            p1 = 0.0
            for perm in perms:
                prod = 1.0
                for i in range(n):
                    for ell in range(d):
                        prod *= model.joint[x[i, ell], y[perm[i], ell]]
                p1 += prod
            p1 /= len(perms)
            total += abs(p0 - p1)
    return 0.5 * total
