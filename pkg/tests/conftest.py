import itertools
import random
from fractions import Fraction

import pytest

from liejet.algebra import DEP, Poly, coord, jet
from liejet.jets import VectorField


def random_rational(rng: random.Random, lo: int = -5, hi: int = 5) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.choice((1, 2, 3)))


def random_point_poly(rng: random.Random, n: int, degree: int = 3,
                      terms: int = 4) -> Poly:
    """Random polynomial in (x1..xn, u) of total degree <= degree."""
    pool = [coord(i) for i in range(1, n + 1)] + [DEP]
    out = Poly.zero()
    for _ in range(terms):
        term = Poly.const(random_rational(rng))
        for _ in range(rng.randint(0, degree)):
            term = term * Poly.variable(rng.choice(pool))
        out = out + term
    return out


def random_vector_field(rng: random.Random, n: int) -> VectorField:
    return VectorField(
        n,
        tuple(random_point_poly(rng, n) for _ in range(n)),
        random_point_poly(rng, n),
    )


def leibniz_hessian_det(n: int) -> Poly:
    """Permutation-sum determinant of the jet Hessian: an oracle that is
    independent of the cofactor-expansion code path."""
    out = Poly.zero()
    for perm in itertools.permutations(range(1, n + 1)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n)
                         if perm[i] > perm[j])
        term = Poly.const((-1) ** inversions)
        for i in range(1, n + 1):
            term = term * Poly.variable(jet(i, perm[i - 1]))
        out = out + term
    return out


@pytest.fixture(scope="session")
def rng():
    return random.Random(20240302)
