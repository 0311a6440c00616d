"""Infinitesimal invariance checking and symmetry classification machinery.

The engine answers three questions about a candidate generator and an
equation F = 0, in increasing order of cost:

  * does the prolonged field annihilate F identically as a polynomial?
  * if not, is the result an exact polynomial multiple of F?
  * if not, does it vanish exactly at random rational points of the
    solution variety (with a nonzero witness as disproof otherwise)?

On top of that it extracts the linear determining system for the unknown
coefficient functions, counts the solution space of a bounded-degree
polynomial ansatz by an exact nullspace computation, and checks that a
basis of generators closes under the Lie bracket.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .algebra import (
    Atom,
    DEP,
    KIND_FUNC,
    KIND_THETA,
    Monomial,
    Poly,
    THETA,
    coord,
    divide_exact,
    nullspace,
    solve_exact,
)
from .equations import (
    JetPoint,
    PdeSystem,
    build_affine_maximal,
    build_monge_ampere,
    sample_point,
)
from .jets import Field, SymbolicVectorField, VectorField, apply_prolonged

DEFAULT_TRIALS = 100
DEFAULT_SEED = 20250601

VERDICT_IDENTICAL = "identically-zero"
VERDICT_MULTIPLIER = "multiplier-found"
VERDICT_ON_VARIETY = "zero-on-variety"
VERDICT_FAILS = "fails"


class NotClosedError(Exception):
    """A bracket of two basis fields left the span of the basis."""

    def __init__(self, pair: tuple[int, int], bracket: VectorField):
        super().__init__(f"bracket of basis fields {pair} is outside the span")
        self.pair = pair
        self.bracket = bracket


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one infinitesimal invariance check."""

    verdict: str
    samples: int
    seed: int
    trials: int
    timing_ms: float
    multiplier: Poly | None = None
    witness: JetPoint | None = None
    residual: Fraction | None = None

    @property
    def passed(self) -> bool:
        return self.verdict != VERDICT_FAILS


@dataclass(frozen=True)
class DeterminingSystem:
    """Homogeneous linear system for the unknown coefficient functions.

    Every equation is a polynomial of degree 1 in the formal derivative
    atoms with rational coefficients; no jet atoms remain.
    """

    unknowns: tuple[Atom, ...]
    equations: tuple[Poly, ...]


@dataclass(frozen=True)
class GeneratorBasis:
    """A linearly independent list of generators for one regime."""

    fields: tuple[VectorField, ...]
    n: int
    regime: str

    def __post_init__(self):
        monos = _span_monomials(self.fields)
        vecs = [_field_vector(v, monos) for v in self.fields]
        # columns = fields; independence <=> trivial nullspace
        rows = [[vec[r] for vec in vecs] for r in range(len(monos) * (self.n + 1))]
        dim, _ = nullspace(rows, ncols=len(self.fields))
        if dim != 0:
            raise ValueError(f"generator basis for {self.regime} is dependent")


@dataclass(frozen=True)
class ClosureReport:
    closed: bool
    structure_constants: dict[tuple[int, int], tuple[Fraction, ...]]


def infinitesimal_check(sys: PdeSystem, v: Field,
                        trials: int = DEFAULT_TRIALS,
                        seed: int = DEFAULT_SEED,
                        jobs: int = 1) -> CheckReport:
    """Decide whether a field generates a symmetry of the equation.

    Identically-zero and multiplier verdicts are exact certificates; the
    sampling verdict is exact per point, with the first nonzero value
    returned as a rational witness of failure.  Trial i depends only on
    (seed, i), so the verdict is independent of the worker count `jobs`.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    t0 = time.perf_counter()
    R = apply_prolonged(v, sys.F, sys.order)
    if R.is_zero:
        return CheckReport(VERDICT_IDENTICAL, 0, seed, trials,
                           _ms(t0))
    mu = divide_exact(R, sys.F)
    if mu is not None:
        return CheckReport(VERDICT_MULTIPLIER, 0, seed, trials,
                           _ms(t0), multiplier=mu)

    def trial(idx: int) -> tuple[JetPoint, Fraction]:
        pt = sample_point(sys, seed, idx)
        return pt, R.evaluate(pt.env)

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for start in range(0, trials, jobs):
                chunk = range(start, min(start + jobs, trials))
                for idx, (pt, value) in zip(chunk, pool.map(trial, chunk)):
                    if value != 0:
                        return CheckReport(VERDICT_FAILS, idx, seed, trials,
                                           _ms(t0), witness=pt, residual=value)
    else:
        for idx in range(trials):
            pt, value = trial(idx)
            if value != 0:
                return CheckReport(VERDICT_FAILS, idx, seed, trials, _ms(t0),
                                   witness=pt, residual=value)
    return CheckReport(VERDICT_ON_VARIETY, trials, seed, trials, _ms(t0))


def _ms(t0: float) -> float:
    return (time.perf_counter() - t0) * 1000.0


def check_generator_basis(sys: PdeSystem, basis: GeneratorBasis,
                          trials: int = DEFAULT_TRIALS,
                          seed: int = DEFAULT_SEED) -> list[CheckReport]:
    return [infinitesimal_check(sys, v, trials, seed) for v in basis.fields]


# -- Lie algebra structure -------------------------------------------------------

def lie_bracket(v: VectorField, w: VectorField) -> VectorField:
    """Commutator of two point fields: coefficients v(w_i) - w(v_i)."""
    if v.n != w.n:
        raise ValueError("fields live in different dimensions")
    xi = tuple(v.apply_to(w.xi[i]) - w.apply_to(v.xi[i]) for i in range(v.n))
    phi = v.apply_to(w.phi) - w.apply_to(v.phi)
    return VectorField(v.n, xi, phi)


def _span_monomials(fields) -> list[Monomial]:
    monos: set[Monomial] = set()
    for f in fields:
        for p in (*f.xi, f.phi):
            monos.update(p.terms)
    return sorted(monos)


def _field_vector(v: VectorField, monos: list[Monomial]) -> list[Fraction]:
    out: list[Fraction] = []
    for p in (*v.xi, v.phi):
        for m in monos:
            out.append(p.terms.get(m, Fraction(0)))
    return out


def span_coefficients(fields, target: VectorField) -> list[Fraction] | None:
    """Exact coordinates of `target` in the span of `fields`, or None."""
    monos = _span_monomials(list(fields) + [target])
    vecs = [_field_vector(f, monos) for f in fields]
    tvec = _field_vector(target, monos)
    rows = [[vec[r] for vec in vecs] for r in range(len(tvec))]
    return solve_exact(rows, tvec)


def closure_check(basis: GeneratorBasis) -> ClosureReport:
    """Verify span-closure of all pairwise brackets; collect the exact
    structure constants.  Raises NotClosedError at the first escape."""
    fields = basis.fields
    constants: dict[tuple[int, int], tuple[Fraction, ...]] = {}
    for i, j in itertools.combinations(range(len(fields)), 2):
        br = lie_bracket(fields[i], fields[j])
        coeffs = span_coefficients(fields, br)
        if coeffs is None:
            raise NotClosedError((i, j), br)
        constants[(i, j)] = tuple(coeffs)
    return ClosureReport(closed=True, structure_constants=constants)


# -- classified generator bases ---------------------------------------------------

def _zero(n: int) -> tuple[Poly, ...]:
    return tuple(Poly.zero() for _ in range(n))


def _unit_xi(n: int, i: int, p: Poly) -> tuple[Poly, ...]:
    return tuple(p if s == i else Poly.zero() for s in range(1, n + 1))


def monge_ampere_basis(n: int) -> GeneratorBasis:
    """(n+1)^2 independent generators of the second-order equation's algebra:
    translations, the gauge shifts u -> u + c + b.x, the trace-free linear
    maps of x, and one dilation weighted so the determinant is preserved."""
    u = Poly.variable(DEP)
    fields: list[VectorField] = []
    for i in range(1, n + 1):
        fields.append(VectorField(n, _unit_xi(n, i, Poly.const(1)), Poly.zero()))
    fields.append(VectorField(n, _zero(n), Poly.const(1)))
    for i in range(1, n + 1):
        fields.append(VectorField(n, _zero(n), Poly.variable(coord(i))))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j:
                fields.append(VectorField(
                    n, _unit_xi(n, i, Poly.variable(coord(j))), Poly.zero()))
    for i in range(1, n):
        xi = [Poly.zero()] * n
        xi[i - 1] = Poly.variable(coord(i))
        xi[i] = -Poly.variable(coord(i + 1))
        fields.append(VectorField(n, tuple(xi), Poly.zero()))
    fields.append(VectorField(
        n, _unit_xi(n, 1, n * Poly.variable(coord(1))), 2 * u))
    return GeneratorBasis(tuple(fields), n, "ma")


def affine_maximal_basis(n: int, special: bool = False) -> GeneratorBasis:
    """Generators of the fourth-order equation's algebra: translations,
    u-shifts, the u-scaling, the gauge shears x^i d/du, all linear maps of
    x, and (special parameter value only) the graph shears u d/dx^i."""
    u = Poly.variable(DEP)
    fields: list[VectorField] = []
    for i in range(1, n + 1):
        fields.append(VectorField(n, _unit_xi(n, i, Poly.const(1)), Poly.zero()))
    fields.append(VectorField(n, _zero(n), Poly.const(1)))
    fields.append(VectorField(n, _zero(n), u))
    for i in range(1, n + 1):
        fields.append(VectorField(n, _zero(n), Poly.variable(coord(i))))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            fields.append(VectorField(
                n, _unit_xi(n, i, Poly.variable(coord(j))), Poly.zero()))
    if special:
        for i in range(1, n + 1):
            fields.append(VectorField(n, _unit_xi(n, i, u), Poly.zero()))
    regime = "am-special" if special else "am-generic"
    return GeneratorBasis(tuple(fields), n, regime)


def expected_dimension(name: str, n: int, theta: Fraction | None = None) -> int:
    """Classified algebra dimensions used by the CLI to flag mismatches."""
    if name == "ma":
        return (n + 1) ** 2
    if name == "am":
        special = theta == Fraction(n + 1, n + 2)
        return n * n + 2 * n + 2 + (n if special else 0)
    raise ValueError(f"no built-in dimension for {name!r}")


# -- determining system ------------------------------------------------------------

def _is_func_atom(a: Atom) -> bool:
    return a[0] == KIND_FUNC


def _normalize_linear(eq: Poly) -> Poly:
    lead = max(eq.terms)
    return eq * (1 / eq.terms[lead])


def _extract_raw(sys_F: Poly, top_var: Atom, n: int, order: int
                 ) -> tuple[tuple[Atom, ...], tuple[Poly, ...]]:
    R = apply_prolonged(SymbolicVectorField(n), sys_F, order)
    A = sys_F.diff(top_var)
    if top_var in A.atoms():
        raise ValueError("equation is not affine-linear in its top variable")
    B = sys_F - A * Poly.variable(top_var)
    powers = R.coefficient_powers(top_var)
    m = max(powers)
    cleared = Poly.zero()
    for r, c_r in powers.items():
        cleared = cleared + c_r * (-B) ** r * A ** (m - r)

    # group by jet monomials; a symbolic theta stays inside the equations
    # (the master system) and is specialized by extract_determining
    groups = cleared.collect(
        lambda a: not _is_func_atom(a) and a[0] != KIND_THETA)
    seen: set[tuple] = set()
    equations: list[Poly] = []
    for _, eq in sorted(groups.items()):
        if eq.is_zero:
            continue
        norm = _normalize_linear(eq)
        key = tuple(sorted(norm.terms.items()))
        if key not in seen:
            seen.add(key)
            equations.append(norm)
    unknowns = sorted({a for eq in equations for a in eq.atoms()
                       if _is_func_atom(a)})
    return tuple(unknowns), tuple(equations)


@lru_cache(maxsize=None)
def _master_determining(name: str, n: int) -> tuple[tuple[Atom, ...], tuple[Poly, ...]]:
    """Symbolic-parameter extraction, computed once per equation family.

    For the fourth-order family the equations may still carry theta; they
    are specialized per requested value in extract_determining.
    """
    if name == "ma":
        sys = build_monge_ampere(n)
    elif name == "am":
        sys = build_affine_maximal(n, None)
    else:
        raise ValueError(name)
    return _extract_raw(sys.F, sys.top_var, n, sys.order)


def extract_determining(sys: PdeSystem) -> DeterminingSystem:
    """Linear determining system at a pinned parameter value.

    The prolongation of the undetermined field is applied to F, the top
    variable is eliminated by the exact solution of F = 0 (denominators
    cleared by a power of its coefficient), and the coefficient of every
    monomial in the remaining jet variables becomes one linear equation.
    """
    if sys.name in ("ma", "am"):
        unknowns, eqs = _master_determining(sys.name, sys.n)
        if sys.name == "am":
            if sys.theta is None:
                raise ValueError("pin theta to a rational before extracting")
            tval = Poly.const(sys.theta)
            specialized = []
            seen: set[tuple] = set()
            for eq in eqs:
                e = eq.subs(THETA, tval)
                if e.is_zero:
                    continue
                e = _normalize_linear(e)
                key = tuple(sorted(e.terms.items()))
                if key not in seen:
                    seen.add(key)
                    specialized.append(e)
            eqs = tuple(specialized)
            unknowns = tuple(sorted({a for eq in eqs for a in eq.atoms()
                                     if _is_func_atom(a)}))
        return DeterminingSystem(unknowns, eqs)
    if sys.theta_symbolic:
        raise ValueError("pin theta to a rational before extracting")
    unknowns, eqs = _extract_raw(sys.F, sys.top_var, sys.n, sys.order)
    return DeterminingSystem(unknowns, eqs)


def coefficient_derivative(v: VectorField, a: Atom) -> Poly:
    """The concrete (x,u)-polynomial a formal derivative atom stands for."""
    _, comp, xs, du = a
    p = v.phi if comp == 0 else v.xi[comp - 1]
    for i in xs:
        p = p.diff(coord(i))
    for _ in range(du):
        p = p.diff(DEP)
    return p


def determining_residuals(ds: DeterminingSystem, v: VectorField) -> list[Poly]:
    """Substitute a concrete field into the system; zero polynomials mean
    the field satisfies the corresponding equations identically in (x,u)."""
    out = []
    for eq in ds.equations:
        mapping = {a: coefficient_derivative(v, a) for a in eq.atoms()
                   if _is_func_atom(a)}
        out.append(eq.substitute_atoms(mapping))
    return out


def satisfies_determining(ds: DeterminingSystem, v: VectorField) -> bool:
    return all(r.is_zero for r in determining_residuals(ds, v))


# -- bounded-degree ansatz ----------------------------------------------------------

def _ansatz_monomials(n: int, degree: int) -> list[tuple[tuple[int, ...], int]]:
    """(x-exponents, u-exponent) for all monomials of total degree <= degree."""
    out = []
    for total in range(degree + 1):
        for xpart in itertools.combinations_with_replacement(range(n + 1), total):
            # xpart entries: 0 encodes a factor of u, 1..n coordinate factors
            xexp = [0] * n
            uexp = 0
            for e in xpart:
                if e == 0:
                    uexp += 1
                else:
                    xexp[e - 1] += 1
            out.append((tuple(xexp), uexp))
    return sorted(set(out))


def _falling(a: int, k: int) -> int:
    out = 1
    for t in range(k):
        out *= a - t
    return out


def _monomial_poly(n: int, mono: tuple[tuple[int, ...], int]) -> Poly:
    xexp, uexp = mono
    p = Poly.const(1)
    for i, e in enumerate(xexp, start=1):
        if e:
            p = p * Poly.variable(coord(i)) ** e
    if uexp:
        p = p * Poly.variable(DEP) ** uexp
    return p


def ansatz_dimension(sys: PdeSystem, degree: int,
                     dets: DeterminingSystem | None = None
                     ) -> tuple[int, list[VectorField]]:
    """Dimension (and a basis) of the space of polynomial fields of total
    degree <= degree solving the determining system.

    Substituting the general ansatz turns each determining equation into a
    polynomial identity in (x,u); collecting monomial coefficients yields an
    exact homogeneous linear system whose nullspace is returned as fields.
    """
    if degree < 1:
        raise ValueError("ansatz degree must be >= 1")
    ds = dets if dets is not None else extract_determining(sys)
    n = sys.n
    monos = _ansatz_monomials(n, degree)
    mono_index = {m: k for k, m in enumerate(monos)}
    funcs = list(range(1, n + 1)) + [0]  # xi^1..xi^n then phi
    col_of = {(f, k): i for i, (f, k) in enumerate(
        (f, k) for f in funcs for k in range(len(monos)))}
    ncols = len(col_of)

    rows: set[tuple[Fraction, ...]] = set()
    for eq in ds.equations:
        by_target: dict[tuple[tuple[int, ...], int], dict[int, Fraction]] = {}
        for mono_eq, lam in eq.terms.items():
            (atom, _e), = mono_eq
            _, comp, xs, du = atom
            xcounts = [0] * n
            for i in xs:
                xcounts[i - 1] += 1
            for (xexp, uexp), k in mono_index.items():
                c = lam
                ok = True
                for i in range(n):
                    if xcounts[i]:
                        if xexp[i] < xcounts[i]:
                            ok = False
                            break
                        c *= _falling(xexp[i], xcounts[i])
                if not ok or uexp < du:
                    continue
                c *= _falling(uexp, du)
                if not c:
                    continue
                target = (tuple(xexp[i] - xcounts[i] for i in range(n)),
                          uexp - du)
                row = by_target.setdefault(target, {})
                col = col_of[(comp, k)]
                row[col] = row.get(col, Fraction(0)) + c
        for cols in by_target.values():
            vec = [Fraction(0)] * ncols
            nonzero = False
            for c, val in cols.items():
                if val:
                    vec[c] = val
                    nonzero = True
            if nonzero:
                rows.add(tuple(vec))

    dim, basis = nullspace(sorted(rows), ncols=ncols)
    fields = []
    for vec in basis:
        xi = []
        for f in range(1, n + 1):
            p = Poly.zero()
            for k, m in enumerate(monos):
                c = vec[col_of[(f, k)]]
                if c:
                    p = p + c * _monomial_poly(n, m)
            xi.append(p)
        phi = Poly.zero()
        for k, m in enumerate(monos):
            c = vec[col_of[(0, k)]]
            if c:
                phi = phi + c * _monomial_poly(n, m)
        fields.append(VectorField(n, tuple(xi), phi))
    return dim, fields


def mutual_span(fields_a, fields_b) -> bool:
    """Exact two-sided span containment of two lists of fields."""
    return (all(span_coefficients(fields_a, f) is not None for f in fields_b)
            and all(span_coefficients(fields_b, f) is not None for f in fields_a))
