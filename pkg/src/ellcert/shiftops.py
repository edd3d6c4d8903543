"""Shift-monomial difference-operator algebras.

An algebra fixes variable names v_1..v_p, commuting generator names g_1..g_r
and a complex shift matrix S.  Conjugation is oriented as

    g_a * F(v_1,...,v_p) = F(v_1 + S[a][1], ..., v_p + S[a][p]) * g_a,

so multiplying coefficient-times-monomial terms translates the right-hand
coefficient's arguments by the left monomial's accumulated shift.  Operators
are finite maps from generator exponent tuples to MeroExpr coefficients.

Instances built here: the Weyl-like algebra with one generator per variable
shifting only its own variable by -n*eta; the bosonization target B_{p,n}
(own variable by (n-2)*eta, all the others by -2*eta); the layered chain
algebra with e-generators that shift every *other* variable of their own
layer by -n*eta plus t/f generator pairs; and the 2n-generator algebra of
+/-2*eta elementary shifts used by the face-model transfer matrix.

Operator equality is decided by seeded pole-guarded sampling of every
coefficient, relative to the magnitude of the terms being cancelled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .context import ThetaContext
from .errors import PoleError, SingularOperatorError
from . import expr as ex
from .sampling import sample_points, stack_assignments

_PRUNE_POINTS = 5


@dataclass(frozen=True)
class ShiftAlgebra:
    var_names: tuple
    gen_names: tuple
    shift: tuple  # row per generator, entries per variable
    ctx: ThetaContext

    def __post_init__(self):
        if len(self.shift) != len(self.gen_names):
            raise ValueError("shift matrix needs one row per generator")
        if any(len(row) != len(self.var_names) for row in self.shift):
            raise ValueError("shift matrix rows must match the variable count")

    @property
    def r(self) -> int:
        return len(self.gen_names)

    @property
    def p(self) -> int:
        return len(self.var_names)

    def gen_index(self, name: str) -> int:
        return self.gen_names.index(name)

    def translation_of(self, exponents: Sequence[int]) -> dict:
        """Accumulated shift of each variable under the monomial g^exponents."""
        deltas: dict[str, complex] = {}
        for gi, e in enumerate(exponents):
            if e:
                for vi, s in enumerate(self.shift[gi]):
                    if s != 0:
                        name = self.var_names[vi]
                        deltas[name] = deltas.get(name, 0j) + e * s
        return deltas

    def zero_index(self) -> tuple:
        return (0,) * self.r


def make_algebra(var_names: Iterable[str], gen_names: Iterable[str], shift, ctx) -> ShiftAlgebra:
    rows = tuple(tuple(complex(s) for s in row) for row in shift)
    return ShiftAlgebra(tuple(var_names), tuple(gen_names), rows, ctx)


class ShiftOp:
    """Immutable finite sum of coefficient * generator-monomial terms."""

    __slots__ = ("algebra", "terms")

    def __init__(self, algebra: ShiftAlgebra, terms: Mapping[tuple, ex.MeroExpr]):
        self.algebra = algebra
        cleaned = {}
        for mi, coeff in terms.items():
            if isinstance(coeff, ex.Const) and coeff.value == 0:
                continue
            cleaned[tuple(mi)] = coeff
        self.terms = cleaned

    # construction helpers

    @classmethod
    def zero(cls, algebra) -> "ShiftOp":
        return cls(algebra, {})

    @classmethod
    def one(cls, algebra) -> "ShiftOp":
        return cls(algebra, {algebra.zero_index(): ex.const(1)})

    @classmethod
    def function(cls, algebra, coeff) -> "ShiftOp":
        """Multiplication operator: coefficient times the empty monomial."""
        return cls(algebra, {algebra.zero_index(): ex._as_expr(coeff)})

    @classmethod
    def generator(cls, algebra, name: str, coeff=1) -> "ShiftOp":
        mi = [0] * algebra.r
        mi[algebra.gen_index(name)] = 1
        return cls(algebra, {tuple(mi): ex._as_expr(coeff)})

    @classmethod
    def monomial(cls, algebra, exponents: Sequence[int], coeff=1) -> "ShiftOp":
        return cls(algebra, {tuple(exponents): ex._as_expr(coeff)})

    def is_zero(self) -> bool:
        return not self.terms

    def is_multiplication(self) -> bool:
        zi = self.algebra.zero_index()
        return all(mi == zi for mi in self.terms)

    def degrees(self) -> set:
        return {sum(mi) for mi in self.terms}

    # arithmetic

    def __add__(self, other: "ShiftOp") -> "ShiftOp":
        self._check_same(other)
        merged = dict(self.terms)
        for mi, c in other.terms.items():
            merged[mi] = ex.add(merged[mi], c) if mi in merged else c
        return ShiftOp(self.algebra, merged)._pruned()

    def __sub__(self, other: "ShiftOp") -> "ShiftOp":
        return self + (-other)

    def __neg__(self) -> "ShiftOp":
        return ShiftOp(self.algebra, {mi: ex.neg(c) for mi, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, ShiftOp):
            return shift_mul(self, other)
        return self.scaled(other)

    def __rmul__(self, other):
        return self.scaled(other)

    def scaled(self, c) -> "ShiftOp":
        if isinstance(c, ex.MeroExpr) or c != 1:
            return ShiftOp(self.algebra, {mi: ex.mul(ex._as_expr(c), co) for mi, co in self.terms.items()})
        return self

    def _check_same(self, other):
        if self.algebra is not other.algebra and self.algebra != other.algebra:
            raise ValueError("operands live in different shift algebras")

    def _pruned(self) -> "ShiftOp":
        """Drop terms whose coefficient samples to ~0 at a few guard points.

        Exact structural cancellations evaluate to exactly 0.0 (the same
        subtree is walked twice), so this keeps term maps small without
        risking a genuine coefficient: five independent near-zeros of a
        nonzero meromorphic function have probability ~0 at seeded points.
        """
        keep = {}
        for mi, coeff in self.terms.items():
            if _samples_to_zero(coeff, self.algebra):
                continue
            keep[mi] = coeff
        if len(keep) == len(self.terms):
            return self
        return ShiftOp(self.algebra, keep)

    def __repr__(self):
        names = ",".join(self.algebra.gen_names)
        return f"ShiftOp<{len(self.terms)} terms over ({names})>"


def _samples_to_zero(coeff: ex.MeroExpr, algebra: ShiftAlgebra) -> bool:
    ctx = algebra.ctx
    rng = np.random.default_rng(0xE11C)
    good = 0
    for _ in range(4 * _PRUNE_POINTS):
        env = {v: complex(rng.random(), ctx.tau.imag * rng.random()) for v in algebra.var_names}
        try:
            val = ex.evaluate(coeff, env, ctx)
        except PoleError:
            continue
        if abs(val) >= ctx.eval_tol:
            return False
        good += 1
        if good >= _PRUNE_POINTS:
            return True
    return False  # could not decide; keep the term


def shift_mul(a: ShiftOp, b: ShiftOp) -> ShiftOp:
    """(F g^m)(G g^k) = F * (G translated by the shift of g^m) * g^(m+k)."""
    a._check_same(b)
    alg = a.algebra
    out: dict[tuple, ex.MeroExpr] = {}
    for m, F in a.terms.items():
        deltas = alg.translation_of(m)
        for k, G in b.terms.items():
            mi = tuple(x + y for x, y in zip(m, k))
            contrib = ex.mul(F, ex.translate(G, deltas))
            out[mi] = ex.add(out[mi], contrib) if mi in out else contrib
    return ShiftOp(alg, out)._pruned()


def shift_commutator(a: ShiftOp, b: ShiftOp) -> ShiftOp:
    return shift_mul(a, b) - shift_mul(b, a)


def invert_multiplication(op: ShiftOp) -> ShiftOp:
    """Invert a multiplication operator by inverting its coefficient."""
    if not op.is_multiplication() or op.is_zero():
        raise SingularOperatorError("only nonzero multiplication operators are invertible")
    (coeff,) = op.terms.values()
    return ShiftOp.function(op.algebra, ex.quot(ex.const(1), coeff))


def op_equal(a: ShiftOp, b: ShiftOp, samples: int = 20, seed: int = 0,
             guards: Sequence[ex.MeroExpr] = ()) -> float:
    """Sampled equality residual, relative to the cancelling coefficients.

    max over the multi-indices of a-b and over pole-guarded points of
    |a_m - b_m| / max(1, |a_m|, |b_m|).  Points where a coefficient poles
    are skipped and redrawn.
    """
    a._check_same(b)
    alg = a.algebra
    keys = set(a.terms) | set(b.terms)
    if not keys:
        return 0.0
    zero = ex.const(0)
    worst = 0.0
    for batch in _assignment_batches(alg, samples, seed, guards):
        stacked = stack_assignments(batch)
        try:
            for mi in keys:
                va = np.asarray(ex.evaluate(a.terms.get(mi, zero), stacked, alg.ctx))
                vb = np.asarray(ex.evaluate(b.terms.get(mi, zero), stacked, alg.ctx))
                scale = np.maximum(1.0, np.maximum(np.abs(va), np.abs(vb)))
                worst = max(worst, float(np.max(np.abs(va - vb) / scale)))
        except PoleError:
            continue
        return worst
    raise PoleError("coefficients pole at every sampled batch")


def sum_to_zero_residual(parts: Sequence[ShiftOp], samples: int = 20, seed: int = 0,
                         guards: Sequence[ex.MeroExpr] = ()) -> float:
    """Residual of sum(parts) == 0, scaled by the largest single part.

    The right notion when a relation sums several operators to zero: each
    multi-index coefficient of the total is compared against the biggest
    contribution that went into it.
    """
    if not parts:
        return 0.0
    alg = parts[0].algebra
    keys = set()
    for p in parts:
        keys |= set(p.terms)
    zero = ex.const(0)
    worst = 0.0
    for batch in _assignment_batches(alg, samples, seed, guards):
        stacked = stack_assignments(batch)
        try:
            for mi in keys:
                vals = [np.asarray(ex.evaluate(p.terms.get(mi, zero), stacked, alg.ctx)) for p in parts]
                total = sum(vals)
                scale = np.asarray(1.0)
                for v in vals:
                    scale = np.maximum(scale, np.abs(v))
                worst = max(worst, float(np.max(np.abs(total) / scale)))
        except PoleError:
            continue
        return worst
    raise PoleError("coefficients pole at every sampled batch")


def _assignment_batches(alg: ShiftAlgebra, samples: int, seed: int, guards):
    """A few independent seeded batches; callers take the first pole-free one."""
    for attempt in range(8):
        yield sample_points(samples, alg.var_names, guards, seed + 7919 * attempt, alg.ctx)


def commutator_residual(a: ShiftOp, b: ShiftOp, samples: int = 20, seed: int = 0,
                        guards: Sequence[ex.MeroExpr] = ()) -> float:
    """op_equal(a*b, b*a): the scale comes from the two products."""
    return op_equal(shift_mul(a, b), shift_mul(b, a), samples=samples, seed=seed, guards=guards)


# Algebra constructors ---------------------------------------------------------

def make_Vn(n: int, ctx: ThetaContext) -> ShiftAlgebra:
    """Generators f_i, variables z_i, with f_i z_i = (z_i - n*eta) f_i."""
    if n < 1:
        raise ValueError("n must be >= 1")
    shift = [[(-n * ctx.eta if i == a else 0) for i in range(n)] for a in range(n)]
    return make_algebra([f"z{i}" for i in range(1, n + 1)],
                        [f"f{i}" for i in range(1, n + 1)], shift, ctx)


def make_Bpn(p: int, n: int, ctx: ThetaContext) -> ShiftAlgebra:
    """Bosonization target: e_a shifts u_a by (n-2)*eta and u_b by -2*eta."""
    if p < 1 or n < 1:
        raise ValueError("sizes must be >= 1")
    shift = [[((n - 2) * ctx.eta if b == a else -2 * ctx.eta) for b in range(p)] for a in range(p)]
    return make_algebra([f"u{i}" for i in range(1, p + 1)],
                        [f"e{i}" for i in range(1, p + 1)], shift, ctx)


def make_Btilde(p_list: Sequence[int], ctx: ThetaContext) -> ShiftAlgebra:
    """Layered chain algebra on n-1 layers of sizes p_1..p_{n-1}.

    e_{a,g} shifts z_{b,g} by -n*eta for b != a only (own variable fixed,
    other layers and the t's fixed); f_{g} shifts t_{g} by -n*eta.
    """
    if not p_list or any(p < 1 for p in p_list):
        raise ValueError("p_list entries must be >= 1")
    n = len(p_list) + 1
    var_names = [f"z{b}_{g}" for g in range(1, n) for b in range(1, p_list[g - 1] + 1)]
    var_names += [f"t{g}" for g in range(1, n - 1)]
    gen_names = [f"e{a}_{g}" for g in range(1, n) for a in range(1, p_list[g - 1] + 1)]
    gen_names += [f"f{g}" for g in range(1, n - 1)]
    vidx = {v: i for i, v in enumerate(var_names)}
    shift = []
    for g in range(1, n):
        for a in range(1, p_list[g - 1] + 1):
            row = [0j] * len(var_names)
            for b in range(1, p_list[g - 1] + 1):
                if b != a:
                    row[vidx[f"z{b}_{g}"]] = -n * ctx.eta
            shift.append(row)
    for g in range(1, n - 1):
        row = [0j] * len(var_names)
        row[vidx[f"t{g}"]] = -n * ctx.eta
        shift.append(row)
    return make_algebra(var_names, gen_names, shift, ctx)


def make_sos(n: int, ctx: ThetaContext) -> ShiftAlgebra:
    """2n generators Tp_a / Tm_a shifting z_a by +2*eta / -2*eta."""
    if n < 1:
        raise ValueError("n must be >= 1")
    var_names = [f"z{i}" for i in range(1, n + 1)]
    gen_names = [f"Tp{i}" for i in range(1, n + 1)] + [f"Tm{i}" for i in range(1, n + 1)]
    shift = [[(+2 * ctx.eta if i == a else 0) for i in range(n)] for a in range(n)]
    shift += [[(-2 * ctx.eta if i == a else 0) for i in range(n)] for a in range(n)]
    return make_algebra(var_names, gen_names, shift, ctx)


class ShiftOpBackend:
    """Adapter exposing ShiftOps through the determinant backend protocol."""

    def __init__(self, algebra: ShiftAlgebra, norm_samples: int = 8, seed: int = 0):
        self.algebra = algebra
        self._norm_samples = norm_samples
        self._seed = seed

    def zero(self):
        return ShiftOp.zero(self.algebra)

    def one(self):
        return ShiftOp.one(self.algebra)

    def add(self, x, y):
        return x + y

    def mul(self, x, y):
        return shift_mul(x, y)

    def neg(self, x):
        return -x

    def scal(self, c, x):
        return x.scaled(c)

    def invert(self, x):
        return invert_multiplication(x)

    def norm(self, x) -> float:
        """Sampled sup-norm over coefficients at seeded guard-free points."""
        if x.is_zero():
            return 0.0
        alg = self.algebra
        worst = 0.0
        for batch in _assignment_batches(alg, self._norm_samples, self._seed, ()):
            stacked = stack_assignments(batch)
            try:
                for coeff in x.terms.values():
                    v = np.asarray(ex.evaluate(coeff, stacked, alg.ctx))
                    worst = max(worst, float(np.max(np.abs(v))))
            except PoleError:
                continue
            return worst
        return float("inf")
