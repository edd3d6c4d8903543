"""Symmetric theta-function spaces, the star product and its bosonizations.

Degree-a elements are symmetric functions of z_1..z_a, 1-periodic in each
variable and picking up (-1)^n exp(-2*pi*i*n*z) under a tau-shift.  The star
product of degrees (a, b) is implemented as a sum over (a, b)-shuffles: both
factors are symmetric, so every shuffle stands for a!b! equal permutation
terms, cancelling the 1/(a!b!) prefactor; cost C(a+b, a) instead of (a+b)!.

The bosonization sends a degree-one element f to

    sum_a f(u_a) / prod_{i != a} theta(u_a - u_i) * e_a

in the shift algebra B_{p,n}.  Its well-definedness is certified without any
basis convention: the sampled rank of {theta_i * theta_j} must equal
n(n+1)/2, and every sampled kernel vector must annihilate the corresponding
operator combination.  The explicit quadratic-relation check depends on the
basis normalization and is therefore reported, never asserted.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .context import ThetaContext
from .errors import InconclusiveRankError, PoleError
from . import expr as ex
from .sampling import sample_points, stack_assignments
from .shiftops import (
    ShiftOp,
    make_Bpn,
    op_equal,
    shift_mul,
    sum_to_zero_residual,
)


def _zvars(degree):
    return [f"z{i}" for i in range(1, degree + 1)]


@dataclass(frozen=True)
class SymThetaFun:
    """Holomorphic symmetric function of `degree` variables, order n."""

    degree: int
    order_n: int
    body: ex.MeroExpr
    ctx: ThetaContext

    def __post_init__(self):
        allowed = set(_zvars(self.degree))
        free = ex.free_vars(self.body)
        if not free <= allowed:
            raise ValueError(f"body uses {sorted(free - allowed)} outside z1..z{self.degree}")

    def __call__(self, *zs):
        if len(zs) != self.degree:
            raise ValueError(f"expected {self.degree} arguments")
        env = dict(zip(_zvars(self.degree), zs))
        return ex.evaluate(self.body, env, self.ctx)

    def invariant_residual(self, samples: int = 12, seed: int = 0) -> float:
        """Sampled symmetry + quasi-periodicity residual (first variable)."""
        names = _zvars(self.degree)
        pts = sample_points(samples, names, [], seed, self.ctx)
        stacked = stack_assignments(pts)
        v = np.asarray(ex.evaluate(self.body, stacked, self.ctx))
        worst = 0.0
        if self.degree >= 2:
            swapped = dict(stacked)
            swapped[names[0]], swapped[names[1]] = stacked[names[1]], stacked[names[0]]
            vs = np.asarray(ex.evaluate(self.body, swapped, self.ctx))
            worst = max(worst, float(np.max(np.abs(v - vs) / np.maximum(1.0, np.abs(v)))))
        per = dict(stacked)
        per[names[0]] = stacked[names[0]] + 1
        vp = np.asarray(ex.evaluate(self.body, per, self.ctx))
        worst = max(worst, float(np.max(np.abs(vp - v) / np.maximum(1.0, np.abs(v)))))
        qp = dict(stacked)
        qp[names[0]] = stacked[names[0]] + self.ctx.tau
        vq = np.asarray(ex.evaluate(self.body, qp, self.ctx))
        mult = (-1) ** self.order_n * np.exp(-2j * math.pi * self.order_n * stacked[names[0]])
        expect = mult * v
        scale = np.maximum(1.0, np.maximum(np.abs(vq), np.abs(expect)))
        worst = max(worst, float(np.max(np.abs(vq - expect) / scale)))
        return worst


def theta_gen(i: int, n: int, ctx: ThetaContext) -> SymThetaFun:
    """Degree-one basis element theta_i of order n."""
    return SymThetaFun(1, n, ex.theta_basis_of(i, n, "z1"), ctx)


def theta_line(coeffs, n: int, ctx: ThetaContext) -> SymThetaFun:
    body = ex.add(*(ex.mul(ex.const(c), ex.theta_basis_of(i, n, "z1"))
                    for i, c in enumerate(coeffs) if c != 0))
    return SymThetaFun(1, n, body, ctx)


def star(f: SymThetaFun, g: SymThetaFun) -> SymThetaFun:
    """Shuffle form of the star product; lands in degree f.degree + g.degree."""
    if f.order_n != g.order_n or f.ctx != g.ctx:
        raise ValueError("star needs matching order and context")
    a, b = f.degree, g.degree
    n, eta = f.order_n, f.ctx.eta
    total_vars = _zvars(a + b)
    terms = []
    for fslots in itertools.combinations(range(a + b), a):
        gslots = [i for i in range(a + b) if i not in fslots]
        fmap = {f"z{i+1}": ex.aff(total_vars[s], const=b * eta) for i, s in enumerate(fslots)}
        gmap = {f"z{j+1}": ex.aff(total_vars[s], const=-a * eta) for j, s in enumerate(gslots)}
        factors = [ex.substitute(f.body, fmap), ex.substitute(g.body, gmap)]
        for i in fslots:
            for j in gslots:
                diffarg = ex.aff(total_vars[i], (-1, total_vars[j]))
                factors.append(ex.quot(ex.theta1_of(diffarg.shifted(-n * eta)),
                                       ex.theta1_of(diffarg)))
        terms.append(ex.prod_over(factors))
    return SymThetaFun(a + b, n, ex.add(*terms), f.ctx)


def plain_symmetrized_product(f: SymThetaFun, g: SymThetaFun) -> SymThetaFun:
    """Shuffle sum of f*g with no kernel and no shifts: the eta = 0 limit."""
    a, b = f.degree, g.degree
    total_vars = _zvars(a + b)
    terms = []
    for fslots in itertools.combinations(range(a + b), a):
        gslots = [i for i in range(a + b) if i not in fslots]
        fmap = {f"z{i+1}": ex.aff(total_vars[s]) for i, s in enumerate(fslots)}
        gmap = {f"z{j+1}": ex.aff(total_vars[s]) for j, s in enumerate(gslots)}
        terms.append(ex.mul(ex.substitute(f.body, fmap), ex.substitute(g.body, gmap)))
    return SymThetaFun(a + b, f.order_n, ex.add(*terms), f.ctx)


def _pair_guards(count):
    names = _zvars(count)
    return [ex.theta1_of(ex.aff(x, (-1, y))) for x, y in itertools.combinations(names, 2)]


def star_assoc_residual(f: SymThetaFun, g: SymThetaFun, h: SymThetaFun,
                        samples: int = 20, seed: int = 0) -> float:
    """Sampled residual of (f*g)*h == f*(g*h)."""
    left = star(star(f, g), h).body
    right = star(f, star(g, h)).body
    deg = f.degree + g.degree + h.degree
    for attempt in range(8):
        pts = sample_points(samples, _zvars(deg), _pair_guards(deg), seed + 7919 * attempt, f.ctx)
        stacked = stack_assignments(pts)
        try:
            lv = np.asarray(ex.evaluate(left, stacked, f.ctx))
            rv = np.asarray(ex.evaluate(right, stacked, f.ctx))
        except PoleError:
            continue
        scale = np.maximum(1.0, np.maximum(np.abs(lv), np.abs(rv)))
        return float(np.max(np.abs(lv - rv) / scale))
    raise PoleError("associativity sampling poled at every batch")


def eta_flatness_ratio(n: int, ctx: ThetaContext, scales=(1e-2, 1e-3),
                       samples: int = 12, seed: int = 0) -> float:
    """Commutator magnitude ratio M(t1)/M(t2) for eta scaled by t1, t2.

    The star commutator of degree-one elements is O(eta), so the ratio should
    match t1/t2 within a modest factor.
    """
    mags = []
    for t in scales:
        cs = ctx.replace(eta=ctx.eta * t)
        f = theta_gen(0, n, cs)
        g = theta_gen(1 % n, n, cs)
        comm = star(f, g).body - star(g, f).body
        pts = sample_points(samples, _zvars(2), _pair_guards(2), seed, cs)
        stacked = stack_assignments(pts)
        mags.append(float(np.max(np.abs(np.asarray(ex.evaluate(comm, stacked, cs))))))
    return mags[0] / mags[1]


# Bosonization -------------------------------------------------------------------

def phi_p(f: SymThetaFun, p: int, ctx: ThetaContext) -> ShiftOp:
    """phi_p(f) = sum_a f(u_a) / prod_{i != a} theta(u_a - u_i) * e_a."""
    if f.degree != 1:
        raise ValueError("phi_p is defined on degree-one elements")
    alg = make_Bpn(p, f.order_n, ctx)
    total = ShiftOp.zero(alg)
    for a in range(1, p + 1):
        fa = ex.substitute(f.body, {"z1": ex.aff(f"u{a}")})
        den = ex.prod_over(
            ex.theta1_of(ex.aff(f"u{a}", (-1, f"u{i}"))) for i in range(1, p + 1) if i != a
        )
        coeff = fa if isinstance(den, ex.Const) else ex.quot(fa, den)
        total = total + ShiftOp.generator(alg, f"e{a}", coeff)
    return total


@dataclass
class HomCheckResult:
    rank: int
    expected_rank: int
    gap: float
    kernel_dim: int
    kappa: float
    kernel_residual: float

    @property
    def residual(self) -> float:
        return self.kernel_residual


def hom_welldefined_residual(n: int, p: int, ctx: ThetaContext, seed: int = 0,
                             samples: int | None = None,
                             gap_threshold: float = 1e3) -> HomCheckResult:
    """Convention-free certification that phi_p descends from the relations.

    (a) Sample the n^2 products theta_i * theta_j at pole-guarded point
        pairs; the numerical rank must be n(n+1)/2 with a singular-value gap
        of at least gap_threshold, else the check is inconclusive.
    (b) Every kernel vector c of the sample matrix satisfies
        sum c_ij theta_i * theta_j = 0; the operator
        sum c_ij phi_p(theta_i) phi_p(theta_j) must then vanish, with
        tolerance scaled by the conditioning kappa = sigma_1 / sigma_r.
    """
    if n < 2 or p < 1:
        raise ValueError("need n >= 2 and p >= 1")
    npts = samples or 2 * n * n + 8
    pair_guard = [ex.theta1_of(ex.aff("z1", (-1, "z2")))]
    pts = sample_points(npts, ["z1", "z2"], pair_guard, seed, ctx)
    stacked = stack_assignments(pts)

    gens = [theta_gen(i, n, ctx) for i in range(n)]
    rows = []
    for i in range(n):
        for j in range(n):
            body = star(gens[i], gens[j]).body
            rows.append(np.asarray(ex.evaluate(body, stacked, ctx)))
    A = np.array(rows)
    row_scale = np.max(np.abs(A), axis=1)
    A = A / row_scale[:, None]

    U, S, _ = np.linalg.svd(A, full_matrices=False)
    r = n * (n + 1) // 2
    if len(S) <= r:
        raise InconclusiveRankError(
            f"only {len(S)} singular values from {npts} samples; rank {r} unresolvable", gap=0.0)
    gap = float(S[r - 1] / max(S[r], 1e-300))
    if gap < gap_threshold:
        raise InconclusiveRankError(
            f"singular-value gap {gap:.2e} below {gap_threshold:.0e}; resample", gap=gap)
    rank = r
    kappa = float(S[0] / S[r - 1])

    ops = {}
    phis = [phi_p(g, p, ctx) for g in gens]
    for i in range(n):
        for j in range(n):
            ops[(i, j)] = shift_mul(phis[i], phis[j])
    kernel = U[:, r:]
    guards = [ex.theta1_of(ex.aff("u1", (-1, f"u{i}"))) for i in range(2, p + 1)]
    worst = 0.0
    for kv in range(kernel.shape[1]):
        c = np.conj(kernel[:, kv]) / row_scale
        parts = [ops[(i, j)].scaled(complex(c[i * n + j])) for i in range(n) for j in range(n)]
        worst = max(worst, sum_to_zero_residual(parts, samples=10, seed=seed + 1, guards=guards))
    return HomCheckResult(rank=rank, expected_rank=r, gap=gap,
                          kernel_dim=n * n - r, kappa=kappa, kernel_residual=worst)


@dataclass
class QnkReport:
    residual: float
    convention_matched: bool
    trivially_zero: bool


def qnk_relation_residual(n: int, i: int, j: int, p: int, ctx: ThetaContext,
                          seed: int = 0, samples: int = 12) -> QnkReport:
    """Quadratic-relation residual for the k = 1 structure constants.

    Builds sum_r theta_{j-i}(0) / (theta_{j-i-r}(-eta) theta_r(eta)) *
    phi_p(theta_{j-r}) phi_p(theta_{i+r}) and reports its distance from the
    zero operator.  The sign conventions of the structure constants are tied
    to the theta-basis choice, which the quasi-periodicity conditions leave
    free, so a large residual means convention mismatch, not a broken
    homomorphism; hom_welldefined_residual is the normative test.
    """
    from .theta import theta_basis

    num = theta_basis((j - i) % n, 0.0, ctx, n=n)
    if abs(num) < ctx.eval_tol:
        return QnkReport(residual=0.0, convention_matched=True, trivially_zero=True)
    gens = [theta_gen(s, n, ctx) for s in range(n)]
    phis = [phi_p(g, p, ctx) for g in gens]
    parts = []
    for r_ in range(n):
        den = theta_basis((j - i - r_) % n, -ctx.eta, ctx, n=n) * theta_basis(r_ % n, ctx.eta, ctx, n=n)
        if abs(den) < ctx.pole_guard:
            raise PoleError("structure-constant denominator vanishes at this eta")
        coeff = complex(num / den)
        parts.append(shift_mul(phis[(j - r_) % n], phis[(i + r_) % n]).scaled(coeff))
    guards = [ex.theta1_of(ex.aff("u1", (-1, f"u{i2}"))) for i2 in range(2, p + 1)]
    residual = sum_to_zero_residual(parts, samples=samples, seed=seed, guards=guards)
    return QnkReport(residual=residual, convention_matched=residual <= ctx.id_tol,
                     trivially_zero=False)


# Central elements and the commuting family ---------------------------------------

def casimir(alpha: int, m: int, ctx: ThetaContext) -> SymThetaFun:
    """Degree-m central element of the order-2m algebra, vanishing on the
    shifted diagonal z_2 = z_1 + 2m*eta.

    theta_alpha(z_1+...+z_m) * prod_{i != j} theta(z_i - z_j - 2m*eta),
    times exp(2*pi*i*(m-1)*(z_1+...+z_m)): the exponential restores the exact
    order-2m quasi-periodicity under this library's series normalization
    (each tau-shift otherwise picks up a stray q^(1-m)).
    """
    if alpha not in (0, 1):
        raise ValueError("alpha indexes the two-dimensional order-2 basis")
    if m < 2:
        raise ValueError("need m >= 2")
    names = _zvars(m)
    total = ex.aff(*names)
    factors = [ex.theta_basis_of(alpha, 2, total), ex.exp2pii(ex.Affine({v: m - 1 for v in names}))]
    for i in range(m):
        for j in range(m):
            if i != j:
                factors.append(ex.theta1_of(ex.aff(names[i], (-1, names[j]), const=-2 * m * ctx.eta)))
    return SymThetaFun(m, 2 * m, ex.prod_over(factors), ctx)


def build_fu_bosonized(u: complex, m: int, a: complex, b: complex,
                       psi_index: int, ctx: ThetaContext) -> ShiftOp:
    """Image of the degree-m commuting family element in B_{m-1, 2m}.

    sum_al [theta(u + sum_{be != al} z_be) prod theta(u - z_be)
            / prod theta(z_be - z_al)] * f_al,
    f_al = Psi(z_al + 4m^2 eta - (a + (m-2)b + 2m(m-2) eta)/(m+5))
           * theta(sum z + a) * prod_{be != al} theta(z_al + z_be + b)
           * exp(2 pi i (2(m-2) z_al + sum_{be != al} z_be)) * e_al e_1..e_{m-1},
    with Psi the psi_index-th basis element of order m+5.
    """
    if m < 2:
        raise ValueError("need m >= 2")
    p = m - 1
    n = 2 * m
    alg = make_Bpn(p, n, ctx)
    names = [f"u{i}" for i in range(1, p + 1)]  # B_{p,n} variables
    eta = ctx.eta
    psi_shift = 4 * m * m * eta - (a + (m - 2) * b + 2 * m * (m - 2) * eta) / (m + 5)
    terms = {}
    for al in range(1, p + 1):
        others = [be for be in range(1, p + 1) if be != al]
        kernel_num = [ex.theta1_of(ex.Affine({names[be - 1]: 1 for be in others}, const=u))]
        kernel_num += [ex.theta1_of(ex.aff((-1, names[be - 1]), const=u)) for be in others]
        kernel_den = [ex.theta1_of(ex.aff(names[be - 1], (-1, names[al - 1]))) for be in others]
        fal = [
            ex.Theta("basis", ex.aff(names[al - 1], const=psi_shift), order=m + 5, index=psi_index),
            ex.theta1_of(ex.Affine({v: 1 for v in names}, const=a)),
        ]
        fal += [ex.theta1_of(ex.aff(names[al - 1], names[be - 1], const=b)) for be in others]
        exp_coeffs = {names[be - 1]: 1 for be in others}
        exp_coeffs[names[al - 1]] = 2 * (m - 2)
        fal.append(ex.ExpLin(ex.Affine(exp_coeffs)))
        num = ex.prod_over(kernel_num + fal)
        coeff = num if not kernel_den else ex.quot(num, ex.prod_over(kernel_den))
        mi = tuple(2 if idx == al - 1 else 1 for idx in range(p))
        terms[mi] = coeff
    return ShiftOp(alg, terms)


def fu_commutator_residual(u: complex, v: complex, m: int, a: complex, b: complex,
                           psi_index: int, ctx: ThetaContext,
                           samples: int = 15, seed: int = 0) -> float:
    """[f(u), f(v)] residual in the bosonized algebra."""
    fu = build_fu_bosonized(u, m, a, b, psi_index, ctx)
    fv = build_fu_bosonized(v, m, a, b, psi_index, ctx)
    p = m - 1
    guards = [ex.theta1_of(ex.aff(f"u{x}", (-1, f"u{y}")))
              for x in range(1, p + 1) for y in range(x + 1, p + 1)]
    return op_equal(shift_mul(fu, fv), shift_mul(fv, fu),
                    samples=samples, seed=seed, guards=guards)
