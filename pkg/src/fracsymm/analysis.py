"""Executable forms of the comparison lemmata and theorems.

The lemma checkers work on sampled data and are exact in their discrete
form: the MaxMin checker weights the trapezoid increments of H_u - H_v by
midpoint values of h, so summation by parts reproduces the continuous proof
line by line, and the chain-rule checker uses the symmetric nonnegative
weights of the planar operator, for which the pointwise convexity argument
applies pair by pair.  Violations beyond rounding therefore indicate bugs.

The theorem verifiers solve the original problem on a planar domain (or a
ball, radially) and the symmetrized problem radially, then compare mass
concentration curves with tolerance 0.01 C_v(|Omega|).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .planar import (GridFunction2D, PlanarOperator, assemble_operator_2d, build_domain,
                     parse_shape, seminorm_2d_squared, solve_linear_2d, solve_singular_2d)
from .quadrature import gauss_legendre
from .radial import (GagliardoMatrixRadial, RadialFunction, assemble_gagliardo_radial,
                     default_schedule, make_radial_mesh, solve_linear_radial,
                     solve_singular_radial)
from .rearrange import (GTestFunction, StepRearrangement, WeightedSample, concentration_at,
                        decreasing_rearrangement, is_less_concentrated, lp_norm, riesz_check,
                        schwarz_profile)
from .specfun import DomainError, KernelParams, critical_exponent, sphere_area, unit_ball_volume

__all__ = [
    "g_test_function",
    "LemmaReport",
    "WeightFunction",
    "maxmin_lemma_check",
    "ABResult",
    "ab_inequality_check",
    "ChainFunction",
    "ChainRuleResult",
    "chain_rule_check",
    "ProblemSpec",
    "RhsSpec",
    "parse_rhs",
    "ComparisonReport",
    "Verification",
    "verify_theorem1",
    "verify_theorem2",
    "regularity_regime",
    "luxemburg_norm",
    "regularity_ratio",
    "RegularityReport",
    "verify_regularity",
    "EnergyResult",
    "verify_energy",
    "energy_instance",
    "radial_shell_sample",
    "radial_quadrature_sample",
    "maxmin_random_suite",
    "ab_random_suite",
    "chain_rule_random_suite",
    "riesz_random_suite",
    "run_lemma_suites",
]


def g_test_function(t: float, h: float, theta) -> float:
    """G_{t,h}(theta) = min(max(theta - t, 0), h)."""
    g = GTestFunction(float(t), float(h))(theta)
    return float(g) if np.ndim(g) == 0 else g


# ------------------------------------------------------------ MaxMin lemma

@dataclass
class LemmaReport:
    """Outcome of a lemma suite.  Margins are signed slacks relative to the
    instance scale; a violation is a slack below -tolerance."""

    name: str
    instances_run: int = 0
    violations: int = 0
    worst_margin: float = math.inf
    skipped: int = 0
    tolerance: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def record(self, margin: float):
        self.instances_run += 1
        self.worst_margin = min(self.worst_margin, float(margin))
        if margin < -self.tolerance:
            self.violations += 1

    def merge(self, other: "LemmaReport") -> "LemmaReport":
        self.instances_run += other.instances_run
        self.violations += other.violations
        self.skipped += other.skipped
        self.worst_margin = min(self.worst_margin, other.worst_margin)
        return self


@dataclass(eq=False)
class WeightFunction:
    """Samples of a positive monotone weight h on [0, R]."""

    r: np.ndarray
    values: np.ndarray
    monotone: str

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.monotone not in ("increasing", "decreasing"):
            raise ValueError("monotone must be 'increasing' or 'decreasing'")
        if self.r.shape != self.values.shape or self.r.ndim != 1:
            raise ValueError("r and values must be 1-D of equal length")
        if np.any(np.diff(self.r) <= 0.0):
            raise ValueError("sample radii must be strictly increasing")
        v = self.values
        if np.any(v < 0.0) or np.any(v[1:-1] <= 0.0) or not np.all(np.isfinite(v)):
            raise ValueError("h must be positive on (0, R) and bounded")
        dv = np.diff(v)
        if self.monotone == "increasing" and np.any(dv < 0.0):
            raise ValueError("h is declared increasing but decreases on the samples")
        if self.monotone == "decreasing" and np.any(dv > 0.0):
            raise ValueError("h is declared decreasing but increases on the samples")

    @property
    def bounds(self) -> tuple:
        return float(np.min(self.values)), float(np.max(self.values))

    @classmethod
    def from_callable(cls, r, fn, monotone: str) -> "WeightFunction":
        r = np.asarray(r, dtype=float)
        return cls(r, np.asarray(fn(r), dtype=float) * np.ones_like(r), monotone)


_MAXMIN_TOL = 1e-10
_ROUND = 1e-14


def _sample(f, r):
    if callable(f):
        return np.asarray(f(r), dtype=float) * np.ones_like(r)
    f = np.asarray(f, dtype=float)
    if f.shape != r.shape:
        raise ValueError("sampled functions must match the radii")
    return f


def maxmin_lemma_check(r, u, v, hfun: WeightFunction, N: int, tol: float = _MAXMIN_TOL) -> LemmaReport:
    """Check the MaxMin lemma, its non-strict variants and the max/min duality.

    D(r) = H_u(r) - H_v(r) is the cumulative trapezoid integral of
    (u - v) rho^{N-1}; K_u - K_v = D(R) - D.  The weighted integrals use the
    same increments times the midpoint value of h.
    """
    r = np.asarray(r, dtype=float)
    if r.ndim != 1 or len(r) < 200:
        raise DomainError("need at least 200 samples to resolve the extremum")
    if r[0] != 0.0 or np.any(np.diff(r) <= 0.0):
        raise DomainError("samples must start at 0 and increase strictly")
    uu, vv = _sample(u, r), _sample(v, r)
    if np.any(uu < 0.0) or np.any(vv < 0.0):
        raise DomainError("u and v must be nonnegative")
    if hfun.r.shape != r.shape or not np.allclose(hfun.r, r, rtol=0.0, atol=1e-14 * r[-1]):
        hv = np.interp(r, hfun.r, hfun.values)
    else:
        hv = hfun.values
    rad = r ** (N - 1)
    dr = np.diff(r)
    d = (uu - vv) * rad
    inc = 0.5 * dr * (d[:-1] + d[1:])
    D = np.concatenate([[0.0], np.cumsum(inc)])
    Kd = D[-1] - D
    hbar = 0.5 * (hv[:-1] + hv[1:])
    W = np.concatenate([[0.0], np.cumsum(hbar * inc)])     # int_0^r (u-v) h rho^{N-1}
    absm = 0.5 * dr * ((uu + vv)[:-1] * rad[:-1] + (uu + vv)[1:] * rad[1:])
    scale = max(float(np.sum(absm)) * float(np.max(np.abs(hv))), 1e-300)
    rep = LemmaReport("maxmin", tolerance=tol)
    slack = tol * scale
    dmax = float(np.max(D))
    kbar = int(np.argmax(D))

    if hfun.monotone == "increasing":
        if dmax > slack and kbar > 0:
            val = float(W[kbar])
            rep.details["weighted_increasing"] = val
            rep.details["rbar"] = float(r[kbar])
            rep.record(val / scale)
        elif dmax <= slack:
            # max of H_u - H_v is zero: every maximum point (up to rounding) gives >= 0
            pts = np.flatnonzero(D >= dmax - _ROUND * scale)
            vals = W[pts]
            rep.details["weighted_hk1"] = float(np.min(vals))
            rep.record(float(np.min(vals)) / scale)
        else:
            rep.skipped += 1
    else:
        kmin = float(np.min(Kd))
        kb = int(np.argmin(Kd))
        tailw = W[-1] - W
        if kmin < -slack and kb < len(r) - 1:
            val = float(tailw[kb])
            rep.details["weighted_decreasing"] = val
            rep.details["rbar"] = float(r[kb])
            rep.record(-val / scale)
        elif kmin >= -slack:
            pts = np.flatnonzero(Kd <= kmin + _ROUND * scale)
            vals = tailw[pts]
            rep.details["weighted_hk1"] = float(np.max(vals))
            rep.record(-float(np.max(vals)) / scale)
        else:
            rep.skipped += 1

    # duality: an interior maximum of D is a non-positive minimum of K_u - K_v
    if 0 < kbar < len(r) - 1:
        kval = float(Kd[kbar])
        rep.details["hk_value"] = kval
        rep.record(min(-kval, float(np.min(Kd)) - kval + slack) / scale)
    return rep


# ---------------------------------------------------------------- (ab) lemma

@dataclass
class ABResult:
    lhs: np.ndarray
    rhs: np.ndarray
    holds: np.ndarray
    margin: np.ndarray


def ab_inequality_check(a, b, gamma) -> ABResult:
    """1/a^gamma - 1/b^gamma <= gamma/a^{gamma+1} (b - a), elementwise.

    Rounding is allowed at the level of 1e-12 (a^-gamma + b^-gamma).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if np.any(a <= 0.0) or np.any(b <= 0.0) or np.any(gamma <= 0.0):
        raise DomainError("a, b and gamma must be positive")
    pa, pb = a ** (-gamma), b ** (-gamma)
    lhs = pa - pb
    rhs = gamma * pa / a * (b - a)
    margin = rhs - lhs
    holds = margin >= -1e-12 * (pa + pb)
    if lhs.ndim == 0:
        return ABResult(float(lhs), float(rhs), bool(holds), float(margin))
    return ABResult(lhs, rhs, holds, margin)


# ---------------------------------------------------- chain-rule inequality

@dataclass(frozen=True)
class ChainFunction:
    """Lipschitz Phi with Phi(0) = 0, its (sub)derivative, and its convexity."""

    name: str
    f: object
    df: object
    kind: str = "convex"

    def __post_init__(self):
        if self.kind not in ("convex", "concave"):
            raise ValueError("kind must be 'convex' or 'concave'")

    @staticmethod
    def identity() -> "ChainFunction":
        return ChainFunction("identity", lambda t: t, lambda t: np.ones_like(t))

    @staticmethod
    def power(p: float = 2.0) -> "ChainFunction":
        if p < 1.0:
            raise DomainError("power must be >= 1 for convexity")
        return ChainFunction(f"power:{p:g}", lambda t: np.abs(t) ** p,
                             lambda t: p * np.sign(t) * np.abs(t) ** (p - 1.0))

    @staticmethod
    def hinge(theta: float) -> "ChainFunction":
        return ChainFunction(f"hinge:{theta:g}", lambda t: np.maximum(t - theta, 0.0),
                             lambda t: (t > theta).astype(float))

    @staticmethod
    def saturating(beta: float) -> "ChainFunction":
        """Concave (1 - exp(-beta t)) / beta."""
        return ChainFunction(f"saturating:{beta:g}", lambda t: -np.expm1(-beta * t) / beta,
                             lambda t: np.exp(-beta * t), kind="concave")


@dataclass
class ChainRuleResult:
    lhs: float
    rhs: float
    holds: bool
    margin: float       # signed slack in the direction of the inequality


def _bilinear(op: PlanarOperator, w, z) -> float:
    """Discrete Gagliardo pairing, exterior tail included."""
    a = op.domain.cell_area
    return 2.0 * a * float(np.dot(w, op.diag * z - op.apply_kernel(z)))


def chain_rule_check(u: GridFunction2D, Phi: ChainFunction, phi: GridFunction2D, s: float,
                     op: PlanarOperator | None = None, rtol: float = 1e-9) -> ChainRuleResult:
    """E(Phi(u), phi) <= E(u, Phi'(u) phi) for convex Phi (reversed if concave)."""
    if np.any(phi.values < 0.0):
        raise DomainError("test function must be nonnegative")
    if op is None:
        op = assemble_operator_2d(u.domain, s)
    uv = u.values
    lhs = _bilinear(op, Phi.f(uv), phi.values)
    rhs = _bilinear(op, uv, Phi.df(uv) * phi.values)
    slack = rhs - lhs if Phi.kind == "convex" else lhs - rhs
    return ChainRuleResult(lhs, rhs, bool(slack >= -rtol * abs(rhs)), slack)


# ------------------------------------------------------------ problem specs

@dataclass(frozen=True)
class RhsSpec:
    """Right-hand side f: 'const:a', 'gauss:x0,y0,sigma,amp' or 'rpow:e'."""

    kind: str
    args: tuple

    def planar(self, dom) -> np.ndarray:
        x, y = dom.centers.T
        if self.kind == "const":
            return np.full(dom.n, self.args[0])
        if self.kind == "gauss":
            x0, y0, w, amp = self.args
            return amp * np.exp(-((x - x0) ** 2 + (y - y0) ** 2) / (2.0 * w * w))
        e = self.args[0]
        return np.maximum(np.hypot(x, y), dom.h) ** e

    def radial(self, grid) -> np.ndarray:
        r = grid.nodes
        if self.kind == "const":
            return np.full(len(r), self.args[0])
        if self.kind == "gauss":
            x0, y0, w, amp = self.args
            if x0 != 0.0 or y0 != 0.0:
                raise DomainError("an off-center bump is not radial")
            return amp * np.exp(-r * r / (2.0 * w * w))
        # truncated at the first positive node: min(r^e, r_1^e)
        e = self.args[0]
        return np.maximum(r, r[1]) ** e


def parse_rhs(spec) -> RhsSpec:
    if isinstance(spec, RhsSpec):
        return spec
    kind, _, rest = str(spec).partition(":")
    kind = kind.strip().lower()
    try:
        vals = tuple(float(v) for v in rest.split(",") if v.strip())
    except ValueError as exc:
        raise DomainError(f"bad right-hand side {spec!r}") from exc
    want = {"const": 1, "gauss": 4, "rpow": 1}
    if kind not in want or len(vals) != want[kind]:
        raise DomainError(f"bad right-hand side {spec!r}")
    if kind == "const" and vals[0] < 0.0:
        raise DomainError("f must be nonnegative")
    if kind == "gauss" and (vals[3] < 0.0 or vals[2] <= 0.0):
        raise DomainError("bump needs sigma > 0 and amp >= 0")
    if kind == "rpow" and vals[0] >= 0.0:
        raise DomainError("rpow exponent must be negative")
    return RhsSpec(kind, vals)


@dataclass(frozen=True)
class ProblemSpec:
    """Problem (P): (-Delta)^s u + c u = f / u^gamma in Omega, u = 0 outside.

    ``shape`` is a planar shape ('disk:R', 'square:L', 'ellipse:a,b', N = 2)
    or 'ball:R' for a purely radial problem in any dimension.
    """

    shape: str = "square:2"
    f: str = "const:1"
    gamma: float = 1.0
    s: float = 0.5
    c: float = 0.0
    N: int = 2
    h: float = 1.0 / 16.0
    M: int = 128
    k_max: int = 1024
    tol: float = 0.01

    def __post_init__(self):
        KernelParams(self.N, self.s)
        if not self.gamma > 0.0:
            raise DomainError("gamma must be positive")
        if self.c < 0.0:
            raise DomainError("c must be nonnegative")
        if self.M < 8 or self.k_max < 1 or not self.h > 0.0 or self.tol < 0.0:
            raise DomainError("bad mesh, schedule or tolerance parameters")
        if not self.is_ball and self.N != 2:
            raise DomainError("planar shapes need N = 2")
        parse_rhs(self.f)
        if not self.is_ball:
            parse_shape(self.shape)
        elif self.radius <= 0.0:
            raise DomainError("ball radius must be positive")

    @property
    def is_ball(self) -> bool:
        return str(self.shape).strip().lower().startswith("ball")

    @property
    def radius(self) -> float:
        return float(str(self.shape).partition(":")[2])

    @property
    def params(self) -> KernelParams:
        return KernelParams(self.N, self.s)

    def schedule(self) -> list:
        return default_schedule(self.k_max)

    def refined(self) -> "ProblemSpec":
        """h -> h/2 and M -> 2M."""
        from dataclasses import replace
        return replace(self, h=0.5 * self.h, M=2 * self.M)


# ----------------------------------------------- radial -> weighted samples

def _shell_edges(grid, n_sub):
    t = np.linspace(0.0, 1.0, n_sub + 1)[:-1]
    left = grid.nodes[:-1, None] + grid.lengths[:, None] * t[None, :]
    return np.append(left.ravel(), grid.R)


def radial_shell_sample(u: RadialFunction, power: float = 1.0, n_sub: int = 4,
                        nq: int = 6) -> WeightedSample:
    """Shell averages of u^power with exact shell volumes.

    For radially nonincreasing u the concentration curve of the sample is
    exact at the shell breakpoints.
    """
    grid = u.grid
    N = grid.params.N
    edges = _shell_edges(grid, n_sub)
    a, b = edges[:-1], edges[1:]
    xg, wg = gauss_legendre(nq)
    rq = a[:, None] + (b - a)[:, None] * xg[None, :]
    vals = np.clip(u(rq), 0.0, None) ** power
    mass = sphere_area(N) * np.sum((b - a)[:, None] * wg[None, :] * vals * rq ** (N - 1), axis=1)
    vol = unit_ball_volume(N) * (b ** N - a ** N)
    return WeightedSample(mass / vol, vol)


def radial_quadrature_sample(u: RadialFunction, power: float = 1.0, nq: int = 6) -> WeightedSample:
    """Gauss points of every element with weights |S^{N-1}| r^{N-1} w L."""
    grid = u.grid
    N = grid.params.N
    xg, wg = gauss_legendre(nq)
    rq = grid.nodes[:-1, None] + grid.lengths[:, None] * xg[None, :]
    w = sphere_area(N) * grid.lengths[:, None] * wg[None, :] * rq ** (N - 1)
    return WeightedSample(np.clip(u(rq), 0.0, None).ravel() ** power, w.ravel())


# ---------------------------------------------------------- theorem checks

@dataclass
class ComparisonReport:
    name: str
    holds: bool
    worst_margin: float          # max over breakpoints of C_u - C_v
    worst_volume: float
    tolerance: float             # 0.01 C_v(|Omega|) by default
    total_measure: float
    cv_total: float
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def relative_margin(self) -> float:
        return self.worst_margin / max(self.cv_total, 1e-300)


@dataclass
class Verification:
    report: object
    curves: dict

    def __iter__(self):
        return iter((self.report, self.curves))


def _compare(name, us: WeightedSample, vs: WeightedSample, tol_rel, t0, extra) -> Verification:
    ustar, vstar = decreasing_rearrangement(us), decreasing_rearrangement(vs)
    res = is_less_concentrated(ustar, vstar, tol=0.0)
    cv_total = float(concentration_at(vstar, vstar.total))
    eps = tol_rel * cv_total
    rep = ComparisonReport(name, bool(res.worst_margin <= eps), res.worst_margin, res.worst_volume,
                           eps, vstar.total, cv_total, time.perf_counter() - t0, extra)
    curves = {"sigma": res.volumes, "C_u": concentration_at(ustar, res.volumes),
              "C_v": concentration_at(vstar, res.volumes)}
    return Verification(rep, curves)


def _ball_grid(problem: ProblemSpec, R: float):
    return make_radial_mesh(R, problem.M, problem.params)


def _solve_P(problem: ProblemSpec):
    """Solve (P); returns (sample_of_u_fn, u, f_values, measure, context)."""
    rhs = parse_rhs(problem.f)
    if problem.is_ball:
        grid = _ball_grid(problem, problem.radius)
        gmat = assemble_gagliardo_radial(grid)
        F = rhs.radial(grid)
        sol = solve_singular_radial(grid, F, problem.gamma, problem.c,
                                    problem.schedule(), gmat=gmat)
        return sol.solution, F, {"grid": grid, "gmat": gmat, "report": sol.report}
    dom = build_domain(problem.shape, problem.h)
    op = assemble_operator_2d(dom, problem.s)
    F = rhs.planar(dom)
    sol = solve_singular_2d(dom, GridFunction2D(dom, F), problem.gamma, problem.c,
                            problem.schedule(), op=op)
    return sol.solution, F, {"domain": dom, "op": op, "report": sol.report}


def _sample_of(u, power=1.0) -> WeightedSample:
    if isinstance(u, RadialFunction):
        return radial_shell_sample(u, power)
    return WeightedSample(np.clip(u.values, 0.0, None) ** power, u.domain.areas)


def _measure(u) -> float:
    if isinstance(u, RadialFunction):
        return unit_ball_volume(u.grid.params.N) * u.grid.R ** u.grid.params.N
    return u.domain.area


def verify_theorem1(problem: ProblemSpec) -> Verification:
    """u* < v with v solving the symmetrized singular problem, rhs ||f||_inf."""
    t0 = time.perf_counter()
    u, F, ctx = _solve_P(problem)
    fmax = float(np.max(F))
    N = problem.N
    Rstar = (_measure(u) / unit_ball_volume(N)) ** (1.0 / N)
    if problem.is_ball:
        grid, gmat = ctx["grid"], ctx["gmat"]
    else:
        grid = _ball_grid(problem, Rstar)
        gmat = assemble_gagliardo_radial(grid)
    vsol = solve_singular_radial(grid, np.full(grid.M + 1, fmax), problem.gamma, problem.c,
                                 problem.schedule(), gmat=gmat)
    extra = {"f_sup": fmax, "R_star": Rstar, "u_max": float(np.max(u.values)),
             "v_max": float(np.max(vsol.solution.values)),
             "u_report": ctx["report"].as_dict(), "v_report": vsol.report.as_dict()}
    return _compare("theorem1", _sample_of(u), radial_shell_sample(vsol.solution),
                    problem.tol, t0, extra)


def _f_star_on_grid(F, u_like, grid):
    """Schwarz rearrangement of the sampled f, evaluated at the radial nodes."""
    if isinstance(u_like, RadialFunction):
        fs = decreasing_rearrangement(radial_shell_sample(RadialFunction(u_like.grid, F)))
    else:
        fs = decreasing_rearrangement(WeightedSample(F, u_like.domain.areas))
    prof = schwarz_profile(fs, grid.params.N)
    r = np.minimum(grid.nodes, prof.R_star * (1.0 - 1e-15))
    return prof(r)


def verify_theorem2(problem: ProblemSpec) -> Verification:
    """(u*)^{gamma+1} < v with (-Delta)^s v = (gamma+1) f* on the ball.

    On a ball with radially nonincreasing f the right-hand side is used at
    the nodes directly, so both solves share one grid.
    """
    t0 = time.perf_counter()
    u, F, ctx = _solve_P(problem)
    N = problem.N
    g1 = problem.gamma + 1.0
    if problem.is_ball:
        grid, gmat = ctx["grid"], ctx["gmat"]
        if np.all(np.diff(F) <= 0.0):
            fstar = F
        else:
            fstar = _f_star_on_grid(F, u, grid)
    else:
        Rstar = (_measure(u) / unit_ball_volume(N)) ** (1.0 / N)
        grid = _ball_grid(problem, Rstar)
        gmat = assemble_gagliardo_radial(grid)
        fstar = _f_star_on_grid(F, u, grid)
    v = solve_linear_radial(grid, g1 * fstar, problem.c, gmat=gmat)
    extra = {"u_report": ctx["report"].as_dict(), "u_max": float(np.max(u.values)),
             "v_max": float(np.max(v.values)), "R_star": grid.R}
    return _compare("theorem2", _sample_of(u, g1), radial_shell_sample(v), problem.tol, t0, extra)


# ---------------------------------------------------------------- regularity

def regularity_regime(N: int, s: float, p: float, gamma: float) -> dict:
    """Classify p against N/2s; check p >= 2*_s."""
    p_crit = critical_exponent(KernelParams(N, s))
    if p < p_crit * (1.0 - 1e-12):
        raise DomainError(f"need p >= 2*_s = {p_crit!r}, got {p!r}")
    half = N / (2.0 * s)
    out = {"p": p, "critical": p_crit, "N_over_2s": half}
    if abs(p - half) <= 1e-12 * half:
        pp = p / (p - 1.0)
        out.update(regime=2, p_conjugate=pp, orlicz_exponent=(gamma + 1.0) * pp)
    elif p < half:
        out.update(regime=1, q=N * p * (gamma + 1.0) / (N - 2.0 * s * p))
    else:
        out.update(regime=3)
    return out


def luxemburg_norm(u: WeightedSample, exponent: float, rtol: float = 1e-8) -> float:
    """inf{lam > 0 : sum w (exp((|u|/lam)^e) - 1) <= 1} by bisection in log lam."""
    a = np.abs(u.values)
    top = float(np.max(a)) if len(a) else 0.0
    if top == 0.0:
        return 0.0

    def excess(lam):
        with np.errstate(over="ignore"):
            z = (a / lam) ** exponent
            val = float(np.sum(u.weights * np.expm1(np.minimum(z, 700.0))))
        return val - 1.0 if np.all(z < 700.0) else math.inf

    lo, hi = 1e-6 * top, 1e6 * top
    if excess(hi) > 0.0 or excess(lo) <= 0.0:
        raise ArithmeticError("Luxemburg norm outside the bracket [1e-6, 1e6] ||u||_inf")
    while hi - lo > rtol * hi:
        mid = math.sqrt(lo * hi)
        if excess(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return hi


def _fnorm(f_sample: WeightedSample, p: float) -> float:
    return lp_norm(f_sample, p)


def regularity_ratio(u, f, p: float, gamma: float, params: KernelParams) -> dict:
    """||u||_X / ||f||_p^{1/(gamma+1)} in the norm selected by the regime."""
    reg = regularity_regime(params.N, params.s, p, gamma)
    if isinstance(u, RadialFunction):
        us = radial_quadrature_sample(u)
        fs = radial_quadrature_sample(RadialFunction(u.grid, np.asarray(f, dtype=float)))
    else:
        us = WeightedSample(np.clip(u.values, 0.0, None), u.domain.areas)
        fs = WeightedSample(np.asarray(f, dtype=float), u.domain.areas)
    if reg["regime"] == 1:
        lhs = lp_norm(us, reg["q"])
    elif reg["regime"] == 2:
        lhs = luxemburg_norm(us, reg["orlicz_exponent"])
    else:
        lhs = lp_norm(us, math.inf)
    rhs = _fnorm(fs, p) ** (1.0 / (gamma + 1.0))
    return dict(reg, lhs_norm=lhs, rhs_norm=rhs, ratio=lhs / rhs)


@dataclass
class RegularityReport:
    regime: int
    info: dict
    scales: list
    lhs_norms: list
    rhs_norms: list
    ratios: list
    spread: float
    stable: bool


def verify_regularity(p: float, gamma: float, params: KernelParams, f: str = "const:1",
                      scales=(1.0, 2.0, 4.0), M: int = 128, shape: str = "disk:1",
                      h: float = 1.0 / 16.0, rtol: float = 1e-3, k_max: int = 1024) -> RegularityReport:
    """Solve (P) for f, 2f, 4f and check that the norm ratio does not move.

    N = 2 uses the planar solver on ``shape``; N >= 3 the radial one on the
    unit ball.
    """
    rhs = parse_rhs(f)
    reg = regularity_regime(params.N, params.s, p, gamma)
    sched = default_schedule(k_max)
    out = []
    if params.N == 2:
        dom = build_domain(shape, h)
        op = assemble_operator_2d(dom, params.s)
        F = rhs.planar(dom)
        for lam in scales:
            sol = solve_singular_2d(dom, GridFunction2D(dom, lam * F), gamma, schedule=sched, op=op)
            out.append(regularity_ratio(sol.solution, lam * F, p, gamma, params))
    else:
        grid = make_radial_mesh(1.0, M, params)
        gmat = assemble_gagliardo_radial(grid)
        F = rhs.radial(grid)
        for lam in scales:
            sol = solve_singular_radial(grid, lam * F, gamma, schedule=sched, gmat=gmat)
            out.append(regularity_ratio(sol.solution, lam * F, p, gamma, params))
    ratios = [d["ratio"] for d in out]
    spread = (max(ratios) - min(ratios)) / max(abs(ratios[0]), 1e-300)
    return RegularityReport(reg["regime"], reg, list(scales), [d["lhs_norm"] for d in out],
                            [d["rhs_norm"] for d in out], ratios, spread, bool(spread <= rtol))


# -------------------------------------------------------------------- energy

@dataclass
class EnergyResult:
    lhs: float
    rhs: float
    holds: bool
    ratio: float
    tolerance: float


def verify_energy(u, gamma: float, s: float, v: RadialFunction,
                  gmat: GagliardoMatrixRadial | None = None, op: PlanarOperator | None = None,
                  tol: float = 0.05) -> EnergyResult:
    """||u^{gamma+1}||_{X_0^s} <= (1 + tol) ||v||_{X_0^s}."""
    g1 = gamma + 1.0
    if isinstance(u, RadialFunction):
        ug = assemble_gagliardo_radial(u.grid) if gmat is None or gmat.grid is not u.grid else gmat
        lhs = math.sqrt(max(ug.quadratic_form(np.clip(u.dofs, 0.0, None) ** g1), 0.0))
    else:
        lhs = math.sqrt(seminorm_2d_squared(GridFunction2D(u.domain, np.clip(u.values, 0.0, None) ** g1),
                                            s, op=op))
    if gmat is None or gmat.grid is not v.grid:
        gmat = assemble_gagliardo_radial(v.grid)
    rhs = math.sqrt(max(gmat.quadratic_form(v.dofs), 0.0))
    return EnergyResult(lhs, rhs, bool(lhs <= rhs * (1.0 + tol)), lhs / rhs, tol)


def energy_instance(problem: ProblemSpec, tol: float = 0.05) -> EnergyResult:
    """Solve (P) and the linear symmetrized problem, then compare energies."""
    u, F, ctx = _solve_P(problem)
    if problem.is_ball:
        grid, gmat = ctx["grid"], ctx["gmat"]
        fstar = F if np.all(np.diff(F) <= 0.0) else _f_star_on_grid(F, u, grid)
    else:
        Rstar = math.sqrt(u.domain.area / math.pi)
        grid = make_radial_mesh(Rstar, problem.M, problem.params)
        gmat = assemble_gagliardo_radial(grid)
        fstar = _f_star_on_grid(F, u, grid)
    v = solve_linear_radial(grid, (problem.gamma + 1.0) * fstar, problem.c, gmat=gmat)
    return verify_energy(u, problem.gamma, problem.s, v, gmat=gmat, op=ctx.get("op"), tol=tol)


# --------------------------------------------------------- randomized suites

def _fourier_profile(rng, r, R, n_modes=5):
    k = np.arange(1, n_modes + 1)
    a = rng.normal(size=n_modes) / k
    b = rng.normal(size=n_modes) / k
    x = np.pi * r[:, None] * k[None, :] / R
    f = np.cos(x) @ a + np.sin(x) @ b
    return f - np.min(f) + rng.uniform(0.0, 0.5)


def maxmin_random_suite(n: int = 1000, seed: int = 0, n_samples: int = 400) -> LemmaReport:
    rng = np.random.default_rng(seed)
    total = LemmaReport("maxmin", tolerance=_MAXMIN_TOL)
    for i in range(n):
        R = rng.uniform(0.5, 2.0)
        N = int(rng.integers(2, 5))
        r = np.linspace(0.0, R, n_samples)
        u = _fourier_profile(rng, r, R)
        v = _fourier_profile(rng, r, R)
        incs = rng.exponential(size=n_samples - 1) * rng.uniform(0.0, 3.0)
        h = np.concatenate([[0.0], np.cumsum(incs)]) + rng.uniform(0.01, 1.0)
        mono = "increasing" if i % 2 == 0 else "decreasing"
        hv = h if mono == "increasing" else h[::-1].copy()
        total.merge(maxmin_lemma_check(r, u, v, WeightFunction(r, hv, mono), N))
    return total


def ab_random_suite(n: int = 100_000, seed: int = 0) -> LemmaReport:
    rng = np.random.default_rng(seed)
    a = np.exp(rng.uniform(math.log(1e-3), math.log(1e3), n))
    b = np.exp(rng.uniform(math.log(1e-3), math.log(1e3), n))
    g = np.exp(rng.uniform(math.log(1e-2), math.log(4.0), n))
    res = ab_inequality_check(a, b, g)
    scale = a ** (-g) + b ** (-g)
    rel = res.margin / scale
    rep = LemmaReport("ab", instances_run=n, violations=int(np.sum(~res.holds)),
                      worst_margin=float(np.min(rel)), tolerance=1e-12)
    return rep


def _random_bumps(rng, dom, n_bumps=3):
    x, y = dom.centers.T
    out = np.zeros(dom.n)
    for _ in range(n_bumps):
        cx, cy = rng.uniform(-0.3, 0.3, 2)
        w = rng.uniform(0.1, 0.4)
        out += rng.uniform(0.2, 2.0) * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * w * w))
    return out


def chain_rule_random_suite(n: int = 300, seed: int = 0, h: float = 1.0 / 16.0) -> LemmaReport:
    """Three families in turn: t^2, hinge max(t - theta, 0), concave saturating."""
    rng = np.random.default_rng(seed)
    dom = build_domain("square:1", h)
    ops = {s: assemble_operator_2d(dom, s) for s in (0.3, 0.5, 0.7)}
    rep = LemmaReport("chain_rule", tolerance=1e-9)
    for i in range(n):
        s = (0.3, 0.5, 0.7)[int(rng.integers(0, 3))]
        u = GridFunction2D(dom, _random_bumps(rng, dom))
        if rng.uniform() < 0.5:
            phi = GridFunction2D(dom, _random_bumps(rng, dom))
        else:
            phi = GridFunction2D(dom, rng.uniform(0.0, 1.0, dom.n))
        fam = i % 3
        if fam == 0:
            Phi = ChainFunction.power(2.0)
        elif fam == 1:
            Phi = ChainFunction.hinge(rng.uniform(0.0, float(np.max(u.values))))
        else:
            Phi = ChainFunction.saturating(rng.uniform(0.2, 5.0))
        res = chain_rule_check(u, Phi, phi, s, op=ops[s])
        rep.record(res.margin / max(abs(res.rhs), 1e-300))
    return rep


def riesz_random_suite(n: int = 100, size: int = 32, seed: int = 0,
                       alphas=(0.5, 2.0)) -> LemmaReport:
    """Riesz checker on random nonnegative fields over a size x size grid of [-1, 1]^2.

    Even instances are sums of Gaussian bumps, odd ones white noise; alpha
    alternates through ``alphas``; F is built from G_{t,h} with random t, h.
    The recorded margin is (rhs - lhs) / |rhs|, the tolerance 1e-3.
    """
    rng = np.random.default_rng(seed)
    xs = (np.arange(size) + 0.5) * (2.0 / size) - 1.0
    X, Y = np.meshgrid(xs, xs)
    rep = LemmaReport("riesz", tolerance=1e-3)

    def sample(kind):
        if kind == 1:
            return rng.uniform(0.0, 1.0, X.shape)
        out = np.zeros_like(X)
        for _ in range(3):
            cx, cy = rng.uniform(-0.6, 0.6, 2)
            w = rng.uniform(0.1, 0.4)
            out += rng.uniform(0.2, 1.0) * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2.0 * w * w))
        return out

    for i in range(n):
        u, v = sample(i % 2), sample(i % 2)
        G = GTestFunction(rng.uniform(0.0, 0.5), rng.uniform(0.05, 0.5))
        res = riesz_check(u, v, alphas[i % len(alphas)], G, xs, xs)
        rep.record(res.holds_within / max(abs(res.rhs), 1e-300))
    rep.details["max_relative_violation"] = max(0.0, -rep.worst_margin)
    return rep


def run_lemma_suites(seed: int = 0, n_maxmin: int = 1000, n_ab: int = 100_000,
                     n_chain: int = 300) -> list:
    return [maxmin_random_suite(n_maxmin, seed), ab_random_suite(n_ab, seed),
            chain_rule_random_suite(n_chain, seed)]
