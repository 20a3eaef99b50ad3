"""Convergence experiments and the limit-lemma checks, as runnable verdicts.

Every check returns a :class:`CheckResult` (name, pass flag, a detail line,
a table of the numbers behind the verdict, and optional children). Checks
are deterministic for a given seed.

Convergence is judged by the final gap against a threshold together with a
monotone envelope over the last three points; no rate is fitted. Gaps
below ``MONOTONE_FLOOR`` count as zero when testing monotonicity, so
round-off at the bottom of a converged sequence is not read as growth.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.special import polygamma

from . import fixtures
from .errors import NumericalError, SingularGram
from .geometry import (
    INF,
    AffineConstraintSet,
    DirectionVector,
    _check_gram,
    _l2_orthonormal_coefficients,
    closest_point,
    covariance_routes,
    gaussian_limit,
    kernel_basis,
    marginal_covariance,
    transversality_predicates,
    truncated_slice,
)
from .measures import (
    TestFunction,
    charfn_muInf,
    charfn_muL,
    constant_ratio,
    density_muInf,
    density_muN,
    gaussian_expectation,
    slice_density,
)
from .montecarlo import (
    MCEstimate,
    block_generator,
    estimate_gaussian_mean,
    estimate_slice_mean,
    membership_residuals,
    sample_slice,
    sample_sphere,
)
from .quadrature import integrate_muInf, integrate_muN

MONOTONE_FLOOR = 1e-13
DEFAULT_SEED = 20240611


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    table: list = field(default_factory=list)
    children: list = field(default_factory=list)
    expected_fail: bool = False
    data: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"name": self.name, "passed": self.passed, "detail": self.detail}
        if self.expected_fail:
            out["expected_fail"] = True
        if self.data:
            out["data"] = self.data
        if self.table:
            out["table"] = self.table
        if self.children:
            out["children"] = [c.to_dict() for c in self.children]
        return out

    def lines(self, indent: int = 0) -> list[str]:
        tag = "PASS" if self.passed else "FAIL"
        if self.expected_fail:
            tag += " (expected-fail guard)"
        pad = "  " * indent
        out = [f"{pad}{tag:<4} {self.name}" + (f": {self.detail}" if self.detail else "")]
        for c in self.children:
            out += c.lines(indent + 1)
        return out


def group(name: str, children: list[CheckResult]) -> CheckResult:
    n_ok = sum(c.passed for c in children)
    return CheckResult(name, n_ok == len(children), f"{n_ok}/{len(children)} passed", children=children)


def monotone_tail(gaps, last: int = 3, floor: float = MONOTONE_FLOOR) -> bool:
    """True when the last ``last`` gaps are nonincreasing (up to ``floor``)."""
    g = [max(float(x), floor) for x in list(gaps)[-last:]]
    return all(b <= a for a, b in zip(g, g[1:]))


def _converged(gaps, tol: float) -> bool:
    return bool(gaps) and float(gaps[-1]) <= tol and monotone_tail(gaps)


# ---------------------------------------------------------------------------
# main limit


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    quad: float
    mc: MCEstimate | None
    gauss: float
    gap_quad: float
    gap_mc_z: float
    error: str | None = None


CSV_COLUMNS = ("N", "quad", "mc", "mc_stderr", "gauss", "gap_quad", "gap_mc_z")


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


@dataclass
class ConvergenceReport:
    rows: list
    verdict: bool
    criterion: str
    tol: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r.N, _fmt(r.quad), _fmt(r.mc.value if r.mc else None),
                        _fmt(r.mc.stderr if r.mc else None), _fmt(r.gauss),
                        _fmt(r.gap_quad), _fmt(r.gap_mc_z)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        rows = []
        for r in self.rows:
            rows.append({
                "N": r.N, "quad": r.quad, "mc": r.mc.to_dict() if r.mc else None,
                "gauss": r.gauss, "gap_quad": r.gap_quad, "gap_mc_z": r.gap_mc_z,
                "error": r.error,
            })
        return {"verdict": "pass" if self.verdict else "fail", "criterion": self.criterion,
                "tol": self.tol, "rows": rows}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def gaussian_value(G, phi: TestFunction, tol: float = 1e-10) -> float:
    """Closed form when available, else quadrature against the limit."""
    v = gaussian_expectation(G, phi)
    return float(v) if v is not None else integrate_muInf(G, phi, tol)


def run_convergence(L: AffineConstraintSet, phi: TestFunction, N_list, n_mc: int, seed: int,
                    tol: float = 5e-3, quad_tol: float = 1e-9) -> ConvergenceReport:
    """Slice means against the Gaussian limit for increasing N.

    The verdict passes iff the quadrature gap at the largest N is at most
    ``tol`` and the gaps are nonincreasing over the last three N. A row
    whose computation raises a numerical error is kept (with NaNs and the
    error name) and fails the report.
    """
    N_list = [int(n) for n in N_list]
    if not N_list or any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValueError("N_list must be nonempty and strictly increasing")
    G = gaussian_limit(L)
    target = gaussian_value(G, phi)
    rows = []
    for N in N_list:
        try:
            quad = integrate_muN(slice_density(L, N), phi, quad_tol)
            mc = estimate_slice_mean(L, N, phi, n_mc, seed)
        except NumericalError as exc:
            rows.append(ConvergenceRow(N, math.nan, None, target, math.nan, math.nan, type(exc).__name__))
            continue
        diff = abs(mc.value - target)
        z = diff / mc.stderr if mc.stderr > 0 else (0.0 if diff == 0 else math.inf)
        rows.append(ConvergenceRow(N, quad, mc, target, abs(quad - target), z))
    gaps = [r.gap_quad for r in rows]
    ok = all(r.error is None for r in rows) and _converged(gaps, tol)
    crit = f"gap_quad[N={N_list[-1]}] <= {tol:g} and nonincreasing over the last 3 N"
    return ConvergenceReport(rows, ok, crit, tol)


# ---------------------------------------------------------------------------
# limit lemmas


def default_probes(n: int = 10, length: int = 6, seed: int = DEFAULT_SEED) -> list[np.ndarray]:
    """Unit vectors e_1..e_3 followed by random finitely supported sequences."""
    rng = np.random.default_rng(seed)
    out = [np.eye(length)[i] for i in range(3)]
    while len(out) < n:
        out.append(rng.normal(size=int(rng.integers(1, length + 1))))
    return out


def check_z0_limit(L: AffineConstraintSet, N_list, t_probes=None, tol: float = 1e-8) -> CheckResult:
    """``<t, z^{0,N}>`` approaches ``<t, z^0>`` for every probe ``t``."""
    t_probes = default_probes() if t_probes is None else [np.atleast_1d(np.asarray(t, float)) for t in t_probes]
    z0 = closest_point(L, INF)
    table, ok, worst = [], True, 0.0
    norms = []
    for N in N_list:
        zN = closest_point(L, N)
        norms.append(float(zN @ zN))
    for i, t in enumerate(t_probes):
        exact = z0.dot_array(t)
        gaps = []
        for N in N_list:
            zN = closest_point(L, N)
            n = min(N, t.size)
            gaps.append(abs(float(t[:n] @ zN[:n]) - exact))
            table.append({"probe": i, "N": int(N), "gap": gaps[-1]})
        ok &= _converged(gaps, tol)
        worst = max(worst, gaps[-1])
    # a longer truncation only enlarges L_N, and every L_N sits inside L, so
    # |z^{0,N}| can only shrink with N and never drops below |z^0|
    lim = z0.norm_sq()
    slack = 1e-12 * max(1.0, lim)
    nonincr = all(b <= a + slack for a, b in zip(norms, norms[1:]))
    bounded = all(v >= lim - slack for v in norms)
    ok = ok and nonincr and bounded
    return CheckResult("z0_limit", ok,
                       f"max final probe gap {worst:.2e} (tol {tol:g}); |z0N| nonincreasing={nonincr}, >= |z0|={bounded}",
                       table)


def check_covariance_limit(L: AffineConstraintSet, N_list, tol: float = 1e-6) -> CheckResult:
    """Entrywise and determinant convergence of L0N L0N* to L0 L0*."""
    c_inf = marginal_covariance(L, INF)
    d_inf = float(np.linalg.det(c_inf))
    table, cg, dg = [], [], []
    for N in N_list:
        c = marginal_covariance(L, N)
        cg.append(float(np.max(np.abs(c - c_inf))))
        dg.append(abs(float(np.linalg.det(c)) - d_inf))
        table.append({"N": int(N), "cov_gap": cg[-1], "det_gap": dg[-1]})
    ok = _converged(cg, tol) and _converged(dg, tol)
    return CheckResult("covariance_limit", ok,
                       f"final cov gap {cg[-1]:.2e}, det gap {dg[-1]:.2e} (tol {tol:g})", table)


def _tail_gram(directions, n: int) -> np.ndarray:
    return np.array([[a.tail_dot(b, n) for b in directions] for a in directions])


def _l2_span_projection(directions, z: np.ndarray):
    """Coefficients of the l^2 projection of finitely supported ``z`` onto span(directions)."""
    g = np.array([[a.dot(b) for b in directions] for a in directions])
    return scipy.linalg.solve(g, np.array([d.dot_array(z) for d in directions]), assume_a="pos")


def _span_projection_gap(directions, z: np.ndarray, N: int) -> float:
    """``|P_N z - P_K z|`` for K = span(directions), P_N onto the span of the truncations.

    ``z`` is finitely supported with ``z.size <= N``.
    """
    wN = np.stack([d.head(N) for d in directions], axis=1)
    zN = np.zeros(N)
    zN[: z.size] = z
    c_inf = _l2_span_projection(directions, z)
    c_N = scipy.linalg.solve(wN.T @ wN, wN.T @ zN, assume_a="pos")
    head = wN @ (c_N - c_inf)
    tail = float(c_inf @ _tail_gram(directions, N) @ c_inf)
    return math.sqrt(float(head @ head) + max(tail, 0.0))


def _kernel_projection_gap(L: AffineConstraintSet, z: np.ndarray, N: int) -> float:
    """``|P_{ker Q_N} z - P_{ker Q} z|``, the first through a kernel basis of Q_N."""
    B = kernel_basis(L, N)
    zN = np.zeros(N)
    zN[: z.size] = z
    near = B @ (B.T @ zN)
    c = _l2_span_projection(list(L.directions), z)
    far_head = zN - L.truncated(N) @ c
    tail = float(c @ _tail_gram(list(L.directions), N) @ c)
    d = near - far_head
    return math.sqrt(float(d @ d) + max(tail, 0.0))


def check_limproj_counterexample(N_list, tol: float = 1e-8) -> CheckResult:
    """Expected-fail guard: finite-dimensionality of K cannot be dropped.

    With ``v = (1, 1/2, 1/3, ...)`` and ``K = v^perp``, every truncation
    ``P_{Z_N}(K)`` is all of R^N (each ``e_i``, i <= N, is the truncation of
    ``e_i - v_i v_tail / |v_tail|^2`` in K), so projecting ``z = e_1`` onto it
    returns ``e_1`` while ``P_K e_1 = e_1 - v / |v|^2``. The gap stays at
    ``1 / |v| = sqrt(6) / pi``. The guard passes when convergence FAILS.
    """
    v2 = math.pi**2 / 6.0
    table, gaps = [], []
    for N in N_list:
        head2 = float(np.sum(1.0 / np.arange(1, N + 1) ** 2))
        tail2 = float(polygamma(1, N + 1))  # sum_{j > N} 1/j^2
        # a nonzero tail of v is what makes the truncated image all of R^N
        full = tail2 > 0
        gap2 = (head2 + tail2) / v2**2 if full else 0.0  # |P_N e_1 - P_K e_1|^2 = |v|^2 / |v|^4
        gaps.append(math.sqrt(gap2))
        table.append({"N": int(N), "gap": gaps[-1], "image_is_RN": bool(full)})
    converged = _converged(gaps, tol)
    return CheckResult("limproj_infinite_dim_counterexample", not converged,
                       f"gap stays at {gaps[-1]:.6f} (= sqrt(6)/pi {math.sqrt(6) / math.pi:.6f}); "
                       f"convergence {'observed (guard FAILED)' if converged else 'fails as expected'}",
                       table, expected_fail=True)


def _harmonic_contrast(N_list) -> CheckResult:
    """K = span{v}: finite-dimensional, so truncated projections do converge."""
    v2 = math.pi**2 / 6.0
    table, gaps = [], []
    for N in N_list:
        h2 = float(np.sum(1.0 / np.arange(1, N + 1) ** 2))
        tail2 = float(polygamma(1, N + 1))
        # P_N e_1 = v_N / |v_N|^2, P_K e_1 = v / |v|^2
        head = h2 * (1.0 / h2 - 1.0 / v2) ** 2
        gaps.append(math.sqrt(head + tail2 / v2**2))
        table.append({"N": int(N), "gap": gaps[-1]})
    ok = all(b < a for a, b in zip(gaps, gaps[1:]))
    return CheckResult("limproj_finite_dim_contrast", ok,
                       f"gap {gaps[0]:.2e} -> {gaps[-1]:.2e}, strictly decreasing={ok}", table)


def check_projection_limits(L: AffineConstraintSet, z_probes=None, N_list=(25, 50, 100, 200, 400),
                            tol: float = 1e-8, guard_N=(10, 100, 1000, 10000)) -> CheckResult:
    """Projection limits on ker Q, on truncations of span{w_i}, and on Z_N.

    Parts: ``P_{ker Q_N} z -> P_{ker Q} z`` (finite-codimension subspace),
    ``P_{P_{Z_N} K} z -> P_K z`` for K = span{w_i} (finite-dimensional),
    ``P_{Z_N} w -> w``, and the infinite-dimensional counterexample guard.
    """
    z_probes = default_probes(6) if z_probes is None else [np.atleast_1d(np.asarray(z, float)) for z in z_probes]
    dirs = list(L.directions)
    t = _l2_orthonormal_coefficients(L.gram())
    children = []

    routes = (("ker_Q_limit", lambda z, N: _kernel_projection_gap(L, z, N)),
              ("span_truncation_limit", lambda z, N: _span_projection_gap(dirs, z, N)))
    for label, gap_fn in routes:
        table, ok, worst = [], True, 0.0
        for i, z in enumerate(z_probes):
            gaps = []
            for N in N_list:
                if N < z.size:
                    continue
                gaps.append(gap_fn(z, int(N)))
                table.append({"probe": i, "N": int(N), "gap": gaps[-1]})
            ok &= _converged(gaps, tol)
            worst = max(worst, gaps[-1])
        children.append(CheckResult(label, ok, f"max final gap {worst:.2e} (tol {tol:g})", table))

    # dense union of the Z_N: the truncation error of each orthonormalized direction
    table, ok, worst = [], True, 0.0
    for a in range(L.m):
        gaps = []
        for N in N_list:
            c = t[:, a]
            gaps.append(math.sqrt(max(float(c @ _tail_gram(dirs, int(N)) @ c), 0.0)))
            table.append({"direction": a, "N": int(N), "gap": gaps[-1]})
        ok &= _converged(gaps, tol)
        worst = max(worst, gaps[-1])
    children.append(CheckResult("dense_union", ok, f"max final gap {worst:.2e} (tol {tol:g})", table))

    children.append(check_limproj_counterexample(guard_N, tol))
    children.append(_harmonic_contrast(guard_N))
    res = group("projection_limits", children)
    return res


def _independent(L: AffineConstraintSet, N: int) -> bool:
    if N < L.m:
        return False
    w = L.truncated(N)
    try:
        _check_gram(w.T @ w)
    except SingularGram:
        return False
    return True


def _onto(L: AffineConstraintSet, N: int) -> bool:
    w = L.truncated(N)
    sv = np.linalg.svd(w, compute_uv=False)
    return sv.size == L.m and bool(sv[-1] > math.sqrt(1e-10) * max(sv[0], 1e-300))


def check_onsets(L: AffineConstraintSet, n_max: int = 64, permanence: int = 10,
                 expect_transversal: bool | None = None, name: str = "onsets") -> CheckResult:
    """Onset of independence, of surjectivity of Q_N and of transversality.

    Transversality is only searched from the independence onset on, where
    the slice geometry is defined. Each onset must persist for the next
    ``permanence`` dimensions, and the three transversality predicates must
    agree at every scanned N >= k.
    """
    k = L.k
    Ns = list(range(1, n_max + permanence + 1))
    indep = {N: _independent(L, N) for N in Ns}
    onto = {N: _onto(L, N) for N in Ns}
    preds = {N: transversality_predicates(L, N) for N in Ns if N >= k}
    agree = all(len(set(p)) == 1 for p in preds.values())
    disagree = [N for N, p in preds.items() if len(set(p)) != 1]

    def onset(flag, start=1):
        for N in range(start, n_max + 1):
            if flag(N):
                return N
        return None

    def permanent(flag, n0):
        return n0 is None or all(flag(N) for N in range(n0, n0 + permanence + 1))

    a = onset(lambda N: indep[N])
    b = onset(lambda N: onto[N])
    is_tr = lambda N: N >= k and all(preds[N])  # noqa: E731
    c = onset(is_tr, max(k, a)) if a is not None else None
    perm = permanent(lambda N: indep[N], a) and permanent(lambda N: onto[N], b) and permanent(is_tr, c)
    status = "ok" if c is not None else "NotTransversal"
    ok = agree and perm and a is not None
    if expect_transversal is not None:
        ok = ok and (c is not None) == expect_transversal
    data = {"independent": a, "onto": b, "transversal": c, "status": status}
    detail = f"independent N={a}, onto N={b}, transversal N={c} ({status}); permanent={perm}; trichotomy agrees={agree}"
    if disagree:
        detail += f"; predicates disagree at N={disagree[:5]}"
    return CheckResult(name, ok, detail, data=data)


def check_constant_limit(k_m_pairs=None, N: int = 100_000, tol: float = 1e-3) -> CheckResult:
    pairs = [(k, m) for k in range(4) for m in range(4)] if k_m_pairs is None else list(k_m_pairs)
    table, worst = [], 0.0
    for k, m in pairs:
        gap = abs(constant_ratio(N, k, m) - (2 * math.pi) ** (-k / 2))
        worst = max(worst, gap)
        table.append({"k": k, "m": m, "gap": gap})
    return CheckResult("constant_limit", worst < tol, f"max gap {worst:.2e} at N={N} (tol {tol:g})", table)


# ---------------------------------------------------------------------------
# cross-checks between routes


def disintegration_cases():
    """(label, L, N, phi) for the finite-N identity between quadrature and sampling."""
    phis = [("cos", fixtures.cos_x1()), ("box[2,4]", TestFunction.box([2.0], [4.0])),
            ("bump", TestFunction.bump([3.0], 0.5))]
    cases = []
    for label, L, N in (("e1_small", fixtures.e1_small(), 10), ("e1", fixtures.e1(), 41), ("e1", fixtures.e1(), 100)):
        for pl, phi in phis:
            cases.append((f"{label} N={N} {pl}", L, N, phi))
    return cases


def check_disintegration(cases=None, n_mc: int = 1_000_000, seed: int = DEFAULT_SEED,
                         abs_tol: float = 1e-6, quad_tol: float = 1e-9) -> CheckResult:
    """|quadrature of mu_N - slice Monte Carlo| <= 3 stderr + abs_tol."""
    cases = disintegration_cases() if cases is None else cases
    table, ok = [], True
    for label, L, N, phi in cases:
        q = integrate_muN(slice_density(L, N), phi, quad_tol)
        mc = estimate_slice_mean(L, N, phi, n_mc, seed)
        bound = 3 * mc.stderr + abs_tol
        good = abs(q - mc.value) <= bound
        ok &= good
        table.append({"case": label, "quad": q, "mc": mc.value, "stderr": mc.stderr,
                      "diff": abs(q - mc.value), "bound": bound, "passed": bool(good)})
    worst = max(r["diff"] / r["bound"] for r in table)
    return CheckResult("disintegration_identity", ok,
                       f"{len(table)} cases, worst |quad-mc|/(3se+{abs_tol:g}) = {worst:.2f}", table)


def normalization_cases(seed: int = DEFAULT_SEED):
    rng = np.random.default_rng(seed)
    specs = [(1, 1, 8, False), (1, 2, 12, True), (1, 3, 41, False), (2, 1, 9, False), (2, 2, 12, True),
             (2, 3, 14, False), (2, 1, 100, True), (1, 1, 1000, False), (2, 2, 400, False), (2, 3, 50, True)]
    return [(f"k={k} m={m} N={N}{' tail' if tail else ''}",
             fixtures.random_constraints(rng, k, m, tail=tail, offset_scale=0.5), N)
            for k, m, N, tail in specs]


def check_normalization(cases=None, tol: float = 1e-8) -> CheckResult:
    cases = normalization_cases() if cases is None else cases
    table, worst = [], 0.0
    one = TestFunction.constant()
    for label, L, N in cases:
        v = integrate_muN(slice_density(L, N), one, tol)
        worst = max(worst, abs(v - 1.0))
        table.append({"case": label, "mass": v, "gap": abs(v - 1.0)})
    return CheckResult("muN_normalization", worst <= tol,
                       f"{len(table)} configurations, max |mass-1| {worst:.2e} (tol {tol:g})", table)


def check_density_limit(L: AffineConstraintSet | None = None, N: int = 100_000, n_points: int = 20,
                        rtol: float = 1e-3) -> CheckResult:
    """Pointwise density_muN -> density_muInf on a grid within two standard deviations."""
    L = fixtures.e1() if L is None else L
    G = gaussian_limit(L)
    D = slice_density(L, N)
    sd = math.sqrt(G.cov[0, 0])
    xs = G.mean[0] + np.linspace(-2 * sd, 2 * sd, n_points)
    pts = np.zeros((n_points, G.k))
    pts[:, 0] = xs
    pts[:, 1:] = G.mean[1:]
    fN, fI = density_muN(D, pts), density_muInf(G, pts)
    rel = np.abs(fN - fI) / fI
    table = [{"x": float(x), "muN": float(a), "muInf": float(b), "rel_gap": float(r)}
             for x, a, b, r in zip(xs, fN, fI, rel)]
    return CheckResult("density_limit", bool(rel.max() < rtol),
                       f"max relative gap {rel.max():.2e} at N={N} (tol {rtol:g})", table)


def pushforward_configs(seed: int = DEFAULT_SEED):
    rng = np.random.default_rng(seed + 1)
    return [("e1", fixtures.e1()), ("hyperplane", fixtures.hyperplane()),
            ("geometric_single", fixtures.geometric_single()), ("geometric_pair", fixtures.geometric_pair()),
            ("random k=3 m=2 tail", fixtures.random_constraints(rng, 3, 2, tail=True))]


def check_pushforward(configs=None, n_t: int = 20, seed: int = DEFAULT_SEED, tol: float = 1e-12) -> CheckResult:
    """Characteristic function of the limit measure, pushed to R^k, against the Gaussian's."""
    configs = pushforward_configs(seed) if configs is None else configs
    rng = np.random.default_rng(seed)
    table, worst, ok = [], 0.0, True
    for label, L in configs:
        G = gaussian_limit(L)
        gap = 0.0
        for _ in range(n_t):
            t = rng.normal(size=L.k) * rng.uniform(0.1, 3.0)
            try:
                gap = max(gap, abs(charfn_muL(L, t) - charfn_muInf(G, t)))
            except NumericalError:
                gap = math.inf
        worst = max(worst, gap)
        ok &= gap <= tol
        table.append({"config": label, "max_gap": gap})
    return CheckResult("pushforward_charfn", ok, f"{len(configs)} configs x {n_t} t, max gap {worst:.2e} (tol {tol:g})", table)


def random_route_instances(n: int = 50, seed: int = DEFAULT_SEED):
    rng = np.random.default_rng(seed + 2)
    out = []
    for _ in range(n):
        k, m = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        tail = bool(rng.integers(0, 2))
        L = fixtures.random_constraints(rng, k, m, tail=tail)
        N = INF if rng.uniform() < 0.2 else int(rng.integers(max(k, m) + 2, 60))
        out.append((L, N))
    return out


def check_two_routes(instances=None, tol: float = 1e-10) -> CheckResult:
    """Rank-one-update and projector-sandwich forms of L0 L0* agree."""
    instances = random_route_instances() if instances is None else instances
    table, worst = [], 0.0
    for L, N in instances:
        a, b = covariance_routes(L, N)
        gap = float(np.max(np.abs(a - b)))
        worst = max(worst, gap)
        table.append({"k": L.k, "m": L.m, "N": "inf" if N == INF else int(N), "gap": gap})
    return CheckResult("covariance_two_routes", worst <= tol,
                       f"{len(table)} instances, max gap {worst:.2e} (tol {tol:g})", table)


def adversarial_transversality():
    """Constraint systems that hide a marginal coordinate, plus borderline ones."""
    return [
        ("w=e1 k=1", fixtures.axis()),
        ("w in span(e1,e2) k=2", AffineConstraintSet([DirectionVector((0.6, 0.8))], [1.0], 2)),
        ("w=e1,e2 k=2", AffineConstraintSet([DirectionVector.basis(1), DirectionVector.basis(2)], [1.0, 0.0], 2)),
        ("w=e1 k=3", AffineConstraintSet([DirectionVector.basis(1)], [0.0], 3)),
        ("w=(e1+e3)/sqrt2 k=1", AffineConstraintSet([DirectionVector((2**-0.5, 0.0, 2**-0.5))], [0.0], 1)),
        ("w=e2 k=1", fixtures.hyperplane()),
    ]


def check_transversality(n_random: int = 30, seed: int = DEFAULT_SEED) -> CheckResult:
    """The three transversality predicates agree on random and adversarial inputs."""
    rng = np.random.default_rng(seed + 3)
    cases = [(label, L, N) for label, L in adversarial_transversality() for N in (1, 2, 3, 5, 12) if N >= L.k]
    for _ in range(n_random):
        k, m = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        L = fixtures.random_constraints(rng, k, m, tail=bool(rng.integers(0, 2)), prefix_len=int(rng.integers(m, 7)))
        cases.append((f"random k={k} m={m}", L, int(rng.integers(k, 12))))
    table, ok = [], True
    for label, L, N in cases:
        p = transversality_predicates(L, N)
        agree = len(set(p)) == 1
        ok &= agree
        table.append({"case": label, "N": N, "predicates": list(p), "agree": agree})
    n_true = sum(r["predicates"][0] for r in table)
    return CheckResult("transversality_trichotomy", ok,
                       f"{len(table)} instances ({n_true} transversal), all agree={ok}", table)


def check_sampler(seed: int = DEFAULT_SEED, n_member: int = 100_000, n_scale: int = 200_000) -> CheckResult:
    """Slice membership, the sphere scaling law, and worker-count independence."""
    children = []

    table, ok = [], True
    for label, L, N in (("e1", fixtures.e1(), 41), ("geometric_pair", fixtures.geometric_pair(), 200)):
        S = truncated_slice(L, N)
        x = sample_slice(S, block_generator(seed, 0), n_member, check=False)
        sph, pl = membership_residuals(S, x)
        good = sph <= 1e-9 * N and pl <= 1e-9
        ok &= good
        table.append({"case": f"{label} N={N}", "sphere_residual": sph, "plane_residual": pl})
    children.append(CheckResult("slice_membership", ok,
                                "; ".join(f"{r['case']}: {r['sphere_residual']:.1e}, {r['plane_residual']:.1e}" for r in table),
                                table))

    # mean of x_1^2 over S^2(r) is r^2 times the mean over S^2(1)
    r = 2.5

    def moment(a, blk):
        x = sample_sphere(2, a, block_generator(seed, blk), n_scale)
        v = x[:, 0] ** 2
        return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))

    m1, s1 = moment(1.0, 1)
    mr, sr = moment(r, 2)
    z = abs(mr - r * r * m1) / math.hypot(sr, r * r * s1)
    z_exact = abs(m1 - 1.0 / 3.0) / s1
    children.append(CheckResult("sphere_scaling", z < 4 and z_exact < 4,
                                f"z(scaling)={z:.2f}, z(E x1^2 = 1/3)={z_exact:.2f} (limit 4)",
                                data={"z_scaling": z, "z_moment": z_exact}))

    L, phi = fixtures.e1(), fixtures.cos_x1()
    n = 5 * 65536 + 123
    runs = {w: estimate_slice_mean(L, 41, phi, n, seed, workers=w) for w in (1, 8)}
    g = {w: estimate_gaussian_mean(gaussian_limit(L), phi, n, seed, workers=w) for w in (1, 8)}
    same = (json.dumps(runs[1].to_dict()) == json.dumps(runs[8].to_dict())
            and json.dumps(g[1].to_dict()) == json.dumps(g[8].to_dict()))
    children.append(CheckResult("seed_determinism", same,
                                f"workers 1 vs 8: slice {runs[1].value!r} vs {runs[8].value!r}"))
    return group("sampler", children)


def check_main_limit(seed: int = DEFAULT_SEED, n_mc: int = 1_000_000,
                     N_list=(50, 100, 200, 400, 800, 1600, 3200), tol: float = 5e-3) -> CheckResult:
    children = []
    for label, L, target in (("e1", fixtures.e1(), fixtures.E1_COS_TARGET),
                             ("hyperplane", fixtures.hyperplane(), fixtures.HYPERPLANE_COS_TARGET)):
        rep = run_convergence(L, fixtures.cos_x1(), N_list, n_mc, seed, tol)
        last = rep.rows[-1]
        ok = rep.verdict and abs(last.gauss - target) < 1e-6
        children.append(CheckResult(f"main_limit_{label}", ok,
                                    f"gap {last.gap_quad:.2e} at N={last.N} to {target:.6f}; {rep.criterion}",
                                    table=rep.to_dict()["rows"]))
    return group("main_limit", children)


def lemma_checks() -> list[CheckResult]:
    """z^0, covariance and projection limits on the r = 0.9 geometric-tail fixtures."""
    N_list = (20, 40, 80, 160, 320)
    out = []
    for label, L in (("geometric_single", fixtures.geometric_single()), ("geometric_pair", fixtures.geometric_pair())):
        for c in (check_z0_limit(L, N_list), check_covariance_limit(L, N_list),
                  check_projection_limits(L, N_list=(25, 50, 100, 200, 400))):
            c.name = f"{c.name}[{label}]"
            out.append(c)
    # finite support: truncation is exact once N covers the support
    c = check_z0_limit(fixtures.e1(), (2, 3, 5, 10), tol=1e-14)
    c.name = "z0_limit[e1 finite support]"
    out.append(c)
    return out


def onset_checks() -> list[CheckResult]:
    out = [
        check_onsets(fixtures.hyperplane(), expect_transversal=True, name="onsets[w=e2]"),
        check_onsets(fixtures.axis(), expect_transversal=False, name="onsets[w=e1, expected NotTransversal]"),
        check_onsets(fixtures.geometric_single(), expect_transversal=True, name="onsets[geometric_single]"),
        check_onsets(fixtures.geometric_pair(), expect_transversal=True, name="onsets[geometric_pair]"),
    ]
    return out


SUITES = ("disintegration", "limits", "onsets")


def run_suite(name: str, seed: int = DEFAULT_SEED) -> CheckResult:
    """Run one named suite (or ``all``) and return its verdict tree."""
    if name == "all":
        return group("all", [run_suite(s, seed) for s in SUITES])
    if name == "disintegration":
        children = [check_disintegration(seed=seed), check_normalization(), check_density_limit(),
                    check_sampler(seed)]
    elif name == "limits":
        children = [check_main_limit(seed), check_constant_limit(), check_pushforward(seed=seed)] + lemma_checks()
    elif name == "onsets":
        children = onset_checks() + [check_two_routes(), check_transversality(seed=seed)]
    else:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    return group(name, children)
