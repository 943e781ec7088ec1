"""Exact finite-(m, x, t) distribution of the m-th particle's position.

P(x_m(t) <= x) is a contour integral, over a lambda circle enclosing the
poles {tau^{-k} : 0 <= k < m} and 0, of det(I - lambda K) divided by
prod_{k<m}(1 - lambda tau^k), where K is the small-contour difference
kernel from `kernels`.  For the first particle the distribution reduces
to a single determinant at lambda = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .kernels import (KernelContext, kernel_K0, kernel_K1, kernel_K1_minus_K2,
                      kernel_K2, kernel_J, phi, phi_inf, phi_n, resolvent_R)
from .ddlinalg import CDD
from .params import ASEPParams
from .quadrature import (KernelMatrix, SingularMatrixError, circle_grid,
                         current_precision, det_sweep, discretize,
                         fredholm_det, trace_power)

# double precision handles these; beyond them round-off in the determinant
# exceeds the target accuracy and extended precision is required
DOUBLE_M_CAP = 8
DOUBLE_T_CAP = 30.0


@dataclass(frozen=True)
class NumericsConfig:
    """Knobs for the contour quadratures and convergence control."""

    n_eta: int = 128
    n_eta_cap: int = 1024
    n_lambda: int = 64
    n_lambda_cap: int = 512
    r_eta: float | None = None       # default policy: min((1 + 1/tau)/2, 1.5)
    det_tol: float = 1e-10
    imag_tol: float = 1e-6
    precision_bits: int | None = None


@dataclass(frozen=True)
class DistributionPoint:
    """One evaluated CDF value with numerical-error metadata."""

    m: int
    x: int
    t: float
    prob: float            # clamped to [0, 1]
    raw: float             # unclamped real part of the quadrature
    err_est: float
    n_eta: int = 0
    n_lambda: int = 0
    bits: int = 53


def eta_radius(tau: float, cfg: NumericsConfig) -> float:
    """Radius of the eta circle, strictly inside (1, 1/tau).

    Default: a quarter of the way into the annulus, capped at 1.5.  The
    kernel's dynamic range is controlled by the tau*eta circle's distance
    to the essential singularity of phi at 1 (|phi| reaches
    e^{t/(1 - tau r)} there, while on the eta' circle Re 1/(1 - eta') is
    bounded by 1/(1 + r)), so the radius must keep tau*r well away from 1;
    staying above 1 with some margin keeps the trapezoid rule converging.
    """
    r = cfg.r_eta if cfg.r_eta is not None else min(1.0 + 0.25 * (1.0 / tau - 1.0), 1.5)
    if not (1.0 < r < 1.0 / tau):
        raise ValueError(f"eta radius must lie in (1, 1/tau); got {r} for tau={tau}")
    return r


def lambda_nodes(tau: float, m: int, n: int) -> np.ndarray:
    """Trapezoid nodes on the lambda circle of radius tau^{-(m-1)-1/2}.

    The radius is the geometric mean of the outermost enclosed pole
    tau^{-(m-1)} and the nearest excluded one tau^{-m}, maximizing the
    distance to both pole families.
    """
    radius = tau ** (-(m - 1) - 0.5)
    theta = 2.0 * np.pi * np.arange(n) / n
    return radius * np.exp(1j * theta)


def _pole_product(tau: float, m: int, lam) -> complex:
    out = 1.0 + 0.0j
    for k in range(m):
        out *= 1.0 - lam * tau ** k
    return out


def _build_matrix(ctx: KernelContext, n_eta: int, r: float) -> KernelMatrix:
    if current_precision() == 106:
        return _build_matrix_dd(ctx, n_eta, r)
    grid = circle_grid(0.0, r, +1, n_eta)
    return discretize(kernel_K1_minus_K2(ctx), grid)


def _cdd_vector(vals) -> "CDD":
    """Round a sequence of mpmath complex numbers to double-double."""
    import mpmath as mp
    hi = np.array([complex(v) for v in vals], dtype=np.complex128)
    lo = np.array([complex(mp.mpc(v) - mp.mpc(h)) for v, h in zip(vals, hi)],
                  dtype=np.complex128)
    return CDD.from_complex(hi, lo)


def _build_matrix_dd(ctx: KernelContext, n_eta: int, r: float) -> KernelMatrix:
    """106-bit Nystrom matrix of the difference kernel.

    The kernel is (phi(tau eta_j) - phi(eta'_k)) / (eta'_k - tau eta_j), so
    only O(n) extended-precision phi evaluations are needed; the n x n
    assembly runs in vectorized double-double arithmetic.
    """
    from .ddlinalg import cdd_div, cdd_mul, cdd_sub
    grid = circle_grid(0.0, r, +1, n_eta)   # object nodes/weights
    f = phi(ctx)
    tau = ctx.params.tau
    nodes = list(grid.nodes)
    a = _col_cdd(_cdd_vector([f(tau * z) for z in nodes]))   # phi(tau eta_j)
    b = _row_cdd(_cdd_vector([f(z) for z in nodes]))         # phi(eta'_k)
    te = _col_cdd(_cdd_vector([tau * z for z in nodes]))     # tau eta_j
    ep = _row_cdd(_cdd_vector(nodes))                        # eta'_k
    w = _row_cdd(_cdd_vector(list(grid.weights)))
    M = cdd_mul(cdd_div(cdd_sub(a, b), cdd_sub(ep, te)), w)
    return KernelMatrix(entries=M, grid=grid)


def _col_cdd(v: "CDD") -> "CDD":
    return CDD(v.rh[:, None], v.rl[:, None], v.ih[:, None], v.il[:, None])


def _row_cdd(v: "CDD") -> "CDD":
    return CDD(v.rh[None, :], v.rl[None, :], v.ih[None, :], v.il[None, :])


class _DetEvaluator:
    """det(I - lam*M) as a cheap function of lam.

    At 53 bits the eigenvalues of M are computed once and the determinant
    is the product prod_i (1 - lam e_i); a pivoted-LU determinant at one
    probe lam guards against eigenvalue ill-conditioning.  At extended
    precision each determinant is an LU factorization.
    """

    def __init__(self, M: KernelMatrix, probe: complex):
        self.M = M
        self.eigs = None
        if M.bits == 53:
            eigs = np.linalg.eigvals(M.entries)
            ref = complex(fredholm_det(M, probe))
            via_eigs = complex(np.prod(1.0 - probe * eigs))
            if abs(via_eigs - ref) <= 1e-9 * max(abs(ref), 1.0):
                self.eigs = eigs

    def sweep(self, lams: np.ndarray) -> list:
        if self.eigs is not None:
            return [complex(np.prod(1.0 - lam * self.eigs)) for lam in lams]
        return [complex(d) for d in det_sweep(self.M, lams)]


def _residue_sum(dets_of: _DetEvaluator, tau: float, m: int) -> complex:
    """Exact lambda integral by residues: det(I - lam*M) is entire in lam,
    so the contour integral equals the residue sum over the enclosed simple
    poles lam = tau^{-k}, k < m, plus the residue 1 at lam = 0:

        P = 1 - sum_k det(I - tau^{-k} M) / prod_{j != k}(1 - tau^{j-k}).

    m determinants instead of a trapezoid sweep; used at extended precision
    where each determinant is expensive.
    """
    lams = np.array([tau ** -k for k in range(m)], dtype=np.complex128)
    dets = dets_of.sweep(lams)
    total = 1.0 + 0.0j
    for k, det in enumerate(dets):
        ck = 1.0
        for j in range(m):
            if j != k:
                ck *= 1.0 - tau ** (j - k)
        total -= complex(det) / ck
    return total


def _lambda_average(dets_of: _DetEvaluator, tau: float, m: int,
                    n_lambda: int) -> complex:
    """(1/n) sum_j det(I - lam_j M) / prod_{k<m}(1 - lam_j tau^k).

    The trapezoid rule on lam = R e^{i theta} computes the contour integral
    oint f(lam) d lam / (2 pi i lam) exactly in this averaged form.
    """
    lams = lambda_nodes(tau, m, n_lambda)
    dets = dets_of.sweep(lams)
    total = 0.0 + 0.0j
    for lam, det in zip(lams, dets):
        total += det / _pole_product(tau, m, lam)
    return total / n_lambda


def prob_leq(params: ASEPParams, m: int, x: int, t: float,
             cfg: NumericsConfig | None = None) -> DistributionPoint:
    """P(x_m(t) <= x) for the m-th left-most particle, step initial data.

    t is the formula time parameter (physical time multiplied by q - p).
    For x >= m the value is exactly 1 and is returned without quadrature:
    under step initial data the m-th particle starts at site m and the
    left-drift ordering keeps x_m(t) <= m almost surely, matching the
    contour integral which evaluates to 1 identically there.
    """
    cfg = cfg or NumericsConfig()
    if params.p >= params.q:
        raise ValueError("requires left drift: p < q")
    if m < 1:
        raise ValueError("m must be >= 1")
    if t <= 0:
        raise ValueError("t must be positive")
    bits = cfg.precision_bits if cfg.precision_bits is not None else current_precision()
    if bits == 53 and (m > DOUBLE_M_CAP or t > DOUBLE_T_CAP):
        raise ValueError(
            f"m={m}, t={t} exceeds the double-precision envelope "
            f"(m <= {DOUBLE_M_CAP}, t <= {DOUBLE_T_CAP}); rerun with "
            "precision_bits >= 106")
    tau = params.tau
    if x >= m:
        return DistributionPoint(m=m, x=x, t=t, prob=1.0, raw=1.0, err_est=0.0,
                                 bits=bits)

    def compute() -> DistributionPoint:
        ctx = KernelContext(params=params, m=m, x=x, t=t)
        r = eta_radius(tau, cfg)
        probe = lambda_nodes(tau, m, 4)[1]

        residues = bits != 53  # exact in lambda; m determinants per eta grid

        def averaged(n_eta_val: int, n_lambda_val: int):
            ev = _DetEvaluator(_build_matrix(ctx, n_eta_val, r), probe)
            if residues:
                return ev, _residue_sum(ev, tau, m)
            return ev, _lambda_average(ev, tau, m, n_lambda_val)

        n_eta = cfg.n_eta
        ev, val = averaged(n_eta, cfg.n_lambda)
        eta_change = math.inf
        while n_eta < cfg.n_eta_cap and eta_change > cfg.det_tol:
            n_eta *= 2
            ev, val_next = averaged(n_eta, cfg.n_lambda)
            eta_change = abs(val_next - val)
            val = val_next
        # verify insensitivity to the lambda resolution
        n_lambda = m if residues else cfg.n_lambda
        lam_change = 0.0 if residues else math.inf
        while n_lambda < cfg.n_lambda_cap and lam_change > cfg.det_tol:
            n_lambda *= 2
            val_next = _lambda_average(ev, tau, m, n_lambda)
            lam_change = abs(val_next - val)
            val = val_next
        imag = abs(val.imag)
        if imag > cfg.imag_tol:
            raise ArithmeticError(
                f"contour integral has imaginary residue {imag:.3e} > {cfg.imag_tol}")
        raw = val.real
        err = imag + min(eta_change, 1.0) + min(lam_change, 1.0)
        prob = min(1.0, max(0.0, raw))
        return DistributionPoint(m=m, x=x, t=t, prob=prob, raw=raw, err_est=err,
                                 n_eta=n_eta, n_lambda=n_lambda, bits=bits)

    if bits != current_precision():
        from .quadrature import high_precision_mode
        with high_precision_mode(bits):
            return compute()
    return compute()


def prob_gt_first(params: ASEPParams, x: int, t: float,
                  cfg: NumericsConfig | None = None) -> DistributionPoint:
    """P(x_1(t) > x) = det(I - K) with the same difference kernel.

    Single determinant at lambda = 1; returned as a DistributionPoint whose
    prob field holds the complementary probability P(x_1 > x).
    """
    cfg = cfg or NumericsConfig()
    if params.p >= params.q:
        raise ValueError("requires left drift: p < q")
    if t <= 0:
        raise ValueError("t must be positive")
    tau = params.tau
    ctx = KernelContext(params=params, m=1, x=x, t=t)
    r = eta_radius(tau, cfg)
    n_eta = cfg.n_eta
    det = complex(fredholm_det(_build_matrix(ctx, n_eta, r), 1.0))
    change = math.inf
    while n_eta < cfg.n_eta_cap and change > cfg.det_tol:
        n_eta *= 2
        det_next = complex(fredholm_det(_build_matrix(ctx, n_eta, r), 1.0))
        change = abs(det_next - det)
        det = det_next
    imag = abs(det.imag)
    if imag > cfg.imag_tol:
        raise ArithmeticError(f"determinant has imaginary residue {imag:.3e}")
    raw = det.real
    return DistributionPoint(m=1, x=x, t=t, prob=min(1.0, max(0.0, raw)), raw=raw,
                             err_est=imag + min(change, 1.0), n_eta=n_eta,
                             n_lambda=0, bits=current_precision())


@dataclass
class IdentityCheck:
    name: str
    diff: float
    tol: float
    passed: bool
    detail: str = ""


def verify_identities(params: ASEPParams, t: float = 1.0, x: int = 0,
                      r_eta: float | None = None) -> list[IdentityCheck]:
    """Run the internal consistency checks tying the kernel family together.

    Passing r_eta overrides the eta-circle radius; a radius outside (1, 1/tau)
    is accepted here (unlike in prob_leq) precisely so callers can confirm
    that the checks fail when the contour crosses the poles.
    """
    if params.p >= params.q:
        raise ValueError("requires left drift: p < q")
    tau = params.tau
    ctx = KernelContext(params=params, m=2, x=x, t=t)
    cfg = NumericsConfig()
    r = r_eta if r_eta is not None else eta_radius(tau, cfg)
    # the annulus of analyticity thins as tau -> 1; spend more nodes there
    base_n = 1024 if tau > 0.6 else 256
    checks: list[IdentityCheck] = []

    def add(name, lhs, rhs, tol, detail=""):
        diff = abs(complex(lhs) - complex(rhs))
        checks.append(IdentityCheck(name=name, diff=diff, tol=tol,
                                    passed=diff <= tol, detail=detail))

    # 1. telescoping: phi_n(eta) * phi_inf(tau^n eta) = phi_inf(eta)
    f_n = phi_n(ctx, 6)
    f_inf = phi_inf(ctx)
    eta0 = 0.31 + 0.4j
    add("phi_telescoping", f_n(eta0) * f_inf(tau ** 6 * eta0), f_inf(eta0), 1e-11)

    # 2. phi_n(eta) = phi(eta)/phi(tau^n eta) consequence at negative x too
    ctx_neg = KernelContext(params=params, m=2, x=-3, t=t)
    f_n2 = phi_n(ctx_neg, 4)
    f_inf2 = phi_inf(ctx_neg)
    add("phi_telescoping_neg_x", f_n2(eta0) * f_inf2(tau ** 4 * eta0), f_inf2(eta0),
        1e-11)

    # 3. trace powers of K0 on a circle of radius r: tr K0^n = 1/(1 - tau^n)
    grid = circle_grid(0.0, r, +1, base_n)
    M0 = discretize(kernel_K0(params), grid)
    for n_pow in (1, 2, 3):
        add(f"trace_K0^{n_pow}", trace_power(M0, n_pow), 1.0 / (1.0 - tau ** n_pow),
            1e-10)

    # 4. det(I - lam K1) equals the infinite product prod_k (1 - lam tau^k)
    lam = 0.5
    M1 = discretize(kernel_K1(ctx), grid)
    prod = 1.0
    k = 0
    while tau ** k > 1e-18:
        prod *= 1.0 - lam * tau ** k
        k += 1
    add("det_K1_product", fredholm_det(M1, lam), prod, 1e-8)

    # 5. resolvent series matches the matrix resolvent of K1 pointwise
    lam_r = 0.2
    Rfun = resolvent_R(ctx, lam_r)
    n_grid = grid.n
    A = np.eye(n_grid, dtype=np.complex128) - lam_r * M1.entries
    Rmat = lam_r * np.linalg.solve(A, M1.entries)
    # compare R at node pairs (Nystrom interpolation is exact at nodes)
    idx = [(3, 17), (40, 90), (128, 200)]
    worst = 0.0
    for i, j in idx:
        worst = max(worst, abs(Rfun(grid.nodes[i], grid.nodes[j]) - Rmat[i, j]
                               / grid.weights[j]))
    checks.append(IdentityCheck(name="resolvent_series", diff=worst, tol=1e-8,
                                passed=worst <= 1e-8))

    # 6. log-det consistency: log det(I - lam K) = -sum_n lam^n tr(K^n)/n
    Mdiff = discretize(kernel_K1_minus_K2(ctx), grid)
    lam_s = 0.15
    series = 0.0 + 0.0j
    for n_pow in range(1, 41):
        series -= lam_s ** n_pow * trace_power(Mdiff, n_pow) / n_pow
    add("logdet_trace_series", np.log(complex(fredholm_det(Mdiff, lam_s))), series,
        1e-8)

    # 7. radius independence of det(I - lam (K1 - K2))
    if r_eta is None:
        r2 = 1.0 + 0.6 * (min(1.0 / tau, 2.5) - 1.0)
    else:
        r2 = r_eta  # caller-forced radius: compare against the default
    grid_b = circle_grid(0.0, r2 if r_eta is None else eta_radius(tau, cfg),
                         +1, base_n)
    Mb = discretize(kernel_K1_minus_K2(ctx), grid_b)
    add("radius_independence", fredholm_det(Mdiff, 0.7), fredholm_det(Mb, 0.7), 1e-8)

    # 8. first-particle duality: P(x_1 <= x) + det(I - K) = 1
    cdf = prob_leq(params, 1, x, t, cfg)
    comp = prob_gt_first(params, x, t, cfg)
    add("first_particle_complement", cdf.prob + comp.prob, 1.0, 1e-7)

    # 9. lambda-contour equivalence with the conjugated J kernel:
    #    det(I + lam K2 (I + R)) = det(I + mu J), lam = tau^{-m} mu
    # mu small enough that lam = tau^{-m} mu stays inside the unit disk,
    # where the resolvent series converges; f(mu, .) continues it beyond.
    mu = (0.1 + 0.02j) * tau ** ctx.m / 0.16
    lam_j = tau ** (-ctx.m) * mu
    Jfun, r_j = kernel_J(ctx, mu, n_zeta=base_n)
    grid_j = circle_grid(0.0, r_j, +1, base_n // 2)
    MJ = discretize(Jfun, grid_j)
    lhs = complex(fredholm_det(MJ, -mu))       # det(I + mu J)
    # K2 and R act on the larger circle, radius in (1, 1/tau)
    grid_in = circle_grid(0.0, r, +1, base_n // 2)
    M2 = discretize(kernel_K2(ctx), grid_in)
    Rfun_j = resolvent_R(ctx, lam_j)
    MR = discretize(Rfun_j, grid_in)
    n_j = grid_in.n
    # Nystrom matrix of the operator composition K2 (I + R)
    prod_mat = M2.entries @ (np.eye(n_j) + MR.entries)
    comb = KernelMatrix(entries=prod_mat, grid=grid_in)
    rhs = complex(fredholm_det(comb, -lam_j))  # det(I + lam K2 (I + R))
    add("j_kernel_equivalence", lhs, rhs, 1e-6)

    return checks
