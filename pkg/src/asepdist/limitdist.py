"""Limit laws for the particle position: fixed-m tail, crossover, GUE edge.

Three regimes:
  * fixed m, t -> inf: an explicit product/tail formula;
  * m fixed or slowly growing with weak asymmetry: a crossover Fredholm
    determinant built from a Gaussian (Mehler-type) kernel on (-s, inf);
  * m ~ sigma t: Tracy-Widom GUE, det(I - K_Airy) on (s, inf),
    with the macroscopic centering/scaling constants from `params`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.stats import norm

from .kernels import airy_kernel_matrix, euler_product, mehler_kernel
from .params import ASEPParams, ScalingConstants, scaling_constants
from .quadrature import interval_grid

__all__ = ["CDFTable", "theorem1_tail", "crossover_cdf", "f2_cdf",
           "gaussian_limit_cdf", "theorem3_map", "f2_table", "crossover_table"]


@dataclass(frozen=True)
class CDFTable:
    """Tabulated CDF values with per-point error estimates."""

    s: np.ndarray
    value: np.ndarray
    err_est: np.ndarray
    label: str = ""


def theorem1_tail(params: ASEPParams, m: int, x: int, t: float) -> float:
    """Leading large-t tail of P(x_m(t) > x) for fixed m and x < m:

        prod_{k>=1}(1 - tau^k) * t^{2m-x-2} e^{-t} / ((m-1)! (m-x-1)!).

    For x >= m the tail is exactly zero (the m-th particle never passes the
    packed block on its right) and 0.0 is returned.
    """
    if params.p >= params.q:
        raise ValueError("requires left drift: p < q")
    if m < 1:
        raise ValueError("m must be >= 1")
    if t <= 0:
        raise ValueError("t must be positive")
    if x >= m:
        return 0.0
    c = euler_product(params.tau)
    log_t = ((2 * m - x - 2) * math.log(t) - t
             - math.lgamma(m) - math.lgamma(m - x))
    return c * math.exp(log_t)


def _sym_det_one_minus(lam: complex, eigs: np.ndarray) -> complex:
    """det(I - lam*M) from the eigenvalues of a real symmetric M."""
    return complex(np.prod(1.0 - lam * eigs))


def _lambda_circle(radius: float, n: int) -> np.ndarray:
    theta = 2.0 * np.pi * np.arange(n) / n
    return radius * np.exp(1j * theta)


def crossover_cdf(params: ASEPParams, m: int, s: float,
                  n_nodes: int = 80, n_lambda: int = 64) -> tuple[float, float]:
    """Weak-asymmetry crossover CDF for the m-th particle position:

        F(s) = oint det(I - lambda Khat chi_{(-s, inf)})
               / prod_{k<m}(1 - lambda tau^k)  d lambda/(2 pi i lambda)

    with Khat the Gaussian crossover kernel.  The half-line is truncated
    at Z where the kernel's Gaussian decay e^{-gamma^2 z^2/2} is below
    1e-15; returns (value, err_est).
    """
    if params.p >= params.q:
        raise ValueError("requires left drift: p < q")
    if m < 1:
        raise ValueError("m must be >= 1")
    gamma = params.gamma
    tau = params.tau
    z_scale = 1.0 / gamma
    Z = max(8.0, 8.0 * z_scale, -s + 4.0 * z_scale)
    K = mehler_kernel(params)

    def value_at(n: int) -> complex:
        grid = interval_grid(-s, Z, n)
        x = grid.nodes.real
        sw = np.sqrt(grid.weights.real)
        Msym = sw[:, None] * K(x[:, None], x[None, :]) * sw[None, :]
        eigs = sla.eigvalsh(Msym)
        lams = _lambda_circle(tau ** (-(m - 1) - 0.5), n_lambda)
        total = 0.0 + 0.0j
        for lam in lams:
            denom = 1.0 + 0.0j
            for k in range(m):
                denom *= 1.0 - lam * tau ** k
            total += _sym_det_one_minus(lam, eigs) / denom
        return total / n_lambda

    v1 = value_at(n_nodes)
    v2 = value_at(2 * n_nodes)
    err = abs(v2 - v1) + abs(v2.imag)
    return float(v2.real), float(err)


def gaussian_limit_cdf(s: float) -> float:
    """p -> 0 limit of the crossover law for m = 1: the standard normal CDF."""
    return float(norm.cdf(s))


def f2_cdf(s: float, n_nodes: int = 80, length: float = 16.0,
           n_z: int = 160) -> tuple[float, float]:
    """Tracy-Widom GUE distribution F_2(s) = det(I - K_Airy) on (s, inf).

    The half-line is truncated at s + length (Airy decay is
    super-exponential); Gauss-Legendre Nystrom with the symmetrized kernel.
    Returns (value, err_est) with the error estimated by node doubling.
    """
    if s < -10.0:
        raise ValueError("f2_cdf supports s >= -10")

    def value_at(n: int) -> float:
        grid = interval_grid(s, s + length, n)
        x = grid.nodes.real
        sw = np.sqrt(grid.weights.real)
        Ksym = sw[:, None] * airy_kernel_matrix(x, n_z=n_z) * sw[None, :]
        eigs = sla.eigvalsh(Ksym)
        return float(np.prod(1.0 - eigs))

    v1 = value_at(n_nodes)
    v2 = value_at(2 * n_nodes)
    # truncation tail: the omitted operator mass beyond s + length
    from .special import ai_vec
    a_cut = float(ai_vec(np.array([s + length]))[0])
    err = abs(v2 - v1) + a_cut * a_cut
    return v2, err


def theorem3_map(params: ASEPParams, sigma: float, t: float,
                 s: float) -> tuple[int, int, float, ScalingConstants]:
    """Discretize the KPZ-scaling point (sigma, t, s) to integers (m, x).

    m = round(sigma t), x = round(c1 t + c2 s t^{1/3}); returns the realized
    scaled coordinate s' = (x - c1 t)/(c2 t^{1/3}) actually probed after
    rounding, along with the scaling constants.
    """
    sc = scaling_constants(sigma)
    m = int(round(sigma * t))
    if m < 1:
        raise ValueError("sigma*t rounds below 1; no particle to track")
    x_real = sc.c1 * t + sc.c2 * s * t ** (1.0 / 3.0)
    x = int(round(x_real))
    s_prime = (x - sc.c1 * t) / (sc.c2 * t ** (1.0 / 3.0))
    return m, x, s_prime, sc


def f2_table(s_values: np.ndarray, n_nodes: int = 80) -> CDFTable:
    vals, errs = [], []
    for s in s_values:
        v, e = f2_cdf(float(s), n_nodes=n_nodes)
        vals.append(v)
        errs.append(e)
    return CDFTable(s=np.asarray(s_values, float), value=np.array(vals),
                    err_est=np.array(errs), label="tracy_widom_gue")


def crossover_table(params: ASEPParams, m: int, s_values: np.ndarray,
                    n_nodes: int = 80) -> CDFTable:
    vals, errs = [], []
    for s in s_values:
        v, e = crossover_cdf(params, m, float(s), n_nodes=n_nodes)
        vals.append(v)
        errs.append(e)
    return CDFTable(s=np.asarray(s_values, float), value=np.array(vals),
                    err_est=np.array(errs), label=f"crossover_m{m}")
