"""Integral-operator kernels for the current-distribution formulas.

Everything here is a scalar-to-scalar (or scalar-pair) callable factory:
the quadrature module turns kernels into Nystrom matrices.  All factories
accept either complex floats or mpmath complex numbers, so the same code
runs at 53-bit and extended precision.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .params import ASEPParams
from .special import airy_kernel, airy_Ai, ai_vec, euler_product  # noqa: F401

__all__ = [
    "KernelContext", "epsilon", "kernel_K", "phi", "phi_prime", "phi_n",
    "phi_inf", "kernel_K0", "kernel_K1", "kernel_K2", "kernel_K1_minus_K2",
    "resolvent_R", "f_mu", "kernel_J", "kernel_J_tasep", "mehler_kernel",
    "airy_kernel", "airy_Ai", "euler_product",
]


def _exp(z):
    if isinstance(z, (mp.mpf, mp.mpc)):
        return mp.exp(z)
    if isinstance(z, np.ndarray):
        return np.exp(z)
    return cmath.exp(z)


@dataclass(frozen=True)
class KernelContext:
    """Parameter bundle (p, m, x, t) shared by the exact-formula kernels."""

    params: ASEPParams
    m: int
    x: int
    t: float

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("particle index m must be >= 1")
        if self.t <= 0:
            raise ValueError("time parameter t must be positive")
        if self.x != int(self.x):
            raise ValueError("position x must be an integer")


def epsilon(params: ASEPParams, xi):
    """Jump-rate symbol p/xi + q*xi - 1 appearing in the exponential weight."""
    return params.p / xi + params.q * xi - 1.0


def kernel_K(ctx: KernelContext):
    """Raw large-contour kernel q xi'^x e^{eps(xi') t} / (p + q xi xi' - xi).

    Valid on a circle of radius large enough that |p + q xi xi' - xi| stays
    away from zero; numerically usable only for modest x and t.
    """
    p, q = ctx.params.p, ctx.params.q
    x, t = ctx.x, ctx.t

    def K(xi, xip):
        denom = p + q * xi * xip - xi
        if abs(denom) < 1e-12:
            raise ZeroDivisionError("kernel_K evaluated at a pole of the denominator")
        return q * xip ** x * _exp(epsilon(ctx.params, xip) * t) / denom

    return K


def phi(ctx: KernelContext):
    """phi(eta) = ((1-tau*eta)/(1-eta))^x exp{[1/(1-eta) - 1/(1-tau*eta)] t}."""
    tau, x, t = ctx.params.tau, ctx.x, ctx.t

    def f(eta):
        one_e = 1.0 - eta
        one_te = 1.0 - tau * eta
        if isinstance(eta, (complex, float, mp.mpf, mp.mpc)):
            if abs(one_e) < 1e-12 or abs(one_te) < 1e-12:
                raise ZeroDivisionError("phi evaluated at eta = 1 or eta = 1/tau")
        return (one_te / one_e) ** x * _exp((1.0 / one_e - 1.0 / one_te) * t)

    return f


def phi_prime(ctx: KernelContext):
    """Derivative of phi via logarithmic differentiation."""
    tau, x, t = ctx.params.tau, ctx.x, ctx.t
    f = phi(ctx)

    def fp(eta):
        one_e = 1.0 - eta
        one_te = 1.0 - tau * eta
        dlog = x * (1.0 / one_e - tau / one_te) + t * (1.0 / one_e ** 2 - tau / one_te ** 2)
        return f(eta) * dlog

    return fp


def phi_n(ctx: KernelContext, n: int):
    """phi_n(eta) = phi(eta) phi(tau eta) ... phi(tau^{n-1} eta).

    Evaluated via the telescoping closed form phi(...) telescopes to
    phi_inf(eta)/phi_inf(tau^n eta); both sides are exercised in tests.
    """
    if n < 0:
        raise ValueError("phi_n requires n >= 0")
    tau = ctx.params.tau
    f = phi(ctx)

    def fn(eta):
        out = 1.0
        z = eta
        for _ in range(n):
            out = out * f(z)
            z = tau * z
        return out

    return fn


def phi_inf(ctx: KernelContext):
    """Limit product phi_inf(eta) = (1-eta)^{-x} exp{eta t / (1-eta)}."""
    x, t = ctx.x, ctx.t

    def f(eta):
        one_e = 1.0 - eta
        if isinstance(eta, (complex, float, mp.mpf, mp.mpc)) and abs(one_e) < 1e-12:
            raise ZeroDivisionError("phi_inf evaluated at eta = 1")
        return one_e ** (-x) * _exp(eta * t / one_e)

    return f


def kernel_K0(params: ASEPParams):
    """K0(eta, eta') = 1/(eta' - tau eta); trace powers are 1/(1-tau^n)."""
    tau = params.tau

    def K0(eta, etap):
        return 1.0 / (etap - tau * eta)

    K0.vectorized = True
    return K0


def kernel_K1(ctx: KernelContext):
    """K1(eta, eta') = phi(tau eta)/(eta' - tau eta)."""
    tau = ctx.params.tau
    f = phi(ctx)

    def K1(eta, etap):
        return f(tau * eta) / (etap - tau * eta)

    K1.vectorized = True
    return K1


def kernel_K2(ctx: KernelContext):
    """K2(eta, eta') = phi(eta')/(eta' - tau eta)."""
    tau = ctx.params.tau
    f = phi(ctx)

    def K2(eta, etap):
        return f(etap) / (etap - tau * eta)

    K2.vectorized = True
    return K2


def kernel_K1_minus_K2(ctx: KernelContext):
    """Small-contour kernel (phi(tau eta) - phi(eta'))/(eta' - tau eta).

    The difference quotient has a removable singularity at eta' = tau eta;
    within relative separation 1e-8 the limit -phi'(tau eta) is used.
    """
    tau = ctx.params.tau
    f = phi(ctx)
    fp = phi_prime(ctx)

    def K(eta, etap):
        d = etap - tau * eta
        if isinstance(etap, np.ndarray):
            # on the contours used here eta' is never within the removable
            # neighborhood of tau*eta (|eta'| = r > tau r = |tau eta|)
            return (f(tau * eta) - f(etap)) / d
        if abs(d) < 1e-8 * max(abs(etap), 1e-30):
            return -fp(tau * eta)
        return (f(tau * eta) - f(etap)) / d

    K.vectorized = True
    return K


def resolvent_R(ctx: KernelContext, lam, tol: float = 1e-13, n_cap: int = 2000):
    """Resolvent series R(eta,eta') = sum_{n>=1} lam^n phi_n(tau eta)/(eta' - tau^n eta).

    Converges for |eta|, |eta'| inside the unit disk once |lam tau phi| decays;
    truncation stops when terms fall below tol relative to the partial sum.
    """
    tau = ctx.params.tau
    f = phi(ctx)

    def R(eta, etap):
        total = 0.0 + 0.0j
        coeff = 1.0  # running product lam^n phi_n(tau eta)
        z = tau * eta
        for n in range(1, n_cap + 1):
            coeff = coeff * lam * f(z)
            term = coeff / (etap - tau ** n * eta)
            total = total + term
            if n > 3 and abs(term) < tol * max(abs(total), 1e-300):
                return total
            z = tau * z
        raise RuntimeError("resolvent series did not converge within the term cap")

    return R


def f_mu(tau: float, mu, z, tol: float = 1e-14, k_cap: int = 20000):
    """Doubly infinite series f(mu,z) = sum_{k=-inf}^{inf} tau^k z^k / (1 - tau^k mu).

    Converges for 1 < |z| < 1/tau.  Poles sit at mu = tau^{-k}, k in Z;
    evaluation within 1e-8 of one raises.  Both one-sided tails are
    geometric, so the truncation error is bounded by the last term times
    ratio/(1-ratio) and kept below tol.
    """
    if not (0.0 < tau < 1.0):
        raise ValueError("f_mu requires 0 < tau < 1")
    az = abs(z)
    if not (1.0 < az < 1.0 / tau):
        raise ValueError(f"f_mu requires 1 < |z| < 1/tau, got |z| = {az}")
    _check_f_poles(tau, mu)
    total = 1.0 / (1.0 - mu)  # k = 0
    # k >= 1: terms (tau z)^k / (1 - tau^k mu), ratio -> tau |z| < 1
    w = 1.0
    ratio = tau * az
    for k in range(1, k_cap):
        w = w * tau * z
        term = w / (1.0 - tau ** k * mu)
        total = total + term
        if abs(term) * ratio / (1.0 - ratio) < tol * max(abs(total), 1e-300):
            break
    else:
        raise RuntimeError("f_mu positive-side series did not converge")
    # k <= -1: terms z^{-j} / (tau^j - mu) after factoring tau^{-j}, ratio -> 1/|z|
    w = 1.0
    ratio = 1.0 / az
    for j in range(1, k_cap):
        w = w / z
        term = w / (tau ** j - mu)
        total = total + term
        if abs(term) * ratio / (1.0 - ratio) < tol * max(abs(total), 1e-300):
            break
    else:
        raise RuntimeError("f_mu negative-side series did not converge")
    return total


def _check_f_poles(tau: float, mu) -> None:
    amu = abs(mu)
    k = 0
    while tau ** k > amu / 2.0 and k < 500:
        if abs(mu - tau ** (-k)) < 1e-8 * tau ** (-k):
            raise ZeroDivisionError(f"f_mu evaluated at a pole mu = tau^-{k}")
        k += 1
    k = 1
    while tau ** (-k) < 2.0 * amu and k < 500:
        if abs(mu - tau ** k) < 1e-8 * tau ** k:
            raise ZeroDivisionError(f"f_mu evaluated at a pole mu = tau^{k}")
        k += 1


def f_mu_vec(tau: float, mu, z: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Vectorized f_mu over an array of z in the annulus (1, 1/tau)."""
    z = np.asarray(z, dtype=np.complex128)
    az = np.abs(z)
    if not (az.min() > 1.0 and az.max() < 1.0 / tau):
        raise ValueError("f_mu_vec requires 1 < |z| < 1/tau elementwise")
    _check_f_poles(tau, mu)
    total = np.full_like(z, 1.0 / (1.0 - mu))
    r_pos = tau * az.max()
    k_pos = int(math.ceil(math.log(tol * (1.0 - r_pos)) / math.log(r_pos))) + 2
    w = np.ones_like(z)
    for k in range(1, k_pos + 1):
        w = w * (tau * z)
        total += w / (1.0 - tau ** k * mu)
    r_neg = 1.0 / az.min()
    k_neg = int(math.ceil(math.log(tol * (1.0 - r_neg)) / math.log(r_neg))) + 2
    w = np.ones_like(z)
    for j in range(1, k_neg + 1):
        w = w / z
        total += w / (tau ** j - mu)
    return total


def _zeta_circle(n: int, radius: float):
    theta = 2.0 * np.pi * np.arange(n) / n
    nodes = radius * np.exp(1j * theta)
    weights = nodes / n  # absorbs dzeta/(2 pi i)
    return nodes, weights


def kernel_J(ctx: KernelContext, mu, r_eta: float | None = None,
             n_zeta: int = 256, tol: float = 1e-14):
    """Conjugated kernel J(eta,eta') on a circle of radius r in (tau, 1).

    J(eta,eta') = oint phi_inf(zeta)/phi_inf(eta') * zeta^m / eta'^{m+1}
                  * f(mu, zeta/eta') / (zeta - eta) dzeta/(2 pi i),
    with the zeta circle of radius in (1, r/tau) so that it encloses the
    eta circle and keeps zeta/eta' inside the f-convergence annulus.
    Returns (kernel_callable, r_eta) since the radius fixes the grid.
    """
    tau = ctx.params.tau
    if r_eta is None:
        r_eta = max(0.9, (1.0 + tau) / 2.0)
    if not (tau < r_eta < 1.0):
        raise ValueError("kernel_J requires the eta radius in (tau, 1)")
    r_zeta = 0.5 * (1.0 + r_eta / tau)
    if not (1.0 < r_zeta < r_eta / tau):
        raise ValueError("zeta radius must lie in (1, r_eta/tau)")
    f = phi_inf(ctx)
    m = ctx.m
    zetas, wz = _zeta_circle(n_zeta, r_zeta)
    phi_z = f(zetas)
    pref = wz * phi_z * zetas ** m
    cache: dict[bytes, np.ndarray] = {}

    def _column_matrix(etap_arr: np.ndarray) -> np.ndarray:
        # G[i, k] = pref_i f(mu, zeta_i/eta'_k) / (phi_inf(eta'_k) eta'_k^{m+1})
        key = etap_arr.tobytes()
        G = cache.get(key)
        if G is None:
            F = np.empty((len(zetas), len(etap_arr)), dtype=np.complex128)
            for k, ep in enumerate(etap_arr):
                F[:, k] = f_mu_vec(tau, mu, zetas / ep, tol=tol)
            G = pref[:, None] * F / (f(etap_arr) * etap_arr ** (m + 1))[None, :]
            cache[key] = G
        return G

    def J(eta, etap):
        if isinstance(etap, np.ndarray):
            return (1.0 / (zetas - eta)) @ _column_matrix(etap)
        fz = f_mu_vec(tau, mu, zetas / etap, tol=tol)
        return np.sum(pref * fz / (zetas - eta)) / (f(etap) * etap ** (m + 1))

    J.vectorized = True

    J.r_eta = r_eta
    J.r_zeta = r_zeta
    return J, r_eta


def kernel_J_tasep(ctx: KernelContext, r_eta: float = 0.9,
                   r_zeta: float = 1.1, n_zeta: int = 256):
    """tau -> 0 limit of mu*J: mu f(mu, zeta/eta') is replaced by
    zeta/(eta' - zeta).  Used as a cross-check of the small-tau behaviour."""
    f = phi_inf(ctx)
    m = ctx.m
    zetas, wz = _zeta_circle(n_zeta, r_zeta)
    phi_z = np.array([f(z) for z in zetas])
    pref = wz * phi_z * zetas ** m

    def J0(eta, etap):
        fz = zetas / (etap - zetas)
        return np.sum(pref * fz / (zetas - eta)) / (f(etap) * etap ** (m + 1))

    J0.r_eta = r_eta
    return J0


def mehler_kernel(params: ASEPParams):
    """Crossover kernel (q/sqrt(2 pi)) e^{-(p^2+q^2)(z^2+z'^2)/4 + p q z z'}.

    Real, symmetric; its integral over the diagonal of R is q/gamma.
    The callable is numpy-vectorized.
    """
    p, q = params.p, params.q
    a = (p * p + q * q) / 4.0
    c = q / math.sqrt(2.0 * math.pi)

    def K(z, zp):
        return c * np.exp(-a * (z * z + zp * zp) + p * q * z * zp)

    K.vectorized = True
    return K


def airy_kernel_matrix(x: np.ndarray, n_z: int = 160) -> np.ndarray:
    """Airy kernel evaluated on a grid via the factorization
    K[i,j] = sum_k w_k Ai(z_k + x_i) Ai(z_k + x_j)."""
    x = np.asarray(x, dtype=np.float64)
    lo = float(x.min())
    trunc = max(5.0, 13.0 - lo)
    zs, wz = np.polynomial.legendre.leggauss(n_z)
    z = 0.5 * trunc * (zs + 1.0)
    w = 0.5 * trunc * wz
    B = ai_vec(z[:, None] + x[None, :])  # (n_z, n_x)
    return (B * w[:, None]).T @ B
