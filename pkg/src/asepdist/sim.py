"""Stochastic cross-checks: Monte Carlo sampling and a small-system
continuous-time Markov chain (CTMC) oracle.

Both simulate the particle system directly: particles on the integer
lattice, each carrying an exponential clock of rate 1, jumping right with
probability p and left with probability q = 1 - p, jumps into occupied
sites suppressed.  Step initial data places particle k at site k, k >= 1.

Truncation: only the first n_sites particles are simulated.  Two boundary
conventions bracket the infinite system by monotone coupling:
  * "wall": the last simulated particle never jumps right (maximal
    blocking; every position is stochastically below the true system, so
    CDF values are upper bounds);
  * "open": the last particle jumps right freely (minimal blocking;
    CDF values are lower bounds).
The Monte Carlo path uses the wall convention with a generous n_sites plus
an automatic sensitivity check; the CTMC oracle runs both conventions and
reports the bracket midpoint with the gap folded into its error bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange
from scipy.stats import poisson

from .params import ASEPParams
from .params import scaling_constants

DEFAULT_JUMP_CAP = 60
_INV_2_53 = 1.0 / 9007199254740992.0  # 2^-53


def default_n_sites(m: int, t_phys: float) -> int:
    """Particle-count truncation for Monte Carlo: information travels about
    one site per unit time, padded by a large-deviation margin."""
    return m + int(math.ceil(4.0 * t_phys + 10.0 * math.sqrt(t_phys))) + 20


@njit(cache=True, inline="always")
def _splitmix64(state):
    state = (state + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = state
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = z ^ (z >> np.uint64(31))
    return state, z


@njit(cache=True, inline="always")
def _uniform(state):
    state, z = _splitmix64(state)
    return state, (z >> np.uint64(11)) * _INV_2_53 + 0.5 * _INV_2_53


@njit(cache=True, parallel=True)
def _run_trials(n_trials, n_sites, m_idx, p, t_phys, seed):
    out = np.empty(n_trials, dtype=np.int64)
    for trial in prange(n_trials):
        # decorrelated per-trial substream
        state = np.uint64(seed) ^ (np.uint64(trial + 1) * np.uint64(0xD1B54A32D192ED03))
        pos = np.empty(n_sites, dtype=np.int64)
        for i in range(n_sites):
            pos[i] = i + 1
        t_now = 0.0
        inv_n = 1.0 / n_sites
        while True:
            state, u = _uniform(state)
            t_now -= math.log(u) * inv_n
            if t_now > t_phys:
                break
            state, u = _uniform(state)
            i = int(u * n_sites)
            if i >= n_sites:
                i = n_sites - 1
            state, u = _uniform(state)
            if u < p:
                if i < n_sites - 1 and pos[i + 1] > pos[i] + 1:
                    pos[i] += 1
            else:
                if i == 0 or pos[i - 1] < pos[i] - 1:
                    pos[i] -= 1
        out[trial] = pos[m_idx]
    return out


def simulate_positions(params: ASEPParams, m: int, t_phys: float, n_trials: int,
                       seed: int, n_sites: int | None = None) -> np.ndarray:
    """Sample x_m(t_phys) in physical time, n_trials independent copies."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if t_phys < 0:
        raise ValueError("t_phys must be nonnegative")
    if n_trials < 1:
        raise ValueError("n_trials must be positive")
    if n_sites is None:
        n_sites = default_n_sites(m, t_phys)
    if n_sites < m:
        raise ValueError("n_sites must be at least m")
    return _run_trials(n_trials, n_sites, m - 1, params.p, t_phys, seed)


@dataclass(frozen=True)
class SimEstimate:
    """Monte Carlo probability estimate with binomial and truncation errors."""

    prob: float
    stderr: float
    n_trials: int
    n_sites: int
    truncation_shift: float   # estimate change when n_sites doubles (subsample)
    seed: int


def estimate_prob(params: ASEPParams, m: int, x: int, t: float, n_trials: int,
                  seed: int = 0, n_sites: int | None = None,
                  check_truncation: bool = True) -> SimEstimate:
    """Monte Carlo estimate of P(x_m(t) <= x); t is the formula time
    parameter, converted internally to physical time t/(q-p)."""
    if params.p >= params.q:
        raise ValueError("requires left drift: p < q")
    t_phys = t / params.gamma
    if n_sites is None:
        n_sites = default_n_sites(m, t_phys)
    samples = simulate_positions(params, m, t_phys, n_trials, seed, n_sites)
    hits = int(np.count_nonzero(samples <= x))
    prob = hits / n_trials
    stderr = math.sqrt(max(prob * (1.0 - prob), 1.0 / n_trials) / n_trials)
    shift = 0.0
    if check_truncation:
        n_sub = max(1000, n_trials // 10)
        sub = simulate_positions(params, m, t_phys, n_sub, seed + 777,
                                 2 * n_sites)
        ref = simulate_positions(params, m, t_phys, n_sub, seed + 777, n_sites)
        shift = float(np.mean(sub <= x) - np.mean(ref <= x))
    return SimEstimate(prob=prob, stderr=stderr, n_trials=n_trials,
                       n_sites=n_sites, truncation_shift=shift, seed=seed)


# ---------------------------------------------------------------------------
# CTMC oracle: exact finite-system distribution by uniformization
# ---------------------------------------------------------------------------


def _step_distribution(v: dict, n: int, p: float, q: float, lam: float,
                       wall: bool, prune_tol: float) -> tuple[dict, float]:
    """One uniformized transition v -> vP with P = I + Q/lam; returns the
    new distribution and the probability mass pruned from it."""
    new: dict = {}
    pr = p / lam
    ql = q / lam
    for s, w in v.items():
        stay = w
        for i in range(n):
            pos = s[i]
            can_right = (s[i + 1] > pos + 1) if i < n - 1 else (not wall)
            if can_right and pr:
                ns = s[:i] + (pos + 1,) + s[i + 1:]
                new[ns] = new.get(ns, 0.0) + w * pr
                stay -= w * pr
            can_left = (s[i - 1] < pos - 1) if i > 0 else True
            if can_left and ql:
                ns = s[:i] + (pos - 1,) + s[i + 1:]
                new[ns] = new.get(ns, 0.0) + w * ql
                stay -= w * ql
        if stay:
            new[s] = new.get(s, 0.0) + stay
    pruned = 0.0
    if prune_tol > 0.0:
        drop = [s for s, w in new.items() if w < prune_tol]
        for s in drop:
            pruned += new.pop(s)
    return new, pruned


def _evolve_marginals(p: float, q: float, n: int, m_indices: tuple[int, ...],
                      t_phys: float, wall: bool, prune_tol: float,
                      jump_cap: int, pois_tol: float) -> tuple[list, float, int]:
    """Distributions of x_m at time t_phys for the n-particle system, one
    marginal per requested particle index, from a single evolution.

    Uniformization: P(X_t = .) = sum_k e^{-lam t}(lam t)^k/k! v_k with
    v_{k+1} = v_k (I + Q/lam), lam = n.  Returns (pmfs of x_m, error bound =
    Poisson tail beyond the jump cap + pruned mass, states touched)."""
    lam = float(n)
    lt = lam * t_phys
    k_needed = int(poisson.isf(pois_tol, lt)) + 2 if lt > 0 else 0
    k_max = min(k_needed, jump_cap)
    pois = poisson.pmf(np.arange(k_max + 1), lt)
    tail = float(max(0.0, 1.0 - pois.sum()))
    v = {tuple(range(1, n + 1)): 1.0}
    marginals: list[dict] = [{} for _ in m_indices]
    pruned_total = 0.0
    max_states = 0

    def accumulate(weight: float, dist: dict):
        if weight <= 0.0:
            return
        for s, w in dist.items():
            ww = weight * w
            for marginal, m_idx in zip(marginals, m_indices):
                xm = s[m_idx]
                marginal[xm] = marginal.get(xm, 0.0) + ww

    accumulate(pois[0], v)
    for k in range(1, k_max + 1):
        v, pruned = _step_distribution(v, n, p, q, lam, wall, prune_tol)
        pruned_total += pruned
        max_states = max(max_states, len(v))
        accumulate(pois[k], v)
    return marginals, tail + pruned_total, max_states


@dataclass(frozen=True)
class OracleResult:
    """Bracketed finite-system distribution of x_m at a physical time."""

    m: int
    t_phys: float
    n_sites: int
    pmf_lower: dict = field(repr=False)   # open boundary (less blocking)
    pmf_upper: dict = field(repr=False)   # wall boundary (more blocking)
    truncation_bound: float = 0.0         # Poisson tail + pruned mass
    bracket_gap: float = 0.0              # max CDF gap between the variants
    max_states: int = 0

    def cdf(self, x: int) -> float:
        """Midpoint of the wall/open CDF bracket at x."""
        return 0.5 * (self._cdf(self.pmf_upper, x) + self._cdf(self.pmf_lower, x))

    def cdf_bounds(self, x: int) -> tuple[float, float]:
        return self._cdf(self.pmf_lower, x), self._cdf(self.pmf_upper, x)

    @staticmethod
    def _cdf(pmf: dict, x: int) -> float:
        return sum(w for site, w in pmf.items() if site <= x)

    @property
    def error_bound(self) -> float:
        return self.truncation_bound + 0.5 * self.bracket_gap


def ctmc_oracle_multi(params: ASEPParams, ms: tuple[int, ...], t_phys: float,
                      n_sites: int | None = None, prune_tol: float = 1e-16,
                      jump_cap: int = DEFAULT_JUMP_CAP,
                      pois_tol: float = 1e-13) -> dict[int, OracleResult]:
    """Exact (to stated error bound) distributions of several x_m(t_phys)
    for a truncated system, independent of the contour machinery.

    All marginals come from one wall / one open evolution, so asking for
    several m at once costs the same as asking for the largest.  Intended
    for small systems and short times; the state space grows quickly with
    n_sites * t_phys."""
    if not ms or min(ms) < 1:
        raise ValueError("every m must be >= 1")
    if t_phys < 0:
        raise ValueError("t_phys must be nonnegative")
    if n_sites is None:
        n_sites = max(ms) + 10
    if n_sites < max(ms):
        raise ValueError("n_sites must be at least max(ms)")
    p, q = params.p, params.q
    idx = tuple(m - 1 for m in ms)
    lo_pmfs, bound_lo, states_lo = _evolve_marginals(
        p, q, n_sites, idx, t_phys, wall=False, prune_tol=prune_tol,
        jump_cap=jump_cap, pois_tol=pois_tol)
    hi_pmfs, bound_hi, states_hi = _evolve_marginals(
        p, q, n_sites, idx, t_phys, wall=True, prune_tol=prune_tol,
        jump_cap=jump_cap, pois_tol=pois_tol)
    out = {}
    for m, lo_pmf, hi_pmf in zip(ms, lo_pmfs, hi_pmfs):
        xs = sorted(set(lo_pmf) | set(hi_pmf))
        gap = 0.0
        c_lo = c_hi = 0.0
        for x in xs:
            c_lo += lo_pmf.get(x, 0.0)
            c_hi += hi_pmf.get(x, 0.0)
            gap = max(gap, abs(c_hi - c_lo))
        out[m] = OracleResult(m=m, t_phys=t_phys, n_sites=n_sites,
                              pmf_lower=lo_pmf, pmf_upper=hi_pmf,
                              truncation_bound=max(bound_lo, bound_hi),
                              bracket_gap=gap,
                              max_states=max(states_lo, states_hi))
    return out


def ctmc_oracle(params: ASEPParams, m: int, t_phys: float,
                n_sites: int | None = None, prune_tol: float = 1e-16,
                jump_cap: int = DEFAULT_JUMP_CAP,
                pois_tol: float = 1e-13) -> OracleResult:
    """Single-m convenience wrapper around ctmc_oracle_multi."""
    return ctmc_oracle_multi(params, (m,), t_phys, n_sites=n_sites,
                             prune_tol=prune_tol, jump_cap=jump_cap,
                             pois_tol=pois_tol)[m]


def empirical_scaled_cdf(params: ASEPParams, sigma: float, t: float,
                         s_values: np.ndarray, n_trials: int,
                         seed: int = 0) -> tuple[np.ndarray, np.ndarray, dict]:
    """Monte Carlo CDF of the KPZ-rescaled position at formula time t:
    samples of (x_m(t) - c1 t) / (c2 t^{1/3}) with m = round(sigma t).

    Returns (values, stderr, meta)."""
    if params.p >= params.q:
        raise ValueError("requires left drift: p < q")
    sc = scaling_constants(sigma)
    m = int(round(sigma * t))
    if m < 1:
        raise ValueError("sigma * t rounds below 1")
    t_phys = t / params.gamma
    samples = simulate_positions(params, m, t_phys, n_trials, seed)
    scaled = (samples - sc.c1 * t) / (sc.c2 * t ** (1.0 / 3.0))
    s_values = np.asarray(s_values, dtype=np.float64)
    vals = np.array([np.mean(scaled <= s) for s in s_values])
    errs = np.sqrt(np.maximum(vals * (1.0 - vals), 1.0 / n_trials) / n_trials)
    meta = {"m": m, "t_phys": t_phys, "n_trials": n_trials,
            "n_sites": default_n_sites(m, t_phys), "seed": seed}
    return vals, errs, meta
