"""Conditional outage probability for diversity-combined Nakagami links.

The desired signal is the maximal-ratio combination of a few serving links with
integer Nakagami parameters; the remaining base stations act as gamma-distributed
interferers attenuated by the effective spreading factor. Everything here is
conditioned on the network geometry and shadowing, so a problem is fully
described by the normalized link powers and their Nakagami parameters.

Two independent estimators are provided for checking the closed form: a direct
fading-draw Monte Carlo (``mc_outage_oracle``) and a semi-analytic average of
the combined-signal CDF over sampled interference (``appendix_integral_oracle``).
"""

from __future__ import annotations

import dataclasses
import itertools
import logging
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import BracketFailure, SingularEta

log = logging.getLogger(__name__)

# relative gap below which two serving scales are treated as one component
TIE_RTOL = 1e-9
SINGULAR_RTOL = 1e-12
# Weight magnitudes past which cancellation in the weighted sum needs more
# precision: extended (long double) arithmetic, then mpmath.
EXTENDED_LIMIT = 1e3
COND_LIMIT = 1e7

# scalar evaluations below this are refined to full relative accuracy
REFINE_BELOW = 1e-6

BETA_LO = 1e-9
BETA_HI = 1.0
BETA_CAP = 1e9


@dataclass(frozen=True)
class OutageProblem:
    """Inputs of the outage expression for one mobile.

    Attributes
    ----------
    serving_omega, serving_m : array_like
        Normalized powers and integer Nakagami parameters of the serving links.
    interferer_omega, interferer_m : array_like
        Normalized powers (before despreading) and positive real Nakagami
        parameters of the interfering links.
    beta : float
        Linear SINR threshold.
    snr : float
        Linear SNR; the outage CDF is evaluated at ``1 / snr``.
    spread : float
        Effective spreading factor ``G / h``.
    """

    serving_omega: np.ndarray
    serving_m: np.ndarray
    interferer_omega: np.ndarray = dataclasses.field(default_factory=lambda: np.empty(0))
    interferer_m: np.ndarray = dataclasses.field(default_factory=lambda: np.empty(0))
    beta: float = 1.0
    snr: float = 1.0
    spread: float = 24.0

    def __post_init__(self):
        so = np.atleast_1d(np.asarray(self.serving_omega, dtype=float))
        sm_raw = np.atleast_1d(np.asarray(self.serving_m, dtype=float))
        io = np.atleast_1d(np.asarray(self.interferer_omega, dtype=float))
        im = np.atleast_1d(np.asarray(self.interferer_m, dtype=float))
        if so.size == 0:
            raise ValueError("at least one serving link is required")
        if so.shape != sm_raw.shape or io.shape != im.shape:
            raise ValueError("omega and m lists must have equal length")
        if np.any(sm_raw < 1) or np.any(sm_raw != np.round(sm_raw)):
            raise ValueError("serving Nakagami parameters must be integers >= 1")
        if np.any(so <= 0) or np.any(io <= 0):
            raise ValueError("all normalized powers must be positive")
        if np.any(im <= 0):
            raise ValueError("interferer Nakagami parameters must be positive")
        if not (self.beta > 0 and self.snr > 0 and self.spread > 0):
            raise ValueError("beta, snr and spread must be positive")
        object.__setattr__(self, "serving_omega", so)
        object.__setattr__(self, "serving_m", sm_raw.astype(int))
        object.__setattr__(self, "interferer_omega", io)
        object.__setattr__(self, "interferer_m", im)

    @property
    def n_serving(self) -> int:
        return self.serving_omega.size

    @property
    def n_interferers(self) -> int:
        return self.interferer_omega.size

    def with_beta(self, beta: float) -> OutageProblem:
        return dataclasses.replace(self, beta=beta)

    def with_snr(self, snr: float) -> OutageProblem:
        return dataclasses.replace(self, snr=snr)


# ---------------------------------------------------------------------------
# Partial-fraction weights of a sum of gamma variates
# ---------------------------------------------------------------------------


def _check_distinct(eta):
    eta = np.asarray(eta, dtype=float)
    for a, b in itertools.combinations(range(eta.size), 2):
        if abs(eta[a] - eta[b]) <= SINGULAR_RTOL * max(abs(eta[a]), abs(eta[b])):
            raise SingularEta(f"eta[{a}] and eta[{b}] coincide ({eta[a]!r})")


def xi_coefficient(k: int, n: int, r, eta) -> float:
    """Weight of ``Gamma(n, eta[k])`` in the mixture form of a gamma-sum CDF.

    Evaluates the nested-sum expression: a chain ``r[k] = l_0 >= l_1 >= ... >=
    l_{L-1} = n`` visits every other component once, each step contributing a
    factorial ratio and a power of ``1/eta[k] - 1/eta[q]``. The chain collapses
    to a single step for two components and to ``[n == r[k]]`` for one.

    Parameters
    ----------
    k : int
        Zero-based component index.
    n : int
        Order, ``1 <= n <= r[k]``.
    r : sequence of int
        Shape (multiplicity) of every component.
    eta : sequence of float
        Pairwise distinct scale of every component.
    """
    r = [int(v) for v in r]
    eta = [float(v) for v in eta]
    L = len(r)
    rk = r[k]
    if not 1 <= n <= rk:
        return 0.0
    if L == 1:
        return 1.0 if n == rk else 0.0
    _check_distinct(eta)

    # skipping k reproduces the step-function index map with u(0) = 1
    others = [q for q in range(L) if q != k]
    # the difference of reciprocals, without cancellation for nearby scales
    diff = [(eta[q] - eta[k]) / (eta[k] * eta[q]) for q in others]
    log_diff = [math.log(abs(d)) for d in diff]
    neg_diff = [d < 0 for d in diff]

    log_pref = n * math.log(eta[k]) - sum(rh * math.log(eh) for rh, eh in zip(r, eta))
    sign_pref = -1.0 if (sum(r) - rk) % 2 else 1.0
    pref = eta[k] ** n
    for rh, eh in zip(r, eta):
        pref /= eh ** rh

    terms = []
    for mids in itertools.combinations_with_replacement(range(rk, n - 1, -1), L - 2):
        chain = (rk, *mids, n)
        log_t = log_pref
        sign = sign_pref
        ratio = 1
        powers = 1.0
        for s, q in enumerate(others):
            a, b = chain[s], chain[s + 1]
            rq = r[q]
            # (a + rq - b - 1)! / ((rq - 1)! (a - b)!) is a binomial coefficient
            c = math.comb(a + rq - b - 1, a - b)
            ratio *= c
            e = b - a - rq
            log_t += math.log(c) + e * log_diff[s]
            powers *= abs(diff[s]) ** e
            if neg_diff[s] and e % 2:
                sign = -sign
        if abs(log_t) < 600 and 0.0 < abs(pref) < math.inf:
            # direct products keep a few ulps; the log domain only guards the range
            terms.append(sign * abs(pref) * ratio * powers)
        else:
            terms.append(sign * math.exp(log_t))
    return math.fsum(terms)


def xi_table(r, eta, dps: int | None = None) -> list:
    """All weights; ``table[k][n - 1]`` is ``xi_coefficient(k, n, r, eta)``.

    With ``dps`` the same chain is summed in mpmath at that many digits and
    each row is a list of ``mpf``, for sets whose weights are too large for
    float64 sums to cancel cleanly.
    """
    if dps is not None:
        _check_distinct(eta)
        return _refined_table(eta, r, dps)
    return [
        np.array([xi_coefficient(k, n, r, eta) for n in range(1, int(rk) + 1)])
        for k, rk in enumerate(r)
    ]


def partial_fraction_xi(r, eta) -> list[np.ndarray]:
    """Same weights as :func:`xi_table`, by residue extraction.

    Expands ``prod_q (1 + eta_q s)^(-r_q)`` around each pole ``s = -1/eta_k`` in
    powers of ``w = 1 + eta_k s``; the coefficient of ``w^(-n)`` is the weight.
    Shares no code with the nested-sum evaluation and serves as its check.
    """
    r = [int(v) for v in r]
    eta = np.asarray(eta, dtype=float)
    _check_distinct(eta)
    out = []
    for k, rk in enumerate(r):
        series = np.zeros(rk)
        series[0] = 1.0
        for q, rq in enumerate(r):
            if q == k:
                continue
            a = (eta[k] - eta[q]) / eta[k]
            ratio = (eta[q] / eta[k]) / a
            j = np.arange(rk)
            # binomial series of (1 + ratio w)^(-rq)
            coef = np.array([math.comb(rq + jj - 1, jj) for jj in j], dtype=float)
            coef *= (-ratio) ** j * a ** (-rq)
            series = np.convolve(series, coef)[:rk]
        out.append(series[::-1].copy())
    return out


def merge_ties(eta, r, rtol: float = TIE_RTOL):
    """Collapse serving components whose scales agree to within ``rtol``.

    A sum of gammas with a common scale is a single gamma with the summed
    shape, so merging is the exact limit of the tie.
    """
    eta = np.asarray(eta, dtype=float)
    r = np.asarray(r, dtype=int)
    order = np.argsort(eta, kind="stable")
    out_eta, out_r = [], []
    for idx in order:
        if out_eta and abs(eta[idx] - out_eta[-1]) <= rtol * max(eta[idx], out_eta[-1]):
            log.warning("merging near-equal serving scales %r and %r", out_eta[-1], eta[idx])
            w0, w1 = out_r[-1], r[idx]
            out_eta[-1] = (w0 * out_eta[-1] + w1 * eta[idx]) / (w0 + w1)
            out_r[-1] += int(r[idx])
        else:
            out_eta.append(float(eta[idx]))
            out_r.append(int(r[idx]))
    return np.array(out_eta), np.array(out_r, dtype=int)


def _xi_coefficient_mp(k, n, r, eta):
    # same chain as xi_coefficient, summed in the active mpmath precision
    L = len(r)
    rk = r[k]
    if L == 1:
        return mpmath.mpf(1 if n == rk else 0)
    others = [q for q in range(L) if q != k]
    diff = [1 / eta[k] - 1 / eta[q] for q in others]
    pref = eta[k] ** n
    for rh, eh in zip(r, eta):
        pref /= eh ** rh
    if (sum(r) - rk) % 2:
        pref = -pref
    total = mpmath.mpf(0)
    for mids in itertools.combinations_with_replacement(range(rk, n - 1, -1), L - 2):
        chain = (rk, *mids, n)
        term = pref
        for s, q in enumerate(others):
            a, b = chain[s], chain[s + 1]
            rq = r[q]
            term *= mpmath.mpf(math.factorial(a + rq - b - 1)) / (math.factorial(rq - 1) * math.factorial(a - b))
            term *= diff[s] ** (b - a - rq)
        total += term
    return total


class _PreciseProblem:
    """Closed form in extended precision for ill-conditioned serving sets."""

    def __init__(self, eta, r, theta, shape, cond, extra_digits: int = 0):
        self.dps = 20 + int(math.ceil(math.log10(max(cond, 10.0)))) + extra_digits
        self.r = [int(v) for v in r]
        with mpmath.workdps(self.dps):
            self.eta = [mpmath.mpf(float(e)) for e in eta]
            self.xi = [[_xi_coefficient_mp(k, n, self.r, self.eta) for n in range(1, rk + 1)]
                       for k, rk in enumerate(self.r)]
        self.theta = [float(t) for t in theta]
        self.shape = [float(m) for m in shape]

    def cdf_s(self, y, beta):
        """Combined-signal CDF at each entry of ``y`` (threshold ``beta``)."""
        out = np.empty(len(y))
        with mpmath.workdps(self.dps):
            scale = [e / mpmath.mpf(float(beta)) for e in self.eta]
            for idx, yv in enumerate(y):
                yv = mpmath.mpf(float(yv))
                total = mpmath.mpf(0)
                for k, rk in enumerate(self.r):
                    x = yv / scale[k]
                    decay = mpmath.exp(-x)
                    partial = mpmath.mpf(0)
                    term = mpmath.mpf(1)
                    for n in range(1, rk + 1):
                        partial += term
                        term = term * x / n
                        total += self.xi[k][n - 1] * (1 - decay * partial)
                out[idx] = float(total)
        return out

    def cdf_z(self, z, beta):
        with mpmath.workdps(self.dps):
            one = mpmath.mpf(1)
            z = mpmath.mpf(float(z))
            beta = mpmath.mpf(float(beta))
            theta = [mpmath.mpf(t) for t in self.theta]
            shape = [int(m) if float(m).is_integer() else mpmath.mpf(m) for m in self.shape]
            total = mpmath.mpf(0)
            for k, rk in enumerate(self.r):
                lam = beta / self.eta[k]
                prod = one
                v = []
                for t, m in zip(theta, shape):
                    base = 1 + lam * t
                    prod *= base ** m
                    v.append(t / base)
                e0 = one / prod
                power_sums = [sum(m * vi ** s for m, vi in zip(shape, v)) for s in range(1, rk)]
                coeffs = [one]
                for t in range(1, rk):
                    coeffs.append(sum(power_sums[s - 1] * coeffs[t - s] for s in range(1, t + 1)) / t)
                e = [e0 * b for b in coeffs]
                decay = mpmath.exp(-lam * z)
                inner = mpmath.mpf(0)
                for n in range(1, rk + 1):
                    mu = n - 1
                    inner += lam ** mu * sum(z ** (mu - t) * e[t] / math.factorial(mu - t)
                                             for t in range(mu + 1))
                    total += self.xi[k][n - 1] * (1 - decay * inner)
            return float(total)


# ---------------------------------------------------------------------------
# Closed-form CDFs
# ---------------------------------------------------------------------------


def _serving_components(problem: OutageProblem):
    # scale per unit threshold; the actual scale is this divided by beta
    eta, r = merge_ties(problem.serving_omega / problem.serving_m, problem.serving_m)
    return eta, r, xi_table(r, eta)


def _rounding_bound(problem: OutageProblem) -> float:
    """Worst-case absolute rounding error of the float64 combined-signal CDF."""
    _, _, table = _serving_components(problem)
    cond = max(float(np.abs(row).max()) for row in table)
    if cond > COND_LIMIT:
        return 0.0
    return 8.0 * np.finfo(float).eps * sum(float(np.abs(row).sum()) for row in table)


def _cdf_s_array(y, problem: OutageProblem) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    eta0, r, table = _serving_components(problem)
    cond = max(float(np.abs(row).max()) for row in table)
    if cond > COND_LIMIT:
        precise = _PreciseProblem(eta0, r, (), (), cond)
        return precise.cdf_s(y.ravel(), problem.beta).reshape(y.shape)
    eta = eta0 / problem.beta
    total = np.zeros_like(y)
    for k, rk in enumerate(r):
        x = y / eta[k]
        ex = np.exp(-x)
        partial = np.zeros_like(y)
        term = np.ones_like(y)
        for n in range(1, rk + 1):
            # partial = sum_{mu < n} x^mu / mu!
            partial = partial + term
            term = term * x / n
            total = total + table[k][n - 1] * (1.0 - ex * partial)
    return total


def cdf_S(y, problem: OutageProblem):
    """CDF of the threshold-scaled combined signal ``sum g_k Omega_k / beta``."""
    if np.any(np.asarray(y) < 0):
        raise ValueError("y must be nonnegative")
    out = np.clip(_cdf_s_array(y, problem), 0.0, 1.0)
    return float(out) if np.ndim(out) == 0 else out


class _TermGroup:
    """Flattened (problem, k, n) terms of the closed form, evaluated in one dtype."""

    def __init__(self, dtype, n_problems):
        self.dtype = dtype
        self.n_problems = n_problems
        self._rows = []

    def add(self, p_idx, weights, rates, orders, theta, shape):
        self._rows.append((p_idx, weights, rates, orders, theta, shape))

    def freeze(self):
        rows = self._rows
        width = max((len(r[4]) for r in rows), default=0) or 1
        prob, xi, rate, order = [], [], [], []
        theta_rows, shape_rows = [], []
        for p_idx, weights, rates, orders, theta, shape in rows:
            for w, lam, n in zip(weights, rates, orders):
                prob.append(p_idx)
                xi.append(w)
                rate.append(lam)
                order.append(n)
                th = np.zeros(width, dtype=self.dtype)
                sh = np.zeros(width, dtype=self.dtype)
                th[:len(theta)] = theta
                sh[:len(shape)] = shape
                theta_rows.append(th)
                shape_rows.append(sh)
        self.prob = np.array(prob, dtype=int)
        self.xi = np.array(xi, dtype=self.dtype)
        self.rate = np.array(rate, dtype=self.dtype)
        self.order = np.array(order, dtype=int)
        self.theta = np.array(theta_rows, dtype=self.dtype).reshape(-1, width)
        self.shape = np.array(shape_rows, dtype=self.dtype).reshape(-1, width)
        self.max_order = int(self.order.max()) if self.order.size else 1
        del self._rows
        return self

    def cdf_z(self, z, beta):
        if not self.prob.size:
            return np.zeros(self.n_problems)
        lam = beta[self.prob].astype(self.dtype) * self.rate
        zz = z[self.prob].astype(self.dtype)
        c = lam[:, None] * self.theta
        sh = self.shape
        top = self.max_order - 1

        e0 = np.exp(-(sh * np.log1p(c)).sum(axis=1))
        coeffs = [np.ones_like(lam)]
        if top > 0:
            v = self.theta / (1 + c)
            vp = np.ones_like(v)
            power_sums = []
            for s in range(1, top + 1):
                vp = vp * v
                power_sums.append((sh * vp).sum(axis=1))
            for t in range(1, top + 1):
                acc = np.zeros_like(lam)
                for s in range(1, t + 1):
                    acc += power_sums[s - 1] * coeffs[t - s]
                coeffs.append(acc / t)
        e = [e0 * b for b in coeffs]

        inner = np.zeros_like(lam)
        lam_mu = np.ones_like(lam)
        for mu in range(top + 1):
            acc = np.zeros_like(lam)
            for t in range(mu + 1):
                acc += zz ** (mu - t) * e[t] / math.factorial(mu - t)
            inner += np.where(self.order > mu, lam_mu * acc, 0)
            lam_mu = lam_mu * lam
        terms = self.xi * (1 - np.exp(-lam * zz) * inner)
        if self.dtype is np.float64:
            return np.bincount(self.prob, weights=terms, minlength=self.n_problems)
        out = np.zeros(self.n_problems, dtype=self.dtype)
        np.add.at(out, self.prob, terms)
        return out.astype(float)


def _refined_table(eta, r, dps=40):
    # weights recomputed in mpmath, for problems whose double weights lose digits
    with mpmath.workdps(dps):
        eta_mp = [mpmath.mpf(float(e)) for e in eta]
        rr = [int(v) for v in r]
        return [[_xi_coefficient_mp(k, n, rr, eta_mp) for n in range(1, rk + 1)]
                for k, rk in enumerate(rr)]


class OutageBatch:
    """Vectorized closed-form evaluation over many outage problems.

    The partial-fraction weights do not depend on the threshold (they are
    invariant to a common rescaling of the scales), so they are computed once
    per problem; CDF evaluations for new ``beta`` or ``z`` values are then pure
    array arithmetic.

    The interferer factor is the coefficient of ``x^t`` in
    ``prod_i (1 + c_i)^(-m_i) (1 - v_i x)^(-m_i)``, which equals the sum over
    all compositions of ``t`` of the per-interferer gamma-moment products.
    The generating function is accumulated through its logarithm.

    Nearly equal serving scales give large weights of alternating sign whose
    sum cancels. Problems with weights above ``EXTENDED_LIMIT`` are evaluated in
    long double with weights refined in mpmath; above ``precise_above`` they
    are evaluated entirely in mpmath.
    """

    def __init__(self, problems, precise_above: float = COND_LIMIT):
        problems = list(problems)
        self.size = len(problems)
        self._plain = _TermGroup(np.float64, self.size)
        self._extended = _TermGroup(np.longdouble, self.size)
        self._precise = {}
        for p_idx, pr in enumerate(problems):
            eta, r, table = _serving_components(pr)
            theta = pr.interferer_omega / (pr.spread * pr.interferer_m)
            cond = max(float(np.abs(row).max()) for row in table)
            if cond > precise_above:
                self._precise[p_idx] = _PreciseProblem(eta, r, theta, pr.interferer_m, cond)
                continue
            group = self._plain
            if cond > EXTENDED_LIMIT:
                group = self._extended
                table = [[np.longdouble(mpmath.nstr(w, 25)) for w in row] for row in _refined_table(eta, r)]
            weights, rates, orders = [], [], []
            for k, rk in enumerate(r):
                for n in range(1, rk + 1):
                    w = table[k][n - 1]
                    if w == 0:
                        continue
                    weights.append(w)
                    rates.append(1 / group.dtype(eta[k]))
                    orders.append(n)
            group.add(p_idx, weights, rates, orders, theta, pr.interferer_m)
        self._plain.freeze()
        self._extended.freeze()
        self.beta = np.array([p.beta for p in problems], dtype=float)
        self.inv_snr = np.array([1.0 / p.snr for p in problems], dtype=float)

    def cdf_z(self, z=None, beta=None) -> np.ndarray:
        """Outage CDF at ``z`` (default ``1/snr``) for every problem."""
        z = self.inv_snr if z is None else np.broadcast_to(np.asarray(z, float), (self.size,))
        beta = self.beta if beta is None else np.broadcast_to(np.asarray(beta, float), (self.size,))
        out = self._plain.cdf_z(z, beta) + self._extended.cdf_z(z, beta)
        for p_idx, precise in self._precise.items():
            out[p_idx] = precise.cdf_z(z[p_idx], beta[p_idx])
        return np.clip(out, 0.0, 1.0)

    def invert(self, eps_hat: float, tol: float = 1e-6, max_iter: int = 200) -> np.ndarray:
        """Threshold ``beta`` per problem with outage within ``tol`` of ``eps_hat``.

        Bisection on ``log beta``; the upper end starts at 1 and doubles until the
        target is straddled. Problems whose outage already exceeds ``eps_hat`` at
        the smallest threshold get NaN.
        """
        if not 0.0 < eps_hat < 1.0:
            raise ValueError("eps_hat must lie in (0, 1)")
        lo = np.full(self.size, BETA_LO)
        hi = np.full(self.size, BETA_HI)
        result = np.full(self.size, np.nan)

        eps_lo = self.cdf_z(beta=lo)
        feasible = eps_lo <= eps_hat + tol
        hit = feasible & (np.abs(eps_lo - eps_hat) <= tol)
        result[hit] = lo[hit]
        active = feasible & ~hit

        eps_hi = self.cdf_z(beta=hi)
        grow = active & (eps_hi < eps_hat - tol)
        while grow.any():
            lo[grow] = hi[grow]
            hi[grow] = np.minimum(2.0 * hi[grow], BETA_CAP)
            eps_hi = np.where(grow, self.cdf_z(beta=hi), eps_hi)
            grow = active & (eps_hi < eps_hat - tol) & (hi < BETA_CAP)
        stuck = active & (eps_hi < eps_hat - tol)
        active &= ~stuck
        hit = active & (np.abs(eps_hi - eps_hat) <= tol)
        result[hit] = hi[hit]
        active &= ~hit

        for _ in range(max_iter):
            if not active.any():
                break
            mid = np.sqrt(lo * hi)
            em = self.cdf_z(beta=mid)
            hit = active & (np.abs(em - eps_hat) <= tol)
            result[hit] = mid[hit]
            active &= ~hit
            below = active & (em < eps_hat)
            lo[below] = mid[below]
            hi[active & ~below] = mid[active & ~below]
        if active.any():
            log.warning("bisection did not reach tolerance for %d problems", int(active.sum()))
            result[active] = np.sqrt(lo * hi)[active]
        return result


def _refined_cdf_z(z, problem: OutageProblem, rough: float) -> float:
    # small probabilities are differences of nearly equal terms; carry enough
    # digits to resolve the result itself, not just its absolute size
    eta, r, table = _serving_components(problem)
    cond = max(float(np.abs(row).max()) for row in table)
    theta = problem.interferer_omega / (problem.spread * problem.interferer_m)
    extra = int(math.ceil(-math.log10(rough))) + 2 if rough > 0 else 40
    while True:
        value = _PreciseProblem(eta, r, theta, problem.interferer_m, cond, extra).cdf_z(z, problem.beta)
        if value > 0 and -math.log10(value) <= extra or extra > 600:
            return max(value, 0.0)
        extra = int(math.ceil(-math.log10(value))) + 2 if value > 0 else 2 * extra


def cdf_Z(z, problem: OutageProblem) -> float:
    """Closed-form CDF of ``S - sum Y_i`` at ``z`` (outage when ``z = 1/snr``).

    Values below ``REFINE_BELOW`` are recomputed in extended precision so that
    they keep their relative accuracy.
    """
    if z < 0:
        raise ValueError("z must be nonnegative")
    value = float(OutageBatch([problem]).cdf_z(z=z)[0])
    if value < REFINE_BELOW:
        value = _refined_cdf_z(z, problem, value)
    return value


def outage_probability(problem: OutageProblem) -> float:
    return cdf_Z(1.0 / problem.snr, problem)


def invert_threshold(problem: OutageProblem, eps_hat: float, tol: float = 1e-6) -> float:
    """SINR threshold at which the outage probability equals ``eps_hat``.

    ``problem.beta`` is ignored. Raises :class:`BracketFailure` if even the
    smallest admissible threshold violates the constraint.
    """
    beta = OutageBatch([problem]).invert(eps_hat, tol=tol)[0]
    if np.isnan(beta):
        raise BracketFailure(f"outage exceeds {eps_hat} at beta={BETA_LO}")
    return float(beta)


def shannon_rate(beta):
    """Rate in bits per channel use supported at SINR threshold ``beta``."""
    b = np.asarray(beta, dtype=float)
    if np.any(b < 0):
        raise ValueError("beta must be nonnegative")
    out = np.log2(1.0 + b)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------


def mc_outage_oracle(problem: OutageProblem, trials: int, rng: np.random.Generator,
                     chunk: int = 200_000):
    """Estimate the outage probability by drawing the fading gains.

    Returns
    -------
    estimate, halfwidth : float
        Empirical outage frequency and its 3-sigma binomial half-width.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sm = problem.serving_m.astype(float)
    im = problem.interferer_m
    hits = 0
    done = 0
    while done < trials:
        nb = min(chunk, trials - done)
        g = rng.standard_gamma(sm, size=(nb, sm.size)) / sm
        signal = g @ problem.serving_omega
        noise = np.full(nb, 1.0 / problem.snr)
        if im.size:
            gi = rng.standard_gamma(im, size=(nb, im.size)) / im
            noise += (gi @ problem.interferer_omega) / problem.spread
        hits += int(np.count_nonzero(signal / noise <= problem.beta))
        done += nb
    p = hits / trials
    return p, 3.0 * math.sqrt(p * (1.0 - p) / trials)


def appendix_integral_oracle(problem: OutageProblem, samples: int, rng: np.random.Generator,
                             z: float | None = None, chunk: int = 200_000):
    """Average the combined-signal CDF over sampled interference.

    Draws the despread interferer powers from their gamma laws and averages
    ``F_S(z + sum y_i)``, a Monte Carlo evaluation of the outer integral that the
    closed form resolves analytically.

    Returns
    -------
    estimate, stderr : float
        ``stderr`` also carries the float64 rounding bound of the inner CDF,
        which dominates for very small probabilities.
    """
    z = 1.0 / problem.snr if z is None else z
    if problem.n_interferers == 0:
        return float(_cdf_s_array(np.array(z), problem)), _rounding_bound(problem)
    im = problem.interferer_m
    theta = problem.interferer_omega / (problem.spread * im)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        nb = min(chunk, samples - done)
        y = rng.standard_gamma(im, size=(nb, im.size)) @ theta
        vals = _cdf_s_array(z + y, problem)
        total += vals.sum()
        total_sq += (vals ** 2).sum()
        done += nb
    mean = total / samples
    var = max(total_sq / samples - mean ** 2, 0.0) * samples / max(samples - 1, 1)
    return mean, math.hypot(math.sqrt(var / samples), _rounding_bound(problem))
