"""Continuous-time Markov chain representations and their Monte Carlo estimators.

Samples are produced in fixed blocks of ``BLOCK_SIZE`` paths; block ``k``
draws from its own Philox stream keyed by ``(seed, k)``. Results depend
only on (seed, n), never on how many worker threads run the blocks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate

from .gaussian import MOMENT_CAP, local_time_moment_oracle
from .model import CouplingModel, validate_model
from .scalars import imag_part, real_part

BLOCK_SIZE = 1 << 16
KILLED = "killed"
UNKILLED = "unkilled"


class HypothesisError(ValueError):
    """Model or parameters violate a representation's hypotheses."""


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("GSAW_THREADS", "1")))
    except ValueError:
        return 1


def block_rng(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed & (2**64 - 1), spawn_key=(block,))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class CtmcParams:
    model: CouplingModel
    variant: str
    rates: np.ndarray  # d_x (killed) or dbar_x (unkilled)
    jump_probs: np.ndarray  # M x M
    kill_probs: np.ndarray  # zeros for the unkilled chain
    cdf: np.ndarray  # M x (M+1) cumulative rows; last column is the cemetery

    @property
    def size(self):
        return self.model.size

    @classmethod
    def killed(cls, model: CouplingModel) -> "CtmcParams":
        report = validate_model(model)
        if not report.markov_valid:
            raise HypothesisError("; ".join(report.markov_reasons))
        if not report.diagonally_dominant:
            raise HypothesisError(f"killed chain needs diagonal dominance (rho = {report.rho:.6g})")
        d = np.array([float(real_part(x)) for x in model.diag])
        J = _real_matrix(model)
        pi = J / d[:, None]
        kill = 1.0 - pi.sum(axis=1)
        return cls(model, KILLED, d, pi, kill, _cdf(pi, kill))

    @classmethod
    def unkilled(cls, model: CouplingModel) -> "CtmcParams":
        report = validate_model(model)
        if not report.markov_valid:
            raise HypothesisError("; ".join(report.markov_reasons))
        J = _real_matrix(model)
        dbar = J.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            pi = np.where(dbar[:, None] > 0, J / np.where(dbar > 0, dbar, 1.0)[:, None], 0.0)
        kill = np.zeros(model.size)
        return cls(model, UNKILLED, dbar, pi, kill, _cdf(pi, kill))

    @property
    def d(self):
        return np.array([float(real_part(x)) for x in self.model.diag])

    @property
    def dbar(self):
        return _real_matrix(self.model).sum(axis=1)


def _real_matrix(model):
    return np.array([[float(real_part(x)) for x in row] for row in model.offdiag])


def _cdf(pi, kill):
    cdf = np.cumsum(np.concatenate([pi, kill[:, None]], axis=1), axis=1)
    cdf[:, -1] = 1.0
    return cdf


# --- single paths ----------------------------------------------------------------

@dataclass(frozen=True)
class PathSample:
    skeleton: tuple
    holds: tuple
    zeta: float | None
    last_site: int
    local_times: np.ndarray
    horizon: float | None = None


def _exp(rng, rate):
    # inverse CDF; rate 0 means the chain never leaves
    if rate == 0:
        return math.inf
    return -math.log1p(-rng.random()) / rate


def simulate_path(params: CtmcParams, start: int, horizon=None, rng=None) -> PathSample:
    """One realization, sites 1-based. Killed chains take no horizon; unkilled ones need one."""
    if rng is None:
        rng = np.random.default_rng()
    if params.variant == KILLED and horizon is not None:
        raise ValueError("the killed chain runs until it dies; no horizon")
    if params.variant == UNKILLED and horizon is None:
        raise ValueError("the unkilled chain needs a horizon")
    m = params.size
    x = start - 1
    t = 0.0
    skeleton, holds = [start], []
    L = np.zeros(m)
    while True:
        h = _exp(rng, params.rates[x])
        if horizon is not None and t + h >= horizon:
            h = horizon - t
            holds.append(h)
            L[x] += h
            return PathSample(tuple(skeleton), tuple(holds), None, x + 1, L, horizon)
        holds.append(h)
        L[x] += h
        t += h
        nxt = int(np.searchsorted(params.cdf[x], rng.random(), side="right"))
        if nxt >= m:
            return PathSample(tuple(skeleton), tuple(holds), t, x + 1, L)
        x = nxt
        skeleton.append(x + 1)


# --- vectorized blocks -----------------------------------------------------------

def simulate_killed_block(params: CtmcParams, start: int, n: int, rng):
    """Local times (n x M), last site X(zeta-) (1-based) and step counts for n killed paths."""
    m = params.size
    L = np.zeros((n, m))
    state = np.full(n, start - 1)
    last = np.zeros(n, dtype=int)
    steps = np.zeros(n, dtype=int)
    idx = np.arange(n)
    while idx.size:
        s = state[idx]
        hold = -np.log1p(-rng.random(idx.size)) / params.rates[s]
        L[idx, s] += hold
        steps[idx] += 1
        u = rng.random(idx.size)
        nxt = (u[:, None] >= params.cdf[s]).sum(axis=1)
        dead = nxt >= m
        last[idx[dead]] = s[dead] + 1
        idx = idx[~dead]
        state[idx] = nxt[~dead]
    return L, last, steps


def simulate_unkilled_block(params: CtmcParams, start: int, horizons: np.ndarray, rng):
    """Truncated local times L_{.,T} and X(T) (1-based) for paths run to their horizons."""
    n = horizons.size
    m = params.size
    L = np.zeros((n, m))
    state = np.full(n, start - 1)
    t = np.zeros(n)
    idx = np.arange(n)
    while idx.size:
        s = state[idx]
        rate = params.rates[s]
        with np.errstate(divide="ignore"):
            hold = np.where(rate > 0, -np.log1p(-rng.random(idx.size)) / np.where(rate > 0, rate, 1.0), np.inf)
        remaining = horizons[idx] - t[idx]
        done = hold >= remaining
        L[idx, s] += np.where(done, remaining, hold)
        t[idx] += hold
        u = rng.random(idx.size)
        live = idx[~done]
        nxt = (u[~done, None] >= params.cdf[s[~done]]).sum(axis=1)
        state[live] = nxt
        idx = live
    return L, state + 1


# --- estimates -------------------------------------------------------------------

@dataclass(frozen=True)
class Estimate:
    mean: complex | float
    stderr: float
    n_samples: int
    seed: int

    def zscore(self, target) -> float:
        diff = abs(complex(self.mean) - complex(target))
        if self.stderr == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / self.stderr

    def within(self, target, sigmas=3.0) -> bool:
        return self.zscore(target) <= sigmas

    def as_dict(self):
        mean = self.mean
        if isinstance(mean, complex) and mean.imag == 0:
            mean = mean.real
        return {
            "mean": mean if not isinstance(mean, complex) else [mean.real, mean.imag],
            "stderr": self.stderr,
            "n_samples": self.n_samples,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class _Moments:
    count: int
    mean: complex
    m2: float

    @classmethod
    def of(cls, values):
        if values.size == 0:
            return cls(0, 0.0, 0.0)
        mean = values.mean()
        return cls(values.size, mean, float(np.sum(np.abs(values - mean) ** 2)))

    def merge(self, other):
        if self.count == 0:
            return other
        if other.count == 0:
            return self
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + abs(delta) ** 2 * self.count * other.count / n
        return _Moments(n, mean, m2)


def _merge_tree(parts):
    # pairwise merge in block order
    while len(parts) > 1:
        parts = [parts[i].merge(parts[i + 1]) if i + 1 < len(parts) else parts[i] for i in range(0, len(parts), 2)]
    return parts[0]


def run_blocks(n: int, seed: int, block_fn):
    """Evaluate ``block_fn(rng, size)`` over the fixed block partition; return per-block outputs in order."""
    if n < 1:
        raise ValueError("sample count must be >= 1")
    sizes = [min(BLOCK_SIZE, n - k * BLOCK_SIZE) for k in range((n + BLOCK_SIZE - 1) // BLOCK_SIZE)]
    jobs = [(k, s) for k, s in enumerate(sizes)]
    threads = thread_count()

    def work(job):
        k, s = job
        return block_fn(block_rng(seed, k), s)

    if threads == 1 or len(jobs) == 1:
        return [work(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, jobs))


def estimate_from_blocks(n, seed, block_fn) -> Estimate:
    parts = [_Moments.of(np.asarray(v)) for v in run_blocks(n, seed, block_fn)]
    mom = _merge_tree(parts)
    mean = mom.mean
    if isinstance(mean, complex) or np.iscomplexobj(mean):
        mean = complex(mean)
        if mean.imag == 0:
            mean = mean.real
    else:
        mean = float(mean)
    stderr = math.sqrt(mom.m2 / (mom.count - 1) / mom.count) if mom.count > 1 else math.inf
    return Estimate(mean, stderr, mom.count, seed)


def _potential(params, v):
    if v is None:
        return np.zeros(params.size)
    v = np.array([complex(x) for x in v])
    if len(v) != params.size:
        raise ValueError("potential needs one entry per site")
    return v.real if not np.any(v.imag) else v


def _check_sites(params, *sites):
    for s in sites:
        if not 1 <= s <= params.size:
            raise ValueError(f"site {s} outside 1..{params.size}")


def check_potential_hypothesis(params: CtmcParams, v):
    """0 <= dbar_x < d_x + Re v_x for every x (dbar_x = 0 allowed)."""
    v = _potential(params, v)
    d, dbar = params.d, params.dbar
    bad = [x + 1 for x in range(params.size) if not dbar[x] < d[x] + v[x].real]
    if bad:
        raise HypothesisError(f"need dbar_x < d_x + Re v_x at sites {bad}")
    return v


def estimate_dynkin(params: CtmcParams, a: int, b: int, v=None, n: int = 100_000, seed: int = 0, F=None) -> Estimate:
    """MC for E_a(exp(-v.L) F(L) 1{X(zeta-)=b}) / (d_b pi_{b,cemetery}) on the killed chain."""
    if params.variant != KILLED:
        raise ValueError("needs the killed chain")
    _check_sites(params, a, b)
    v = check_potential_hypothesis(params, v)
    norm = params.rates[b - 1] * params.kill_probs[b - 1]

    def block(rng, size):
        L, last, _ = simulate_killed_block(params, a, size, rng)
        w = np.exp(-(L @ v)) * (last == b) / norm
        if F is not None:
            w = w * F(L)
        return w

    return estimate_from_blocks(n, seed, block)


def fk_mu(params: CtmcParams, v) -> float:
    v = _potential(params, v)
    return float(np.min(v.real + params.d - params.dbar))


def estimate_fk(params: CtmcParams, a: int, b: int, v=None, n: int = 100_000, seed: int = 0,
                t_rate: float | None = None, F=None) -> Estimate:
    """MC for the horizon integral of Ebar_a(exp(-sum (v+d-dbar) L_T) F(L_T) 1{X(T)=b}) dT.

    The horizon is drawn T ~ Exp(t_rate) and reweighted by exp(t_rate T) / t_rate.
    """
    if params.variant != UNKILLED:
        raise ValueError("needs the unkilled chain")
    _check_sites(params, a, b)
    v = check_potential_hypothesis(params, v)
    mu = fk_mu(params, v)
    if t_rate is None:
        t_rate = mu / 2
    if not 0 < t_rate < mu:
        raise HypothesisError(f"need 0 < t_rate < mu = {mu:.6g} for finite variance")
    kill_rate = v + params.d - params.dbar

    def block(rng, size):
        T = -np.log1p(-rng.random(size)) / t_rate
        L, xT = simulate_unkilled_block(params, a, T, rng)
        w = np.exp(t_rate * T - L @ kill_rate) / t_rate * (xT == b)
        if F is not None:
            w = w * F(L)
        return w

    return estimate_from_blocks(n, seed, block)


def wsaw_lambda_floor(params: CtmcParams) -> float:
    return -float(np.min(params.d - params.dbar))


def estimate_wsaw(params: CtmcParams, a: int, b: int, g: float, lam: float, n: int = 100_000, seed: int = 0) -> Estimate:
    """MC for E_a(exp(-g sum L^2 - lam zeta) 1{X(zeta-)=b}) / (d_b pi_{b,cemetery})."""
    if params.variant != KILLED:
        raise ValueError("needs the killed chain")
    _check_sites(params, a, b)
    g, lam = float(g), float(lam)
    if g < 0:
        raise HypothesisError("g must be >= 0")
    floor = wsaw_lambda_floor(params)
    if not lam > floor:
        raise HypothesisError(f"need lambda > {floor:.6g}")
    norm = params.rates[b - 1] * params.kill_probs[b - 1]

    def block(rng, size):
        L, last, _ = simulate_killed_block(params, a, size, rng)
        zeta = L.sum(axis=1)
        return np.exp(-g * np.sum(L * L, axis=1) - lam * zeta) * (last == b) / norm

    return estimate_from_blocks(n, seed, block)


# --- Gamma-weighted walk sum -----------------------------------------------------

QUAD_TOL = 1e-10


@lru_cache(maxsize=4096)
def gamma_weight_integral(n: int, g: float, beta: float) -> float:
    """int_0^inf t^{n-1}/(n-1)! exp(-g t^2 - beta t) dt for n >= 1; 1 for n = 0."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return 1.0
    g, beta = float(g), float(beta)
    if g < 0 or (g == 0 and beta <= 0):
        raise ValueError("divergent: need g > 0, or g = 0 with beta > 0")
    if g == 0:
        return beta ** (-n)
    lg = math.lgamma(n)

    def logf(t):
        if t <= 0:
            return 0.0 if n == 1 else -math.inf
        return (n - 1) * math.log(t) - lg - g * t * t - beta * t

    # mode of the log-concave integrand
    peak = max(0.0, (-beta + math.sqrt(beta * beta + 8 * g * (n - 1))) / (4 * g))
    top = logf(peak) if peak > 0 else logf(0.0)
    width = 1.0 / math.sqrt(2 * g)
    upper = peak + width
    while logf(upper) > top - 60:
        upper += width
    pieces = [0.0, peak, upper] if peak > 0 else [0.0, upper]
    total = 0.0
    for lo, hi in zip(pieces[:-1], pieces[1:]):
        val, _ = integrate.quad(lambda t: math.exp(logf(t)), lo, hi, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
        total += val
    # log-concave tail beyond the cutoff: f(U) / |(log f)'(U)|
    slope = (n - 1) / upper - 2 * g * upper - beta
    total += math.exp(logf(upper)) / abs(slope)
    return total


def wsaw_walk_sum(model: CouplingModel, a: int, b: int, g, lam, maxlen: int):
    """sum_{|w| <= maxlen} J^w prod_x nu-integral(n_x(w)), with g and lam + d in the exponent.

    Walks are grouped by their visit-count vector, which is all the site
    integrals depend on. Returns (value, note) where note records maxlen
    and the g = 0 geometric tail bound.
    """
    d0 = model.diag[0]
    if any(x != d0 for x in model.diag):
        raise HypothesisError("walk sum needs a homogeneous diagonal d_x = d")
    m = model.size
    J = _real_matrix(model)
    if np.any(J < 0) or any(imag_part(x) for row in model.offdiag for x in row):
        raise HypothesisError("walk sum needs real J >= 0")
    g = float(g)
    beta = float(lam) + float(real_part(d0))
    if g < 0 or (g == 0 and beta <= float(J.sum(axis=1).max())):
        raise HypothesisError("need g > 0, or g = 0 with lam + d > dbar")
    states = {(a - 1, tuple(1 if x == a - 1 else 0 for x in range(m))): 1.0}
    value = 0.0
    for length in range(maxlen + 1):
        for (x, counts), w in states.items():
            if x == b - 1:
                value += w * math.prod(gamma_weight_integral(k, g, beta) for k in counts)
        if length == maxlen:
            break
        nxt = {}
        for (x, counts), w in states.items():
            for y in range(m):
                if J[x, y] == 0:
                    continue
                c2 = counts[:y] + (counts[y] + 1,) + counts[y + 1:]
                key = (y, c2)
                nxt[key] = nxt.get(key, 0.0) + w * J[x, y]
        states = nxt
    rho = float(J.sum(axis=1).max()) / beta
    tail = rho ** (maxlen + 1) / (1 - rho) / beta if rho < 1 else math.inf
    return float(value), {"maxlen": maxlen, "tail_bound": tail}


def wsaw_g_taylor(model: CouplingModel, a: int, b: int, lam, order: int):
    """Exact g-Taylor coefficients of the weakly self-avoiding two-point function.

    Coefficient k is (-1)^k / k! times E_a[(sum_x L_x^2)^k e^{-lam zeta} 1{..}] / (d_b pi),
    expanded by the multinomial theorem into local-time moments of the
    model with diagonal shifted by lam.
    """
    if 2 * order > MOMENT_CAP:
        raise ValueError(f"order {order} needs moments beyond the cap {MOMENT_CAP}")
    shifted = model.shifted(lam) if lam != 0 else model
    m = model.size
    out = []
    for k in range(order + 1):
        total = 0
        for js in _compositions(k, m):
            multinom = math.factorial(k) // math.prod(math.factorial(j) for j in js)
            total = total + multinom * local_time_moment_oracle(shifted, a, b, [2 * j for j in js])
        out.append(total * Fraction((-1) ** k, math.factorial(k)))
    return out


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for k in range(total + 1):
        for rest in _compositions(total - k, parts - 1):
            yield (k,) + rest


# --- simulation summary ----------------------------------------------------------

def simulate_summary(params: CtmcParams, start: int, n: int, seed: int, horizon=None, bins: int = 20):
    """Per-site local-time statistics, end-site frequencies and local-time histograms."""
    _check_sites(params, start)
    m = params.size
    if params.variant == KILLED:
        def block(rng, size):
            L, last, _ = simulate_killed_block(params, start, size, rng)
            return L, last
    else:
        if horizon is None or horizon <= 0:
            raise ValueError("unkilled simulation needs a positive horizon")

        def block(rng, size):
            return simulate_unkilled_block(params, start, np.full(size, float(horizon)), rng)

    outs = run_blocks(n, seed, block)
    L = np.concatenate([o[0] for o in outs])
    end = np.concatenate([o[1] for o in outs])
    total = L.sum(axis=1)
    freq = np.array([(end == x).mean() for x in range(1, m + 1)])
    hists = []
    for x in range(m):
        hi = float(L[:, x].max()) if L[:, x].size else 1.0
        counts, edges = np.histogram(L[:, x], bins=bins, range=(0.0, hi if hi > 0 else 1.0))
        hists.append({"site": x + 1, "edges": edges.tolist(), "counts": counts.tolist()})
    return {
        "variant": params.variant,
        "start": start,
        "n_samples": n,
        "seed": seed,
        "horizon": horizon,
        "local_time_mean": L.mean(axis=0).tolist(),
        "local_time_var": L.var(axis=0, ddof=1).tolist() if n > 1 else [0.0] * m,
        "local_time_stderr": (L.std(axis=0, ddof=1) / math.sqrt(n)).tolist() if n > 1 else [0.0] * m,
        "end_site_freq": freq.tolist(),
        "end_site_stderr": np.sqrt(freq * (1 - freq) / n).tolist(),
        "total_time_mean": float(total.mean()),
        "total_time_stderr": float(total.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
        "histograms": hists,
    }


def exact_end_site_probability(model: CouplingModel, a: int, b: int):
    """P_a(X(zeta-) = b) = d_b pi_{b,cemetery} C_ab."""
    kill = model.d(b) - sum(model.J(b, y) for y in model.sites)
    return kill * model.C(a, b)


def exact_mean_lifetime(model: CouplingModel, a: int):
    """E_a[zeta] = sum_b d_b pi_{b,cemetery} sum_x (first local-time moment at x)."""
    total = 0
    for b in model.sites:
        kill = model.d(b) - sum(model.J(b, y) for y in model.sites)
        for x in model.sites:
            total = total + kill * local_time_moment_oracle(model, a, b, {x: 1})
    return total
