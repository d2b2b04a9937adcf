"""Samplers and densities for the full conditionals.

Gamma distributions are parameterised by shape and *rate* throughout.  Every
sampler takes an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .exceptions import ConfigurationError, DomainError

DEFAULT_MIXTURE_THRESHOLD = 50


def _check_positive(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"{name} must be positive and finite")
    return arr


def sample_gamma(shape, rate, rng: np.random.Generator, size=None):
    """Draw from G(shape, rate), density proportional to ``x**(shape-1) * exp(-rate*x)``."""
    shape = _check_positive(shape, "shape")
    rate = _check_positive(rate, "rate")
    return rng.gamma(shape, 1.0 / rate, size=size)


def sample_exponential(rate, rng: np.random.Generator, size=None):
    rate = _check_positive(rate, "rate")
    return rng.exponential(1.0 / rate, size=size)


def sample_categorical(weights, rng: np.random.Generator) -> int:
    """Index drawn with probability proportional to the nonnegative ``weights``."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise DomainError("weights must be a finite nonnegative vector")
    total = w.sum()
    if total <= 0:
        raise DomainError("weights must not all be zero")
    c = np.cumsum(w)
    k = int(np.searchsorted(c, rng.random() * c[-1], side="right"))
    k = min(k, w.size - 1)
    # skip trailing zero-weight entries hit through rounding
    while w[k] == 0:
        k -= 1
    return k


def sample_negative_binomial(r, p, rng: np.random.Generator, size=None):
    """Number of failures before the ``r``-th success, success probability ``p``."""
    r = _check_positive(r, "r")
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0) or np.any(p >= 1):
        raise DomainError("p must lie in (0, 1)")
    return rng.negative_binomial(r, p, size=size)


# --------------------------------------------------------------------------
# Generalized inverse Gaussian


@dataclass(frozen=True)
class GigParams:
    """GIG law with density proportional to ``x**(gamma_exp-1) * exp(-(alpha*x + beta/x)/2)``."""

    alpha: float
    beta: float
    gamma_exp: float

    def __post_init__(self):
        a, b, g = float(self.alpha), float(self.beta), float(self.gamma_exp)
        if not (np.isfinite(a) and np.isfinite(b) and np.isfinite(g)):
            raise DomainError("GIG parameters must be finite")
        if a < 0 or b < 0:
            raise DomainError("GIG alpha and beta must be nonnegative")
        if a == 0 and b == 0:
            raise DomainError("GIG alpha and beta cannot both be zero")
        if b == 0 and g <= 0:
            raise DomainError("GIG with beta = 0 requires gamma_exp > 0")
        if a == 0 and g >= 0:
            raise DomainError("GIG with alpha = 0 requires gamma_exp < 0")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "gamma_exp", g)


def gig_log_density(x, params: GigParams):
    """Unnormalised log density."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return (params.gamma_exp - 1.0) * np.log(x) - 0.5 * (params.alpha * x + params.beta / x)


def _gig_mode(lam: float, omega: float) -> float:
    # mode of x**(lam-1) exp(-omega/2 (x + 1/x)), written to avoid cancellation
    if lam >= 1.0:
        return (math.sqrt((lam - 1.0) ** 2 + omega * omega) + (lam - 1.0)) / omega
    return omega / (math.sqrt((1.0 - lam) ** 2 + omega * omega) + (1.0 - lam))


class _StandardGig:
    """Exact sampler for density ``x**(lam-1) exp(-omega/2 (x + 1/x))`` with ``lam >= 0``.

    Three rejection schemes, chosen by parameter region for efficiency:
    ratio-of-uniforms with and without mode shift, and a piecewise
    constant/power/exponential hat for small ``omega`` and ``lam < 1``
    (Hörmann & Leydold, 2014).
    """

    def __init__(self, lam: float, omega: float):
        self.lam, self.omega = lam, omega
        if lam > 2.0 or omega > 3.0:
            self._setup_rou_shift()
            self.draw = self._draw_rou_shift
        elif lam >= 1.0 - 2.25 * omega * omega or omega > 0.2:
            self._setup_rou()
            self.draw = self._draw_rou
        else:
            self._setup_hat()
            self.draw = self._draw_hat

    def _log_sqrt_f(self, x):
        return self.t * math.log(x) - self.s * (x + 1.0 / x) - self.nc

    def _setup_common(self):
        lam, omega = self.lam, self.omega
        self.t = 0.5 * (lam - 1.0)
        self.s = 0.25 * omega
        self.xm = _gig_mode(lam, omega)
        self.nc = self.t * math.log(self.xm) - self.s * (self.xm + 1.0 / self.xm)

    def _setup_rou(self):
        self._setup_common()
        lam, omega = self.lam, self.omega
        ym = ((lam + 1.0) + math.sqrt((lam + 1.0) ** 2 + omega * omega)) / omega
        self.um = math.exp(0.5 * (lam + 1.0) * math.log(ym) - self.s * (ym + 1.0 / ym) - self.nc)

    def _draw_rou(self, rng):
        while True:
            u = self.um * rng.random()
            v = rng.random()
            if v == 0.0:
                continue
            x = u / v
            if x > 0 and math.log(v) <= self._log_sqrt_f(x):
                return x

    def _setup_rou_shift(self):
        self._setup_common()
        lam, omega, xm = self.lam, self.omega, self.xm
        # extrema of (x - xm) sqrt(f(x)) solve x^3 + a x^2 + b x + c = 0
        a = -(2.0 * (lam + 1.0) / omega + xm)
        b = 2.0 * (lam - 1.0) * xm / omega - 1.0
        c = xm
        p = b - a * a / 3.0
        q = 2.0 * a ** 3 / 27.0 - a * b / 3.0 + c
        fi = math.acos(max(-1.0, min(1.0, -q / (2.0 * math.sqrt(-(p ** 3) / 27.0)))))
        fak = 2.0 * math.sqrt(-p / 3.0)
        y1 = fak * math.cos(fi / 3.0) - a / 3.0
        y2 = fak * math.cos(fi / 3.0 + 4.0 / 3.0 * math.pi) - a / 3.0
        self.uplus = (y1 - xm) * math.exp(self._log_sqrt_f(y1))
        self.uminus = (y2 - xm) * math.exp(self._log_sqrt_f(y2))

    def _draw_rou_shift(self, rng):
        span = self.uplus - self.uminus
        while True:
            u = self.uminus + rng.random() * span
            v = rng.random()
            if v == 0.0:
                continue
            x = u / v + self.xm
            if x > 0 and math.log(v) <= self._log_sqrt_f(x):
                return x

    def _setup_hat(self):
        lam, omega = self.lam, self.omega
        xm = _gig_mode(lam, omega)
        x0 = omega / (1.0 - lam)
        k0 = math.exp((lam - 1.0) * math.log(xm) - 0.5 * omega * (xm + 1.0 / xm))
        A0 = k0 * x0
        if x0 >= 2.0 / omega:
            k1, A1 = 0.0, 0.0
            k2 = x0 ** (lam - 1.0)
            A2 = k2 * 2.0 * math.exp(-omega * x0 / 2.0) / omega
        else:
            k1 = math.exp(-omega)
            if lam == 0.0:
                A1 = k1 * math.log(2.0 / (omega * omega))
            else:
                A1 = k1 / lam * ((2.0 / omega) ** lam - x0 ** lam)
            k2 = (2.0 / omega) ** (lam - 1.0)
            A2 = k2 * 2.0 * math.exp(-1.0) / omega
        self.x0, self.k0, self.k1, self.k2 = x0, k0, k1, k2
        self.A = (A0, A1, A2)
        self.Atot = A0 + A1 + A2
        self.tail_start = max(x0, 2.0 / omega)

    def _draw_hat(self, rng):
        lam, omega = self.lam, self.omega
        A0, A1, _ = self.A
        while True:
            v = self.Atot * rng.random()
            if v <= A0:
                x = self.x0 * v / A0
                hx = self.k0
            elif v - A0 <= A1:
                v -= A0
                if lam == 0.0:
                    x = omega * math.exp(math.exp(omega) * v)
                    hx = self.k1 / x
                else:
                    x = (self.x0 ** lam + lam / self.k1 * v) ** (1.0 / lam)
                    hx = self.k1 * x ** (lam - 1.0)
            else:
                v -= A0 + A1
                arg = math.exp(-omega / 2.0 * self.tail_start) - omega / (2.0 * self.k2) * v
                if arg <= 0.0:
                    continue
                x = -2.0 / omega * math.log(arg)
                hx = self.k2 * math.exp(-omega / 2.0 * x)
            if x <= 0.0:
                continue
            u = rng.random() * hx
            if u > 0.0 and math.log(u) <= (lam - 1.0) * math.log(x) - omega / 2.0 * (x + 1.0 / x):
                return x


def sample_gig(params: GigParams, rng: np.random.Generator, size=None):
    """Exact draws from the GIG law described by ``params``.

    ``beta = 0`` reduces to G(gamma_exp, alpha/2); ``alpha = 0`` to the
    reciprocal of G(-gamma_exp, beta/2).
    """
    a, b, g = params.alpha, params.beta, params.gamma_exp
    if b == 0.0:
        return rng.gamma(g, 2.0 / a, size=size)
    if a == 0.0:
        return 1.0 / rng.gamma(-g, 2.0 / b, size=size)
    omega = math.sqrt(a * b)
    scale = math.sqrt(b / a)
    gen = _StandardGig(abs(g), omega)
    n = 1 if size is None else int(np.prod(size))
    out = np.empty(n)
    for k in range(n):
        out[k] = gen.draw(rng)
    if g < 0:
        out = 1.0 / out
    out *= scale
    if size is None:
        return float(out[0])
    return out.reshape(size)


# --------------------------------------------------------------------------
# Tie parameter of the Rao-Kupper model


def tie_theta_log_density(theta, T: int, S: float):
    """Unnormalised log density ``T*log(theta**2 - 1) - S*theta`` on ``theta > 1``."""
    th = np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(th > 1, T * np.log(np.where(th > 1, (th - 1) * (th + 1), 1.0)) - S * th, -np.inf)
    return out if out.ndim else float(out)


def tie_mixture_components(T: int, S: float) -> tuple[np.ndarray, np.ndarray]:
    """Shapes and normalised log-weights of the gamma mixture for ``theta - 1``.

    Expanding ``(u**2 + 2u)**T`` binomially gives components
    ``G(T + k + 1, S)``, ``k = 0..T``, with unnormalised log-weights
    ``log C(T,k) + (T-k) log 2 + log Gamma(T+k+1) - (T+k+1) log S``.
    """
    T = int(T)
    if T < 0:
        raise DomainError("number of ties must be nonnegative")
    S = float(S)
    if not np.isfinite(S) or S <= 0:
        raise DomainError("rate S must be positive")
    k = np.arange(T + 1, dtype=float)
    shapes = T + k + 1.0
    logw = (gammaln(T + 1.0) - gammaln(k + 1.0) - gammaln(T - k + 1.0)
            + (T - k) * np.log(2.0) + gammaln(shapes) - shapes * np.log(S))
    if not np.all(np.isfinite(logw)):
        raise ConfigurationError("mixture weights overflowed")
    logw -= np.logaddexp.reduce(logw)
    return shapes, logw


def sample_theta_tie_mixture(T: int, S: float, rng: np.random.Generator, size=None,
                             threshold: int | None = DEFAULT_MIXTURE_THRESHOLD):
    """Exact draw of ``theta > 1`` with density proportional to ``(theta**2-1)**T exp(-S theta)``.

    Component selection uses the Gumbel-max trick on log-weights.  Raises
    :class:`ConfigurationError` when ``T`` exceeds ``threshold``; callers then
    switch to :func:`sample_theta_tie_mh`.
    """
    if threshold is not None and T > threshold:
        raise ConfigurationError(
            f"T={T} exceeds the mixture threshold {threshold}; use the random-walk update")
    shapes, logw = tie_mixture_components(T, S)
    n = 1 if size is None else int(np.prod(size))
    g = rng.gumbel(size=(n, logw.size))
    k = np.argmax(logw + g, axis=1)
    out = 1.0 + rng.gamma(shapes[k], 1.0 / S)
    if size is None:
        return float(out[0])
    return out.reshape(size)


def sample_theta_tie_mh(theta, T: int, S: float, rng: np.random.Generator,
                        sigma: float = 0.1, n_steps: int = 1):
    """Normal random-walk Metropolis updates of the tie parameter.

    ``theta`` may be an array of independent chain states, all updated in
    parallel.  Proposals at or below 1 are rejected.  Returns the new states
    and the number of accepted proposals.
    """
    th = np.array(theta, dtype=float, ndmin=1)
    if np.any(th <= 1):
        raise DomainError("theta must exceed 1")
    sigma = float(_check_positive(sigma, "sigma"))
    cur = tie_theta_log_density(th, T, S)
    accepted = 0
    for _ in range(int(n_steps)):
        prop = th + sigma * rng.standard_normal(th.shape)
        new = tie_theta_log_density(prop, T, S)
        ok = np.log(rng.random(th.shape)) < new - cur
        th = np.where(ok, prop, th)
        cur = np.where(ok, new, cur)
        accepted += int(ok.sum())
    if np.ndim(theta) == 0:
        return float(th[0]), accepted
    return th, accepted
