from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import cumulative_trapezoid

ACCEPTANCE_KEY = pytest.StashKey[list]()


def make_rng(seed=0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


@pytest.fixture
def rng():
    return make_rng(12345)


def batch_means_se(x, n_batches: int = 50) -> float:
    """Monte Carlo standard error of the mean of a correlated series by batch means."""
    x = np.asarray(x, dtype=float)
    m = x.size // n_batches
    b = x[: m * n_batches].reshape(n_batches, m).mean(axis=1)
    return float(b.std(ddof=1) / np.sqrt(n_batches))


def numeric_cdf(logpdf, lo: float, hi: float, n: int = 400001, log_grid: bool = False):
    """CDF of an unnormalised density by trapezoidal quadrature on a fine grid.

    With ``log_grid`` the grid is uniform in ``log x`` (for densities with
    mass spread over many orders of magnitude).  Returns a callable.
    """
    if log_grid:
        u = np.linspace(np.log(lo), np.log(hi), n)
        x = np.exp(u)
        lf = logpdf(x) + u  # change of variables x = e^u
        t = u
    else:
        x = np.linspace(lo, hi, n)
        lf = logpdf(x)
        t = x
    lf = np.where(np.isfinite(lf), lf, -np.inf)
    f = np.exp(lf - lf.max())
    c = np.concatenate([[0.0], cumulative_trapezoid(f, t)])
    c /= c[-1]
    return lambda q: np.interp(q, x, c)


def ks_statistic(samples, cdf) -> float:
    s = np.sort(np.asarray(samples, dtype=float))
    n = s.size
    F = cdf(s)
    return float(max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n)))


@pytest.fixture
def acceptance_report(request):
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def report(number: int, ok: bool, detail: str):
        line = f"acceptance #{number}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        lines.append(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("#")[1].split(":")[0])):
            terminalreporter.write_line(line)
