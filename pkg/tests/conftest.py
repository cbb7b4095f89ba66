import numpy as np
import pytest

from gmmfcn.mixture import MixtureParams


def random_spd(rng, d, lo=0.5, hi=2.0):
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return Q @ np.diag(rng.uniform(lo, hi, d)) @ Q.T


def random_mixture(rng, d, L=2, mean_scale=1.0):
    w = rng.dirichlet(np.ones(L) * 3)
    w = np.clip(w, 0.05, None)
    w /= w.sum()
    means = mean_scale * rng.standard_normal((L, d))
    covs = np.stack([random_spd(rng, d) for _ in range(L)])
    return MixtureParams(w, means, covs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_groups():
    d = 5
    return MixtureParams([0.5, 0.5], [np.ones(d), -np.ones(d)], [np.eye(d)] * 2)


# -- acceptance report --------------------------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
