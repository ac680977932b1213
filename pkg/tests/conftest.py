import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from wasserclust import clustering
from wasserclust.clustering import compute_prototype, prototypes_for
from wasserclust.histogram import Histogram, HistogramMatrix, build_from_bins, common_refinement, from_quantiles
from wasserclust.wasserstein import Scheme, dispersion_dist2

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.function_scoped_fixture, HealthCheck.too_slow],
)
settings.load_profile("default")

ORACLE_GRID = 100_001

# acceptance lines collected during the session, printed at the end
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


# -- engine watchdog: every clustering run in the suite is checked --------------------

ENGINE_LOG = {"runs": 0, "violations": 0, "weight_steps": 0, "bad_weights": 0}


@pytest.fixture(autouse=True)
def engine_watchdog(monkeypatch):
    """Fail any test whose clustering runs break monotonicity or the product-one rule."""
    seen = {"violations": 0, "bad_weights": 0}
    run_once = clustering._run_once
    weights = clustering._Engine.weights

    def checked_run(*args, **kwargs):
        out = run_once(*args, **kwargs)
        ENGINE_LOG["runs"] += 1
        ENGINE_LOG["violations"] += out["violations"]
        seen["violations"] += out["violations"]
        return out

    def checked_weights(self, *args, **kwargs):
        ws = weights(self, *args, **kwargs)
        ENGINE_LOG["weight_steps"] += 1
        ok = ws.check_products(1e-9) and all(np.all(a > 0) for a in (ws.mean_weights, ws.disp_weights))
        if not ok:
            ENGINE_LOG["bad_weights"] += 1
            seen["bad_weights"] += 1
        return ws

    monkeypatch.setattr(clustering, "_run_once", checked_run)
    monkeypatch.setattr(clustering._Engine, "weights", checked_weights)
    yield
    assert seen["violations"] == 0, "criterion increased during an iteration"
    assert seen["bad_weights"] == 0, "a weighting step broke the product-one constraint"


# -- random data -------------------------------------------------------------------


def random_histogram(rng: np.random.Generator, n_bins: int | None = None, equal_weights: bool = False) -> Histogram:
    if n_bins is None:
        n_bins = int(rng.integers(2, 31))
    lo = rng.uniform(-20, 20)
    widths = rng.uniform(0.05, 5.0, size=n_bins)
    edges = lo + np.concatenate([[0.0], np.cumsum(widths)])
    if equal_weights:
        w = np.full(n_bins, 1.0 / n_bins)
    else:
        w = rng.uniform(0.1, 1.0, size=n_bins)
        w /= w.sum()
    return build_from_bins(np.column_stack([edges[:-1], edges[1:], w]))


def random_matrix(rng: np.random.Generator, n: int, p: int, clusters: int = 1, bins=(2, 8)) -> HistogramMatrix:
    offsets = rng.normal(0, 10, size=(clusters, p))
    cells = []
    for i in range(n):
        c = i % clusters
        cells.append(
            [random_histogram(rng, int(rng.integers(bins[0], bins[1] + 1))).shift(offsets[c, j]) for j in range(p)]
        )
    return HistogramMatrix(cells, [f"V{j}" for j in range(p)], [f"o{i}" for i in range(n)])


@st.composite
def histograms(draw, max_bins: int = 8):
    n = draw(st.integers(1, max_bins))
    lo = draw(st.floats(-100, 100, allow_nan=False))
    widths = draw(st.lists(st.floats(1e-2, 50), min_size=n, max_size=n))
    raw = draw(st.lists(st.floats(1e-2, 1.0), min_size=n, max_size=n))
    w = np.asarray(raw) / np.sum(raw)
    edges = lo + np.concatenate([[0.0], np.cumsum(widths)])
    return build_from_bins(np.column_stack([edges[:-1], edges[1:], w]))


# -- numeric-integration oracles (independent of the closed forms) -------------------


def oracle_grid():
    return np.linspace(0.0, 1.0, ORACLE_GRID)


def oracle_quantile(h: Histogram, t: np.ndarray) -> np.ndarray:
    """Quantile function rebuilt from the bins by inverting the piecewise-linear CDF."""
    lower = np.array([b[0] for b in h.bins])
    upper = np.array([b[1] for b in h.bins])
    w = np.array([b[2] for b in h.bins])
    cum = np.concatenate([[0.0], np.cumsum(w)])
    cum /= cum[-1]
    idx = np.clip(np.searchsorted(cum, t, side="right") - 1, 0, len(w) - 1)
    frac = (t - cum[idx]) / w[idx]
    return lower[idx] + np.clip(frac, 0.0, 1.0) * (upper[idx] - lower[idx])


def trapz_dist2(h1: Histogram, h2: Histogram) -> float:
    t = oracle_grid()
    return float(np.trapezoid((oracle_quantile(h1, t) - oracle_quantile(h2, t)) ** 2, t))


def trapz_moments(h: Histogram) -> tuple[float, float]:
    t = oracle_grid()
    q = oracle_quantile(h, t)
    m = float(np.trapezoid(q, t))
    var = float(np.trapezoid((q - m) ** 2, t))
    return m, float(np.sqrt(var))


# -- brute-force inertia oracle ----------------------------------------------------


def brute_inertia(matrix, result):
    """TSS/WSS/BSS from per-object Histogram distances and hand-built prototypes."""
    labels = result.partition.labels
    k, p, n = result.k, matrix.p, matrix.n
    lm, ld = result.weights.full(k, p)
    protos = prototypes_for(matrix, result.partition)
    sizes = np.bincount(labels, minlength=k)
    general = []
    for j in range(p):
        col = matrix.column(j)
        if result.scheme is Scheme.CDC_AWD:
            wm = np.array([lm[labels[i], j] for i in range(n)])
            wd = np.array([ld[labels[i], j] for i in range(n)])
            gm = float(np.sum(wm * [h.mean for h in col]) / np.sum(wm))
            grid, vals = common_refinement(*col)
            cent = sum(wd[i] * (vals[i] - col[i].mean) for i in range(n)) / wd.sum()
            general.append(from_quantiles(grid, cent + gm))
        else:
            general.append(compute_prototype(col))
    tss = np.zeros((2, p, k))
    wss = np.zeros((2, p, k))
    bss = np.zeros((2, p, k))
    for i in range(n):
        c = labels[i]
        for j in range(p):
            h = matrix[i, j]
            tss[0, j, c] += lm[c, j] * (h.mean - general[j].mean) ** 2
            tss[1, j, c] += ld[c, j] * dispersion_dist2(h, general[j])
            wss[0, j, c] += lm[c, j] * (h.mean - protos[c][j].mean) ** 2
            wss[1, j, c] += ld[c, j] * dispersion_dist2(h, protos[c][j])
    for c in range(k):
        for j in range(p):
            bss[0, j, c] = lm[c, j] * sizes[c] * (protos[c][j].mean - general[j].mean) ** 2
            bss[1, j, c] = ld[c, j] * sizes[c] * dispersion_dist2(protos[c][j], general[j])
    return tss, wss, bss, general
