"""Hot numerical kernels, JIT-compiled when numba is available.

Two implementations exist for each kernel: an explicit-loop version
compiled with ``numba.njit`` and a vectorized pure-numpy fallback. The
JIT path is used when numba imports successfully and the environment
variable ``POTD_NUMBA`` is not set to ``0``/``false``/``off``; the
fallback keeps the package fully functional without a compiler.
``benchmarks/bench_kernels.py`` times the two paths against each other.

All kernels take float64 C-contiguous arrays. The public dispatchers
(`pairwise_sqdist`, `sinkhorn_scaling`) normalize their inputs; the
``*_numpy`` / ``*_jit`` variants are exported for the benchmark and for
equivalence tests.
"""

import os

import numpy as np

_env = os.environ.get("POTD_NUMBA", "1").strip().lower()
_want_jit = _env not in ("0", "false", "off")

if _want_jit:
    try:
        from numba import njit

        JIT_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        JIT_ENABLED = False
else:
    JIT_ENABLED = False

if not JIT_ENABLED:

    def njit(*args, **kwargs):
        # no-op decorator so the loop variants stay importable
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


def _as_c64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


# ---------------------------------------------------------------------------
# pairwise squared Euclidean distances


def pairwise_sqdist_numpy(x, y):
    """All-pairs squared Euclidean distances, shape (len(x), len(y))."""
    x = _as_c64(x)
    y = _as_c64(y)
    sq = (x * x).sum(axis=1)[:, None] + (y * y).sum(axis=1)[None, :]
    d = sq - 2.0 * (x @ y.T)
    # the dot-product expansion can go slightly negative for near-coincident
    # points; squared distances are nonnegative by definition
    np.maximum(d, 0.0, out=d)
    return d


@njit(cache=True)
def _pairwise_sqdist_loops(x, y):
    n, p = x.shape
    m = y.shape[0]
    out = np.empty((n, m), dtype=np.float64)
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for k in range(p):
                diff = x[i, k] - y[j, k]
                acc += diff * diff
            out[i, j] = acc
    return out


def pairwise_sqdist_jit(x, y):
    return _pairwise_sqdist_loops(_as_c64(x), _as_c64(y))


pairwise_sqdist = pairwise_sqdist_jit if JIT_ENABLED else pairwise_sqdist_numpy


# ---------------------------------------------------------------------------
# log-domain Sinkhorn scaling
#
# Inputs are the scaled negative costs K = -C/eps and the log-marginals.
# Dual potentials (u, v) are iterated with log-sum-exp updates; after a
# u-update the row marginals are exact, so convergence is measured as the
# L1 error of the column marginals. Zero-mass atoms enter as log(0) = -inf
# and are handled explicitly.
#
# Returns (u, v, sweeps, col_error) where col_error is measured on the
# returned potentials.


def _lse_cols_numpy(neg_cost, u):
    t = neg_cost + u[:, None]
    mx = t.max(axis=0)
    safe = np.where(np.isneginf(mx), 0.0, mx)
    with np.errstate(divide="ignore"):
        return np.where(
            np.isneginf(mx), -np.inf, safe + np.log(np.exp(t - safe).sum(axis=0))
        )


def _lse_rows_numpy(neg_cost, v):
    t = neg_cost + v[None, :]
    mx = t.max(axis=1)
    safe = np.where(np.isneginf(mx), 0.0, mx)
    with np.errstate(divide="ignore"):
        return np.where(
            np.isneginf(mx), -np.inf, safe + np.log(np.exp(t - safe[:, None]).sum(axis=1))
        )


def sinkhorn_scaling_numpy(neg_cost, log_a, log_b, max_iterations, tolerance, u0=None, v0=None):
    neg_cost = _as_c64(neg_cost)
    b = np.exp(log_b)
    u = np.zeros(neg_cost.shape[0]) if u0 is None else np.array(u0, dtype=np.float64)
    v = np.zeros(neg_cost.shape[1]) if v0 is None else np.array(v0, dtype=np.float64)
    for sweeps in range(max_iterations + 1):
        lse_cols = _lse_cols_numpy(neg_cost, u)
        err = np.abs(np.exp(v + lse_cols) - b).sum()
        if err <= tolerance or sweeps == max_iterations:
            return u, v, sweeps, err
        v = log_b - lse_cols
        u = log_a - _lse_rows_numpy(neg_cost, v)
    raise AssertionError("unreachable")


@njit(cache=True)
def _sinkhorn_scaling_loops(neg_cost, log_a, log_b, max_iterations, tolerance, u0, v0):
    n, m = neg_cost.shape
    u = u0.copy()
    v = v0.copy()
    b = np.exp(log_b)
    lse_cols = np.empty(m)
    err = np.inf
    for sweeps in range(max_iterations + 1):
        err = 0.0
        for j in range(m):
            mx = -np.inf
            for i in range(n):
                t = neg_cost[i, j] + u[i]
                if t > mx:
                    mx = t
            if mx == -np.inf:
                lse_cols[j] = -np.inf
            else:
                s = 0.0
                for i in range(n):
                    s += np.exp(neg_cost[i, j] + u[i] - mx)
                lse_cols[j] = mx + np.log(s)
            err += abs(np.exp(v[j] + lse_cols[j]) - b[j])
        if err <= tolerance or sweeps == max_iterations:
            return u, v, sweeps, err
        for j in range(m):
            v[j] = log_b[j] - lse_cols[j]
        for i in range(n):
            mx = -np.inf
            for j in range(m):
                t = neg_cost[i, j] + v[j]
                if t > mx:
                    mx = t
            if mx == -np.inf:
                u[i] = -np.inf if log_a[i] == -np.inf else np.inf
            else:
                s = 0.0
                for j in range(m):
                    s += np.exp(neg_cost[i, j] + v[j] - mx)
                u[i] = log_a[i] - (mx + np.log(s))
    return u, v, max_iterations, err


def sinkhorn_scaling_jit(neg_cost, log_a, log_b, max_iterations, tolerance, u0=None, v0=None):
    neg_cost = _as_c64(neg_cost)
    if u0 is None:
        u0 = np.zeros(neg_cost.shape[0])
    if v0 is None:
        v0 = np.zeros(neg_cost.shape[1])
    return _sinkhorn_scaling_loops(
        neg_cost,
        _as_c64(log_a),
        _as_c64(log_b),
        int(max_iterations),
        float(tolerance),
        _as_c64(u0),
        _as_c64(v0),
    )


sinkhorn_scaling = sinkhorn_scaling_jit if JIT_ENABLED else sinkhorn_scaling_numpy
