"""Hot numeric kernels: per-component Gram assembly.

Two interchangeable backends live here. The numba backend JIT-compiles
fused loops (no N x N temporaries, row-parallel); the numpy backend is
pure broadcasting. Selection:

* ``ADDLSSVM_NUMBA=0`` in the environment forces the numpy path;
* numba missing or failing to import also falls back to numpy;
* anything else uses numba.

Both backends produce the same values up to floating-point rounding of
``exp``. ``benchmarks/bench_grams.py`` compares their throughput.
"""

import os

import numpy as np

FAMILY_RBF = 0
FAMILY_LINEAR = 1

_env = os.environ.get("ADDLSSVM_NUMBA", "1").strip().lower()
_want_numba = _env not in ("0", "false", "off", "no")

if _want_numba:
    try:
        from numba import njit, prange

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - exercised only without numba
        HAVE_NUMBA = False
else:
    HAVE_NUMBA = False


def _component_grams_numpy(X, Z, families, sigmas):
    """Gram blocks between point sets Z (rows) and X (columns), per component.

    X: (D, N), Z: (D, M). Returns (omegas (D, M, N), total (M, N)).
    """
    D, N = X.shape
    M = Z.shape[1]
    omegas = np.empty((D, M, N))
    for d in range(D):
        if families[d] == FAMILY_RBF:
            diff = Z[d][:, None] - X[d][None, :]
            omegas[d] = np.exp(-(diff * diff) / (sigmas[d] * sigmas[d]))
        else:
            omegas[d] = Z[d][:, None] * X[d][None, :]
    return omegas, omegas.sum(axis=0)


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _component_grams_jit(X, Z, families, sigmas):  # pragma: no cover - jitted
        D, N = X.shape
        M = Z.shape[1]
        omegas = np.empty((D, M, N))
        total = np.zeros((M, N))
        for j in prange(M):
            for d in range(D):
                if families[d] == 0:
                    inv = 1.0 / (sigmas[d] * sigmas[d])
                    zj = Z[d, j]
                    for k in range(N):
                        diff = zj - X[d, k]
                        omegas[d, j, k] = np.exp(-diff * diff * inv)
                else:
                    zj = Z[d, j]
                    for k in range(N):
                        omegas[d, j, k] = zj * X[d, k]
            for d in range(D):
                for k in range(N):
                    total[j, k] += omegas[d, j, k]
        return omegas, total

    def component_grams(X, Z, families, sigmas):
        X = np.ascontiguousarray(X, dtype=np.float64)
        Z = np.ascontiguousarray(Z, dtype=np.float64)
        return _component_grams_jit(
            X, Z, np.asarray(families, dtype=np.int64), np.asarray(sigmas, dtype=np.float64)
        )

else:

    def component_grams(X, Z, families, sigmas):
        X = np.asarray(X, dtype=np.float64)
        Z = np.asarray(Z, dtype=np.float64)
        return _component_grams_numpy(
            X, Z, np.asarray(families, dtype=np.int64), np.asarray(sigmas, dtype=np.float64)
        )


# Always-available alias so the benchmark can time both paths in one process.
component_grams_numpy = _component_grams_numpy
