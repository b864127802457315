"""Time the compiled Pegasos kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--docs 2000] [--dim 4000] [--epochs 5]

Both backends see the same data and visiting order; the script also checks
that they return identical weights.
"""

import argparse
import timeit

import numpy as np
from scipy import sparse

from textguard import _kernels_py

try:
    from textguard import _kernels
except ImportError:
    _kernels = None


def make_data(n_docs, dim, epochs, density, seed):
    rng = np.random.default_rng(seed)
    X = sparse.random(n_docs, dim, density=density, format="csr", random_state=seed)
    X.data[:] = rng.random(X.nnz)
    y = np.where(rng.random(n_docs) < 0.5, 1.0, -1.0)
    orders = np.stack([rng.permutation(n_docs) for _ in range(epochs)]).astype(np.int64)
    return X, y, orders


def run(backend, X, y, orders, lam, dense):
    w = np.zeros(X.shape[1])
    if dense:
        b = backend.pegasos_dense(X, y, orders, lam, w)
    else:
        b = backend.pegasos_sparse(X.data, X.indices.astype(np.int32), X.indptr.astype(np.int32), y, orders, lam, w)
    return w, b


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--docs", type=int, default=2000)
    parser.add_argument("--dim", type=int, default=4000)
    parser.add_argument("--dense-dim", type=int, default=256, help="feature width for the dense case")
    parser.add_argument("--epochs", type=int, default=5)
    parser.add_argument("--density", type=float, default=0.005)
    parser.add_argument("--lam", type=float, default=1e-4)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if _kernels is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation` first")

    X, y, orders = make_data(args.docs, args.dim, args.epochs, args.density, seed=0)
    D = np.random.default_rng(1).normal(size=(args.docs, args.dense_dim))
    cases = [("sparse", X, False), ("dense", D, True)]
    print(f"{args.docs} docs, {args.epochs} epochs, sparse dim {args.dim} (density {args.density}), dense dim {args.dense_dim}")
    print(f"{'case':<8}{'python s':>12}{'compiled s':>12}{'speedup':>10}  identical")
    for name, data, dense in cases:
        times = {}
        results = {}
        for label, backend in (("python", _kernels_py), ("compiled", _kernels)):
            results[label] = run(backend, data, y, orders, args.lam, dense)
            times[label] = min(timeit.repeat(lambda: run(backend, data, y, orders, args.lam, dense), number=1, repeat=args.repeat))
        same = np.array_equal(results["python"][0], results["compiled"][0]) and results["python"][1] == results["compiled"][1]
        print(f"{name:<8}{times['python']:>12.4f}{times['compiled']:>12.4f}{times['python'] / times['compiled']:>9.1f}x  {same}")


if __name__ == "__main__":
    main()
