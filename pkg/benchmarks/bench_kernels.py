"""Time the compiled and pure-Python kernel backends on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on identical, seeded inputs under every available backend;
the table reports the best wall time per call and the speedup over Python.
Outputs of the two backends are also compared, so a run doubles as a smoke
test that the backends agree.
"""

import argparse
import time

import numpy as np

from nbrank import kernels


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def case_edit_counts(rng):
    pairs = [
        (rng.integers(0, 30, size=rng.integers(5, 40)).astype(np.intc),
         rng.integers(0, 30, size=rng.integers(5, 40)).astype(np.intc))
        for _ in range(500)
    ]

    def run(backend):
        return [backend.edit_counts(r, h) for r, h in pairs]

    return "edit_counts x500 (len 5-40)", run


def case_lda_sweep(rng):
    n_docs, doc_len, W, K = 200, 50, 300, 10
    words = rng.integers(0, W, size=n_docs * doc_len).astype(np.intc)
    docs = np.repeat(np.arange(n_docs), doc_len).astype(np.intc)
    z0 = rng.integers(0, K, size=words.shape[0]).astype(np.intc)
    u = rng.random(words.shape[0])

    def run(backend):
        z = z0.copy()
        ndk = np.zeros((n_docs, K), dtype=np.intc)
        nkw = np.zeros((K, W), dtype=np.intc)
        np.add.at(ndk, (docs, z), 1)
        np.add.at(nkw, (z, words), 1)
        nk = nkw.sum(axis=1).astype(np.intc)
        backend.lda_sweep(words, docs, z, ndk, nkw, nk, 50.0 / K, 0.01, u)
        return z

    return "lda_sweep (10k tokens, K=10)", run


def case_infer_doc(rng):
    W, K, L, iters = 300, 10, 30, 100
    phi = rng.dirichlet(np.ones(W), size=K)
    phi_t = np.ascontiguousarray(phi.T)
    ids = rng.integers(0, W, size=L).astype(np.intc)
    z0 = rng.integers(0, K, size=L).astype(np.intc)
    u = rng.random((iters, L))

    def run(backend):
        return backend.infer_doc(ids, phi_t, z0.copy(), 5.0, u, iters // 4)

    return "infer_doc (30 tokens, 100 sweeps)", run


def case_dcd_epoch(rng):
    n_rows, dim, n_pairs = 2000, 30, 20000
    X = rng.standard_normal((n_rows, dim))
    first = rng.integers(0, n_rows, size=n_pairs).astype(np.intp)
    second = rng.integers(0, n_rows, size=n_pairs).astype(np.intp)
    diff = X[first] - X[second]
    qdiag = np.einsum("ij,ij->i", diff, diff)
    order = rng.permutation(n_pairs).astype(np.intp)

    def run(backend):
        alpha = np.zeros(n_pairs)
        w = np.zeros(dim)
        backend.dcd_epoch(X, first, second, qdiag, alpha, w, 10.0, order)
        return w

    return "dcd_epoch (20k pairs, dim 30)", run


CASES = (case_edit_counts, case_lda_sweep, case_infer_doc, case_dcd_epoch)


def _same(a, b):
    if isinstance(a, list):
        return a == b
    return np.allclose(a, b, rtol=1e-12, atol=1e-12)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    names = kernels.available_backends()
    print(f"active backend: {kernels.BACKEND}; available: {', '.join(names)}")
    header = f"{'kernel':34s}" + "".join(f"{n + ' (ms)':>14s}" for n in names) + f"{'speedup':>10s}  agree"
    print(header)
    for case in CASES:
        label, run = case(np.random.default_rng(args.seed))
        times, results = {}, {}
        for name in names:
            times[name], results[name] = _best(lambda: run(kernels.get_backend(name)), args.repeat)
        cells = "".join(f"{1e3 * times[n]:14.2f}" for n in names)
        if len(names) > 1:
            speedup = f"{times['python'] / times['cython']:9.1f}x"
            agree = "yes" if _same(results["cython"], results["python"]) else "NO"
        else:
            speedup, agree = f"{'-':>10s}", "-"
        print(f"{label:34s}{cells}{speedup}  {agree}")


if __name__ == "__main__":
    main()
