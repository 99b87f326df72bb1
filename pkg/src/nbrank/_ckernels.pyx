# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Must stay arithmetic-for-arithmetic in step with _pykernels."""

import numpy as np

from libc.math cimport fabs


def edit_counts(const int[::1] ref, const int[::1] hyp):
    cdef Py_ssize_t n = ref.shape[0]
    cdef Py_ssize_t m = hyp.shape[0]
    cdef Py_ssize_t i, j
    cdef int best, cand, mismatch
    cdef int[:, ::1] d = np.empty((n + 1, m + 1), dtype=np.intc)
    cdef int subs = 0, ins = 0, dels = 0

    for i in range(n + 1):
        d[i, 0] = <int>i
    for j in range(m + 1):
        d[0, j] = <int>j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            mismatch = ref[i - 1] != hyp[j - 1]
            best = d[i - 1, j - 1] + mismatch
            cand = d[i, j - 1] + 1
            if cand < best:
                best = cand
            cand = d[i - 1, j] + 1
            if cand < best:
                best = cand
            d[i, j] = best

    i = n
    j = m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            mismatch = ref[i - 1] != hyp[j - 1]
            if d[i, j] == d[i - 1, j - 1] + mismatch:
                subs += mismatch
                i -= 1
                j -= 1
                continue
        if j > 0 and d[i, j] == d[i, j - 1] + 1:
            ins += 1
            j -= 1
        else:
            dels += 1
            i -= 1
    return subs, ins, dels


def lda_sweep(const int[::1] words, const int[::1] docs, int[::1] z,
              int[:, ::1] ndk, int[:, ::1] nkw, int[::1] nk,
              double alpha, double beta, const double[::1] u):
    cdef Py_ssize_t n_tokens = words.shape[0]
    cdef Py_ssize_t n_topics = nk.shape[0]
    cdef Py_ssize_t n_words = nkw.shape[1]
    cdef double wbeta = n_words * beta
    cdef double[::1] cum = np.empty(n_topics, dtype=np.float64)
    cdef double total, target
    cdef Py_ssize_t t, k
    cdef int w, d

    for t in range(n_tokens):
        w = words[t]
        d = docs[t]
        k = z[t]
        ndk[d, k] -= 1
        nkw[k, w] -= 1
        nk[k] -= 1
        total = 0.0
        for k in range(n_topics):
            total += (ndk[d, k] + alpha) * (nkw[k, w] + beta) / (nk[k] + wbeta)
            cum[k] = total
        target = u[t] * total
        k = 0
        while k < n_topics - 1 and cum[k] <= target:
            k += 1
        z[t] = <int>k
        ndk[d, k] += 1
        nkw[k, w] += 1
        nk[k] += 1


def infer_doc(const int[::1] words, const double[:, ::1] phi_t, int[::1] z,
              double alpha, const double[:, ::1] u, Py_ssize_t window):
    cdef Py_ssize_t length = words.shape[0]
    cdef Py_ssize_t n_topics = phi_t.shape[1]
    cdef Py_ssize_t n_iters = u.shape[0]
    cdef Py_ssize_t it, t, k
    cdef double total, target
    cdef double denom = length + n_topics * alpha
    cdef int w
    cdef int[::1] ndk = np.zeros(n_topics, dtype=np.intc)
    cdef double[::1] cum = np.empty(n_topics, dtype=np.float64)
    theta = np.zeros(n_topics, dtype=np.float64)
    cdef double[::1] acc = theta

    for t in range(length):
        ndk[z[t]] += 1
    for it in range(n_iters):
        for t in range(length):
            w = words[t]
            ndk[z[t]] -= 1
            total = 0.0
            for k in range(n_topics):
                total += (ndk[k] + alpha) * phi_t[w, k]
                cum[k] = total
            target = u[it, t] * total
            k = 0
            while k < n_topics - 1 and cum[k] <= target:
                k += 1
            z[t] = <int>k
            ndk[k] += 1
        if it >= n_iters - window:
            for k in range(n_topics):
                acc[k] += (ndk[k] + alpha) / denom
    for k in range(n_topics):
        acc[k] = acc[k] / window
    return theta


def dcd_epoch(const double[:, ::1] X, const Py_ssize_t[::1] first,
              const Py_ssize_t[::1] second, const double[::1] qdiag,
              double[::1] alpha, double[::1] w, double C,
              const Py_ssize_t[::1] order):
    cdef Py_ssize_t n_pairs = order.shape[0]
    cdef Py_ssize_t dim = w.shape[0]
    cdef Py_ssize_t t, i, j, a, b
    cdef double grad, pgrad, old, new, delta
    cdef double worst = 0.0

    for t in range(n_pairs):
        i = order[t]
        if qdiag[i] <= 0.0:
            continue
        a = first[i]
        b = second[i]
        grad = 0.0
        for j in range(dim):
            grad += w[j] * (X[a, j] - X[b, j])
        grad -= 1.0
        old = alpha[i]
        if old == 0.0:
            pgrad = grad if grad < 0.0 else 0.0
        elif old == C:
            pgrad = grad if grad > 0.0 else 0.0
        else:
            pgrad = grad
        if fabs(pgrad) > worst:
            worst = fabs(pgrad)
        if fabs(pgrad) > 1e-12:
            new = old - grad / qdiag[i]
            if new < 0.0:
                new = 0.0
            elif new > C:
                new = C
            delta = new - old
            alpha[i] = new
            for j in range(dim):
                w[j] += delta * (X[a, j] - X[b, j])
    return worst
