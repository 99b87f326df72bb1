"""Pure-Python versions of the compiled kernels.

Each function mirrors its counterpart in ``_ckernels.pyx`` operation for
operation, so both backends give bitwise-identical results for the same
inputs. Arrays passed in for in-place update are written back before return.
"""

import numpy as np


def edit_counts(ref, hyp):
    ref = ref.tolist()
    hyp = hyp.tolist()
    n, m = len(ref), len(hyp)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        row, prev = d[i], d[i - 1]
        r = ref[i - 1]
        for j in range(1, m + 1):
            best = prev[j - 1] + (r != hyp[j - 1])
            cand = row[j - 1] + 1
            if cand < best:
                best = cand
            cand = prev[j] + 1
            if cand < best:
                best = cand
            row[j] = best

    subs = ins = dels = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            mismatch = int(ref[i - 1] != hyp[j - 1])
            if d[i][j] == d[i - 1][j - 1] + mismatch:
                subs += mismatch
                i -= 1
                j -= 1
                continue
        if j > 0 and d[i][j] == d[i][j - 1] + 1:
            ins += 1
            j -= 1
        else:
            dels += 1
            i -= 1
    return subs, ins, dels


def lda_sweep(words, docs, z, ndk, nkw, nk, alpha, beta, u):
    n_topics = nk.shape[0]
    wbeta = nkw.shape[1] * beta
    words_l, docs_l, u_l = words.tolist(), docs.tolist(), u.tolist()
    z_l, ndk_l, nkw_l, nk_l = z.tolist(), ndk.tolist(), nkw.tolist(), nk.tolist()
    cum = [0.0] * n_topics
    last = n_topics - 1

    for t in range(len(words_l)):
        w = words_l[t]
        doc = ndk_l[docs_l[t]]
        k = z_l[t]
        doc[k] -= 1
        nkw_l[k][w] -= 1
        nk_l[k] -= 1
        total = 0.0
        for k in range(n_topics):
            total += (doc[k] + alpha) * (nkw_l[k][w] + beta) / (nk_l[k] + wbeta)
            cum[k] = total
        target = u_l[t] * total
        k = 0
        while k < last and cum[k] <= target:
            k += 1
        z_l[t] = k
        doc[k] += 1
        nkw_l[k][w] += 1
        nk_l[k] += 1

    z[:] = z_l
    ndk[:] = ndk_l
    nkw[:] = nkw_l
    nk[:] = nk_l


def infer_doc(words, phi_t, z, alpha, u, window):
    length = words.shape[0]
    n_topics = phi_t.shape[1]
    n_iters = u.shape[0]
    words_l, z_l, u_l = words.tolist(), z.tolist(), u.tolist()
    rows = [phi_t[w].tolist() for w in words_l]
    denom = length + n_topics * alpha
    ndk = [0] * n_topics
    acc = [0.0] * n_topics
    cum = [0.0] * n_topics
    last = n_topics - 1

    for k in z_l:
        ndk[k] += 1
    for it in range(n_iters):
        u_it = u_l[it]
        for t in range(length):
            row = rows[t]
            ndk[z_l[t]] -= 1
            total = 0.0
            for k in range(n_topics):
                total += (ndk[k] + alpha) * row[k]
                cum[k] = total
            target = u_it[t] * total
            k = 0
            while k < last and cum[k] <= target:
                k += 1
            z_l[t] = k
            ndk[k] += 1
        if it >= n_iters - window:
            for k in range(n_topics):
                acc[k] += (ndk[k] + alpha) / denom
    z[:] = z_l
    return np.array([a / window for a in acc], dtype=np.float64)


def dcd_epoch(X, first, second, qdiag, alpha, w, C, order):
    rows = X.tolist()
    first_l, second_l, q_l = first.tolist(), second.tolist(), qdiag.tolist()
    alpha_l, w_l = alpha.tolist(), w.tolist()
    dims = range(len(w_l))
    worst = 0.0

    for i in order.tolist():
        if q_l[i] <= 0.0:
            continue
        xa, xb = rows[first_l[i]], rows[second_l[i]]
        grad = 0.0
        for j in dims:
            grad += w_l[j] * (xa[j] - xb[j])
        grad -= 1.0
        old = alpha_l[i]
        if old == 0.0:
            pgrad = grad if grad < 0.0 else 0.0
        elif old == C:
            pgrad = grad if grad > 0.0 else 0.0
        else:
            pgrad = grad
        if abs(pgrad) > worst:
            worst = abs(pgrad)
        if abs(pgrad) > 1e-12:
            new = old - grad / q_l[i]
            if new < 0.0:
                new = 0.0
            elif new > C:
                new = C
            delta = new - old
            alpha_l[i] = new
            for j in dims:
                w_l[j] += delta * (xa[j] - xb[j])

    alpha[:] = alpha_l
    w[:] = w_l
    return worst
