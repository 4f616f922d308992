# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled lattice kernels.

Same array conventions and function contracts as the pure-numpy fallback
(`_kernel_py`); see its module docstring. Viterbi candidate values are
computed as ``(score + trans) + delta`` so reconstruction code can compare
recomputed candidates exactly.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, exp, log1p

cnp.import_array()

ctypedef cnp.float64_t f64
ctypedef cnp.int64_t i64


cdef inline double logaddexp(double a, double b) noexcept nogil:
    if a == -INFINITY:
        return b
    if b == -INFINITY:
        return a
    if a >= b:
        return a + log1p(exp(b - a))
    return b + log1p(exp(a - b))


def forward(cnp.ndarray[f64, ndim=2] score, cnp.ndarray[i64, ndim=2] span_id,
            cnp.ndarray[i64, ndim=2] label_uv, cnp.ndarray[f64, ndim=2] trans,
            double tau_null):
    """Forward log-sums. Returns (alpha, log partition)."""
    cdef Py_ssize_t n = span_id.shape[0], cap = span_id.shape[1]
    cdef Py_ssize_t m = trans.shape[1], nl = label_uv.shape[0]
    cdef cnp.ndarray[f64, ndim=2] alpha = np.full((n + 1, m + 1), -INFINITY)
    cdef cnp.ndarray[f64, ndim=1] bvec = np.empty(m)
    cdef Py_ssize_t b, c, e, k, l, u, v, sid
    cdef double acc, base

    alpha[0, m] = 0.0
    for b in range(n):
        for u in range(m):
            acc = -INFINITY
            for c in range(m + 1):
                acc = logaddexp(acc, alpha[b, c] + trans[c, u])
            bvec[u] = acc
        for k in range(min(cap, n - b)):
            e = b + k
            sid = span_id[b, k]
            if k == 0:
                base = score[sid, 0] + tau_null
                for c in range(m + 1):
                    alpha[b + 1, c] = logaddexp(alpha[b + 1, c],
                                                alpha[b, c] + base)
            for l in range(1, nl):
                u = label_uv[l, 0]
                v = label_uv[l, 1]
                alpha[e + 1, v] = logaddexp(alpha[e + 1, v],
                                            bvec[u] + score[sid, l])
    acc = -INFINITY
    for c in range(m + 1):
        acc = logaddexp(acc, alpha[n, c])
    return alpha, acc


def backward(cnp.ndarray[f64, ndim=2] score, cnp.ndarray[i64, ndim=2] span_id,
             cnp.ndarray[i64, ndim=2] label_uv,
             cnp.ndarray[f64, ndim=2] trans, double tau_null):
    """Backward log-sums: beta[pos, c] over completions from pos."""
    cdef Py_ssize_t n = span_id.shape[0], cap = span_id.shape[1]
    cdef Py_ssize_t m = trans.shape[1], nl = label_uv.shape[0]
    cdef cnp.ndarray[f64, ndim=2] beta = np.full((n + 1, m + 1), -INFINITY)
    cdef cnp.ndarray[f64, ndim=1] cvec = np.empty(m)
    cdef Py_ssize_t b, c, e, k, l, u, sid
    cdef double acc, base

    for c in range(m + 1):
        beta[n, c] = 0.0
    for b in range(n - 1, -1, -1):
        for c in range(m + 1):
            beta[b, c] = -INFINITY
        for k in range(min(cap, n - b)):
            e = b + k
            sid = span_id[b, k]
            if k == 0:
                base = score[sid, 0] + tau_null
                for c in range(m + 1):
                    beta[b, c] = logaddexp(beta[b, c], base + beta[b + 1, c])
            for u in range(m):
                cvec[u] = -INFINITY
            for l in range(1, nl):
                u = label_uv[l, 0]
                cvec[u] = logaddexp(cvec[u],
                                    score[sid, l] + beta[e + 1, label_uv[l, 1]])
            for c in range(m + 1):
                acc = -INFINITY
                for u in range(m):
                    acc = logaddexp(acc, trans[c, u] + cvec[u])
                beta[b, c] = logaddexp(beta[b, c], acc)
    return beta


def posteriors(cnp.ndarray[f64, ndim=2] score,
               cnp.ndarray[i64, ndim=2] span_id,
               cnp.ndarray[i64, ndim=2] label_uv,
               cnp.ndarray[f64, ndim=2] trans, double tau_null,
               cnp.ndarray[i64, ndim=2] bucket_ids,
               cnp.ndarray[f64, ndim=2] alpha, cnp.ndarray[f64, ndim=2] beta,
               double log_z):
    """Per-(span, label) posteriors and expected transition-bucket counts."""
    cdef Py_ssize_t n = span_id.shape[0], cap = span_id.shape[1]
    cdef Py_ssize_t m = trans.shape[1], nl = label_uv.shape[0]
    cdef cnp.ndarray[f64, ndim=2] post = np.zeros((score.shape[0],
                                                   score.shape[1]))
    cdef cnp.ndarray[f64, ndim=1] counts = np.zeros(15)
    cdef cnp.ndarray[f64, ndim=1] bvec = np.empty(m)
    cdef cnp.ndarray[f64, ndim=1] cvec = np.empty(m)
    cdef Py_ssize_t b, c, e, k, l, u, sid
    cdef double acc, base, null_total

    null_total = 0.0
    for b in range(n):
        for u in range(m):
            acc = -INFINITY
            for c in range(m + 1):
                acc = logaddexp(acc, alpha[b, c] + trans[c, u])
            bvec[u] = acc
        for k in range(min(cap, n - b)):
            e = b + k
            sid = span_id[b, k]
            if k == 0:
                base = score[sid, 0] + tau_null
                acc = -INFINITY
                for c in range(m + 1):
                    acc = logaddexp(acc, alpha[b, c] + base + beta[b + 1, c])
                post[sid, 0] = exp(acc - log_z)
                null_total += post[sid, 0]
            for l in range(1, nl):
                post[sid, l] = exp(bvec[label_uv[l, 0]] + score[sid, l]
                                   + beta[e + 1, label_uv[l, 1]] - log_z)
            for u in range(m):
                cvec[u] = -INFINITY
            for l in range(1, nl):
                u = label_uv[l, 0]
                cvec[u] = logaddexp(cvec[u],
                                    score[sid, l] + beta[e + 1, label_uv[l, 1]])
            for c in range(m + 1):
                for u in range(m):
                    counts[bucket_ids[c, u]] += exp(
                        alpha[b, c] + trans[c, u] + cvec[u] - log_z)
    counts[14] = null_total
    return post, counts


def viterbi_delta(cnp.ndarray[f64, ndim=2] score,
                  cnp.ndarray[i64, ndim=2] span_id,
                  cnp.ndarray[i64, ndim=2] label_uv,
                  cnp.ndarray[f64, ndim=2] trans, double tau_null):
    """Max-score-to-completion table delta[pos, c]."""
    cdef Py_ssize_t n = span_id.shape[0], cap = span_id.shape[1]
    cdef Py_ssize_t m = trans.shape[1], nl = label_uv.shape[0]
    cdef cnp.ndarray[f64, ndim=2] delta = np.full((n + 1, m + 1), -INFINITY)
    cdef Py_ssize_t b, c, e, k, l, sid
    cdef double best, cand

    for c in range(m + 1):
        delta[n, c] = 0.0
    for b in range(n - 1, -1, -1):
        for c in range(m + 1):
            best = -INFINITY
            for k in range(min(cap, n - b)):
                e = b + k
                sid = span_id[b, k]
                if k == 0:
                    cand = (score[sid, 0] + tau_null) + delta[b + 1, c]
                    if cand > best:
                        best = cand
                for l in range(1, nl):
                    cand = (score[sid, l] + trans[c, label_uv[l, 0]]) \
                        + delta[e + 1, label_uv[l, 1]]
                    if cand > best:
                        best = cand
            delta[b, c] = best
    return delta
