# cython: language_level=3
"""Compiled tape interpreter and inner-loop kernels.

Transliteration of `_kernels_py` with C loops; operation order matches
the pure-Python twin instruction for instruction so both backends agree
to the last bit on IEEE hardware.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, cos, exp, isfinite, log, sin, sqrt


cdef int _run_tape(const int* ops, const int* arg, const double* consts,
                   int i0, int i1, const double* x, int n,
                   double* vs, double* gs, int gs_stride, int* bad) noexcept nogil:
    cdef int sp = -1
    cdef int i, j, a, op, am, q
    cdef double b, v, v0, va, dc, p, s, c
    cdef double* g
    cdef double* ga
    cdef double* gb
    for i in range(i0, i1):
        op = ops[i]
        a = arg[i]
        if op == 0:  # const
            sp += 1
            vs[sp] = consts[a]
            g = gs + sp * gs_stride
            for j in range(n):
                g[j] = 0.0
        elif op == 1:  # var
            sp += 1
            vs[sp] = x[a]
            g = gs + sp * gs_stride
            for j in range(n):
                g[j] = 0.0
            g[a] = 1.0
        elif op == 2:  # add
            b = vs[sp]
            gb = gs + sp * gs_stride
            sp -= 1
            vs[sp] = vs[sp] + b
            ga = gs + sp * gs_stride
            for j in range(n):
                ga[j] = ga[j] + gb[j]
        elif op == 3:  # sub
            b = vs[sp]
            gb = gs + sp * gs_stride
            sp -= 1
            vs[sp] = vs[sp] - b
            ga = gs + sp * gs_stride
            for j in range(n):
                ga[j] = ga[j] - gb[j]
        elif op == 4:  # mul
            b = vs[sp]
            gb = gs + sp * gs_stride
            sp -= 1
            va = vs[sp]
            vs[sp] = va * b
            ga = gs + sp * gs_stride
            for j in range(n):
                ga[j] = ga[j] * b + va * gb[j]
        elif op == 5:  # div
            b = vs[sp]
            gb = gs + sp * gs_stride
            sp -= 1
            if b == 0.0:
                bad[0] = i
                return 1
            v = vs[sp] / b
            vs[sp] = v
            ga = gs + sp * gs_stride
            for j in range(n):
                ga[j] = (ga[j] - v * gb[j]) / b
        elif op == 6:  # pow, integer exponent in a
            v0 = vs[sp]
            g = gs + sp * gs_stride
            if a == 0:
                vs[sp] = 1.0
                for j in range(n):
                    g[j] = 0.0
            else:
                if v0 == 0.0 and a < 0:
                    bad[0] = i
                    return 4
                am = -a if a < 0 else a
                p = 1.0
                for q in range(am - 1):
                    p = p * v0
                if a > 0:
                    vs[sp] = p * v0
                    dc = a * p
                else:
                    v = 1.0 / (p * v0)
                    vs[sp] = v
                    dc = a * v / v0
                for j in range(n):
                    g[j] = dc * g[j]
        elif op == 7:  # neg
            vs[sp] = -vs[sp]
            g = gs + sp * gs_stride
            for j in range(n):
                g[j] = -g[j]
        elif op == 8:  # exp
            v = exp(vs[sp])
            vs[sp] = v
            g = gs + sp * gs_stride
            for j in range(n):
                g[j] = v * g[j]
        elif op == 9:  # log
            v0 = vs[sp]
            if v0 <= 0.0:
                bad[0] = i
                return 2
            vs[sp] = log(v0)
            g = gs + sp * gs_stride
            for j in range(n):
                g[j] = g[j] / v0
        elif op == 10:  # sin
            v0 = vs[sp]
            vs[sp] = sin(v0)
            c = cos(v0)
            g = gs + sp * gs_stride
            for j in range(n):
                g[j] = c * g[j]
        elif op == 11:  # cos
            v0 = vs[sp]
            vs[sp] = cos(v0)
            s = -sin(v0)
            g = gs + sp * gs_stride
            for j in range(n):
                g[j] = s * g[j]
        else:  # sqrt
            v0 = vs[sp]
            if v0 <= 0.0:
                bad[0] = i
                return 3
            v = sqrt(v0)
            vs[sp] = v
            dc = 0.5 / v
            g = gs + sp * gs_stride
            for j in range(n):
                g[j] = dc * g[j]
        if not isfinite(vs[sp]):
            bad[0] = i
            return 5
    g = gs
    for j in range(n):
        if not isfinite(g[j]):
            bad[0] = i1 - 1
            return 5
    bad[0] = -1
    return 0


def eval_tape(cnp.ndarray[cnp.int32_t, ndim=1] ops,
              cnp.ndarray[cnp.int32_t, ndim=1] arg,
              cnp.ndarray[cnp.float64_t, ndim=1] consts,
              int start, int end,
              cnp.ndarray[cnp.float64_t, ndim=1] x,
              cnp.ndarray[cnp.float64_t, ndim=1] grad_out,
              int max_stack):
    """Evaluate one tape at x; writes the gradient into grad_out.

    Returns (status, bad_instr, value).
    """
    cdef int n = x.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vs = np.zeros(max_stack, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] gs = np.zeros((max_stack, n), dtype=np.float64)
    cdef int bad = -1
    cdef int status
    cdef int j
    status = _run_tape(<const int*> ops.data, <const int*> arg.data,
                       <const double*> consts.data, start, end,
                       <const double*> x.data, n,
                       <double*> vs.data, <double*> gs.data, n, &bad)
    if status:
        return status, bad, 0.0
    for j in range(n):
        grad_out[j] = gs[0, j]
    return 0, -1, vs[0]


cdef int _phik_at(const int* ops, const int* arg, const double* consts,
                  const int* starts, const int* obj_ps, const int* ineq_ps,
                  int n_eq, int p, int m, int T,
                  const double* fbar, const double* xbar, double k,
                  const double* x, int n,
                  double* vs, double* gs, double* values, double* grads,
                  double* d, int* bad, double* phi_out, double* phik_out) noexcept nogil:
    cdef int status, tp, l, i, j, jb, jstar, q, e0
    cdef double vbest, fl, phi, pen, kc, sq, dj, h
    cdef double* gt
    cdef double* gj
    for tp in range(T):
        status = _run_tape(ops, arg, consts, starts[tp], starts[tp + 1], x, n,
                           vs, gs, n, bad)
        if status:
            return status
        values[tp] = vs[0]
        gt = grads + tp * n
        for j in range(n):
            gt[j] = gs[j]

    phi = -INFINITY
    jstar = -1
    for l in range(p):
        vbest = -INFINITY
        jb = -1
        for j in range(obj_ps[l], obj_ps[l + 1]):
            if values[j] > vbest:
                vbest = values[j]
                jb = j
        fl = vbest - fbar[l]
        if fl > phi:
            phi = fl
            jstar = jb
    gt = grads + jstar * n
    for j in range(n):
        d[j] = gt[j]

    pen = 0.0
    for i in range(m):
        vbest = -INFINITY
        jb = -1
        for j in range(ineq_ps[i], ineq_ps[i + 1]):
            if values[j] > vbest:
                vbest = values[j]
                jb = j
        if vbest > 0.0:
            pen += vbest * vbest
            kc = k * vbest
            gj = grads + jb * n
            for j in range(n):
                d[j] += kc * gj[j]
    e0 = ineq_ps[m]
    for q in range(n_eq):
        h = values[e0 + q]
        pen += h * h
        kc = k * h
        gj = grads + (e0 + q) * n
        for j in range(n):
            d[j] += kc * gj[j]

    sq = 0.0
    for j in range(n):
        dj = x[j] - xbar[j]
        sq += dj * dj
        d[j] += dj
    phi_out[0] = phi
    phik_out[0] = phi + 0.5 * k * pen + 0.5 * sq
    bad[0] = -1
    return 0


def eval_phi_k(cnp.ndarray[cnp.int32_t, ndim=1] ops,
               cnp.ndarray[cnp.int32_t, ndim=1] arg,
               cnp.ndarray[cnp.float64_t, ndim=1] consts,
               cnp.ndarray[cnp.int32_t, ndim=1] starts,
               cnp.ndarray[cnp.int32_t, ndim=1] obj_ps,
               cnp.ndarray[cnp.int32_t, ndim=1] ineq_ps,
               int n_eq,
               cnp.ndarray[cnp.float64_t, ndim=1] fbar,
               cnp.ndarray[cnp.float64_t, ndim=1] xbar,
               double k,
               cnp.ndarray[cnp.float64_t, ndim=1] x,
               int max_stack):
    """Returns (status, bad_instr, phi, phi_k) at the point x."""
    cdef int n = x.shape[0]
    cdef int T = starts.shape[0] - 1
    cdef int p = obj_ps.shape[0] - 1
    cdef int m = ineq_ps.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vs = np.zeros(max_stack, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] gs = np.zeros((max_stack, n), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] values = np.zeros(T, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] grads = np.zeros((T, n), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] d = np.zeros(n, dtype=np.float64)
    cdef int bad = -1
    cdef double phi = 0.0
    cdef double phik = 0.0
    cdef int status
    status = _phik_at(<const int*> ops.data, <const int*> arg.data,
                      <const double*> consts.data, <const int*> starts.data,
                      <const int*> obj_ps.data, <const int*> ineq_ps.data,
                      n_eq, p, m, T,
                      <const double*> fbar.data, <const double*> xbar.data, k,
                      <const double*> x.data, n,
                      <double*> vs.data, <double*> gs.data,
                      <double*> values.data, <double*> grads.data,
                      <double*> d.data, &bad, &phi, &phik)
    if status:
        return status, bad, 0.0, 0.0
    return 0, -1, phi, phik


def subgrad_round(cnp.ndarray[cnp.int32_t, ndim=1] ops,
                  cnp.ndarray[cnp.int32_t, ndim=1] arg,
                  cnp.ndarray[cnp.float64_t, ndim=1] consts,
                  cnp.ndarray[cnp.int32_t, ndim=1] starts,
                  cnp.ndarray[cnp.int32_t, ndim=1] obj_ps,
                  cnp.ndarray[cnp.int32_t, ndim=1] ineq_ps,
                  int n_eq,
                  cnp.ndarray[cnp.float64_t, ndim=1] fbar,
                  cnp.ndarray[cnp.float64_t, ndim=1] xbar,
                  double k, double delta, double c, int L, int tail_from,
                  cnp.ndarray[cnp.float64_t, ndim=1] x_io,
                  cnp.ndarray[cnp.float64_t, ndim=1] x_best_out,
                  cnp.ndarray[cnp.float64_t, ndim=1] x_avg_out,
                  int max_stack):
    """One restart round of normalized projected subgradient descent.

    See the pure-Python twin for the contract; returns
    (status, bad_instr, f_best, halted, n_done).
    """
    cdef int n = x_io.shape[0]
    cdef int T = starts.shape[0] - 1
    cdef int p = obj_ps.shape[0] - 1
    cdef int m = ineq_ps.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vs = np.zeros(max_stack, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] gs = np.zeros((max_stack, n), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] values = np.zeros(T, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] grads = np.zeros((T, n), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dbuf = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xb = x_io.copy()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] best = x_io.copy()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] avg = np.zeros(n, dtype=np.float64)

    cdef double* x = <double*> xb.data
    cdef double* xbest = <double*> best.data
    cdef double* av = <double*> avg.data
    cdef double* d = <double*> dbuf.data
    cdef const double* xb_ref = <const double*> xbar.data

    cdef int bad = -1
    cdef int status = 0
    cdef int halted = 0
    cdef int n_avg = 0
    cdef int n_done = 0
    cdef int t, j
    cdef double phi = 0.0
    cdef double phik = 0.0
    cdef double f_best = INFINITY
    cdef double nd, step, r2, r, sc, dj

    with nogil:
        for t in range(1, L + 1):
            status = _phik_at(<const int*> ops.data, <const int*> arg.data,
                              <const double*> consts.data, <const int*> starts.data,
                              <const int*> obj_ps.data, <const int*> ineq_ps.data,
                              n_eq, p, m, T,
                              <const double*> fbar.data, xb_ref, k,
                              <const double*> x, n,
                              <double*> vs.data, <double*> gs.data,
                              <double*> values.data, <double*> grads.data,
                              d, &bad, &phi, &phik)
            if status:
                break
            n_done = t
            if phik < f_best:
                f_best = phik
                for j in range(n):
                    xbest[j] = x[j]
            nd = 0.0
            for j in range(n):
                nd += d[j] * d[j]
            nd = sqrt(nd)
            if nd == 0.0:
                halted = 1
                break
            step = c / sqrt(<double> t) / nd
            for j in range(n):
                x[j] = x[j] - step * d[j]
            r2 = 0.0
            for j in range(n):
                dj = x[j] - xb_ref[j]
                r2 += dj * dj
            r = sqrt(r2)
            if r > delta:
                sc = delta / r
                for j in range(n):
                    x[j] = xb_ref[j] + sc * (x[j] - xb_ref[j])
            if t >= tail_from:
                for j in range(n):
                    av[j] += x[j]
                n_avg += 1

    for j in range(n):
        x_io[j] = xb[j]
    if status:
        return status, bad, f_best, halted, n_done
    for j in range(n):
        x_best_out[j] = best[j]
        x_avg_out[j] = avg[j] / n_avg if n_avg > 0 else xb[j]
    return 0, -1, f_best, halted, n_done
