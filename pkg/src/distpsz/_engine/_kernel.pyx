# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sample loop for the centralized and diffusion controllers.

Mirrors ``_kernel_py.simulate`` exactly in semantics; see that module for
the argument contract.
"""

import numpy as np

from libc.math cimport fabs, isfinite

cdef enum:
    MODE_CENTRAL = 0
    MODE_FULL = 1
    MODE_EFFICIENT = 2


def simulate(const double[::1] x, w0, const double[:, :, ::1] hb, const double[:, :, ::1] hd,
             const double[:, :, ::1] hb_est, const double[:, :, ::1] hd_est,
             Py_ssize_t src, Py_ssize_t delay, double kappa, double step, int mode,
             const Py_ssize_t[::1] nbr_ptr, const Py_ssize_t[::1] nbr_idx,
             const double[::1] alpha, bint record, double bound):
    cdef Py_ssize_t N = x.shape[0]
    cdef double[:, ::1] w = np.array(w0, dtype=np.float64, order="C")
    cdef Py_ssize_t L = w.shape[0], K = w.shape[1]
    cdef Py_ssize_t M = hb.shape[0], J = hb.shape[2]
    cdef Py_ssize_t P = max(K, J + delay)

    xpad_np = np.zeros(P + N)
    xpad_np[P:] = x
    cdef double[::1] xpad = xpad_np
    energy_np = np.zeros((N, 4))
    cdef double[:, ::1] energy = energy_np
    traj_np = np.zeros((N if record else 0, L, K))
    cdef double[:, :, ::1] traj = traj_np

    cdef double[:, ::1] ubuf = np.zeros((L, 2 * J))
    cdef double[:, :, :, ::1] rbuf = np.zeros((2, M, L, 2 * K))
    cdef double[:, :, ::1] phi = np.zeros((M, L, K))
    cdef double[::1] pb = np.zeros(M), pd = np.zeros(M), pt = np.zeros(M)
    cdef double[::1] cb = np.zeros(M), cd = np.zeros(M)

    cdef double kb = step * kappa
    cdef double kd = step * (1.0 - kappa)
    cdef double inv_m = 1.0 / M
    cdef Py_ssize_t upos = 0, rpos = 0
    cdef Py_ssize_t n, l, m, j, k, i, xb
    cdef double acc, accd, v, e, e2, pt2, pb2, pd2
    cdef int status = 0
    cdef Py_ssize_t fail_iter = -1, fail_node = -1

    with nogil:
        for n in range(N):
            xb = P + n
            # loudspeaker drive signals
            upos = (upos - 1 + J) % J
            for l in range(L):
                acc = 0.0
                for k in range(K):
                    acc = acc + w[l, k] * xpad[xb - k]
                ubuf[l, upos] = acc
                ubuf[l, upos + J] = acc
            # acoustic propagation through the true plants
            for m in range(M):
                acc = 0.0
                accd = 0.0
                for l in range(L):
                    for j in range(J):
                        v = ubuf[l, upos + j]
                        acc = acc + hb[m, l, j] * v
                        accd = accd + hd[m, l, j] * v
                pb[m] = acc
                pd[m] = accd
                acc = 0.0
                for j in range(J):
                    acc = acc + hb_est[m, src, j] * xpad[xb - delay - j]
                pt[m] = acc
            # filtered references through the plant model
            rpos = (rpos - 1 + K) % K
            for m in range(M):
                for l in range(L):
                    acc = 0.0
                    accd = 0.0
                    for j in range(J):
                        v = xpad[xb - j]
                        acc = acc + hb_est[m, l, j] * v
                        accd = accd + hd_est[m, l, j] * v
                    rbuf[0, m, l, rpos] = acc
                    rbuf[0, m, l, rpos + K] = acc
                    rbuf[1, m, l, rpos] = accd
                    rbuf[1, m, l, rpos + K] = accd
            e2 = 0.0
            pt2 = 0.0
            pb2 = 0.0
            pd2 = 0.0
            for m in range(M):
                e = pb[m] - pt[m]
                e2 = e2 + e * e
                pt2 = pt2 + pt[m] * pt[m]
                pb2 = pb2 + pb[m] * pb[m]
                pd2 = pd2 + pd[m] * pd[m]
                cb[m] = kb * e
                cd[m] = kd * pd[m]
            energy[n, 0] = e2
            energy[n, 1] = pt2
            energy[n, 2] = pb2
            energy[n, 3] = pd2

            if mode == MODE_CENTRAL:
                for l in range(L):
                    for k in range(K):
                        acc = 0.0
                        for m in range(M):
                            acc = acc + cb[m] * rbuf[0, m, l, rpos + k] + cd[m] * rbuf[1, m, l, rpos + k]
                        w[l, k] = w[l, k] - acc
            elif mode == MODE_FULL:
                for m in range(M):
                    for l in range(L):
                        for k in range(K):
                            phi[m, l, k] = w[l, k] - (cb[m] * rbuf[0, m, l, rpos + k]
                                                      + cd[m] * rbuf[1, m, l, rpos + k])
                for l in range(L):
                    for k in range(K):
                        acc = 0.0
                        for m in range(M):
                            acc = acc + phi[m, l, k]
                        w[l, k] = acc * inv_m
            else:
                # node m adapts the filters of its neighbourhood (symmetric, so
                # the nodes estimating filter l are exactly the members of N_l)
                for l in range(L):
                    for i in range(nbr_ptr[l], nbr_ptr[l + 1]):
                        m = nbr_idx[i]
                        for k in range(K):
                            phi[m, l, k] = w[l, k] - (cb[m] * rbuf[0, m, l, rpos + k]
                                                      + cd[m] * rbuf[1, m, l, rpos + k])
                for l in range(L):
                    for k in range(K):
                        acc = 0.0
                        for i in range(nbr_ptr[l], nbr_ptr[l + 1]):
                            acc = acc + alpha[i] * phi[nbr_idx[i], l, k]
                        w[l, k] = acc

            for l in range(L):
                for k in range(K):
                    v = w[l, k]
                    if not isfinite(v) or fabs(v) > bound:
                        status = 1
                        fail_node = l
                        break
                if status:
                    break
            if status:
                fail_iter = n
                break
            if record:
                for l in range(L):
                    for k in range(K):
                        traj[n, l, k] = w[l, k]

    return np.asarray(w), energy_np, traj_np, status, fail_iter, fail_node
