"""Pure-numpy sample loop; fallback when the compiled kernel is unavailable.

``simulate`` runs ``N`` iterations of one controller and returns
``(w, energy, traj, status, fail_iter, fail_node)``:

* ``x`` -- input signal, shape ``(N,)``.
* ``w0`` -- initial filters ``(L, K)``.
* ``hb, hd`` -- true plants ``(M, L, J)``; ``hb_est, hd_est`` the model.
* ``src, delay`` -- target loudspeaker and delay in samples.
* ``step`` -- mu (centralized / efficient) or mu1 (full).
* ``mode`` -- 0 centralized, 1 distributed-full, 2 distributed-efficient.
* ``nbr_ptr, nbr_idx, alpha`` -- CSR neighbourhoods: the nodes that
  estimate filter ``l`` and the weight of each estimate.
* ``record`` -- keep the filter bank after every iteration in ``traj``.
* ``bound`` -- divergence threshold on ``|tap|``.

``energy[n]`` holds ``sum_m e_m^2, sum_m p_T^2, sum_m p_B^2, sum_m p_D^2``.
On divergence ``status`` is 1 and the loop stops at ``fail_iter``.
"""

import numpy as np

MODE_CENTRAL, MODE_FULL, MODE_EFFICIENT = 0, 1, 2


def simulate(x, w0, hb, hd, hb_est, hd_est, src, delay, kappa, step, mode,
             nbr_ptr, nbr_idx, alpha, record, bound):
    x = np.asarray(x, dtype=np.float64)
    w = np.array(w0, dtype=np.float64)
    L, K = w.shape
    M, _, J = hb.shape
    N = x.size
    P = max(K, J + delay)
    xpad = np.concatenate([np.zeros(P), x])

    # reversed taps so that oldest-first slices of xpad can be used directly
    hbr = hb.reshape(M * L, J)
    hdr = hd.reshape(M * L, J)
    est_rev = np.concatenate([hb_est.reshape(M * L, J), hd_est.reshape(M * L, J)])[:, ::-1].copy()
    tgt_rev = hb_est[:, src, ::-1].copy()

    energy = np.zeros((N, 4))
    traj = np.zeros((N if record else 0, L, K))
    ubuf = np.zeros((L, 2 * J))
    rbuf = np.zeros((2 * M * L, 2 * K))
    upos = rpos = 0
    kb = step * kappa
    kd = step * (1.0 - kappa)

    A = np.zeros((M, L))
    mask = np.zeros((M, L), dtype=bool)
    if mode == MODE_EFFICIENT:
        for l in range(L):
            for i in range(nbr_ptr[l], nbr_ptr[l + 1]):
                A[nbr_idx[i], l] = alpha[i]
                mask[nbr_idx[i], l] = True

    for n in range(N):
        xb = P + n
        xwin = xpad[xb - K + 1: xb + 1][::-1]
        upos = (upos - 1) % J
        u = w @ xwin
        ubuf[:, upos] = u
        ubuf[:, upos + J] = u
        uwin = ubuf[:, upos: upos + J]
        pb = np.einsum("mlj,lj->m", hb, uwin)
        pd = np.einsum("mlj,lj->m", hd, uwin)
        pt = tgt_rev @ xpad[xb - delay - J + 1: xb - delay + 1]

        rpos = (rpos - 1) % K
        r = est_rev @ xpad[xb - J + 1: xb + 1]
        rbuf[:, rpos] = r
        rbuf[:, rpos + K] = r
        rwin = rbuf[:, rpos: rpos + K].reshape(2, M, L, K)

        e = pb - pt
        energy[n] = (e @ e, pt @ pt, pb @ pb, pd @ pd)
        cb = kb * e
        cd = kd * pd
        grad = cb[:, None, None] * rwin[0] + cd[:, None, None] * rwin[1]

        if mode == MODE_CENTRAL:
            w = w - grad.sum(axis=0)
        elif mode == MODE_FULL:
            phi = w[None] - grad
            w = phi.sum(axis=0) / M
        else:
            phi = np.where(mask[:, :, None], w[None] - grad, 0.0)
            w = np.einsum("ml,mlk->lk", A, phi)

        bad = ~np.isfinite(w) | (np.abs(w) > bound)
        if bad.any():
            node = int(np.flatnonzero(bad.any(axis=1))[0])
            return w, energy, traj, 1, n, node
        if record:
            traj[n] = w
    return w, energy, traj, 0, -1, -1
