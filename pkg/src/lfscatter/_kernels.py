"""In-place numba kernels on flat complex128 amplitude arrays.

Bit ``b`` of an index is the qubit at position ``n - 1 - b`` in rendered strings.
Every kernel mutates ``psi`` and allocates only per-fiber scratch, so a 27-qubit
state (2 GiB) fits with no full-size temporaries.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def parity(x):
    p = 0
    while x:
        p ^= 1
        x &= x - 1
    return p


@njit(cache=True)
def apply_matrix(psi, offsets, tmask, mat, cmask, cval):
    """Dense matrix on arbitrary target bits; ``offsets[j]`` places sub-index j."""
    d = offsets.shape[0]
    buf = np.empty(d, dtype=np.complex128)
    for i in range(psi.shape[0]):
        if i & tmask:
            continue
        if (i & cmask) != cval:
            continue
        for j in range(d):
            buf[j] = psi[i | offsets[j]]
        for r in range(d):
            acc = 0j
            for c in range(d):
                acc += mat[r, c] * buf[c]
            psi[i | offsets[r]] = acc


@njit(cache=True)
def apply_pauli(psi, xmask, zmask, coeff, cmask, cval):
    """coeff * X^x Z^z (with Y absorbed into coeff = phase * i^{#Y}) on controlled indices.

    P|b> = coeff (-1)^{popcount(b & z)} |b ^ x>.
    """
    n = psi.shape[0]
    if xmask == 0:
        for i in range(n):
            if (i & cmask) != cval:
                continue
            if parity(i & zmask):
                psi[i] = -coeff * psi[i]
            else:
                psi[i] = coeff * psi[i]
        return
    hb = 1
    while hb <= xmask:
        hb <<= 1
    hb >>= 1
    for i in range(n):
        if i & hb:
            continue
        if (i & cmask) != cval:
            continue
        j = i ^ xmask
        a = psi[i]
        b = psi[j]
        pi = -coeff if parity(i & zmask) else coeff
        pj = -coeff if parity(j & zmask) else coeff
        psi[i] = pj * b
        psi[j] = pi * a


@njit(cache=True)
def householder(psi, offsets, tmask, u):
    """(1 - 2|u><u|) on the target bits; u is real with unit norm."""
    d = offsets.shape[0]
    for i in range(psi.shape[0]):
        if i & tmask:
            continue
        s = 0j
        for j in range(d):
            if u[j] != 0.0:
                s += u[j] * psi[i | offsets[j]]
        if s == 0:
            continue
        s *= 2.0
        for j in range(d):
            if u[j] != 0.0:
                psi[i | offsets[j]] -= u[j] * s


@njit(cache=True)
def phase_on_mask(psi, mask, value, phase):
    """Multiply amplitudes whose ``mask`` bits equal ``value`` by ``phase``."""
    for i in range(psi.shape[0]):
        if (i & mask) == value:
            psi[i] *= phase


@njit(cache=True)
def _fiber_matrix(buf, tmp, offsets, tmask, mat):
    d = offsets.shape[0]
    n = buf.shape[0]
    for i in range(n):
        if i & tmask:
            continue
        for j in range(d):
            tmp[j] = buf[i | offsets[j]]
        for r in range(d):
            acc = 0j
            for c in range(d):
                acc += mat[r, c] * tmp[c]
            buf[i | offsets[r]] = acc


@njit(cache=True)
def _fiber_qft(buf, tmp, qft_offsets, qft_tmasks, qft_mat):
    for b in range(qft_offsets.shape[0]):
        _fiber_matrix(buf, tmp, qft_offsets[b], qft_tmasks[b], qft_mat)


@njit(cache=True)
def _fiber_pauli(buf, out, xmask, zmask, coeff):
    n = buf.shape[0]
    for i in range(n):
        if parity(i & zmask):
            out[i ^ xmask] = -coeff * buf[i]
        else:
            out[i ^ xmask] = coeff * buf[i]
    for i in range(n):
        buf[i] = out[i]


@njit(cache=True)
def select(psi, n_sys, K, y0_shift, yk_shifts, yk_width, xmasks, zmasks, coeffs, conj,
           qft_offsets, qft_tmasks, qft_fwd, qft_inv, adjoint):
    """Fused LCU select over every ancilla configuration.

    For slot k (1-based) the y0 qubit k contributes a factor -i when set and,
    if ``y_k`` holds a valid term index, the term unitary. Interaction terms are
    conjugated by the shifted QFT; adjacent transforms are fused per fiber.
    Term unitaries are Hermitian (signed Pauli strings), so ``adjoint`` only
    reverses the slot order and uses +i.
    """
    dim = 1 << n_sys
    n_anc = psi.shape[0] >> n_sys
    L = xmasks.shape[0]
    buf = np.empty(dim, dtype=np.complex128)
    out = np.empty(dim, dtype=np.complex128)
    tmp = np.empty(max(qft_fwd.shape[0], 1), dtype=np.complex128)
    seq = np.empty(max(K, 1), dtype=np.int64)
    ymask = (1 << yk_width) - 1
    powers = np.empty(4, dtype=np.complex128)
    powers[0] = 1.0
    powers[1] = 1j if adjoint else -1j
    powers[2] = -1.0
    powers[3] = -1j if adjoint else 1j
    for a in range(n_anc):
        n_active = 0
        n_terms = 0
        for k in range(K):
            # y0 qubit k (0-based) sits at bit y0_shift + K - 1 - k
            if (a >> (y0_shift - n_sys + K - 1 - k)) & 1:
                n_active += 1
                ell = (a >> (yk_shifts[k] - n_sys)) & ymask
                if ell < L:
                    seq[n_terms] = ell
                    n_terms += 1
        if n_active == 0:
            continue
        base = a << n_sys
        nonzero = False
        for i in range(dim):
            if psi[base + i] != 0:
                nonzero = True
                break
        if not nonzero:
            continue
        phase = powers[n_active % 4]
        if n_terms == 0:
            for i in range(dim):
                psi[base + i] *= phase
            continue
        for i in range(dim):
            buf[i] = psi[base + i]
        in_coord = False
        for t in range(n_terms):
            ell = seq[n_terms - 1 - t] if adjoint else seq[t]
            if conj[ell]:
                if not in_coord:
                    _fiber_qft(buf, tmp, qft_offsets, qft_tmasks, qft_fwd)
                    in_coord = True
            elif in_coord:
                _fiber_qft(buf, tmp, qft_offsets, qft_tmasks, qft_inv)
                in_coord = False
            _fiber_pauli(buf, out, xmasks[ell], zmasks[ell], coeffs[ell])
        if in_coord:
            _fiber_qft(buf, tmp, qft_offsets, qft_tmasks, qft_inv)
        for i in range(dim):
            psi[base + i] = phase * buf[i]


@njit(cache=True)
def trotter_factor(psi, xmask, zmask, coeff, cos_t, sin_t):
    """exp(-i theta sigma) = cos(theta) - i sin(theta) sigma for an involutory string sigma.

    ``coeff`` is the string's phase (i^{#Y}); ``sin_t`` carries the sign of theta.
    """
    n = psi.shape[0]
    if xmask == 0:
        for i in range(n):
            s = -coeff if parity(i & zmask) else coeff
            psi[i] = (cos_t - 1j * sin_t * s) * psi[i]
        return
    hb = 1
    while hb <= xmask:
        hb <<= 1
    hb >>= 1
    for i in range(n):
        if i & hb:
            continue
        j = i ^ xmask
        a = psi[i]
        b = psi[j]
        pi = -coeff if parity(i & zmask) else coeff
        pj = -coeff if parity(j & zmask) else coeff
        psi[i] = cos_t * a - 1j * sin_t * pj * b
        psi[j] = cos_t * b - 1j * sin_t * pi * a
