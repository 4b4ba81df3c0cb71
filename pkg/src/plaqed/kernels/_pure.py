"""Pure-numpy kernel backend.

Configurations are uint64 words, bit s = 1 meaning spin-up at site s.
All functions are vectorized over the configuration axis; semantics match
the compiled backend in ``_fast.pyx`` exactly (up to the ordering of the
generated matrix-element branches, which callers must not rely on).
"""

import numpy as np

_ONE = np.uint64(1)

KIND_ID = 0
KIND_TRANS = 1
KIND_HB = 2
KIND_DP = 3
KIND_PP = 4


def translate_configs(configs, perm):
    """Apply a site permutation to bit words: bit perm[s] of the result
    equals bit s of the input."""
    configs = np.asarray(configs, dtype=np.uint64)
    out = np.zeros_like(configs)
    for s, d in enumerate(perm):
        out |= ((configs >> np.uint64(s)) & _ONE) << np.uint64(d)
    return out


def orbit_minimize(configs, perms):
    """Minimum of each configuration over the permutation rows.

    Returns (min_config, t_idx) where t_idx is the first row index
    achieving the minimum.
    """
    configs = np.asarray(configs, dtype=np.uint64)
    best = translate_configs(configs, perms[0])
    t_idx = np.zeros(configs.shape[0], dtype=np.int64)
    for t in range(1, len(perms)):
        cand = translate_configs(configs, perms[t])
        upd = cand < best
        best[upd] = cand[upd]
        t_idx[upd] = t
    return best, t_idx


def _pair_mask(i, j):
    return np.uint64((1 << int(i)) | (1 << int(j)))


def _swap_branch(cfgs, i, j):
    """Transposition T_ij on each word: (result, differ-mask)."""
    bi = (cfgs >> np.uint64(i)) & _ONE
    bj = (cfgs >> np.uint64(j)) & _ONE
    differ = bi != bj
    out = np.where(differ, cfgs ^ _pair_mask(i, j), cfgs)
    return out, differ


def expand_terms(configs, kinds, sites, coefs):
    """Generate matrix-element branches for every (config, term) pair.

    Returns (src, dst, amp): for each branch, O|configs[src]> contains
    amp * |dst>.  Diagonal branches have dst == configs[src].
    """
    configs = np.asarray(configs, dtype=np.uint64)
    n = configs.shape[0]
    idx = np.arange(n, dtype=np.int64)
    src_parts, dst_parts, amp_parts = [], [], []

    def emit(src, dst, amp):
        src_parts.append(src)
        dst_parts.append(dst)
        amp_parts.append(np.broadcast_to(amp, dst.shape).astype(np.float64))

    for g in range(len(kinds)):
        kind = int(kinds[g])
        coef = float(coefs[g])
        s = sites[g]
        if kind == KIND_ID:
            emit(idx, configs, coef)
        elif kind == KIND_TRANS:
            dst, _ = _swap_branch(configs, s[0], s[1])
            emit(idx, dst, coef)
        elif kind == KIND_HB:
            swapped, differ = _swap_branch(configs, s[0], s[1])
            emit(idx, configs, np.where(differ, -0.25, 0.25) * coef)
            sel = np.nonzero(differ)[0]
            if sel.size:
                emit(sel, swapped[sel], 0.5 * coef)
        elif kind == KIND_DP:
            # (S_i.S_j)(S_k.S_l): apply the (k, l) bond first.
            swap_kl, differ_kl = _swap_branch(configs, s[2], s[3])
            first = [(idx, configs, np.where(differ_kl, -0.25, 0.25) * coef)]
            sel = np.nonzero(differ_kl)[0]
            if sel.size:
                first.append((sel, swap_kl[sel], np.full(sel.size, 0.5 * coef)))
            for fsrc, fdst, famp in first:
                swap_ij, differ_ij = _swap_branch(fdst, s[0], s[1])
                emit(fsrc, fdst, np.where(differ_ij, -0.25, 0.25) * famp)
                sel2 = np.nonzero(differ_ij)[0]
                if sel2.size:
                    emit(fsrc[sel2], swap_ij[sel2], 0.5 * famp[sel2])
        elif kind == KIND_PP:
            # (T_a1a2 + T_a1a3 + T_a2a3)(T_b1b2 + T_b1b3 + T_b2b3)
            a_pairs = [(s[0], s[1]), (s[0], s[2]), (s[1], s[2])]
            b_pairs = [(s[3], s[4]), (s[3], s[5]), (s[4], s[5])]
            b_branches = [_swap_branch(configs, i, j)[0] for i, j in b_pairs]
            for pa in a_pairs:
                for bdst in b_branches:
                    dst, _ = _swap_branch(bdst, pa[0], pa[1])
                    emit(idx, dst, coef)
        else:
            raise ValueError(f"unknown term kind {kind}")

    if not src_parts:
        return (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.uint64),
                np.empty(0, dtype=np.float64))
    return (np.concatenate(src_parts), np.concatenate(dst_parts),
            np.concatenate(amp_parts))


def popcount_configs(n_sites, n_up):
    """All n_sites-bit words with n_up set bits, ascending."""
    if n_up < 0 or n_up > n_sites:
        return np.empty(0, dtype=np.uint64)
    # dp[p] = words over the low s bits with p bits set, ascending
    dp = [np.zeros(1, dtype=np.uint64)]
    for s in range(n_sites):
        hi = np.uint64(1 << s)
        new = []
        for p in range(min(s + 1, n_up) + 1):
            parts = []
            if p < len(dp):
                parts.append(dp[p])
            if p - 1 >= 0 and p - 1 < len(dp):
                parts.append(dp[p - 1] | hi)
            new.append(np.concatenate(parts) if len(parts) > 1 else parts[0])
        dp = new
    return dp[n_up] if n_up < len(dp) else np.empty(0, dtype=np.uint64)


def popcount_reps_stream(n_sites, n_up, perms, chunk_bits=24):
    """Orbit representatives among all n_sites-bit words with n_up set
    bits, ascending.  A word is kept iff no permutation image is strictly
    smaller (for a permutation group containing the identity this is the
    orbit minimum).

    Enumeration is chunked over the high bits so the full configuration
    list is never materialized for large n_sites.
    """
    if n_sites <= chunk_bits:
        cfgs = popcount_configs(n_sites, n_up)
        mins, _ = orbit_minimize(cfgs, perms)
        return cfgs[mins >= cfgs]
    n_low = chunk_bits
    n_high = n_sites - n_low
    out = []
    # high-bit patterns in ascending numeric order
    highs = np.sort(np.concatenate(
        [popcount_configs(n_high, j) for j in range(n_high + 1)]))
    for h in highs:
        j = int(bin(int(h)).count("1"))
        p = n_up - j
        if p < 0 or p > n_low:
            continue
        low = popcount_configs(n_low, p)
        cfgs = (np.uint64(h) << np.uint64(n_low)) | low
        mins, _ = orbit_minimize(cfgs, perms)
        keep = cfgs[mins >= cfgs]
        if keep.size:
            out.append(keep)
    if not out:
        return np.empty(0, dtype=np.uint64)
    return np.concatenate(out)
