"""Compiled inner loops shared by the core and engine modules.

Everything here works on plain numpy arrays so that the same random stream
drives the Python-level operations and the jitted run loop. Genomes are rows
of packed uint64 words, bit ``i`` living in word ``i >> 6`` at position
``i & 63``; unused high bits of the last word are always zero.
"""

import numpy as np
from numba import njit

# fitness kinds
TWOMAX = 0
ONEMAX = 1
ZEROMAX = 2

# distance kinds
GENOTYPIC = 0
PHENOTYPIC = 1

# selection policies
WITH_REPLACEMENT = 0
WITHOUT_REPLACEMENT = 1

# algorithm kinds
PLAIN = 0
RTS = 1
DET_CROWDING = 2

# run status codes
RUNNING = 0
SUCCESS = 1
BUDGET_EXHAUSTED = 2
STAGNATION = 3
VIOLATION = 4

# parameter vector layout
P_N = 0
P_MU = 1
P_W = 2
P_KIND = 3
P_POLICY = 4
P_DIST = 5
P_FIT = 6
P_REQ_BOTH = 7
P_BUDGET = 8  # -1 means unbounded
P_COLLAPSE = 9
P_W_MINUS_1 = 10
P_GUARD = 11
N_PARAMS = 12

# run state vector layout
S_GEN = 0
S_STATUS = 1
S_LONE = 2
S_BEST0 = 3
S_BEST1 = 4
S_ARMED = 5
S_COUNT0 = 6
S_COUNT1 = 7
S_TRACE_LEN = 8
S_VIOL_BRANCH = 9
N_STATE = 10

# step event vector layout
E_PARENT = 0
E_COMPETITOR = 1
E_OFFSPRING_ONES = 2
E_REPLACED_ONES = 3
E_ACCEPTED = 4
N_EVENTS = 5

TRACE_COLS = 5

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_INV53 = 1.0 / 9007199254740992.0


def n_words(n):
    return (n + 63) // 64


# ---------------------------------------------------------------------------
# random source: xoshiro256**
# ---------------------------------------------------------------------------


@njit(cache=True)
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True)
def rng_next(s):
    s0 = s[0]
    s1 = s[1]
    s2 = s[2]
    s3 = s[3]
    result = _rotl(s1 * np.uint64(5), 7) * np.uint64(9)
    t = s1 << np.uint64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, 45)
    s[0] = s0
    s[1] = s1
    s[2] = s2
    s[3] = s3
    return result


@njit(cache=True)
def rng_below(s, k):
    """Uniform integer in [0, k). Draws nothing when k <= 1."""
    if k <= 1:
        return 0
    ku = np.uint64(k)
    lim = (np.uint64(0) - ku) % ku
    while True:
        x = rng_next(s)
        if x >= lim:
            return np.int64(x % ku)


@njit(cache=True)
def rng_random(s):
    return np.float64(rng_next(s) >> np.uint64(11)) * _INV53


# ---------------------------------------------------------------------------
# bitstrings
# ---------------------------------------------------------------------------


@njit(cache=True)
def popcount64(x):
    x = x - ((x >> np.uint64(1)) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return np.int64((x * _H01) >> np.uint64(56))


@njit(cache=True)
def popcount_row(row):
    c = 0
    for i in range(row.shape[0]):
        c += popcount64(row[i])
    return c


@njit(cache=True)
def hamming_rows(a, b):
    c = 0
    for i in range(a.shape[0]):
        c += popcount64(a[i] ^ b[i])
    return c


@njit(cache=True)
def random_row(n, s, out):
    nw = out.shape[0]
    for i in range(nw):
        out[i] = rng_next(s)
    r = n & 63
    if r:
        out[nw - 1] &= (np.uint64(1) << np.uint64(r)) - np.uint64(1)


@njit(cache=True)
def mutate_row(src, src_ones, n, s, out):
    """Standard bit mutation of ``src`` into ``out``; returns ones(out).

    Flip positions are generated by geometric skipping, which samples the
    same law as n independent Bernoulli(1/n) trials.
    """
    for i in range(src.shape[0]):
        out[i] = src[i]
    ones = src_ones
    if n == 1:
        if out[0] & np.uint64(1):
            ones -= 1
        else:
            ones += 1
        out[0] ^= np.uint64(1)
        return ones
    lq = np.log1p(-1.0 / n)
    pos = -1
    while True:
        u = 1.0 - rng_random(s)
        pos += np.int64(np.floor(np.log(u) / lq)) + 1
        if pos >= n:
            break
        wi = pos >> 6
        bit = np.uint64(1) << np.uint64(pos & 63)
        if out[wi] & bit:
            ones -= 1
        else:
            ones += 1
        out[wi] ^= bit
    return ones


@njit(cache=True)
def fitness_of(kind, ones, n):
    if kind == ONEMAX:
        return ones
    if kind == ZEROMAX:
        return n - ones
    return max(ones, n - ones)


@njit(cache=True)
def branch_of(ones, n):
    """0 for ones < n/2, 1 for ones > n/2, -1 at the midpoint."""
    if 2 * ones < n:
        return 0
    if 2 * ones > n:
        return 1
    return -1


# ---------------------------------------------------------------------------
# selection
# ---------------------------------------------------------------------------


@njit(cache=True)
def select_tournament(mu, w, policy, perm, s, out):
    """Fill ``out`` with tournament member indices and return their count."""
    if policy == WITH_REPLACEMENT:
        for t in range(w):
            out[t] = rng_below(s, mu)
        return w
    k = min(w, mu)
    if k == mu:
        for i in range(mu):
            out[i] = i
        return mu
    # partial Fisher-Yates; any starting order of perm yields a uniform sample
    for i in range(k):
        j = i + rng_below(s, mu - i)
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
        out[i] = perm[i]
    return k


@njit(cache=True)
def closest_member(words, ones, y, y_ones, tour, k, dist_kind, s):
    """Index in ``tour[:k]`` closest to ``y``; ties uniform over entries."""
    best = -1
    best_d = np.int64(1) << np.int64(62)
    ties = 0
    for t in range(k):
        idx = tour[t]
        if dist_kind == GENOTYPIC:
            d = hamming_rows(words[idx], y)
        else:
            d = abs(ones[idx] - y_ones)
        if d < best_d:
            best_d = d
            best = idx
            ties = 1
        elif d == best_d:
            ties += 1
            # redrawing an identical index cannot change the outcome
            if idx != best and rng_below(s, ties) == 0:
                best = idx
    return best


@njit(cache=True)
def uniform_worst(fit, s):
    mu = fit.shape[0]
    worst = fit[0]
    for i in range(1, mu):
        if fit[i] < worst:
            worst = fit[i]
    chosen = -1
    ties = 0
    for i in range(mu):
        if fit[i] == worst:
            ties += 1
            if ties == 1 or rng_below(s, ties) == 0:
                chosen = i
    return chosen


@njit(cache=True)
def step(words, ones, fit, prm, perm, tour, ybuf, s, ev):
    """One generation of the configured (mu+1) EA, applied in place."""
    n = prm[P_N]
    mu = prm[P_MU]
    kind = prm[P_KIND]
    parent = rng_below(s, mu)
    y_ones = mutate_row(words[parent], ones[parent], n, s, ybuf)
    y_fit = fitness_of(prm[P_FIT], y_ones, n)
    if kind == RTS:
        k = select_tournament(mu, prm[P_W], prm[P_POLICY], perm, s, tour)
        z = closest_member(words, ones, ybuf, y_ones, tour, k, prm[P_DIST], s)
    elif kind == PLAIN:
        z = uniform_worst(fit, s)
    else:
        z = parent
    ev[E_PARENT] = parent
    ev[E_COMPETITOR] = z
    ev[E_OFFSPRING_ONES] = y_ones
    ev[E_REPLACED_ONES] = ones[z]
    if y_fit >= fit[z]:
        for i in range(ybuf.shape[0]):
            words[z, i] = ybuf[i]
        ones[z] = y_ones
        fit[z] = y_fit
        ev[E_ACCEPTED] = 1
    else:
        ev[E_ACCEPTED] = 0
    return z


# ---------------------------------------------------------------------------
# run loop
# ---------------------------------------------------------------------------


@njit(cache=True)
def init_population(words, ones, fit, n, fit_kind, s):
    for i in range(words.shape[0]):
        random_row(n, s, words[i])
        ones[i] = popcount_row(words[i])
        fit[i] = fitness_of(fit_kind, ones[i], n)


@njit(cache=True)
def current_bests(hist, n):
    """TwoMax of the best current member on each strict branch (0 if empty)."""
    b0 = 0
    b1 = 0
    for o in range(n + 1):
        if hist[o] > 0 and 2 * o < n:
            b0 = n - o
            break
    for o in range(n, -1, -1):
        if hist[o] > 0 and 2 * o > n:
            b1 = o
            break
    return b0, b1


@njit(cache=True)
def _armed(hist, n, dist_kind, c0, c1):
    if c0 == 0 or c1 == 0:
        return False
    if dist_kind == PHENOTYPIC:
        b0, b1 = current_bests(hist, n)
        return 3 * b0 > 2 * n and 3 * b1 > 2 * n
    worst = n
    for o in range(n + 1):
        if hist[o] > 0:
            f = max(o, n - o)
            if f < worst:
                worst = f
    return 4 * worst > 3 * n


@njit(cache=True)
def _stop_status(hist, prm, gen):
    n = prm[P_N]
    mu = prm[P_MU]
    if prm[P_REQ_BOTH] and hist[0] > 0 and hist[n] > 0:
        return SUCCESS
    if prm[P_COLLAPSE] and (hist[0] == mu or hist[n] == mu):
        return STAGNATION
    if prm[P_W_MINUS_1]:
        w = prm[P_W]
        if prm[P_POLICY] == WITHOUT_REPLACEMENT:
            w = min(w, mu)
        rest = w - 1
        if rest == 0:
            if hist[0] == mu or hist[n] == mu:
                return STAGNATION
        elif n >= 3 and rest < mu:
            if hist[1] == rest and hist[0] == mu - rest:
                return STAGNATION
            if hist[n - 1] == rest and hist[n] == mu - rest:
                return STAGNATION
    if prm[P_BUDGET] >= 0 and gen >= prm[P_BUDGET]:
        return BUDGET_EXHAUSTED
    return RUNNING


@njit(cache=True)
def _note_member(st, o, n):
    if 2 * o <= n and n - o > st[S_BEST0]:
        st[S_BEST0] = n - o
    if 2 * o >= n and o > st[S_BEST1]:
        st[S_BEST1] = o


@njit(cache=True)
def _is_lone(c0, c1, mu):
    return mu >= 2 and ((c0 == 1 and c1 == mu - 1) or (c1 == 1 and c0 == mu - 1))


@njit(cache=True)
def side_bests(hist, n):
    """Current best TwoMax on each side, midpoint members counting for
    both; ``ceil(n/2)`` for an empty side."""
    b0 = (n + 1) // 2
    b1 = b0
    for o in range(n + 1):
        if hist[o] > 0:
            if 2 * o <= n:
                b0 = n - o
            break
    for o in range(n, -1, -1):
        if hist[o] > 0:
            if 2 * o >= n:
                b1 = o
            break
    return b0, b1


@njit(cache=True)
def _trace_row(trace, st, hist, n):
    r = st[S_TRACE_LEN]
    b0, b1 = side_bests(hist, n)
    trace[r, 0] = st[S_GEN]
    trace[r, 1] = st[S_COUNT0]
    trace[r, 2] = st[S_COUNT1]
    trace[r, 3] = b0
    trace[r, 4] = b1
    st[S_TRACE_LEN] = r + 1


@njit(cache=True)
def begin_run(ones, hist, prm, st, trace):
    """Initialise run bookkeeping from a freshly created population."""
    n = prm[P_N]
    mu = prm[P_MU]
    hist[:] = 0
    st[:] = 0
    st[S_BEST0] = (n + 1) // 2
    st[S_BEST1] = (n + 1) // 2
    for i in range(mu):
        o = ones[i]
        hist[o] += 1
        b = branch_of(o, n)
        if b == 0:
            st[S_COUNT0] += 1
        elif b == 1:
            st[S_COUNT1] += 1
        _note_member(st, o, n)
    if _is_lone(st[S_COUNT0], st[S_COUNT1], mu):
        st[S_LONE] = 1
    if prm[P_GUARD]:
        st[S_ARMED] = _armed(hist, n, prm[P_DIST], st[S_COUNT0], st[S_COUNT1])
    st[S_VIOL_BRANCH] = -1
    if trace.shape[0] > 0:
        _trace_row(trace, st, hist, n)
    st[S_STATUS] = _stop_status(hist, prm, 0)


@njit(cache=True)
def advance(words, ones, fit, hist, perm, tour, ybuf, s, prm, st, max_steps, trace):
    """Run generations until a stop criterion fires, ``max_steps`` generations
    have been made, or the trace buffer is full. Resumable."""
    n = prm[P_N]
    mu = prm[P_MU]
    ev = np.zeros(N_EVENTS, dtype=np.int64)
    tracing = trace.shape[0] > 0
    steps = 0
    while st[S_STATUS] == RUNNING and steps < max_steps:
        if tracing and st[S_TRACE_LEN] >= trace.shape[0]:
            break
        step(words, ones, fit, prm, perm, tour, ybuf, s, ev)
        steps += 1
        st[S_GEN] += 1
        if ev[E_ACCEPTED]:
            yo = ev[E_OFFSPRING_ONES]
            zo = ev[E_REPLACED_ONES]
            hist[zo] -= 1
            hist[yo] += 1
            bz = branch_of(zo, n)
            by = branch_of(yo, n)
            if bz != by:
                before = st[S_COUNT0] if bz == 0 else st[S_COUNT1]
                if bz == 0:
                    st[S_COUNT0] -= 1
                elif bz == 1:
                    st[S_COUNT1] -= 1
                if by == 0:
                    st[S_COUNT0] += 1
                elif by == 1:
                    st[S_COUNT1] += 1
                if st[S_ARMED] and bz >= 0 and before == 1:
                    st[S_VIOL_BRANCH] = bz
                    st[S_STATUS] = VIOLATION
                    break
                if _is_lone(st[S_COUNT0], st[S_COUNT1], mu):
                    st[S_LONE] = 1
            _note_member(st, yo, n)
            if prm[P_GUARD] and not st[S_ARMED]:
                st[S_ARMED] = _armed(hist, n, prm[P_DIST], st[S_COUNT0], st[S_COUNT1])
        if tracing:
            _trace_row(trace, st, hist, n)
        st[S_STATUS] = _stop_status(hist, prm, st[S_GEN])
    return steps
