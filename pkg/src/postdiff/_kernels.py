"""Compiled primitives shared by the per-call API and the batch simulator.

Everything random goes through a counter-based SplitMix64 stream whose state
is a 2-element uint64 array ``[key, counter]``. The public wrappers in
``core`` and ``policies`` call these same functions, so a trajectory built
step by step from the public API matches the batch kernel draw for draw.

Arms are 0-based in here; the public API converts to 1|2.
"""

import math

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_SEED_SALT = np.uint64(0x5851F42D4C957F2D)
_ONE = np.uint64(1)

# policy kind codes
UR = 0
TS = 1
GREEDY = 2
EPS_GREEDY = 3
EPS_TS = 4
DEC_EPS_GREEDY = 5
DEC_EPS_TS = 6
TOP2_TS = 7
TS_POSTDIFF = 8
TS_PROBCLIP = 9

# branch codes
B_UR = 0
B_TS = 1
B_EXPLOIT = 2
B_SECOND_BEST = 3
B_CLIPPED = 4
N_BRANCHES = 5

# slots of the float64 parameter vector handed to ``select``
P_C = 0
P_BETA = 1
P_EPS = 2
P_PMAX = 3
P_SCHED = 4
P_SCHED_SCALE = 5
P_SCHED_RATE = 6
N_PARAMS = 7

# epsilon schedule codes
SCHED_INVERSE_SQRT = 0
SCHED_INVERSE = 1
SCHED_EXPONENTIAL = 2


@njit(cache=True, nogil=True)
def mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def stream_key(seed, stream_index):
    return mix64(mix64(seed ^ _SEED_SALT) + mix64(stream_index * _GOLDEN + _GOLDEN))


@njit(cache=True, nogil=True)
def new_stream(seed, stream_index):
    state = np.empty(2, dtype=np.uint64)
    state[0] = stream_key(seed, stream_index)
    state[1] = np.uint64(0)
    return state


@njit(cache=True, nogil=True)
def next_uniform(state):
    """Uniform on the open interval (0, 1) with 52 bits of resolution."""
    state[1] += _ONE
    x = mix64(state[0] + state[1] * _GOLDEN)
    return (float(x >> np.uint64(12)) + 0.5) * 2.220446049250313e-16


@njit(cache=True, nogil=True)
def next_normal(state):
    # Box-Muller, cosine branch only so every normal costs exactly two uniforms
    u1 = next_uniform(state)
    u2 = next_uniform(state)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@njit(cache=True, nogil=True)
def _gamma_ge1(state, shape):
    """Marsaglia-Tsang squeeze/rejection sampler, shape >= 1, unit scale."""
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = next_normal(state)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = next_uniform(state)
        x2 = x * x
        if u < 1.0 - 0.0331 * x2 * x2:
            return d * v
        if math.log(u) < 0.5 * x2 + d * (1.0 - v + math.log(v)):
            return d * v


@njit(cache=True, nogil=True)
def next_gamma(state, shape):
    if shape >= 1.0:
        return _gamma_ge1(state, shape)
    # Gamma(a) = Gamma(a + 1) * U^(1/a)
    g = _gamma_ge1(state, shape + 1.0)
    return g * next_uniform(state) ** (1.0 / shape)


@njit(cache=True, nogil=True)
def next_beta(state, a, b):
    x = next_gamma(state, a)
    y = next_gamma(state, b)
    return x / (x + y)


@njit(cache=True, nogil=True)
def beta_many(state, a, b, size):
    out = np.empty(size, dtype=np.float64)
    for i in range(size):
        out[i] = next_beta(state, a, b)
    return out


@njit(cache=True, nogil=True)
def bernoulli(state, p):
    """One uniform, always; a 0/1 outcome with success probability ``p``."""
    return 1 if next_uniform(state) < p else 0


@njit(cache=True, nogil=True)
def bernoulli_many(state, p, size):
    out = np.empty(size, dtype=np.int8)
    for i in range(size):
        out[i] = bernoulli(state, p)
    return out


@njit(cache=True, nogil=True)
def coin(state, q):
    # degenerate probabilities consume no variate; this is what makes the
    # boundary cases of the mixture policies same-seed identical to their limits
    if q <= 0.0:
        return False
    if q >= 1.0:
        return True
    return next_uniform(state) < q


# ---------------------------------------------------------------------------
# exact P(X > Y) for independent Beta variates with integer parameters


@njit(cache=True, nogil=True)
def _lbeta(a, b):
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


@njit(cache=True, nogil=True)
def _win_sum(ax, bx, ay, by):
    """sum_{i<ax} B(ay+i, bx+by) / ((bx+i) B(1+i, bx) B(ay, by)); ax integral.

    Terms follow t_{i+1}/t_i = (ay+i)(bx+i) / ((ay+i+bx+by)(i+1)) and are
    summed on a floating scale so neither t_0 underflow nor growth overflows.
    """
    log_scale = _lbeta(ay, bx + by) - _lbeta(ay, by)
    s = bx + by
    term = 1.0
    total = 0.0
    n_terms = int(ax + 0.5)
    for i in range(n_terms):
        total += term
        term *= (ay + i) * (bx + i) / ((ay + i + s) * (i + 1.0))
        if term > 1e250:
            term *= 1e-250
            total *= 1e-250
            log_scale += 575.6462732485114  # 250 ln 10
    if total <= 0.0:
        return 0.0
    return math.exp(math.log(total) + log_scale)


@njit(cache=True, nogil=True)
def prob_first_beats(a1, b1, a2, b2):
    """P(X > Y), X ~ Beta(a1, b1), Y ~ Beta(a2, b2); all parameters integral.

    Four algebraically equal sums exist, each O(one parameter); the shortest
    one is used. Arguments are put in a canonical order first so that
    swapping the arms returns exactly the complement.
    """
    if a1 == a2 and b1 == b2:
        return 0.5
    if (a2, b2) < (a1, b1):
        return 1.0 - _prob_first_beats(a2, b2, a1, b1)
    return _prob_first_beats(a1, b1, a2, b2)


@njit(cache=True, nogil=True)
def _prob_first_beats(a1, b1, a2, b2):
    m = min(min(a1, b1), min(a2, b2))
    if a1 == m:
        p = _win_sum(a1, b1, a2, b2)
    elif b2 == m:
        # X > Y  <=>  1-Y > 1-X
        p = _win_sum(b2, a2, b1, a1)
    elif a2 == m:
        p = 1.0 - _win_sum(a2, b2, a1, b1)
    else:
        p = 1.0 - _win_sum(b1, a1, b2, a2)
    return min(1.0, max(0.0, p))


# ---------------------------------------------------------------------------
# allocation rules; each returns (arm, branch)


@njit(cache=True, nogil=True)
def select_uniform(state):
    return (0 if next_uniform(state) < 0.5 else 1), B_UR


@njit(cache=True, nogil=True)
def select_ts(state, a1, b1, a2, b2):
    p1 = next_beta(state, a1, b1)
    p2 = next_beta(state, a2, b2)
    if p1 > p2:
        return 0, B_TS
    if p2 > p1:
        return 1, B_TS
    arm, _ = select_uniform(state)
    return arm, B_TS


@njit(cache=True, nogil=True)
def select_greedy(state, a1, b1, a2, b2):
    # cross-multiplied posterior means; exact for integral parameters
    lhs = a1 * (a2 + b2)
    rhs = a2 * (a1 + b1)
    if lhs > rhs:
        return 0, B_EXPLOIT
    if rhs > lhs:
        return 1, B_EXPLOIT
    arm, _ = select_uniform(state)
    return arm, B_EXPLOIT


@njit(cache=True, nogil=True)
def select_epsilon_mix(state, base, eps, a1, b1, a2, b2):
    if coin(state, eps):
        return select_uniform(state)
    if base == GREEDY:
        return select_greedy(state, a1, b1, a2, b2)
    return select_ts(state, a1, b1, a2, b2)


@njit(cache=True, nogil=True)
def select_top2(state, beta_top2, a1, b1, a2, b2):
    best, _ = select_ts(state, a1, b1, a2, b2)
    if coin(state, beta_top2):
        return best, B_TS
    return 1 - best, B_SECOND_BEST


@njit(cache=True, nogil=True)
def select_postdiff(state, c, a1, b1, a2, b2):
    if c <= 0.0:
        # |p1 - p2| < 0 never holds, skip the test pair
        return select_ts(state, a1, b1, a2, b2)
    if c >= 1.0:
        # beta draws live in (0, 1), so |p1 - p2| < 1 always holds
        return select_uniform(state)
    p1 = next_beta(state, a1, b1)
    p2 = next_beta(state, a2, b2)
    if abs(p1 - p2) < c:
        return select_uniform(state)
    return select_ts(state, a1, b1, a2, b2)


@njit(cache=True, nogil=True)
def select_probclip(state, p_max, a1, b1, a2, b2):
    pi1 = prob_first_beats(a1, b1, a2, b2)
    clipped = min(max(pi1, 1.0 - p_max), p_max)
    branch = B_CLIPPED if clipped != pi1 else B_TS
    return (0 if coin(state, clipped) else 1), branch


@njit(cache=True, nogil=True)
def schedule_epsilon(code, scale, rate, t):
    if code == SCHED_INVERSE_SQRT:
        e = scale / math.sqrt(t)
    elif code == SCHED_INVERSE:
        e = scale / t
    else:
        e = scale * math.exp(-rate * (t - 1.0))
    return min(1.0, max(0.0, e))


@njit(cache=True, nogil=True)
def select(kind, params, t, state, a1, b1, a2, b2):
    if kind == UR:
        return select_uniform(state)
    if kind == TS:
        return select_ts(state, a1, b1, a2, b2)
    if kind == GREEDY:
        return select_greedy(state, a1, b1, a2, b2)
    if kind == EPS_GREEDY:
        return select_epsilon_mix(state, GREEDY, params[P_EPS], a1, b1, a2, b2)
    if kind == EPS_TS:
        return select_epsilon_mix(state, TS, params[P_EPS], a1, b1, a2, b2)
    if kind == DEC_EPS_GREEDY or kind == DEC_EPS_TS:
        eps = schedule_epsilon(
            int(params[P_SCHED]), params[P_SCHED_SCALE], params[P_SCHED_RATE], t
        )
        base = GREEDY if kind == DEC_EPS_GREEDY else TS
        return select_epsilon_mix(state, base, eps, a1, b1, a2, b2)
    if kind == TOP2_TS:
        return select_top2(state, params[P_BETA], a1, b1, a2, b2)
    if kind == TS_POSTDIFF:
        return select_postdiff(state, params[P_C], a1, b1, a2, b2)
    return select_probclip(state, params[P_PMAX], a1, b1, a2, b2)


@njit(cache=True, nogil=True)
def estimate_phi(state, c, m, a1, b1, a2, b2):
    hits = 0
    for _ in range(m):
        p1 = next_beta(state, a1, b1)
        p2 = next_beta(state, a2, b2)
        if abs(p1 - p2) < c:
            hits += 1
    return hits / m


# ---------------------------------------------------------------------------
# batch simulation


@njit(cache=True, nogil=True)
def simulate_batch(
    kind,
    params,
    p_star,
    n,
    seed,
    sim_indices,
    phi_stream_offset,
    checkpoints,
    phi_c,
    phi_m,
    record_trace,
):
    """Run one trajectory per entry of ``sim_indices``.

    Per step the policy consumes its draws first, then the reward consumes
    one uniform, both from the simulation's own stream. φ̂ checkpoints read
    the posterior after ``t`` updates, from a separate stream.
    """
    n_sims = sim_indices.shape[0]
    n_check = checkpoints.shape[0]
    pulls = np.zeros((n_sims, 2), dtype=np.int64)
    successes = np.zeros((n_sims, 2), dtype=np.int64)
    branches = np.zeros((n_sims, N_BRANCHES), dtype=np.int64)
    phi = np.zeros((n_sims, n_check), dtype=np.float64)
    t_rows = n_sims if record_trace else 0
    trace_arm = np.zeros((t_rows, n), dtype=np.int8)
    trace_reward = np.zeros((t_rows, n), dtype=np.int8)
    trace_branch = np.zeros((t_rows, n), dtype=np.int8)

    for j in range(n_sims):
        idx = np.uint64(sim_indices[j])
        state = new_stream(seed, idx)
        phi_state = new_stream(seed, idx + phi_stream_offset)
        a = np.ones(2)
        b = np.ones(2)
        k = 0
        for t in range(1, n + 1):
            arm, branch = select(kind, params, t, state, a[0], b[0], a[1], b[1])
            r = bernoulli(state, p_star[arm])
            if r == 1:
                a[arm] += 1.0
            else:
                b[arm] += 1.0
            pulls[j, arm] += 1
            successes[j, arm] += r
            branches[j, branch] += 1
            if record_trace:
                trace_arm[j, t - 1] = arm
                trace_reward[j, t - 1] = r
                trace_branch[j, t - 1] = branch
            while k < n_check and checkpoints[k] == t:
                phi[j, k] = estimate_phi(phi_state, phi_c, phi_m, a[0], b[0], a[1], b[1])
                k += 1
    return pulls, successes, branches, phi, trace_arm, trace_reward, trace_branch
