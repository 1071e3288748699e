"""Compiled multi-episode loops.

Each kernel mirrors the corresponding step function in :mod:`qrlsim.agents`,
drawing from the same ``numpy.random.Generator`` in the same order, and
mutates the value table / registers in place.  They exist because a sweep
runs hundreds of millions of steps.
"""

import numba
import numpy as np

from .quantum import INT_TOL, collapse_index, grover_inplace


@numba.njit(cache=True)
def _int_part(x):
    if x >= 0:
        return int(x + INT_TOL)
    return -int(-x + INT_TOL)


@numba.njit(cache=True)
def _alpha(alpha, visits, s, use_visits):
    if not use_visits:
        return alpha
    prior = visits[s]
    visits[s] += 1
    return 1.0 / (1.0 + prior)


@numba.njit(cache=True)
def _sweep(values, next_state, reward, free, goal, alpha, gamma, policy, use_policy):
    n, m = next_state.shape
    target = np.empty(n)
    for s in range(n):
        if use_policy:
            acc = 0.0
            for a in range(m):
                acc += policy[s, a] * (reward[s, a] + gamma * values[next_state[s, a]])
            target[s] = acc
        else:
            best = -np.inf
            for a in range(m):
                q = reward[s, a] + gamma * values[next_state[s, a]]
                if q > best:
                    best = q
            target[s] = best
    for s in range(n):
        if free[s] and s != goal:
            values[s] += alpha * (target[s] - values[s])


@numba.njit(cache=True)
def _pick(scores, epsilon, rng):
    m = scores.shape[0]
    if rng.random() < epsilon:
        a = int(rng.random() * m)
        return min(a, m - 1)
    best = scores.max()
    count = 0
    for a in range(m):
        if scores[a] == best:
            count += 1
    if count == 1:
        for a in range(m):
            if scores[a] == best:
                return a
    j = min(int(rng.random() * count), count - 1)
    for a in range(m):
        if scores[a] == best:
            if j == 0:
                return a
            j -= 1
    return m - 1


@numba.njit(cache=True)
def qrl_run(regs, values, next_state, reward, free, start, goal, n_actions,
            episodes, max_steps, alpha, gamma, k, cap, sweep, visits, use_visits, rng):
    steps_out = np.zeros(episodes, dtype=np.int64)
    trunc_out = np.zeros(episodes, dtype=np.bool_)
    dim = regs.shape[1]
    policy = np.zeros((next_state.shape[0], n_actions))
    for ep in range(episodes):
        s = start
        steps = 0
        while True:
            a = collapse_index(regs[s], rng.random())
            if a < 0:
                raise ValueError("degenerate register")
            t = next_state[s, a % n_actions]
            r = reward[s, a % n_actions]
            v_next = values[t]
            alpha_s = _alpha(alpha, visits, s, use_visits)
            values[s] += alpha_s * (r + gamma * v_next - values[s])
            L = _int_part(k * (r + v_next))
            if L > cap:
                L = cap
            if L > 0:
                grover_inplace(regs[s], a, L)
            steps += 1
            if t == goal:
                break
            if steps >= max_steps:
                trunc_out[ep] = True
                break
            s = t
        steps_out[ep] = steps
        if sweep:
            for q in range(regs.shape[0]):
                for b in range(n_actions):
                    policy[q, b] = 0.0
                for b in range(dim):
                    amp = regs[q, b]
                    policy[q, b % n_actions] += amp.real * amp.real + amp.imag * amp.imag
            _sweep(values, next_state, reward, free, goal, alpha, gamma, policy, True)
    return steps_out, trunc_out


@numba.njit(cache=True)
def td0_run(values, next_state, reward, free, start, goal,
            episodes, max_steps, alpha, gamma, epsilon, sweep, visits, use_visits, rng):
    steps_out = np.zeros(episodes, dtype=np.int64)
    trunc_out = np.zeros(episodes, dtype=np.bool_)
    m = next_state.shape[1]
    scores = np.empty(m)
    dummy = np.zeros((1, 1))
    for ep in range(episodes):
        s = start
        steps = 0
        while True:
            alpha_s = _alpha(alpha, visits, s, use_visits)
            for a in range(m):
                scores[a] = reward[s, a] + gamma * values[next_state[s, a]]
            a = _pick(scores, epsilon, rng)
            t = next_state[s, a]
            r = reward[s, a]
            values[s] += alpha_s * (r + gamma * values[t] - values[s])
            steps += 1
            if t == goal:
                break
            if steps >= max_steps:
                trunc_out[ep] = True
                break
            s = t
        steps_out[ep] = steps
        if sweep:
            _sweep(values, next_state, reward, free, goal, alpha, gamma, dummy, False)
    return steps_out, trunc_out


@numba.njit(cache=True)
def qlearning_run(q, next_state, reward, start, goal,
                  episodes, max_steps, alpha, gamma, epsilon, visits, use_visits, rng):
    steps_out = np.zeros(episodes, dtype=np.int64)
    trunc_out = np.zeros(episodes, dtype=np.bool_)
    for ep in range(episodes):
        s = start
        steps = 0
        while True:
            alpha_s = _alpha(alpha, visits, s, use_visits)
            a = _pick(q[s], epsilon, rng)
            t = next_state[s, a]
            r = reward[s, a]
            best_next = 0.0 if t == goal else q[t].max()
            q[s, a] = (1 - alpha_s) * q[s, a] + alpha_s * (r + gamma * best_next)
            steps += 1
            if t == goal:
                break
            if steps >= max_steps:
                trunc_out[ep] = True
                break
            s = t
        steps_out[ep] = steps
    return steps_out, trunc_out
