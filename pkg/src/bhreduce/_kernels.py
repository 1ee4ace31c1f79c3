"""numba kernels for the genealogy Monte Carlo core.

The random-stream layout mirrors `bhreduce.rng`: a particle with key k draws
its lifetime at counter 0 and its offspring count at counter 1, and child j
receives the key derived at counter SPLIT_BASE + j.  Because keys are derived
from the path through the tree, a tree is a pure function of its root key --
independent of traversal order, simulation horizon and scheduling -- which is
what lets the counting pass and the recording pass see identical trees.

Trees are walked in creation (generation) order with a flat FIFO queue; the
population cap bounds the total number of particles ever enqueued, and a
capped replicate is reported with the z = -1 sentinel.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
SPLIT_BASE = np.uint64(1 << 32)
_INV53 = 1.0 / float(1 << 53)

LIFE_LATTICE = 0
LIFE_EXPONENTIAL = 1
LIFE_UNIFORM = 2


@njit(cache=True)
def _mix(x):
    x ^= x >> np.uint64(30)
    x *= _M1
    x ^= x >> np.uint64(27)
    x *= _M2
    x ^= x >> np.uint64(31)
    return x


@njit(cache=True)
def _derive(key, idx):
    return _mix(key + (idx + np.uint64(1)) * GOLDEN)


@njit(cache=True)
def _uniform(key, counter):
    return float(_derive(key, np.uint64(counter)) >> np.uint64(11)) * _INV53


@njit(cache=True)
def _child_key(key, j):
    return _derive(key, SPLIT_BASE + np.uint64(j))


@njit(cache=True)
def _draw_offspring(off_cdf, u):
    k = 0
    while u >= off_cdf[k]:
        k += 1
    return k


@njit(cache=True)
def _draw_lifetime(kind, cdf, p0, p1, u):
    if kind == 0:  # lattice: inverse cdf, steps 1..L
        ell = 0
        while u >= cdf[ell]:
            ell += 1
        return float(ell + 1)
    elif kind == 1:  # exponential(rate = p0)
        return -math.log1p(-u) / p0
    else:  # uniform(p0, p1)
        return p0 + (p1 - p0) * u


@njit(cache=True)
def pass1_range(
    master_mixed,
    rep_lo,
    rep_hi,
    t,
    t_ext,
    y_mode,
    off_cdf,
    life_kind,
    life_cdf,
    life_p0,
    life_p1,
    probes,
    star_x,
    cap,
    out_z,
    out_probe_alive,
    out_probe_maxres,
    out_star,
):
    """Counting pass: per replicate, Z(t) plus optional probe statistics.

    For each probe time s: number alive at s and the largest residual
    lifetime death - s among them.  For each star offset x: the number of
    particles with birth < t and death > t + x (the same-particle survivors).
    Capped replicates get out_z = -1 and zeroed statistics.
    """
    n_probe = probes.shape[0]
    n_star = star_x.shape[0]
    birth = np.empty(cap, np.float64)
    key = np.empty(cap, np.uint64)
    for rep in range(rep_lo, rep_hi):
        row = rep - rep_lo
        root = _child_key(master_mixed, np.uint64(rep))
        n = 0
        if y_mode:
            u = _uniform(root, 1)
            m = _draw_offspring(off_cdf, u)
            for j in range(m):
                birth[n] = 0.0
                key[n] = _child_key(root, j)
                n += 1
        else:
            birth[0] = 0.0
            key[0] = root
            n = 1
        z = 0
        capped = False
        for j in range(n_probe):
            out_probe_alive[row, j] = 0
            out_probe_maxres[row, j] = -1.0
        for j in range(n_star):
            out_star[row, j] = 0
        i = 0
        while i < n:
            k = key[i]
            b = birth[i]
            tau = _draw_lifetime(life_kind, life_cdf, life_p0, life_p1, _uniform(k, 0))
            d = b + tau
            if b <= t and t < d:
                z += 1
            for j in range(n_probe):
                s = probes[j]
                if b <= s and s < d:
                    out_probe_alive[row, j] += 1
                    if d - s > out_probe_maxres[row, j]:
                        out_probe_maxres[row, j] = d - s
            for j in range(n_star):
                if b < t and d > t + star_x[j]:
                    out_star[row, j] += 1
            if d <= t_ext:
                nch = _draw_offspring(off_cdf, _uniform(k, 1))
                if n + nch > cap:
                    capped = True
                    break
                for j in range(nch):
                    birth[n] = d
                    key[n] = _child_key(k, j)
                    n += 1
            i += 1
        if capped:
            out_z[row] = -1
            for j in range(n_probe):
                out_probe_alive[row, j] = 0
                out_probe_maxres[row, j] = -1.0
            for j in range(n_star):
                out_star[row, j] = 0
        else:
            out_z[row] = z


@njit(cache=True)
def record_tree(
    root,
    t_ext,
    y_mode,
    off_cdf,
    life_kind,
    life_cdf,
    life_p0,
    life_p1,
    cap,
    birth,
    death,
    parent,
    n_children,
):
    """Recording pass: fill per-particle arrays; returns (n, capped)."""
    key = np.empty(cap, np.uint64)
    n = 0
    if y_mode:
        u = _uniform(root, 1)
        m = _draw_offspring(off_cdf, u)
        for j in range(m):
            birth[n] = 0.0
            key[n] = _child_key(root, j)
            parent[n] = -1
            n += 1
    else:
        birth[0] = 0.0
        key[0] = root
        parent[0] = -1
        n = 1
    capped = False
    i = 0
    while i < n:
        k = key[i]
        b = birth[i]
        tau = _draw_lifetime(life_kind, life_cdf, life_p0, life_p1, _uniform(k, 0))
        d = b + tau
        death[i] = d
        nch = 0
        if d <= t_ext:
            nch = _draw_offspring(off_cdf, _uniform(k, 1))
            if n + nch > cap:
                capped = True
                n_children[i] = 0
                break
            for j in range(nch):
                birth[n] = d
                key[n] = _child_key(k, j)
                parent[n] = i
                n += 1
        n_children[i] = nch
        i += 1
    return n, capped


@njit(cache=True)
def tree_observables(
    birth,
    death,
    parent,
    n,
    t,
    s_grid,
    x_grid,
    z_s,
    maxres_s,
    z_star,
    z_tilde,
    z_plus,
    z_tilde_plus,
):
    """Reduced-tree observables of one recorded tree.

    Returns (z_t, split, extinct_time):
      split = first time the reduced ancestral count reaches 2 (t if never,
              nan if the tree is extinct at t);
      extinct_time = last death when Z(t) = 0, nan otherwise.
    Fills, per s in s_grid: the reduced count Z(s, t) and the largest residual
    lifetime among all particles alive at s; per x in x_grid: Z*(t, x)
    (birth < t, death > t + x), Z~(t, x) (alive at t, age <= x), Z(t + x) and
    Z~(t + x, x).
    """
    n_s = s_grid.shape[0]
    n_x = x_grid.shape[0]
    z_t = 0
    for i in range(n):
        if birth[i] <= t and t < death[i]:
            z_t += 1

    for j in range(n_s):
        z_s[j] = 0
        maxres_s[j] = -1.0
    for j in range(n_x):
        z_star[j] = 0
        z_tilde[j] = 0
        z_plus[j] = 0
        z_tilde_plus[j] = 0

    for i in range(n):
        b = birth[i]
        d = death[i]
        for j in range(n_s):
            s = s_grid[j]
            if b <= s and s < d:
                if d - s > maxres_s[j]:
                    maxres_s[j] = d - s
        for j in range(n_x):
            x = x_grid[j]
            if b < t and d > t + x:
                z_star[j] += 1
            if b <= t and t < d and t - b <= x:
                z_tilde[j] += 1
            if b <= t + x and t + x < d:
                z_plus[j] += 1
                if (t + x) - b <= x:
                    z_tilde_plus[j] += 1

    if z_t == 0:
        ext = 0.0
        for i in range(n):
            if death[i] > ext:
                ext = death[i]
        return 0, math.nan, ext

    # mark ancestors-or-self of the time-t population
    mark = np.zeros(n, np.uint8)
    for i in range(n):
        if birth[i] <= t and t < death[i]:
            j = i
            while j >= 0 and mark[j] == 0:
                mark[j] = 1
                j = parent[j]

    n_red = 0
    for i in range(n):
        if mark[i] == 1:
            n_red += 1
    rb = np.empty(n_red, np.float64)
    rd = np.empty(n_red, np.float64)
    m = 0
    for i in range(n):
        if mark[i] == 1:
            rb[m] = birth[i]
            rd[m] = death[i]
            m += 1
            b = birth[i]
            d = death[i]
            for j in range(n_s):
                s = s_grid[j]
                if b <= s and s < d:
                    z_s[j] += 1
    rb.sort()
    rd.sort()

    split = float(t)
    count = 0
    i = 0
    j = 0
    while i < n_red and rb[i] < t:
        u = rb[i]
        while i < n_red and rb[i] == u:
            count += 1
            i += 1
        while j < n_red and rd[j] <= u:
            count -= 1
            j += 1
        if count >= 2:
            split = u
            break
    return z_t, split, math.nan
