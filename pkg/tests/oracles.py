"""Deliberately naive reimplementations used as test oracles.

Nothing here imports the code under test beyond plain data types.
"""

import math
from itertools import combinations


def pearson_direct(x, y):
    n = len(x)
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    if max(x) == min(x) or max(y) == min(y):
        return 0.0
    cov = math.fsum((a - mx) * (b - my) for a, b in zip(x, y))
    sx = math.sqrt(math.fsum((a - mx) ** 2 for a in x))
    sy = math.sqrt(math.fsum((b - my) ** 2 for b in y))
    return max(-1.0, min(1.0, cov / (sx * sy)))


def corr_vector(rows):
    """rows: list of metric vectors -> lexicographic pairwise Pearson list."""
    cols = list(zip(*rows))
    return [pearson_direct(cols[i], cols[j]) for i, j in combinations(range(len(cols)), 2)]


# distances agreeing to this many decimals are ties
TIE_DECIMALS = 12


def euclid(a, b):
    return math.sqrt(math.fsum((x - y) ** 2 for x, y in zip(a, b)))


def brute_nn(abnormal, normal):
    """abnormal/normal: list of (size, start, vector). Returns {(size, start): (normal_start, dist)}."""
    out = {}
    for size, start, vec in abnormal:
        best = None
        for nsize, nstart, nvec in normal:
            if nsize != size:
                continue
            d = euclid(vec, nvec)
            r, rb = round(d, TIE_DECIMALS), best and round(best[1], TIE_DECIMALS)
            if best is None or r < rb or (r == rb and nstart < best[0]):
                best = (nstart, d)
        out[(size, start)] = best
    return out


def brute_top(dists, a):
    """dists: list of (size, start, distance). A per size class, descending, earlier start on ties."""
    out = []
    for size in sorted({d[0] for d in dists}):
        items = [d for d in dists if d[0] == size]
        chosen = []
        remaining = list(items)
        while remaining and len(chosen) < a:
            best = remaining[0]
            for d in remaining[1:]:
                r, rb = round(d[2], TIE_DECIMALS), round(best[2], TIE_DECIMALS)
                if r > rb or (r == rb and d[1] < best[1]):
                    best = d
            chosen.append(best)
            remaining.remove(best)
        out.extend(chosen)
    return out


def _overlap(a, b):
    return len(set(a) & set(b))


def _contained(a, b):
    return _overlap(a, b) == min(len(set(a)), len(set(b)))


def brute_repetitive(abn, norm, n_threshold):
    """abn/norm: list of (frames tuple, freq). Returns sorted list of (score, a_frames, n_frames)."""
    out = []
    for a, fa in abn:
        for n, fn in norm:
            if len(a) - len(n) < n_threshold and _contained(a, n):
                out.append((fa / fn, a, n))
    return out


def brute_recursive(abn, norm, n_threshold):
    out = []
    for a, fa in abn:
        for n, fn in norm:
            if len(a) - len(n) > n_threshold and _contained(a, n):
                out.append(((len(a) - len(n)) / _overlap(a, n), a, n))
    return out


def brute_disjoint(abn, norm, rho):
    out = []
    for a, fa in abn:
        m = max((_overlap(a, n) for n, _ in norm), default=0)
        if m < rho:
            out.append((m, a))
    return out


def replay_stacks(events, region_prefix):
    """Per-thread replay of a balanced trace; multiset of stacks at matching ENTRYs."""
    stacks, counts = {}, {}
    for ev in events:
        st = stacks.setdefault(ev.thread_id, [])
        if ev.kind == "ENTRY":
            st.append(f"{ev.region}/{ev.method}")
            if ev.region.startswith(region_prefix):
                key = tuple(st)
                counts[key] = counts.get(key, 0) + 1
        else:
            assert st and st[-1] == f"{ev.region}/{ev.method}"
            st.pop()
    return counts
