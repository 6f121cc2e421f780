"""Naive reference implementations, written with plain loops on purpose."""

import math


def mean(xs):
    return sum(xs) / len(xs)


def central(xs, k):
    m = mean(xs)
    return sum((x - m) ** k for x in xs) / len(xs)


def degenerate(xs):
    ms = sum(x * x for x in xs) / len(xs)
    return central(xs, 2) <= 1e-20 * ms


def moments(sub_rows, env_rows):
    out_var, out_mean, out_cv2, out_skew = [], [], [], []
    for s in sub_rows:
        out_var.append(central(s, 2))
    for e in env_rows:
        m = mean(e)
        v = central(e, 2)
        out_mean.append(m)
        if degenerate(e):
            out_cv2.append(0.0)
            out_skew.append(0.0)
        else:
            out_cv2.append(v / (m * m) if m != 0 else 0.0)
            out_skew.append(central(e, 3) / v ** 1.5)
    return out_var + out_mean + out_cv2 + out_skew


def pearson(a, b):
    if degenerate(a) or degenerate(b):
        return 0.0
    ma, mb = mean(a), mean(b)
    num = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    da = math.sqrt(sum((x - ma) ** 2 for x in a))
    db = math.sqrt(sum((y - mb) ** 2 for y in b))
    return num / (da * db)


def env_correlations(env_rows, offsets):
    out = []
    for d in sorted(offsets):
        for i in range(len(env_rows) - d):
            out.append(pearson(env_rows[i], env_rows[i + d]))
    return out


def mod_correlations(mods, channel_offsets, bands):
    """``mods[c][b]`` is a list; ``bands`` are 1-based."""
    out = []
    for b in sorted(bands):
        for d in sorted(channel_offsets):
            for i in range(len(mods) - d):
                out.append(pearson(mods[i][b - 1], mods[i + d][b - 1]))
    return out


def mod_power(mods, env_rows):
    out = []
    for c, e in enumerate(env_rows):
        ve = central(e, 2)
        for band in mods[c]:
            out.append(0.0 if degenerate(e) else central(band, 2) / ve)
    return out


def scatter(X, y):
    """Double loop over samples for S_b and S_w."""
    n, d = len(X), len(X[0])
    labels = sorted(set(y))
    mu = [sum(X[i][k] for i in range(n)) / n for k in range(d)]
    Sb = [[0.0] * d for _ in range(d)]
    Sw = [[0.0] * d for _ in range(d)]
    for lab in labels:
        rows = [X[i] for i in range(n) if y[i] == lab]
        nc = len(rows)
        mc = [sum(r[k] for r in rows) / nc for k in range(d)]
        for a in range(d):
            for b in range(d):
                Sb[a][b] += nc * (mc[a] - mu[a]) * (mc[b] - mu[b])
        for r in rows:
            for a in range(d):
                for b in range(d):
                    Sw[a][b] += (r[a] - mc[a]) * (r[b] - mc[b])
    return Sb, Sw


def segment_starts(duration, seg_len, hop, sample_rate):
    starts, k = [], 0
    while k * hop + seg_len <= duration + 0.5 / sample_rate:
        starts.append(k * hop)
        k += 1
    return starts
