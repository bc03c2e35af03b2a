"""Straight-line reference implementations used as test oracles."""


def brute_force_relief(X, y, class_bins):
    """Independent pure-Python RELIEF with every instance visited once."""
    n, p = len(X), len(X[0])
    ranked = sorted(range(n), key=lambda i: (y[i], i))
    label = [0] * n
    for r, i in enumerate(ranked):
        label[i] = r * class_bins // n
    size = [label.count(c) for c in range(class_bins)]
    w = [0.0] * p
    used = 0
    for i in range(n):
        if size[label[i]] < 2:
            continue
        best_hit = best_miss = None
        for j in range(n):
            if j == i:
                continue
            d = 0.0
            for k in range(p):
                t = X[j][k] - X[i][k]
                d = d + t * t
            if label[j] == label[i]:
                if best_hit is None or d < best_hit[0]:
                    best_hit = (d, j)
            elif best_miss is None or d < best_miss[0]:
                best_miss = (d, j)
        h, m = best_hit[1], best_miss[1]
        for k in range(p):
            dh = X[i][k] - X[h][k]
            dm = X[i][k] - X[m][k]
            w[k] = w[k] - dh * dh + dm * dm
        used += 1
    return [v / used for v in w]
