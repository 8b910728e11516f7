"""High-precision re-evaluation of the closed-form constants and bounds (mpmath, 50 digits)."""

import mpmath as mp

mp.mp.dps = 50


def contraction_constant(L_G, L_F1, L_F2, L_I, M, b, gamma):
    M, b, g = mp.mpf(M), mp.mpf(b), mp.mpf(gamma)
    head = M * L_G / g * ((1 - mp.e ** (-g * b)) * (1 + mp.mpf(L_F1) / g) + L_F2 * b * mp.e ** (g * b))
    return head + M * mp.e ** (g * b) * mp.fsum(mp.mpf(x) for x in L_I)


def po_bound(M, b, n, delta, mu, eta, L_R):
    M = mp.mpf(M)
    return (M * delta + b * M * mu + n * M * eta) / (1 - mp.mpf(L_R))


def growth(M, b, L_G, L_F1, L_F2, L_I):
    M, b = mp.mpf(M), mp.mpf(b)
    prod = mp.mpf(1)
    for x in L_I:
        prod *= 1 + M * x
    return prod * mp.e ** (M * L_G * b + M * L_G * L_F1 * b ** 2 / 2 + M * L_G * L_F2 * b ** 2)


def gronwall_bound(M, b, n, delta, mu, eta, L_G, L_F1, L_F2, L_I):
    M = mp.mpf(M)
    return (M * delta + b * M * mu + n * M * eta) * growth(M, b, L_G, L_F1, L_F2, L_I)


def eps_bound(eps1, eps2, M, b, n, delta, L_G, L_F1, L_F2, L_I):
    M = mp.mpf(M)
    return ((mp.mpf(eps1) + eps2) * M * (b + n) + M * delta) * growth(M, b, L_G, L_F1, L_F2, L_I)


def rel_err(x, ref):
    ref = mp.mpf(ref)
    if ref == 0:
        return abs(mp.mpf(x))
    return abs((mp.mpf(x) - ref) / ref)
