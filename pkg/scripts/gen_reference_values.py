"""Generate high-precision reference values for the special-function tests.

Runs at 50 significant digits with mpmath, independent of boojum.specialfn.
digamma is cross-checked against its defining series
psi(x) = -gamma + sum_{n>=0} (1/(n+1) - 1/(n+x)) accelerated by Richardson
extrapolation (mpmath.nsum); inverse-digamma targets are bracketed and
bisected to 40 digits.

Usage: python scripts/gen_reference_values.py > tests/data/reference_values.json
"""

import json

import mpmath as mp

mp.mp.dps = 50


def digamma_series(x):
    x = mp.mpf(x)
    return -mp.euler + mp.nsum(lambda n: 1 / (n + 1) - 1 / (n + x), [0, mp.inf])


def trigamma_series(x):
    x = mp.mpf(x)
    return mp.nsum(lambda n: 1 / (n + x) ** 2, [0, mp.inf])


def bisect_digamma(y, lo=mp.mpf("1e-30"), hi=mp.mpf("1e30")):
    y = mp.mpf(y)
    for _ in range(400):
        mid = mp.sqrt(lo * hi) if hi / lo > 4 else (lo + hi) / 2
        if mp.digamma(mid) < y:
            lo = mid
        else:
            hi = mid
        if hi - lo < mp.mpf("1e-45") * hi:
            break
    return (lo + hi) / 2


def main():
    # 47 log-spaced points on [1e-3, 1e6] plus the half-integer anchors
    xs = [mp.mpf(10) ** (mp.mpf(-3) + 9 * mp.mpf(i) / 46) for i in range(47)]
    xs += [mp.mpf("0.5"), mp.mpf(1), mp.mpf(2)]
    rows = []
    for x in xs:
        psi = mp.digamma(x)
        psi1 = mp.polygamma(1, x)
        if x < 20:
            # slow series only where it converges in reasonable time
            assert abs(digamma_series(x) - psi) < mp.mpf("1e-30")
            assert abs(trigamma_series(x) - psi1) < mp.mpf("1e-30")
        rows.append(
            {
                "x": float(x),
                "log_gamma": mp.nstr(mp.loggamma(mp.mpf(float(x))), 25),
                "digamma": mp.nstr(mp.digamma(mp.mpf(float(x))), 25),
                "trigamma": mp.nstr(mp.polygamma(1, mp.mpf(float(x))), 25),
            }
        )
    inverse = []
    for y in [-20.0, -10.0, -5.0, -2.5, -2.22, -1.0, -0.5772156649015329, 0.0, 0.5, 1.0, 3.0, 7.3, 13.0]:
        inverse.append({"y": y, "x": mp.nstr(bisect_digamma(y), 25)})
    print(json.dumps({"points": rows, "digamma_inverse": inverse}, indent=1))


if __name__ == "__main__":
    main()
