#!/usr/bin/env python3
"""Independent root-finder for the maximum communication range.

Solves  tx_power - 10*n*log10(4*pi*d*f/c) = sensitivity  by bisection,
without importing the simulator, so the result can be pinned into tests
before the channel module is trusted. Compare with manetsim.max_range_m.
"""

import argparse
import math


def margin_db(distance_m, tx_power_dbm, exponent, frequency_hz, sensitivity_dbm):
    loss = 10.0 * exponent * math.log10(4.0 * math.pi * distance_m * frequency_hz / 3e8)
    return tx_power_dbm - loss - sensitivity_dbm


def bisect_range(tx_power_dbm, exponent, frequency_hz, sensitivity_dbm,
                 lo=0.1, hi=1e6, iterations=200):
    assert margin_db(lo, tx_power_dbm, exponent, frequency_hz, sensitivity_dbm) > 0
    assert margin_db(hi, tx_power_dbm, exponent, frequency_hz, sensitivity_dbm) < 0
    for _ in range(iterations):
        mid = (lo + hi) / 2
        if margin_db(mid, tx_power_dbm, exponent, frequency_hz, sensitivity_dbm) >= 0:
            lo = mid
        else:
            hi = mid
    return lo


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--tx-power-dbm", type=float, default=20.0)
    parser.add_argument("--exponent", type=float, default=2.75)
    parser.add_argument("--frequency-hz", type=float, default=2.4e9)
    parser.add_argument("--sensitivity-dbm", type=float, default=-83.0)
    args = parser.parse_args()
    result = bisect_range(args.tx_power_dbm, args.exponent, args.frequency_hz,
                          args.sensitivity_dbm)
    print(f"max communication range: {result:.6f} m")
    for d in (1, 10, 30, 55, 56, 100):
        m = margin_db(d, args.tx_power_dbm, args.exponent, args.frequency_hz,
                      args.sensitivity_dbm)
        print(f"  d={d:>4} m  link margin {m:+7.2f} dB  {'receivable' if m >= 0 else 'silent'}")


if __name__ == "__main__":
    main()
