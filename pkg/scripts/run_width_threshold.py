#!/usr/bin/env python3
"""How wide must the network be for the identity initialization to start
below the energy barrier?

Sweeps m in {d^2, 4d^2, 16d^2} at fixed d and reports the fraction of
random gaussian teachers for which the sqrt(m)-identity init is certified
below the barrier; the fraction should be non-decreasing in m. Also prints
the Wishart spectrum statistics feeding that certification: the scaled
Gram second moment (limit 1/4) and the singular-value band sqrt(m) +- 2 sqrt(d).
"""

import argparse

from quadland import (
    check_init_below_barrier,
    identity_init,
    moments_of,
    parse_distribution,
    sample_teacher,
    wishart_spectrum_report,
)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--d", type=int, default=10)
    parser.add_argument("--seeds", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    dist = parse_distribution("gaussian")
    moments = moments_of(dist)
    d = args.d

    print(f"d={d}, {args.seeds} teacher seeds per width")
    for factor in (1, 4, 16):
        m = factor * d * d
        init = identity_init(m, d, "m")
        below = 0
        moment_sum = 0.0
        inside = 0
        for i in range(args.seeds):
            teacher = sample_teacher(dist, m, d, args.seed + i)
            if check_init_below_barrier(init, teacher, moments).below:
                below += 1
            spec = wishart_spectrum_report(teacher)
            moment_sum += spec.scaled_second_moment
            inside += spec.inside_band
        print(f"  m={m:>6} ({factor:>2}d^2): below barrier {below}/{args.seeds}, "
              f"mean scaled 2nd moment {moment_sum / args.seeds:.4f} (limit 0.25), "
              f"band hits {inside}/{args.seeds}")


if __name__ == "__main__":
    main()
