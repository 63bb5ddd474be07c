"""Row (H_c) and column (H_L) minimum distances reached by the random codebook search."""

import argparse

from handgeom import codes


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--classes", type=int, default=22)
    ap.add_argument("--bits", type=int, nargs="+", default=[15, 31, 63])
    ap.add_argument("--iterations", type=int, nargs="+", default=[1, 10, 100, 1000])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print("bits\titerations\tH_c\tH_L")
    for b in args.bits:
        for it in args.iterations:
            _, hc, hl = codes.random_ecoc(args.classes, b, it, seed=args.seed)
            print(f"{b}\t{it}\t{hc}\t{hl}", flush=True)


if __name__ == "__main__":
    main()
