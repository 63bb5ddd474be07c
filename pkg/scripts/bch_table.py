"""List every supported BCH(n, k): t, generator, measured minimum distance and ECOC width for 22 classes."""

from handgeom import codes


def main(classes: int = 22):
    print("n\tk\tt\tgenerator\td_min\tecoc_bits")
    for (n, k), t in sorted(codes.valid_pairs().items()):
        code = codes.bch_new(n, k)
        d = codes.min_distance(code) if k <= codes.ENUMERATION_LIMIT else "-"
        width = codes.ecoc_from_bch(code, classes).bits if (1 << k) >= classes else "-"
        print(f"{n}\t{k}\t{t}\t{code.generator:#b}\t{d}\t{width}")


if __name__ == "__main__":
    main()
