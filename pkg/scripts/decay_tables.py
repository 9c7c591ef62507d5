"""Print the decay tables behind criteria 4, 7 and 10.

    python3 scripts/decay_tables.py [--fine]

``--fine`` adds the raster fractions at 4096 x 4096, to show that the
level-6 plateau is not a pixel-size artifact.
"""

import argparse

from besicovitch.suite import radial_decay_table, raster_table, section_decay_table


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--fine", action="store_true")
    args = ap.parse_args()

    print("radial measure of the fitted set, levels 2 4 6 8, and the 8/2 ratio")
    for p, vals in radial_decay_table():
        if vals is None:
            print(f"  ({p[0]:5.2f},{p[1]:5.2f})  inside the set")
            continue
        cells = " ".join(f"{v:.4f}" for v in vals)
        print(f"  ({p[0]:5.2f},{p[1]:5.2f})  {cells}  ratio {vals[-1] / vals[0]:.3f}")

    print("\nassembly section measure, levels 2..8, and the 8/2 ratio")
    probes, rows = section_decay_table()
    for e, vals in zip(probes, rows):
        cells = " ".join(f"{v:.4f}" for v in vals)
        ratio = vals[-1] / vals[0] if vals[0] else float("nan")
        print(f"  {e!s:42s} {cells}  ratio {ratio:.3f}")

    print("\nassembly raster fraction, levels 1..6, 1024 x 1024 on [-2,2]^2")
    print("  " + " ".join(f"{f:.4f}" for f in raster_table()))
    if args.fine:
        print("assembly raster fraction, levels 1..6, 4096 x 4096")
        print("  " + " ".join(f"{f:.4f}" for f in raster_table(size=4096)))


if __name__ == "__main__":
    main()
