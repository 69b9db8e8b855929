#!/usr/bin/env python3
"""Walk a few formulas from raw string to the 4x7x32 training tensor.

Run: python3 demos/parse_and_encode.py
"""

import numpy as np

from scscreen.formula import parse_composition
from scscreen.ptable import element_coordinates, encode_ptable

FORMULAS = [
    "H2He3",             # the two-element warm-up: fractions 2/5 and 3/5
    "MgB2",
    "YBa2Cu3O7",
    "La1.85Sr0.15CuO4",  # decimal subscripts are ordinary numbers
    "Ca(OH)2",           # groups multiply through
]


def main():
    for raw in FORMULAS:
        comp = parse_composition(raw)
        parts = "  ".join(f"{s}:{f:.4f}" for s, f in comp.items())
        print(f"{raw:<20} -> {parts}")
        tensor = encode_ptable(comp)
        print(f"{'':20}    tensor sum = {tensor.sum():.12f}, "
              f"{np.count_nonzero(tensor)} nonzero cells")
        for s in comp:
            info = element_coordinates(s)
            print(f"{'':24}{s:>2} sits at channel {info.block.name}, "
                  f"row {info.row + 1}, col {info.col + 1}")
        print()

    # single-element sanity: one element, one cell, value 1
    nb = encode_ptable(parse_composition("Nb"))
    channel, row, col = np.argwhere(nb != 0)[0]
    print(f"Nb alone -> exactly one nonzero cell, value {nb[channel, row, col]:g} "
          f"at (channel {channel}, row {row + 1}, col {col + 1})")


if __name__ == "__main__":
    main()
