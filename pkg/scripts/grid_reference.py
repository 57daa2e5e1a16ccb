"""Recompute the two-qubit grid reference values used as test fixtures.

Prints grid-certified REQ and negativity of quantumness for the named
two-qubit states (Bell, Werner, the |00>/|++> mixture).
"""

import argparse

from qactivate.cli import build_state
from qactivate.quantumness import negativity_of_quantumness, req


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--states", nargs="+", default=["bell", "mix2", "werner:0.25", "werner:0.5"])
    args = p.parse_args()
    for kind in args.states:
        rho = build_state(kind)
        q = req(rho, grid=True)
        n = negativity_of_quantumness(rho, grid=True)
        print(f"{kind:<12} req={q.value!r:<22} qneg={n.value!r}")


if __name__ == "__main__":
    main()
