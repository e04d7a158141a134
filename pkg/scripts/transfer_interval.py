"""Cooperative runs with elite exchange every 2 against every 5 generations."""

from __future__ import annotations

from _common import graph_for, parser

from coevo.experiments import transfer_intervals


def main() -> int:
    args = parser(__doc__, ["usair"]).parse_args()
    ok = True
    for name in args.networks:
        g, label = graph_for(name, args.surrogate)
        c = transfer_intervals(g, (2, 5), range(1, args.seeds + 1), args.generations)
        passed = c.mean("T=2") >= c.mean("T=5") - c.sem("T=5")
        ok &= passed
        print(label)
        print("\n".join(c.lines()))
        print(f"  T=2 >= T=5 - SEM: {'PASS' if passed else 'FAIL'}")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
