"""Vanilla cooperative run against single-domain runs on each sparsification."""

from __future__ import annotations

from _common import graph_for, parser

from coevo.experiments import coop_vs_single


def main() -> int:
    args = parser(__doc__, ["usair", "netscience"]).parse_args()
    ok = True
    for name in args.networks:
        g, label = graph_for(name, args.surrogate)
        c = coop_vs_single(g, range(1, args.seeds + 1), args.generations)
        best_single = max((k for k in c.finals if k != "co"), key=c.mean)
        passed = c.mean("co") >= c.mean(best_single) - c.sem(best_single)
        ok &= passed
        print(label)
        print("\n".join(c.lines()))
        print(f"  co >= {best_single} - SEM: {'PASS' if passed else 'FAIL'}")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
