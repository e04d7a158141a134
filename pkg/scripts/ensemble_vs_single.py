"""Three noisy mock operators, each alone and fused by consensus voting."""

from __future__ import annotations

from _common import graph_for, parser

from coevo.experiments import ensemble_vs_single_mocks


def main() -> int:
    p = parser(__doc__, ["usair"])
    p.add_argument("--noise", type=float, default=0.3)
    args = p.parse_args()
    ok = True
    for name in args.networks:
        g, label = graph_for(name, args.surrogate)
        c = ensemble_vs_single_mocks(g, range(1, args.seeds + 1), args.generations, args.noise)
        worst = min((k for k in c.finals if k != "ensemble"), key=c.mean)
        passed = c.mean("ensemble") >= c.mean(worst)
        ok &= passed
        print(label)
        print("\n".join(c.lines()))
        print(f"  ensemble >= {worst}: {'PASS' if passed else 'FAIL'}")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
