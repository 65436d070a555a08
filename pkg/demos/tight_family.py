"""Walk through the tight instance family.

Each instance has optimum ``3k`` while the dual certificate is smaller, so
the primal-dual ratio approaches 3 as ``h`` grows.
"""

from __future__ import annotations

from sumradii.bench import brute_force_opt, tight_instance
from sumradii.solver import solve


def main() -> None:
    print(f"{'h':>2} {'k':>2} {'cost':>5} {'dual':>10} {'cost/dual':>10} {'opt':>4}")
    for h in (3, 4, 5, 6):
        for k in (1, 2):
            inst = tight_instance(h, k)
            res = solve(inst)
            opt = brute_force_opt(inst).cost if h == 3 else "-"
            ratio = res.cost / res.dual_objective
            print(f"{h:>2} {k:>2} {str(res.cost):>5} {str(res.dual_objective):>10} {float(ratio):>10.4f} {str(opt):>4}")


if __name__ == "__main__":
    main()
