"""Follow the outlier pipeline on one random instance.

The search over ``lambda`` brackets the point where the component count
drops to ``k``; the two runs at the bracket are mixed into an ordered pair
set, and one of four prefixes of it is rounded.
"""

from __future__ import annotations

from sumradii.bench import brute_force_opt, random_instance
from sumradii.outliers import iterate_to_fixpoint, mix_orderly_structured
from sumradii.rounding import assemble_outliers


def main(seed: int = 42) -> None:
    inst = random_instance(8, seed=seed, k=2, m=1)
    fix = iterate_to_fixpoint(inst)
    print(f"bracket [{float(fix.lo):.4f}, {float(fix.hi):.4f}] after phase search")
    for name in ("run_lo", "run_mid", "run_hi"):
        run = getattr(fix, name)
        print(f"  {name:<8} picks {len(run.picked)} pairs in {run.components} components")
    os_ = mix_orderly_structured(inst, fix)
    print(f"ordered set: ell = {os_.ell}, ell' = {os_.ell_prime}, special {os_.special}")
    asm = assemble_outliers(inst, os_)
    opt = brute_force_opt(inst).cost
    print(f"case {asm.case}: cost {float(asm.solution.cost):.4f}, optimum {float(opt):.4f}")
    print(f"outliers {asm.solution.outliers}")


if __name__ == "__main__":
    main()
