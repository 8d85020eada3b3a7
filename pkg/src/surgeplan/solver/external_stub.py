"""Reference external solver honoring the LP-file exchange protocol.

Usage: python3 -m surgeplan.solver.external_stub <model.lp> <out.sol>
"""

from __future__ import annotations

import sys

from surgeplan.solver.highs import solve_lp_highs, solve_mip_highs
from surgeplan.solver.lp_format import parse_lp


def main(argv: list[str]) -> int:
    if len(argv) != 2:
        print("usage: external_stub <model.lp> <out.sol>", file=sys.stderr)
        return 2
    model = parse_lp(open(argv[0]).read())
    if model.integer_indices():
        res = solve_mip_highs(model)
    else:
        res = solve_lp_highs(model)
    lines = [res.status]
    if res.x is not None:
        lines.append(repr(res.objective))
        # variable names parsed from the LP file are already in safe form
        lines.extend(f"{model.variables[i].name} {repr(float(res.x[i]))}" for i in range(model.n_vars))
    with open(argv[1], "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
