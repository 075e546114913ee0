#!/usr/bin/env python3
"""Solve an LP-format MILP with HiGHS and write `name value` lines.

Usage: highs_solve.py <model.lp> <solution.sol> [time_limit_seconds]
"""
import sys

import highspy


def main():
    if len(sys.argv) < 3:
        sys.exit("usage: highs_solve.py <model.lp> <solution.sol> [time_limit]")
    lp_path, sol_path = sys.argv[1], sys.argv[2]
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    if len(sys.argv) > 3:
        h.setOptionValue("time_limit", float(sys.argv[3]))
    if h.readModel(lp_path) != highspy.HighsStatus.kOk:
        sys.exit(f"could not read {lp_path}")
    h.run()
    status = h.getModelStatus()
    info = h.getInfo()
    names = h.getLp().col_names_
    with open(sol_path, "w") as out:
        if status == highspy.HighsModelStatus.kInfeasible:
            out.write("# status infeasible\n")
            return
        has_sol = info.primal_solution_status == 2
        if status == highspy.HighsModelStatus.kOptimal:
            out.write("# status optimal\n")
        else:
            out.write("# status timelimit\n")
            out.write(f"# bound {info.mip_dual_bound}\n")
        if has_sol:
            values = h.getSolution().col_value
            for name, value in zip(names, values):
                out.write(f"{name} {value!r}\n")


if __name__ == "__main__":
    main()
