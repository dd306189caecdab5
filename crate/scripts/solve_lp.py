#!/usr/bin/env python3
"""Solve an LP file with HiGHS and write the assignment in `name value` form.

Usage: solve_lp.py MODEL.lp ASSIGNMENT.txt [--time-limit SECONDS]

Requires the `highspy` package. Exit status 0 on an optimal solve, 1 when
HiGHS finishes without an optimal solution, 2 on bad usage.
"""

import argparse
import sys

import highspy


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("model")
    parser.add_argument("assignment")
    parser.add_argument("--time-limit", type=float, default=600.0)
    args = parser.parse_args()

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("time_limit", args.time_limit)
    if h.readModel(args.model) != highspy.HighsStatus.kOk:
        print(f"cannot read {args.model}", file=sys.stderr)
        return 2
    h.run()
    status = h.getModelStatus()
    if status != highspy.HighsModelStatus.kOptimal:
        print(f"solver status: {h.modelStatusToString(status)}", file=sys.stderr)
        return 1

    lp = h.getLp()
    values = h.getSolution().col_value
    with open(args.assignment, "w") as out:
        out.write(f"# objective {h.getInfo().objective_function_value}\n")
        for name, value in zip(lp.col_names_, values):
            out.write(f"{name} {value!r}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
