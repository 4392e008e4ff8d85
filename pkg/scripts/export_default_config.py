#!/usr/bin/env python3
"""Write the built-in reference scenario to a JSON config for editing."""

import argparse

from wavefield_anc.scenario import default_scenario

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("path", nargs="?", default="scenario.json")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    default_scenario(args.seed).save(args.path)
    print(f"wrote {args.path}")
