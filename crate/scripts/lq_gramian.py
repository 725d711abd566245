"""Reference action for the single-mode linear benchmark config.

The mode cos(pi x / L) has |xi| = pi / L, so its linear decay rate is
a = |xi|^(2 alpha) + b. The minimum energy to steer X' = -a X + c v from 0
to x at time T is x^2 / (2 W) with W = c^2 (1 - exp(-2 a T)) / (2 a).
"""

import argparse
import math
try:
    import tomllib
except ImportError:
    import tomli as tomllib


def action(alpha, b, c, half_width, horizon, level):
    xi = math.pi / half_width
    a = xi ** (2 * alpha) + b
    w = c * c * (1 - math.exp(-2 * a * horizon)) / (2 * a)
    return level * level / (2 * w)


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("config", nargs="?", default="crates/cli/configs/lq_benchmark.toml")
    args = p.parse_args()
    with open(args.config, "rb") as f:
        cfg = tomllib.load(f)
    grid = cfg["grid"]
    solver = cfg.get("solver", {})
    noise = cfg.get("noise", {})
    drift = cfg["drift"]
    assert drift["kind"] == "linear" and noise.get("modes", 1) == 1
    assert noise.get("offset", 1) == 1 and noise.get("basis", "fourier") == "fourier"
    value = action(
        solver.get("alpha", 0.5),
        drift.get("b", 0.5),
        noise.get("amplitude", 1.0),
        grid.get("half_width", math.pi),
        solver.get("horizon", 1.0),
        cfg["experiment"].get("level", 1.0),
    )
    print(repr(value))


if __name__ == "__main__":
    main()
