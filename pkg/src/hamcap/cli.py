"""hamcap command line: profiles, orbits, capacity, verify.

Exit codes: 0 when every assertion of the run holds, 1 on an assertion
failure, 2 on a configuration or bracket error.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click

from .errors import BadParams, BracketInvalid, ConfigError, HamcapError
from .presets import PRESETS, RunConfig

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
CONFIG_ERRORS = (BadParams, BracketInvalid, ConfigError, json.JSONDecodeError, TypeError)


def run_options(default_preset: str = "annulus"):
    def wrap(f):
        opts = [
            click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON file with RunConfig fields."),
            click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None, help=f"Named setup (default {default_preset})."),
            click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory."),
            click.option("--grid", type=int, default=None, help="Seed density per dimension."),
            click.option("--steps", type=int, default=None, help="Integration steps per period."),
            click.option("--tol", type=float, default=None, help="Shooting tolerance."),
            click.option("--threads", type=int, default=None, help="Cap on worker threads."),
            click.option("--r", "r", type=int, default=None, help="Winding multiplicity r of the class."),
        ]
        for opt in reversed(opts):
            f = opt(f)
        return f

    return wrap


def _config(default_preset, config_path, preset, **overrides) -> RunConfig:
    if preset is None and config_path is None:
        preset = default_preset
    return RunConfig.load(config_path, preset=preset, **overrides)


def _execute(fn, default_preset, config_path, preset, **overrides):
    try:
        cfg = _config(default_preset, config_path, preset, **overrides)
        result = fn(cfg)
    except CONFIG_ERRORS as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(EXIT_CONFIG)
    except HamcapError as err:
        click.echo(f"error: {type(err).__name__}: {err}", err=True)
        sys.exit(EXIT_FAIL)
    for line in result["lines"]:
        click.echo(line)
    click.echo(f"outputs in {cfg.out}")
    sys.exit(EXIT_OK if result["passed"] else EXIT_FAIL)


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Periodic orbits in fixed homotopy classes and relative capacities."""


@main.command()
@run_options()
def profiles(config_path, preset, **kw):
    """Render the squeezing-pair profiles (or a G^k slice) to SVG and CSV."""
    from .runner import run_profiles

    _execute(run_profiles, "annulus", config_path, preset, **kw)


@main.command()
@run_options()
def orbits(config_path, preset, **kw):
    """Search for periodic orbits in the preset's class and check their actions."""
    from .runner import run_orbits

    _execute(run_orbits, "annulus", config_path, preset, **kw)


@main.command()
@run_options()
@click.option("--cap-tol", type=float, default=None, help="Target bracket width.")
def capacity(config_path, preset, cap_tol, **kw):
    """Bisect the capacity of the preset's family and compare rotation vectors."""
    from .runner import run_capacity

    _execute(run_capacity, "annulus", config_path, preset, cap_tol=cap_tol, **kw)


def _parse_overrides(items) -> dict:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise BadParams(f"tolerance override must look like name=value, got {item!r}")
        try:
            out[key] = float(value)
        except ValueError as err:
            raise BadParams(f"tolerance {key} needs a number, got {value!r}") from err
    return out


@main.command()
@click.option("--only", type=click.IntRange(1, 8), multiple=True, help="Run only these criteria (repeatable).")
@click.option("--set", "overrides", multiple=True, metavar="NAME=VALUE", help="Override a tolerance, e.g. --set energy_drift=1e-4.")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Write summary.json here.")
@click.option("--verbose", "-v", is_flag=True, help="Print every individual check.")
def verify(only, overrides, out, verbose):
    """Run the acceptance suite and print one pass/fail line per criterion."""
    from .acceptance import CRITERIA, TOLERANCES, run_criterion

    try:
        tol = _parse_overrides(overrides)
    except BadParams as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(EXIT_CONFIG)
    unknown = set(tol) - set(TOLERANCES)
    if unknown:
        click.echo(f"error: unknown tolerances {sorted(unknown)}; known: {sorted(TOLERANCES)}", err=True)
        sys.exit(EXIT_CONFIG)
    t0 = time.perf_counter()
    results = []
    for number in sorted(set(only)) or sorted(CRITERIA):
        res = run_criterion(number, tol)
        click.echo(res.line())
        if verbose or not res.passed:
            for c in res.checks:
                click.echo(f"    [{'ok' if c.passed else 'FAIL'}] {c.name}: {c.detail}")
        results.append(res)
    total = time.perf_counter() - t0
    passed = all(r.passed for r in results)
    click.echo(f"{sum(r.passed for r in results)}/{len(results)} criteria passed in {total:.1f} s")
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        summary = {"passed": passed, "runtime": round(total, 3), "tolerances": {**TOLERANCES, **tol}, "criteria": [r.to_dict() for r in results]}
        with open(Path(out) / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    sys.exit(EXIT_OK if passed else EXIT_FAIL)


if __name__ == "__main__":
    main()
