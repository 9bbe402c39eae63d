"""Command-line interface.

Verbs: ``run`` (execute an experiment from a config file), ``verify-bounds``
(statistically check the configured theoretical claims), ``params`` (print
the closed-form (S, N, T) triple and oracle budget for target accuracy and
confidence) and ``list-problems``.

Exit codes: 0 success, 2 configuration error, 3 inconclusive verification,
4 runtime failure (including a failed verification).
"""

from __future__ import annotations

import functools
import json
import sys

import click

from .config import parse_config_file
from .errors import ConfigError, InputError, RsgBenchError
from .experiments import PROBLEM_CATALOG, run_experiment
from .two_phase import (params_N_first_order, params_N_zeroth_order,
                        params_S, params_T_first_order, params_T_light_tail,
                        params_T_zeroth_order)
from .bounds import budget_totals
from .verify import overall_verdict, run_claims

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INCONCLUSIVE = 3
EXIT_RUNTIME = 4


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, InputError) as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except RsgBenchError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_RUNTIME)
    return wrapper


@click.group()
def main():
    """Randomized stochastic gradient benchmark harness."""


@main.command("run")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Experiment configuration file.")
@click.option("--seed", type=int, default=None,
              help="Override the master seed from the config.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False),
              default=None, help="Output directory (default from config).")
@click.option("--threads", type=int, default=None,
              help="Worker count; 0 uses all cores. Scheduling only, "
                   "never affects results.")
@_guarded
def cmd_run(config_path, seed, out_dir, threads):
    """Run the configured experiment and write CSV/JSON reports."""
    config = parse_config_file(config_path)
    output = run_experiment(config, out_dir=out_dir, threads=threads,
                            seed=seed)
    click.echo(json.dumps({
        "paths": output.paths,
        "replications": len(output.rows),
        "diverged": output.aggregate["statistics"]["diverged"],
        "grad_norm_sq_mean":
            (output.aggregate["statistics"]["grad_norm_sq"] or {}).get("mean"),
    }, sort_keys=True))


@main.command("verify-bounds")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Config naming the claims to verify (key 'claims').")
@click.option("--seed", type=int, default=None,
              help="Override the master seed from the config.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False),
              default=None, help="Directory for the JSON certificate.")
@click.option("--threads", type=int, default=None,
              help="Worker count for the underlying replications.")
@_guarded
def cmd_verify_bounds(config_path, seed, out_dir, threads):
    """Check the configured theoretical claims and emit certificates."""
    config = parse_config_file(config_path)
    if seed is not None:
        config.seed = seed
    if threads is not None:
        config.threads = threads
    results = run_claims(config)
    verdict = overall_verdict(results)
    document = json.dumps({
        "claims": [r.to_dict() for r in results],
        "verdict": verdict,
    }, indent=2, sort_keys=True)
    click.echo(document)
    if out_dir:
        import os
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, "verification.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(document + "\n")
    if verdict == "fail":
        sys.exit(EXIT_RUNTIME)
    if verdict == "inconclusive":
        sys.exit(EXIT_INCONCLUSIVE)


@main.command("params")
@click.option("--epsilon", type=float, required=True,
              help="Target accuracy for the squared gradient norm.")
@click.option("--lam", "--lambda", "lam", type=float, required=True,
              help="Target failure probability in (0, 1).")
@click.option("--lipschitz", "-L", "lipschitz", type=float, required=True,
              help="Gradient Lipschitz constant L.")
@click.option("--d-f", "d_f", type=float, required=True,
              help="Scale constant D_f.")
@click.option("--d-tilde", type=float, default=None,
              help="Stepsize surrogate (defaults to D_f).")
@click.option("--sigma", type=float, default=0.0, help="Noise level.")
@click.option("--order", type=click.Choice(["first", "zeroth"]),
              default="first")
@click.option("--n", "dim", type=int, default=None,
              help="Dimension (required for order 'zeroth').")
@click.option("--light-tail", is_flag=True,
              help="Use the smaller light-tail post sample size.")
@_guarded
def cmd_params(epsilon, lam, lipschitz, d_f, d_tilde, sigma, order, dim,
               light_tail):
    """Print the closed-form (S, N, T) and total oracle budget as JSON."""
    d_tilde = d_f if d_tilde is None else d_tilde
    S = params_S(lam)
    if order == "zeroth":
        if dim is None:
            raise InputError("--n is required for order 'zeroth'")
        N = params_N_zeroth_order(epsilon, lipschitz, d_f, d_tilde, sigma, dim)
        T = params_T_zeroth_order(epsilon, lam, sigma, S, dim)
    else:
        N = params_N_first_order(epsilon, lipschitz, d_f, d_tilde, sigma)
        if light_tail:
            T = params_T_light_tail(epsilon, lam, sigma, S)
        else:
            T = params_T_first_order(epsilon, lam, sigma, S)
    click.echo(json.dumps({
        "S": S, "N": N, "T": T,
        "budget": budget_totals(S, N, T, order),
        "order": order, "light_tail": bool(light_tail),
    }, sort_keys=True))


@main.command("list-problems")
@_guarded
def cmd_list_problems():
    """Print the benchmark problem catalog as JSON."""
    click.echo(json.dumps(PROBLEM_CATALOG, indent=2, sort_keys=True))


if __name__ == "__main__":  # pragma: no cover
    main()
