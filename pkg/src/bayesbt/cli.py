"""Command-line interface: ``bayesbt {fit,sample,predict,diag}``.

Exit codes: 0 success, 1 invalid data or configuration, 2 usage error,
3 EM did not converge (the result is still written).  Relative output paths
are resolved against ``$BAYESBT_OUTPUT_DIR`` when that variable is set.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics, models
from .data import Hyperparams, PairwiseCounts, RankingData
from .em import EmConfig, run_em
from .exceptions import DiagnosticError, UnseenPlayerWarning
from .gibbs import ChainConfig, run_chains
from .io import (
    IdMap,
    build_container,
    dumps_json,
    fmt_float,
    parse_dataset,
    read_chains_csv,
    read_json,
    skill_labels,
    write_chains_csv,
    write_json,
)

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_NOT_CONVERGED = 0, 1, 2, 3

DEFAULT_FORMAT = {
    "bt": "matches", "home": "home", "ties": "ties",
    "group": "groups", "pl": "rankings", "graph": "graph",
}
OUTPUT_DIR_ENV = "BAYESBT_OUTPUT_DIR"


@dataclass
class RunConfig:
    """Everything besides the data file that determines a run."""

    command: str
    model: str
    data_path: str
    data_format: str
    hyperparams: Hyperparams
    em: EmConfig | None = None
    chain: ChainConfig | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "command": self.command,
            "model": self.model,
            "data_path": self.data_path,
            "data_format": self.data_format,
            "hyperparams": asdict(self.hyperparams),
        }
        if self.em is not None:
            out["em"] = asdict(self.em)
        if self.chain is not None:
            out["chain"] = asdict(self.chain)
        out.update(self.extra)
        return out


def _out_path(p: str | None) -> Path | None:
    if p is None:
        return None
    path = Path(p)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    return path


def _emit(text: str, path: Path | None):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _on_off(s: str) -> bool:
    if s not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return s == "on"


def _b_value(s: str):
    if s == "auto":
        return s
    try:
        return float(s)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a number or 'auto'") from None


def load_for_model(model: str, path, fmt: str | None, ids: IdMap | None = None):
    """Parse ``path`` and convert it to the container ``model`` expects.

    Besides each model's own format, pairwise ``matches`` files can feed the
    PL and group models, and two-item ``rankings`` files the BT model.
    """
    fmt = fmt or DEFAULT_FORMAT[model]
    ds = parse_dataset(path, fmt, ids)
    if fmt == DEFAULT_FORMAT[model]:
        return ds
    if fmt == "matches" and model in ("pl", "group"):
        ds.data = models.pairwise_to_rankings(ds.data) if model == "pl" else models.pairwise_to_groups(ds.data)
        return ds
    if fmt == "rankings" and model == "bt":
        ds.data = models.rankings_to_pairwise(ds.data)
        return ds
    raise ValueError(f"format {fmt!r} cannot be used with model {model!r}")


def _hyperparams(args, K: int) -> Hyperparams:
    b = K * args.a - 1.0 if args.b == "auto" else args.b
    return Hyperparams(a=args.a, b=b, a_theta=args.a_theta, b_theta=args.b_theta)


def cmd_fit(args) -> int:
    ds = load_for_model(args.model, args.data, args.format)
    hp = _hyperparams(args, ds.K)
    cfg = EmConfig(max_iter=args.max_iter, tol=args.tol)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = run_em(args.model, ds.data, hp, cfg)
    run = RunConfig("fit", args.model, str(args.data), ds.format, hp, em=cfg)
    out = {
        "model": args.model,
        "ids": ds.ids.names,
        "lambda": res.skills,
        "pi": res.pi,
        "beta": res.beta,
        "theta": res.theta,
        "log_posterior": res.log_posterior,
        "iterations": res.iterations,
        "converged": res.converged,
        "warnings": res.warnings,
        "config": run.to_dict(),
    }
    _emit(dumps_json(out), _out_path(args.out))
    if not res.converged:
        print(f"warning: EM did not converge in {res.iterations} iterations", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_sample(args) -> int:
    ds = load_for_model(args.model, args.data, args.format)
    hp = _hyperparams(args, ds.K)
    if not hp.proper:
        print("error: sampling needs a proper prior; b = 0 gives an improper posterior. "
              "Pass --b with a positive value or --b auto.", file=sys.stderr)
        return EXIT_ERROR
    cfg = ChainConfig(
        iterations=args.iters, burn_in=args.burnin, thin=args.thin, seed=args.seed,
        rescale_enabled=args.rescale, sample_a=args.sample_a, sigma_a=args.sigma_a,
        sigma_theta=args.sigma_theta,
    )
    chains = run_chains(args.model, ds.data, hp, cfg, args.chains, kernel=args.kernel,
                        labels=ds.ids.names)
    out = _out_path(args.out)
    write_chains_csv(chains, out)
    run = RunConfig("sample", args.model, str(args.data), ds.format, hp, chain=cfg,
                    extra={"chains": args.chains, "kernel": args.kernel})
    meta = {
        "run_config": run.to_dict(),
        "ids": ds.ids.names,
        "columns": chains[0].columns,
        "rng": chains[0].metadata["rng"],
        "acceptance": [c.acceptance_rates() for c in chains],
        "acceptance_counts": [c.acceptance for c in chains],
    }
    meta_path = _out_path(args.meta) if args.meta else out.with_name(out.name + ".meta.json")
    write_json(meta, meta_path)
    return EXIT_OK


def _predict_fit(args):
    """Return (ids, skill draws, theta draws or None, hyperparams for the fallback)."""
    if args.mode == "map":
        fit = read_json(args.fit)
        ids = IdMap(fit["ids"])
        draws = np.asarray(fit["lambda"], dtype=float)[None, :]
        theta = None if fit.get("theta") is None else np.array([fit["theta"]])
        hp_d = fit.get("config", {}).get("hyperparams")
    else:
        chains = read_chains_csv(args.chain)
        cols = chains[0].columns
        ids = IdMap(skill_labels(cols))
        draws = np.vstack([c.skills for c in chains])
        theta = np.concatenate([c.column("theta") for c in chains]) if "theta" in cols else None
        hp_d = None
        meta = Path(str(args.chain) + ".meta.json")
        if meta.exists():
            hp_d = read_json(meta)["run_config"]["hyperparams"]
    hp = None
    if args.a is not None or args.b is not None:
        hp = Hyperparams(a=args.a if args.a is not None else 1.0, b=args.b or 0.0)
    elif hp_d is not None:
        hp = Hyperparams(**hp_d)
    return ids, draws, theta, hp


def cmd_predict(args) -> int:
    if args.mode == "map" and not args.fit:
        print("error: --mode map needs --fit", file=sys.stderr)
        return EXIT_USAGE
    if args.mode == "bayes" and not args.chain:
        print("error: --mode bayes needs --chain", file=sys.stderr)
        return EXIT_USAGE
    ids, draws, theta, hp = _predict_fit(args)
    fmt = "ties" if args.model == "ties" else (args.format or "rankings")
    ds = parse_dataset(args.test, fmt, ids)
    unseen = ds.ids.names[len(ids):]
    rows = [("metric", "value")]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnseenPlayerWarning)
        if args.model == "pl":
            data = ds.data if fmt == "rankings" else models.pairwise_to_rankings(ds.data)
            value = diagnostics.pl_test_loglik(draws[0] if args.mode == "map" else draws, data, hp)
            rows.append(("test_loglik", fmt_float(value)))
        else:
            if theta is None:
                print("error: the fit has no tie parameter", file=sys.stderr)
                return EXIT_ERROR
            games = np.array(ds.records, dtype=float).reshape(-1, 3)
            value = diagnostics.ties_predict_mse(draws, theta, games, hp)
            rows.append(("mse", fmt_float(value)))
    rows.append(("n_test", str(len(ds.records))))
    rows.append(("unseen", ";".join(unseen)))
    _emit("".join(",".join(r) + "\n" for r in rows), _out_path(args.out))
    return EXIT_OK


def cmd_diag(args) -> int:
    chains = read_chains_csv(args.chain)
    header = ["chain", "column", "mean", "sd", "q2.5", "q50", "q97.5", f"acf_lag{args.lag}", "error"]
    rows = [header]
    for ch in chains:
        k = ch.metadata["chain"]
        skills = diagnostics.transform_draws(ch.skills, args.transform)
        prefix = {"identity": "lambda", "pi": "pi", "beta": "beta"}[args.transform]
        names = [prefix + ch.columns[i][len("lambda"):] for i in ch.skill_columns]
        others = [i for i in range(len(ch.columns)) if i not in ch.skill_columns]
        series = [(n, skills[:, j]) for j, n in enumerate(names)]
        series += [(ch.columns[i], ch.samples[:, i]) for i in others]
        for name, x in series:
            q = np.quantile(x, diagnostics.SUMMARY_QUANTILES)
            try:
                acf, err = fmt_float(diagnostics.autocorrelation(x, args.lag)), ""
            except DiagnosticError as exc:
                acf, err = "", str(exc)
                print(f"chain {k} column {name}: {exc}", file=sys.stderr)
            rows.append([str(k), name, fmt_float(x.mean()), fmt_float(x.std()),
                         *map(fmt_float, q), acf, err])
    _emit("".join(",".join(r) + "\n" for r in rows), _out_path(args.out))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bayesbt", description="Bayesian Bradley-Terry models.")
    sub = p.add_subparsers(dest="command", required=True)

    def data_args(sp):
        sp.add_argument("--model", required=True, choices=sorted(DEFAULT_FORMAT))
        sp.add_argument("--data", required=True)
        sp.add_argument("--format", choices=sorted(set(DEFAULT_FORMAT.values())))
        sp.add_argument("--a", type=float, default=1.0)
        sp.add_argument("--b", type=_b_value, default=0.0, help="rate of the skill prior or 'auto' (K a - 1)")
        sp.add_argument("--a-theta", type=float, default=1.0)
        sp.add_argument("--b-theta", type=float, default=0.0)

    f = sub.add_parser("fit", help="MAP estimation by EM")
    data_args(f)
    f.add_argument("--tol", type=float, default=1e-9)
    f.add_argument("--max-iter", type=int, default=10000)
    f.add_argument("--out")
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("sample", help="posterior sampling")
    data_args(s)
    s.add_argument("--iters", type=int, required=True)
    s.add_argument("--burnin", type=int, default=0)
    s.add_argument("--thin", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--rescale", type=_on_off, default=False)
    s.add_argument("--sample-a", type=_on_off, default=False)
    s.add_argument("--sigma-a", type=float, default=0.1)
    s.add_argument("--sigma-theta", type=float, default=0.1)
    s.add_argument("--chains", type=int, default=1)
    s.add_argument("--kernel", choices=("gibbs", "gm_mh"), default="gibbs")
    s.add_argument("--out", required=True)
    s.add_argument("--meta")
    s.set_defaults(func=cmd_sample)

    pr = sub.add_parser("predict", help="held-out evaluation")
    pr.add_argument("--model", required=True, choices=("pl", "ties"))
    pr.add_argument("--mode", required=True, choices=("map", "bayes"))
    pr.add_argument("--fit")
    pr.add_argument("--chain")
    pr.add_argument("--test", required=True)
    pr.add_argument("--format", choices=("rankings", "matches"))
    pr.add_argument("--a", type=float)
    pr.add_argument("--b", type=float)
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_predict)

    d = sub.add_parser("diag", help="chain summaries and autocorrelation")
    d.add_argument("--chain", required=True)
    d.add_argument("--lag", type=int, default=1)
    d.add_argument("--transform", choices=("identity", "pi", "beta"), default="identity")
    d.add_argument("--out")
    d.set_defaults(func=cmd_diag)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
