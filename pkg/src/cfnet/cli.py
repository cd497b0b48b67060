"""Command-line interface.

    cfnet generate --config FILE [--network I] [--out FILE]
    cfnet estimate --method sere|mc --config FILE
    cfnet sweep --experiment fig2|fig3|fig4|fig5 --config FILE --out DIR
    cfnet validate --config FILE

``--seed`` overrides the config seed; without it ``CFNET_SEED`` is used if
set.  Exit status: 0 success, 1 failed validation, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

from .config import ConfigError, NetworkConfig
from .harness import FIGURES, load_experiment, run_experiment
from .linkops import mc_ergodic_rate
from .sere import sere_rate
from .topology import generate_network

log = logging.getLogger("cfnet")


def _seed(args) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("CFNET_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"CFNET_SEED is not an integer: {env!r}") from None
    return None


def _network_config(args) -> NetworkConfig:
    try:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {args.config}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    names = {f.name for f in fields(NetworkConfig)}
    # experiment keys may share the file
    cfg = NetworkConfig.from_dict({k: v for k, v in data.items() if k in names})
    seed = _seed(args)
    return cfg if seed is None else cfg.replace(seed=seed)


def _cmd_generate(args) -> int:
    cfg = _network_config(args)
    topo, prof = generate_network(cfg, args.network)
    doc = {
        "config": cfg.to_dict(),
        "network": args.network,
        "topology": topo.to_dict(),
        "large_scale": [[blk.tolist() for blk in row] for row in prof.l],
    }
    text = json.dumps(doc)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text)
    return 0


def _cmd_estimate(args) -> int:
    cfg = _network_config(args)
    topo, prof = generate_network(cfg, args.network)
    if args.method == "mc":
        res = mc_ergodic_rate(topo, prof, cfg, network_index=args.network,
                              threads=args.threads)
        extra = {"realizations": res.realizations, "resampled": res.resampled}
    else:
        res = sere_rate(topo, prof, cfg, threads=args.threads)
        extra = {"xi": res.xi.tolist()}
    doc = {
        "method": args.method,
        "seed": cfg.seed,
        "network": args.network,
        "reg_policy": str(cfg.reg_policy),
        "central_index": topo.central_index,
        "central_mean_rate": res.central_rate,
        "per_user_rates": [r.tolist() for r in res.rates],
        "time_s": res.time_s,
        **extra,
    }
    print(json.dumps(doc))
    return 0


def _cmd_sweep(args) -> int:
    seed = _seed(args)
    cfg, spec = load_experiment(args.config, FIGURES[args.experiment], seed=seed)
    spec.output = args.out
    rows = run_experiment(spec, cfg, threads=args.threads, timing=not args.no_timing)
    print(f"wrote {len(rows)} rows to {Path(args.out) / (spec.figure + '.csv')}",
          file=sys.stderr)
    return 0


def _cmd_validate(args) -> int:
    from .validate import run_checks

    cfg = _network_config(args)
    checks = run_checks(cfg, args.network)
    for c in checks:
        print(f"{'PASS' if c.ok else 'FAIL'}  {c.name}  {c.detail}".rstrip())
    return 0 if all(c.ok for c in checks) else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON config file")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--threads", type=int, default=1, help="parallel workers")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="cfnet", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="dump topology and large-scale profile")
    g.add_argument("--network", type=int, default=0, help="network realization index")
    g.add_argument("--out", help="output file (default stdout)")
    g.set_defaults(func=_cmd_generate)

    e = sub.add_parser("estimate", parents=[common], help="per-user rates as JSON")
    e.add_argument("--method", choices=["sere", "mc"], required=True)
    e.add_argument("--network", type=int, default=0)
    e.set_defaults(func=_cmd_estimate)

    s = sub.add_parser("sweep", parents=[common], help="run a figure-family experiment")
    s.add_argument("--experiment", choices=sorted(FIGURES), required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--no-timing", action="store_true",
                   help="leave time_s empty for byte-reproducible CSV")
    s.set_defaults(func=_cmd_sweep)

    v = sub.add_parser("validate", parents=[common], help="property checks on one scenario")
    v.add_argument("--network", type=int, default=0)
    v.set_defaults(func=_cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.threads < 1:
        print("cfnet: error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"cfnet: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
