"""Command-line client for the HTTP service.

Every subcommand builds a request and POSTs it to the service.  Without
--server the app runs in-process (no daemon needed); with --server URL the
same requests go to a remote instance.  Tuning options may come from a config
file of `key = value` lines; explicit flags override file values.
"""

from __future__ import annotations

import argparse
import json
import sys

# option name -> (converter, default) for everything a config file may set
_TUNE_OPTION_SPEC = {
    "variant": (str, "spiking"),
    "shots": (int, 5),
    "val_per_class": (int, 5),
    "epochs": (int, 300),
    "patience": (int, 50),
    "lr": (float, 1e-3),
    "weight_decay": (float, 4e-6),
    "k_atoms": (int, 10),
    "mu": (float, 0.1),
    "gamma": (float, 0.1),
    "horizon": (int, 4),
    "surrogate_width": (float, 1.0),
    "seeds": (int, 10),
    "input_width": (int, 100),
}


def read_config(path: str) -> dict:
    """Parse `key = value` lines; '#' starts a comment, blank lines ignored."""
    values = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"malformed config line {path}:{line_no}: {line!r}")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in _TUNE_OPTION_SPEC:
                raise ValueError(f"unknown config key {key!r} at {path}:{line_no}")
            conv, _ = _TUNE_OPTION_SPEC[key]
            try:
                values[key] = conv(raw)
            except ValueError:
                raise ValueError(f"bad value for {key!r} at {path}:{line_no}: {raw!r}") from None
    return values


def _merge_options(args) -> dict:
    merged = {key: default for key, (_, default) in _TUNE_OPTION_SPEC.items()}
    if getattr(args, "config", None):
        merged.update(read_config(args.config))
    for key in _TUNE_OPTION_SPEC:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    return merged


def _add_tune_options(p: argparse.ArgumentParser):
    p.add_argument("--config", help="config file of key = value lines (flags override)")
    p.add_argument("--variant", choices=["gpf", "gpf-plus", "spiking", "spiking-s",
                                         "spiking-p", "probe"])
    p.add_argument("--shots", type=int)
    p.add_argument("--val-per-class", dest="val_per_class", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--weight-decay", dest="weight_decay", type=float)
    p.add_argument("--k-atoms", dest="k_atoms", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--horizon", type=int)
    p.add_argument("--surrogate-width", dest="surrogate_width", type=float)
    p.add_argument("--seeds", type=int, help="number of seeds; runs use seeds 0..N-1")
    p.add_argument("--input-width", dest="input_width", type=int)


def _add_io_options(p: argparse.ArgumentParser):
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--encoder", required=True, help="frozen encoder checkpoint")
    p.add_argument("--out", required=True, help="run output directory")


def _floats(text: str) -> list:
    return [float(part) for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spikeprompt",
                                     description="sparse spiking graph prompt tuning")
    parser.add_argument("--server", help="service URL; default runs the app in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    p = sub.add_parser("sbm", help="generate a block-model dataset directory")
    p.add_argument("out_dir")
    p.add_argument("--n-per-class", type=int, default=50)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--p-in", type=float, default=0.2)
    p.add_argument("--p-out", type=float, default=0.02)
    p.add_argument("--noise", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("pretrain", help="link-prediction pretraining, frozen checkpoint out")
    p.add_argument("data_dir")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--hidden", type=int, default=256)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--neg-ratio", type=float, default=1.0)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input-width", dest="input_width", type=int, default=100)

    p = sub.add_parser("tune", help="tune prompts for one variant over seeds")
    _add_io_options(p)
    _add_tune_options(p)

    p = sub.add_parser("sweep", help="threshold x horizon grid sweep")
    _add_io_options(p)
    _add_tune_options(p)
    p.add_argument("--thresholds", type=_floats, help="comma-separated threshold grid")
    p.add_argument("--horizons", type=lambda s: [int(x) for x in s.split(",") if x.strip()],
                   help="comma-separated horizon grid")

    p = sub.add_parser("attack", help="robustness under random edge insertion")
    _add_io_options(p)
    _add_tune_options(p)
    p.add_argument("--rates", type=_floats, default=[0.2, 0.4, 0.6, 0.8, 1.0])
    p.add_argument("--variants", default="gpf,gpf-plus,spiking,probe",
                   help="comma-separated variant list")

    p = sub.add_parser("shots", help="accuracy across shot counts")
    _add_io_options(p)
    _add_tune_options(p)
    p.add_argument("--max", dest="max_shots", type=int, default=10)
    p.add_argument("--variants", help="comma-separated variant list")

    p = sub.add_parser("report", help="rebuild metrics files from saved records")
    p.add_argument("run_dir")
    p.add_argument("--out", help="output directory (default: run dir)")

    return parser


def make_client(server: str | None):
    if server:
        import httpx
        return httpx.Client(base_url=server, timeout=None)
    # in-process transport: the CLI stays a pure HTTP client without a daemon
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient

    from .service import app
    return TestClient(app)


def _post(client, path: str, payload: dict) -> int:
    response = client.post(path, json=payload)
    try:
        body = response.json()
    except ValueError:
        body = {"detail": response.text}
    print(json.dumps(body, indent=2, sort_keys=True))
    return 0 if response.status_code == 200 else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn
        uvicorn.run("spikeprompt.service:app", host=args.host, port=args.port)
        return 0

    client = make_client(args.server)
    if args.command == "sbm":
        payload = {"out_dir": args.out_dir, "n_per_class": args.n_per_class,
                   "classes": args.classes, "p_in": args.p_in, "p_out": args.p_out,
                   "feature_noise": args.noise, "seed": args.seed}
        return _post(client, "/datasets/sbm", payload)

    if args.command == "pretrain":
        payload = {"data_dir": args.data_dir, "out_path": args.out,
                   "hidden": args.hidden, "epochs": args.epochs,
                   "neg_ratio": args.neg_ratio, "lr": args.lr, "seed": args.seed,
                   "input_width": args.input_width}
        return _post(client, "/pretrain", payload)

    if args.command == "report":
        return _post(client, "/report", {"run_dir": args.run_dir, "out_dir": args.out})

    payload = _merge_options(args)
    payload.update({"data_dir": args.data, "encoder_path": args.encoder,
                    "out_dir": args.out})
    if args.command == "tune":
        return _post(client, "/tune", payload)
    if args.command == "sweep":
        if args.thresholds:
            payload["threshold_grid"] = args.thresholds
        if args.horizons:
            payload["horizon_grid"] = args.horizons
        return _post(client, "/sweep", payload)
    if args.command == "attack":
        payload["rates"] = args.rates
        payload["variants"] = [v.strip() for v in args.variants.split(",") if v.strip()]
        return _post(client, "/attack", payload)
    if args.command == "shots":
        payload["max_shots"] = args.max_shots
        if args.variants:
            payload["variants"] = [v.strip() for v in args.variants.split(",") if v.strip()]
        return _post(client, "/shots", payload)
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
