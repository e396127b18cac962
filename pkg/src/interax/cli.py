"""Command-line front end: explain / evaluate / exact / oracle-check / serve / rerun.

Every run resolves its configuration, computes all artifacts in memory, then
writes them once into a fresh output directory together with a manifest
(resolved config + sha256 of each artifact).  ``rerun`` replays a manifest
and must reproduce artifacts byte for byte.

Exit codes: 0 ok, 1 unexpected, 2 invalid config/input, 3 transport,
4 protocol, 5 enumeration guard, 6 ill-posed fit, 7 undefined metric or
degenerate normalization.  Failures print a single JSON object to stderr:
{"error": {"type", "message", "exit_code"}}.  Two commands continue past
failures and reflect them in the exit code instead: ``evaluate`` records
per-metric errors in the report and exits with the first failed metric's
code, and ``oracle-check`` exits 1 when any conformance check fails.
"""

import argparse
import hashlib
import io
import json
import os
import sys

from . import exact as exact_mod
from .errors import (
    DegenerateNormalizationError,
    EnumerationGuardError,
    IllPosedFitError,
    InteraxError,
    ProtocolError,
    SpaceMismatchError,
    TransportError,
    UndefinedMetricError,
    ValidationError,
)
from .evaluation import (
    PointingGameSpec,
    faithfulness_correlation,
    insertion_deletion,
    pointing_game_recognition,
)
from .explanations import (
    KERNEL_SHAPLEY,
    KERNEL_WEIGHTED_BANZHAF,
    BasisSpec,
    Explanation,
    dumps_canonical,
    first_order_conversion,
)
from .games import PlayerSpace, load_tabulated_game, make_random_game, save_tabulated_game
from .protocol import OracleClient, check_oracle, make_tcp_server, serve_stdio
from .regression import fit, select_clique
from .sampling import MODE_CROSS_MODAL, MODE_NAIVE, SamplePlan, sample

MANIFEST_SCHEMA_VERSION = 1
REPORT_SCHEMA_VERSION = 1

_EXIT_CODES = [
    (ValidationError, 2),
    (SpaceMismatchError, 2),
    (TransportError, 3),
    (ProtocolError, 4),
    (EnumerationGuardError, 5),
    (IllPosedFitError, 6),
    (UndefinedMetricError, 7),
    (DegenerateNormalizationError, 7),
]


def _exit_code_for(err):
    for cls, code in _EXIT_CODES:
        if isinstance(err, cls):
            return code
    return 1


def _parse_synthetic(spec):
    # "two-additive:n_image=3,n_text=3,seed=0" or "tabulated:..."
    try:
        kind, _, rest = spec.partition(":")
        params = dict(kv.split("=") for kv in rest.split(",") if kv)
        space = PlayerSpace(int(params["n_image"]), int(params["n_text"]))
        return make_random_game(space, kind, int(params.get("seed", 0)))
    except (KeyError, ValueError) as err:
        raise ValidationError(
            f"bad synthetic game spec {spec!r} "
            "(want kind:n_image=<int>,n_text=<int>,seed=<int>)"
        ) from err


def _open_oracle(args):
    """Returns (oracle, closer, descriptor-for-manifest)."""
    if args.oracle == "file":
        if not args.game:
            raise ValidationError("--oracle file requires --game FILE")
        game = load_tabulated_game(args.game)
        with open(args.game, "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()
        return game, None, {"source": "file", "game": args.game, "sha256": digest}
    if args.oracle == "synthetic":
        if not args.game:
            raise ValidationError("--oracle synthetic requires --game SPEC")
        return _parse_synthetic(args.game), None, {"source": "synthetic", "game": args.game}
    if args.oracle == "remote":
        if not args.endpoint:
            raise ValidationError("--oracle remote requires --endpoint HOST:PORT")
        host, _, port = args.endpoint.rpartition(":")
        if not host or not port.isdigit():
            raise ValidationError(f"bad endpoint {args.endpoint!r}, want HOST:PORT")
        client = OracleClient.connect_tcp(host, int(port), memoize=True)
        return client, client.close, {"source": "remote", "endpoint": args.endpoint}
    raise ValidationError(f"unknown oracle source {args.oracle!r}")


def _resolve_basis(kind, space):
    if kind == "full":
        return BasisSpec.full(space)
    if kind == "cross-modal":
        return BasisSpec.cross_modal(space)
    if kind.startswith("clique:"):
        return None  # resolved after the first-order pre-fit
    raise ValidationError(f"unknown basis {kind!r} (want full | clique:K | cross-modal)")


class _OutputDir:
    """Write-once run directory: artifacts land together after compute."""

    def __init__(self, path):
        self.path = path
        self._pending = {}
        if os.path.exists(path) and os.listdir(path):
            raise ValidationError(f"output directory {path!r} exists and is not empty")

    def add(self, name, data):
        self._pending[name] = data.encode() if isinstance(data, str) else data

    def add_json(self, name, doc):
        self.add(name, dumps_canonical(doc))

    def flush(self, command, config):
        artifacts = {
            name: "sha256:" + hashlib.sha256(blob).hexdigest()
            for name, blob in sorted(self._pending.items())
        }
        manifest = {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "command": command,
            "config": config,
            "artifacts": artifacts,
        }
        os.makedirs(self.path, exist_ok=True)
        for name, blob in self._pending.items():
            with open(os.path.join(self.path, name), "wb") as fh:
                fh.write(blob)
        with open(os.path.join(self.path, "manifest.json"), "w") as fh:
            fh.write(dumps_canonical(manifest))


def _explain_config(args):
    return {
        "oracle": args.oracle,
        "game": args.game,
        "endpoint": args.endpoint,
        "p": args.p,
        "budget": args.budget,
        "mode": args.mode,
        "basis": args.basis,
        "kernel": args.kernel,
        "seed": args.seed,
    }


def cmd_explain(args):
    oracle, closer, _ = _open_oracle(args)
    try:
        space = oracle.space
        plan = SamplePlan(space, args.p, args.mode, args.seed, m=args.budget)
        batch = sample(plan)
        values = oracle.evaluate_matrix(batch.matrix)

        kernel = args.kernel
        kernel_p = args.p if kernel == KERNEL_WEIGHTED_BANZHAF else None
        basis = _resolve_basis(args.basis, space)
        if basis is None:
            k = int(args.basis.split(":", 1)[1])
            pre = fit(batch, values, BasisSpec.first_order(space), KERNEL_WEIGHTED_BANZHAF, p=args.p)
            basis = select_clique(first_order_conversion(pre), space, k)
        if len(batch) < basis.size:
            raise ValidationError(
                f"budget yields {len(batch)} masks but the basis has {basis.size} coefficients"
            )
        explanation = fit(batch, values, basis, kernel, p=kernel_p)

        out = _OutputDir(args.out)
        out.add_json("explanation.json", explanation.to_json_dict(extra={"exact": False}))
        buf = io.StringIO()
        batch.write_jsonl(buf)
        out.add("samples.jsonl", buf.getvalue())
        out.flush("explain", _explain_config(args))
    finally:
        if closer:
            closer()
    return 0


def cmd_exact(args):
    oracle, closer, _ = _open_oracle(args)
    try:
        explanation = exact_mod.exact_explanation(oracle, args.p)
        out = _OutputDir(args.out)
        out.add_json("explanation.json", explanation.to_json_dict(extra={"exact": True}))
        out.flush(
            "exact",
            {
                "oracle": args.oracle,
                "game": args.game,
                "endpoint": args.endpoint,
                "p": args.p,
                "seed": args.seed,
            },
        )
    finally:
        if closer:
            closer()
    return 0


def cmd_evaluate(args):
    explanation = Explanation.load(args.explanation)
    oracle, closer, _ = _open_oracle(args)
    try:
        if oracle.space != explanation.space:
            raise SpaceMismatchError(
                f"explanation space {explanation.space} vs oracle space {oracle.space}"
            )
        if args.eval_p:
            try:
                eval_ps = [float(v) for v in args.eval_p.split(",")]
            except ValueError:
                raise ValidationError(
                    f"--eval-p must be comma-separated numbers, got {args.eval_p!r}"
                ) from None
        elif explanation.p is not None:
            eval_ps = [explanation.p]
        else:
            raise ValidationError("--eval-p required for explanations without a p of their own")

        report = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "space": {"n_image": oracle.space.n_image, "n_text": oracle.space.n_text},
            "eval_m": args.eval_m,
            "seed": args.seed,
            "mu_corr": {},
        }
        failures = []
        for p in eval_ps:
            try:
                report["mu_corr"][repr(float(p))] = faithfulness_correlation(
                    explanation, oracle, p, m=args.eval_m, seed=args.seed
                )
            except InteraxError as err:
                report["mu_corr"][repr(float(p))] = {"error": str(err)}
                failures.append(err)

        curves = None
        try:
            curves = insertion_deletion(explanation, oracle)
            report["aid"] = curves.aid
        except DegenerateNormalizationError as err:
            curves = err.curves
            report["aid"] = {"error": str(err)}
            failures.append(err)
        except InteraxError as err:
            report["aid"] = {"error": str(err)}
            failures.append(err)

        if args.pointing_spec:
            with open(args.pointing_spec) as fh:
                pg_spec = PointingGameSpec.from_json_dict(json.load(fh))
            try:
                report["mu_pgr"] = pointing_game_recognition(explanation, pg_spec)
            except InteraxError as err:
                report["mu_pgr"] = {"error": str(err)}
                failures.append(err)
        else:
            report["mu_pgr"] = {"not_computed": "no pointing spec supplied"}

        out = _OutputDir(args.out)
        if curves is not None:
            buf = io.StringIO()
            curves.write_csv(buf)
            out.add("curves.csv", buf.getvalue())
            report["curves_csv"] = "curves.csv"
        else:
            report["curves_csv"] = None
        out.add_json("report.json", report)
        out.flush(
            "evaluate",
            {
                "explanation": args.explanation,
                "oracle": args.oracle,
                "game": args.game,
                "endpoint": args.endpoint,
                "eval_p": args.eval_p,
                "eval_m": args.eval_m,
                "pointing_spec": args.pointing_spec,
                "seed": args.seed,
            },
        )
        # artifacts are written either way; a failed metric decides the exit
        return _exit_code_for(failures[0]) if failures else 0
    finally:
        if closer:
            closer()


def cmd_oracle_check(args):
    host, _, port = args.endpoint.rpartition(":")
    if not host or not port.isdigit():
        raise ValidationError(f"bad endpoint {args.endpoint!r}, want HOST:PORT")
    with OracleClient.connect_tcp(host, int(port)) as client:
        report = check_oracle(client)
    for check in report.checks:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"{status} {check['name']}: {check['detail']}")
    if args.out:
        out = _OutputDir(args.out)
        out.add_json("conformance.json", report.to_json_dict())
        out.flush("oracle-check", {"endpoint": args.endpoint})
    return 0 if report.passed else 1


def cmd_serve(args):
    if args.oracle == "remote":
        raise ValidationError("serve needs a local oracle (file or synthetic)")
    game, _, _ = _open_oracle(args)
    if args.stdio:
        serve_stdio(game, max_batch=args.max_batch)
        return 0
    server = make_tcp_server(game, host=args.host, port=args.port, max_batch=args.max_batch)
    host, port = server.server_address
    print(json.dumps({"listening": {"host": host, "port": port}}), flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def cmd_rerun(args):
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    if manifest.get("schema_version") != MANIFEST_SCHEMA_VERSION:
        raise ValidationError(
            f"manifest schema {manifest.get('schema_version')!r} not supported"
        )
    command = manifest["command"]
    config = manifest["config"]
    replay = [command]
    for key, value in config.items():
        if key == "explanation":
            continue
        if value is None:
            continue
        flag = "--" + key.replace("_", "-")
        replay.extend([flag, str(value)])
    if command == "evaluate":
        replay.insert(1, config["explanation"])
    replay.extend(["--out", args.out])
    return main(replay)


def cmd_make_game(args):
    """Generate a synthetic game table on disk (fixture plumbing)."""
    game = _parse_synthetic(args.game)
    save_tabulated_game(game, args.out_file)
    return 0


def _add_oracle_flags(p):
    p.add_argument("--oracle", choices=["file", "synthetic", "remote"], required=True)
    p.add_argument("--game", help="tabulated-game JSON path (file) or spec string (synthetic)")
    p.add_argument("--endpoint", help="HOST:PORT of a remote oracle")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="interax",
        description="Second-order interaction explanations of two-modality similarity games.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("explain", help="sample an oracle and fit an explanation")
    _add_oracle_flags(p)
    p.add_argument("--p", type=float, required=True, help="masking parameter in (0,1)")
    p.add_argument("--budget", type=int, required=True, help="total mask budget m")
    p.add_argument("--mode", choices=[MODE_NAIVE, MODE_CROSS_MODAL], default=MODE_NAIVE)
    p.add_argument("--basis", default="full", help="full | clique:K | cross-modal")
    p.add_argument("--kernel", choices=[KERNEL_WEIGHTED_BANZHAF, KERNEL_SHAPLEY], default=KERNEL_WEIGHTED_BANZHAF)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="fresh output directory")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("exact", help="exact explanation by full enumeration")
    _add_oracle_flags(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("evaluate", help="score an explanation against an oracle")
    p.add_argument("explanation", help="explanation JSON path")
    _add_oracle_flags(p)
    p.add_argument("--eval-p", help="comma-separated p values for mu_corr")
    p.add_argument("--eval-m", type=int, default=1000, help="masks per mu_corr estimate")
    p.add_argument("--pointing-spec", help="pointing-game spec JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("oracle-check", help="protocol conformance probes")
    p.add_argument("--endpoint", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("serve", help="serve a game over the wire protocol")
    _add_oracle_flags(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--max-batch", type=int, default=4096)
    p.add_argument("--stdio", action="store_true", help="serve on stdin/stdout instead of TCP")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("rerun", help="replay a manifest into a new directory")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rerun)

    p = sub.add_parser("make-game", help="write a synthetic tabulated game file")
    p.add_argument("--game", required=True, help="synthetic spec string")
    p.add_argument("--out-file", required=True)
    p.set_defaults(func=cmd_make_game)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InteraxError as err:
        code = _exit_code_for(err)
        sys.stderr.write(
            json.dumps(
                {"error": {"type": type(err).__name__, "message": str(err), "exit_code": code}}
            )
            + "\n"
        )
        return code


if __name__ == "__main__":
    sys.exit(main())
