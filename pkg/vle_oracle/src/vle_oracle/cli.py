"""Command line front end.

serve               expose one image-text pair as a game oracle
make-pointing-input compose a 2x2 pointing-game input and its spec file
make-checkpoint     write the pinned tiny checkpoint (development tool)
sweep-text-length   empty-text-mask value across caption lengths

Exit codes: 0 ok, 1 unexpected failure or exceeded band, 2 invalid input.
"""

import argparse
import json
import sys

import numpy as np

from .checkpoint import DEFAULT_CHECKPOINT, WHOLE_WORDS, build_tiny_checkpoint, load_checkpoint
from .errors import SessionError
from .pointing import build_pointing_input, compose_grid
from .session import EncoderSession
from .wire import DEFAULT_MAX_BATCH, make_tcp_server, serve_stdio


def _load_image(path):
    try:
        return np.load(path)
    except (OSError, ValueError) as err:
        raise SessionError(f"cannot load image array {path}: {err}") from None


def _open_session(args):
    model, tokenizer = load_checkpoint(args.checkpoint)
    return EncoderSession(model, tokenizer, _load_image(args.image), args.text,
                          model_name=args.model_name)


def cmd_serve(args):
    session = _open_session(args)
    if args.stdio:
        serve_stdio(session, max_batch=args.max_batch)
        return 0
    server = make_tcp_server(session, host=args.host, port=args.port,
                             max_batch=args.max_batch)
    host, port = server.server_address
    print(json.dumps({"listening": {"host": host, "port": port}}), flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def cmd_make_pointing_input(args):
    if len(args.images) != 4:
        raise SessionError(f"need exactly four --images, got {len(args.images)}")
    model, tokenizer = load_checkpoint(args.checkpoint)
    images = [_load_image(p) for p in args.images]
    session, spec = build_pointing_input(images, args.labels, model, tokenizer,
                                         model_name=args.model_name)
    with open(args.out_spec, "w") as fh:
        json.dump(spec, fh, indent=2)
        fh.write("\n")
    np.save(args.out_image, compose_grid(images))
    print(json.dumps({
        "n_image": session.n_image,
        "n_text": session.n_text,
        "prompt": session.text,
        "spec": args.out_spec,
        "image": args.out_image,
    }))
    return 0


def cmd_make_checkpoint(args):
    build_tiny_checkpoint(args.out, seed=args.seed, logit_scale=args.logit_scale)
    print(json.dumps({"checkpoint": args.out}))
    return 0


def cmd_sweep_text_length(args):
    model, tokenizer = load_checkpoint(args.checkpoint)
    image = _load_image(args.image)
    spreads = []
    print("words  value(full image, empty text)")
    for n_words in range(args.min_words, args.max_words + 1):
        caption = " ".join(WHOLE_WORDS[i % len(WHOLE_WORDS)] for i in range(n_words))
        session = EncoderSession(model, tokenizer, image, caption)
        mask = np.zeros((1, session.n), dtype=bool)
        mask[0, : session.n_image] = True
        value = session.evaluate_matrix(mask)[0]
        spreads.append(value)
        print(f"{n_words:5d}  {value:+.6f}")
    spread = float(np.max(spreads) - np.min(spreads))
    print(f"spread: {spread:.6f}")
    if args.band is not None and spread > args.band:
        print(f"spread exceeds band {args.band}", file=sys.stderr)
        return 1
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vle-oracle",
        description="Masked image-text similarity served as a game oracle.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="serve one image-text pair")
    p.add_argument("--checkpoint", default=DEFAULT_CHECKPOINT)
    p.add_argument("--image", required=True, help=".npy image array, (S, S, 3)")
    p.add_argument("--text", required=True)
    p.add_argument("--model-name", default="tiny-clip")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--max-batch", type=int, default=DEFAULT_MAX_BATCH)
    p.add_argument("--stdio", action="store_true")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("make-pointing-input",
                       help="compose a 2x2 grid input and spec file")
    p.add_argument("--checkpoint", default=DEFAULT_CHECKPOINT)
    p.add_argument("--images", nargs="+", required=True,
                   help="four .npy quadrant images, reading order")
    p.add_argument("--labels", nargs="+", required=True)
    p.add_argument("--model-name", default="tiny-clip")
    p.add_argument("--out-spec", required=True)
    p.add_argument("--out-image", required=True, help="composed .npy output")
    p.set_defaults(func=cmd_make_pointing_input)

    p = sub.add_parser("make-checkpoint", help="write the pinned tiny checkpoint")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=20240611)
    p.add_argument("--logit-scale", type=float, default=100.0)
    p.set_defaults(func=cmd_make_checkpoint)

    p = sub.add_parser("sweep-text-length",
                       help="empty-text-mask value across caption lengths")
    p.add_argument("--checkpoint", default=DEFAULT_CHECKPOINT)
    p.add_argument("--image", required=True)
    p.add_argument("--min-words", type=int, default=5)
    p.add_argument("--max-words", type=int, default=12)
    p.add_argument("--band", type=float, default=None,
                   help="fail if the value spread exceeds this")
    p.set_defaults(func=cmd_sweep_text_length)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SessionError as err:
        print(json.dumps({"error": str(err)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
