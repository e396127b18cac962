"""The mask-game wire protocol, server side.

Line-delimited JSON: the server opens with a handshake carrying
{"n_image", "n_text", "max_batch"} plus this adapter's extras
{"model", "logit_scale", "provenance_batching"}; the client sends
{"id", "masks": [bitstring, ...]} and gets {"id", "values": [...]}
with values in request order.  Bitstrings put token 0 leftmost.

Request-attributable failures (bad mask width, oversized batch,
malformed JSON) come back as {"id", "error": str} and the connection
stays up.  Inference failures (device, memory) are not attributable to
one request and tear down the connection, surfacing to clients as a
transport error.
"""

import json
import socketserver
import sys

import numpy as np

from .errors import SessionError

DEFAULT_MAX_BATCH = 1024


class _RequestError(Exception):
    pass


def _write_line(wfile, doc):
    wfile.write((json.dumps(doc, separators=(",", ":")) + "\n").encode())
    wfile.flush()


def handshake_fields(session, max_batch):
    return {
        "n_image": session.n_image,
        "n_text": session.n_text,
        "max_batch": int(max_batch),
        "model": session.model_name,
        "logit_scale": session.logit_scale,
        "provenance_batching": True,
    }


def serve_streams(session, rfile, wfile, max_batch=DEFAULT_MAX_BATCH):
    """Serve one connection until EOF."""
    _write_line(wfile, handshake_fields(session, max_batch))
    while True:
        line = rfile.readline()
        if not line:
            return
        try:
            request = json.loads(line)
        except json.JSONDecodeError as err:
            _write_line(wfile, {"id": None, "error": f"malformed protocol line: {err}"})
            continue
        request_id = request.get("id") if isinstance(request, dict) else None
        try:
            masks = _parse_request(request, session.n, max_batch)
            values = session.evaluate_matrix(masks)
            _write_line(wfile, {"id": request_id,
                                "values": [float(v) for v in values]})
        except (_RequestError, SessionError) as err:
            _write_line(wfile, {"id": request_id, "error": str(err)})


def _parse_request(request, n, max_batch):
    if not isinstance(request, dict) or "id" not in request or "masks" not in request:
        raise _RequestError("request must be an object with 'id' and 'masks'")
    bitstrings = request["masks"]
    if not isinstance(bitstrings, list):
        raise _RequestError("'masks' must be a list of bitstrings")
    if len(bitstrings) > max_batch:
        raise _RequestError(
            f"batch of {len(bitstrings)} exceeds max_batch {max_batch}"
        )
    matrix = np.zeros((len(bitstrings), n), dtype=bool)
    for r, s in enumerate(bitstrings):
        if not isinstance(s, str) or len(s) != n or set(s) - {"0", "1"}:
            raise _RequestError(
                f"mask {r} must be a {n}-character '0'/'1' bitstring, got {s!r}"
            )
        matrix[r] = np.frombuffer(s.encode(), dtype=np.uint8) == ord("1")
    return matrix


def serve_stdio(session, max_batch=DEFAULT_MAX_BATCH):
    serve_streams(session, sys.stdin.buffer, sys.stdout.buffer, max_batch=max_batch)


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        serve_streams(self.server.session, self.rfile, self.wfile,
                      max_batch=self.server.max_batch)


def make_tcp_server(session, host="127.0.0.1", port=0, max_batch=DEFAULT_MAX_BATCH):
    """Bound TCP server (port 0 picks a free port); call serve_forever()."""
    server = socketserver.TCPServer((host, port), _Handler)
    server.session = session
    server.max_batch = max_batch
    return server
