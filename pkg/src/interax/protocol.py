"""Oracle wire protocol: line-delimited JSON over stdio or TCP.

The server speaks first with a handshake {"n_image", "n_text", "max_batch"}
(extra fields allowed and preserved).  The client then sends requests
{"id", "masks": [bitstring, ...]} and receives {"id", "values": [...]} with
values aligned to masks.  Bitstrings are '0'/'1' characters with token 0
leftmost; this convention is bit-exact and shared with Mask.to_bitstring.

Failures the server can attribute to a request come back as
{"id", "error": str} and the connection stays up; this error form is an
extension of the minimal protocol and clients here surface it as
ProtocolError.
"""

import json
import socket
import socketserver
import sys

import numpy as np

from .errors import ProtocolError, TransportError, ValidationError
from .games import GameOracle, Mask, PlayerSpace, mask_matrix

DEFAULT_MAX_BATCH = 4096


def _write_line(wfile, doc):
    wfile.write((json.dumps(doc, separators=(",", ":")) + "\n").encode())
    wfile.flush()


def _read_line(rfile):
    line = rfile.readline()
    if not line:
        return None
    try:
        return json.loads(line)
    except json.JSONDecodeError as err:
        raise ProtocolError(f"malformed protocol line: {err}") from None


def serve_streams(game, rfile, wfile, max_batch=DEFAULT_MAX_BATCH, extra_handshake=None):
    """Serve one connection: handshake, then answer requests until EOF."""
    handshake = {
        "n_image": game.space.n_image,
        "n_text": game.space.n_text,
        "max_batch": int(max_batch),
    }
    if extra_handshake:
        handshake.update(extra_handshake)
    _write_line(wfile, handshake)

    n = game.space.n
    while True:
        try:
            request = _read_line(rfile)
        except ProtocolError as err:
            _write_line(wfile, {"id": None, "error": str(err)})
            continue
        if request is None:
            return
        request_id = request.get("id") if isinstance(request, dict) else None
        try:
            masks = _parse_request(request, n, max_batch)
            values = game.evaluate_matrix(masks)
            _write_line(wfile, {"id": request_id, "values": [float(v) for v in values]})
        except (ProtocolError, ValidationError) as err:
            _write_line(wfile, {"id": request_id, "error": str(err)})


def _parse_request(request, n, max_batch):
    if not isinstance(request, dict) or "id" not in request or "masks" not in request:
        raise ProtocolError("request must be an object with 'id' and 'masks'")
    bitstrings = request["masks"]
    if not isinstance(bitstrings, list):
        raise ProtocolError("'masks' must be a list of bitstrings")
    if len(bitstrings) > max_batch:
        raise ProtocolError(f"batch of {len(bitstrings)} exceeds max_batch {max_batch}")
    matrix = np.zeros((len(bitstrings), n), dtype=bool)
    for r, s in enumerate(bitstrings):
        if not isinstance(s, str) or len(s) != n or set(s) - {"0", "1"}:
            raise ProtocolError(
                f"mask {r} must be a {n}-character '0'/'1' bitstring, got {s!r}"
            )
        matrix[r] = Mask.from_bitstring(s).to_array()
    return matrix


def serve_stdio(game, max_batch=DEFAULT_MAX_BATCH, extra_handshake=None):
    serve_streams(
        game, sys.stdin.buffer, sys.stdout.buffer, max_batch=max_batch, extra_handshake=extra_handshake
    )


class _OracleTCPHandler(socketserver.StreamRequestHandler):
    def handle(self):
        serve_streams(
            self.server.game,
            self.rfile,
            self.wfile,
            max_batch=self.server.max_batch,
            extra_handshake=self.server.extra_handshake,
        )


def make_tcp_server(game, host="127.0.0.1", port=0, max_batch=DEFAULT_MAX_BATCH, extra_handshake=None):
    """Bound TCP server (port 0 picks a free port); call serve_forever() on it."""
    server = socketserver.TCPServer((host, port), _OracleTCPHandler)
    server.game = game
    server.max_batch = max_batch
    server.extra_handshake = extra_handshake
    return server


class OracleClient(GameOracle):
    """Game oracle backed by a protocol connection.

    Optionally memoizes values per mask; duplicates inside one evaluate call
    still contribute once per occurrence to whatever the caller computes, the
    cache only avoids repeat queries.
    """

    def __init__(self, rfile, wfile, closer=None, memoize=False, reconnector=None, retries=1):
        self._rfile = rfile
        self._wfile = wfile
        self._closer = closer
        self._next_id = 0
        self._cache = {} if memoize else None
        self._reconnector = reconnector
        self._retries = retries
        self._handshake_in(rfile)

    def _handshake_in(self, rfile):
        handshake = _read_line(rfile)
        if handshake is None:
            raise TransportError("connection closed before handshake")
        for key in ("n_image", "n_text", "max_batch"):
            if not isinstance(handshake.get(key), int):
                raise ProtocolError(f"handshake missing integer field {key!r}")
        self.handshake = handshake
        self.space = PlayerSpace(handshake["n_image"], handshake["n_text"])
        self.max_batch = handshake["max_batch"]
        if self.max_batch < 1:
            raise ProtocolError(f"server advertised max_batch {self.max_batch}")

    @classmethod
    def connect_tcp(cls, host, port, memoize=False, timeout=None, retries=1):
        def dial():
            try:
                sock = socket.create_connection((host, port), timeout=timeout)
            except OSError as err:
                raise TransportError(f"cannot connect to {host}:{port}: {err}") from None
            return sock, sock.makefile("rb"), sock.makefile("wb")

        sock, rfile, wfile = dial()
        client = cls(rfile, wfile, memoize=memoize, retries=retries)
        state = {"sock": sock}

        def closer():
            client._rfile.close()
            client._wfile.close()
            state["sock"].close()

        def reconnector():
            closer()
            state["sock"], client._rfile, client._wfile = dial()
            previous = client.space
            client._handshake_in(client._rfile)
            if client.space != previous:
                raise ProtocolError(
                    f"oracle changed space across reconnect: {previous} -> {client.space}"
                )

        client._closer = closer
        client._reconnector = reconnector
        return client

    def close(self):
        if self._closer is not None:
            self._closer()
            self._closer = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def request_raw(self, bitstrings):
        """One uncached protocol round-trip; used by conformance checks.

        Requests are idempotent (oracles are deterministic), so a transport
        failure triggers a reconnect-and-resend when the connection knows how
        to re-dial.
        """
        attempts = 1 + (self._retries if self._reconnector is not None else 0)
        for attempt in range(attempts):
            try:
                return self._request_once(bitstrings)
            except TransportError:
                if attempt == attempts - 1:
                    raise
                self._reconnector()

    def _request_once(self, bitstrings):
        request_id = self._next_id
        self._next_id += 1
        try:
            _write_line(self._wfile, {"id": request_id, "masks": list(bitstrings)})
            response = _read_line(self._rfile)
        except (OSError, ValueError) as err:
            raise TransportError(f"oracle connection failed: {err}") from None
        if response is None:
            raise TransportError("oracle connection closed mid-request")
        if not isinstance(response, dict) or response.get("id") != request_id:
            raise ProtocolError(
                f"response id {response.get('id')!r} does not match request id {request_id}"
            )
        if "error" in response:
            raise ProtocolError(f"oracle rejected request: {response['error']}")
        values = response.get("values")
        if not isinstance(values, list) or len(values) != len(bitstrings):
            got = len(values) if isinstance(values, list) else "no"
            raise ProtocolError(
                f"response carries {got} values for {len(bitstrings)} requested masks"
            )
        return [float(v) for v in values]

    def evaluate_matrix(self, mat):
        bitstrings = ["".join("1" if b else "0" for b in row) for row in np.asarray(mat, dtype=bool)]
        out = np.empty(len(bitstrings))
        if self._cache is None:
            for index, lo in enumerate(range(0, len(bitstrings), self.max_batch)):
                chunk = bitstrings[lo : lo + self.max_batch]
                out[lo : lo + len(chunk)] = self._chunk(chunk, index)
            return out
        missing = [s for s in dict.fromkeys(bitstrings) if s not in self._cache]
        for index, lo in enumerate(range(0, len(missing), self.max_batch)):
            chunk = missing[lo : lo + self.max_batch]
            for s, v in zip(chunk, self._chunk(chunk, index)):
                self._cache[s] = v
        for r, s in enumerate(bitstrings):
            out[r] = self._cache[s]
        return out

    def _chunk(self, bitstrings, index):
        try:
            return self.request_raw(bitstrings)
        except TransportError as err:
            raise TransportError(str(err), batch_index=index) from None


class ConformanceReport:
    """Outcome of check_oracle: named checks with pass/fail and detail."""

    def __init__(self):
        self.checks = []

    def record(self, name, passed, detail=""):
        self.checks.append({"name": name, "passed": bool(passed), "detail": detail})

    @property
    def passed(self):
        return all(c["passed"] for c in self.checks)

    def to_json_dict(self):
        return {"schema_version": 1, "passed": self.passed, "checks": self.checks}


def check_oracle(client):
    """Probe a connected oracle for protocol conformance.

    Checks the handshake, evaluability of the empty and full masks,
    determinism (same masks re-queried across requests, and duplicated
    within one batch where the batch limit allows), and batch-order
    preservation (batched values must match one-mask-at-a-time queries,
    under the original and the reversed batch order).
    """
    report = ConformanceReport()
    n = client.space.n

    ok = client.space.n >= 1 and client.max_batch >= 1
    report.record("handshake", ok, f"space {client.space}, max_batch {client.max_batch}")
    if not ok:
        return report

    def ask(bitstrings):
        out = []
        for lo in range(0, len(bitstrings), client.max_batch):
            out.extend(client.request_raw(bitstrings[lo : lo + client.max_batch]))
        return out

    empty = "0" * n
    full = "1" * n
    try:
        values = ask([empty, full])
        finite = all(np.isfinite(values))
        report.record(
            "boundary-masks", finite, f"nu(empty)={values[0]!r}, nu(full)={values[1]!r}"
        )
    except (ProtocolError, TransportError) as err:
        report.record("boundary-masks", False, str(err))
        return report

    probe = _probe_masks(n, limit=min(8, client.max_batch))
    try:
        first = ask(probe)
        second = ask(probe)
        drifts = [abs(a - b) for a, b in zip(first, second)]
        if 2 * len(probe) <= client.max_batch:
            twice = ask(probe + probe)
            drifts += [abs(a - b) for a, b in zip(twice[: len(probe)], twice[len(probe) :])]
        drift = max(drifts)
        report.record(
            "determinism", drift == 0.0, f"max drift across repeated queries: {drift!r}"
        )
    except (ProtocolError, TransportError) as err:
        report.record("determinism", False, str(err))
        return report

    try:
        singletons = [ask([s])[0] for s in probe]
        backward = ask(probe[::-1])
        ok = first == singletons and backward == singletons[::-1]
        report.record(
            "batch-order",
            ok,
            "batched values align with one-at-a-time queries"
            if ok
            else "response order does not follow request order",
        )
    except (ProtocolError, TransportError) as err:
        report.record("batch-order", False, str(err))
    return report


def _probe_masks(n, limit):
    # deterministic, pairwise-distinct probe patterns
    patterns = []
    for i in range(n):
        patterns.append("".join("1" if j == i else "0" for j in range(n)))
    patterns.append("10" * (n // 2) + "1" * (n % 2))
    seen = dict.fromkeys(patterns)
    return list(seen)[: max(2, limit)]
